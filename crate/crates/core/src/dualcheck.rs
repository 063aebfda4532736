//! Numerical checks of the Fourier-side dual bound: positive and negative
//! parts of `φ̂` for even bumps, the spectral inequality for
//! `ν = μ⋆μ - ½ 1_{[-1,1]}`, and the residual of the two-atom candidate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bump::{self, BumpTables};
use crate::constants::sinc_min_roots;
use crate::correlate::MeasureCorrelation;
use crate::error::{positive, Error, Result};
use crate::funcspace::MixedMeasure;
use crate::quad::{self, GaussLegendre};
use crate::spectral::fourier_measure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "bump", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BumpKind {
    /// `exp(-1/(1-x²))`, normalised.
    Standard,
    /// `(1 + cos πx)/2`.
    Cosine,
    /// `(1-x²)^k`, normalised; `k >= 2`.
    BetaPower { k: u32 },
}

/// An even, nonnegative bump with unit integral supported in
/// `[-scale, scale] ⊂ [-1, 1]`: `φ_s(x) = φ(x/s)/s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub kind: BumpKind,
    pub scale: f64,
}

fn double_factorial_odd(k: u32) -> f64 {
    (1..=k).map(|j| (2 * j + 1) as f64).product()
}

/// `(2k+1)!! j_k(z)/z^k`, equal to 1 at `z = 0`.
fn spherical_bessel_ratio(k: u32, z: f64) -> f64 {
    let z = z.abs();
    let kf = k as f64;
    if z < kf + 1.0 {
        // Σ_m (-z²/2)^m / (m! (2k+2m+1)!!) times (2k+1)!!
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..200 {
            let mf = m as f64;
            term *= -0.5 * z * z / (mf * (2.0 * kf + 2.0 * mf + 1.0));
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let mut prev = z.sin() / z;
    if k == 0 {
        return prev;
    }
    let mut cur = z.sin() / (z * z) - z.cos() / z;
    for n in 1..k {
        let next = (2 * n + 1) as f64 / z * cur - prev;
        prev = cur;
        cur = next;
    }
    double_factorial_odd(k) * cur / z.powi(k as i32)
}

impl BumpFunction {
    pub fn new(kind: BumpKind, scale: f64) -> Result<Self> {
        let b = Self { kind, scale };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        positive("scale", self.scale)?;
        if self.scale > 1.0 {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: self.scale,
                reason: "support must stay inside [-1, 1]",
            });
        }
        if let BumpKind::BetaPower { k } = self.kind {
            if k < 2 {
                return Err(Error::InvalidParameter {
                    name: "k",
                    value: k as f64,
                    reason: "beta-power bumps need k >= 2",
                });
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let base = match self.kind {
            BumpKind::Standard => "standard".to_string(),
            BumpKind::Cosine => "cosine".to_string(),
            BumpKind::BetaPower { k } => format!("beta-power({k})"),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{base}@{}", self.scale)
        }
    }

    fn unit_eval(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        match self.kind {
            BumpKind::Standard => BumpTables::get().density(x),
            BumpKind::Cosine => 0.5 * (1.0 + (PI * x).cos()),
            BumpKind::BetaPower { k } => {
                // ∫(1-x²)^k = 2^{2k+1} (k!)² / (2k+1)!
                let norm = 2.0 * (1..=k).map(|j| (2 * j) as f64 / (2 * j + 1) as f64).product::<f64>();
                (1.0 - x * x).powi(k as i32) / norm
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.unit_eval(x / self.scale) / self.scale
    }

    fn unit_transform(&self, xi: f64) -> f64 {
        match self.kind {
            BumpKind::Cosine => {
                let d = 1.0 - 4.0 * xi * xi;
                if xi.abs() < 1e-8 {
                    1.0
                } else if d.abs() < 1e-6 {
                    standard_transform(|x| self.unit_eval(x), xi)
                } else {
                    (2.0 * PI * xi).sin() / (2.0 * PI * xi * d)
                }
            }
            BumpKind::BetaPower { k } => spherical_bessel_ratio(k, 2.0 * PI * xi),
            BumpKind::Standard => standard_transform(bump::raw, xi) / BumpTables::get().norm,
        }
    }

    /// `φ̂(ξ)` (real, since `φ` is even).
    pub fn transform(&self, xi: f64) -> f64 {
        self.unit_transform(self.scale * xi)
    }

    /// `(Ξ, E)`: cutoff and a bound on `∫_Ξ^∞ |φ̂|` for the given tolerance.
    fn cutoff(&self, tol: f64) -> (f64, f64) {
        let s = self.scale;
        match self.kind {
            BumpKind::Cosine => {
                // |φ̂(u)| ≤ 1/(2πu(4u²-1)); ∫_X^∞ = -ln(1 - 1/(4X²))/(4π)
                let tail = |x: f64| -(1.0 - 1.0 / (4.0 * x * x)).ln() / (4.0 * PI) / s;
                let mut x = 8.0;
                while 2.0 * tail(x) > tol {
                    x *= 1.1;
                }
                (x / s, tail(x))
            }
            BumpKind::BetaPower { k } => {
                // |φ̂(u)| ≤ (2k+1)!!/(2πu)^{k+1}
                let c = double_factorial_odd(k) / ((2.0 * PI).powi(k as i32 + 1) * k as f64);
                let tail = |x: f64| c * x.powi(-(k as i32)) / s;
                let mut x = 8.0;
                while 2.0 * tail(x) > tol {
                    x *= 1.1;
                }
                (x / s, tail(x))
            }
            BumpKind::Standard => {
                let x = 64.0;
                // super-polynomial decay: bound the tail by the last unit's
                // peak times its width
                let peak = (0..64)
                    .map(|j| self.unit_transform(x - 1.0 + j as f64 / 64.0).abs())
                    .fold(0.0, f64::max);
                (x / s, peak / s)
            }
        }
    }
}

/// `2∫_0^1 φ(x) cos(2πξx) dx` with panels resolving the oscillation.
fn standard_transform<F: Fn(f64) -> f64>(phi: F, xi: f64) -> f64 {
    let panels = 8 + (4.0 * xi.abs()).ceil() as usize;
    let w = 2.0 * PI * xi;
    2.0 * GaussLegendre::g16().composite(|x| phi(x) * (w * x).cos(), 0.0, 1.0, panels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMass {
    pub bump: String,
    pub positive: f64,
    pub negative: f64,
    /// `∫ φ̂₋(ξ) · 2(1 - sin(2πξ)/(2πξ)) dξ`.
    pub weighted_negative: f64,
    pub phi0: f64,
    pub cutoff: f64,
    pub error: f64,
}

impl SpectrumMass {
    pub fn l1(&self) -> f64 {
        self.positive + self.negative
    }
}

/// `‖φ̂₊‖₁`, `‖φ̂₋‖₁` and the weighted negative mass. The axis is split at
/// sign changes of `φ̂` (located by Brent's method between samples) and
/// each constant-sign piece is integrated by composite Gauss–Legendre.
/// Tails beyond `Ξ` are split evenly between the two parts by the mean of
/// `max(sin, 0)`.
pub fn positive_part_mass(phi: &BumpFunction, tol: f64) -> Result<SpectrumMass> {
    phi.validate()?;
    positive("tol", tol)?;
    let (cutoff, tail) = phi.cutoff(tol);
    // zeros of φ̂ are about 1/(2s) apart; sample four times per gap
    let step = 1.0 / (8.0 * phi.scale);
    let samples = (cutoff / step).ceil() as usize;
    let mut edges = vec![0.0];
    let mut prev = (0.0, phi.transform(0.0));
    for k in 1..=samples {
        let x = (k as f64 * step).min(cutoff);
        let v = phi.transform(x);
        if v == 0.0 {
            edges.push(x);
        } else if prev.1 != 0.0 && (v > 0.0) != (prev.1 > 0.0) {
            edges.push(quad::brent(|u| phi.transform(u), prev.0, x, 1e-14)?);
        }
        prev = (x, v);
    }
    if *edges.last().expect("non-empty") < cutoff {
        edges.push(cutoff);
    }
    let rule = GaussLegendre::g16();
    let piece = |a: f64, b: f64, refine: usize| -> (f64, f64) {
        let panels = refine * ((b - a) / (2.0 * step)).ceil().max(1.0) as usize;
        let total = rule.composite(|x| phi.transform(x), a, b, panels);
        let weighted = if total < 0.0 {
            rule.composite(
                |x| -phi.transform(x) * 2.0 * (1.0 - crate::spectral::sinc(2.0 * x)),
                a,
                b,
                panels,
            )
        } else {
            0.0
        };
        (total, weighted)
    };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut wneg = Vec::new();
    let mut drift = 0.0;
    for w in edges.windows(2) {
        let (v, wv) = piece(w[0], w[1], 1);
        let (v2, _) = piece(w[0], w[1], 2);
        drift += (v - v2).abs();
        if v >= 0.0 {
            pos.push(v2);
        } else {
            neg.push(-v2);
            wneg.push(wv);
        }
    }
    let share = tail / PI;
    Ok(SpectrumMass {
        bump: phi.label(),
        positive: 2.0 * (quad::pairwise_sum(&pos) + share),
        negative: 2.0 * (quad::pairwise_sum(&neg) + share),
        weighted_negative: 2.0 * (quad::pairwise_sum(&wneg) + 2.0 * share),
        phi0: phi.eval(0.0),
        cutoff,
        error: 2.0 * (drift + tail),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativePartReport {
    pub bump: String,
    /// `1 - 2φ(0)`.
    pub lhs: f64,
    /// `∫_{-1}^{1} (φ(t) - φ(0)) dt` by quadrature.
    pub identity_rhs: f64,
    pub negative: f64,
    pub weighted_negative: f64,
    /// `2(1+θ₀)‖φ̂₋‖₁`.
    pub bound: f64,
    pub slack: f64,
    pub positive: f64,
    /// `1/(2(1+θ₀)) + θ₀ φ(0)/(1+θ₀)`.
    pub refined_floor: f64,
    pub error: f64,
}

impl NegativePartReport {
    pub fn holds(&self, tol: f64) -> bool {
        (self.lhs - self.identity_rhs).abs() <= 2.0 * tol
            && self.lhs <= self.weighted_negative + 2.0 * tol
            && self.weighted_negative <= self.bound + 2.0 * tol
            && self.positive >= self.refined_floor - 2.0 * tol
    }
}

/// Both sides of `1 - 2φ(0) = ∫_{-1}^1 (φ - φ(0))` and the chain
/// `1 - 2φ(0) ≤ 2∫φ̂₋(1 - sinc) ≤ 2(1+θ₀)‖φ̂₋‖₁`.
pub fn negative_part_bound_check(phi: &BumpFunction, tol: f64) -> Result<NegativePartReport> {
    let mass = positive_part_mass(phi, tol)?;
    let theta0 = sinc_min_roots().theta0;
    let phi0 = phi.eval(0.0);
    let s = phi.scale;
    let inner = quad::adaptive(|t| phi.eval(t) - phi0, -s, s, &[0.0], 1e-14, 2000);
    let identity_rhs = inner.value - 2.0 * phi0 * (1.0 - s);
    let bound = 2.0 * (1.0 + theta0) * mass.negative;
    let lhs = 1.0 - 2.0 * phi0;
    Ok(NegativePartReport {
        bump: phi.label(),
        lhs,
        identity_rhs,
        negative: mass.negative,
        weighted_negative: mass.weighted_negative,
        bound,
        slack: bound - lhs,
        positive: mass.positive,
        refined_floor: 1.0 / (2.0 * (1.0 + theta0)) + theta0 / (1.0 + theta0) * phi0,
        error: mass.error + inner.error,
    })
}

/// Number of elementary windows in the normalisation lattice on `[0, 1]`.
pub const WINDOW_LATTICE: usize = 1024;

/// `min_k μ⋆μ([k ε, (k+1) ε])/ε`, `ε = 1/1024`, with the minimising window.
pub fn min_window_ratio(mu: &MixedMeasure) -> Result<(f64, (f64, f64))> {
    let corr = MeasureCorrelation::new(mu)?;
    let eps = 1.0 / WINDOW_LATTICE as f64;
    let mut best = (f64::INFINITY, (0.0, eps));
    for k in 0..WINDOW_LATTICE {
        let (b, a) = (k as f64 * eps, (k + 1) as f64 * eps);
        let r = corr.mass(b, a)? / eps;
        if r < best.0 {
            best = (r, (b, a));
        }
    }
    Ok(best)
}

/// Scales `μ` so that the minimum window ratio on `[0, 1]` is `½`.
pub fn normalize(mu: &MixedMeasure) -> Result<MixedMeasure> {
    let (r, _) = min_window_ratio(mu)?;
    if !(r > 0.0) {
        return Err(Error::Precondition("window ratio vanishes; cannot normalise".into()));
    }
    mu.scaled((0.5 / r).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuSpectrumReport {
    pub xi0: f64,
    pub theta0: f64,
    pub nu_hat_xi0: f64,
    pub nu_hat_zero: f64,
    /// `‖μ‖²_TV - 1`.
    pub tv_identity: f64,
    pub min_window_ratio: f64,
    pub min_dyadic_nu: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// `ν̂(ξ) = |μ̂(ξ)|² - sin(2πξ)/(2πξ)`.
pub fn nu_hat(mu: &MixedMeasure, xi: f64) -> f64 {
    fourier_measure(mu, xi).norm_sqr() - crate::spectral::sinc(2.0 * xi)
}

/// Checks the normalisation of `μ`, positivity of `ν` on dyadic intervals
/// of `[-1, 1]` down to width `2^{-10}`, and `θ₀ ≤ ν̂(ξ₀) ≤ ν̂(0)`.
pub fn nu_spectrum_check(mu: &MixedMeasure, tol: f64) -> Result<NuSpectrumReport> {
    positive("tol", tol)?;
    let (ratio, window) = min_window_ratio(mu)?;
    if (ratio - 0.5).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "window ratio {ratio} on [{}, {}] differs from 1/2 by more than 1e-6",
            window.0, window.1
        )));
    }
    let corr = MeasureCorrelation::new(mu)?;
    let mut min_nu = f64::INFINITY;
    for level in 0..=11u32 {
        let count = 1usize << level;
        let width = 2.0 / count as f64;
        for k in 0..count {
            let b = -1.0 + k as f64 * width;
            let a = b + width;
            let nu = corr.mass(b, a)? - 0.5 * width;
            if nu < -tol {
                return Err(Error::Precondition(format!(
                    "ν([{b}, {a}]) = {nu} is negative; μ is not normalised"
                )));
            }
            min_nu = min_nu.min(nu);
        }
    }
    let roots = sinc_min_roots();
    let at_xi0 = nu_hat(mu, roots.xi0);
    let at_zero = nu_hat(mu, 0.0);
    let tv = mu.total_variation();
    Ok(NuSpectrumReport {
        xi0: roots.xi0,
        theta0: roots.theta0,
        nu_hat_xi0: at_xi0,
        nu_hat_zero: at_zero,
        tv_identity: tv * tv - 1.0,
        min_window_ratio: ratio,
        min_dyadic_nu: min_nu,
        lower_holds: at_xi0 >= roots.theta0 - tol,
        upper_holds: at_xi0 <= at_zero + tol,
    })
}

/// Sup-norm residual of `½1_{[-1,1]} = 2a f₀(t-α₀) + 2a f₀(t+α₀) + f₀⋆f₀`
/// for `f₀ = (4a)^{-1} 1_{[-1+α₀, 1-α₀]}`, over midpoints of a lattice of
/// step `1/2000` on `[-2, 2]`.
pub fn case2bb_residual(a: f64) -> Result<f64> {
    positive("a", a)?;
    let alpha = sinc_min_roots().alpha0;
    let half = 1.0 - alpha;
    let f0 = |t: f64| if t.abs() <= half { 0.25 / a } else { 0.0 };
    let corr = |t: f64| (2.0 * half - t.abs()).max(0.0) / (16.0 * a * a);
    let n = 8000;
    let step = 4.0 / n as f64;
    Ok((0..n)
        .map(|k| {
            let t = -2.0 + (k as f64 + 0.5) * step;
            let lhs = if t.abs() <= 1.0 { 0.5 } else { 0.0 };
            let rhs = 2.0 * a * f0(t - alpha) + 2.0 * a * f0(t + alpha) + corr(t);
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::GridFunction;

    const FLOOR: f64 = 0.410767;

    fn bumps() -> Vec<BumpFunction> {
        vec![
            BumpFunction::new(BumpKind::Standard, 1.0).unwrap(),
            BumpFunction::new(BumpKind::Cosine, 1.0).unwrap(),
            BumpFunction::new(BumpKind::BetaPower { k: 2 }, 1.0).unwrap(),
        ]
    }

    #[test]
    fn bumps_are_even_probability_densities() {
        for b in bumps().into_iter().chain([BumpFunction::new(BumpKind::BetaPower { k: 5 }, 0.5).unwrap()]) {
            let s = b.scale;
            let m = quad::adaptive(|x| b.eval(x), -s, s, &[0.0], 1e-14, 500).value;
            assert!((m - 1.0).abs() < 1e-10, "{}: {m}", b.label());
            assert!((b.eval(0.3 * s) - b.eval(-0.3 * s)).abs() < 1e-15);
            assert!(b.eval(0.999 * s) >= 0.0);
            assert!((b.transform(0.0) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn transforms_match_direct_quadrature() {
        for b in bumps().into_iter().chain([BumpFunction::new(BumpKind::BetaPower { k: 3 }, 0.7).unwrap()]) {
            for xi in [0.25, 0.5, 1.3, 3.75, 11.2] {
                let s = b.scale;
                let direct = quad::adaptive(
                    |x| 2.0 * b.eval(x) * (2.0 * PI * xi * x).cos(),
                    0.0,
                    s,
                    &[],
                    1e-14,
                    2000,
                )
                .value;
                assert!((b.transform(xi) - direct).abs() < 1e-11, "{} at {xi}", b.label());
            }
        }
    }

    #[test]
    fn cosine_positive_mass_and_identity() {
        let b = BumpFunction::new(BumpKind::Cosine, 1.0).unwrap();
        let m = positive_part_mass(&b, 1e-8).unwrap();
        assert!(m.positive >= FLOOR - 1e-8);
        assert!((m.positive - m.negative - m.phi0).abs() < 1e-8, "{m:?}");
        assert!(m.positive <= m.l1());
    }

    #[test]
    fn standard_refined_bound() {
        let b = BumpFunction::new(BumpKind::Standard, 1.0).unwrap();
        let r = negative_part_bound_check(&b, 1e-8).unwrap();
        assert!(r.holds(1e-8), "{r:?}");
        assert!(r.error < 1e-7, "{r:?}");
    }

    #[test]
    fn chain_holds_for_each_bump_and_scale() {
        for kind in [BumpKind::Standard, BumpKind::Cosine, BumpKind::BetaPower { k: 2 }] {
            for s in [1.0, 0.6] {
                let b = BumpFunction::new(kind, s).unwrap();
                let r = negative_part_bound_check(&b, 1e-8).unwrap();
                assert!((r.lhs - r.identity_rhs).abs() < 1e-8, "{r:?}");
                assert!(r.slack >= -1e-8, "{r:?}");
                assert!(r.holds(1e-8), "{r:?}");
                for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                    assert!(b.eval(x) <= r.positive + r.negative + 1e-8);
                }
            }
        }
    }

    #[test]
    fn bad_bumps_rejected() {
        assert!(BumpFunction::new(BumpKind::BetaPower { k: 1 }, 1.0).is_err());
        assert!(BumpFunction::new(BumpKind::Cosine, 1.5).is_err());
        assert!(BumpFunction::new(BumpKind::Cosine, 0.0).is_err());
    }

    #[test]
    fn case2bb() {
        assert!(case2bb_residual(1.0).unwrap() > 0.05);
        let mut prev: Option<f64> = None;
        for k in 0..81 {
            let a = 10f64.powf(-2.0 + 4.0 * k as f64 / 80.0);
            let r = case2bb_residual(a).unwrap();
            assert!(r >= 0.01, "a={a}: {r}");
            if let Some(p) = prev {
                assert!(r < 10.0 * p && p < 10.0 * r);
            }
            prev = Some(r);
        }
        let alpha = sinc_min_roots().alpha0;
        // [-1+α₀, -2+3α₀] covers [-1+α₀, 0]
        assert!(alpha > 2.0 / 3.0 && -2.0 + 3.0 * alpha > 0.0);
    }

    #[test]
    fn nu_check_on_indicator_density() {
        let d = GridFunction::new(-0.5, 1.0 / 64.0, vec![1.0; 64]).unwrap();
        let mu = MixedMeasure::new(vec![(-0.5, 0.5), (0.5, 0.5)], Some(d)).unwrap();
        let mu = normalize(&mu).unwrap();
        let r = nu_spectrum_check(&mu, 1e-8).unwrap();
        assert!((r.nu_hat_zero - r.tv_identity).abs() < 1e-8);
        assert!(r.lower_holds && r.upper_holds, "{r:?}");
    }

    #[test]
    fn unnormalised_measure_rejected() {
        let d = GridFunction::new(-0.5, 1.0 / 64.0, vec![1.0; 64]).unwrap();
        let mu = MixedMeasure::from_density(d);
        assert!(matches!(nu_spectrum_check(&mu, 1e-8), Err(Error::Precondition(_))));
    }
}
