//! Fourier transforms `f̂(ξ) = ∫ f(y) e^{-2πiξy} dy` of step functions and
//! measures, the two averaging weights and their `L^p` moments `∫|ŵ|^p`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::Correlation;
use crate::error::{positive, Error, Result};
use crate::funcspace::{GridFunction, MixedMeasure};
use crate::quad::{self, Estimate, GaussLegendre, TanhSinh};

/// Averaging weight `w` with `∫ w = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "weight", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Weight {
    /// `1_{[-1/2, 1/2]}`, `ŵ(ξ) = sin(πξ)/(πξ)`.
    Interval,
    /// `(a/π)^{1/2} e^{-a t²}`, `ŵ(ξ) = e^{-π²ξ²/a}`.
    Gaussian { a: f64 },
}

impl Weight {
    pub fn validate(&self) -> Result<()> {
        if let Weight::Gaussian { a } = self {
            positive("a", *a)?;
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            Weight::Interval => "interval".into(),
            Weight::Gaussian { a } => format!("gaussian(a={a})"),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Weight::Interval => {
                if t.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Weight::Gaussian { a } => (a / PI).sqrt() * (-a * t * t).exp(),
        }
    }

    pub fn transform(&self, xi: f64) -> f64 {
        match self {
            Weight::Interval => sinc(xi),
            Weight::Gaussian { a } => (-PI * PI * xi * xi / a).exp(),
        }
    }

    /// `∫ f⋆f(t) w(t) dt`, exact for the piecewise-linear correlation.
    pub fn mean(&self, corr: &Correlation) -> f64 {
        match self {
            Weight::Interval => corr.integral(-0.5, 0.5),
            Weight::Gaussian { a } => corr.gaussian_mean(*a),
        }
    }
}

/// `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    let y = PI * x;
    if y.abs() < 1e-4 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

/// Exact transform of the step function: `Σ c_k h sinc(hξ) e^{-2πiξ x_k}`
/// with `x_k` the cell centres.
pub fn fourier(f: &GridFunction, xi: f64) -> Complex64 {
    let h = f.spacing();
    let x0 = f.origin() + 0.5 * h;
    let rot = Complex64::from_polar(1.0, -2.0 * PI * h * xi);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut phase = Complex64::new(1.0, 0.0);
    for (k, c) in f.samples().iter().enumerate() {
        // re-anchor periodically so rounding in the recurrence stays small
        if k % 64 == 0 {
            phase = Complex64::from_polar(1.0, -2.0 * PI * h * xi * k as f64);
        }
        acc += phase * *c;
        phase *= rot;
    }
    acc * Complex64::from_polar(h * sinc(h * xi), -2.0 * PI * x0 * xi)
}

/// `Σ m_j e^{-2πi x_j ξ}` plus the transform of the density part.
pub fn fourier_measure(mu: &MixedMeasure, xi: f64) -> Complex64 {
    let atoms: Complex64 = mu
        .atoms()
        .iter()
        .map(|(x, m)| Complex64::from_polar(*m, -2.0 * PI * x * xi))
        .sum();
    match mu.density() {
        Some(d) => atoms + fourier(d, xi),
        None => atoms,
    }
}

/// `M_p = (1/π)∫_0^π |sin|^p`, the mean of `|sin|^p` over a period.
fn sin_power_mean(p: f64) -> f64 {
    libm::tgamma(0.5 * (p + 1.0)) / (PI.sqrt() * libm::tgamma(0.5 * p + 1.0))
}

/// Tanh–sinh rule on `[0, 1]` with `sin(πs)^p` precomputed at the nodes.
struct SinPowerRule {
    points: Vec<f64>,
    weights: Vec<f64>,
    plain: Vec<f64>,
}

impl SinPowerRule {
    fn new(p: f64, step: f64) -> Self {
        let rule = TanhSinh::new(step, 4.0);
        let mut points = Vec::with_capacity(rule.nodes.len());
        let mut weights = Vec::with_capacity(rule.nodes.len());
        let mut plain = Vec::with_capacity(rule.nodes.len());
        for i in 0..rule.nodes.len() {
            let x = rule.nodes[i];
            let near = 0.5 * rule.complements[i];
            let s = if x < 0.0 { near } else { 1.0 - near };
            let sin = (PI * near).sin();
            points.push(s);
            weights.push(0.5 * rule.weights[i] * sin.powf(p));
            plain.push(0.5 * rule.weights[i]);
        }
        Self { points, weights, plain }
    }

    /// `∫_k^{k+1} |sinc|^p`.
    fn cell(&self, p: f64, k: u64) -> f64 {
        if k == 0 {
            // sin^p and (πs)^{-p} separately under- and overflow near s = 0
            let terms: Vec<f64> = self
                .points
                .iter()
                .zip(&self.plain)
                .map(|(s, w)| w * sinc(*s).powf(p))
                .collect();
            return quad::pairwise_sum(&terms);
        }
        let terms: Vec<f64> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (PI * (k as f64 + s)).powf(-p))
            .collect();
        quad::pairwise_sum(&terms)
    }

    fn sum(&self, p: f64, cells: u64) -> f64 {
        let parts: Vec<f64> = (0..cells).into_par_iter().map(|k| self.cell(p, k)).collect();
        quad::pairwise_sum(&parts)
    }
}

/// `I_w(p) = ∫ |ŵ(ξ)|^p dξ` with an error bound.
///
/// For the interval weight the integral over `[-T, T]` is summed over unit
/// cells between sinc zeros, and the two tails use the Euler–Maclaurin
/// leading term `M_p π^{-p} T^{1-p}/(p-1)`; its remainder is bounded by
/// `p π^{-p} T^{-p-1}/2` per side.
pub fn weight_lp_moment(w: &Weight, p: f64, tol: f64) -> Result<Estimate> {
    w.validate()?;
    positive("tol", tol)?;
    match w {
        Weight::Gaussian { a } => {
            if !(p >= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "p",
                    value: p,
                    reason: "must be >= 1",
                });
            }
            Ok(Estimate::new((a / (PI * p)).sqrt(), 0.0))
        }
        Weight::Interval => {
            if !(p > 1.0) || !p.is_finite() {
                return Err(Error::Divergent(format!("∫|sinc|^p requires p > 1, got p = {p}")));
            }
            let pi_p = PI.powf(-p);
            let cells = ((2.0 * p * pi_p / tol).powf(1.0 / (p + 1.0)).ceil() as u64).max(50);
            let t = cells as f64;
            let tail = sin_power_mean(p) * pi_p * t.powf(1.0 - p) / (p - 1.0);
            let remainder = p * pi_p * t.powf(-p - 1.0);
            let coarse = SinPowerRule::new(p, 1.0 / 32.0).sum(p, cells);
            let fine = SinPowerRule::new(p, 1.0 / 64.0).sum(p, cells);
            Ok(Estimate::new(
                2.0 * (fine + tail),
                2.0 * (fine - coarse).abs() + remainder,
            ))
        }
    }
}

/// Adaptive Gauss–Kronrod version of the interval moment, used as an
/// independent check on [`weight_lp_moment`].
pub fn interval_moment_adaptive(p: f64, cells: u64) -> Estimate {
    let pi_p = PI.powf(-p);
    let t = cells as f64;
    let breaks: Vec<f64> = (1..cells).map(|k| k as f64).collect();
    let body = quad::adaptive(|x| sinc(x).abs().powf(p), 0.0, t, &breaks, 1e-13, 200_000);
    let tail = sin_power_mean(p) * pi_p * t.powf(1.0 - p) / (p - 1.0);
    Estimate::new(2.0 * (body.value + tail), 2.0 * body.error + p * pi_p * t.powf(-p - 1.0))
}

/// Upper bound on `|f̂(ξ)|` for `|ξ| > 0` from the jump decomposition.
fn jump_bound(f: &GridFunction) -> f64 {
    f.total_variation() / (2.0 * PI)
}

/// Frequency cutoff for the Fourier-side quadratures.
const MAX_CUTOFF: f64 = 4.0e4;

/// `∫_0^Ξ g` over panels no wider than `width`, Gauss–Legendre 16 per panel.
fn panel_integral<G: Fn(f64) -> f64 + Sync>(g: G, cutoff: f64, width: f64) -> f64 {
    let panels = (cutoff / width).ceil() as usize;
    let dx = cutoff / panels as f64;
    let rule = GaussLegendre::g16();
    let parts: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|k| rule.integrate(&g, k as f64 * dx, (k + 1) as f64 * dx))
        .collect();
    quad::pairwise_sum(&parts)
}

fn panel_width(f: &GridFunction) -> f64 {
    let (lo, hi) = f.support();
    let reach = lo.abs().max(hi.abs()).max(f.spacing());
    (0.5f64).min(1.0 / (4.0 * reach))
}

/// `∫ |f̂(ξ)|² ŵ(ξ) dξ` with an absolute error bound; agrees with the
/// time-side `∫ f⋆f · w`.
pub fn mean_functional_fourier(f: &GridFunction, w: &Weight, tol: f64) -> Result<Estimate> {
    w.validate()?;
    positive("tol", tol)?;
    let width = panel_width(f);
    let (cutoff, tail) = match w {
        Weight::Gaussian { a } => {
            let l1sq = f.l1() * f.l1();
            let c = PI * PI / a;
            // ∫_Ξ^∞ e^{-cξ²} ≤ e^{-cΞ²}/(2cΞ)
            let mut cutoff = (1.0f64).max(1.0 / c.sqrt());
            while 2.0 * l1sq * (-c * cutoff * cutoff).exp() / (2.0 * c * cutoff) > 0.5 * tol {
                cutoff *= 1.25;
            }
            (cutoff, 2.0 * l1sq * (-c * cutoff * cutoff).exp() / (2.0 * c * cutoff))
        }
        Weight::Interval => {
            // |f̂| ≤ V/(2π|ξ|) and |ŵ| ≤ 1/(π|ξ|): two tails ≤ V²/(4π³Ξ²)
            let v = f.total_variation();
            let wanted = v / (2.0 * PI.powf(1.5) * (0.5 * tol).sqrt());
            let cutoff = wanted.clamp(16.0, MAX_CUTOFF);
            (cutoff, v * v / (4.0 * PI.powi(3) * cutoff * cutoff))
        }
    };
    let value = 2.0 * panel_integral(|xi| fourier(f, xi).norm_sqr() * w.transform(xi), cutoff, width);
    Ok(Estimate::new(value, tail))
}

/// `∫ |f̂|²` (Plancherel side of `‖f‖₂²`), truncated at a multiple of the
/// lattice period `1/h` with the averaged tail `D/(2π²Ξ)`, `D = Σ J_j²`.
pub fn fourier_energy(f: &GridFunction, tol: f64) -> Result<Estimate> {
    positive("tol", tol)?;
    let h = f.spacing();
    let v = f.total_variation();
    let d: f64 = f.jumps().iter().map(|(_, j)| j * j).sum();
    // the oscillating remainder after the averaged tail decays like V²/Ξ²
    let periods = ((v / (2.0 * PI) / tol.sqrt() * h).ceil()).clamp(8.0, 4096.0);
    let cutoff = periods / h;
    let value = 2.0 * panel_integral(|xi| fourier(f, xi).norm_sqr(), cutoff, panel_width(f));
    let tail = d / (2.0 * PI * PI * cutoff);
    let bound = jump_bound(f);
    Ok(Estimate::new(value + tail, 4.0 * bound * bound / (h * cutoff * cutoff)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlate::{autocorrelate, Method};
    use crate::funcspace::{sample, AnalyticFamily};

    fn indicator() -> GridFunction {
        GridFunction::new(-0.5, 1.0, vec![1.0]).unwrap()
    }

    #[test]
    fn indicator_transform_is_sinc() {
        let f = indicator();
        assert!(fourier(&f, 1.0).norm() < 1e-15);
        assert!((fourier(&f, 0.0).re - 1.0).abs() < 1e-15);
        for xi in [0.3, 1.7, -2.25] {
            let z = fourier(&f, xi);
            assert!((z.re - sinc(xi)).abs() < 1e-14 && z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn zero_frequency_is_mass() {
        let f = GridFunction::new(-0.3, 0.1, vec![1.0, 0.0, 2.5, 0.7]).unwrap();
        assert!((fourier(&f, 0.0).re - f.l1()).abs() < 1e-12);
        for xi in [0.1, 3.3, 17.0] {
            assert!(fourier(&f, xi).norm() <= f.l1() + 1e-12);
        }
    }

    #[test]
    fn gaussian_self_transform() {
        let fam = AnalyticFamily::Gaussian { b: PI };
        let f = sample(&fam, fam.default_support(), 4096).unwrap();
        assert!((fourier(&f, 1.0).re - (-PI).exp()).abs() < 1e-6);
    }

    #[test]
    fn transform_matches_direct_sum_for_long_grids() {
        let vals: Vec<f64> = (0..1000).map(|k| 1.0 + ((k * 7) % 13) as f64).collect();
        let f = GridFunction::new(-2.0, 0.004, vals.clone()).unwrap();
        let xi = 7.123;
        let h = 0.004;
        let direct: Complex64 = vals
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let x = -2.0 + (k as f64 + 0.5) * h;
                Complex64::from_polar(c * h * sinc(h * xi), -2.0 * PI * x * xi)
            })
            .sum();
        assert!((fourier(&f, xi) - direct).norm() < 1e-11);
    }

    #[test]
    fn measure_transforms() {
        let delta = MixedMeasure::new(vec![(0.0, 1.0)], None).unwrap();
        let pair = MixedMeasure::new(vec![(-0.5, 0.5), (0.5, 0.5)], None).unwrap();
        for xi in [0.0, 0.4, 1.3] {
            assert!((fourier_measure(&delta, xi) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            assert!((fourier_measure(&pair, xi).re - (PI * xi).cos()).abs() < 1e-15);
        }
        let mixed = MixedMeasure::new(vec![(-0.5, 0.5), (0.5, 0.5)], Some(indicator())).unwrap();
        let xi = 0.77;
        let parts = fourier_measure(&pair, xi) + fourier(&indicator(), xi);
        assert!((fourier_measure(&mixed, xi) - parts).norm() < 1e-10);
        assert!(fourier_measure(&mixed, xi).norm() <= mixed.total_variation());
    }

    #[test]
    fn plancherel_moment_is_one() {
        let e = weight_lp_moment(&Weight::Interval, 2.0, 1e-11).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9, "{e:?}");
        assert!(e.error < 1e-9);
        let g = weight_lp_moment(&Weight::Gaussian { a: 2.0 * PI }, 2.0, 1e-12).unwrap();
        assert!((g.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_moment_matches_quadrature() {
        for (a, p) in [(2.0 * PI, 3.0), (0.5, 2.5), (10.0, 1.0)] {
            let w = Weight::Gaussian { a };
            let closed = weight_lp_moment(&w, p, 1e-12).unwrap().value;
            let quad = quad::adaptive(|x| w.transform(x).powf(p), -30.0, 30.0, &[0.0], 1e-14, 1000);
            assert!((closed - quad.value).abs() < 1e-10);
        }
    }

    #[test]
    fn interval_moment_two_quadratures_agree_at_pi() {
        let a = weight_lp_moment(&Weight::Interval, PI, 1e-12).unwrap();
        let b = interval_moment_adaptive(PI, 400);
        assert!((a.value - b.value).abs() < 1e-8, "{a:?} {b:?}");
    }

    #[test]
    fn divergent_moment_is_rejected() {
        assert!(matches!(weight_lp_moment(&Weight::Interval, 1.0, 1e-8), Err(Error::Divergent(_))));
        assert!(weight_lp_moment(&Weight::Gaussian { a: 1.0 }, 0.5, 1e-8).is_err());
        assert!(weight_lp_moment(&Weight::Gaussian { a: -1.0 }, 2.0, 1e-8).is_err());
    }

    #[test]
    fn tightening_tolerance_stays_within_bound() {
        for p in [2.0, 2.5, 4.0] {
            let loose = weight_lp_moment(&Weight::Interval, p, 1e-7).unwrap();
            let tight = weight_lp_moment(&Weight::Interval, p, 5e-8).unwrap();
            assert!((loose.value - tight.value).abs() <= loose.error, "p={p}");
        }
    }

    #[test]
    fn interval_moment_decreases_in_p() {
        let mut prev = f64::INFINITY;
        for k in 0..=80 {
            let p = 2.0 + 0.1 * k as f64;
            let v = weight_lp_moment(&Weight::Interval, p, 1e-9).unwrap().value;
            assert!(v < prev, "p={p}");
            prev = v;
        }
    }

    #[test]
    fn indicator_mean_fourier_side() {
        let e = mean_functional_fourier(&indicator(), &Weight::Interval, 1e-7).unwrap();
        assert!((e.value - 0.75).abs() < 1e-6, "{e:?}");
    }

    #[test]
    fn gaussian_mean_fourier_side() {
        let b = 4.0 * PI;
        let a = 2.0 * PI;
        let fam = AnalyticFamily::Gaussian { b };
        let f = sample(&fam, fam.default_support(), 4096).unwrap();
        let e = mean_functional_fourier(&f, &Weight::Gaussian { a }, 1e-10).unwrap();
        let closed = PI.sqrt() / (2.0 * b + b * b / a).sqrt();
        assert!((e.value - closed).abs() < 1e-6 * closed, "{} vs {closed}", e.value);
    }

    #[test]
    fn energy_is_plancherel() {
        let f = GridFunction::new(-0.5, 0.125, vec![0.2, 1.0, 0.0, 0.7, 1.3, 0.4, 0.9, 0.1]).unwrap();
        let e = fourier_energy(&f, 1e-10).unwrap();
        let l2 = f.l2();
        assert!((e.value - l2 * l2).abs() < 1e-8, "{} vs {}", e.value, l2 * l2);
    }

    #[test]
    fn both_sides_agree_for_a_step_function() {
        let f = GridFunction::new(-0.5, 0.125, vec![0.2, 1.0, 0.0, 0.7, 1.3, 0.4, 0.9, 0.1]).unwrap();
        let corr = autocorrelate(&f, Method::Direct).unwrap();
        let scale = f.l1() * f.l2();
        for w in [Weight::Interval, Weight::Gaussian { a: 2.0 * PI }] {
            let time = w.mean(&corr);
            let freq = mean_functional_fourier(&f, &w, 1e-9).unwrap();
            assert!((time - freq.value).abs() <= 1e-6 * scale, "{w:?}: {time} vs {}", freq.value);
        }
    }
}
