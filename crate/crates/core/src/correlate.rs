//! Autocorrelation `f⋆f(t) = ∫ f(x) f(x+t) dx` of step functions, closed
//! forms, the singular example and atoms-plus-density measures, together
//! with the periodisation and dilate-then-mollify constructions.
//!
//! For a step function with spacing `h` the autocorrelation is exactly
//! piecewise linear with nodes on `{k h}`, so a [`Correlation`] stores the
//! node values and every query (point value, integral, minimum) is exact
//! for the step function.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bump::BumpTables;
use crate::error::{Error, Result};
use crate::funcspace::{bs_value, rebin_cells, AnalyticFamily, GridFunction, MixedMeasure};
use crate::quad::{self, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    Fft,
    Analytic,
    SingularQuadrature,
}

/// Node values of `f⋆f` on lags `k h`, `k = -m..=m`; zero beyond `±(m+1) h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    spacing: f64,
    values: Vec<f64>,
    method: Method,
}

impl Correlation {
    /// Builds from symmetric node values (`values.len()` odd).
    pub fn from_nodes(spacing: f64, values: Vec<f64>, method: Method) -> Self {
        assert!(values.len() % 2 == 1, "node list must be symmetric about lag 0");
        Self {
            spacing,
            values,
            method,
        }
    }

    /// Samples `g` on the lags `k h`, `|k| <= half`.
    pub fn from_fn<F: Fn(f64) -> f64>(spacing: f64, half: usize, g: F, method: Method) -> Self {
        let values = (0..=2 * half)
            .map(|j| g((j as f64 - half as f64) * spacing))
            .collect();
        Self::from_nodes(spacing, values, method)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn half(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    /// Largest lag with a stored node; the function vanishes one step beyond.
    pub fn reach(&self) -> f64 {
        (self.half() + 1) as f64 * self.spacing
    }

    /// `(lag, value)` for every node including the two zero end nodes.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = self.half() as f64;
        let h = self.spacing;
        std::iter::once((-(half + 1.0) * h, 0.0))
            .chain(
                self.values
                    .iter()
                    .enumerate()
                    .map(move |(j, v)| ((j as f64 - half) * h, *v)),
            )
            .chain(std::iter::once(((half + 1.0) * h, 0.0)))
    }

    fn node(&self, idx: i64) -> f64 {
        if idx < 0 || idx as usize >= self.values.len() {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    /// Linear interpolation between lattice nodes.
    pub fn at(&self, t: f64) -> f64 {
        let u = t / self.spacing + self.half() as f64;
        let i = u.floor();
        let s = u - i;
        let i = i as i64;
        (1.0 - s) * self.node(i) + s * self.node(i + 1)
    }

    pub fn peak(&self) -> f64 {
        self.values[self.half()]
    }

    /// `∫_lo^hi` of the piecewise-linear interpolant.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let h = self.spacing;
        let half = self.half() as f64;
        let lo = lo.max(-(half + 1.0) * h);
        let hi = hi.min((half + 1.0) * h);
        if hi <= lo {
            return 0.0;
        }
        let first = (lo / h).floor() as i64;
        let last = (hi / h).ceil() as i64;
        let mut parts = Vec::with_capacity((last - first) as usize);
        for k in first..last {
            let t0 = k as f64 * h;
            let t1 = t0 + h;
            let a = lo.max(t0);
            let b = hi.min(t1);
            if b <= a {
                continue;
            }
            let v0 = self.node(k + self.half() as i64);
            let v1 = self.node(k + 1 + self.half() as i64);
            // linear v(t) on [t0, t1]; integrate over [a, b]
            let sa = (a - t0) / h;
            let sb = (b - t0) / h;
            let va = v0 + (v1 - v0) * sa;
            let vb = v0 + (v1 - v0) * sb;
            parts.push(0.5 * (va + vb) * (b - a));
        }
        quad::pairwise_sum(&parts)
    }

    /// `∫ f⋆f`, which equals `‖f‖₁²` for a step function.
    pub fn mass(&self) -> f64 {
        self.spacing * quad::pairwise_sum(&self.values)
    }

    /// Minimum of the interpolant over `[lo, hi]`: attained at a node or an
    /// endpoint.
    pub fn min_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (lo, self.at(lo));
        let end = (hi, self.at(hi));
        if end.1 < best.1 {
            best = end;
        }
        for (t, v) in self.nodes() {
            if t > lo && t < hi && v < best.1 {
                best = (t, v);
            }
        }
        best
    }

    /// `(a/π)^{1/2} ∫ f⋆f(t) e^{-a t²} dt`, exact for the interpolant.
    pub fn gaussian_mean(&self, a: f64) -> f64 {
        let h = self.spacing;
        let sa = a.sqrt();
        let half = self.half() as i64;
        let erf_term = |t: f64| 0.5 * libm::erf(sa * t);
        let exp_term = |t: f64| -(-a * t * t).exp() / (2.0 * a) * (a / PI).sqrt();
        let mut parts = Vec::with_capacity(self.values.len() + 1);
        for k in -(half + 1)..=half {
            let t0 = k as f64 * h;
            let t1 = t0 + h;
            let v0 = self.node(k + half);
            let v1 = self.node(k + 1 + half);
            if v0 == 0.0 && v1 == 0.0 {
                continue;
            }
            // v(t) = alpha + beta t on [t0, t1]
            let beta = (v1 - v0) / h;
            let alpha = v0 - beta * t0;
            parts.push(alpha * (erf_term(t1) - erf_term(t0)) + beta * (exp_term(t1) - exp_term(t0)));
        }
        quad::pairwise_sum(&parts)
    }
}

/// `f⋆f` of a step function.
pub fn autocorrelate(f: &GridFunction, method: Method) -> Result<Correlation> {
    match method {
        Method::Direct => Ok(direct(f)),
        Method::Fft => Ok(via_fft(f)),
        other => Err(Error::Unsupported(format!("{other:?} correlation of a grid function"))),
    }
}

fn direct(f: &GridFunction) -> Correlation {
    let c = f.samples();
    let n = c.len();
    let h = f.spacing();
    let values = (0..2 * n - 1)
        .map(|j| {
            let k = j as i64 - (n as i64 - 1);
            let terms: Vec<f64> = if k >= 0 {
                let k = k as usize;
                (0..n - k).map(|i| c[i] * c[i + k]).collect()
            } else {
                let k = (-k) as usize;
                (k..n).map(|i| c[i] * c[i - k]).collect()
            };
            h * quad::pairwise_sum(&terms)
        })
        .collect();
    Correlation::from_nodes(h, values, Method::Direct)
}

fn via_fft(f: &GridFunction) -> Correlation {
    let c = f.samples();
    let n = c.len();
    let len = (2 * n - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex64> = c.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    fwd.process(&mut buf);
    for z in &mut buf {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    let scale = f.spacing() / len as f64;
    let values = (0..2 * n - 1)
        .map(|j| {
            let k = j as i64 - (n as i64 - 1);
            let idx = k.rem_euclid(len as i64) as usize;
            buf[idx].re * scale
        })
        .collect();
    Correlation::from_nodes(f.spacing(), values, Method::Fft)
}

/// Closed-form `f⋆f(t)` where one is known.
pub fn analytic_value(family: &AnalyticFamily, t: f64) -> Option<f64> {
    match family {
        AnalyticFamily::Indicator { a } => Some((2.0 * a - t.abs()).max(0.0)),
        AnalyticFamily::Gaussian { b } => Some((PI / (2.0 * b)).sqrt() * (-b * t * t / 2.0).exp()),
        _ => None,
    }
}

/// Closed-form correlation sampled on `{k h : |k| <= half}`.
pub fn analytic(family: &AnalyticFamily, spacing: f64, half: usize) -> Result<Correlation> {
    family.validate()?;
    analytic_value(family, 0.0)
        .ok_or_else(|| Error::Unsupported(format!("no closed-form correlation for {}", family.label())))?;
    Ok(Correlation::from_fn(
        spacing,
        half,
        |t| analytic_value(family, t).unwrap_or(0.0),
        Method::Analytic,
    ))
}

/// `f⋆f(t)` for the singular example by adaptive quadrature.
///
/// The substitution `x = c - r cos θ` over the overlap `[-1/2, 1/2 - t]`
/// cancels both inverse-square-root endpoint singularities. At `t = 0` the
/// value is `+∞` (`f ∉ L²`); at `|t| = 1` the continuous extension `π/4`
/// is returned.
pub fn bs_autocorrelation(t: f64) -> Result<Estimate> {
    if !(t.abs() <= 1.0) {
        return Err(Error::Domain {
            value: t,
            domain: "[-1, 1]",
        });
    }
    let t = t.abs();
    if t == 0.0 {
        return Ok(Estimate::new(f64::INFINITY, 0.0));
    }
    let r = 0.5 * (1.0 - t);
    let c = -0.5 + r;
    let weight = |x: f64| if x.abs() <= 0.25 { 0.75 } else { 1.0 };
    let integrand = |theta: f64| {
        let x = c - r * theta.cos();
        let left = 1.0 - 2.0 * x;
        let right = 1.0 + 2.0 * x + 2.0 * t;
        weight(x) * weight(x + t) / (2.0 * (left * right).sqrt())
    };
    let mut breaks = Vec::new();
    if r > 0.0 {
        for edge in [-0.25, 0.25, -0.25 - t, 0.25 - t] {
            let s = (c - edge) / r;
            if s > -1.0 && s < 1.0 {
                breaks.push(s.acos());
            }
        }
    }
    Ok(quad::adaptive(integrand, 0.0, PI, &breaks, 1e-11, 4000))
}

/// Evaluates [`bs_autocorrelation`] at many lags in parallel; output order
/// follows input order.
pub fn bs_autocorrelation_many(ts: &[f64]) -> Result<Vec<Estimate>> {
    ts.par_iter().map(|t| bs_autocorrelation(*t)).collect()
}

/// Direct pointwise value of the singular example (for spot checks).
pub fn bs_pointwise(x: f64) -> f64 {
    bs_value(x)
}

/// `G = 1_{[-1,1]} Σ_n g(· - n)` on a grid of spacing `2/N`, `N = round(2/h)`.
pub fn periodize(g: &GridFunction) -> Result<GridFunction> {
    let n_out = ((2.0 / g.spacing()).round() as usize).max(2);
    let h_out = 2.0 / n_out as f64;
    let mut mass = vec![0.0; n_out];
    let h = g.spacing();
    for (k, v) in g.samples().iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let left = g.origin() + k as f64 * h;
        let right = left + h;
        let shift_lo = (-1.0 - right).floor() as i64;
        let shift_hi = (1.0 - left).ceil() as i64;
        for shift in shift_lo..=shift_hi {
            let a = (left + shift as f64).max(-1.0);
            let b = (right + shift as f64).min(1.0);
            if b <= a {
                continue;
            }
            let first = (((a + 1.0) / h_out).floor() as usize).min(n_out - 1);
            let last = (((b + 1.0) / h_out).ceil() as usize).min(n_out);
            for (j, m) in mass.iter_mut().enumerate().take(last).skip(first) {
                let c0 = -1.0 + j as f64 * h_out;
                let overlap = (b.min(c0 + h_out) - a.max(c0)).max(0.0);
                *m += v * overlap;
            }
        }
    }
    GridFunction::from_arithmetic(-1.0, h_out, mass.into_iter().map(|m| m / h_out).collect())
}

/// `f_λ(x) = f(λ x)` as a step function.
pub fn dilate(f: &GridFunction, lambda: f64) -> Result<GridFunction> {
    crate::error::positive("lambda", lambda)?;
    GridFunction::new(f.origin() / lambda, f.spacing() / lambda, f.samples().to_vec())
}

/// `f̃ = f_λ * ψ_t` stored as exact cell averages (so `‖f̃‖₁ = ‖f_λ‖₁`).
///
/// Requires `λ ∈ (0,1)` and `0 < t < (1/λ - 1)/2`. The output spacing is
/// at most `t/8` and at most half the gap `1/λ - 1 - 2t`.
pub fn dilate_mollify(f: &GridFunction, lambda: f64, t: f64) -> Result<GridFunction> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Precondition(format!("lambda = {lambda} must lie in (0, 1)")));
    }
    let gap = 1.0 / lambda - 1.0 - 2.0 * t;
    if !(t > 0.0 && gap > 0.0) {
        return Err(Error::Precondition(format!(
            "t = {t} must satisfy 0 < t < (1/lambda - 1)/2 = {}",
            0.5 * (1.0 / lambda - 1.0)
        )));
    }
    let fl = dilate(f, lambda)?;
    let target = (t / 8.0).min(0.5 * gap);
    let refine = (fl.spacing() / target).ceil().max(1.0);
    let step = fl.spacing() / refine;
    let (lo, hi) = fl.support();
    let origin = lo - t;
    let cells = ((hi - lo + 2.0 * t) / step).ceil() as usize + 1;
    let edges = fl.jumps();
    let tables = BumpTables::get();
    let samples = (0..cells)
        .map(|k| {
            let x0 = origin + k as f64 * step;
            let x1 = x0 + step;
            let mut acc = 0.0;
            for (e, jump) in &edges {
                let u1 = (x1 - e) / t;
                if u1 <= -1.0 {
                    continue;
                }
                let u0 = (x0 - e) / t;
                acc += jump * (tables.cdf2(u1) - tables.cdf2(u0));
            }
            acc * t / step
        })
        .collect();
    GridFunction::from_arithmetic(origin, step, samples)
}

/// Atom-atom, atom-density and density-density contributions to
/// `μ⋆μ(A)`, `A = [b, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureCorrelationParts {
    pub atom_atom: f64,
    pub atom_density: f64,
    pub density_density: f64,
}

impl MeasureCorrelationParts {
    pub fn total(&self) -> f64 {
        self.atom_atom + self.atom_density + self.density_density
    }
}

/// `μ⋆μ` prepared for repeated interval queries.
#[derive(Debug, Clone)]
pub struct MeasureCorrelation {
    measure: MixedMeasure,
    diffs: Vec<(f64, f64)>,
    density_corr: Option<Correlation>,
}

impl MeasureCorrelation {
    pub fn new(mu: &MixedMeasure) -> Result<Self> {
        let atoms = mu.atoms();
        let mut diffs = Vec::with_capacity(atoms.len() * atoms.len());
        for (xi, mi) in atoms {
            for (xj, mj) in atoms {
                diffs.push((xi - xj, mi * mj));
            }
        }
        diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let density_corr = match mu.density() {
            Some(d) => Some(autocorrelate(d, Method::Fft)?),
            None => None,
        };
        Ok(Self {
            measure: mu.clone(),
            diffs,
            density_corr,
        })
    }

    /// `μ⋆μ([b, a]) = ∫∫ 1_{[b,a]}(x - y) dμ(x) dμ(y)` split by part.
    pub fn parts(&self, b: f64, a: f64) -> Result<MeasureCorrelationParts> {
        if !(a > b) {
            return Err(Error::Precondition(format!("interval [{b}, {a}] must have a > b")));
        }
        let start = self.diffs.partition_point(|d| d.0 < b);
        let end = self.diffs.partition_point(|d| d.0 <= a);
        let atom_atom = self.diffs[start..end].iter().map(|d| d.1).sum();
        let mut atom_density = 0.0;
        let mut density_density = 0.0;
        if let Some(f) = self.measure.density() {
            for (x, m) in self.measure.atoms() {
                // atom at x paired with density at y: x - y in [b, a]
                atom_density += m * f.integral(x - a, x - b);
                // density at x paired with atom at y = x_j: x in [b + x_j, a + x_j]
                atom_density += m * f.integral(b + x, a + x);
            }
            if let Some(c) = &self.density_corr {
                density_density = c.integral(b, a);
            }
        }
        Ok(MeasureCorrelationParts {
            atom_atom,
            atom_density,
            density_density,
        })
    }

    pub fn mass(&self, b: f64, a: f64) -> Result<f64> {
        Ok(self.parts(b, a)?.total())
    }
}

/// `μ⋆μ([b, a])`.
pub fn measure_autocorrelate(mu: &MixedMeasure, b: f64, a: f64) -> Result<f64> {
    MeasureCorrelation::new(mu)?.mass(b, a)
}

/// Atoms/density decomposition of `μ⋆ν(A) = ∫∫ 1_A(x - y) dμ(x) dν(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionStructure {
    pub measure: MixedMeasure,
    pub has_atoms: bool,
    pub has_density: bool,
}

/// Builds `μ⋆ν` in the atoms-plus-density representation. Atom-density
/// terms are shifted (and for `μ`-atoms reflected) copies of the density,
/// rebinned onto a common lattice `{k h}` with `h` the finest input spacing.
pub fn convolution_structure(mu: &MixedMeasure, nu: &MixedMeasure) -> Result<ConvolutionStructure> {
    let mut atoms = Vec::new();
    for (x, m) in mu.atoms() {
        for (y, n) in nu.atoms() {
            if m * n > 0.0 {
                atoms.push((x - y, m * n));
            }
        }
    }
    let spacing = [mu.density(), nu.density()]
        .into_iter()
        .flatten()
        .map(GridFunction::spacing)
        .fold(f64::INFINITY, f64::min);
    let mut cells: Vec<(f64, f64, f64)> = Vec::new();
    if let Some(g) = nu.density() {
        // s = x_i - y with y in the density of ν
        for (x, m) in mu.atoms() {
            for (k, v) in g.samples().iter().enumerate() {
                let left = g.origin() + k as f64 * g.spacing();
                cells.push((x - left - g.spacing(), g.spacing(), m * v));
            }
        }
    }
    if let Some(f) = mu.density() {
        // s = x - y_j with x in the density of μ
        for (y, n) in nu.atoms() {
            for (k, v) in f.samples().iter().enumerate() {
                let left = f.origin() + k as f64 * f.spacing();
                cells.push((left - y, f.spacing(), n * v));
            }
        }
    }
    if let (Some(f), Some(g)) = (mu.density(), nu.density()) {
        let fr = f.rebin(spacing)?;
        let gr = g.rebin(spacing)?;
        let fo = (fr.origin() / spacing).round() as i64;
        let go = (gr.origin() / spacing).round() as i64;
        // r(s) = ∫ f(y + s) g(y) dy is linear between lattice lags;
        // node at lag k h: h Σ_q g[q] f[q + k - (fo - go)]
        let fs = fr.samples();
        let gs = gr.samples();
        let k_min = fo - go - gs.len() as i64;
        let k_max = fo - go + fs.len() as i64;
        let node = |k: i64| -> f64 {
            let mut s = 0.0;
            for (q, gv) in gs.iter().enumerate() {
                let p = q as i64 + k - (fo - go);
                if p >= 0 && (p as usize) < fs.len() {
                    s += gv * fs[p as usize];
                }
            }
            s * spacing
        };
        for k in k_min..k_max {
            let avg = 0.5 * (node(k) + node(k + 1));
            if avg != 0.0 {
                cells.push((k as f64 * spacing, spacing, avg));
            }
        }
    }
    let density = if cells.is_empty() {
        None
    } else {
        Some(rebin_cells(cells, spacing)?)
    };
    let measure = MixedMeasure::new(atoms, density)?;
    Ok(ConvolutionStructure {
        has_atoms: measure.has_atoms(),
        has_density: measure.has_density(),
        measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::sample;

    fn grid(values: &[f64], origin: f64, h: f64) -> GridFunction {
        GridFunction::new(origin, h, values.to_vec()).unwrap()
    }

    #[test]
    fn indicator_triangle() {
        let f = sample(&AnalyticFamily::Indicator { a: 0.5 }, (-1.0, 1.0), 8).unwrap();
        let c = autocorrelate(&f, Method::Direct).unwrap();
        for t in [-1.2, -0.7, -0.3, 0.0, 0.2, 0.55, 0.99, 1.5] {
            let expect = (1.0 - f64::abs(t)).max(0.0);
            assert!((c.at(t) - expect).abs() < 1e-14, "t={t}");
        }
        assert_eq!(c.peak(), 1.0);
    }

    #[test]
    fn gaussian_peak_matches_closed_form() {
        let fam = AnalyticFamily::Gaussian { b: 1.0 };
        let f = sample(&fam, fam.default_support(), 4001).unwrap();
        let c = autocorrelate(&f, Method::Fft).unwrap();
        assert!((c.peak() - (PI / 2.0).sqrt()).abs() < 1e-6);
        assert!((c.at(0.0) - 1.253_314_137_3).abs() < 1e-6);
    }

    #[test]
    fn single_cell_self_overlap() {
        let m = 0.3;
        let h = 0.25;
        let f = grid(&[0.0, m / h, 0.0], 0.0, h);
        let c = autocorrelate(&f, Method::Direct).unwrap();
        assert!((c.peak() - m * m / h).abs() < 1e-15);
    }

    #[test]
    fn direct_and_fft_agree() {
        let vals: Vec<f64> = (0..257).map(|k| ((k * 37 % 101) as f64 / 50.0).sin().abs()).collect();
        let f = grid(&vals, -0.4, 0.01);
        let d = autocorrelate(&f, Method::Direct).unwrap();
        let q = autocorrelate(&f, Method::Fft).unwrap();
        let peak = d.peak();
        for (a, b) in d.values().iter().zip(q.values()) {
            assert!((a - b).abs() <= 1e-9 * peak);
        }
    }

    #[test]
    fn mass_integral_and_min() {
        let f = grid(&[1.0, 2.0, 0.5], -0.2, 0.1);
        let c = autocorrelate(&f, Method::Direct).unwrap();
        let l1 = f.l1();
        assert!((c.mass() - l1 * l1).abs() < 1e-14);
        assert!((c.integral(-10.0, 10.0) - l1 * l1).abs() < 1e-14);
        let (t, v) = c.min_on(0.0, 1.0);
        assert_eq!(v, 0.0);
        assert!(t >= 0.3 - 1e-12);
    }

    #[test]
    fn gaussian_mean_of_triangle() {
        // f = 1_{[-1/2,1/2]}: ∫ (1-|t|)_+ (a/π)^{1/2} e^{-a t²} dt by quadrature
        let f = grid(&[1.0], -0.5, 1.0);
        let c = autocorrelate(&f, Method::Direct).unwrap();
        let a = 2.0 * PI;
        let reference = 2.0
            * quad::adaptive(|t| (1.0 - t) * (a / PI).sqrt() * (-a * t * t).exp(), 0.0, 1.0, &[], 1e-15, 100)
                .value;
        assert!((c.gaussian_mean(a) - reference).abs() < 1e-14);
    }

    #[test]
    fn analytic_gaussian_correlation() {
        let fam = AnalyticFamily::Gaussian { b: 1.0 };
        let c = analytic(&fam, 0.01, 100).unwrap();
        assert!((c.peak() - (PI / 2.0).sqrt()).abs() < 1e-15);
        assert!(analytic(&AnalyticFamily::BsExample, 0.1, 3).is_err());
    }

    #[test]
    fn singular_example_values() {
        let v1 = bs_autocorrelation(1.0).unwrap();
        assert!((v1.value - PI / 4.0).abs() < 1e-12);
        let near = bs_autocorrelation(1.0 - 1e-7).unwrap();
        assert!((near.value - PI / 4.0).abs() < 1e-4);
        assert!(bs_autocorrelation(0.0).unwrap().value.is_infinite());
        assert!(matches!(bs_autocorrelation(1.01), Err(Error::Domain { .. })));
        let a = bs_autocorrelation(0.3).unwrap();
        let b = bs_autocorrelation(-0.3).unwrap();
        assert!((a.value - b.value).abs() < 1e-8);
        assert!(a.error <= 1e-6);
    }

    #[test]
    fn singular_example_against_midpoint_rule_away_from_poles() {
        // at t = 0.5 the overlap [-1/2, 0] has one pole on each factor; a
        // graded substitution x = -1/2 + u², u² in [0, 1/2] gives an
        // independent check
        let t = 0.5;
        let direct = quad::adaptive(
            |u: f64| {
                let x = -0.5 + u * u;
                2.0 * u * bs_value(x) * bs_value(x + t)
            },
            0.0,
            0.5f64.sqrt(),
            &[0.5f64.sqrt() * 0.5f64.sqrt(), 0.25f64.sqrt()],
            1e-9,
            4000,
        );
        let v = bs_autocorrelation(t).unwrap();
        assert!((direct.value - v.value).abs() < 1e-4, "{} vs {}", direct.value, v.value);
    }

    #[test]
    fn periodize_indicator() {
        let g = sample(&AnalyticFamily::Indicator { a: 0.5 }, (-0.5, 0.5), 4).unwrap();
        let big = periodize(&g).unwrap();
        assert_eq!(big.support(), (-1.0, 1.0));
        assert!(big.samples().iter().all(|v| (v - 1.0).abs() < 1e-15));
        let cg = autocorrelate(&big, Method::Direct).unwrap();
        for t in [0.0, 0.3, 0.8, 1.0] {
            assert!((cg.at(t) - (2.0 - t)).abs() < 1e-14);
        }
    }

    #[test]
    fn dilation_identity_is_exact() {
        let f = grid(&[0.2, 1.0, 0.4, 0.9], -0.5, 0.25);
        let lambda = 0.8;
        let fl = dilate(&f, lambda).unwrap();
        let cf = autocorrelate(&f, Method::Direct).unwrap();
        let cl = autocorrelate(&fl, Method::Direct).unwrap();
        for k in 0..200 {
            let x = -1.3 + k as f64 * 0.013;
            assert!((cl.at(x) - cf.at(lambda * x) / lambda).abs() < 1e-12);
        }
    }

    #[test]
    fn mollify_preconditions() {
        let f = grid(&[1.0], -0.5, 1.0);
        assert!(dilate_mollify(&f, 0.9, 0.06).is_err());
        assert!(dilate_mollify(&f, 1.0, 0.01).is_err());
        assert!(dilate_mollify(&f, 0.9, 0.0).is_err());
        assert!(dilate_mollify(&f, 0.9, 0.05).is_ok());
    }

    #[test]
    fn measure_single_atom_and_pair() {
        let delta = MixedMeasure::new(vec![(0.0, 1.0)], None).unwrap();
        assert_eq!(measure_autocorrelate(&delta, -1e-3, 1e-3).unwrap(), 1.0);
        assert!(measure_autocorrelate(&delta, 0.1, 0.1).is_err());
        let pair = MixedMeasure::new(vec![(0.0, 1.0), (1.0, 1.0)], None).unwrap();
        let s = convolution_structure(&pair, &pair).unwrap();
        assert_eq!(s.measure.atoms(), &[(-1.0, 1.0), (0.0, 2.0), (1.0, 1.0)]);
        assert!(s.has_atoms && !s.has_density);
    }

    #[test]
    fn density_kills_atoms() {
        let d = grid(&[1.0, 1.0], -0.5, 0.5);
        let mu = MixedMeasure::from_density(d.clone());
        let nu = MixedMeasure::new(vec![(0.3, 2.0), (-0.1, 1.0)], Some(d.clone())).unwrap();
        for (a, b) in [(&mu, &nu), (&nu, &mu)] {
            let s = convolution_structure(a, b).unwrap();
            assert!(!s.has_atoms);
            assert!(s.has_density);
            let expect = a.total_variation() * b.total_variation();
            assert!((s.measure.total_variation() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_atom_preserves_structure() {
        let d = grid(&[1.0, 3.0], 0.0, 0.5);
        let mu = MixedMeasure::new(vec![(0.0, 1.0)], Some(d.clone())).unwrap();
        let delta = MixedMeasure::new(vec![(0.0, 1.0)], None).unwrap();
        let s = convolution_structure(&mu, &delta).unwrap();
        assert_eq!(s.measure.atoms(), &[(0.0, 1.0)]);
        let dens = s.measure.density().unwrap();
        for x in [0.1, 0.4, 0.6, 0.9, 1.2] {
            assert!((dens.eval(x) - d.eval(x)).abs() < 1e-12);
        }
    }
}
