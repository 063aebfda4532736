//! The four autocorrelation ratios: the interval mean and Gaussian mean
//! over `‖f‖₁‖f‖₂`, the minimum over `[-1/2, 1/2]` over `‖f‖₁‖f‖₂`, and
//! the minimum over `[0, 1]` over `‖f‖₁²`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::hy_coefficient;
use crate::correlate::{autocorrelate, bs_autocorrelation, bs_autocorrelation_many, Correlation, Method};
use crate::error::{positive, Error, Result};
use crate::funcspace::{bs_l1, sample, AnalyticFamily, GridFunction};
use crate::quad;
use crate::spectral::{mean_functional_fourier, Weight};

/// Proven ceiling of the interval-mean ratio.
pub const MEAN_CEILING: f64 = 0.8641;
/// Proven ceiling of the `[-1/2, 1/2]` minimum ratio.
pub const MIN12_CEILING: f64 = 0.829604;
/// Proven ceiling of the `[0, 1]` minimum ratio.
pub const MIN01_CEILING: f64 = 0.410767;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Functional {
    Mean,
    Gauss { a: f64 },
    Min12,
    Min01,
}

impl Functional {
    pub fn label(&self) -> &'static str {
        match self {
            Functional::Mean => "mean",
            Functional::Gauss { .. } => "gauss",
            Functional::Min12 => "min12",
            Functional::Min01 => "min01",
        }
    }

    /// Upper bound every ratio must respect.
    pub fn ceiling(&self) -> Result<f64> {
        Ok(match self {
            Functional::Mean => MEAN_CEILING,
            Functional::Gauss { a } => gauss_ceiling(*a)?,
            Functional::Min12 => MIN12_CEILING,
            Functional::Min01 => MIN01_CEILING,
        })
    }

    pub fn evaluate(&self, f: &GridFunction) -> Result<RatioResult> {
        match self {
            Functional::Mean => q_mean(f),
            Functional::Gauss { a } => q_gauss(f, *a),
            Functional::Min12 => q_min_12(f),
            Functional::Min01 => q_min_01(f),
        }
    }

    /// Evaluates and, for the two mean functionals, records the
    /// Fourier-side numerator as well.
    pub fn evaluate_both(&self, f: &GridFunction, tol: f64) -> Result<RatioResult> {
        let mut r = self.evaluate(f)?;
        let weight = match self {
            Functional::Mean => Weight::Interval,
            Functional::Gauss { a } => Weight::Gaussian { a: *a },
            _ => return Ok(r),
        };
        let e = mean_functional_fourier(f, &weight, tol)?;
        r.fourier_numerator = Some(e.value);
        r.fourier_error = Some(e.error);
        Ok(r)
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Functional {
    type Err = Error;

    /// Parses `mean`, `min12`, `min01`; `gauss` takes `a = 2π`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Functional::Mean),
            "gauss" => Ok(Functional::Gauss { a: 2.0 * PI }),
            "min12" => Ok(Functional::Min12),
            "min01" => Ok(Functional::Min01),
            other => Err(Error::Unsupported(format!("unknown functional `{other}`"))),
        }
    }
}

/// `g_2(a) = K_2 (a/(2π))^{1/4}`.
pub fn gauss_ceiling(a: f64) -> Result<f64> {
    positive("a", a)?;
    Ok(hy_coefficient(2.0)? * (a / (2.0 * PI)).powf(0.25))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub functional: String,
    pub method: String,
    pub value: f64,
    pub numerator: f64,
    pub l1: f64,
    /// `None` when `f ∉ L²`.
    pub l2: Option<f64>,
    pub error_estimate: f64,
    /// Lag attaining the minimum, for the two minimum functionals.
    pub argmin: Option<f64>,
    pub fourier_numerator: Option<f64>,
    pub fourier_error: Option<f64>,
}

impl RatioResult {
    fn new(functional: &str, method: &str, numerator: f64, l1: f64, l2: Option<f64>, error: f64) -> Self {
        let denom = match l2 {
            Some(l2) if functional != "min01" => l1 * l2,
            _ => l1 * l1,
        };
        Self {
            functional: functional.to_string(),
            method: method.to_string(),
            value: numerator / denom,
            numerator,
            l1,
            l2,
            error_estimate: error / denom,
            argmin: None,
            fourier_numerator: None,
            fourier_error: None,
        }
    }

    pub fn denominator(&self) -> f64 {
        match self.l2 {
            Some(l2) if self.functional != "min01" => self.l1 * l2,
            _ => self.l1 * self.l1,
        }
    }
}

fn prepare(f: &GridFunction) -> Result<Correlation> {
    if f.is_zero() {
        return Err(Error::ZeroFunction);
    }
    autocorrelate(f, if f.len() > 64 { Method::Fft } else { Method::Direct })
}

fn method_label(c: &Correlation) -> &'static str {
    match c.method() {
        Method::Fft => "fft",
        _ => "direct",
    }
}

/// Rounding allowance for a sum of `n` nonnegative terms.
fn rounding(value: f64, n: usize) -> f64 {
    4.0 * f64::EPSILON * value.abs() * (n as f64).log2().max(1.0)
}

/// Lipschitz margin `2‖f‖₁‖f‖_∞ h` for lattice minima.
fn lipschitz_margin(f: &GridFunction) -> f64 {
    2.0 * f.l1() * f.sup() * f.spacing()
}

/// `∫_{-1/2}^{1/2} f⋆f / (‖f‖₁‖f‖₂)`.
pub fn q_mean(f: &GridFunction) -> Result<RatioResult> {
    let c = prepare(f)?;
    let num = Weight::Interval.mean(&c);
    Ok(RatioResult::new("mean", method_label(&c), num, f.l1(), Some(f.l2()), rounding(num, f.len())))
}

/// `(a/π)^{1/2} ∫ f⋆f(t) e^{-at²} dt / (‖f‖₁‖f‖₂)`.
pub fn q_gauss(f: &GridFunction, a: f64) -> Result<RatioResult> {
    positive("a", a)?;
    let c = prepare(f)?;
    let num = Weight::Gaussian { a }.mean(&c);
    Ok(RatioResult::new("gauss", method_label(&c), num, f.l1(), Some(f.l2()), rounding(num, f.len())))
}

/// `min_{[-1/2,1/2]} f⋆f / (‖f‖₁‖f‖₂)`; by evenness taken over `[0, 1/2]`.
pub fn q_min_12(f: &GridFunction) -> Result<RatioResult> {
    let c = prepare(f)?;
    let (t, num) = c.min_on(0.0, 0.5);
    let mut r = RatioResult::new(
        "min12",
        method_label(&c),
        num,
        f.l1(),
        Some(f.l2()),
        lipschitz_margin(f) + rounding(c.peak(), f.len()),
    );
    r.argmin = Some(t);
    Ok(r)
}

/// Same as [`q_min_12`] but scanning the full symmetric window.
pub fn q_min_12_symmetric(f: &GridFunction) -> Result<RatioResult> {
    let c = prepare(f)?;
    let (t, num) = c.min_on(-0.5, 0.5);
    let mut r = RatioResult::new("min12", method_label(&c), num, f.l1(), Some(f.l2()), lipschitz_margin(f));
    r.argmin = Some(t);
    Ok(r)
}

/// `min_{[0,1]} f⋆f / ‖f‖₁²`.
pub fn q_min_01(f: &GridFunction) -> Result<RatioResult> {
    let c = prepare(f)?;
    let (t, num) = c.min_on(0.0, 1.0);
    let mut r = RatioResult::new(
        "min01",
        method_label(&c),
        num,
        f.l1(),
        Some(f.l2()),
        lipschitz_margin(f) + rounding(c.peak(), f.len()),
    );
    r.argmin = Some(t);
    Ok(r)
}

/// `min_{[0,1]} f⋆f / ‖f‖₁²` for the singular example, by per-lag
/// quadrature on a 101-point grid refined by golden section around the
/// smallest sample.
pub fn q_min_01_singular() -> Result<RatioResult> {
    let ts: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
    let values = bs_autocorrelation_many(&ts)?;
    let (best, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .expect("non-empty grid");
    let lo = ts[best.saturating_sub(1)];
    let hi = ts[(best + 1).min(ts.len() - 1)];
    let (t_ref, v_ref) = quad::golden_min(
        |t| bs_autocorrelation(t).map(|e| e.value).unwrap_or(f64::INFINITY),
        lo,
        hi,
        1e-8,
    );
    let (t, est) = if v_ref < values[best].value {
        (t_ref, bs_autocorrelation(t_ref)?)
    } else {
        (ts[best], values[best])
    };
    let l1 = bs_l1();
    let mut r = RatioResult::new("min01", "singular-quadrature", est.value, l1, None, est.error);
    r.argmin = Some(t);
    Ok(r)
}

/// Evaluates a functional on an analytic family. Indicator and
/// piecewise-constant inputs are exact step functions; the Gaussian is
/// sampled with `cells` midpoints on `support` (default `±(25/b)^{1/2}`).
/// The singular example supports only the `[0, 1]` minimum.
pub fn evaluate_family(
    family: &AnalyticFamily,
    functional: &Functional,
    support: Option<(f64, f64)>,
    cells: usize,
) -> Result<RatioResult> {
    family.validate()?;
    if family.is_singular() {
        return match functional {
            Functional::Min01 => q_min_01_singular(),
            other => Err(Error::Divergent(format!(
                "the `{other}` ratio needs ‖f‖₂ < ∞, which fails for {}",
                family.label()
            ))),
        };
    }
    let grid = match (family.to_grid(), support) {
        (Some(g), None) => g,
        _ => sample(family, support.unwrap_or_else(|| family.default_support()), cells)?,
    };
    functional.evaluate(&grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: &[f64], origin: f64, h: f64) -> GridFunction {
        GridFunction::new(origin, h, values.to_vec()).unwrap()
    }

    #[test]
    fn indicator_mean() {
        let f = AnalyticFamily::Indicator { a: 0.5 }.to_grid().unwrap();
        let r = q_mean(&f).unwrap();
        assert!((r.numerator - 0.75).abs() < 1e-15);
        assert!((r.value - 0.75).abs() < 1e-15);
        let wide = AnalyticFamily::Indicator { a: 5.0 }.to_grid().unwrap();
        let expect = 9.75 / (10.0 * 10f64.sqrt());
        assert!((q_mean(&wide).unwrap().value - expect).abs() < 1e-12);
    }

    #[test]
    fn value_is_numerator_over_denominator() {
        let f = grid(&[0.3, 1.0, 2.0, 0.1], -0.4, 0.2);
        for fun in [Functional::Mean, Functional::Gauss { a: 1.0 }, Functional::Min12, Functional::Min01] {
            let r = fun.evaluate(&f).unwrap();
            assert!((r.value - r.numerator / r.denominator()).abs() < 1e-12);
            assert!(r.error_estimate >= 0.0);
        }
    }

    #[test]
    fn zero_function_rejected() {
        let z = grid(&[0.0, 0.0], 0.0, 0.5);
        assert_eq!(q_mean(&z), Err(Error::ZeroFunction));
        assert_eq!(q_min_01(&z), Err(Error::ZeroFunction));
    }

    #[test]
    fn gaussian_lower_bound_attained() {
        let a = 2.0 * PI;
        let fam = AnalyticFamily::Gaussian { b: 2.0 * a };
        let r = evaluate_family(&fam, &Functional::Gauss { a }, None, 4096).unwrap();
        let expect = a.powf(0.25) / (PI.powf(0.25) * 2f64.sqrt());
        assert!((r.value - expect).abs() < 1e-6, "{} vs {expect}", r.value);
        assert!(r.value <= gauss_ceiling(a).unwrap());
    }

    #[test]
    fn indicator_time_and_fourier_agree() {
        let f = AnalyticFamily::Indicator { a: 0.5 }.to_grid().unwrap();
        let r = Functional::Gauss { a: 2.0 * PI }.evaluate_both(&f, 1e-10).unwrap();
        assert!((r.numerator - r.fourier_numerator.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn indicator_minima() {
        let f = AnalyticFamily::Indicator { a: 0.75 }.to_grid().unwrap();
        let r = q_min_12(&f).unwrap();
        assert!((r.numerator - 1.0).abs() < 1e-15);
        assert!((r.value - 1.5f64.powf(-1.5)).abs() < 1e-12);
        let quarter = AnalyticFamily::Indicator { a: 0.25 }.to_grid().unwrap();
        assert_eq!(q_min_12(&quarter).unwrap().value, 0.0);
        let half = AnalyticFamily::Indicator { a: 0.5 }.to_grid().unwrap();
        assert_eq!(q_min_01(&half).unwrap().value, 0.0);
    }

    #[test]
    fn gaussian_min01() {
        let fam = AnalyticFamily::Gaussian { b: 1.0 };
        let r = evaluate_family(&fam, &Functional::Min01, None, 8192).unwrap();
        let expect = (PI / 2.0).sqrt() * (-0.5f64).exp() / PI;
        assert!((r.value - expect).abs() < 1e-5, "{} vs {expect}", r.value);
        assert!((r.argmin.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_example_min01() {
        let r = evaluate_family(&AnalyticFamily::BsExample, &Functional::Min01, None, 0).unwrap();
        let floor = (PI / 4.0) / (11.0 * PI / 24.0).powi(2);
        assert!(r.value >= floor - 1e-3 && r.value <= floor + 1e-4, "{}", r.value);
        assert!(r.l2.is_none());
        assert!(evaluate_family(&AnalyticFamily::BsExample, &Functional::Mean, None, 0).is_err());
    }

    #[test]
    fn symmetric_window_matches_half_window() {
        let f = grid(&[0.3, 1.0, 0.0, 2.0, 0.1, 0.6], -0.7, 0.23);
        let a = q_min_12(&f).unwrap();
        let b = q_min_12_symmetric(&f).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
    }

    #[test]
    fn functional_names_round_trip() {
        for s in ["mean", "gauss", "min12", "min01"] {
            assert_eq!(s.parse::<Functional>().unwrap().label(), s);
        }
        assert!("max".parse::<Functional>().is_err());
    }
}
