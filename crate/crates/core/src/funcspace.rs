//! Test functions and measures: sampled step functions, closed-form
//! families and atoms-plus-density measures.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::quad;

/// Relative size above which clamping a negative sample is reported.
pub const CLAMP_WARN_RELATIVE: f64 = 1e-12;

/// A nonnegative step function: `samples[k]` is the value on the cell
/// `[origin + k h, origin + (k+1) h)`.
///
/// Every quantity derived from a `GridFunction` (norms, correlation,
/// Fourier transform) is computed for this step function exactly, so the
/// grid is itself an admissible test function and not only an
/// approximation of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    origin: f64,
    spacing: f64,
    samples: Vec<f64>,
}

impl GridFunction {
    /// Strict constructor: negative or non-finite samples are rejected.
    pub fn new(origin: f64, spacing: f64, samples: Vec<f64>) -> Result<Self> {
        Self::check_frame(origin, spacing, &samples)?;
        if let Some((i, v)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidGrid(format!("sample {i} = {v} is not a finite nonnegative value")));
        }
        Ok(Self {
            origin,
            spacing,
            samples,
        })
    }

    /// Constructor for samples produced by arithmetic (mollification,
    /// rebinning, FFT output). Negative values are clamped to zero; a clamp
    /// larger than [`CLAMP_WARN_RELATIVE`] times the largest sample is
    /// logged.
    pub fn from_arithmetic(origin: f64, spacing: f64, mut samples: Vec<f64>) -> Result<Self> {
        Self::check_frame(origin, spacing, &samples)?;
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite sample".into()));
        }
        let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = samples.iter().fold(0.0f64, |m, v| m.min(*v));
        if worst < 0.0 && -worst > CLAMP_WARN_RELATIVE * scale {
            log::warn!(
                "clamping negative samples to zero (worst {worst:e}, relative {:e})",
                -worst / scale
            );
        }
        for v in &mut samples {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self {
            origin,
            spacing,
            samples,
        })
    }

    fn check_frame(origin: f64, spacing: f64, samples: &[f64]) -> Result<()> {
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing {spacing} must be > 0")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidGrid("no samples".into()));
        }
        Ok(())
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `[origin, origin + n h]`.
    pub fn support(&self) -> (f64, f64) {
        (self.origin, self.origin + self.samples.len() as f64 * self.spacing)
    }

    pub fn width(&self) -> f64 {
        self.samples.len() as f64 * self.spacing
    }

    pub fn cell_center(&self, k: usize) -> f64 {
        self.origin + (k as f64 + 0.5) * self.spacing
    }

    pub fn l1(&self) -> f64 {
        self.spacing * quad::pairwise_sum(&self.samples)
    }

    pub fn l2(&self) -> f64 {
        let sq: Vec<f64> = self.samples.iter().map(|v| v * v).collect();
        (self.spacing * quad::pairwise_sum(&sq)).sqrt()
    }

    pub fn norms(&self) -> (f64, f64) {
        (self.l1(), self.l2())
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().fold(0.0, |m: f64, v| m.max(*v))
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|v| *v == 0.0)
    }

    /// Value of the step function at `x` (zero outside the window).
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.origin) / self.spacing;
        if u < 0.0 {
            return 0.0;
        }
        let k = u.floor() as usize;
        self.samples.get(k).copied().unwrap_or(0.0)
    }

    /// Exact integral of the step function over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let (a, b) = self.support();
        let lo = lo.max(a);
        let hi = hi.min(b);
        if hi <= lo {
            return 0.0;
        }
        let h = self.spacing;
        let n = self.samples.len();
        let first = (((lo - a) / h).floor() as usize).min(n - 1);
        let last = (((hi - a) / h).ceil() as usize).clamp(first + 1, n);
        let mut s = 0.0;
        for k in first..last {
            let c0 = a + k as f64 * h;
            let overlap = (hi.min(c0 + h) - lo.max(c0)).max(0.0);
            s += self.samples[k] * overlap;
        }
        s
    }

    /// Same grid, samples multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: c,
                reason: "scale must be finite and >= 0",
            });
        }
        Ok(Self {
            origin: self.origin,
            spacing: self.spacing,
            samples: self.samples.iter().map(|v| v * c).collect(),
        })
    }

    /// Jump locations and sizes of the step function, including the
    /// outer edges (used for Fourier tail bounds).
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.samples.len() + 1);
        let mut prev = 0.0;
        for (k, v) in self.samples.iter().enumerate() {
            if *v != prev {
                out.push((self.origin + k as f64 * self.spacing, v - prev));
            }
            prev = *v;
        }
        if prev != 0.0 {
            out.push((self.support().1, -prev));
        }
        out
    }

    /// Total variation of the step function on the real line.
    pub fn total_variation(&self) -> f64 {
        self.jumps().iter().map(|(_, j)| j.abs()).sum()
    }

    /// Mass-preserving rebinning onto the lattice `{k h}`; cells of the
    /// result are `[k h, (k+1) h)`.
    pub fn rebin(&self, spacing: f64) -> Result<Self> {
        rebin_cells(
            self.samples
                .iter()
                .enumerate()
                .map(|(k, v)| (self.origin + k as f64 * self.spacing, self.spacing, *v)),
            spacing,
        )
    }
}

/// Deposit step-function cells `(left edge, width, value)` onto the
/// lattice `{k h}` preserving mass.
pub(crate) fn rebin_cells<I>(cells: I, spacing: f64) -> Result<GridFunction>
where
    I: IntoIterator<Item = (f64, f64, f64)>,
{
    positive("spacing", spacing)?;
    let cells: Vec<(f64, f64, f64)> = cells.into_iter().filter(|c| c.2 != 0.0 && c.1 > 0.0).collect();
    if cells.is_empty() {
        return GridFunction::new(0.0, spacing, vec![0.0]);
    }
    let lo = cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let hi = cells.iter().map(|c| c.0 + c.1).fold(f64::NEG_INFINITY, f64::max);
    let k0 = (lo / spacing).floor() as i64;
    let k1 = (hi / spacing).ceil() as i64;
    let n = ((k1 - k0).max(1)) as usize;
    let mut mass = vec![0.0; n];
    for (left, width, value) in cells {
        let right = left + width;
        let first = ((left / spacing).floor() as i64).max(k0);
        let last = ((right / spacing).ceil() as i64).min(k1);
        for k in first..last {
            let c0 = k as f64 * spacing;
            let overlap = (right.min(c0 + spacing) - left.max(c0)).max(0.0);
            mass[(k - k0) as usize] += value * overlap;
        }
    }
    let samples = mass.into_iter().map(|m| m / spacing).collect();
    GridFunction::from_arithmetic(k0 as f64 * spacing, spacing, samples)
}

/// Closed-form families of nonnegative test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalyticFamily {
    /// `exp(-b x²)`.
    Gaussian { b: f64 },
    /// `1_{[-A, A]}`.
    Indicator {
        #[serde(alias = "A")]
        a: f64,
    },
    /// Equal cells on `[-S, S]` with the given values.
    PiecewiseConstant { half_width: f64, values: Vec<f64> },
    /// `1_{[-1/2,1/2]}/sqrt(1-4x²) - 1_{[-1/4,1/4]}/(4 sqrt(1-4x²))`.
    BsExample,
}

impl AnalyticFamily {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Indicator { .. } => "indicator",
            Self::PiecewiseConstant { .. } => "piecewise-constant",
            Self::BsExample => "bs-example",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { b } => positive("b", *b).map(drop),
            Self::Indicator { a } => positive("A", *a).map(drop),
            Self::PiecewiseConstant { half_width, values } => {
                positive("S", *half_width)?;
                if values.is_empty() {
                    return Err(Error::InvalidGrid("piecewise-constant family needs at least one cell".into()));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidGrid("cell values must be finite and >= 0".into()));
                }
                Ok(())
            }
            Self::BsExample => Ok(()),
        }
    }

    /// True for families whose integrals must not be taken from grid samples.
    pub fn is_singular(&self) -> bool {
        matches!(self, Self::BsExample)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian { b } => (-b * x * x).exp(),
            Self::Indicator { a } => {
                if x.abs() <= *a {
                    1.0
                } else {
                    0.0
                }
            }
            Self::PiecewiseConstant { half_width, values } => {
                let h = 2.0 * half_width / values.len() as f64;
                let u = (x + half_width) / h;
                if u < 0.0 {
                    0.0
                } else {
                    values.get(u.floor() as usize).copied().unwrap_or(0.0)
                }
            }
            Self::BsExample => bs_value(x),
        }
    }

    /// Exact (or quadrature-certified for the singular family) L¹ norm.
    pub fn l1(&self) -> f64 {
        match self {
            Self::Gaussian { b } => (PI / b).sqrt(),
            Self::Indicator { a } => 2.0 * a,
            Self::PiecewiseConstant { half_width, values } => {
                2.0 * half_width / values.len() as f64 * values.iter().sum::<f64>()
            }
            Self::BsExample => bs_l1(),
        }
    }

    /// Exact L² norm; `None` when the function is not square integrable.
    pub fn l2(&self) -> Option<f64> {
        match self {
            Self::Gaussian { b } => Some((PI / (2.0 * b)).powf(0.25)),
            Self::Indicator { a } => Some((2.0 * a).sqrt()),
            Self::PiecewiseConstant { half_width, values } => Some(
                (2.0 * half_width / values.len() as f64 * values.iter().map(|v| v * v).sum::<f64>())
                    .sqrt(),
            ),
            Self::BsExample => None,
        }
    }

    /// Window used when no support is given. Gaussians are cut at
    /// `sqrt(25/b)`, where the neglected tail mass is below 1e-10.
    pub fn default_support(&self) -> (f64, f64) {
        match self {
            Self::Gaussian { b } => {
                let s = (25.0 / b).sqrt();
                (-s, s)
            }
            Self::Indicator { a } => (-a, *a),
            Self::PiecewiseConstant { half_width, .. } => (-half_width, *half_width),
            Self::BsExample => (-0.5, 0.5),
        }
    }

    /// The family as an exact step function, when it is one.
    pub fn to_grid(&self) -> Option<GridFunction> {
        match self {
            Self::Indicator { a } => GridFunction::new(-a, 2.0 * a, vec![1.0]).ok(),
            Self::PiecewiseConstant { half_width, values } => GridFunction::new(
                -half_width,
                2.0 * half_width / values.len() as f64,
                values.clone(),
            )
            .ok(),
            _ => None,
        }
    }
}

fn bs_weight(x: f64) -> f64 {
    if x.abs() <= 0.25 {
        0.75
    } else {
        1.0
    }
}

pub(crate) fn bs_value(x: f64) -> f64 {
    if x.abs() >= 0.5 {
        return 0.0;
    }
    bs_weight(x) / (1.0 - 4.0 * x * x).sqrt()
}

/// `∫ f` for the singular example, via `x = sin(u)/2` which turns the
/// integrand into the bounded step `w(sin(u)/2)/2`.
pub fn bs_l1() -> f64 {
    let brk = PI / 6.0;
    quad::adaptive(
        |u: f64| 0.5 * bs_weight(0.5 * u.sin()),
        -PI / 2.0,
        PI / 2.0,
        &[-brk, brk],
        1e-14,
        64,
    )
    .value
}

/// Midpoint samples of `family` on `cells` equal cells of `support`.
pub fn sample(family: &AnalyticFamily, support: (f64, f64), cells: usize) -> Result<GridFunction> {
    family.validate()?;
    if cells < 2 {
        return Err(Error::InvalidParameter {
            name: "cells",
            value: cells as f64,
            reason: "need at least 2 cells",
        });
    }
    let (lo, hi) = support;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidGrid(format!("bad support [{lo}, {hi}]")));
    }
    if family.is_singular() && (lo > -0.5 || hi < 0.5) {
        return Err(Error::Precondition("support must contain [-1/2, 1/2] for the singular example".into()));
    }
    let h = (hi - lo) / cells as f64;
    let samples = (0..cells)
        .map(|k| family.eval(lo + (k as f64 + 0.5) * h))
        .collect();
    GridFunction::new(lo, h, samples)
}

/// A finite nonnegative measure: point masses plus an optional step density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<GridFunction>,
}

impl MixedMeasure {
    /// Atoms are sorted and equal locations merged.
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<GridFunction>) -> Result<Self> {
        for (x, m) in &atoms {
            if !x.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom location {x} is not finite")));
            }
            if !(m.is_finite() && *m >= 0.0) {
                return Err(Error::InvalidMeasure(format!("atom mass {m} must be finite and >= 0")));
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, m) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += m,
                _ => merged.push((x, m)),
            }
        }
        Ok(Self {
            atoms: merged,
            density,
        })
    }

    pub fn from_density(density: GridFunction) -> Self {
        Self {
            atoms: Vec::new(),
            density: Some(density),
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&GridFunction> {
        self.density.as_ref()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.atom_mass() + self.density.as_ref().map_or(0.0, GridFunction::l1)
    }

    pub fn has_atoms(&self) -> bool {
        self.atoms.iter().any(|a| a.1 > 0.0)
    }

    pub fn has_density(&self) -> bool {
        self.density.as_ref().is_some_and(|d| !d.is_zero())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let density = match &self.density {
            Some(d) => Some(d.scaled(c)?),
            None => None,
        };
        Self::new(self.atoms.iter().map(|(x, m)| (*x, m * c)).collect(), density)
    }
}
