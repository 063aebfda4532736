//! The standard bump `exp(-1/(1-x²))` on `[-1, 1]`, normalised to unit
//! mass, with tabulated first and second antiderivatives.

use std::sync::OnceLock;

use crate::quad::GaussLegendre;

const TABLE_INTERVALS: usize = 4096;

/// Unnormalised bump.
pub fn raw(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

pub struct BumpTables {
    /// `∫_{-1}^{1} raw`.
    pub norm: f64,
    step: f64,
    density: Vec<f64>,
    cdf: Vec<f64>,
    cdf2: Vec<f64>,
}

impl BumpTables {
    fn build() -> Self {
        let n = TABLE_INTERVALS;
        let step = 2.0 / n as f64;
        let rule = GaussLegendre::g16();
        let mut raw_cdf = vec![0.0; n + 1];
        for i in 0..n {
            let a = -1.0 + i as f64 * step;
            raw_cdf[i + 1] = raw_cdf[i] + rule.integrate(raw, a, a + step);
        }
        let norm = raw_cdf[n];
        let density: Vec<f64> = (0..=n).map(|i| raw(-1.0 + i as f64 * step) / norm).collect();
        let cdf: Vec<f64> = raw_cdf.iter().map(|v| v / norm).collect();
        let mut cdf2 = vec![0.0; n + 1];
        for i in 0..n {
            // exact integral of the cubic Hermite interpolant of the cdf
            cdf2[i + 1] = cdf2[i]
                + 0.5 * step * (cdf[i] + cdf[i + 1])
                + step * step / 12.0 * (density[i] - density[i + 1]);
        }
        Self {
            norm,
            step,
            density,
            cdf,
            cdf2,
        }
    }

    pub fn get() -> &'static BumpTables {
        static TABLES: OnceLock<BumpTables> = OnceLock::new();
        TABLES.get_or_init(BumpTables::build)
    }

    pub fn density(&self, x: f64) -> f64 {
        raw(x) / self.norm
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let s = (u + 1.0) / self.step;
        let i = (s.floor() as usize).min(TABLE_INTERVALS - 1);
        (i, s - i as f64)
    }

    /// `Ψ(u) = ∫_{-1}^{u} ψ`.
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let (i, s) = self.locate(u);
        hermite(self.cdf[i], self.cdf[i + 1], self.density[i], self.density[i + 1], self.step, s)
    }

    /// `Ψ₂(u) = ∫_{-1}^{u} Ψ`; equals `u` for `u >= 1`.
    pub fn cdf2(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return u;
        }
        let (i, s) = self.locate(u);
        hermite(self.cdf2[i], self.cdf2[i + 1], self.cdf[i], self.cdf[i + 1], self.step, s)
    }
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    #[test]
    fn normalisation_matches_adaptive_quadrature() {
        let t = BumpTables::get();
        let z = quad::adaptive(raw, -1.0, 1.0, &[], 1e-15, 200).value;
        assert!((t.norm - z).abs() < 1e-14, "{} vs {z}", t.norm);
    }

    #[test]
    fn antiderivatives_are_consistent() {
        let t = BumpTables::get();
        assert!((t.cdf(0.0) - 0.5).abs() < 1e-13);
        assert!((t.cdf2(1.0 - 1e-12) - 1.0).abs() < 1e-10);
        for u in [-0.9, -0.3, 0.1, 0.55, 0.97] {
            assert!((t.cdf(u) + t.cdf(-u) - 1.0).abs() < 1e-12);
            let direct = quad::adaptive(|s| t.density(s), -1.0, u, &[], 1e-15, 200).value;
            assert!((t.cdf(u) - direct).abs() < 1e-12);
            let direct2 = quad::adaptive(|s| t.cdf(s), -1.0, u, &[], 1e-14, 200).value;
            assert!((t.cdf2(u) - direct2).abs() < 1e-11);
        }
    }
}
