//! Truncated cosine-basis semigroup and its promotion to a two-time cocycle.
//!
//! The dynamics are diagonal in the basis e_0 = 1, e_n(y) = sqrt(2) cos(n pi y):
//! mode n decays by e^{-n^2 pi^2 T}. The cocycle feeds the base-point
//! integral I(x, t - s) into the semigroup clock, translating the base point
//! at composition so the two-time law chains through the shared cumulative.
//! Everything happens in coefficient space; synthesizing point values is a
//! separate, lossy sampling step for display.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::base_space::{semiflow, BasePoint};
use crate::cocycles::integrate_base;
use crate::error::{require_ordered, require_ordered3, Error, Result};
use crate::logspace::exact_sum;

pub const DEFAULT_N_MODES: usize = 32;

/// Coefficients in the cosine basis; norm^2 = sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVector {
    pub coefficients: Vec<f64>,
}

impl ModeVector {
    pub fn new(coefficients: Vec<f64>) -> Self {
        ModeVector { coefficients }
    }

    pub fn basis(n: usize, n_modes: usize) -> Self {
        let mut c = vec![0.0; n_modes];
        c[n] = 1.0;
        ModeVector { coefficients: c }
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Pointwise synthesis v(y) = a_0 + sum a_n sqrt(2) cos(n pi y).
    pub fn sample(&self, y: f64) -> f64 {
        let mut v = 0.0;
        for (n, &a) in self.coefficients.iter().enumerate() {
            v += if n == 0 { a } else { a * 2.0f64.sqrt() * (n as f64 * PI * y).cos() };
        }
        v
    }
}

/// S(T): mode n scaled by e^{-n^2 pi^2 T}.
pub fn semigroup_apply(v: &ModeVector, t: f64) -> Result<ModeVector> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("semigroup time must be >= 0, got {t}")));
    }
    let coefficients = v
        .coefficients
        .iter()
        .enumerate()
        .map(|(n, &a)| a * (-((n * n) as f64) * PI * PI * t).exp())
        .collect();
    Ok(ModeVector { coefficients })
}

/// Cocycle over the translate semiflow: mode n scaled by
/// e^{-n^2 pi^2 I(x, t - s)}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralCocycle {
    pub n_modes: usize,
}

impl SpectralCocycle {
    pub fn new(n_modes: usize) -> Self {
        SpectralCocycle { n_modes }
    }

    pub fn apply(&self, t: f64, s: f64, x: &BasePoint, v: &ModeVector) -> Result<ModeVector> {
        require_ordered(t, s)?;
        let clock = integrate_base(x, t - s)?;
        semigroup_apply(v, clock)
    }

    /// Worst per-mode log-magnitude discrepancy of the two-time composition
    /// law, with shared terms cancelled exactly.
    pub fn compose_residual(
        &self,
        t: f64,
        s: f64,
        t0: f64,
        x: &BasePoint,
        v: &ModeVector,
    ) -> Result<f64> {
        require_ordered3(t, s, t0)?;
        let mid = semiflow(s, t0, x)?;
        let mut worst = 0.0f64;
        for (n, &a) in v.coefficients.iter().enumerate() {
            if a == 0.0 || n == 0 {
                continue; // mode 0 is untouched on every path
            }
            let rate = -((n * n) as f64) * PI * PI;
            let mut terms = Vec::with_capacity(8);
            push_clock_terms(&mut terms, rate, &mid, t - s)?;
            push_clock_terms(&mut terms, rate, x, s - t0)?;
            let mut rhs = Vec::with_capacity(4);
            push_clock_terms(&mut rhs, rate, x, t - t0)?;
            terms.extend(rhs.iter().map(|term| -term));
            worst = worst.max(exact_sum(&terms).abs());
        }
        Ok(worst)
    }
}

fn push_clock_terms(out: &mut Vec<f64>, rate: f64, x: &BasePoint, delta: f64) -> Result<()> {
    if delta < 0.0 {
        return Err(Error::Domain("negative clock advance".into()));
    }
    if x.is_limit_point() {
        out.push(rate * (x.generator.limit() * delta));
    } else {
        out.push(rate * x.generator.cumulative(x.offset + delta));
        out.push(-(rate * x.generator.cumulative(x.offset)));
    }
    Ok(())
}

/// Sample v(t, y) on a rectangular display grid by advancing the cocycle
/// from the initial coefficients; rows are times, columns are positions.
pub fn sample_evolution(
    cocycle: &SpectralCocycle,
    x: &BasePoint,
    v0: &ModeVector,
    times: &[f64],
    ys: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let vt = cocycle.apply(t, 0.0, x, v0)?;
        rows.push(ys.iter().map(|&y| vt.sample(y)).collect());
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_space::GeneratorSpec;

    fn x0() -> BasePoint {
        BasePoint::new(GeneratorSpec::default_gallery(), 0.0).unwrap()
    }

    #[test]
    fn mode_zero_unchanged() {
        let v = ModeVector::basis(0, 4);
        let w = semigroup_apply(&v, 9.0).unwrap();
        assert_eq!(w.coefficients[0], 1.0);
    }

    #[test]
    fn mode_one_decay_value() {
        let v = ModeVector::basis(1, 4);
        let w = semigroup_apply(&v, 0.1).unwrap();
        let expect = (-PI * PI * 0.1).exp();
        assert!((w.coefficients[1] - expect).abs() < 1e-12);
        assert!((expect - 0.372708).abs() < 1e-6);
    }

    #[test]
    fn semigroup_law_additive() {
        let v = ModeVector::new(vec![0.3, -1.0, 0.5, 0.2]);
        let a = semigroup_apply(&semigroup_apply(&v, 0.3).unwrap(), 0.7).unwrap();
        let b = semigroup_apply(&v, 1.0).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_time_rejected() {
        assert!(semigroup_apply(&ModeVector::basis(1, 2), -0.1).is_err());
    }

    #[test]
    fn constant_limit_point_matches_semigroup() {
        let x = BasePoint::at_infinity(GeneratorSpec::default_gallery());
        let c = SpectralCocycle::new(4);
        let v = ModeVector::basis(1, 4);
        let via_cocycle = c.apply(0.1, 0.0, &x, &v).unwrap();
        let direct = semigroup_apply(&v, 0.1).unwrap();
        assert!((via_cocycle.coefficients[1] - direct.coefficients[1]).abs() < 1e-15);
    }

    #[test]
    fn identity_at_equal_times() {
        let c = SpectralCocycle::new(6);
        let v = ModeVector::new(vec![1.0, 0.5, -0.25, 0.0, 2.0, -1.0]);
        let w = c.apply(3.0, 3.0, &x0(), &v).unwrap();
        assert_eq!(w, v);
    }

    #[test]
    fn cocycle_law_residual_small() {
        let c = SpectralCocycle::new(8);
        let v = ModeVector::new(vec![0.1, 1.0, -0.2, 0.7, 0.0, 0.3, -0.5, 0.05]);
        let r = c.compose_residual(2.0, 1.0, 0.0, &x0(), &v).unwrap();
        assert!(r <= 1e-9, "residual {r}");
    }

    #[test]
    fn norm_never_grows() {
        let c = SpectralCocycle::new(8);
        let v = ModeVector::new(vec![0.3, 1.0, -2.0, 0.7, 0.2, -0.1, 0.0, 0.9]);
        for (t, s) in [(0.5, 0.0), (3.0, 1.0), (10.0, 10.0), (60.0, 2.0)] {
            let w = c.apply(t, s, &x0(), &v).unwrap();
            assert!(w.norm() <= v.norm() + 1e-12);
        }
    }

    #[test]
    fn synthesis_matches_basis_definition() {
        let v = ModeVector::new(vec![1.0, 2.0, 0.0]);
        let y = 0.25;
        let expect = 1.0 + 2.0 * 2.0f64.sqrt() * (PI * y).cos();
        assert!((v.sample(y) - expect).abs() < 1e-14);
    }
}
