//! Evolution cocycles as per-component log-magnitude laws.
//!
//! Component k of the cocycle applied to (t, s, x, v) has log-magnitude
//!
//! ```text
//!   h_k(t) - h_k(s) + c_k * I(x, t - s) + shift * (t - s) + ln |v_k|
//! ```
//!
//! where I(x, delta) integrates the base point over [0, delta] through the
//! generator's cumulative, so splits of an interval are additive by
//! construction. The composition law is checked with an error-free sum over
//! the two evaluation paths' terms: differences that cancel algebraically
//! cancel exactly, and what remains is genuine composition error.

use crate::base_space::{semiflow, BasePoint};
use crate::error::{require_ordered, require_ordered3, Error, Result};
use crate::expr::ScalarFn;
use crate::logspace::{exact_sum, log_add_exp, LogScalar};

/// Vector in the two-dimensional state space with the norm |v1| + |v2|.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StateVector {
    pub v1: f64,
    pub v2: f64,
}

impl StateVector {
    pub const E1: StateVector = StateVector { v1: 1.0, v2: 0.0 };
    pub const E2: StateVector = StateVector { v1: 0.0, v2: 1.0 };
    pub const ONES: StateVector = StateVector { v1: 1.0, v2: 1.0 };

    pub fn new(v1: f64, v2: f64) -> Self {
        StateVector { v1, v2 }
    }

    pub fn component(&self, k: usize) -> f64 {
        match k {
            0 => self.v1,
            1 => self.v2,
            _ => panic!("component index out of range"),
        }
    }

    pub fn norm_l1(&self) -> f64 {
        self.v1.abs() + self.v2.abs()
    }
}

/// Log-space image of a state vector under a cocycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVector {
    pub c1: LogScalar,
    pub c2: LogScalar,
}

impl LogVector {
    pub fn from_state(v: &StateVector) -> Self {
        LogVector { c1: LogScalar::from_f64(v.v1), c2: LogScalar::from_f64(v.v2) }
    }

    pub fn component(&self, k: usize) -> LogScalar {
        match k {
            0 => self.c1,
            1 => self.c2,
            _ => panic!("component index out of range"),
        }
    }

    /// log(|c1| + |c2|).
    pub fn log_norm_l1(&self) -> f64 {
        log_add_exp(self.c1.log_abs, self.c2.log_abs)
    }

    pub fn is_zero(&self) -> bool {
        self.c1.is_zero() && self.c2.is_zero()
    }
}

/// Diagonal evolution cocycle over the translate semiflow.
#[derive(Debug, Clone)]
pub struct DiagonalCocycle {
    pub h1: ScalarFn,
    pub h2: ScalarFn,
    pub c1: f64,
    pub c2: f64,
    pub shift_lambda: f64,
}

impl DiagonalCocycle {
    pub fn new(h1: ScalarFn, h2: ScalarFn, c1: f64, c2: f64) -> Self {
        DiagonalCocycle { h1, h2, c1, c2, shift_lambda: 0.0 }
    }

    fn h(&self, k: usize) -> &ScalarFn {
        match k {
            0 => &self.h1,
            1 => &self.h2,
            _ => panic!("component index out of range"),
        }
    }

    fn c(&self, k: usize) -> f64 {
        match k {
            0 => self.c1,
            1 => self.c2,
            _ => panic!("component index out of range"),
        }
    }

    /// Log of the component-k magnification factor of Phi(t, s, x).
    pub fn log_factor(&self, k: usize, t: f64, s: f64, x: &BasePoint) -> Result<f64> {
        require_ordered(t, s)?;
        let integral = integrate_base(x, t - s)?;
        Ok(self.h(k).eval(t) - self.h(k).eval(s) + self.c(k) * integral + self.shift_lambda * (t - s))
    }

    /// The additive terms making up `log_factor`, kept separate so that the
    /// composition residual can cancel shared terms exactly.
    fn log_factor_terms(&self, k: usize, t: f64, s: f64, x: &BasePoint, out: &mut Vec<f64>) -> Result<()> {
        require_ordered(t, s)?;
        out.push(self.h(k).eval(t));
        out.push(-self.h(k).eval(s));
        let c = self.c(k);
        if x.is_limit_point() {
            out.push(c * (x.generator.limit() * (t - s)));
        } else {
            out.push(c * x.generator.cumulative(x.offset + (t - s)));
            out.push(-(c * x.generator.cumulative(x.offset)));
        }
        if self.shift_lambda != 0.0 {
            out.push(self.shift_lambda * (t - s));
        }
        Ok(())
    }
}

/// I(x, delta) = integral of the translate x over [0, delta].
pub fn integrate_base(x: &BasePoint, delta: f64) -> Result<f64> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::Domain(format!("integration length must be >= 0, got {delta}")));
    }
    if x.is_limit_point() {
        return Ok(x.generator.limit() * delta);
    }
    Ok(x.generator.cumulative(x.offset + delta) - x.generator.cumulative(x.offset))
}

/// Apply the cocycle: component k of Phi(t, s, x) v as a signed log scalar.
pub fn apply(cocycle: &DiagonalCocycle, t: f64, s: f64, x: &BasePoint, v: &StateVector) -> Result<LogVector> {
    require_ordered(t, s)?;
    let mut comps = [LogScalar::ZERO; 2];
    for (k, slot) in comps.iter_mut().enumerate() {
        let vk = v.component(k);
        if vk == 0.0 {
            continue;
        }
        let base = LogScalar::from_f64(vk);
        *slot = base.scale_log(cocycle.log_factor(k, t, s, x)?);
    }
    Ok(LogVector { c1: comps[0], c2: comps[1] })
}

/// Additive change of exponent: the shifted cocycle multiplies every
/// magnitude by e^{lambda (t - s)}.
pub fn shift(cocycle: &DiagonalCocycle, lambda: f64) -> DiagonalCocycle {
    let mut shifted = cocycle.clone();
    shifted.shift_lambda += lambda;
    shifted
}

/// A semiflow/cocycle pair acting on base x state space.
#[derive(Debug, Clone)]
pub struct SkewEvolution {
    pub cocycle: DiagonalCocycle,
}

impl SkewEvolution {
    pub fn new(cocycle: DiagonalCocycle) -> Self {
        SkewEvolution { cocycle }
    }

    /// Full action: (advanced base point, transported state vector).
    pub fn act(&self, t: f64, s: f64, x: &BasePoint, v: &StateVector) -> Result<(BasePoint, LogVector)> {
        let y = semiflow(t, s, x)?;
        let w = apply(&self.cocycle, t, s, x, v)?;
        Ok((y, w))
    }

    pub fn shifted(&self, lambda: f64) -> SkewEvolution {
        SkewEvolution { cocycle: shift(&self.cocycle, lambda) }
    }
}

/// Worst per-component log-magnitude discrepancy between
/// Phi(t, s, phi(s, t0, x)) Phi(s, t0, x) v and Phi(t, t0, x) v.
///
/// Zero components on both sides count as zero discrepancy; a component that
/// is zero on one side only reports the magnitude that should have vanished.
pub fn compose_residual(
    skew: &SkewEvolution,
    t: f64,
    s: f64,
    t0: f64,
    x: &BasePoint,
    v: &StateVector,
) -> Result<f64> {
    require_ordered3(t, s, t0)?;
    let mid = semiflow(s, t0, x)?;
    let cocycle = &skew.cocycle;
    let mut worst = 0.0f64;
    let mut terms: Vec<f64> = Vec::with_capacity(16);
    for k in 0..2 {
        if v.component(k) == 0.0 {
            continue;
        }
        terms.clear();
        cocycle.log_factor_terms(k, t, s, &mid, &mut terms)?;
        cocycle.log_factor_terms(k, s, t0, x, &mut terms)?;
        let mut rhs: Vec<f64> = Vec::with_capacity(8);
        cocycle.log_factor_terms(k, t, t0, x, &mut rhs)?;
        terms.extend(rhs.iter().map(|term| -term));
        worst = worst.max(exact_sum(&terms).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_space::GeneratorSpec;
    use crate::expr::ExprTerm;

    fn x0() -> BasePoint {
        BasePoint::new(GeneratorSpec::default_gallery(), 0.0).unwrap()
    }

    fn two_exponent(a1: f64, a2: f64) -> DiagonalCocycle {
        DiagonalCocycle::new(ScalarFn::zero(), ScalarFn::zero(), a1, a2)
    }

    #[test]
    fn integral_closed_form() {
        let x = x0();
        assert_eq!(integrate_base(&x, 0.0).unwrap(), 0.0);
        let i1 = integrate_base(&x, 1.0).unwrap();
        assert!((i1 - (2.0 - (-1.0f64).exp())).abs() < 1e-14);
        let i2 = integrate_base(&x, 2.0).unwrap();
        assert!((i2 - (3.0 - (-2.0f64).exp())).abs() < 1e-14);
        // additivity through the translate
        let x1 = semiflow(1.0, 0.0, &x).unwrap();
        let split = i1 + integrate_base(&x1, 1.0).unwrap();
        assert!((split - i2).abs() < 1e-12);
    }

    #[test]
    fn integral_rejects_negative_length() {
        assert!(matches!(integrate_base(&x0(), -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn integral_within_monotone_bounds() {
        let gen = GeneratorSpec::default_gallery();
        for off in [0.0, 0.7, 3.0, f64::INFINITY] {
            let x = BasePoint { generator: std::sync::Arc::clone(&gen), offset: off };
            for d in [0.1, 1.0, 13.7] {
                let i = integrate_base(&x, d).unwrap();
                assert!(i >= gen.limit() * d - 1e-12);
                assert!(i <= gen.sup_f0() * d + 1e-12);
            }
        }
    }

    #[test]
    fn apply_identity_is_exact() {
        let c = two_exponent(-1.0, 2.0);
        let v = StateVector::new(3.0, -0.25);
        let w = apply(&c, 4.0, 4.0, &x0(), &v).unwrap();
        assert_eq!(w.c1, LogScalar::from_f64(3.0));
        assert_eq!(w.c2, LogScalar::from_f64(-0.25));
    }

    #[test]
    fn apply_two_exponent_matches_integral() {
        let c = two_exponent(-1.0, 0.0);
        let w = apply(&c, 1.0, 0.0, &x0(), &StateVector::E1).unwrap();
        let expect = -(2.0 - (-1.0f64).exp());
        assert!((w.c1.log_abs - expect).abs() < 1e-12);
        assert!((w.c1.to_f64() - expect.exp()).abs() < 1e-7);
    }

    #[test]
    fn shift_moves_log_by_lambda_delta() {
        let c = two_exponent(-1.0, 0.0);
        let sh = shift(&c, 2.0);
        let w0 = apply(&c, 1.0, 0.0, &x0(), &StateVector::E1).unwrap();
        let w2 = apply(&sh, 1.0, 0.0, &x0(), &StateVector::E1).unwrap();
        assert!((w2.c1.log_abs - (w0.c1.log_abs + 2.0)).abs() < 1e-12);
        let back = shift(&sh, -2.0);
        let wb = apply(&back, 7.0, 3.0, &x0(), &StateVector::ONES).unwrap();
        let wo = apply(&c, 7.0, 3.0, &x0(), &StateVector::ONES).unwrap();
        assert!((wb.c1.log_abs - wo.c1.log_abs).abs() < 1e-12);
        assert!((wb.c2.log_abs - wo.c2.log_abs).abs() < 1e-12);
    }

    #[test]
    fn compose_residual_zero_at_equal_times() {
        let skew = SkewEvolution::new(two_exponent(-1.0, 1.0));
        let r = compose_residual(&skew, 3.0, 3.0, 3.0, &x0(), &StateVector::ONES).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn compose_residual_small_with_oscillating_terms() {
        let h1 = ScalarFn::from_terms(vec![
            ExprTerm::Poly { coeffs: vec![0.0, -2.0] },
            ExprTerm::TSinT { coeff: 1.0 },
        ]);
        let h2 = ScalarFn::from_terms(vec![
            ExprTerm::Poly { coeffs: vec![0.0, 3.0] },
            ExprTerm::TCosT { coeff: -2.0 },
        ]);
        let skew = SkewEvolution::new(DiagonalCocycle::new(h1, h2, -1.0, 1.0));
        let r = compose_residual(&skew, 7.0, 4.0, 1.0, &x0(), &StateVector::ONES).unwrap();
        assert!(r <= 1e-9, "residual {r}");
    }

    #[test]
    fn compose_residual_rejects_bad_ordering() {
        let skew = SkewEvolution::new(two_exponent(-1.0, 1.0));
        assert!(compose_residual(&skew, 1.0, 2.0, 0.0, &x0(), &StateVector::ONES).is_err());
    }

    #[test]
    fn compose_residual_detects_missing_translation() {
        // Evaluating the outer factor at the untranslated base point breaks
        // the law; the residual must see it.
        let skew = SkewEvolution::new(two_exponent(-1.0, 1.0));
        let x = x0();
        let (t, s, t0) = (5.0, 2.0, 0.0);
        let good = compose_residual(&skew, t, s, t0, &x, &StateVector::E1).unwrap();
        let wrong_outer = skew.cocycle.log_factor(0, t, s, &x).unwrap()
            + skew.cocycle.log_factor(0, s, t0, &x).unwrap();
        let direct = skew.cocycle.log_factor(0, t, t0, &x).unwrap();
        assert!(good <= 1e-12);
        assert!((wrong_outer - direct).abs() > 1e-3);
    }
}
