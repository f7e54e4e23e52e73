//! The base metric space of generator translates.
//!
//! A base point is a decreasing generator function together with a
//! translation offset; the evolution semiflow just advances the offset, so
//! the semiflow laws hold exactly in the representation. The closure point
//! of the translate family (the constant-limit function) is the offset
//! `+inf`.

use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{require_ordered, Error, Result};

/// Closed-form generator families, plus a quadrature-backed escape hatch for
/// generators without a closed-form antiderivative.
#[derive(Clone)]
pub enum GeneratorKind {
    /// f(u) = limit + amplitude * e^{-rate u}
    OnePlusExpNeg { limit: f64, amplitude: f64, rate: f64 },
    /// f(u) = amplitude / (u + shift) + limit
    ReciprocalShift { amplitude: f64, shift: f64, limit: f64 },
    /// f(u) = limit
    Constant { limit: f64 },
    /// Arbitrary decreasing f with a cached, monotone cumulative.
    Tabulated(Arc<TabulatedGenerator>),
}

/// Quadrature-backed generator: the cumulative integral is assembled from
/// per-unit adaptive Simpson segments anchored at integer knots, so splits of
/// an interval always evaluate through the same cumulative function and
/// additivity across splits is exact by construction.
pub struct TabulatedGenerator {
    pub eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub limit: f64,
    knots: Mutex<Vec<f64>>, // cumulative values at 0, 1, 2, ...
}

impl TabulatedGenerator {
    pub fn new(eval: Box<dyn Fn(f64) -> f64 + Send + Sync>, limit: f64) -> Self {
        TabulatedGenerator { eval, limit, knots: Mutex::new(vec![0.0]) }
    }

    fn cumulative(&self, u: f64) -> f64 {
        let base = u.floor() as usize;
        let mut knots = self.knots.lock().expect("cumulative cache poisoned");
        while knots.len() <= base {
            let k = knots.len() - 1;
            let seg = simpson_adaptive(&self.eval, k as f64, (k + 1) as f64, 1e-13, 32);
            let last = *knots.last().expect("cache seeded with 0.0");
            knots.push(last + seg);
        }
        let anchored = knots[base];
        drop(knots);
        anchored + simpson_adaptive(&self.eval, base as f64, u, 1e-13, 32)
    }
}

/// Plain adaptive Simpson on [a, b] for smooth nonnegative integrands.
fn simpson_adaptive<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol * (left + right).abs().max(1e-300) {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol, depth - 1)
    }
}

/// A generator: decreasing `eval`, its cumulative antiderivative, the limit
/// at infinity, the value at zero, and the standing bound parameter used by
/// the gallery (chosen strictly above `eval(0)`).
#[derive(Clone)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub lambda_bound: f64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, lambda_bound: f64) -> Result<Self> {
        let spec = GeneratorSpec { kind, lambda_bound };
        if !(spec.lambda_bound > spec.sup_f0()) {
            return Err(Error::Validation(format!(
                "lambda_bound {} must exceed the value at zero {}",
                spec.lambda_bound,
                spec.sup_f0()
            )));
        }
        Ok(spec)
    }

    /// Default gallery generator f(u) = 1 + e^{-u} with bound parameter 3.
    pub fn default_gallery() -> Arc<Self> {
        Arc::new(
            GeneratorSpec::new(
                GeneratorKind::OnePlusExpNeg { limit: 1.0, amplitude: 1.0, rate: 1.0 },
                3.0,
            )
            .expect("default generator is valid"),
        )
    }

    /// Zero-limit generator f(u) = 1/(u+1), cumulative ln(1+u).
    pub fn reciprocal_l0() -> Arc<Self> {
        Arc::new(
            GeneratorSpec::new(
                GeneratorKind::ReciprocalShift { amplitude: 1.0, shift: 1.0, limit: 0.0 },
                2.0,
            )
            .expect("reciprocal generator is valid"),
        )
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            GeneratorKind::OnePlusExpNeg { limit, amplitude, rate } => {
                limit + amplitude * (-rate * u).exp()
            }
            GeneratorKind::ReciprocalShift { amplitude, shift, limit } => {
                amplitude / (u + shift) + limit
            }
            GeneratorKind::Constant { limit } => *limit,
            GeneratorKind::Tabulated(t) => (t.eval)(u),
        }
    }

    /// Antiderivative with cumulative(0) = 0; nondecreasing.
    pub fn cumulative(&self, u: f64) -> f64 {
        match &self.kind {
            GeneratorKind::OnePlusExpNeg { limit, amplitude, rate } => {
                limit * u + amplitude / rate * (-(-rate * u).exp_m1())
            }
            GeneratorKind::ReciprocalShift { amplitude, shift, limit } => {
                amplitude * ((u + shift).ln() - shift.ln()) + limit * u
            }
            GeneratorKind::Constant { limit } => limit * u,
            GeneratorKind::Tabulated(t) => t.cumulative(u),
        }
    }

    /// Limit of eval at infinity.
    pub fn limit(&self) -> f64 {
        match &self.kind {
            GeneratorKind::OnePlusExpNeg { limit, .. } => *limit,
            GeneratorKind::ReciprocalShift { limit, .. } => *limit,
            GeneratorKind::Constant { limit } => *limit,
            GeneratorKind::Tabulated(t) => t.limit,
        }
    }

    /// Value at zero (the sup of a decreasing generator).
    pub fn sup_f0(&self) -> f64 {
        self.eval(0.0)
    }

    /// Short tag used in reports.
    pub fn kind_tag(&self) -> &'static str {
        match &self.kind {
            GeneratorKind::OnePlusExpNeg { .. } => "one_plus_exp_neg",
            GeneratorKind::ReciprocalShift { .. } => "reciprocal_shift",
            GeneratorKind::Constant { .. } => "constant",
            GeneratorKind::Tabulated(_) => "tabulated",
        }
    }
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneratorSpec({}, l={}, f0={})", self.kind_tag(), self.limit(), self.sup_f0())
    }
}

/// Serializable description of a generator, as it appears in instance specs
/// and reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorConfig {
    OnePlusExpNeg {
        #[serde(default = "one")]
        limit: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        rate: f64,
        #[serde(default = "three")]
        lambda_bound: f64,
    },
    ReciprocalShift {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        shift: f64,
        #[serde(default)]
        limit: f64,
        #[serde(default = "three")]
        lambda_bound: f64,
    },
    Constant {
        #[serde(default = "one")]
        limit: f64,
        #[serde(default = "three")]
        lambda_bound: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}

impl GeneratorConfig {
    pub fn build(&self) -> Result<Arc<GeneratorSpec>> {
        let (kind, lb) = match *self {
            GeneratorConfig::OnePlusExpNeg { limit, amplitude, rate, lambda_bound } => {
                if amplitude <= 0.0 || rate <= 0.0 || limit < 0.0 {
                    return Err(Error::Validation("one_plus_exp_neg needs amplitude, rate > 0 and limit >= 0".into()));
                }
                (GeneratorKind::OnePlusExpNeg { limit, amplitude, rate }, lambda_bound)
            }
            GeneratorConfig::ReciprocalShift { amplitude, shift, limit, lambda_bound } => {
                if amplitude <= 0.0 || shift <= 0.0 || limit < 0.0 {
                    return Err(Error::Validation("reciprocal_shift needs amplitude, shift > 0 and limit >= 0".into()));
                }
                (GeneratorKind::ReciprocalShift { amplitude, shift, limit }, lambda_bound)
            }
            GeneratorConfig::Constant { limit, lambda_bound } => {
                if limit <= 0.0 {
                    return Err(Error::Validation("constant generator needs limit > 0".into()));
                }
                (GeneratorKind::Constant { limit }, lambda_bound)
            }
        };
        Ok(Arc::new(GeneratorSpec::new(kind, lb)?))
    }

    pub fn describe(gen: &GeneratorSpec) -> GeneratorConfig {
        match gen.kind {
            GeneratorKind::OnePlusExpNeg { limit, amplitude, rate } => GeneratorConfig::OnePlusExpNeg {
                limit,
                amplitude,
                rate,
                lambda_bound: gen.lambda_bound,
            },
            GeneratorKind::ReciprocalShift { amplitude, shift, limit } => GeneratorConfig::ReciprocalShift {
                amplitude,
                shift,
                limit,
                lambda_bound: gen.lambda_bound,
            },
            GeneratorKind::Constant { limit } => GeneratorConfig::Constant { limit, lambda_bound: gen.lambda_bound },
            GeneratorKind::Tabulated(_) => GeneratorConfig::Constant { limit: gen.limit(), lambda_bound: gen.lambda_bound },
        }
    }
}

/// Element of the base space: a generator translate. Offset `+inf` is the
/// constant-limit closure point.
#[derive(Clone)]
pub struct BasePoint {
    pub generator: Arc<GeneratorSpec>,
    pub offset: f64,
}

impl fmt::Debug for BasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasePoint(offset={}, {:?})", self.offset, self.generator)
    }
}

impl BasePoint {
    pub fn new(generator: Arc<GeneratorSpec>, offset: f64) -> Result<Self> {
        if offset.is_nan() || offset < 0.0 {
            return Err(Error::Domain(format!("offset must lie in [0, inf], got {offset}")));
        }
        Ok(BasePoint { generator, offset })
    }

    /// The closure point: constant at the generator's limit.
    pub fn at_infinity(generator: Arc<GeneratorSpec>) -> Self {
        BasePoint { generator, offset: f64::INFINITY }
    }

    pub fn is_limit_point(&self) -> bool {
        self.offset.is_infinite()
    }
}

/// Pair of ordered times t >= s >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePair {
    pub t: f64,
    pub s: f64,
}

impl TimePair {
    pub fn new(t: f64, s: f64) -> Result<Self> {
        require_ordered(t, s)?;
        Ok(TimePair { t, s })
    }

    pub fn duration(&self) -> f64 {
        self.t - self.s
    }
}

/// x(tau) for tau >= 0.
pub fn evaluate_point(x: &BasePoint, tau: f64) -> Result<f64> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Domain(format!("evaluation time must be >= 0, got {tau}")));
    }
    if x.is_limit_point() {
        return Ok(x.generator.limit());
    }
    Ok(x.generator.eval(x.offset + tau))
}

/// Evolution semiflow: advance the translate by t - s.
pub fn semiflow(t: f64, s: f64, x: &BasePoint) -> Result<BasePoint> {
    require_ordered(t, s)?;
    Ok(BasePoint { generator: Arc::clone(&x.generator), offset: x.offset + (t - s) })
}

/// Distance in the topology of uniform convergence on compacts:
/// sum over n of 2^{-n} d_n / (1 + d_n) with d_n the sup distance on [0, n].
///
/// The sup on each window is taken over uniform samples plus both endpoints;
/// monotone generators attain it at the left endpoint, sampling guards
/// anything else. Truncation tail is below 2^{-n_terms}.
pub fn metric(x: &BasePoint, y: &BasePoint, n_terms: usize, samples_per_unit: usize) -> Result<f64> {
    if n_terms < 1 {
        return Err(Error::Validation("metric needs n_terms >= 1".into()));
    }
    if samples_per_unit < 2 {
        return Err(Error::Validation("metric needs samples_per_unit >= 2".into()));
    }
    let mut total = 0.0;
    let mut weight = 1.0;
    let mut d_sup = 0.0f64;
    for n in 1..=n_terms {
        weight *= 0.5;
        // extend the running sup from [0, n-1] to [0, n]
        let lo = (n - 1) as f64;
        let steps = samples_per_unit;
        for k in 0..=steps {
            let tau = lo + k as f64 / steps as f64;
            let diff = (evaluate_point(x, tau)? - evaluate_point(y, tau)?).abs();
            d_sup = d_sup.max(diff);
        }
        total += weight * d_sup / (1.0 + d_sup);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_point(offset: f64) -> BasePoint {
        BasePoint::new(GeneratorSpec::default_gallery(), offset).unwrap()
    }

    #[test]
    fn evaluate_at_zero_is_two() {
        let x = default_point(0.0);
        assert_eq!(evaluate_point(&x, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn limit_point_is_constant() {
        let x = BasePoint::at_infinity(GeneratorSpec::default_gallery());
        assert_eq!(evaluate_point(&x, 7.3).unwrap(), 1.0);
        assert_eq!(evaluate_point(&x, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_translated() {
        let x = default_point(1.0);
        let got = evaluate_point(&x, 1.0).unwrap();
        assert!((got - (1.0 + (-2.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn negative_time_is_domain_error() {
        let x = default_point(0.0);
        assert!(matches!(evaluate_point(&x, -0.5), Err(Error::Domain(_))));
        assert!(matches!(semiflow(1.0, 2.0, &x), Err(Error::Ordering(_))));
    }

    #[test]
    fn semiflow_identity_and_composition_exact() {
        let x = default_point(1.0);
        let same = semiflow(4.0, 4.0, &x).unwrap();
        assert_eq!(same.offset, x.offset);
        let step = semiflow(5.0, 2.0, &x).unwrap();
        assert_eq!(step.offset, 4.0);
        let two = semiflow(9.0, 5.0, &semiflow(5.0, 2.0, &x).unwrap()).unwrap();
        let one = semiflow(9.0, 2.0, &x).unwrap();
        assert_eq!(two.offset, one.offset);
        let inf = BasePoint::at_infinity(GeneratorSpec::default_gallery());
        assert!(semiflow(10.0, 3.0, &inf).unwrap().is_limit_point());
    }

    #[test]
    fn metric_to_limit_point_is_half() {
        let x = default_point(0.0);
        let y = BasePoint::at_infinity(Arc::clone(&x.generator));
        let d = metric(&x, &y, 40, 64).unwrap();
        assert!((d - 0.5).abs() < 1e-9, "d = {d}");
    }

    #[test]
    fn metric_identical_is_zero_and_bounded() {
        let x = default_point(0.3);
        assert_eq!(metric(&x, &x, 40, 8).unwrap(), 0.0);
        let y = default_point(5.0);
        let d = metric(&x, &y, 40, 8).unwrap();
        assert!(d > 0.0 && d < 1.0);
    }

    #[test]
    fn metric_symmetry() {
        let x = default_point(0.0);
        let y = default_point(2.5);
        let a = metric(&x, &y, 30, 16).unwrap();
        let b = metric(&y, &x, 30, 16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn metric_separates_offsets() {
        let offs = [0.0, 0.5, 1.0, 4.0];
        for &a in &offs {
            for &b in &offs {
                let d = metric(&default_point(a), &default_point(b), 30, 16).unwrap();
                if a == b {
                    assert_eq!(d, 0.0);
                } else {
                    assert!(d > 1e-6, "offsets {a} vs {b} gave {d}");
                }
            }
        }
    }

    #[test]
    fn sampled_sup_matches_left_endpoint_for_monotone() {
        // |x - y| decreasing => d_n attained at tau = 0; the metric then
        // telescopes to d_1/(1+d_1) * sum of weights at the same sup.
        let x = default_point(0.0);
        let y = default_point(1.0);
        let d0 = (evaluate_point(&x, 0.0).unwrap() - evaluate_point(&y, 0.0).unwrap()).abs();
        let expect: f64 = (1..=40).map(|n| 0.5f64.powi(n) * d0 / (1.0 + d0)).sum();
        let d = metric(&x, &y, 40, 64).unwrap();
        assert!((d - expect).abs() < 1e-12);
    }

    #[test]
    fn tabulated_cumulative_matches_closed_form() {
        let gen = GeneratorSpec::new(
            GeneratorKind::Tabulated(Arc::new(TabulatedGenerator::new(
                Box::new(|u: f64| 1.0 + (-u).exp()),
                1.0,
            ))),
            3.0,
        )
        .unwrap();
        let closed = GeneratorSpec::default_gallery();
        for &u in &[0.0, 0.25, 1.0, 2.75, 7.5, 13.0] {
            let a = gen.cumulative(u);
            let b = closed.cumulative(u);
            assert!((a - b).abs() < 1e-10, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn cumulative_monotone_and_bounded() {
        let gen = GeneratorSpec::default_gallery();
        let mut prev = 0.0;
        for i in 0..200 {
            let u = i as f64 * 0.3;
            let c = gen.cumulative(u);
            assert!(c >= prev);
            prev = c;
            if u > 0.0 {
                assert!(c >= gen.limit() * u - 1e-12);
                assert!(c <= gen.sup_f0() * u + 1e-12);
            }
        }
    }
}
