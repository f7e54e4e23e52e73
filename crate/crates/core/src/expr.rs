//! Closed-form scalar expressions for log-magnitude laws.
//!
//! The vocabulary is the closed set needed by the gallery: polynomials,
//! t*sin(t) / t*cos(t), log of a shifted power, the oscillating
//! (outer - sin ln(t+shift)) * ln(t+shift) exponent, and the piecewise
//! log-linear knot interpolant with peaks n * 4^n at integers.

use serde::{Deserialize, Serialize};

/// One additive term of a scalar function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "expr", rename_all = "snake_case")]
pub enum ExprTerm {
    /// coeffs[0] + coeffs[1] t + coeffs[2] t^2 + ...
    Poly { coeffs: Vec<f64> },
    /// coeff * t * sin(t)
    TSinT { coeff: f64 },
    /// coeff * t * cos(t)
    TCosT { coeff: f64 },
    /// coeff * ln(t^power + shift)
    LogPolyShift { coeff: f64, power: f64, shift: f64 },
    /// coeff * (outer - sin(ln(t + shift))) * ln(t + shift)
    SinLog { coeff: f64, outer: f64, shift: f64 },
    /// coeff * ln g(t) for the knot interpolant g (peaks e^{n rate^n}).
    LogGKnots {
        coeff: f64,
        #[serde(default = "default_rate")]
        rate: f64,
    },
}

fn default_rate() -> f64 {
    4.0
}

impl ExprTerm {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ExprTerm::Poly { coeffs } => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = acc * t + c;
                }
                acc
            }
            ExprTerm::TSinT { coeff } => coeff * t * t.sin(),
            ExprTerm::TCosT { coeff } => coeff * t * t.cos(),
            ExprTerm::LogPolyShift { coeff, power, shift } => coeff * (t.powf(*power) + shift).ln(),
            ExprTerm::SinLog { coeff, outer, shift } => {
                let l = (t + shift).ln();
                coeff * (outer - l.sin()) * l
            }
            ExprTerm::LogGKnots { coeff, rate } => coeff * log_g_knots(t, *rate),
        }
    }
}

/// Sum of expression terms; the carrier for every h_k and every ln g.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarFn {
    pub terms: Vec<ExprTerm>,
}

impl ScalarFn {
    pub fn zero() -> Self {
        ScalarFn { terms: vec![] }
    }

    pub fn from_terms(terms: Vec<ExprTerm>) -> Self {
        ScalarFn { terms }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }
}

/// Piecewise-linear log of the knot interpolant:
///
/// ln g(n) = n * rate^n at integers n >= 1, ln g(n + rate^{-n}) = 0, linear
/// in between, and a linear ramp from ln g(0) = 0 up to the first peak.
/// Continuity forces the ramp on [0, 1); the certified results are relative
/// to this interpolant.
pub fn log_g_knots(t: f64, rate: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let peak = |n: f64| n * rate.powf(n);
    let n = t.floor();
    if n < 1.0 {
        // ramp 0 -> peak(1) over [0, 1]
        return t * peak(1.0);
    }
    if t == n {
        return peak(n);
    }
    let drop_end = n + rate.powf(-n);
    // past n ~ 20 the drop width underflows below the f64 spacing at n and
    // the fall collapses onto the single point t = n handled above
    if t <= drop_end && drop_end > n {
        // fall peak(n) -> 0 over [n, n + rate^{-n}]
        let frac = (t - n) / (drop_end - n);
        peak(n) * (1.0 - frac)
    } else {
        // rise 0 -> peak(n+1) over [n + rate^{-n}, n + 1]
        let frac = (t - drop_end) / (n + 1.0 - drop_end);
        peak(n + 1.0) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_evaluates_horner() {
        let p = ExprTerm::Poly { coeffs: vec![1.0, -2.0, 0.5] };
        assert!((p.eval(3.0) - (1.0 - 6.0 + 4.5)).abs() < 1e-14);
    }

    #[test]
    fn knot_values_exact() {
        for n in 1..=20u32 {
            let nf = f64::from(n);
            let expect = nf * 4.0f64.powi(n as i32);
            assert_eq!(log_g_knots(nf, 4.0), expect, "peak at n={n}");
            assert_eq!(log_g_knots(nf + 4.0f64.powi(-(n as i32)), 4.0), 0.0, "drop at n={n}");
        }
    }

    #[test]
    fn knot_interpolant_continuous_and_nonnegative() {
        let mut prev_t = 0.0;
        let mut prev = log_g_knots(0.0, 4.0);
        assert_eq!(prev, 0.0);
        for i in 1..4000 {
            let t = i as f64 * 0.004; // dense sweep over [0, 16]
            let v = log_g_knots(t, 4.0);
            assert!(v >= 0.0);
            // piecewise slope is bounded by peak/width within a cell
            let n = t.floor().max(1.0);
            let max_slope = (n + 1.0) * 4.0f64.powf(n) * 4.0f64.powf(n + 1.0);
            assert!((v - prev).abs() <= max_slope * (t - prev_t) + 1e-9);
            prev = v;
            prev_t = t;
        }
    }

    #[test]
    fn large_knots_stay_finite() {
        let v = log_g_knots(59.0, 4.0);
        assert!(v.is_finite());
        assert!((v - 59.0 * 4.0f64.powi(59)).abs() / v < 1e-15);
    }

    #[test]
    fn sin_log_matches_direct_form() {
        // (t+1)^{3 - sin ln(t+1)} has log (3 - sin ln(t+1)) ln(t+1)
        let term = ExprTerm::SinLog { coeff: 1.0, outer: 3.0, shift: 1.0 };
        for &t in &[0.0, 1.0, 10.0, 1e6] {
            let l = ((t + 1.0) as f64).ln();
            let expect = (3.0 - l.sin()) * l;
            assert!((term.eval(t) - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
    }
}
