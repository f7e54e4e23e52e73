//! Signed log-magnitude arithmetic.
//!
//! All cocycle magnitudes live here: a value is a sign together with the log
//! of its absolute value, so quantities like e^{n*4^n} never overflow. Sums
//! of magnitudes go through log-sum-exp; exact cancellation checks go through
//! an error-free expansion sum.

use serde::{Deserialize, Serialize};

/// Sign plus log-magnitude. `log_abs` is `-inf` exactly when `sign == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    pub sign: i8,
    pub log_abs: f64,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar { sign: 0, log_abs: f64::NEG_INFINITY };

    pub fn new(sign: i8, log_abs: f64) -> Self {
        if sign == 0 {
            Self::ZERO
        } else {
            LogScalar { sign: sign.signum(), log_abs }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScalar { sign: if x > 0.0 { 1 } else { -1 }, log_abs: x.abs().ln() }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Value as f64; overflows to +/-inf past ~e^709.
    pub fn to_f64(&self) -> f64 {
        f64::from(self.sign) * self.log_abs.exp()
    }

    pub fn mul(&self, other: &LogScalar) -> LogScalar {
        LogScalar::new(self.sign * other.sign, self.log_abs + other.log_abs)
    }

    /// Multiply by e^shift (magnitude only).
    pub fn scale_log(&self, shift: f64) -> LogScalar {
        if self.is_zero() {
            *self
        } else {
            LogScalar { sign: self.sign, log_abs: self.log_abs + shift }
        }
    }

    /// Multiply by an ordinary float coefficient.
    pub fn scale(&self, c: f64) -> LogScalar {
        self.mul(&LogScalar::from_f64(c))
    }

    /// Signed addition via log-sum-exp on the dominant magnitude.
    pub fn add(&self, other: &LogScalar) -> LogScalar {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (hi, lo) = if self.log_abs >= other.log_abs { (self, other) } else { (other, self) };
        let d = lo.log_abs - hi.log_abs; // <= 0
        if hi.sign == lo.sign {
            LogScalar { sign: hi.sign, log_abs: hi.log_abs + d.exp().ln_1p() }
        } else {
            let m = -(d.exp_m1()); // 1 - e^d, in (0, 1]
            if m == 0.0 {
                Self::ZERO
            } else {
                LogScalar { sign: hi.sign, log_abs: hi.log_abs + m.ln() }
            }
        }
    }

    /// Compare absolute values.
    pub fn cmp_magnitude(&self, other: &LogScalar) -> std::cmp::Ordering {
        self.log_abs.partial_cmp(&other.log_abs).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// log(e^a + e^b), tolerant of -inf.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log(sum e^{x_i}) over a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    let s: f64 = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + s.ln()
}

/// Knuth two-sum: returns (hi, lo) with hi + lo == a + b exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let hi = a + b;
    let v = hi - a;
    let lo = (a - (hi - v)) + (b - v);
    (hi, lo)
}

/// Exact sum of a list of f64 terms (Shewchuk expansion, as in fsum).
///
/// Terms that cancel algebraically cancel here bit-for-bit, so residuals of
/// identities evaluated from identical subterms come out as true zeros even
/// when the individual terms are around 1e37.
pub fn exact_sum(terms: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::with_capacity(8);
    for &term in terms {
        let mut x = term;
        let mut keep = 0;
        for j in 0..partials.len() {
            let (hi, lo) = two_sum(x, partials[j]);
            if lo != 0.0 {
                partials[keep] = lo;
                keep += 1;
            }
            x = hi;
        }
        partials.truncate(keep);
        partials.push(x);
    }
    partials.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_has_neg_inf_log() {
        let z = LogScalar::from_f64(0.0);
        assert_eq!(z.sign, 0);
        assert_eq!(z.log_abs, f64::NEG_INFINITY);
    }

    #[test]
    fn mul_adds_logs_and_multiplies_signs() {
        let a = LogScalar::from_f64(-3.0);
        let b = LogScalar::from_f64(2.0);
        let p = a.mul(&b);
        assert_eq!(p.sign, -1);
        assert!((p.log_abs - 6.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn add_handles_cancellation() {
        let a = LogScalar::from_f64(5.0);
        let b = LogScalar::from_f64(-5.0);
        assert!(a.add(&b).is_zero());
        let c = LogScalar::from_f64(3.0);
        let s = a.add(&c).add(&b);
        assert!((s.to_f64() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_sum_cancels_huge_terms() {
        let h = 1.9e37;
        let terms = [h, -1.25, 1.25, -h, 2.0e-13];
        assert_eq!(exact_sum(&terms), 2.0e-13);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.0, 1.0, -2.0];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
    }
}
