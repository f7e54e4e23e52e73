//! Sampling grids for margin sweeps.

use serde::{Deserialize, Serialize};

use crate::cocycles::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    /// Half the points linear, half logarithmic; always includes both ends.
    LogMix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl RangeSpec {
    pub fn new(min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        if !(max > min) || min < 0.0 {
            return Err(Error::Validation(format!("range must satisfy 0 <= min < max, got [{min}, {max}]")));
        }
        if count < 2 {
            return Err(Error::Validation("range needs count >= 2".into()));
        }
        Ok(RangeSpec { min, max, count, spacing })
    }

    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => linear_spaced(self.min, self.max, self.count),
            Spacing::LogMix => {
                let n_lin = self.count / 2;
                let n_log = self.count - n_lin;
                let mut vals = linear_spaced(self.min, self.max, n_lin.max(2));
                vals.extend(log_spaced(self.min, self.max, n_log.max(2)));
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                vals
            }
        }
    }
}

pub fn linear_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    let step = (max - min) / (count - 1) as f64;
    let mut vals: Vec<f64> = (0..count).map(|i| min + step * i as f64).collect();
    *vals.last_mut().expect("count >= 2") = max;
    vals
}

/// Geometric spacing from max(min, max/1000) to max, with `min` prepended
/// when it sits below the geometric start.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    let lo = if min > 0.0 { min } else { max * 1e-3 };
    let ratio = (max / lo).powf(1.0 / (count - 1) as f64);
    let mut vals: Vec<f64> = (0..count).map(|i| lo * ratio.powi(i as i32)).collect();
    *vals.last_mut().expect("count >= 2") = max;
    if min < lo {
        vals.insert(0, min);
    }
    vals
}

/// Grid for dichotomy and growth sweeps: ordered (t, s) pairs, lower
/// reference times, probe vectors, and the certification tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_range: RangeSpec,
    pub s_range: RangeSpec,
    /// Lower reference times t0; each pair (t, s) is swept for every
    /// t0 <= s, and for t0 = s itself.
    pub t0_values: Vec<f64>,
    pub vectors: Vec<StateVector>,
    pub tol_log: f64,
}

impl GridSpec {
    /// 60 x 60 log-mix grid on [0, 60] for the exponential classes.
    pub fn default_exponential() -> Self {
        GridSpec {
            t_range: RangeSpec::new(0.0, 60.0, 60, Spacing::LogMix).expect("static range"),
            s_range: RangeSpec::new(0.0, 60.0, 60, Spacing::LogMix).expect("static range"),
            t0_values: vec![0.0],
            vectors: vec![StateVector::E1, StateVector::E2, StateVector::ONES],
            tol_log: 1e-9,
        }
    }

    /// 60 x 60 log-mix grid on [1, 60] for the polynomial classes.
    pub fn default_polynomial() -> Self {
        GridSpec {
            t_range: RangeSpec::new(1.0, 60.0, 60, Spacing::LogMix).expect("static range"),
            s_range: RangeSpec::new(1.0, 60.0, 60, Spacing::LogMix).expect("static range"),
            t0_values: vec![],
            vectors: vec![StateVector::E1, StateVector::E2, StateVector::ONES],
            tol_log: 1e-9,
        }
    }

    pub fn validate_polynomial(&self) -> Result<()> {
        if self.s_range.min < 1.0 || self.t_range.min < 1.0 {
            return Err(Error::Domain(format!(
                "polynomial classes need t >= s >= 1; grid starts at t={}, s={}",
                self.t_range.min, self.s_range.min
            )));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.pairs().is_empty()
    }

    /// Ordered pairs t >= s.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let ts = self.t_range.values();
        let ss = self.s_range.values();
        let mut out = Vec::with_capacity(ts.len() * ss.len() / 2);
        for &t in &ts {
            for &s in &ss {
                if t >= s {
                    out.push((t, s));
                }
            }
        }
        out
    }

    /// Reference times applicable below s, always including s itself.
    pub fn t0_for(&self, s: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.t0_values.iter().copied().filter(|&t0| t0 <= s).collect();
        if !out.iter().any(|&t0| t0 == s) {
            out.push(s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_validate() {
        assert!(RangeSpec::new(1.0, 1.0, 4, Spacing::Linear).is_err());
        assert!(RangeSpec::new(0.0, 5.0, 1, Spacing::Linear).is_err());
        assert!(RangeSpec::new(-1.0, 5.0, 4, Spacing::Linear).is_err());
    }

    #[test]
    fn linear_endpoints() {
        let v = RangeSpec::new(0.0, 60.0, 7, Spacing::Linear).unwrap().values();
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 60.0);
    }

    #[test]
    fn log_mix_covers_ends_and_sorted() {
        let v = RangeSpec::new(0.0, 60.0, 60, Spacing::LogMix).unwrap().values();
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 60.0);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pairs_ordered() {
        let g = GridSpec::default_exponential();
        assert!(g.pairs().iter().all(|&(t, s)| t >= s));
        assert!(!g.is_empty());
    }

    #[test]
    fn polynomial_grid_guards_s_min() {
        let mut g = GridSpec::default_polynomial();
        assert!(g.validate_polynomial().is_ok());
        g.s_range = RangeSpec::new(0.5, 60.0, 8, Spacing::Linear).unwrap();
        assert!(matches!(g.validate_polynomial(), Err(Error::Domain(_))));
    }

    #[test]
    fn t0_includes_s() {
        let g = GridSpec::default_exponential();
        let t0s = g.t0_for(2.0);
        assert!(t0s.contains(&0.0));
        assert!(t0s.contains(&2.0));
    }
}
