//! Exponential growth/decay checkers and fitters.
//!
//! These bound the transported norm between two intermediate times:
//!
//! * growth:  ||Phi(t,t0,x)v|| <= M(s) e^{omega(s) (t-s)} ||Phi(s,t0,x)v||
//! * decay:   ||Phi(s,t0,x)v|| <= M(t) e^{omega(t) (t-s)} ||Phi(t,t0,x)v||
//!
//! The gauge M binds to the time printed in the defining inequality (middle
//! time for growth, upper time for decay), and the rate mapping omega binds
//! to the same anchor; constant gauges recover the uniform reading. The
//! uniform flag reports a constant fitted M, the bounded flag additionally
//! certifies the operator-norm form with a constant coefficient.

use serde::{Deserialize, Serialize};

use crate::base_space::BasePoint;
use crate::cocycles::{apply, SkewEvolution, StateVector};
use crate::error::{Error, Result};
use crate::expr::ScalarFn;
use crate::grid::GridSpec;
use crate::minimax::{EXP_CAP, EXP_FLOOR, FIT_SLACK, LOG_N_CAP};
use crate::projectors::RestrictedCocycle;

/// Parametric gauge mapping: K e^{rate u} or K u^rate, optionally times the
/// instance's knot factor g(u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    pub log_coeff: f64,
    pub rate: f64,
    pub form: GaugeForm,
    #[serde(default)]
    pub with_log_g: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeForm {
    /// K e^{rate u}
    ExpTime,
    /// K u^rate
    PowTime,
}

impl Gauge {
    pub fn constant(value: f64) -> Gauge {
        Gauge { log_coeff: value.ln(), rate: 0.0, form: GaugeForm::ExpTime, with_log_g: false }
    }

    pub fn exp(log_coeff: f64, rate: f64) -> Gauge {
        Gauge { log_coeff, rate, form: GaugeForm::ExpTime, with_log_g: false }
    }

    pub fn pow(log_coeff: f64, rate: f64) -> Gauge {
        Gauge { log_coeff, rate, form: GaugeForm::PowTime, with_log_g: false }
    }

    pub fn with_g(mut self) -> Gauge {
        self.with_log_g = true;
        self
    }

    pub fn is_constant(&self) -> bool {
        self.rate == 0.0 && !self.with_log_g
    }

    /// ln of the gauge value at u; `log_g` supplies ln g when requested.
    pub fn log_value(&self, u: f64, log_g: Option<&ScalarFn>) -> f64 {
        let mut v = self.log_coeff;
        if self.rate != 0.0 {
            v += match self.form {
                GaugeForm::ExpTime => self.rate * u,
                GaugeForm::PowTime => self.rate * u.ln(),
            };
        }
        if self.with_log_g {
            v += log_g.map(|g| g.eval(u)).unwrap_or(0.0);
        }
        v
    }

    /// Linear value (for rate mappings like omega).
    pub fn value(&self, u: f64, log_g: Option<&ScalarFn>) -> f64 {
        self.log_value(u, log_g).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    Growth,
    Decay,
}

/// A gauge/rate pair claiming a growth or decay bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    pub m: Gauge,
    pub omega: Gauge,
    pub kind: GrowthKind,
}

/// Either the full cocycle or one projected branch of it.
pub enum NormSource<'a> {
    Full(&'a SkewEvolution),
    Branch(&'a RestrictedCocycle),
}

impl NormSource<'_> {
    fn log_norm(&self, t: f64, s: f64, x: &BasePoint, v: &StateVector) -> Result<Option<f64>> {
        match self {
            NormSource::Full(skew) => {
                let w = apply(&skew.cocycle, t, s, x, v)?;
                Ok(if w.is_zero() { None } else { Some(w.log_norm_l1()) })
            }
            NormSource::Branch(r) => r.log_norm(t, s, x, v),
        }
    }

    fn log_op_factor(&self, t: f64, s: f64, x: &BasePoint) -> Result<f64> {
        // operator norm of a diagonal map in the |.|_1 norm: max column gain
        let (c, branches): (_, &[usize]) = match self {
            NormSource::Full(skew) => (&skew.cocycle, &[0, 1]),
            NormSource::Branch(r) => (&r.skew.cocycle, if r.branch == 0 { &[0] } else { &[1] }),
        };
        let mut best = f64::NEG_INFINITY;
        for &k in branches {
            best = best.max(c.log_factor(k, t, s, x)?);
        }
        Ok(best)
    }
}

pub(crate) struct RatioRow {
    pub t: f64,
    pub s: f64,
    /// log ||Phi(t,t0,x)v|| - log ||Phi(s,t0,x)v||
    pub logratio: f64,
}

/// Sweep the grid into (t, s, t0) ratio rows; zero vectors are skipped.
pub(crate) fn ratio_rows(source: &NormSource, grid: &GridSpec, x: &BasePoint) -> Result<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for (t, s) in grid.pairs() {
        for t0 in grid.t0_for(s) {
            for v in &grid.vectors {
                let hi = source.log_norm(t, t0, x, v)?;
                let lo = source.log_norm(s, t0, x, v)?;
                if let (Some(hi), Some(lo)) = (hi, lo) {
                    rows.push(RatioRow { t, s, logratio: hi - lo });
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Validation("grid produced no usable rows".into()));
    }
    Ok(rows)
}

/// Worst log-margin of the bound over the grid; <= 0 certifies on the grid.
pub fn growth_margin(
    source: &NormSource,
    bounds: &GrowthBounds,
    grid: &GridSpec,
    x: &BasePoint,
    log_g: Option<&ScalarFn>,
) -> Result<f64> {
    let rows = ratio_rows(source, grid, x)?;
    let mut worst = f64::NEG_INFINITY;
    for row in &rows {
        let delta = row.t - row.s;
        let margin = match bounds.kind {
            GrowthKind::Growth => {
                row.logratio - bounds.m.log_value(row.s, log_g) - bounds.omega.value(row.s, log_g) * delta
            }
            GrowthKind::Decay => {
                -row.logratio - bounds.m.log_value(row.t, log_g) - bounds.omega.value(row.t, log_g) * delta
            }
        };
        worst = worst.max(margin);
    }
    Ok(worst)
}

/// Result of `fit_growth`: the bounds plus the uniform/bounded flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub bounds: GrowthBounds,
    pub uniform: bool,
    pub bounded: bool,
    pub worst_margin_log: f64,
}

const UNIFORM_LOG_K_CAP: f64 = LOG_N_CAP;

/// Fit (M, omega) with margin <= 0 on the grid, smallest omega first, then
/// smallest coefficient. Falls back from a constant M to the gauge family
/// K e^{eta u} when the constant coefficient would have to be absurd.
pub fn fit_growth(
    source: &NormSource,
    kind: GrowthKind,
    grid: &GridSpec,
    x: &BasePoint,
) -> Result<GrowthFit> {
    let rows = ratio_rows(source, grid, x)?;
    // row view: r <= ln K + eta * anchor + omega * delta
    let data: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|row| {
            let delta = row.t - row.s;
            match kind {
                GrowthKind::Growth => (row.logratio, row.s, delta),
                GrowthKind::Decay => (-row.logratio, row.t, delta),
            }
        })
        .collect();
    if data.iter().any(|&(r, _, _)| !r.is_finite()) {
        return Err(Error::Validation("norm ratios overflowed during growth fit".into()));
    }

    let env = |omega: f64, eta: f64| -> f64 {
        data.iter().map(|&(r, w, d)| r - omega * d - eta * w).fold(f64::NEG_INFINITY, f64::max)
    };
    let min_omega = |eta: f64, thr: f64| -> f64 {
        let mut omega = EXP_FLOOR;
        for &(r, w, d) in &data {
            if d > 0.0 {
                omega = omega.max((r - eta * w - thr) / d);
            }
        }
        omega.min(EXP_CAP)
    };

    // constant-M attempt
    let budget_const = env(EXP_CAP, 0.0).max(0.0);
    let omega_const = min_omega(0.0, budget_const + FIT_SLACK);
    let log_k_const = env(omega_const, 0.0).max(0.0);

    let (m, omega, uniform) = if log_k_const <= UNIFORM_LOG_K_CAP {
        (Gauge::constant(log_k_const.exp()), omega_const, true)
    } else {
        // gauge attempt: anchor-independent rows fix the budget, the gauge
        // slope soaks up the rest
        let zero_anchor_env = data
            .iter()
            .filter(|&&(_, w, _)| w == 0.0)
            .map(|&(r, _, d)| r - EXP_CAP * d)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        let thr = zero_anchor_env + FIT_SLACK;
        let mut omega = EXP_FLOOR;
        for &(r, w, d) in &data {
            if w == 0.0 && d > 0.0 {
                omega = omega.max((r - thr) / d);
            }
        }
        let omega = omega.min(EXP_CAP);
        let mut eta = 0.0f64;
        for &(r, w, d) in &data {
            if w > 0.0 {
                eta = eta.max((r - omega * d - thr) / w);
            }
        }
        let log_k = env(omega, eta).max(0.0);
        (Gauge::exp(log_k, eta), omega, false)
    };

    let bounds = GrowthBounds { m, omega: Gauge::constant(omega), kind };
    let worst = growth_margin(source, &bounds, grid, x, None)?;
    if worst > grid.tol_log {
        return Err(Error::Validation(format!("growth fit failed to certify: margin {worst:.3e}")));
    }

    // bounded flag: operator-norm form with a constant coefficient
    let bounded = uniform && kind == GrowthKind::Growth && {
        let mut op_env = f64::NEG_INFINITY;
        for (t, s) in grid.pairs() {
            let r = source.log_op_factor(t, s, x)?;
            op_env = op_env.max(r - omega * (t - s));
        }
        op_env.max(0.0) <= UNIFORM_LOG_K_CAP
    };

    Ok(GrowthFit { bounds, uniform, bounded, worst_margin_log: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_space::GeneratorSpec;
    use crate::cocycles::DiagonalCocycle;
    use crate::expr::ExprTerm;
    use crate::grid::{RangeSpec, Spacing};

    fn x0() -> BasePoint {
        BasePoint::new(GeneratorSpec::default_gallery(), 0.0).unwrap()
    }

    fn grid() -> GridSpec {
        GridSpec {
            t_range: RangeSpec::new(0.0, 60.0, 24, Spacing::LogMix).unwrap(),
            s_range: RangeSpec::new(0.0, 60.0, 24, Spacing::LogMix).unwrap(),
            t0_values: vec![0.0],
            vectors: vec![StateVector::E1, StateVector::E2, StateVector::ONES],
            tol_log: 1e-9,
        }
    }

    fn slope_cocycle(a: f64, b: f64) -> SkewEvolution {
        SkewEvolution::new(DiagonalCocycle::new(
            ScalarFn::from_terms(vec![ExprTerm::Poly { coeffs: vec![0.0, a] }]),
            ScalarFn::from_terms(vec![ExprTerm::Poly { coeffs: vec![0.0, b] }]),
            0.0,
            0.0,
        ))
    }

    #[test]
    fn constant_cocycle_certifies_with_unit_bounds() {
        let skew = slope_cocycle(0.0, 0.0);
        let bounds = GrowthBounds { m: Gauge::constant(1.0), omega: Gauge::constant(1.0), kind: GrowthKind::Growth };
        let margin = growth_margin(&NormSource::Full(&skew), &bounds, &grid(), &x0(), None).unwrap();
        assert!(margin <= 0.0);
    }

    #[test]
    fn fit_recovers_slope_two() {
        let skew = slope_cocycle(2.0, 2.0);
        let fit = fit_growth(&NormSource::Full(&skew), GrowthKind::Growth, &grid(), &x0()).unwrap();
        let omega = fit.bounds.omega.value(0.0, None);
        assert!((omega - 2.0).abs() < 1e-3, "omega = {omega}");
        assert!(fit.bounds.m.log_value(0.0, None) < 1e-6);
        assert!(fit.uniform && fit.bounded);
    }

    #[test]
    fn decay_fit_rates() {
        // contracting cocycle: the backward ratio grows at rate 2
        let skew = slope_cocycle(-2.0, -2.0);
        let fit = fit_growth(&NormSource::Full(&skew), GrowthKind::Decay, &grid(), &x0()).unwrap();
        assert!(fit.worst_margin_log <= 0.0);
        let omega = fit.bounds.omega.value(0.0, None);
        assert!((omega - 2.0).abs() < 1e-3, "got {omega}");
        // expanding cocycle: the decay bound is satisfied at the rate floor
        let skew = slope_cocycle(2.0, 2.0);
        let fit = fit_growth(&NormSource::Full(&skew), GrowthKind::Decay, &grid(), &x0()).unwrap();
        let omega = fit.bounds.omega.value(0.0, None);
        assert!(omega <= 1e-3, "got {omega}");
    }

    #[test]
    fn refit_recertifies() {
        let skew = slope_cocycle(1.3, -0.4);
        let fit = fit_growth(&NormSource::Full(&skew), GrowthKind::Growth, &grid(), &x0()).unwrap();
        let margin = growth_margin(&NormSource::Full(&skew), &fit.bounds, &grid(), &x0(), None).unwrap();
        assert!(margin <= 1e-9);
    }

    #[test]
    fn margin_monotone_under_grid_refinement() {
        let skew = slope_cocycle(1.0, -1.0);
        let bounds = GrowthBounds { m: Gauge::constant(1.0), omega: Gauge::constant(1.2), kind: GrowthKind::Growth };
        let coarse = growth_margin(&NormSource::Full(&skew), &bounds, &grid(), &x0(), None).unwrap();
        let mut fine = grid();
        fine.t_range.count = 48;
        fine.s_range.count = 48;
        let fine_margin = growth_margin(&NormSource::Full(&skew), &bounds, &fine, &x0(), None).unwrap();
        assert!(fine_margin >= coarse - 1e-12);
    }

    #[test]
    fn shift_covariance() {
        let skew = slope_cocycle(1.0, 1.0);
        let base = GrowthBounds { m: Gauge::constant(1.0), omega: Gauge::constant(1.5), kind: GrowthKind::Growth };
        let g = grid();
        let m0 = growth_margin(&NormSource::Full(&skew), &base, &g, &x0(), None).unwrap();
        assert!(m0 <= 0.0);
        for lambda in [0.5, 1.0, 2.0] {
            let shifted = skew.shifted(lambda);
            let bumped = GrowthBounds {
                m: Gauge::constant(1.0),
                omega: Gauge::constant(1.5 + lambda),
                kind: GrowthKind::Growth,
            };
            let m1 = growth_margin(&NormSource::Full(&shifted), &bumped, &g, &x0(), None).unwrap();
            assert!((m1 - m0).abs() < 1e-9, "lambda {lambda}: {m1} vs {m0}");
        }
    }
}
