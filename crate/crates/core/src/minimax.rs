//! Minimax feasibility fits for linear-in-parameters log-margin bounds.
//!
//! Every branch inequality in this crate reduces to rows
//! `r_i + a*u_i - b*w_i <= ln C` with features `u_i, w_i >= 0`. The fit is a
//! budget rule: fix the intercept budget at the level the most conservative
//! rate already needs, then push the rate `a` as high as the budget allows
//! and pull the gauge slope `b` as low as it allows. All stages are exact
//! envelope computations, no iterative search.

/// One data row of a branch inequality.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FitRow {
    pub u: f64,
    pub w: f64,
    pub r: f64,
    /// (t, s, t0) the row came from, for violation reports.
    pub at: (f64, f64, f64),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FitCaps {
    pub a_floor: f64,
    pub a_cap: f64,
    pub b_floor: f64,
    pub b_cap: f64,
    /// Cap on ln C; past it the branch counts as infeasible on this grid.
    pub c_cap: f64,
}

pub(crate) const EXP_FLOOR: f64 = 1e-6;
pub(crate) const EXP_CAP: f64 = 50.0;
pub(crate) const LOG_N_CAP: f64 = 50.0;
pub(crate) const FIT_SLACK: f64 = 1e-9;

impl FitCaps {
    pub fn standard() -> Self {
        FitCaps { a_floor: EXP_FLOOR, a_cap: EXP_CAP, b_floor: EXP_FLOOR, b_cap: EXP_CAP, c_cap: LOG_N_CAP }
    }

    pub fn no_gauge() -> Self {
        FitCaps { b_floor: 0.0, b_cap: 0.0, ..Self::standard() }
    }

    pub fn gauge_from_zero() -> Self {
        FitCaps { b_floor: 0.0, ..Self::standard() }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum BranchFit {
    Feasible { a: f64, b: f64, log_c: f64 },
    /// No parameters within caps bound the rows; carries the argmax row.
    Infeasible { argmax: (f64, f64, f64) },
}

fn envelope(rows: &[FitRow], a: f64, b: f64) -> (f64, (f64, f64, f64)) {
    let mut best = f64::NEG_INFINITY;
    let mut at = (0.0, 0.0, 0.0);
    for row in rows {
        let v = row.r + a * row.u - b * row.w;
        if v > best {
            best = v;
            at = row.at;
        }
    }
    (best, at)
}

/// Budget-rule fit of `(a, b, ln C)` over the rows.
pub(crate) fn budget_fit(rows: &[FitRow], caps: FitCaps) -> BranchFit {
    assert!(!rows.is_empty(), "fit needs at least one row");
    let (floor_env, floor_at) = envelope(rows, caps.a_floor, caps.b_cap);
    let budget = floor_env.max(0.0);
    if budget > caps.c_cap {
        return BranchFit::Infeasible { argmax: floor_at };
    }
    let thr = budget + FIT_SLACK;
    // largest rate the budget allows, with the gauge slope at its cap
    let mut a = caps.a_cap;
    for row in rows {
        if row.u > 0.0 {
            a = a.min((thr - row.r + caps.b_cap * row.w) / row.u);
        }
    }
    let a = a.clamp(caps.a_floor, caps.a_cap);
    // smallest gauge slope that still respects the budget at that rate
    let mut b = caps.b_floor;
    for row in rows {
        if row.w > 0.0 {
            b = b.max((row.r + a * row.u - thr) / row.w);
        }
    }
    let b = b.clamp(caps.b_floor, caps.b_cap);
    let (env, _) = envelope(rows, a, b);
    let log_c = env.max(0.0);
    BranchFit::Feasible { a, b, log_c }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_from(points: &[(f64, f64)]) -> Vec<FitRow> {
        // pure-slope data r = -2 * delta, u = delta, no gauge feature
        points
            .iter()
            .map(|&(d, r)| FitRow { u: d, w: 0.0, r, at: (d, 0.0, 0.0) })
            .collect()
    }

    #[test]
    fn recovers_pure_slope() {
        let pts: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 0.6, -2.0 * i as f64 * 0.6)).collect();
        let rows = rows_from(&pts);
        match budget_fit(&rows, FitCaps::no_gauge()) {
            BranchFit::Feasible { a, log_c, .. } => {
                assert!((a - 2.0).abs() < 1e-3, "a = {a}");
                assert!(log_c < 1e-6);
            }
            other => panic!("expected feasible fit, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_when_budget_exceeds_cap() {
        let rows = vec![FitRow { u: 1.0, w: 0.0, r: 120.0, at: (1.0, 0.0, 0.0) }];
        assert!(matches!(budget_fit(&rows, FitCaps::no_gauge()), BranchFit::Infeasible { .. }));
    }

    #[test]
    fn gauge_slope_absorbs_s_growth() {
        // r = 2 s at delta = 0 rows forces b ~ 2 rather than a huge intercept
        let mut rows = Vec::new();
        for i in 0..60 {
            let s = i as f64;
            rows.push(FitRow { u: 0.0, w: s, r: 2.0 * s, at: (s, s, s) });
            rows.push(FitRow { u: s, w: s, r: -1.5 * s + 2.0 * s, at: (2.0 * s, s, s) });
        }
        match budget_fit(&rows, FitCaps::gauge_from_zero()) {
            BranchFit::Feasible { a, b, log_c } => {
                assert!(log_c <= 1.0, "log_c = {log_c}");
                assert!(b >= 1.9, "b = {b}");
                assert!(a >= 1.0, "a = {a}");
            }
            other => panic!("expected feasible fit, got {other:?}"),
        }
    }
}
