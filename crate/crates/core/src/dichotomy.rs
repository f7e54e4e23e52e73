//! The six dichotomy-class checkers, the minimax characteristic fitter,
//! witness falsification, and the implication-lattice classifier.
//!
//! Class inequalities are always evaluated as log-margins (log LHS - log RHS,
//! `<= 0` means satisfied). Exponential classes quantify over ordered triples
//! t >= s >= t0 >= 0; polynomial classes live on t >= s >= 1 with the lower
//! reference at s. Certification is grid evidence at a stated tolerance;
//! falsification runs closed-form witness sequences whose margins must
//! diverge for every candidate constant set.

use serde::{Deserialize, Serialize};

use crate::base_space::BasePoint;
use crate::cocycles::SkewEvolution;
use crate::error::{Error, Result};
use crate::expr::ScalarFn;
use crate::grid::GridSpec;
use crate::growth::{Gauge, GaugeForm};
use crate::minimax::{budget_fit, BranchFit, FitCaps, FitRow, EXP_FLOOR, LOG_N_CAP};
use crate::projectors::{validate_compatibility, ProjectorPair, RestrictedCocycle};

/// Margins past this many log-units count as unbounded for witness verdicts.
pub const FALSIFY_THRESHOLD: f64 = 50.0;
/// Successive witness margins must grow at least this much per step.
pub const MIN_INCREMENT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DichotomyClass {
    Ued,
    Bved,
    Ed,
    Upd,
    Bvpd,
    Pd,
}

impl DichotomyClass {
    pub const ALL: [DichotomyClass; 6] = [
        DichotomyClass::Ued,
        DichotomyClass::Bved,
        DichotomyClass::Ed,
        DichotomyClass::Upd,
        DichotomyClass::Bvpd,
        DichotomyClass::Pd,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            DichotomyClass::Ued => "UED",
            DichotomyClass::Bved => "BVED",
            DichotomyClass::Ed => "ED",
            DichotomyClass::Upd => "UPD",
            DichotomyClass::Bvpd => "BVPD",
            DichotomyClass::Pd => "PD",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "UED" => Ok(DichotomyClass::Ued),
            "BVED" => Ok(DichotomyClass::Bved),
            "ED" => Ok(DichotomyClass::Ed),
            "UPD" => Ok(DichotomyClass::Upd),
            "BVPD" => Ok(DichotomyClass::Bvpd),
            "PD" => Ok(DichotomyClass::Pd),
            other => Err(Error::Parse(format!("unknown dichotomy class {other:?}"))),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, DichotomyClass::Upd | DichotomyClass::Bvpd | DichotomyClass::Pd)
    }

    /// Hard-coded implication edges (stronger -> weaker). The
    /// Barreira-Valls-to-polynomial edge additionally needs alpha >= beta and
    /// is handled separately.
    pub fn implies(&self) -> &'static [DichotomyClass] {
        match self {
            DichotomyClass::Ued => &[DichotomyClass::Bved, DichotomyClass::Upd],
            DichotomyClass::Bved => &[DichotomyClass::Ed],
            DichotomyClass::Ed => &[DichotomyClass::Pd],
            DichotomyClass::Upd => &[DichotomyClass::Bvpd],
            DichotomyClass::Bvpd => &[DichotomyClass::Pd],
            DichotomyClass::Pd => &[],
        }
    }
}

/// Per-class dichotomy constants. Coefficients are stored as logs so nothing
/// overflows; rates are linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "UPPERCASE")]
pub enum ClassParams {
    Ued { log_n1: f64, log_n2: f64, nu1: f64, nu2: f64 },
    Bved { log_n: f64, alpha1: f64, alpha2: f64, beta1: f64, beta2: f64 },
    Ed { gauge1: Gauge, gauge2: Gauge, nu1: f64, nu2: f64 },
    Upd { log_n: f64, alpha1: f64, alpha2: f64 },
    Bvpd { log_n: f64, alpha1: f64, alpha2: f64, beta1: f64, beta2: f64 },
    Pd { gauge: Gauge, alpha1: f64, alpha2: f64 },
}

impl ClassParams {
    pub fn class(&self) -> DichotomyClass {
        match self {
            ClassParams::Ued { .. } => DichotomyClass::Ued,
            ClassParams::Bved { .. } => DichotomyClass::Bved,
            ClassParams::Ed { .. } => DichotomyClass::Ed,
            ClassParams::Upd { .. } => DichotomyClass::Upd,
            ClassParams::Bvpd { .. } => DichotomyClass::Bvpd,
            ClassParams::Pd { .. } => DichotomyClass::Pd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ClassParams::Ued { log_n1, log_n2, nu1, nu2 } => log_n1 >= 0.0 && log_n2 >= 0.0 && nu1 > 0.0 && nu2 > 0.0,
            ClassParams::Bved { log_n, alpha1, alpha2, beta1, beta2 } => {
                log_n >= 0.0 && alpha1 > 0.0 && alpha2 > 0.0 && beta1 > 0.0 && beta2 > 0.0
            }
            ClassParams::Ed { nu1, nu2, .. } => nu1 > 0.0 && nu2 > 0.0,
            ClassParams::Upd { log_n, alpha1, alpha2 } => log_n >= 0.0 && alpha1 > 0.0 && alpha2 > 0.0,
            ClassParams::Bvpd { log_n, alpha1, alpha2, beta1, beta2 } => {
                log_n >= 0.0 && alpha1 > 0.0 && alpha2 > 0.0 && beta1 > 0.0 && beta2 > 0.0
            }
            ClassParams::Pd { alpha1, alpha2, .. } => alpha1 > 0.0 && alpha2 > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("parameters violate the positivity constraints of {}", self.class().code())))
        }
    }

    /// Log-margin of one branch inequality at (t, s) given the branch's
    /// log-ratio. Branch 0 is the contracting inequality, branch 1 the
    /// expanding one (evaluated with the ratio negated by the caller's
    /// formula here).
    fn branch_margin(&self, branch: usize, t: f64, s: f64, logratio: f64, log_g: Option<&ScalarFn>) -> f64 {
        match *self {
            ClassParams::Ued { log_n1, log_n2, nu1, nu2 } => {
                if branch == 0 {
                    nu1 * (t - s) + logratio - log_n1
                } else {
                    nu2 * (t - s) - logratio - log_n2
                }
            }
            ClassParams::Bved { log_n, alpha1, alpha2, beta1, beta2 } => {
                if branch == 0 {
                    logratio + alpha1 * t - beta1 * s - log_n
                } else {
                    -logratio + alpha2 * t - beta2 * s - log_n
                }
            }
            ClassParams::Ed { ref gauge1, ref gauge2, nu1, nu2 } => {
                if branch == 0 {
                    logratio + nu1 * t - gauge1.log_value(s, log_g)
                } else {
                    -logratio + nu2 * t - gauge2.log_value(s, log_g)
                }
            }
            ClassParams::Upd { log_n, alpha1, alpha2 } => {
                let span = t.ln() - s.ln();
                if branch == 0 {
                    logratio + alpha1 * span - log_n
                } else {
                    -logratio + alpha2 * span - log_n
                }
            }
            ClassParams::Bvpd { log_n, alpha1, alpha2, beta1, beta2 } => {
                if branch == 0 {
                    logratio + alpha1 * t.ln() - beta1 * s.ln() - log_n
                } else {
                    -logratio + alpha2 * t.ln() - beta2 * s.ln() - log_n
                }
            }
            ClassParams::Pd { ref gauge, alpha1, alpha2 } => {
                let g = gauge.log_value(s, log_g);
                if branch == 0 {
                    logratio + alpha1 * t.ln() - g
                } else {
                    -logratio + alpha2 * t.ln() - g
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Violated,
}

/// Where a certificate's verdict came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertSource {
    /// Minimax fit on the grid.
    Fitted,
    /// The instance's recorded constants already certify.
    Claimed,
    /// Converted from a certified stronger class.
    Implied { from: DichotomyClass },
    /// A registered witness sequence diverges.
    Witness { name: String },
    /// A weaker class is violated, so this one is too.
    ImpliedViolation { from: DichotomyClass },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: f64,
    pub s: f64,
    pub t0: f64,
}

/// Grid evidence for one class on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub class: DichotomyClass,
    pub verdict: Verdict,
    pub source: CertSource,
    pub params: ClassParams,
    /// Worst observed log-margin of the evidence backing the verdict: the
    /// grid margin for fits, the final witness margin for falsifications.
    pub worst_margin_log: f64,
    pub tol_log: f64,
    pub argmax: Option<GridPoint>,
    /// Margin of the instance's recorded constants, when it has any.
    pub claimed_margin_log: Option<f64>,
}

/// Branch sample: (t, s, t0) with the branch log-ratio
/// log||Phi_k(t,t0,x)v|| - log||Phi_k(s,t0,x)v||.
struct BranchRow {
    t: f64,
    s: f64,
    t0: f64,
    logratio: f64,
}

struct ClassData {
    rows: [Vec<BranchRow>; 2],
}

fn collect_class_data(
    skew: &SkewEvolution,
    pair: &ProjectorPair,
    class: DichotomyClass,
    grid: &GridSpec,
    x: &BasePoint,
) -> Result<ClassData> {
    if grid.is_empty() {
        return Err(Error::Validation("empty grid".into()));
    }
    if class.is_polynomial() {
        grid.validate_polynomial()?;
    }
    let mut rows: [Vec<BranchRow>; 2] = [Vec::new(), Vec::new()];
    for branch in 0..2 {
        let restricted = RestrictedCocycle { skew: skew.clone(), pair: pair.clone(), branch };
        for (t, s) in grid.pairs() {
            let t0s = if class.is_polynomial() { vec![s] } else { grid.t0_for(s) };
            for t0 in t0s {
                for v in &grid.vectors {
                    let hi = restricted.log_norm(t, t0, x, v)?;
                    let lo = restricted.log_norm(s, t0, x, v)?;
                    if let (Some(hi), Some(lo)) = (hi, lo) {
                        rows[branch].push(BranchRow { t, s, t0, logratio: hi - lo });
                    }
                }
            }
        }
        if rows[branch].is_empty() {
            return Err(Error::Validation(format!("grid produced no usable rows for branch {}", branch + 1)));
        }
    }
    Ok(ClassData { rows })
}

fn margin_over_data(
    data: &ClassData,
    params: &ClassParams,
    log_g: Option<&ScalarFn>,
) -> (f64, GridPoint) {
    let mut worst = f64::NEG_INFINITY;
    let mut at = GridPoint { t: 0.0, s: 0.0, t0: 0.0 };
    for branch in 0..2 {
        for row in &data.rows[branch] {
            let m = params.branch_margin(branch, row.t, row.s, row.logratio, log_g);
            if m > worst {
                worst = m;
                at = GridPoint { t: row.t, s: row.s, t0: row.t0 };
            }
        }
    }
    (worst, at)
}

/// Worst log-margin of the class inequalities over the grid and both
/// branches; <= 0 means the constants certify on the grid.
pub fn class_margin(
    skew: &SkewEvolution,
    pair: &ProjectorPair,
    params: &ClassParams,
    grid: &GridSpec,
    x: &BasePoint,
    log_g: Option<&ScalarFn>,
) -> Result<f64> {
    params.validate()?;
    let data = collect_class_data(skew, pair, params.class(), grid, x)?;
    Ok(margin_over_data(&data, params, log_g).0)
}

/// Feature extraction for the budget fit: rows r + a*u - b*w <= ln C.
fn fit_rows(
    class: DichotomyClass,
    data: &ClassData,
    branch: usize,
    gauge_form: GaugeForm,
    subtract_g: Option<&ScalarFn>,
) -> Vec<FitRow> {
    data.rows[branch]
        .iter()
        .map(|row| {
            let r_base = if branch == 0 { row.logratio } else { -row.logratio };
            let r = r_base - subtract_g.map(|g| g.eval(row.s)).unwrap_or(0.0);
            let (u, w) = match class {
                DichotomyClass::Ued => (row.t - row.s, 0.0),
                DichotomyClass::Bved | DichotomyClass::Ed => (row.t, row.s),
                DichotomyClass::Upd => (row.t.ln() - row.s.ln(), 0.0),
                DichotomyClass::Bvpd => (row.t.ln(), row.s.ln()),
                DichotomyClass::Pd => (
                    row.t.ln(),
                    match gauge_form {
                        GaugeForm::ExpTime => row.s,
                        GaugeForm::PowTime => row.s.ln(),
                    },
                ),
            };
            FitRow { u, w, r, at: (row.t, row.s, row.t0) }
        })
        .collect()
}

struct FitOutcome {
    params: ClassParams,
    feasible: bool,
    argmax: Option<GridPoint>,
}

fn floor_params(class: DichotomyClass) -> ClassParams {
    let cap = LOG_N_CAP;
    match class {
        DichotomyClass::Ued => ClassParams::Ued { log_n1: cap, log_n2: cap, nu1: EXP_FLOOR, nu2: EXP_FLOOR },
        DichotomyClass::Bved => ClassParams::Bved { log_n: cap, alpha1: EXP_FLOOR, alpha2: EXP_FLOOR, beta1: cap, beta2: cap },
        DichotomyClass::Ed => ClassParams::Ed {
            gauge1: Gauge::exp(cap, cap),
            gauge2: Gauge::exp(cap, cap),
            nu1: EXP_FLOOR,
            nu2: EXP_FLOOR,
        },
        DichotomyClass::Upd => ClassParams::Upd { log_n: cap, alpha1: EXP_FLOOR, alpha2: EXP_FLOOR },
        DichotomyClass::Bvpd => ClassParams::Bvpd { log_n: cap, alpha1: EXP_FLOOR, alpha2: EXP_FLOOR, beta1: cap, beta2: cap },
        DichotomyClass::Pd => ClassParams::Pd { gauge: Gauge::exp(cap, cap), alpha1: EXP_FLOOR, alpha2: EXP_FLOOR },
    }
}

fn fit_two_branches(
    class: DichotomyClass,
    data: &ClassData,
    gauge_form: GaugeForm,
    subtract_g: Option<&ScalarFn>,
    caps: FitCaps,
) -> (Option<(BranchFit, BranchFit)>, Option<GridPoint>) {
    let rows1 = fit_rows(class, data, 0, gauge_form, subtract_g);
    let rows2 = fit_rows(class, data, 1, gauge_form, subtract_g);
    let f1 = budget_fit(&rows1, caps);
    let f2 = budget_fit(&rows2, caps);
    match (&f1, &f2) {
        (BranchFit::Feasible { .. }, BranchFit::Feasible { .. }) => (Some((f1, f2)), None),
        (BranchFit::Infeasible { argmax, .. }, _) | (_, BranchFit::Infeasible { argmax, .. }) => {
            (None, Some(GridPoint { t: argmax.0, s: argmax.1, t0: argmax.2 }))
        }
    }
}

fn parametric_fit(class: DichotomyClass, data: &ClassData, log_g: Option<&ScalarFn>) -> FitOutcome {
    let feasible = |f1: BranchFit, f2: BranchFit, with_g: bool, form: GaugeForm| -> ClassParams {
        let (a1, b1, c1) = match f1 {
            BranchFit::Feasible { a, b, log_c } => (a, b, log_c),
            BranchFit::Infeasible { .. } => unreachable!("checked feasible"),
        };
        let (a2, b2, c2) = match f2 {
            BranchFit::Feasible { a, b, log_c } => (a, b, log_c),
            BranchFit::Infeasible { .. } => unreachable!("checked feasible"),
        };
        match class {
            DichotomyClass::Ued => ClassParams::Ued { log_n1: c1, log_n2: c2, nu1: a1, nu2: a2 },
            DichotomyClass::Bved => {
                ClassParams::Bved { log_n: c1.max(c2), alpha1: a1, alpha2: a2, beta1: b1, beta2: b2 }
            }
            DichotomyClass::Ed => ClassParams::Ed {
                gauge1: gauge(c1, b1, GaugeForm::ExpTime, with_g),
                gauge2: gauge(c2, b2, GaugeForm::ExpTime, with_g),
                nu1: a1,
                nu2: a2,
            },
            DichotomyClass::Upd => ClassParams::Upd { log_n: c1.max(c2), alpha1: a1, alpha2: a2 },
            DichotomyClass::Bvpd => {
                ClassParams::Bvpd { log_n: c1.max(c2), alpha1: a1, alpha2: a2, beta1: b1, beta2: b2 }
            }
            DichotomyClass::Pd => ClassParams::Pd {
                gauge: gauge(c1.max(c2), b1.max(b2), form, with_g),
                alpha1: a1,
                alpha2: a2,
            },
        }
    };

    // candidate structural variants: gauge classes may borrow the instance's
    // knot factor; the polynomial gauge may live in s^eta instead of e^{eta s}
    let variants: Vec<(GaugeForm, bool)> = match class {
        DichotomyClass::Ed => {
            let mut v = vec![(GaugeForm::ExpTime, false)];
            if log_g.is_some() {
                v.push((GaugeForm::ExpTime, true));
            }
            v
        }
        DichotomyClass::Pd => {
            let mut v = vec![(GaugeForm::ExpTime, false), (GaugeForm::PowTime, false)];
            if log_g.is_some() {
                v.push((GaugeForm::ExpTime, true));
                v.push((GaugeForm::PowTime, true));
            }
            v
        }
        _ => vec![(GaugeForm::ExpTime, false)],
    };

    let caps = match class {
        DichotomyClass::Ued | DichotomyClass::Upd => FitCaps::no_gauge(),
        DichotomyClass::Ed | DichotomyClass::Pd => FitCaps::gauge_from_zero(),
        _ => FitCaps::standard(),
    };

    let mut last_argmax = None;
    for (form, with_g) in variants {
        let sub = if with_g { log_g } else { None };
        let (fits, argmax) = fit_two_branches(class, data, form, sub, caps);
        match fits {
            Some((f1, f2)) => {
                return FitOutcome { params: feasible(f1, f2, with_g, form), feasible: true, argmax: None };
            }
            None => last_argmax = argmax,
        }
    }
    FitOutcome { params: floor_params(class), feasible: false, argmax: last_argmax }
}

fn gauge(log_coeff: f64, rate: f64, form: GaugeForm, with_g: bool) -> Gauge {
    let mut g = Gauge { log_coeff, rate, form, with_log_g: false };
    if with_g {
        g = g.with_g();
    }
    g
}

/// Fit class constants on the grid. Recorded instance constants are tried
/// first; otherwise the minimax budget fit searches the parametric family
/// under the standard caps. The certificate's margin is always re-verified
/// against the full grid data.
pub fn fit_class(
    skew: &SkewEvolution,
    pair: &ProjectorPair,
    class: DichotomyClass,
    grid: &GridSpec,
    x: &BasePoint,
    log_g: Option<&ScalarFn>,
    claimed: Option<&ClassParams>,
) -> Result<Certificate> {
    let data = collect_class_data(skew, pair, class, grid, x)?;
    let claimed_margin = match claimed {
        Some(p) if p.class() == class => {
            p.validate()?;
            Some(margin_over_data(&data, p, log_g).0)
        }
        _ => None,
    };
    if let (Some(p), Some(cm)) = (claimed, claimed_margin) {
        if cm <= grid.tol_log {
            return Ok(Certificate {
                class,
                verdict: Verdict::Certified,
                source: CertSource::Claimed,
                params: p.clone(),
                worst_margin_log: cm,
                tol_log: grid.tol_log,
                argmax: None,
                claimed_margin_log: claimed_margin,
            });
        }
    }
    let fit = parametric_fit(class, &data, log_g);
    let (margin, at) = margin_over_data(&data, &fit.params, log_g);
    let verdict = if fit.feasible && margin <= grid.tol_log { Verdict::Certified } else { Verdict::Violated };
    Ok(Certificate {
        class,
        verdict,
        source: CertSource::Fitted,
        params: fit.params,
        worst_margin_log: margin,
        tol_log: grid.tol_log,
        argmax: if verdict == Verdict::Violated { fit.argmax.or(Some(at)) } else { None },
        claimed_margin_log: claimed_margin,
    })
}

// ---------------------------------------------------------------------------
// witnesses

/// Closed-form (t_n, s_n) witness sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "seq", rename_all = "snake_case")]
pub enum WitnessSeq {
    /// t = 2 n pi + pi/2, s = 2 n pi
    SinPeaks,
    /// t = 2 n pi, s = 2 n pi - pi
    SinPeaksUnstable,
    /// t = n + 4^{-n}, s = n
    KnotGaps,
    /// t = e^{2 n pi + pi/2} - 1, s = e^{2 n pi - pi/2} - 1
    ExpLogPeaks,
}

impl WitnessSeq {
    pub fn times(&self, n: u32) -> (f64, f64) {
        use std::f64::consts::PI;
        let nf = f64::from(n);
        match self {
            WitnessSeq::SinPeaks => (2.0 * nf * PI + PI / 2.0, 2.0 * nf * PI),
            WitnessSeq::SinPeaksUnstable => (2.0 * nf * PI, 2.0 * nf * PI - PI),
            WitnessSeq::KnotGaps => (nf + 4.0f64.powi(-(n as i32)), nf),
            WitnessSeq::ExpLogPeaks => {
                ((2.0 * nf * PI + PI / 2.0).exp() - 1.0, (2.0 * nf * PI - PI / 2.0).exp() - 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessBranch {
    Stable,
    Unstable,
    Both,
}

/// A registered falsification sequence for one class of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub name: String,
    pub seq: WitnessSeq,
    pub branch: WitnessBranch,
    pub target: DichotomyClass,
    /// Closed-form margin increment per step, when one exists.
    pub expected_increment: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessVerdict {
    Falsified,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub witness: String,
    pub class: DichotomyClass,
    pub branch: WitnessBranch,
    pub n_values: Vec<u32>,
    pub times: Vec<(f64, f64)>,
    /// Per-n violation margin, minimized over the candidate constant family.
    pub margins_log: Vec<f64>,
    pub verdict: WitnessVerdict,
    pub expected_increment: Option<f64>,
    pub family_size: usize,
}

/// Representative constant sets a falsification must beat.
pub fn default_params_family(class: DichotomyClass) -> Vec<ClassParams> {
    let mut out = Vec::new();
    for &log_n in &[0.0, 10.0] {
        for &rate in &[1e-3, 1.0, 5.0] {
            out.push(match class {
                DichotomyClass::Ued => ClassParams::Ued { log_n1: log_n, log_n2: log_n, nu1: rate, nu2: rate },
                DichotomyClass::Bved => {
                    ClassParams::Bved { log_n, alpha1: rate, alpha2: rate, beta1: rate, beta2: rate }
                }
                DichotomyClass::Ed => ClassParams::Ed {
                    gauge1: Gauge::exp(log_n, 1.0),
                    gauge2: Gauge::exp(log_n, 1.0),
                    nu1: rate,
                    nu2: rate,
                },
                DichotomyClass::Upd => ClassParams::Upd { log_n, alpha1: rate, alpha2: rate },
                DichotomyClass::Bvpd => {
                    ClassParams::Bvpd { log_n, alpha1: rate, alpha2: rate, beta1: rate, beta2: rate }
                }
                DichotomyClass::Pd => ClassParams::Pd { gauge: Gauge::exp(log_n, 1.0), alpha1: rate, alpha2: rate },
            });
        }
    }
    out
}

/// Evaluate a witness sequence: per-n margins (minimized over the candidate
/// family, maximized over the targeted branches) and the divergence verdict.
/// Margins that fail to increase strictly, or increase too slowly, or never
/// clear the threshold, stay inconclusive.
pub fn falsify(
    skew: &SkewEvolution,
    pair: &ProjectorPair,
    x: &BasePoint,
    log_g: Option<&ScalarFn>,
    witness: &Witness,
    params_family: &[ClassParams],
    n_max: u32,
) -> Result<WitnessReport> {
    let class = witness.target;
    let family: Vec<&ClassParams> = params_family.iter().filter(|p| p.class() == class).collect();
    if family.is_empty() {
        return Err(Error::Validation("params family has no candidates for the witness class".into()));
    }
    let branches: &[usize] = match witness.branch {
        WitnessBranch::Stable => &[0],
        WitnessBranch::Unstable => &[1],
        WitnessBranch::Both => &[0, 1],
    };
    let mut n_values = Vec::new();
    let mut times = Vec::new();
    let mut margins = Vec::new();
    for n in 1..=n_max {
        let (t, s) = witness.seq.times(n);
        if s < 0.0 || (class.is_polynomial() && s < 1.0) {
            continue;
        }
        let mut ratio = [f64::NAN; 2];
        for &branch in branches {
            let restricted = RestrictedCocycle { skew: skew.clone(), pair: pair.clone(), branch };
            let v = if branch == 0 { crate::cocycles::StateVector::E1 } else { crate::cocycles::StateVector::E2 };
            let hi = restricted.log_norm(t, s, x, &v)?;
            let lo = restricted.log_norm(s, s, x, &v)?;
            ratio[branch] = match (hi, lo) {
                (Some(hi), Some(lo)) => hi - lo,
                _ => return Err(Error::Validation("witness hit a vanishing branch".into())),
            };
        }
        let margin = family
            .iter()
            .map(|p| {
                branches
                    .iter()
                    .map(|&b| p.branch_margin(b, t, s, ratio[b], log_g))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        n_values.push(n);
        times.push((t, s));
        margins.push(margin);
    }
    let verdict = witness_verdict(&margins);
    Ok(WitnessReport {
        witness: witness.name.clone(),
        class,
        branch: witness.branch,
        n_values,
        times,
        margins_log: margins,
        verdict,
        expected_increment: witness.expected_increment,
        family_size: family.len(),
    })
}

fn witness_verdict(margins: &[f64]) -> WitnessVerdict {
    if margins.len() < 2 {
        return WitnessVerdict::Inconclusive;
    }
    let increasing = margins.windows(2).all(|w| w[1] - w[0] >= MIN_INCREMENT);
    let last = *margins.last().expect("nonempty");
    if increasing && last > FALSIFY_THRESHOLD {
        WitnessVerdict::Falsified
    } else {
        WitnessVerdict::Inconclusive
    }
}

// ---------------------------------------------------------------------------
// classifier

/// Recorded conclusion for one class of a gallery instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimedClass {
    pub class: DichotomyClass,
    pub verdict: Verdict,
    pub params: Option<ClassParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutcome {
    pub certificates: Vec<Certificate>,
    pub witness_reports: Vec<WitnessReport>,
}

const DEFAULT_WITNESS_N_MAX: u32 = 12;

/// Run fits, witnesses, and the implication lattice for every class.
///
/// Verdict precedence: a diverging witness overrides a grid fit; violations
/// then propagate along the contrapositive of the implication edges;
/// certified classes convert downward with the standard constant
/// conversions where the target has no certificate of its own. A certified
/// stronger class next to a violated weaker class is an internal error.
pub fn classify(
    skew: &SkewEvolution,
    pair: &ProjectorPair,
    exp_grid: &GridSpec,
    poly_grid: &GridSpec,
    witnesses: &[Witness],
    claims: &[ClaimedClass],
    x: &BasePoint,
    log_g: Option<&ScalarFn>,
) -> Result<ClassifyOutcome> {
    validate_compatibility(skew, pair, x)?;
    poly_grid.validate_polynomial()?;

    let mut certs: Vec<Certificate> = Vec::new();
    for class in DichotomyClass::ALL {
        let grid = if class.is_polynomial() { poly_grid } else { exp_grid };
        let claimed = claims.iter().find(|c| c.class == class).and_then(|c| c.params.as_ref());
        certs.push(fit_class(skew, pair, class, grid, x, log_g, claimed)?);
    }

    // witness falsification overrides grid evidence
    let mut reports = Vec::new();
    for witness in witnesses {
        let idx = DichotomyClass::ALL.iter().position(|&c| c == witness.target).expect("class in ALL");
        let mut family = default_params_family(witness.target);
        if certs[idx].verdict == Verdict::Certified {
            family.push(certs[idx].params.clone());
        }
        if let Some(p) = claims.iter().find(|c| c.class == witness.target).and_then(|c| c.params.clone()) {
            family.push(p);
        }
        let report = falsify(skew, pair, x, log_g, witness, &family, DEFAULT_WITNESS_N_MAX)?;
        if report.verdict == WitnessVerdict::Falsified {
            let cert = &mut certs[idx];
            cert.verdict = Verdict::Violated;
            cert.source = CertSource::Witness { name: witness.name.clone() };
            cert.worst_margin_log = *report.margins_log.last().expect("falsified implies margins");
            cert.argmax = None;
        }
        reports.push(report);
    }

    // violations travel up the lattice (contrapositive of stronger -> weaker)
    loop {
        let mut changed = false;
        for class in DichotomyClass::ALL {
            let idx = DichotomyClass::ALL.iter().position(|&c| c == class).expect("class in ALL");
            if certs[idx].verdict != Verdict::Certified {
                continue;
            }
            for &weaker in class.implies() {
                let widx = DichotomyClass::ALL.iter().position(|&c| c == weaker).expect("class in ALL");
                if certs[widx].verdict == Verdict::Violated
                    && matches!(certs[widx].source, CertSource::Witness { .. } | CertSource::ImpliedViolation { .. })
                {
                    let inherited = certs[widx].worst_margin_log;
                    let cert = &mut certs[idx];
                    cert.verdict = Verdict::Violated;
                    cert.source = CertSource::ImpliedViolation { from: weaker };
                    cert.worst_margin_log = inherited;
                    cert.argmax = None;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // downward conversions from certified classes
    apply_conversions(skew, pair, exp_grid, poly_grid, x, log_g, &mut certs)?;

    // final consistency: no certified stronger class above a violated weaker one
    for class in DichotomyClass::ALL {
        let idx = DichotomyClass::ALL.iter().position(|&c| c == class).expect("class in ALL");
        if certs[idx].verdict != Verdict::Certified {
            continue;
        }
        for &weaker in class.implies() {
            let widx = DichotomyClass::ALL.iter().position(|&c| c == weaker).expect("class in ALL");
            if certs[widx].verdict == Verdict::Violated {
                return Err(Error::LatticeInconsistency(format!(
                    "{} certified but implied {} violated",
                    class.code(),
                    weaker.code()
                )));
            }
        }
    }

    Ok(ClassifyOutcome { certificates: certs, witness_reports: reports })
}

/// Constant conversions along the certified edges, re-verified on the target
/// grid before they are adopted.
fn apply_conversions(
    skew: &SkewEvolution,
    pair: &ProjectorPair,
    exp_grid: &GridSpec,
    poly_grid: &GridSpec,
    x: &BasePoint,
    log_g: Option<&ScalarFn>,
    certs: &mut [Certificate],
) -> Result<()> {
    let idx_of = |c: DichotomyClass| DichotomyClass::ALL.iter().position(|&k| k == c).expect("class in ALL");
    // topological order of the certified-conversion edges
    let order = [
        DichotomyClass::Ued,
        DichotomyClass::Bved,
        DichotomyClass::Upd,
        DichotomyClass::Ed,
        DichotomyClass::Bvpd,
    ];
    for class in order {
        let i = idx_of(class);
        if certs[i].verdict != Verdict::Certified {
            continue;
        }
        let params = certs[i].params.clone();
        for (target, converted) in convert_params(&params) {
            let j = idx_of(target);
            if certs[j].verdict == Verdict::Certified {
                continue;
            }
            let grid = if target.is_polynomial() { poly_grid } else { exp_grid };
            let margin = class_margin(skew, pair, &converted, grid, x, log_g)?;
            if margin <= grid.tol_log {
                certs[j] = Certificate {
                    class: target,
                    verdict: Verdict::Certified,
                    source: CertSource::Implied { from: class },
                    params: converted,
                    worst_margin_log: margin,
                    tol_log: grid.tol_log,
                    argmax: None,
                    claimed_margin_log: certs[j].claimed_margin_log,
                };
            }
        }
    }
    Ok(())
}

/// The standard constant conversions used by the implication lattice.
pub fn convert_params(params: &ClassParams) -> Vec<(DichotomyClass, ClassParams)> {
    match *params {
        ClassParams::Ued { log_n1, log_n2, nu1, nu2 } => {
            let log_n = log_n1.max(log_n2);
            vec![
                (
                    DichotomyClass::Bved,
                    ClassParams::Bved { log_n, alpha1: nu1, alpha2: nu2, beta1: nu1, beta2: nu2 },
                ),
                (DichotomyClass::Upd, ClassParams::Upd { log_n, alpha1: nu1, alpha2: nu2 }),
            ]
        }
        ClassParams::Bved { log_n, alpha1, alpha2, beta1, beta2 } => {
            let mut out = vec![(
                DichotomyClass::Ed,
                ClassParams::Ed {
                    gauge1: Gauge::exp(log_n, beta1),
                    gauge2: Gauge::exp(log_n, beta2),
                    nu1: alpha1,
                    nu2: alpha2,
                },
            )];
            if alpha1 >= beta1 && alpha2 >= beta2 {
                out.push((
                    DichotomyClass::Bvpd,
                    ClassParams::Bvpd { log_n, alpha1, alpha2, beta1, beta2 },
                ));
            }
            out
        }
        ClassParams::Ed { ref gauge1, ref gauge2, nu1, nu2 } => {
            let gauge = Gauge {
                log_coeff: gauge1.log_coeff.max(gauge2.log_coeff),
                rate: gauge1.rate.max(gauge2.rate),
                form: gauge1.form,
                with_log_g: gauge1.with_log_g || gauge2.with_log_g,
            };
            vec![(DichotomyClass::Pd, ClassParams::Pd { gauge, alpha1: nu1, alpha2: nu2 })]
        }
        ClassParams::Upd { log_n, alpha1, alpha2 } => vec![(
            DichotomyClass::Bvpd,
            ClassParams::Bvpd { log_n, alpha1, alpha2, beta1: alpha1, beta2: alpha2 },
        )],
        ClassParams::Bvpd { log_n, alpha1, alpha2, beta1, beta2 } => vec![(
            DichotomyClass::Pd,
            ClassParams::Pd {
                gauge: Gauge::pow(log_n, beta1.max(beta2)),
                alpha1,
                alpha2,
            },
        )],
        ClassParams::Pd { .. } => vec![],
    }
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

    fn slope_skew(a: f64, b: f64) -> SkewEvolution {
        SkewEvolution::new(DiagonalCocycle::new(
            ScalarFn::from_terms(vec![ExprTerm::Poly { coeffs: vec![0.0, a] }]),
            ScalarFn::from_terms(vec![ExprTerm::Poly { coeffs: vec![0.0, b] }]),
            0.0,
            0.0,
        ))
    }

    fn exp_grid(n: usize) -> GridSpec {
        GridSpec {
            t_range: RangeSpec::new(0.0, 60.0, n, Spacing::LogMix).unwrap(),
            s_range: RangeSpec::new(0.0, 60.0, n, Spacing::LogMix).unwrap(),
            t0_values: vec![0.0],
            vectors: vec![crate::cocycles::StateVector::E1, crate::cocycles::StateVector::E2],
            tol_log: 1e-9,
        }
    }

    fn poly_grid(n: usize) -> GridSpec {
        GridSpec {
            t_range: RangeSpec::new(1.0, 60.0, n, Spacing::LogMix).unwrap(),
            s_range: RangeSpec::new(1.0, 60.0, n, Spacing::LogMix).unwrap(),
            t0_values: vec![],
            vectors: vec![crate::cocycles::StateVector::E1, crate::cocycles::StateVector::E2],
            tol_log: 1e-9,
        }
    }

    #[test]
    fn ued_margin_at_equal_times_is_minus_log_n() {
        let skew = slope_skew(-1.0, 1.0);
        let grid = GridSpec {
            t_range: RangeSpec::new(0.0, 5.0, 4, Spacing::Linear).unwrap(),
            s_range: RangeSpec::new(0.0, 5.0, 4, Spacing::Linear).unwrap(),
            t0_values: vec![],
            vectors: vec![crate::cocycles::StateVector::ONES],
            tol_log: 1e-9,
        };
        // restrict the sweep to t = s by using a degenerate params check
        let params = ClassParams::Ued { log_n1: 2.0, log_n2: 2.0, nu1: 0.5, nu2: 0.5 };
        let data = collect_class_data(&skew, &ProjectorPair::coordinate(), DichotomyClass::Ued, &grid, &x0()).unwrap();
        let diag_margin = data.rows[0]
            .iter()
            .filter(|r| r.t == r.s)
            .map(|r| params.branch_margin(0, r.t, r.s, r.logratio, None))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((diag_margin - (-2.0)).abs() < 1e-12);
    }

    #[test]
    fn fitter_recovers_synthetic_slopes() {
        let skew = slope_skew(-2.0, 2.0);
        let cert = fit_class(&skew, &ProjectorPair::coordinate(), DichotomyClass::Ued, &exp_grid(40), &x0(), None, None)
            .unwrap();
        assert_eq!(cert.verdict, Verdict::Certified);
        match cert.params {
            ClassParams::Ued { log_n1, log_n2, nu1, nu2 } => {
                assert!((nu1 - 2.0).abs() < 1e-3, "nu1 = {nu1}");
                assert!((nu2 - 2.0).abs() < 1e-3, "nu2 = {nu2}");
                assert!(log_n1 < 1e-6 && log_n2 < 1e-6);
            }
            other => panic!("unexpected params {other:?}"),
        }
    }

    #[test]
    fn ued_certificate_converts_to_upd() {
        let skew = slope_skew(-1.7, 0.9);
        let pair = ProjectorPair::coordinate();
        let cert = fit_class(&skew, &pair, DichotomyClass::Ued, &exp_grid(30), &x0(), None, None).unwrap();
        assert_eq!(cert.verdict, Verdict::Certified);
        let conversions = convert_params(&cert.params);
        let (_, upd) = conversions
            .iter()
            .find(|(c, _)| *c == DichotomyClass::Upd)
            .expect("upd conversion");
        let margin = class_margin(&skew, &pair, upd, &poly_grid(30), &x0(), None).unwrap();
        assert!(margin <= 1e-9, "margin {margin}");
    }

    #[test]
    fn classify_synthetic_certifies_all_six() {
        let skew = slope_skew(-2.0, 2.0);
        let outcome = classify(
            &skew,
            &ProjectorPair::coordinate(),
            &exp_grid(24),
            &poly_grid(24),
            &[],
            &[],
            &x0(),
            None,
        )
        .unwrap();
        for cert in &outcome.certificates {
            assert_eq!(cert.verdict, Verdict::Certified, "{} should certify", cert.class.code());
            assert!(cert.worst_margin_log <= 1e-9);
        }
    }

    #[test]
    fn witness_inconclusive_on_constant_cocycle() {
        let skew = slope_skew(0.0, 0.0);
        let witness = Witness {
            name: "sin-peaks".into(),
            seq: WitnessSeq::SinPeaks,
            branch: WitnessBranch::Stable,
            target: DichotomyClass::Ued,
            expected_increment: None,
        };
        let family = default_params_family(DichotomyClass::Ued);
        let report = falsify(&skew, &ProjectorPair::coordinate(), &x0(), None, &witness, &family, 8).unwrap();
        assert_eq!(report.verdict, WitnessVerdict::Inconclusive);
    }

    #[test]
    fn witness_empty_range_is_inconclusive() {
        let skew = slope_skew(-1.0, 1.0);
        let witness = Witness {
            name: "sin-peaks".into(),
            seq: WitnessSeq::SinPeaks,
            branch: WitnessBranch::Stable,
            target: DichotomyClass::Ued,
            expected_increment: None,
        };
        let family = default_params_family(DichotomyClass::Ued);
        let report = falsify(&skew, &ProjectorPair::coordinate(), &x0(), None, &witness, &family, 0).unwrap();
        assert!(report.margins_log.is_empty());
        assert_eq!(report.verdict, WitnessVerdict::Inconclusive);
    }

    #[test]
    fn class_margin_rejects_polynomial_grid_below_one() {
        let skew = slope_skew(-1.0, 1.0);
        let params = ClassParams::Upd { log_n: 0.0, alpha1: 1.0, alpha2: 1.0 };
        let err = class_margin(&skew, &ProjectorPair::coordinate(), &params, &exp_grid(8), &x0(), None);
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}
