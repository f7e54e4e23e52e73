//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the operation's domain (negative time, bad count, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Times were not ordered as `t >= s >= 0` (or the three-time variant).
    #[error("time ordering violated: {0}")]
    Ordering(String),

    /// A structural precondition failed (non-idempotent projector, bad grid, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A projector pair is not compatible with the cocycle; carries the
    /// offending grid point.
    #[error("incompatible projectors: residual {residual:.3e} at (t, s) = ({t}, {s})")]
    IncompatibleProjectors { t: f64, s: f64, residual: f64 },

    /// An integral criterion's integrand does not decay.
    #[error("criterion fails: divergent integrand near tau = {0}")]
    Divergent(f64),

    /// A hypothesis gate failed; the check is reported as not applicable.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A certified stronger class coexists with a violated weaker class.
    #[error("implication lattice inconsistency: {0}")]
    LatticeInconsistency(String),

    /// Input (instance spec, flags) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_ordered(t: f64, s: f64) -> Result<()> {
    if !(t >= s && s >= 0.0) {
        return Err(Error::Ordering(format!("need t >= s >= 0, got t={t}, s={s}")));
    }
    Ok(())
}

pub(crate) fn require_ordered3(t: f64, s: f64, t0: f64) -> Result<()> {
    if !(t >= s && s >= t0 && t0 >= 0.0) {
        return Err(Error::Ordering(format!(
            "need t >= s >= t0 >= 0, got t={t}, s={s}, t0={t0}"
        )));
    }
    Ok(())
}
