//! Projector families, complementary projectors, invariance checks, and
//! restricted cocycles.

use serde::{Deserialize, Serialize};

use crate::base_space::{semiflow, BasePoint};
use crate::cocycles::{apply, LogVector, SkewEvolution, StateVector};
use crate::error::{require_ordered, Error, Result};
use crate::grid::log_spaced;
use crate::logspace::LogScalar;

const IDEMPOTENCE_TOL: f64 = 1e-12;
const COMPAT_TOL: f64 = 1e-9;

/// 2x2 real matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const P1: Mat2 = Mat2([[1.0, 0.0], [0.0, 0.0]]);
    pub const P2: Mat2 = Mat2([[0.0, 0.0], [0.0, 1.0]]);

    pub fn matmul(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    pub fn sub(&self, other: &Mat2) -> Mat2 {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.0[i][j] - other.0[i][j];
            }
        }
        Mat2(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn apply_state(&self, v: &StateVector) -> StateVector {
        StateVector::new(
            self.0[0][0] * v.v1 + self.0[0][1] * v.v2,
            self.0[1][0] * v.v1 + self.0[1][1] * v.v2,
        )
    }

    /// Apply to a log-space vector with signed log-sum-exp per row.
    pub fn apply_log(&self, w: &LogVector) -> LogVector {
        let row = |i: usize| {
            w.c1.scale(self.0[i][0]).add(&w.c2.scale(self.0[i][1]))
        };
        LogVector { c1: row(0), c2: row(1) }
    }

    pub fn is_idempotent(&self) -> bool {
        self.matmul(self).sub(self).max_abs() <= IDEMPOTENCE_TOL
    }
}

/// Projector family over the base space. The gallery only uses constant
/// matrices, but the map keeps its base-point argument because families may
/// depend on x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorFamily {
    matrix: Mat2,
}

impl ProjectorFamily {
    pub fn constant(matrix: Mat2) -> Result<Self> {
        if !matrix.is_idempotent() {
            return Err(Error::Validation(format!(
                "projector matrix {:?} is not idempotent to {IDEMPOTENCE_TOL:.0e}",
                matrix.0
            )));
        }
        Ok(ProjectorFamily { matrix })
    }

    pub fn coordinate(k: usize) -> Self {
        match k {
            0 => ProjectorFamily { matrix: Mat2::P1 },
            1 => ProjectorFamily { matrix: Mat2::P2 },
            _ => panic!("coordinate projector index out of range"),
        }
    }

    pub fn matrix(&self, _x: &BasePoint) -> Mat2 {
        self.matrix
    }

    pub fn matrix_value(&self) -> Mat2 {
        self.matrix
    }
}

/// x -> I - P(x).
pub fn complementary(p: &ProjectorFamily) -> Result<ProjectorFamily> {
    ProjectorFamily::constant(Mat2::IDENTITY.sub(&p.matrix_value()))
}

/// Complementary idempotent pair: p1 + p2 = I, commuting, p1 p2 = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorPair {
    pub p1: ProjectorFamily,
    pub p2: ProjectorFamily,
}

impl ProjectorPair {
    pub fn new(p1: ProjectorFamily, p2: ProjectorFamily) -> Result<Self> {
        let (m1, m2) = (p1.matrix_value(), p2.matrix_value());
        let sum_dev = m1.0[0][0] + m2.0[0][0] - 1.0;
        let checks = [
            (m1.matmul(&m2).max_abs(), "p1 p2 = 0"),
            (m2.matmul(&m1).max_abs(), "p2 p1 = 0"),
            (
                m1.matmul(&m2).sub(&m2.matmul(&m1)).max_abs(),
                "p1 and p2 commute",
            ),
        ];
        for (dev, what) in checks {
            if dev > IDEMPOTENCE_TOL {
                return Err(Error::Validation(format!("projector pair violates {what}: deviation {dev:.3e}")));
            }
        }
        let id_dev = Mat2([[sum_dev + 1.0, m1.0[0][1] + m2.0[0][1]], [m1.0[1][0] + m2.0[1][0], m1.0[1][1] + m2.0[1][1]]])
            .sub(&Mat2::IDENTITY)
            .max_abs();
        if id_dev > IDEMPOTENCE_TOL {
            return Err(Error::Validation(format!("projector pair does not sum to identity: deviation {id_dev:.3e}")));
        }
        Ok(ProjectorPair { p1, p2 })
    }

    pub fn coordinate() -> Self {
        ProjectorPair { p1: ProjectorFamily::coordinate(0), p2: ProjectorFamily::coordinate(1) }
    }

    pub fn family(&self, k: usize) -> &ProjectorFamily {
        match k {
            0 => &self.p1,
            1 => &self.p2,
            _ => panic!("projector index out of range"),
        }
    }
}

/// Residual of P(phi(t,s,x)) Phi(t,s,x) v against Phi(t,s,x) P(x) v.
///
/// Components with matching signs compare log-magnitudes; a component that
/// vanishes on one side only reports the surviving magnitude (capped into
/// linear scale so small mismatches stay comparable).
pub fn invariance_residual(
    skew: &SkewEvolution,
    p: &ProjectorFamily,
    t: f64,
    s: f64,
    x: &BasePoint,
    v: &StateVector,
) -> Result<f64> {
    require_ordered(t, s)?;
    let y = semiflow(t, s, x)?;
    let transported = apply(&skew.cocycle, t, s, x, v)?;
    let left = p.matrix(&y).apply_log(&transported);
    let projected = p.matrix(x).apply_state(v);
    let right = apply(&skew.cocycle, t, s, x, &projected)?;
    let mut worst = 0.0f64;
    for k in 0..2 {
        let (a, b) = (left.component(k), right.component(k));
        worst = worst.max(component_residual(&a, &b));
    }
    Ok(worst)
}

fn component_residual(a: &LogScalar, b: &LogScalar) -> f64 {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => 0.0,
        (true, false) => b.log_abs.exp().min(f64::MAX),
        (false, true) => a.log_abs.exp().min(f64::MAX),
        (false, false) => {
            if a.sign == b.sign {
                (a.log_abs - b.log_abs).abs()
            } else {
                // opposite signs: magnitudes add
                a.add(b).log_abs.exp().min(f64::MAX)
            }
        }
    }
}

/// The 7x7 logarithmically spaced validation grid on [0, 60] used by
/// `restrict`.
fn compatibility_grid() -> Vec<(f64, f64)> {
    let pts = log_spaced(0.0, 60.0, 7);
    let mut pairs = Vec::new();
    for &t in &pts {
        for &s in &pts {
            if t >= s {
                pairs.push((t, s));
            }
        }
    }
    pairs
}

/// Validate compatibility of the pair with the cocycle on the standard grid.
pub fn validate_compatibility(skew: &SkewEvolution, pair: &ProjectorPair, x: &BasePoint) -> Result<()> {
    for (t, s) in compatibility_grid() {
        for v in [StateVector::E1, StateVector::E2] {
            for fam in [&pair.p1, &pair.p2] {
                let r = invariance_residual(skew, fam, t, s, x, &v)?;
                if r > COMPAT_TOL {
                    return Err(Error::IncompatibleProjectors { t, s, residual: r });
                }
            }
        }
    }
    Ok(())
}

/// A cocycle restricted through one projector of a compatible pair:
/// Phi_k(t, s, x) = Phi(t, s, x) P_k(x).
#[derive(Debug, Clone)]
pub struct RestrictedCocycle {
    pub skew: SkewEvolution,
    pub pair: ProjectorPair,
    pub branch: usize,
}

impl RestrictedCocycle {
    pub fn apply(&self, t: f64, s: f64, x: &BasePoint, v: &StateVector) -> Result<LogVector> {
        let projected = self.pair.family(self.branch).matrix(x).apply_state(v);
        apply(&self.skew.cocycle, t, s, x, &projected)
    }

    /// log norm of Phi_k(t, s, x) v, or None when P_k(x) v = 0.
    pub fn log_norm(&self, t: f64, s: f64, x: &BasePoint, v: &StateVector) -> Result<Option<f64>> {
        let w = self.apply(t, s, x, v)?;
        if w.is_zero() {
            Ok(None)
        } else {
            Ok(Some(w.log_norm_l1()))
        }
    }
}

/// Build the restricted skew-evolution for branch k of a compatible pair.
pub fn restrict(skew: &SkewEvolution, pair: &ProjectorPair, branch: usize, x: &BasePoint) -> Result<RestrictedCocycle> {
    if branch > 1 {
        return Err(Error::Validation("branch must be 1 or 2 (zero-indexed 0/1)".into()));
    }
    validate_compatibility(skew, pair, x)?;
    Ok(RestrictedCocycle { skew: skew.clone(), pair: pair.clone(), branch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_space::GeneratorSpec;
    use crate::expr::ScalarFn;
    use crate::cocycles::DiagonalCocycle;

    fn x0() -> BasePoint {
        BasePoint::new(GeneratorSpec::default_gallery(), 0.0).unwrap()
    }

    fn skew(a1: f64, a2: f64) -> SkewEvolution {
        SkewEvolution::new(DiagonalCocycle::new(ScalarFn::zero(), ScalarFn::zero(), a1, a2))
    }

    #[test]
    fn complementary_of_coordinate() {
        let q = complementary(&ProjectorFamily::coordinate(0)).unwrap();
        assert_eq!(q.matrix_value(), Mat2::P2);
        let z = complementary(&ProjectorFamily::constant(Mat2::IDENTITY).unwrap()).unwrap();
        assert_eq!(z.matrix_value(), Mat2::ZERO);
    }

    #[test]
    fn complementary_is_involution() {
        let p = ProjectorFamily::constant(Mat2([[1.0, 1.0], [0.0, 0.0]])).unwrap();
        let back = complementary(&complementary(&p).unwrap()).unwrap();
        assert!(back.matrix_value().sub(&p.matrix_value()).max_abs() <= 1e-12);
    }

    #[test]
    fn complementary_rejects_non_idempotent() {
        assert!(ProjectorFamily::constant(Mat2([[0.5, 0.0], [0.0, 1.0]])).is_err());
    }

    #[test]
    fn invariance_zero_for_coordinate_on_diagonal() {
        let c = skew(-1.0, 1.0);
        for fam in [ProjectorFamily::coordinate(0), ProjectorFamily::coordinate(1)] {
            let r = invariance_residual(&c, &fam, 5.0, 2.0, &x0(), &StateVector::ONES).unwrap();
            assert_eq!(r, 0.0);
        }
        let r = invariance_residual(&c, &ProjectorFamily::coordinate(0), 2.0, 2.0, &x0(), &StateVector::ONES).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn rotated_projector_is_negative_control() {
        let c = skew(-1.0, 1.0);
        let rotated = ProjectorFamily::constant(Mat2([[1.0, 1.0], [0.0, 0.0]])).unwrap();
        let r = invariance_residual(&c, &rotated, 2.0, 0.0, &x0(), &StateVector::ONES).unwrap();
        assert!(r > 0.1, "residual {r}");
    }

    #[test]
    fn invariance_of_p_transfers_to_complement() {
        let c = skew(-1.0, 1.0);
        let p = ProjectorFamily::coordinate(0);
        let q = complementary(&p).unwrap();
        for (t, s) in [(1.0, 0.0), (10.0, 4.0), (33.0, 33.0)] {
            let rp = invariance_residual(&c, &p, t, s, &x0(), &StateVector::ONES).unwrap();
            let rq = invariance_residual(&c, &q, t, s, &x0(), &StateVector::ONES).unwrap();
            assert!(rp <= 1e-12 && rq <= 1e-12);
        }
    }

    #[test]
    fn pair_decomposes_vectors() {
        let pair = ProjectorPair::coordinate();
        let v = StateVector::new(0.3, -2.0);
        let a = pair.p1.matrix(&x0()).apply_state(&v);
        let b = pair.p2.matrix(&x0()).apply_state(&v);
        assert_eq!(a.v1 + b.v1, v.v1);
        assert_eq!(a.v2 + b.v2, v.v2);
    }

    #[test]
    fn restrict_kills_complementary_coordinate() {
        let c = skew(-1.0, 1.0);
        let restricted = restrict(&c, &ProjectorPair::coordinate(), 0, &x0()).unwrap();
        let w = restricted.apply(3.0, 1.0, &x0(), &StateVector::E2).unwrap();
        assert!(w.is_zero());
    }

    #[test]
    fn restrict_matches_component_apply() {
        let c = skew(-1.0, 1.0);
        let restricted = restrict(&c, &ProjectorPair::coordinate(), 0, &x0()).unwrap();
        let w = restricted.apply(1.0, 0.0, &x0(), &StateVector::ONES).unwrap();
        let full = apply(&c.cocycle, 1.0, 0.0, &x0(), &StateVector::ONES).unwrap();
        assert_eq!(w.c1, full.c1);
        assert!(w.c2.is_zero());
    }

    #[test]
    fn restrict_rejects_incompatible_pair() {
        let c = skew(-1.0, 1.0);
        let p1 = ProjectorFamily::constant(Mat2([[1.0, 1.0], [0.0, 0.0]])).unwrap();
        let p2 = complementary(&p1).unwrap();
        let pair = ProjectorPair::new(p1, p2).unwrap();
        match restrict(&c, &pair, 0, &x0()) {
            Err(Error::IncompatibleProjectors { residual, .. }) => assert!(residual > COMPAT_TOL),
            other => panic!("expected incompatibility, got {other:?}"),
        }
    }

    #[test]
    fn restricted_cocycle_still_composes() {
        let c = skew(-1.0, 1.0);
        let restricted = restrict(&c, &ProjectorPair::coordinate(), 0, &x0()).unwrap();
        // law through projected inputs: Phi_1(t,s,.) Phi_1(s,t0,x) v = Phi_1(t,t0,x) v
        let x = x0();
        let (t, s, t0) = (9.0, 5.5, 1.0);
        let mid_point = semiflow(s, t0, &x).unwrap();
        let inner = restricted.apply(s, t0, &x, &StateVector::ONES).unwrap();
        let inner_state = StateVector::new(inner.c1.to_f64(), inner.c2.to_f64());
        let chained = restricted.apply(t, s, &mid_point, &inner_state).unwrap();
        let direct = restricted.apply(t, t0, &x, &StateVector::ONES).unwrap();
        assert!((chained.c1.log_abs - direct.c1.log_abs).abs() < 1e-9);
    }
}
