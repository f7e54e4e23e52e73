//! Registry of reference instances, their recorded classifications, their
//! falsification witnesses, and the instance-spec JSON format.
//!
//! Every instance defaults to the generator f(u) = 1 + e^{-u} (limit 1,
//! bound parameter 3). The polynomial-flavored instances also carry the
//! zero-limit generator f(u) = 1/(u+1), whose logarithmic cumulative is the
//! regime their recorded conclusions actually need; classify reports run
//! under each registered generator so the discrepancies are visible instead
//! of silently resolved.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::base_space::{BasePoint, GeneratorConfig, GeneratorSpec};
use crate::cocycles::{DiagonalCocycle, SkewEvolution};
use crate::dichotomy::{
    ClaimedClass, ClassParams, DichotomyClass, Verdict, Witness, WitnessBranch, WitnessSeq,
};
use crate::error::{Error, Result};
use crate::expr::{ExprTerm, ScalarFn};
use crate::growth::Gauge;
use crate::projectors::{Mat2, ProjectorFamily, ProjectorPair};

/// A named skew-evolution instance with everything needed to classify it.
#[derive(Debug, Clone)]
pub struct GalleryInstance {
    pub name: String,
    pub description: String,
    pub cocycle: DiagonalCocycle,
    pub generator: Arc<GeneratorSpec>,
    /// Alternate generator variants the instance is also registered with.
    pub alt_generators: Vec<(String, Arc<GeneratorSpec>)>,
    pub projectors: ProjectorPair,
    /// The multiplicative prefactor g of the cocycle, when it has one;
    /// nonuniform gauges may borrow it.
    pub log_g: Option<ScalarFn>,
    pub claimed: Vec<ClaimedClass>,
    pub witnesses: Vec<Witness>,
    /// Declared, not checked: every registered norm is continuous in the
    /// middle time.
    pub strongly_measurable: bool,
}

impl GalleryInstance {
    pub fn skew(&self) -> SkewEvolution {
        SkewEvolution::new(self.cocycle.clone())
    }

    /// Base point x = the generator itself (offset 0).
    pub fn base_point(&self, generator: &Arc<GeneratorSpec>) -> BasePoint {
        BasePoint { generator: Arc::clone(generator), offset: 0.0 }
    }

    /// (label, generator) variants, default first.
    pub fn generator_variants(&self) -> Vec<(String, Arc<GeneratorSpec>)> {
        let mut out = vec![("default".to_string(), Arc::clone(&self.generator))];
        out.extend(self.alt_generators.iter().cloned());
        out
    }
}

fn poly(coeffs: &[f64]) -> ExprTerm {
    ExprTerm::Poly { coeffs: coeffs.to_vec() }
}

fn claim(class: DichotomyClass, verdict: Verdict, params: Option<ClassParams>) -> ClaimedClass {
    ClaimedClass { class, verdict, params }
}

/// Two-exponent instance: both components are pure powers of the base
/// integral.
pub fn ex21(alpha1: f64, alpha2: f64) -> GalleryInstance {
    GalleryInstance {
        name: "ex21".into(),
        description: format!("two-exponent cocycle, component rates ({alpha1}, {alpha2}) times the base integral"),
        cocycle: DiagonalCocycle::new(ScalarFn::zero(), ScalarFn::zero(), alpha1, alpha2),
        generator: GeneratorSpec::default_gallery(),
        alt_generators: vec![],
        projectors: ProjectorPair::coordinate(),
        log_g: None,
        claimed: vec![],
        witnesses: vec![],
        strongly_measurable: true,
    }
}

fn bved() -> GalleryInstance {
    // component 1: e^{t sin t - s sin s - 2(t-s) - I}; component 2:
    // e^{3(t-s) - 2t cos t + 2s cos s + I}
    let h1 = ScalarFn::from_terms(vec![poly(&[0.0, -2.0]), ExprTerm::TSinT { coeff: 1.0 }]);
    let h2 = ScalarFn::from_terms(vec![poly(&[0.0, 3.0]), ExprTerm::TCosT { coeff: -2.0 }]);
    GalleryInstance {
        name: "bved".into(),
        description: "oscillating exponents: Barreira-Valls exponentially dichotomic but not uniformly".into(),
        cocycle: DiagonalCocycle::new(h1, h2, -1.0, 1.0),
        generator: GeneratorSpec::default_gallery(),
        alt_generators: vec![],
        projectors: ProjectorPair::coordinate(),
        log_g: None,
        claimed: vec![
            claim(
                DichotomyClass::Bved,
                Verdict::Certified,
                // recorded constants (limit 1): N = 1, alpha = beta2 = 2, beta1 = 4
                Some(ClassParams::Bved { log_n: 0.0, alpha1: 2.0, alpha2: 2.0, beta1: 4.0, beta2: 2.0 }),
            ),
            claim(DichotomyClass::Ued, Verdict::Violated, None),
        ],
        witnesses: vec![
            Witness {
                name: "sin-peaks".into(),
                seq: WitnessSeq::SinPeaks,
                branch: WitnessBranch::Stable,
                target: DichotomyClass::Ued,
                expected_increment: Some(2.0 * PI),
            },
            Witness {
                name: "sin-peaks-unstable".into(),
                seq: WitnessSeq::SinPeaksUnstable,
                branch: WitnessBranch::Unstable,
                target: DichotomyClass::Ued,
                expected_increment: Some(8.0 * PI),
            },
        ],
        strongly_measurable: true,
    }
}

fn ed_gap() -> GalleryInstance {
    // g has peaks e^{n 4^n} at integers and drops to 1 within 4^{-n}
    let log_g = ScalarFn::from_terms(vec![ExprTerm::LogGKnots { coeff: 1.0, rate: 4.0 }]);
    let h1 = ScalarFn::from_terms(vec![ExprTerm::LogGKnots { coeff: -1.0, rate: 4.0 }, poly(&[0.0, -1.0])]);
    let h2 = ScalarFn::from_terms(vec![ExprTerm::LogGKnots { coeff: 1.0, rate: 4.0 }, poly(&[0.0, 1.0])]);
    let knot_gauge = Gauge { log_coeff: 0.0, rate: 2.0, form: crate::growth::GaugeForm::ExpTime, with_log_g: true };
    GalleryInstance {
        name: "ed_gap".into(),
        description: "knot-peaked prefactor: exponentially dichotomic with a nonuniform gauge, not Barreira-Valls".into(),
        cocycle: DiagonalCocycle::new(h1, h2, -1.0, 1.0),
        generator: GeneratorSpec::default_gallery(),
        alt_generators: vec![],
        projectors: ProjectorPair::coordinate(),
        log_g: Some(log_g),
        claimed: vec![
            claim(
                DichotomyClass::Ed,
                Verdict::Certified,
                Some(ClassParams::Ed { gauge1: knot_gauge, gauge2: knot_gauge, nu1: 2.0, nu2: 2.0 }),
            ),
            claim(DichotomyClass::Bved, Verdict::Violated, None),
            claim(
                DichotomyClass::Pd,
                Verdict::Certified,
                Some(ClassParams::Pd { gauge: knot_gauge, alpha1: 2.0, alpha2: 2.0 }),
            ),
            claim(DichotomyClass::Bvpd, Verdict::Violated, None),
        ],
        witnesses: vec![
            Witness {
                name: "knot-gaps".into(),
                seq: WitnessSeq::KnotGaps,
                branch: WitnessBranch::Both,
                target: DichotomyClass::Bved,
                expected_increment: None,
            },
            Witness {
                name: "knot-gaps-poly".into(),
                seq: WitnessSeq::KnotGaps,
                branch: WitnessBranch::Both,
                target: DichotomyClass::Bvpd,
                expected_increment: None,
            },
        ],
        strongly_measurable: true,
    }
}

fn upd() -> GalleryInstance {
    let h1 = ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: -1.0, power: 2.0, shift: 1.0 }]);
    let h2 = ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: 1.0, power: 2.0, shift: 1.0 }]);
    GalleryInstance {
        name: "upd".into(),
        description: "quadratic prefactor: uniformly polynomially dichotomic".into(),
        cocycle: DiagonalCocycle::new(h1, h2, -1.0, 1.0),
        generator: GeneratorSpec::default_gallery(),
        alt_generators: vec![("l0".into(), GeneratorSpec::reciprocal_l0())],
        projectors: ProjectorPair::coordinate(),
        log_g: Some(ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: 1.0, power: 2.0, shift: 1.0 }])),
        claimed: vec![
            claim(
                DichotomyClass::Upd,
                Verdict::Certified,
                Some(ClassParams::Upd { log_n: 2.0f64.ln(), alpha1: 2.0, alpha2: 3.0 }),
            ),
            claim(DichotomyClass::Ued, Verdict::Violated, None),
        ],
        witnesses: vec![],
        strongly_measurable: true,
    }
}

fn bvpd() -> GalleryInstance {
    let h1 = ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: -1.0, power: 1.0, shift: 1.0 }]);
    let h2 = ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: 1.0, power: 1.0, shift: 1.0 }]);
    GalleryInstance {
        name: "bvpd".into(),
        description: "linear prefactor: Barreira-Valls polynomially dichotomic, not Barreira-Valls exponentially".into(),
        cocycle: DiagonalCocycle::new(h1, h2, -1.0, 1.0),
        generator: GeneratorSpec::default_gallery(),
        alt_generators: vec![("l0".into(), GeneratorSpec::reciprocal_l0())],
        projectors: ProjectorPair::coordinate(),
        log_g: Some(ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: 1.0, power: 1.0, shift: 1.0 }])),
        claimed: vec![
            claim(
                DichotomyClass::Bvpd,
                Verdict::Certified,
                // recorded constants as printed; the expanding-branch pair is
                // too tight near s = 1, which the margin report shows
                Some(ClassParams::Bvpd { log_n: 0.0, alpha1: 2.0, alpha2: 2.0, beta1: 3.0, beta2: 3.0 }),
            ),
            claim(DichotomyClass::Bved, Verdict::Violated, None),
        ],
        witnesses: vec![],
        strongly_measurable: true,
    }
}

fn bvpd_osc() -> GalleryInstance {
    let log_g = ScalarFn::from_terms(vec![ExprTerm::SinLog { coeff: 1.0, outer: 3.0, shift: 1.0 }]);
    let h1 = ScalarFn::from_terms(vec![ExprTerm::SinLog { coeff: -1.0, outer: 3.0, shift: 1.0 }]);
    let h2 = ScalarFn::from_terms(vec![ExprTerm::SinLog { coeff: 1.0, outer: 3.0, shift: 1.0 }]);
    GalleryInstance {
        name: "bvpd_osc".into(),
        description: "oscillating power (t+1)^{3 - sin ln(t+1)}: Barreira-Valls polynomially dichotomic, not uniformly".into(),
        cocycle: DiagonalCocycle::new(h1, h2, -1.0, 1.0),
        generator: GeneratorSpec::default_gallery(),
        alt_generators: vec![("l0".into(), GeneratorSpec::reciprocal_l0())],
        projectors: ProjectorPair::coordinate(),
        log_g: Some(log_g),
        claimed: vec![
            claim(
                DichotomyClass::Bvpd,
                Verdict::Certified,
                Some(ClassParams::Bvpd { log_n: 4.0f64.ln(), alpha1: 2.0, alpha2: 3.0, beta1: 4.0, beta2: 9.0 }),
            ),
            claim(DichotomyClass::Upd, Verdict::Violated, None),
        ],
        witnesses: vec![Witness {
            name: "exp-log-peaks".into(),
            seq: WitnessSeq::ExpLogPeaks,
            branch: WitnessBranch::Both,
            target: DichotomyClass::Upd,
            expected_increment: Some(2.0 * PI),
        }],
        strongly_measurable: true,
    }
}

fn pd_swapped() -> GalleryInstance {
    // the integral enters with swapped signs: the contracting component
    // carries e^{+I}, the expanding one e^{-I}
    let h1 = ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: -1.0, power: 1.0, shift: 1.0 }]);
    let h2 = ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: 1.0, power: 1.0, shift: 1.0 }]);
    GalleryInstance {
        name: "pd_swapped".into(),
        description: "linear prefactor with swapped integral signs: recorded as polynomially dichotomic, not exponentially".into(),
        cocycle: DiagonalCocycle::new(h1, h2, 1.0, -1.0),
        generator: GeneratorSpec::default_gallery(),
        alt_generators: vec![("l0".into(), GeneratorSpec::reciprocal_l0())],
        projectors: ProjectorPair::coordinate(),
        log_g: Some(ScalarFn::from_terms(vec![ExprTerm::LogPolyShift { coeff: 1.0, power: 1.0, shift: 1.0 }])),
        claimed: vec![
            claim(DichotomyClass::Pd, Verdict::Certified, None),
            claim(DichotomyClass::Ed, Verdict::Violated, None),
        ],
        witnesses: vec![],
        strongly_measurable: true,
    }
}

/// Pure-slope diagonal instance: component log-magnitudes slope1 * (t - s)
/// and slope2 * (t - s), independent of the base point.
pub fn synthetic(slope1: f64, slope2: f64) -> GalleryInstance {
    GalleryInstance {
        name: "synthetic_ued".into(),
        description: format!("pure-slope diagonal instance with rates ({slope1}, {slope2})"),
        cocycle: DiagonalCocycle::new(
            ScalarFn::from_terms(vec![poly(&[0.0, slope1])]),
            ScalarFn::from_terms(vec![poly(&[0.0, slope2])]),
            0.0,
            0.0,
        ),
        generator: GeneratorSpec::default_gallery(),
        alt_generators: vec![],
        projectors: ProjectorPair::coordinate(),
        log_g: None,
        claimed: vec![],
        witnesses: vec![],
        strongly_measurable: true,
    }
}

/// The seven registered instances, in report order.
pub fn registry() -> Vec<GalleryInstance> {
    vec![ex21(-1.0, 1.0), bved(), ed_gap(), upd(), bvpd(), bvpd_osc(), pd_swapped()]
}

/// Look up a registered instance, the synthetic pseudo-instance included.
pub fn lookup(name: &str) -> Result<GalleryInstance> {
    if name == "synthetic_ued" {
        return Ok(synthetic(-2.0, 2.0));
    }
    registry()
        .into_iter()
        .find(|inst| inst.name == name)
        .ok_or_else(|| Error::Parse(format!("unknown gallery instance {name:?}")))
}

// ---------------------------------------------------------------------------
// instance-spec JSON

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProjectorConfig {
    Named(String),
    Explicit { p1: [[f64; 2]; 2], p2: [[f64; 2]; 2] },
}

impl Default for ProjectorConfig {
    fn default() -> Self {
        ProjectorConfig::Named("coordinate".into())
    }
}

impl ProjectorConfig {
    pub fn build(&self) -> Result<ProjectorPair> {
        match self {
            ProjectorConfig::Named(name) if name == "coordinate" => Ok(ProjectorPair::coordinate()),
            ProjectorConfig::Named(other) => Err(Error::Parse(format!("unknown projector pair {other:?}"))),
            ProjectorConfig::Explicit { p1, p2 } => {
                let f1 = ProjectorFamily::constant(Mat2(*p1))?;
                let f2 = ProjectorFamily::constant(Mat2(*p2))?;
                ProjectorPair::new(f1, f2)
            }
        }
    }
}

/// On-disk description of a custom instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub name: String,
    pub generator: GeneratorConfig,
    pub h1: Vec<ExprTerm>,
    pub h2: Vec<ExprTerm>,
    pub c1: f64,
    pub c2: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub projectors: ProjectorConfig,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<GalleryInstance> {
        let mut cocycle = DiagonalCocycle::new(
            ScalarFn::from_terms(self.h1.clone()),
            ScalarFn::from_terms(self.h2.clone()),
            self.c1,
            self.c2,
        );
        cocycle.shift_lambda = self.lambda;
        Ok(GalleryInstance {
            name: self.name.clone(),
            description: "custom instance".into(),
            cocycle,
            generator: self.generator.build()?,
            alt_generators: vec![],
            projectors: self.projectors.build()?,
            log_g: None,
            claimed: vec![],
            witnesses: vec![],
            strongly_measurable: true,
        })
    }
}

pub fn parse_instance_spec(json: &str) -> Result<InstanceSpec> {
    serde_json::from_str(json).map_err(|e| Error::Parse(format!("instance spec: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_seven_instances() {
        let names: Vec<String> = registry().into_iter().map(|i| i.name).collect();
        assert_eq!(names, vec!["ex21", "bved", "ed_gap", "upd", "bvpd", "bvpd_osc", "pd_swapped"]);
    }

    #[test]
    fn lookup_rejects_unknown() {
        assert!(lookup("nope").is_err());
        assert!(lookup("bved").is_ok());
        assert!(lookup("synthetic_ued").is_ok());
    }

    #[test]
    fn polynomial_instances_carry_l0_variant() {
        for name in ["upd", "bvpd", "bvpd_osc", "pd_swapped"] {
            let inst = lookup(name).unwrap();
            assert_eq!(inst.generator_variants().len(), 2, "{name}");
            assert!((inst.alt_generators[0].1.limit() - 0.0).abs() < 1e-15);
        }
    }

    #[test]
    fn instance_spec_round_trip() {
        let json = r#"{
            "name": "custom",
            "generator": {"kind": "one_plus_exp_neg"},
            "h1": [{"expr": "poly", "coeffs": [0.0, -2.0]}, {"expr": "t_sin_t", "coeff": 1.0}],
            "h2": [{"expr": "poly", "coeffs": [0.0, 3.0]}],
            "c1": -1.0,
            "c2": 1.0
        }"#;
        let spec = parse_instance_spec(json).unwrap();
        let inst = spec.build().unwrap();
        assert_eq!(inst.name, "custom");
        assert_eq!(inst.cocycle.c1, -1.0);
        assert_eq!(inst.generator.sup_f0(), 2.0);
    }

    #[test]
    fn instance_spec_explicit_projectors() {
        let json = r#"{
            "name": "custom",
            "generator": {"kind": "constant", "limit": 1.0},
            "h1": [],
            "h2": [],
            "c1": -1.0,
            "c2": 1.0,
            "projectors": {"p1": [[1.0, 0.0], [0.0, 0.0]], "p2": [[0.0, 0.0], [0.0, 1.0]]}
        }"#;
        let inst = parse_instance_spec(json).unwrap().build().unwrap();
        assert_eq!(inst.projectors, ProjectorPair::coordinate());
    }

    #[test]
    fn bad_json_is_parse_error() {
        assert!(matches!(parse_instance_spec("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn bved_component_law_matches_displayed_form() {
        // log-magnitude of component 1 at (t, s) with the base point at the
        // s-frame: t sin t - s sin s - 2 (t - s) - I
        let inst = lookup("bved").unwrap();
        let x = inst.base_point(&inst.generator);
        let (t, s) = (7.0, 4.0);
        let lr = inst.cocycle.log_factor(0, t, s, &x).unwrap();
        let integral = crate::cocycles::integrate_base(&x, t - s).unwrap();
        let expect = t * t.sin() - s * s.sin() - 2.0 * (t - s) - integral;
        assert!((lr - expect).abs() < 1e-12);
        let lr2 = inst.cocycle.log_factor(1, t, s, &x).unwrap();
        let expect2 = 3.0 * (t - s) - 2.0 * t * t.cos() + 2.0 * s * s.cos() + integral;
        assert!((lr2 - expect2).abs() < 1e-12);
    }
}
