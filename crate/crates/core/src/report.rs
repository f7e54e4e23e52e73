//! Machine-readable reports and the operations behind the command-line
//! surface.
//!
//! Reports are deterministic: object keys serialize in sorted order, every
//! float is rendered as a fixed-format `%.12e`-style string, and all
//! randomized sweeps run from an explicit seed. Verdicts live in the report
//! body, never in exit codes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::sync::Arc;

use crate::base_space::{BasePoint, GeneratorConfig, GeneratorSpec};
use crate::cocycles::{compose_residual, StateVector};
use crate::criteria::theorem_roundtrip;
use crate::dichotomy::{
    classify, default_params_family, falsify, fit_class, DichotomyClass, Verdict,
};
use crate::error::{Error, Result};
use crate::gallery::{lookup, registry, GalleryInstance};
use crate::grid::GridSpec;
use crate::growth::{fit_growth, GrowthKind, NormSource};
use crate::projectors::RestrictedCocycle;
use crate::spectral::{sample_evolution, ModeVector, SpectralCocycle, DEFAULT_N_MODES};

/// Fixed rendering for every float a report emits.
pub fn format_fixed(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.12e}")
    }
}

/// Recursively replace float numbers by their fixed-format strings; integer
/// counts stay numeric.
fn fix_floats(value: Value) -> Value {
    match value {
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                Value::Number(n)
            } else {
                Value::String(format_fixed(n.as_f64().expect("checked numeric kind")))
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(fix_floats).collect()),
        Value::Object(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                out.insert(k, fix_floats(v));
            }
            Value::Object(out)
        }
        other => other,
    }
}

fn to_fixed_value<T: Serialize>(v: &T) -> Result<Value> {
    let raw = serde_json::to_value(v).map_err(|e| Error::Parse(format!("serialization: {e}")))?;
    Ok(fix_floats(raw))
}

fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serialization is infallible");
    s.push('\n');
    s
}

fn tool_block() -> Value {
    json!({ "name": "skewlab", "version": crate::VERSION })
}

fn instance_block(inst: &GalleryInstance) -> Result<Value> {
    let claimed: Vec<Value> = inst
        .claimed
        .iter()
        .map(|c| {
            Ok(json!({
                "class": c.class.code(),
                "verdict": if c.verdict == Verdict::Certified { "certified" } else { "violated" },
                "params": match &c.params { Some(p) => to_fixed_value(p)?, None => Value::Null },
            }))
        })
        .collect::<Result<_>>()?;
    Ok(json!({
        "name": inst.name,
        "description": inst.description,
        "strongly_measurable": inst.strongly_measurable,
        "claimed": claimed,
    }))
}

fn generator_block(gen: &GeneratorSpec) -> Result<Value> {
    let mut v = to_fixed_value(&GeneratorConfig::describe(gen))?;
    if let Value::Object(map) = &mut v {
        map.insert("limit_l".into(), Value::String(format_fixed(gen.limit())));
        map.insert("sup_f0".into(), Value::String(format_fixed(gen.sup_f0())));
    }
    Ok(v)
}

fn grid_block(exp: &GridSpec, poly: &GridSpec) -> Result<Value> {
    Ok(json!({
        "exponential": to_fixed_value(exp)?,
        "polynomial": to_fixed_value(poly)?,
    }))
}

/// Full classification of one instance under every registered generator
/// variant.
pub fn classify_json(inst: &GalleryInstance, exp_grid: &GridSpec, poly_grid: &GridSpec) -> Result<String> {
    let skew = inst.skew();
    let mut variants = Vec::new();
    for (label, generator) in inst.generator_variants() {
        let x = inst.base_point(&generator);
        let outcome = classify(
            &skew,
            &inst.projectors,
            exp_grid,
            poly_grid,
            &inst.witnesses,
            &inst.claimed,
            &x,
            inst.log_g.as_ref(),
        )?;
        let mut certs = Vec::new();
        for cert in &outcome.certificates {
            let claimed_verdict = inst
                .claimed
                .iter()
                .find(|c| c.class == cert.class)
                .map(|c| if c.verdict == Verdict::Certified { "certified" } else { "violated" });
            let mut v = to_fixed_value(cert)?;
            if let Value::Object(map) = &mut v {
                map.insert("class".into(), Value::String(cert.class.code().into()));
                map.insert(
                    "claimed_verdict".into(),
                    claimed_verdict.map(|s| Value::String(s.into())).unwrap_or(Value::Null),
                );
                map.insert(
                    "verdict".into(),
                    Value::String(if cert.verdict == Verdict::Certified { "certified".into() } else { "violated".into() }),
                );
            }
            certs.push(v);
        }
        let stable = RestrictedCocycle { skew: skew.clone(), pair: inst.projectors.clone(), branch: 0 };
        let unstable = RestrictedCocycle { skew: skew.clone(), pair: inst.projectors.clone(), branch: 1 };
        let growth_stable = fit_growth(&NormSource::Branch(&stable), GrowthKind::Growth, exp_grid, &x)?;
        let decay_unstable = fit_growth(&NormSource::Branch(&unstable), GrowthKind::Decay, exp_grid, &x)?;
        variants.push(json!({
            "generator_label": label,
            "generator": generator_block(&generator)?,
            "certificates": certs,
            "witnesses": to_fixed_value(&outcome.witness_reports)?,
            "growth": {
                "stable_branch_growth": to_fixed_value(&growth_stable)?,
                "unstable_branch_decay": to_fixed_value(&decay_unstable)?,
            },
        }));
    }
    let report = json!({
        "command": "classify",
        "tool": tool_block(),
        "instance": instance_block(inst)?,
        "grids": grid_block(exp_grid, poly_grid)?,
        "results": variants,
    });
    Ok(render(&report))
}

/// Margins of one registered witness sequence, per generator variant.
pub fn falsify_json(
    inst: &GalleryInstance,
    class: DichotomyClass,
    witness_name: &str,
    n_max: u32,
) -> Result<String> {
    let witness = inst
        .witnesses
        .iter()
        .find(|w| w.name == witness_name && w.target == class)
        .ok_or_else(|| {
            Error::Parse(format!(
                "no witness {witness_name:?} registered for class {} of instance {:?}",
                class.code(),
                inst.name
            ))
        })?;
    let skew = inst.skew();
    let mut family = default_params_family(class);
    if let Some(p) = inst.claimed.iter().find(|c| c.class == class).and_then(|c| c.params.clone()) {
        family.push(p);
    }
    let mut variants = Vec::new();
    for (label, generator) in inst.generator_variants() {
        let x = inst.base_point(&generator);
        let report = falsify(&skew, &inst.projectors, &x, inst.log_g.as_ref(), witness, &family, n_max)?;
        let increments: Vec<f64> = report.margins_log.windows(2).map(|w| w[1] - w[0]).collect();
        let mut v = to_fixed_value(&report)?;
        if let Value::Object(map) = &mut v {
            map.insert("class".into(), Value::String(class.code().into()));
            map.insert("increments".into(), fix_floats(serde_json::to_value(&increments).expect("vec of f64")));
        }
        variants.push(json!({
            "generator_label": label,
            "generator": generator_block(&generator)?,
            "report": v,
        }));
    }
    let report = json!({
        "command": "falsify",
        "tool": tool_block(),
        "instance": instance_block(inst)?,
        "witness": witness_name,
        "n_max": n_max,
        "results": variants,
    });
    Ok(render(&report))
}

/// Integral-criteria roundtrip for one instance. Fails with `NotApplicable`
/// unless the dichotomy hypothesis holds (or `force` is set, in which case
/// the not-applicable outcome lands in the report instead).
pub fn criteria_json(inst: &GalleryInstance, exp_grid: &GridSpec, force: bool) -> Result<String> {
    let skew = inst.skew();
    let generator = Arc::clone(&inst.generator);
    let x = inst.base_point(&generator);
    // constants: recorded ones if they certify, otherwise the fitted ones
    let claimed_ed = inst
        .claimed
        .iter()
        .find(|c| c.class == DichotomyClass::Ed)
        .and_then(|c| c.params.clone());
    let cert = fit_class(&skew, &inst.projectors, DichotomyClass::Ed, exp_grid, &x, inst.log_g.as_ref(), claimed_ed.as_ref())?;
    if cert.verdict != Verdict::Certified && !force {
        return Err(Error::NotApplicable(format!(
            "instance {:?} is not certified exponentially dichotomic on the working grid",
            inst.name
        )));
    }
    let roundtrip = theorem_roundtrip(&skew, &inst.projectors, &cert.params, exp_grid, &x, inst.log_g.as_ref())?;
    if !roundtrip.applicable && !force {
        return Err(Error::NotApplicable(
            roundtrip.gate_note.unwrap_or_else(|| "hypothesis gate failed".into()),
        ));
    }
    let report = json!({
        "command": "criteria",
        "tool": tool_block(),
        "instance": instance_block(inst)?,
        "generator": generator_block(&generator)?,
        "grid": to_fixed_value(exp_grid)?,
        "dichotomy_certificate": to_fixed_value(&cert)?,
        "roundtrip": to_fixed_value(&roundtrip)?,
    });
    Ok(render(&report))
}

/// Names and descriptions of everything the registry knows.
pub fn gallery_list_json() -> String {
    let mut items: Vec<Value> = registry()
        .iter()
        .map(|inst| {
            json!({
                "name": inst.name,
                "description": inst.description,
                "generators": inst.generator_variants().iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
                "witnesses": inst.witnesses.iter().map(|w| {
                    json!({ "name": w.name, "class": w.target.code() })
                }).collect::<Vec<_>>(),
                "claimed": inst.claimed.iter().map(|c| {
                    json!({
                        "class": c.class.code(),
                        "verdict": if c.verdict == Verdict::Certified { "certified" } else { "violated" },
                    })
                }).collect::<Vec<_>>(),
            })
        })
        .collect();
    items.push(json!({
        "name": "synthetic_ued",
        "description": "pure-slope diagonal instance with rates (-2, 2)",
        "generators": ["default"],
        "witnesses": [],
        "claimed": [],
    }));
    render(&json!({
        "command": "gallery-list",
        "tool": tool_block(),
        "instances": items,
    }))
}

/// Worst composition residual over `n_triples` random (t, s, t0, v) draws.
pub fn max_compose_residual(inst: &GalleryInstance, n_triples: usize, seed: u64) -> Result<f64> {
    let skew = inst.skew();
    let x = inst.base_point(&inst.generator);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_triples {
        let mut times = [rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)];
        times.sort_by(f64::total_cmp);
        let v = StateVector::new(rng.gen_range(-2.0..2.0f64), rng.gen_range(-2.0..2.0f64));
        let r = compose_residual(&skew, times[2], times[1], times[0], &x, &v)?;
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Worst composition residual of the mode cocycle over random draws.
pub fn max_spectral_residual(n_triples: usize, seed: u64, n_modes: usize) -> Result<f64> {
    let cocycle = SpectralCocycle::new(n_modes);
    let x = BasePoint::new(GeneratorSpec::default_gallery(), 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_triples {
        let mut times = [rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)];
        times.sort_by(f64::total_cmp);
        let coeffs: Vec<f64> = (0..n_modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = ModeVector::new(coeffs);
        let r = cocycle.compose_residual(times[2], times[1], times[0], &x, &v)?;
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Composition-law sweep over the whole registry plus the mode cocycle.
pub fn compose_check_json(n_triples: usize, seed: u64, tol: f64) -> Result<String> {
    let mut rows = Vec::new();
    for inst in registry() {
        let worst = max_compose_residual(&inst, n_triples, seed)?;
        rows.push(json!({
            "instance": inst.name,
            "max_residual": format_fixed(worst),
            "within_tol": worst <= tol,
        }));
    }
    let spectral_worst = max_spectral_residual(n_triples, seed, 8)?;
    rows.push(json!({
        "instance": "spectral",
        "max_residual": format_fixed(spectral_worst),
        "within_tol": spectral_worst <= tol,
    }));
    let all_ok = rows.iter().all(|r| r["within_tol"] == Value::Bool(true));
    Ok(render(&json!({
        "command": "compose-check",
        "tool": tool_block(),
        "n_triples": n_triples,
        "seed": seed,
        "tol": format_fixed(tol),
        "results": rows,
        "all_within_tol": all_ok,
    })))
}

/// CSV sample of the mode evolution v(t, y) for external plotting: first
/// column is t, remaining columns are positions y.
pub fn spectral_csv(initial: &ModeVector, t_max: f64, nt: usize, ny: usize) -> Result<String> {
    if nt < 2 || ny < 2 {
        return Err(Error::Validation("spectral sampling needs nt >= 2 and ny >= 2".into()));
    }
    let cocycle = SpectralCocycle::new(initial.coefficients.len().max(DEFAULT_N_MODES));
    let x = BasePoint::new(GeneratorSpec::default_gallery(), 0.0)?;
    let times: Vec<f64> = (0..nt).map(|i| t_max * i as f64 / (nt - 1) as f64).collect();
    let ys: Vec<f64> = (0..ny).map(|j| j as f64 / (ny - 1) as f64).collect();
    let rows = sample_evolution(&cocycle, &x, initial, &times, &ys)?;
    let mut out = String::from("t");
    for y in &ys {
        out.push_str(&format!(",y={}", format_fixed(*y)));
    }
    out.push('\n');
    for (t, row) in times.iter().zip(rows) {
        out.push_str(&format_fixed(*t));
        for v in row {
            out.push(',');
            out.push_str(&format_fixed(v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Resolve a gallery name or an instance-spec file path into an instance.
pub fn resolve_instance(gallery: Option<&str>, spec_path: Option<&str>) -> Result<GalleryInstance> {
    match (gallery, spec_path) {
        (Some(name), None) => lookup(name),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {path:?}: {e}")))?;
            crate::gallery::parse_instance_spec(&text)?.build()
        }
        _ => Err(Error::Parse("exactly one of a gallery name or a spec path is required".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{RangeSpec, Spacing};

    fn small_grids() -> (GridSpec, GridSpec) {
        let exp = GridSpec {
            t_range: RangeSpec::new(0.0, 40.0, 14, Spacing::LogMix).unwrap(),
            s_range: RangeSpec::new(0.0, 40.0, 14, Spacing::LogMix).unwrap(),
            t0_values: vec![0.0],
            vectors: vec![StateVector::E1, StateVector::E2],
            tol_log: 1e-9,
        };
        let poly = GridSpec {
            t_range: RangeSpec::new(1.0, 40.0, 14, Spacing::LogMix).unwrap(),
            s_range: RangeSpec::new(1.0, 40.0, 14, Spacing::LogMix).unwrap(),
            t0_values: vec![],
            vectors: vec![StateVector::E1, StateVector::E2],
            tol_log: 1e-9,
        };
        (exp, poly)
    }

    #[test]
    fn fixed_format_is_stable() {
        assert_eq!(format_fixed(0.5), "5.000000000000e-1");
        assert_eq!(format_fixed(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn classify_report_deterministic() {
        let inst = lookup("synthetic_ued").unwrap();
        let (exp, poly) = small_grids();
        let a = classify_json(&inst, &exp, &poly).unwrap();
        let b = classify_json(&inst, &exp, &poly).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"UED\""));
    }

    #[test]
    fn gallery_list_mentions_all() {
        let listing = gallery_list_json();
        for name in ["ex21", "bved", "ed_gap", "upd", "bvpd", "bvpd_osc", "pd_swapped", "synthetic_ued"] {
            assert!(listing.contains(name), "{name} missing");
        }
    }

    #[test]
    fn compose_check_within_tolerance() {
        let out = compose_check_json(50, 7, 1e-9).unwrap();
        assert!(out.contains("\"all_within_tol\": true"), "{out}");
    }

    #[test]
    fn spectral_csv_shape() {
        let csv = spectral_csv(&ModeVector::basis(1, 8), 1.0, 3, 4).unwrap();
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].split(',').count(), 5);
    }

    #[test]
    fn unknown_witness_is_parse_error() {
        let inst = lookup("bved").unwrap();
        let err = falsify_json(&inst, DichotomyClass::Ued, "nope", 4);
        assert!(matches!(err, Err(Error::Parse(_))));
    }
}
