use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Analysis, AnalysisConfig, FamilyEntry};
use crate::coeff::{classify_modulus, validate_field, CoefficientField};
use crate::criteria::{evaluate_criteria, Conclusion, CriteriaReport, CriterionVerdict};
use crate::dynsys::{
    asymptotic_constancy_probe, full_system, reduced_system, reduction_check, uniform_stability_probe, unit_basis,
    ConstancyVerdict, StabilityVerdict,
};
use crate::error::{Error, Result};
use crate::moments::{assemble_r, moment_vector, verify_r_identity};
use crate::pdelab::{run_pde_lab, write_profile_csv, write_solution_csv, IndicatorVerdict, PdeRun};
use crate::tail::TailAnalysis;

pub const REPORT_FILE: &str = "report.json";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn tail_summary(t: &TailAnalysis) -> Value {
    json!({ "verdict": t.verdict, "partial": t.partial, "total": t.total(), "model": t.model })
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// Artifact names are relative to the output directory.
struct Artifacts<'a> {
    dir: &'a Path,
    family: &'a str,
}

impl Artifacts<'_> {
    fn name(&self, stem: &str, ext: &str) -> String {
        format!("{}_{stem}.{ext}", self.family)
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.dir.join(name)
    }
}

struct FamilyOutcome {
    results: BTreeMap<&'static str, Value>,
    timings: BTreeMap<&'static str, f64>,
    criteria: Option<CriteriaReport>,
    stability: Option<StabilityVerdict>,
    constancy: Option<ConstancyVerdict>,
    pde: Option<PdeRun>,
}

fn stage<T>(name: &'static str, family: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Stage { stage: name, family: family.to_string(), source: Box::new(e) })
}

fn validate_stage(cfg: &AnalysisConfig, field: &CoefficientField<f64>) -> Result<Value> {
    let v = &cfg.validate;
    let report = validate_field(field, &cfg.radii, v.nodes_per_circle, v.slack)?;
    let modulus = classify_modulus(&field.modulus, v.dini_tol)?;
    Ok(json!({
        "report": to_value(&report)?,
        "modulus": {
            "label": field.modulus.label,
            "dini": tail_summary(&modulus.dini),
            "square_dini": tail_summary(&modulus.square_dini),
        },
    }))
}

fn moments_stage(cfg: &AnalysisConfig, field: &CoefficientField<f64>, art: &Artifacts) -> Result<Value> {
    let mut rows = Vec::with_capacity(cfg.radii.len());
    let mut csv_rows = Vec::with_capacity(cfg.radii.len());
    let (mut max_moment, mut max_identity) = (0.0f64, 0.0f64);
    for &r in &cfg.radii {
        let m = moment_vector(field, r)?;
        let r_norm = crate::linalg::max_abs(&assemble_r(&m).entries);
        let identity = verify_r_identity(field, r)?;
        max_moment = max_moment.max(m.max_abs());
        max_identity = max_identity.max(identity);
        let a = m.as_array();
        csv_rows.push([r, a[0], a[1], a[2], a[3], a[4], a[5], r_norm, identity].iter().map(|v| num(*v)).collect());
        rows.push(json!({ "r": r, "a": [a[0], a[1]], "b": [a[2], a[3]], "c": [a[4], a[5]], "r_norm": r_norm, "r_identity_residual": identity }));
    }
    let name = art.name("moments", "csv");
    write_csv(&art.path(&name), &["r", "a1", "a2", "b1", "b2", "c1", "c2", "R_max_abs", "R_identity_residual"], csv_rows)?;
    Ok(json!({ "rows": rows, "max_abs_moment": max_moment, "max_identity_residual": max_identity, "artifact": name }))
}

fn probes_stage(
    cfg: &AnalysisConfig,
    field: &CoefficientField<f64>,
    art: &Artifacts,
) -> Result<(Value, StabilityVerdict, ConstancyVerdict)> {
    let reduced = reduced_system(field);
    let stability = uniform_stability_probe(&reduced, &cfg.probes)?;
    let constancy = asymptotic_constancy_probe(&reduced, &unit_basis::<f64, 4>(), &cfg.probes)?;
    let reduction = reduction_check(&full_system(field), &reduced, &cfg.t_grid)?;
    let kappa_name = art.name("kappa", "csv");
    write_csv(
        &art.path(&kappa_name),
        &["s", "t", "kappa"],
        stability.kappa_samples.iter().map(|k| vec![num(k.s), num(k.t), num(k.kappa)]),
    )?;
    let reduction_name = art.name("reduction", "csv");
    write_csv(
        &art.path(&reduction_name),
        &["t", "eps", "diff", "ratio"],
        reduction.rows.iter().map(|r| vec![num(r.t), num(r.eps), num(r.diff), r.ratio.map(num).unwrap_or_default()]),
    )?;
    let mut stab = to_value(&stability)?;
    if let Some(o) = stab.as_object_mut() {
        o.remove("kappa_samples");
        o.insert("artifact".into(), Value::from(kappa_name));
    }
    let mut red = to_value(&reduction)?;
    if let Some(o) = red.as_object_mut() {
        o.remove("rows");
        o.insert("artifact".into(), Value::from(reduction_name));
    }
    let value = json!({ "stability": stab, "constancy": to_value(&constancy)?, "reduction": red });
    Ok((value, stability.verdict, constancy.verdict))
}

fn criteria_stage(cfg: &AnalysisConfig, field: &CoefficientField<f64>, art: &Artifacts) -> Result<(Value, CriteriaReport)> {
    let report = evaluate_criteria(field, &cfg.criteria)?;
    let mut artifacts = BTreeMap::new();
    for r in &report.results {
        if r.witness.is_empty() {
            continue;
        }
        let name = art.name(&format!("criterion_{}", r.id.as_str()), "csv");
        write_csv(
            &art.path(&name),
            &["k", "t_lo", "t_hi", "value", "cumulative"],
            r.witness.iter().map(|w| vec![w.k.to_string(), num(w.t_lo), num(w.t_hi), num(w.value), num(w.cumulative)]),
        )?;
        artifacts.insert(r.id.as_str(), name);
    }
    let value = json!({
        "conclusion": report.conclusion,
        "special_case_residual": report.special_case_residual,
        "results": to_value(&report.results)?,
        "artifacts": artifacts,
    });
    Ok((value, report))
}

fn pde_stage(cfg: &AnalysisConfig, field: &CoefficientField<f64>, compare: bool, art: &Artifacts) -> Result<(Value, PdeRun)> {
    let run = run_pde_lab(field, &cfg.pde, compare)?;
    let sol_name = art.name("solution", "csv");
    write_solution_csv(&run.solution, &art.path(&sol_name))?;
    let prof_name = art.name("profile", "csv");
    write_profile_csv(&run.profile, &art.path(&prof_name))?;
    let ctl_name = art.name("control_profile", "csv");
    write_profile_csv(&run.control_profile, &art.path(&ctl_name))?;
    let value = json!({
        "solution": to_value(&run.solution)?,
        "control_solution": to_value(&run.control_solution)?,
        "max_moment_residual": run.profile.max_moment_residual(),
        "diagnostics": to_value(&run.diagnostics)?,
        "hessian": to_value(&run.hessian)?,
        "artifacts": { "solution": sol_name, "profile": prof_name, "control_profile": ctl_name },
    });
    Ok((value, run))
}

fn compare_stage(run: &PdeRun, art: &Artifacts) -> Result<Value> {
    let (Some(c), Some(cc)) = (&run.compare, &run.control_compare) else {
        return Err(Error::InvalidArgument("comparison tables missing".into()));
    };
    let name = art.name("compare", "csv");
    write_csv(
        &art.path(&name),
        &["r", "t", "V_meas_1", "V_meas_2", "V_meas_3", "V_meas_4", "V_pred_1", "V_pred_2", "V_pred_3", "V_pred_4", "deviation"],
        c.rows.iter().map(|r| {
            let mut v = vec![num(r.r), num(r.t)];
            v.extend(r.v_measured.iter().chain(&r.v_predicted).map(|x| num(*x)));
            v.push(num(r.deviation));
            v
        }),
    )?;
    Ok(json!({
        "rows": to_value(&c.rows)?,
        "max_deviation": c.max_deviation,
        "control_max_deviation": cc.max_deviation,
        "artifact": name,
    }))
}

fn run_family(cfg: &AnalysisConfig, entry: &FamilyEntry, out: &Path) -> Result<FamilyOutcome> {
    let name = entry.name.as_str();
    let field = stage("build", name, || entry.descriptor.build::<f64>())?;
    let art = Artifacts { dir: out, family: name };
    let mut o = FamilyOutcome {
        results: BTreeMap::new(),
        timings: BTreeMap::new(),
        criteria: None,
        stability: None,
        constancy: None,
        pde: None,
    };
    let wants_compare = cfg.analyses.contains(&Analysis::Compare);
    for analysis in &cfg.analyses {
        let start = Instant::now();
        let key = analysis.name();
        let value = stage(key, name, || match analysis {
            Analysis::Validate => validate_stage(cfg, &field),
            Analysis::Moments => moments_stage(cfg, &field, &art),
            Analysis::Probes => {
                let (v, s, c) = probes_stage(cfg, &field, &art)?;
                o.stability = Some(s);
                o.constancy = Some(c);
                Ok(v)
            }
            Analysis::Criteria => {
                let (v, rep) = criteria_stage(cfg, &field, &art)?;
                o.criteria = Some(rep);
                Ok(v)
            }
            Analysis::Pde => {
                let (v, run) = pde_stage(cfg, &field, wants_compare, &art)?;
                o.pde = Some(run);
                Ok(v)
            }
            Analysis::Compare => {
                let run = o.pde.as_ref().ok_or_else(|| Error::Config(vec!["compare requires pde".into()]))?;
                compare_stage(run, &art)
            }
        })?;
        o.results.insert(key, value);
        o.timings.insert(key, start.elapsed().as_secs_f64());
    }
    Ok(o)
}

/// Headline verdict: criteria decide, probes and PDE indicators annotate.
fn family_verdict(o: &FamilyOutcome) -> Value {
    let conclusion = o.criteria.as_ref().map(|c| c.conclusion).unwrap_or(Conclusion::NoGuarantee);
    let supported_by: Vec<&str> = o
        .criteria
        .iter()
        .flat_map(|c| &c.results)
        .filter(|r| r.verdict == CriterionVerdict::Holds && r.implied_conclusion == conclusion && conclusion != Conclusion::NoGuarantee)
        .map(|r| r.id.as_str())
        .collect();
    let suggestion = match (conclusion, o.stability, o.constancy) {
        (Conclusion::NoGuarantee, Some(StabilityVerdict::Stable), Some(ConstancyVerdict::Constant)) => {
            Some("probes suggest second_order_differentiable")
        }
        (Conclusion::NoGuarantee, Some(StabilityVerdict::Stable), _) => Some("probes suggest lipschitz_gradient"),
        (Conclusion::LipschitzGradient, Some(StabilityVerdict::Stable), Some(ConstancyVerdict::Constant)) => {
            Some("probes suggest second_order_differentiable")
        }
        _ => None,
    };
    let pde = o.pde.as_ref().map(|run| {
        let d = &run.diagnostics;
        let bounded = d.lipschitz == IndicatorVerdict::Bounded
            && d.w == IndicatorVerdict::Bounded
            && d.u0 == IndicatorVerdict::Bounded;
        json!({
            "lipschitz": d.lipschitz,
            "differentiability": d.differentiability,
            "w": d.w,
            "u0": d.u0,
            "indicators_bounded": bounded,
        })
    });
    json!({
        "conclusion": conclusion,
        "supported_by": supported_by,
        "probes": { "stability": o.stability, "constancy": o.constancy, "suggestion": suggestion },
        "pde": pde,
    })
}

/// Runs every requested analysis for every family, writes artifacts and the
/// JSON report into `out`, and returns the report.
pub fn run_pipeline(cfg: &AnalysisConfig, out: &Path) -> Result<Value> {
    fs::create_dir_all(out)?;
    let total = Instant::now();
    let mut results = BTreeMap::new();
    let mut verdicts = BTreeMap::new();
    let mut timings = BTreeMap::new();
    for entry in &cfg.families {
        let o = run_family(cfg, entry, out)?;
        verdicts.insert(entry.name.clone(), family_verdict(&o));
        timings.insert(entry.name.clone(), to_value(&o.timings)?);
        results.insert(entry.name.clone(), to_value(&o.results)?);
    }
    timings.insert("total".to_string(), Value::from(total.elapsed().as_secs_f64()));
    let report = json!({
        "schema": cfg.schema,
        "version": env!("CARGO_PKG_VERSION"),
        "config": to_value(cfg)?,
        "results": results,
        "verdict": verdicts,
        "timings": timings,
    });
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(out.join(REPORT_FILE), text)?;
    Ok(report)
}
