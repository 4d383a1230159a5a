//! Report serialization: full JSON documents and fixed-column CSV rows.

use serde_json::{json, Map, Value};

use qcorr::measures::{CorrelationReport, Measure, Quantumness};
use qcorr::optimizer::{OptimizerDiagnostics, SeparableAnsatz};
use qcorr::{DensityMatrix, LocalBasisSet, OptimizerSettings};

use crate::io::StateFile;

pub const JSON_SCHEMA: &str = "qcorr-report/1";
pub const CSV_SCHEMA: &str = "qcorr-csv/1";
pub const CSV_HEADER: [&str; 13] = [
    "schema", "family", "params", "E", "D", "Q", "C", "T", "L", "delta_AB", "delta_BA", "MID", "flags",
];

/// Where a state came from, as printed in reports.
#[derive(Debug, Clone)]
pub struct Source {
    pub family: String,
    pub params: String,
}

/// `%.9g`: nine significant digits, trailing zeros dropped.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa.to_string()), exp.abs())
    }
}

fn state_json(rho: &DensityMatrix) -> Value {
    serde_json::to_value(StateFile::from_state(rho)).expect("plain data serializes")
}

fn basis_json(basis: &LocalBasisSet, subsystems: &[usize]) -> Value {
    let vectors: Vec<Value> = basis
        .bases()
        .iter()
        .map(|b| {
            let u = b.unitary();
            let columns: Vec<Value> = (0..u.ncols())
                .map(|k| json!((0..u.nrows()).map(|i| [u[(i, k)].re, u[(i, k)].im]).collect::<Vec<_>>()))
                .collect();
            json!(columns)
        })
        .collect();
    json!({
        "subsystems": subsystems,
        "angles_rad": basis.params(),
        "vectors": vectors,
    })
}

fn diagnostics_json(d: &OptimizerDiagnostics) -> Value {
    json!({
        "restarts": d.restarts,
        "evaluations": d.evaluations,
        "grid_points_per_angle": d.grid_points_per_angle,
        "best": d.best,
        "second_best": d.second_best,
        "gap": d.gap,
        "basins": d.basins,
        "converged": d.converged,
    })
}

fn decomposition_json(a: &SeparableAnsatz) -> Value {
    let terms: Vec<Value> = (0..a.len())
        .map(|i| {
            let factors: Vec<Value> = a
                .factors(i)
                .iter()
                .map(|v| {
                    let v = v.normalize();
                    json!(v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>())
                })
                .collect();
            json!({ "weight": a.weights()[i], "factors": factors })
        })
        .collect();
    json!(terms)
}

fn quantumness_json(q: &Quantumness) -> Value {
    let distances: Map<String, Value> = q
        .distances
        .named()
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    json!({
        "variant": q.variant.name(),
        "measured": q.measured,
        "value": q.value,
        "relative_entropies": distances,
        "basis": basis_json(&q.basis, &q.measured),
        "degenerate_marginals": q.degenerate,
        "states": {
            "rho": state_json(&q.rho),
            "pi_rho": state_json(&q.pi_rho),
            "chi": state_json(&q.chi),
            "pi_chi": state_json(&q.pi_chi),
        },
    })
}

pub fn flags(report: &CorrelationReport) -> Vec<String> {
    let mut out: Vec<String> = report.failures.keys().map(|m| format!("failed:{m}")).collect();
    if report.mid_degenerate {
        out.push("mid-degenerate".into());
    }
    out
}

pub fn report_json(report: &CorrelationReport, rho: &DensityMatrix, source: &Source, settings: &OptimizerSettings) -> Value {
    let all: Vec<usize> = rho.layout().all();
    let complement = rho.layout().complement(&report.measured);
    let values: Map<String, Value> = report.values.iter().map(|(m, v)| (m.to_string(), json!(v))).collect();
    let failures: Map<String, Value> = report.failures.iter().map(|(m, v)| (m.to_string(), json!(v))).collect();
    let bases: Map<String, Value> = report
        .bases
        .iter()
        .map(|(m, b)| {
            let subsystems = match m {
                Measure::Delta => &report.measured,
                Measure::DeltaReverse => &complement,
                _ => &all,
            };
            (m.to_string(), basis_json(b, subsystems))
        })
        .collect();
    let diagnostics: Map<String, Value> = report
        .diagnostics
        .iter()
        .map(|(m, d)| (m.to_string(), diagnostics_json(d)))
        .collect();
    let s = &report.states;
    let closest: Map<String, Value> = [
        ("chi_rho", &s.chi_rho),
        ("pi_rho", &s.pi_rho),
        ("pi_chi", &s.pi_chi),
        ("sigma", &s.sigma),
        ("chi_sigma", &s.chi_sigma),
        ("pi_sigma", &s.pi_sigma),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.as_ref().map(|st| (k.to_string(), state_json(st))))
    .collect();
    json!({
        "schema": JSON_SCHEMA,
        "units": "bits",
        "source": { "family": source.family, "params": source.params },
        "dims": rho.layout().dims(),
        "measured": report.measured,
        "measurement_domain": report.measurement_domain,
        "values": values,
        "failures": failures,
        "flags": flags(report),
        "additivity": {
            "rho_loop_residual": report.rho_loop_residual,
            "sigma_loop_residual": report.sigma_loop_residual,
            "sigma_loop": report.sigma_loop.map(|l| json!({ "T_sigma": l.total, "C_sigma": l.classical, "L_sigma": l.l })),
        },
        "closest_states": closest,
        "bases": bases,
        "diagnostics": diagnostics,
        "separable_decomposition": report.separable_decomposition.as_ref().map(decomposition_json),
        "unified": report.unified.iter().map(quantumness_json).collect::<Vec<_>>(),
        "settings": {
            "grid_points_per_angle": settings.grid_points_per_angle,
            "restarts": settings.restarts,
            "refine_max_iter": settings.refine_max_iter,
            "opt_tol": settings.opt_tol,
            "opt_gap_tol": settings.opt_gap_tol,
            "seed": settings.seed,
            "max_grid_evals": settings.max_grid_evals,
            "separable_terms": settings.separable_terms,
            "separable_max_iter": settings.separable_max_iter,
        },
    })
}

/// One CSV row; measures that were not requested or failed are left empty.
pub fn csv_row(report: &CorrelationReport, source: &Source) -> Vec<String> {
    let cell = |m: Measure| report.value(m).map(format_sig9).unwrap_or_default();
    vec![
        CSV_SCHEMA.to_string(),
        source.family.clone(),
        source.params.clone(),
        cell(Measure::Ree),
        cell(Measure::Red),
        cell(Measure::Dissonance),
        cell(Measure::ClassicalC),
        cell(Measure::TotalT),
        cell(Measure::AdditivityL),
        cell(Measure::Delta),
        cell(Measure::DeltaReverse),
        cell(Measure::Mid),
        flags(report).join(";"),
    ]
}
