use dhym_core::flow::{self, FlowError, FlowTrace, PeriodicField};
use serde::{Deserialize, Serialize};

use crate::cli::{Common, Format};
use crate::config::{read_json, FlowFile, FlowSetup};
use crate::error::CliError;
use crate::output::{field_bytes, num, to_json, Csv, FieldSidecar, OutDir};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub status: String,
    pub converged: bool,
    pub steps: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub grid: usize,
    pub dt: f64,
    pub tol: f64,
    pub theta_target: f64,
    pub final_residual: Option<f64>,
    pub volume: Option<f64>,
    pub r_hat: f64,
    /// `min(V − r̂)` over all recorded steps.
    pub min_bps_gap: Option<f64>,
    /// Largest per-step increase of `sup Θ − inf Θ`.
    pub max_oscillation_increase: Option<f64>,
    pub final_oscillation: Option<f64>,
    pub final_sup_norm: Option<f64>,
    pub alias_warning: Option<bool>,
    pub message: Option<String>,
}

pub fn trace_csv(trace: &FlowTrace) -> String {
    let mut c = Csv::new(&["step", "sup_theta", "inf_theta", "residual", "volume"]);
    for r in &trace.records {
        c.row(&[r.step.to_string(), num(r.sup_theta), num(r.inf_theta), num(r.residual), num(r.volume)]);
    }
    c.finish()
}

fn summary(setup: &FlowSetup, trace: Option<&FlowTrace>, status: &str, message: Option<String>) -> FlowSummary {
    let bg = &setup.background;
    let last = trace.map(|t| *t.last());
    FlowSummary {
        status: status.into(),
        converged: trace.is_some_and(|t| t.converged),
        steps: trace.map_or(0, |t| t.steps),
        n: bg.dim(),
        grid: bg.grid(),
        dt: setup.config.dt,
        tol: setup.config.tol,
        theta_target: trace.map_or_else(|| bg.constant_theta(), |t| t.theta_target),
        final_residual: last.map(|r| r.residual),
        volume: last.map(|r| r.volume),
        r_hat: bg.r_hat(),
        min_bps_gap: trace.map(|t| t.min_bps_gap()),
        max_oscillation_increase: trace.and_then(|t| (t.records.len() > 1).then(|| t.max_oscillation_increase())),
        final_oscillation: last.map(|r| r.oscillation()),
        final_sup_norm: trace.map(|t| t.final_field.sup_norm()),
        alias_warning: trace.map(|t| t.alias_fraction >= flow::ALIAS_WARN_FRACTION),
        message,
    }
}

fn write_trace(out: &OutDir, setup: &FlowSetup, trace: &FlowTrace) -> Result<(), CliError> {
    out.write_text("flow_trace.csv", &trace_csv(trace))?;
    out.write_bytes("flow_field.bin", &field_bytes(trace.final_field.values()))?;
    let n = setup.background.dim();
    let axes = (1..=n).map(|j| format!("x{j}")).chain((1..=n).map(|j| format!("y{j}"))).collect();
    let sidecar = FieldSidecar {
        file: "flow_field.bin".into(),
        dtype: "float64-le".into(),
        order: "row-major, last axis fastest".into(),
        shape: vec![setup.background.grid(); 2 * n],
        axes,
        spacing: 1.0 / setup.background.grid() as f64,
    };
    out.write_json("flow_field.json", &sidecar)
}

pub fn run(common: &Common) -> Result<String, CliError> {
    let file: FlowFile = match &common.input {
        Some(p) => read_json(p)?,
        None => FlowFile::default(),
    };
    run_file(common, &file)
}

pub fn run_file(common: &Common, file: &FlowFile) -> Result<String, CliError> {
    let setup = file.resolve(common.tol)?;
    let u0 = PeriodicField::trigonometric(&setup.background, setup.initial.constant, &setup.initial.terms)?;
    let out = OutDir::new(common.out.clone());
    let result = flow::run_flow(&setup.background, &u0, &setup.config);
    let (report, err) = match result {
        Ok(trace) => {
            write_trace(&out, &setup, &trace)?;
            (summary(&setup, Some(&trace), "converged", None), None)
        }
        Err(e) => {
            let status = match &e {
                FlowError::NotConverged { .. } => "not_converged",
                FlowError::Diverged { .. } | FlowError::CflViolation { .. } => "diverged",
                _ => return Err(e.into()),
            };
            if let Some(trace) = e.trace() {
                write_trace(&out, &setup, trace)?;
            }
            (summary(&setup, e.trace(), status, Some(e.to_string())), Some(e))
        }
    };
    out.write_json("flow_summary.json", &report)?;
    let text = match common.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut c = Csv::new(&["status", "steps", "final_residual", "volume", "r_hat"]);
            c.row(&[
                report.status.clone(),
                report.steps.to_string(),
                report.final_residual.map_or_else(String::new, num),
                report.volume.map_or_else(String::new, num),
                num(report.r_hat),
            ]);
            c.finish()
        }
    };
    // Failed runs still leave their files behind; only the exit status differs.
    match err {
        None => Ok(text),
        Some(e) => Err(e.into()),
    }
}
