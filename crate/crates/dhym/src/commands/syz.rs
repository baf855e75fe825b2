use dhym_core::syz::{self, MongeAmpereResidual, PhaseEquivalenceSummary, SemiFlatPointReport, MA_WARN_TOL};
use serde::{Deserialize, Serialize};

use crate::cli::{Common, Format};
use crate::config::{read_json, SyzScenario};
use crate::error::CliError;
use crate::output::{heat_map_svg, num, to_json, Csv, OutDir};

/// Default pass threshold on the phase mismatch.
pub const DEFAULT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyzSummary {
    pub n: usize,
    pub threshold: f64,
    pub pass: bool,
    pub phase: PhaseEquivalenceSummary,
    pub monge_ampere: MongeAmpereResidual,
}

pub fn points_csv(n: usize, reports: &[SemiFlatPointReport]) -> String {
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.extend(
        ["slag_phase", "mirror_theta", "mismatch", "unit_mismatch", "slag_imag", "mirror_imag"].map(String::from),
    );
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut c = Csv::new(&refs);
    for r in reports {
        let mut row: Vec<String> = r.x.iter().map(|&v| num(v)).collect();
        row.extend([r.slag_phase, r.mirror_theta, r.mismatch, r.unit_mismatch, r.slag_imag, r.mirror_imag].map(num));
        c.row(&row);
    }
    c.finish()
}

pub fn evaluate(scenario: &SyzScenario, threshold: f64) -> Result<(SyzSummary, Vec<SemiFlatPointReport>), CliError> {
    let setup = scenario.resolve()?;
    let (phase, reports) = syz::phase_equivalence_check(&setup.phi, &setup.f, &setup.grid, setup.theta_hat)?;
    let monge_ampere = syz::monge_ampere_residual(&setup.phi, &setup.grid);
    let summary = SyzSummary { n: scenario.n, threshold, pass: phase.max_mismatch < threshold, phase, monge_ampere };
    Ok((summary, reports))
}

pub fn run(common: &Common) -> Result<String, CliError> {
    let input = common.input.as_ref().ok_or_else(|| CliError::Parse("syz needs --input".into()))?;
    let scenario: SyzScenario = read_json(input)?;
    run_scenario(common, &scenario)
}

pub fn run_scenario(common: &Common, scenario: &SyzScenario) -> Result<String, CliError> {
    let threshold = common.tol.unwrap_or(DEFAULT_THRESHOLD);
    let (summary, reports) = evaluate(scenario, threshold)?;
    if summary.monge_ampere.warning {
        eprintln!(
            "warning: Monge-Ampère residual {:e} exceeds {:e}; the metric is not Ricci-flat (phase identity unaffected)",
            summary.monge_ampere.max_residual, MA_WARN_TOL
        );
    }
    let out = OutDir::new(common.out.clone());
    out.write_json("syz_summary.json", &summary)?;
    out.write_text("syz_points.csv", &points_csv(scenario.n, &reports))?;
    if scenario.n == 2 && out.is_enabled() {
        let mismatch: Vec<f64> = reports.iter().map(|r| r.mismatch).collect();
        out.write_text("syz_mismatch.svg", &heat_map_svg("phase mismatch", scenario.grid[0], scenario.grid[1], &mismatch))?;
    }
    let text = match common.format {
        Format::Json => to_json(&summary)?,
        Format::Csv => points_csv(scenario.n, &reports),
    };
    if summary.pass {
        Ok(text)
    } else {
        Err(CliError::CheckFailed(format!(
            "max phase mismatch {} is not below {}",
            num(summary.phase.max_mismatch),
            num(threshold)
        )))
    }
}
