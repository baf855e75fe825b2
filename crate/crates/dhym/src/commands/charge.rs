use dhym_core::charge::{
    self, BpsNorm, ChargePath, ChernVerdict, Dim2Verdict, SlopeVerdict, SubvarietyVerdict, TopologicalData,
};
use dhym_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::cli::{Common, Format};
use crate::config::read_json;
use crate::error::CliError;
use crate::output::{complex_path_svg, num, to_json, Csv, OutDir};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubvarietyReport {
    pub label: String,
    pub obstruction: Option<SubvarietyVerdict>,
    pub slope: Option<SlopeVerdict>,
    /// Why a verdict could not be formed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub t_max: f64,
    pub samples: usize,
    pub lifted_angle: f64,
    pub theta_bridgeland: f64,
    pub central_charge: Complex64,
    pub dim1_angle: Option<f64>,
    pub dim2: Option<Dim2Verdict>,
    pub chern: Option<ChernVerdict>,
    pub bps: BpsNorm,
    pub subvarieties: Vec<SubvarietyReport>,
}

pub fn analyse(d: &TopologicalData, tol: Option<f64>) -> Result<(ObstructionReport, ChargePath), CliError> {
    d.validate()?;
    let path = charge::build_charge_path(d, d.default_t_max(), tol.unwrap_or(charge::DEFAULT_ZERO_TOL))?;
    let subvarieties = d
        .subvarieties
        .iter()
        .map(|v| {
            let obstruction = charge::subvariety_obstruction(d, v);
            let slope = charge::ls_slope_check(d, v);
            let error = match (&obstruction, &slope) {
                (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
                _ => None,
            };
            SubvarietyReport { label: v.label.clone(), obstruction: obstruction.ok(), slope: slope.ok(), error }
        })
        .collect();
    let report = ObstructionReport {
        n: d.n,
        a: d.a.clone(),
        t_max: path.t_max,
        samples: path.samples.len(),
        lifted_angle: path.lifted_angle,
        theta_bridgeland: path.theta_bridgeland(),
        central_charge: path.central_charge,
        dim1_angle: if d.n == 1 { charge::dim1_angle(d).ok() } else { None },
        dim2: if d.n == 2 { charge::dim2_nonvanishing_check(d).ok() } else { None },
        chern: if d.n == 3 { charge::chern_inequality_dim3(d).ok() } else { None },
        bps: charge::bps_norm_bound(d),
        subvarieties,
    };
    Ok((report, path))
}

pub fn path_csv(path: &ChargePath) -> String {
    let mut c = Csv::new(&["t", "re_p", "im_p", "tracked_arg"]);
    for s in &path.samples {
        c.row(&[num(s.t), num(s.value.re), num(s.value.im), num(s.arg)]);
    }
    c.finish()
}

pub fn run(common: &Common) -> Result<String, CliError> {
    let input = common.input.as_ref().ok_or_else(|| CliError::Parse("charge needs --input".into()))?;
    let d: TopologicalData = read_json(input)?;
    run_data(common, &d)
}

pub fn run_data(common: &Common, d: &TopologicalData) -> Result<String, CliError> {
    let (report, path) = analyse(d, common.tol)?;
    let out = OutDir::new(common.out.clone());
    out.write_json("charge_report.json", &report)?;
    out.write_text("charge_path.csv", &path_csv(&path))?;
    if out.is_enabled() {
        let pts: Vec<(f64, f64)> = path.samples.iter().map(|s| (s.value.re, s.value.im)).collect();
        let title = format!("P(t), t from {} to 1 (n = {})", num(path.t_max), d.n);
        out.write_text("charge_path.svg", &complex_path_svg(&title, &pts))?;
    }
    match common.format {
        Format::Json => to_json(&report),
        Format::Csv => Ok(path_csv(&path)),
    }
}
