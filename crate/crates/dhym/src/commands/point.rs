use dhym_core::spectral::{self, HermitianPencil, Spectrum, SpectralError};
use serde::{Deserialize, Serialize};

use crate::cli::{Common, Format, PointArgs};
use crate::config::{read_json, PencilInput};
use crate::error::CliError;
use crate::output::{num, to_json, Csv, OutDir};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub lambdas: Vec<f64>,
    pub theta: f64,
    pub radius: f64,
    /// `∏(1 + iλ)` as `[re, im]`.
    pub volume_ratio: [f64; 2],
    pub sigma: Vec<f64>,
    pub theta_hat: f64,
    pub margins: Vec<f64>,
    pub subsolution: bool,
    /// `Σ 1/λ`, present for positive spectra.
    pub j_operator: Option<f64>,
    /// Cleared `n = 3` identity at `θ`, when defined.
    pub dim3_residual: Option<f64>,
}

pub fn parse_lambdas(text: &str) -> Result<Vec<f64>, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Parse("--lambda is empty".into()));
    }
    text.split(',')
        .map(|piece| {
            let piece = piece.trim();
            let v: f64 = piece.parse().map_err(|_| CliError::Parse(format!("not a number: {piece:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Parse(format!("eigenvalue must be finite: {piece:?}")))
            }
        })
        .collect()
}

pub fn report(s: &Spectrum, theta_hat: Option<f64>) -> PointReport {
    let ar = spectral::angle_and_radius(s);
    let z = spectral::complex_volume_ratio(s);
    let theta_hat = theta_hat.unwrap_or(ar.theta);
    let margins = spectral::subsolution_margins(s, theta_hat);
    let dim3_residual = if s.dim() == 3 { spectral::dim3_phase_identity_residual(s, ar.theta).ok() } else { None };
    PointReport {
        lambdas: s.lambdas().to_vec(),
        theta: ar.theta,
        radius: ar.radius,
        volume_ratio: [z.re, z.im],
        sigma: spectral::elementary_symmetric(s).as_slice().to_vec(),
        theta_hat,
        subsolution: margins.iter().all(|&m| m > 0.0),
        margins,
        j_operator: spectral::j_operator(s).ok(),
        dim3_residual,
    }
}

pub fn run(common: &Common, args: &PointArgs) -> Result<String, CliError> {
    let spectrum = match (&args.lambda, &common.input) {
        (Some(text), _) => Spectrum::new(parse_lambdas(text)?).map_err(|e| match e {
            SpectralError::UnsupportedDimension(_) => CliError::Domain(e.to_string()),
            other => CliError::Parse(other.to_string()),
        })?,
        (None, Some(path)) => {
            let input: PencilInput = read_json(path)?;
            let n = input.omega.size_hint().or(input.alpha.size_hint()).unwrap_or(1);
            let pencil = HermitianPencil::new(input.omega.to_matrix(n)?, input.alpha.to_matrix(n)?)?;
            let s = spectral::relative_eigenvalues(&pencil);
            return emit(common, report(&s, args.theta_hat.or(input.theta_hat)));
        }
        (None, None) => return Err(CliError::Parse("point needs --lambda or --input".into())),
    };
    emit(common, report(&spectrum, args.theta_hat))
}

fn emit(common: &Common, r: PointReport) -> Result<String, CliError> {
    let out = OutDir::new(common.out.clone());
    out.write_json("point.json", &r)?;
    match common.format {
        Format::Json => to_json(&r),
        Format::Csv => {
            let mut c = Csv::new(&["field", "value"]);
            c.row(&["theta".into(), num(r.theta)]);
            c.row(&["radius".into(), num(r.radius)]);
            c.row(&["volume_ratio_re".into(), num(r.volume_ratio[0])]);
            c.row(&["volume_ratio_im".into(), num(r.volume_ratio[1])]);
            for (k, s) in r.sigma.iter().enumerate() {
                c.row(&[format!("sigma_{k}"), num(*s)]);
            }
            for (j, m) in r.margins.iter().enumerate() {
                c.row(&[format!("margin_{j}"), num(*m)]);
            }
            Ok(c.finish())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_parsing() {
        assert_eq!(parse_lambdas("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(matches!(parse_lambdas(""), Err(CliError::Parse(_))));
        assert!(matches!(parse_lambdas("1,,2"), Err(CliError::Parse(_))));
        assert!(matches!(parse_lambdas("1,nan"), Err(CliError::Parse(_))));
    }

    #[test]
    fn report_values() {
        let r = report(&Spectrum::new(vec![1.0, 2.0, 3.0]).unwrap(), None);
        assert!((r.theta - std::f64::consts::PI).abs() < 1e-15);
        assert!((r.radius - 10.0).abs() < 1e-13);
        assert_eq!(r.sigma, vec![1.0, 6.0, 11.0, 6.0]);
    }
}
