//! Input documents for the subcommands.

use std::path::Path;

use dhym_core::flow::{FlowConfig, Scheme, ThetaTarget, TorusBackground, TrigMode, DEFAULT_CFL_CONSTANT};
use dhym_core::syz::{BoxDomain, BoxGrid, ConvexPotential, SectionPotential, SectionTerm, Trig};
use dhym_core::Complex64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// A matrix entry: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// `c` (meaning `c·I`), a real diagonal, or full rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<Entry>>),
    Diagonal(Vec<f64>),
}

impl MatrixSpec {
    pub fn to_matrix(&self, n: usize) -> Result<DMatrix<Complex64>, CliError> {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            MatrixSpec::Scalar(c) => Ok(DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(*c, 0.0) } else { zero })),
            MatrixSpec::Diagonal(d) => {
                if d.len() != n {
                    return Err(CliError::Parse(format!("diagonal has {} entries, expected {n}", d.len())));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(d[i], 0.0) } else { zero }))
            }
            MatrixSpec::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Parse(format!("matrix must be {n}×{n}")));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j].value()))
            }
        }
    }

    /// Rows form, used when a matrix size is implied rather than given.
    pub fn size_hint(&self) -> Option<usize> {
        match self {
            MatrixSpec::Scalar(_) => None,
            MatrixSpec::Rows(r) => Some(r.len()),
            MatrixSpec::Diagonal(d) => Some(d.len()),
        }
    }
}

/// Pencil given in a file for `point`.
#[derive(Debug, Clone, Deserialize)]
pub struct PencilInput {
    pub omega: MatrixSpec,
    pub alpha: MatrixSpec,
    #[serde(default)]
    pub theta_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Value(f64),
    Keyword(String),
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Keyword("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    #[serde(rename = "const", default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<TrigMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowFile {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(rename = "N", default)]
    pub grid: Option<usize>,
    #[serde(default = "identity_spec")]
    pub omega0: MatrixSpec,
    #[serde(default = "identity_spec")]
    pub alpha0: MatrixSpec,
    /// Defaults to the stability limit.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub theta: ThetaSpec,
    #[serde(default)]
    pub u0: Option<InitialData>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_cfl")]
    pub cfl_constant: f64,
}

fn default_n() -> usize {
    1
}

fn identity_spec() -> MatrixSpec {
    MatrixSpec::Scalar(1.0)
}

fn default_max_steps() -> usize {
    200_000
}

fn default_cfl() -> f64 {
    DEFAULT_CFL_CONSTANT
}

impl Default for FlowFile {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all flow fields have defaults")
    }
}

/// Resolved flow run.
pub struct FlowSetup {
    pub background: TorusBackground,
    pub config: FlowConfig,
    pub initial: InitialData,
}

impl FlowFile {
    pub fn default_grid(n: usize) -> usize {
        if n == 1 {
            64
        } else {
            12
        }
    }

    pub fn default_initial(n: usize) -> InitialData {
        let mut k = vec![0; 2 * n];
        k[0] = 1;
        InitialData { constant: 0.0, terms: vec![TrigMode { amp: 0.1, kind: Trig::Cos, k }] }
    }

    pub fn resolve(&self, tol_override: Option<f64>) -> Result<FlowSetup, CliError> {
        let n = self.n;
        if !(1..=2).contains(&n) {
            return Err(CliError::Domain(format!("flow supports n = 1 or 2, got {n}")));
        }
        let grid = self.grid.unwrap_or_else(|| Self::default_grid(n));
        let background = TorusBackground::new(self.omega0.to_matrix(n)?, self.alpha0.to_matrix(n)?, grid)?;
        let theta = match &self.theta {
            ThetaSpec::Value(v) => ThetaTarget::Value(*v),
            ThetaSpec::Keyword(k) if k == "auto" => ThetaTarget::Auto,
            ThetaSpec::Keyword(k) => return Err(CliError::Parse(format!("theta must be a number or \"auto\", got {k:?}"))),
        };
        let tol = tol_override.or(self.tol).unwrap_or(1e-8);
        let dt = self.dt.unwrap_or_else(|| background.cfl_limit(self.cfl_constant));
        let config = FlowConfig { dt, max_steps: self.max_steps, tol, theta, scheme: self.scheme, cfl_constant: self.cfl_constant };
        let initial = self.u0.clone().unwrap_or_else(|| Self::default_initial(n));
        Ok(FlowSetup { background, config, initial })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhiSpec {
    /// `½ Σ aᵢxᵢ²`.
    Quadratic { a: Vec<f64> },
    /// `½ xᵀAx + Σ εᵢ sin(wᵢxᵢ)`.
    Perturbed { a: MatrixSpec, eps: Vec<f64>, w: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    #[serde(default)]
    pub terms: Vec<SectionTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyzScenario {
    pub n: usize,
    pub phi: PhiSpec,
    #[serde(default = "empty_section")]
    pub f: SectionSpec,
    pub domain: DomainSpec,
    pub grid: Vec<usize>,
    #[serde(default)]
    pub theta_hat: f64,
}

fn empty_section() -> SectionSpec {
    SectionSpec { terms: Vec::new() }
}

pub struct SyzSetup {
    pub phi: ConvexPotential,
    pub f: SectionPotential,
    pub grid: BoxGrid,
    pub theta_hat: f64,
}

impl SyzScenario {
    pub fn resolve(&self) -> Result<SyzSetup, CliError> {
        let n = self.n;
        let domain = BoxDomain::new(self.domain.lo.clone(), self.domain.hi.clone())?;
        if domain.dim() != n {
            return Err(CliError::Parse(format!("domain has {} axes, expected {n}", domain.dim())));
        }
        let phi = match &self.phi {
            PhiSpec::Quadratic { a } => {
                if a.len() != n {
                    return Err(CliError::Parse(format!("phi.a has {} entries, expected {n}", a.len())));
                }
                if let Some(bad) = a.iter().find(|&&v| v.is_nan() || v <= 0.0) {
                    return Err(CliError::Domain(format!("φ is not strictly convex: coefficient {bad} ≤ 0")));
                }
                ConvexPotential::diagonal_quadratic(a, domain.clone())?
            }
            PhiSpec::Perturbed { a, eps, w } => {
                let m = a.to_matrix(n)?.map(|z| z.re);
                ConvexPotential::new(m, eps.clone(), w.clone(), domain.clone())?
            }
        };
        let f = SectionPotential::new(n, self.f.terms.clone())?;
        let grid = BoxGrid::new(domain, self.grid.clone())?;
        Ok(SyzSetup { phi, f, grid, theta_hat: self.theta_hat })
    }
}
