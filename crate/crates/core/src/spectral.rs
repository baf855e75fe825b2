//! Pointwise algebra of a Hermitian form `α` measured against a Kähler form `ω`.
//!
//! At a point the pair `(ω, α)` is a pencil of Hermitian matrices with `ω`
//! positive definite. Everything in this module is a function of the relative
//! eigenvalues `λᵢ` of `ω⁻¹α`:
//!
//! ```text
//! ∏(1 + iλᵢ) = r · e^{iΘ},   Θ = Σ arctan λᵢ,   r = ∏ √(1 + λᵢ²)
//! ```
//!
//! `Θ` is always reported as the arctan sum (the lifted value), never as the
//! principal argument of the product.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::math;

/// Largest supported complex dimension.
pub const MAX_DIM: usize = 8;

/// Symmetry tolerance for Hermitian inputs, relative to the Frobenius norm.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// `|cos θ|` at or below this value makes the cleared dimension-3 identity ill-posed.
pub const NEAR_VERTICAL_COS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("{which} is not Hermitian: ‖A − A*‖ = {defect:e} exceeds {HERMITIAN_TOL:e}·‖A‖")]
    NonHermitianInput { which: &'static str, defect: f64 },
    #[error("omega is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("complex dimension {0} outside 1..={MAX_DIM}")]
    UnsupportedDimension(usize),
    #[error("|cos θ| = {cos:e} is too small for the cleared phase identity")]
    NearVerticalPhase { cos: f64 },
    #[error("spectrum is not Kähler: eigenvalue {0} ≤ 0")]
    NonKahlerSpectrum(f64),
    #[error("spectrum contains a non-finite value")]
    NonFinite,
}

/// Relative eigenvalues, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(mut lambdas: Vec<f64>) -> Result<Self, SpectralError> {
        if lambdas.is_empty() || lambdas.len() > MAX_DIM {
            return Err(SpectralError::UnsupportedDimension(lambdas.len()));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        lambdas.sort_by(f64::total_cmp);
        Ok(Self(lambdas))
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `σ₀..σₙ` of a spectrum.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SymmetricFunctions(Vec<f64>);

impl SymmetricFunctions {
    pub fn sigma(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AngleRadius {
    pub theta: f64,
    pub radius: f64,
}

/// The background form reduced by its Cholesky factor `ω = L L*`.
///
/// Holding on to `L⁻¹` lets callers evaluate many `α`'s against the same `ω`.
#[derive(Debug, Clone)]
pub struct KahlerFrame {
    omega: DMatrix<Complex64>,
    inv_chol: DMatrix<Complex64>,
}

impl KahlerFrame {
    pub fn new(omega: DMatrix<Complex64>) -> Result<Self, SpectralError> {
        let n = check_square(&omega)?;
        let omega = symmetrize(omega, "omega")?;
        let chol = Cholesky::new(omega.clone()).ok_or(SpectralError::NotPositiveDefinite)?;
        let l = chol.l();
        if (0..n).any(|i| !(l[(i, i)].re > 0.0) || !l[(i, i)].re.is_finite() || l[(i, i)].im.abs() > 1e-12 * l[(i, i)].re) {
            return Err(SpectralError::NotPositiveDefinite);
        }
        let inv_chol = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(SpectralError::NotPositiveDefinite)?;
        Ok(Self { omega, inv_chol })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            omega: DMatrix::identity(n, n),
            inv_chol: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn omega(&self) -> &DMatrix<Complex64> {
        &self.omega
    }

    /// `L⁻¹` with `ω = L L*`.
    pub fn inverse_cholesky(&self) -> &DMatrix<Complex64> {
        &self.inv_chol
    }

    /// `L⁻¹ α L⁻*`, whose ordinary eigenvalues are the relative eigenvalues of `α`.
    pub fn reduce(&self, alpha: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let b = &self.inv_chol * alpha * self.inv_chol.adjoint();
        (&b + b.adjoint()).scale(0.5)
    }

    /// Relative eigenvalues of an already-symmetrized `α`.
    pub fn spectrum_of(&self, alpha: &DMatrix<Complex64>) -> Spectrum {
        let b = self.reduce(alpha);
        let lambdas = hermitian_eigenvalues(&b);
        Spectrum::new(lambdas).expect("reduced Hermitian matrix has finite eigenvalues")
    }
}

/// A validated pair `(ω, α)` at a point.
#[derive(Debug, Clone)]
pub struct HermitianPencil {
    frame: KahlerFrame,
    alpha: DMatrix<Complex64>,
}

impl HermitianPencil {
    pub fn new(omega: DMatrix<Complex64>, alpha: DMatrix<Complex64>) -> Result<Self, SpectralError> {
        let n = check_square(&omega)?;
        let m = check_square(&alpha)?;
        if n != m {
            return Err(SpectralError::DimensionMismatch { expected: n, got: m });
        }
        let frame = KahlerFrame::new(omega)?;
        let alpha = symmetrize(alpha, "alpha")?;
        Ok(Self { frame, alpha })
    }

    /// Pencil of two real diagonal forms.
    pub fn diagonal(omega: &[f64], alpha: &[f64]) -> Result<Self, SpectralError> {
        Self::new(diag(omega), diag(alpha))
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn omega(&self) -> &DMatrix<Complex64> {
        self.frame.omega()
    }

    pub fn alpha(&self) -> &DMatrix<Complex64> {
        &self.alpha
    }

    pub fn frame(&self) -> &KahlerFrame {
        &self.frame
    }
}

fn diag(values: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            Complex64::new(values[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn check_square(m: &DMatrix<Complex64>) -> Result<usize, SpectralError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(SpectralError::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if n == 0 || n > MAX_DIM {
        return Err(SpectralError::UnsupportedDimension(n));
    }
    Ok(n)
}

fn symmetrize(m: DMatrix<Complex64>, which: &'static str) -> Result<DMatrix<Complex64>, SpectralError> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let adj = m.adjoint();
    let defect = (&m - &adj).norm();
    let scale = m.norm();
    if defect > HERMITIAN_TOL * scale {
        return Err(SpectralError::NonHermitianInput { which, defect });
    }
    Ok((m + adj).scale(0.5))
}

/// Eigenvalues of a 2×2 Hermitian matrix `[[a, b], [b̄, d]]`, ascending.
#[inline]
pub fn hermitian2_eigenvalues(a: f64, b: Complex64, d: f64) -> [f64; 2] {
    let mean = 0.5 * (a + d);
    let half_gap = math::hypot(0.5 * (a - d), b.norm());
    [mean - half_gap, mean + half_gap]
}

/// Eigenvalues of a Hermitian matrix (ascending), with closed forms for n ≤ 2.
pub fn hermitian_eigenvalues(b: &DMatrix<Complex64>) -> Vec<f64> {
    match b.nrows() {
        1 => alloc::vec![b[(0, 0)].re],
        2 => hermitian2_eigenvalues(b[(0, 0)].re, b[(0, 1)], b[(1, 1)].re).to_vec(),
        _ => {
            let mut v: Vec<f64> = SymmetricEigen::new(b.clone()).eigenvalues.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        }
    }
}

/// Generalized eigenvalues of `(α, ω)`, i.e. the spectrum of `ω⁻¹α`.
pub fn relative_eigenvalues(p: &HermitianPencil) -> Spectrum {
    p.frame.spectrum_of(&p.alpha)
}

pub fn angle_and_radius(s: &Spectrum) -> AngleRadius {
    let theta = s.0.iter().map(|&l| math::atan(l)).sum();
    let radius = s.0.iter().map(|&l| math::hypot(1.0, l)).product();
    AngleRadius { theta, radius }
}

/// `∏(1 + iλᵢ) = (ω + iα)ⁿ / ωⁿ` at the point.
pub fn complex_volume_ratio(s: &Spectrum) -> Complex64 {
    s.0.iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &l| acc * Complex64::new(1.0, l))
}

/// `σ₀..σₙ` through the product expansion of `∏(1 + λᵢ x)`.
pub fn elementary_symmetric(s: &Spectrum) -> SymmetricFunctions {
    let n = s.dim();
    let mut sigma = alloc::vec![0.0; n + 1];
    sigma[0] = 1.0;
    for (j, &l) in s.0.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            sigma[k] += l * sigma[k - 1];
        }
    }
    SymmetricFunctions(sigma)
}

/// `tan θ · (1 − σ₂) − (σ₁ − σ₃)`; zero when `θ = Θ(s)` in dimension 3.
pub fn dim3_phase_identity_residual(s: &Spectrum, theta: f64) -> Result<f64, SpectralError> {
    if s.dim() != 3 {
        return Err(SpectralError::DimensionMismatch { expected: 3, got: s.dim() });
    }
    let cos = math::cos(theta);
    if cos.abs() <= NEAR_VERTICAL_COS {
        return Err(SpectralError::NearVerticalPhase { cos });
    }
    let sig = elementary_symmetric(s);
    Ok(math::tan(theta) * (1.0 - sig.sigma(2)) - (sig.sigma(1) - sig.sigma(3)))
}

/// For each `j`, `Σ_{i≠j} arctan λᵢ − (θ̂ − π/2)`.
///
/// The subsolution condition holds iff every margin is `≥ 0`.
pub fn subsolution_margins(s: &Spectrum, theta_hat: f64) -> Vec<f64> {
    let total: f64 = s.0.iter().map(|&l| math::atan(l)).sum();
    s.0.iter()
        .map(|&l| (total - math::atan(l)) - (theta_hat - FRAC_PI_2))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndexSetMargin {
    /// Removed indices `J` (0-based into the sorted spectrum).
    pub removed: Vec<usize>,
    /// `Σ_{i∉J} arctan λᵢ − (θ̂ − p·π/2)`.
    pub margin: f64,
}

/// Margins over every index set `J` with `|J| = p`; `p = 1` recovers
/// [`subsolution_margins`].
pub fn generalized_margins(s: &Spectrum, theta_hat: f64, p: usize) -> Vec<IndexSetMargin> {
    let n = s.dim();
    if p > n {
        return Vec::new();
    }
    let arctans: Vec<f64> = s.0.iter().map(|&l| math::atan(l)).collect();
    let shift = theta_hat - p as f64 * FRAC_PI_2;
    (0u32..(1 << n))
        .filter(|mask| mask.count_ones() as usize == p)
        .map(|mask| {
            let removed: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let kept: f64 = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| arctans[i]).sum();
            IndexSetMargin { removed, margin: kept - shift }
        })
        .collect()
}

/// `Σ 1/λᵢ`, the pointwise constant of the J-equation.
pub fn j_operator(s: &Spectrum) -> Result<f64, SpectralError> {
    if let Some(&bad) = s.0.iter().find(|&&l| l <= 0.0) {
        return Err(SpectralError::NonKahlerSpectrum(bad));
    }
    Ok(s.0.iter().map(|l| 1.0 / l).sum())
}
