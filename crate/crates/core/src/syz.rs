//! Semi-flat SYZ: special Lagrangian sections versus dHYM connections.
//!
//! Over a box `D ⊂ ℝⁿ` with strictly convex potential `φ`, a section
//! `ỹ = Φ⁻¹∇f` (with `Φ = D²φ`) of the mirror fibration is special Lagrangian
//! at phase `θ̂` when `Im(e^{−iθ̂} det S) = 0`, where
//!
//! ```text
//! S = Φ + i·M,   M_ij = ∂ỹⁱ/∂xʲ = φ^{ip} f_pj − φ^{im} φ_mjk φ^{kp} f_p .
//! ```
//!
//! On the other side the Fourier–Mukai line bundle has curvature with
//! coefficient matrix `K_ij = ∂ỹʲ/∂xⁱ` on `dxⁱ∧dyʲ`; relative to `ω` (matrix
//! `Φ` in the same frame) it is the symmetric endomorphism `E = Φ⁻¹K`. The
//! correspondence is `arg det S = Θ(E)` pointwise, both lifted as sums of
//! arctangents.
//!
//! Frame constants are pinned by the scalar case `φ = ½ax²`, `f″ = c`:
//! `S = a + ic/a` and `λ = c/a²`, so `arg S = arctan(c/a²) = Θ`.
//!
//! Derivatives are closed-form; nothing here is discretised.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::math;
use crate::spectral::{self, KahlerFrame, Spectrum, SpectralError};
use crate::winding::{track_argument, TrackError, TrackOptions};

/// Antisymmetric part of `Φ⁻¹K` allowed before the curvature is rejected.
pub const LAGRANGIAN_TOL: f64 = 1e-10;
/// Monge–Ampère residual above which a warning is raised.
pub const MA_WARN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyzError {
    #[error("point lies outside the domain box")]
    OutOfDomain,
    #[error("Hessian of φ is singular at the point")]
    SingularHessian,
    #[error("φ is not strictly convex at the point (Hessian not positive definite)")]
    NonConvexPotential,
    #[error("section is not Lagrangian: antisymmetric defect {defect:e}")]
    LagrangianViolation { defect: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid potential: {0}")]
    InvalidPotential(&'static str),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("phase tracking failed: {0}")]
    Tracking(#[from] TrackError),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SyzError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(SyzError::InvalidPotential("domain bounds must have equal, non-zero length"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(SyzError::InvalidPotential("domain needs lo ≤ hi on every axis"));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }
}

/// `φ(x) = ½ xᵀAx + Σᵢ εᵢ sin(wᵢ xᵢ)` on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPotential {
    quadratic: DMatrix<f64>,
    eps: Vec<f64>,
    freq: Vec<f64>,
    domain: BoxDomain,
}

impl ConvexPotential {
    /// `½ Σ aᵢ xᵢ²`.
    pub fn diagonal_quadratic(a: &[f64], domain: BoxDomain) -> Result<Self, SyzError> {
        let n = a.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { a[i] } else { 0.0 }), alloc::vec![0.0; n], alloc::vec![1.0; n], domain)
    }

    pub fn new(quadratic: DMatrix<f64>, eps: Vec<f64>, freq: Vec<f64>, domain: BoxDomain) -> Result<Self, SyzError> {
        let n = quadratic.nrows();
        if n == 0 || n > spectral::MAX_DIM || quadratic.ncols() != n {
            return Err(SyzError::InvalidPotential("quadratic part must be square with 1..=8 rows"));
        }
        if eps.len() != n || freq.len() != n {
            return Err(SyzError::InvalidPotential("perturbation arrays must have length n"));
        }
        if domain.dim() != n {
            return Err(SyzError::DimensionMismatch { expected: n, got: domain.dim() });
        }
        let asym = (&quadratic - quadratic.transpose()).norm();
        if asym > 1e-12 * quadratic.norm() {
            return Err(SyzError::InvalidPotential("quadratic part must be symmetric"));
        }
        if quadratic.iter().chain(&eps).chain(&freq).any(|x| !x.is_finite()) {
            return Err(SyzError::InvalidPotential("coefficients must be finite"));
        }
        Ok(Self { quadratic, eps, freq, domain })
    }

    pub fn dim(&self) -> usize {
        self.quadratic.nrows()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn is_quadratic(&self) -> bool {
        self.eps.iter().all(|&e| e == 0.0)
    }

    /// Dual potential `½ x̃ᵀA⁻¹x̃` of a purely quadratic `φ`, on the image box.
    pub fn legendre_dual(&self) -> Result<Self, SyzError> {
        if !self.is_quadratic() {
            return Err(SyzError::InvalidPotential("closed-form dual only for quadratic φ"));
        }
        let inv = Cholesky::new(self.quadratic.clone()).ok_or(SyzError::NonConvexPotential)?.inverse();
        let n = self.dim();
        // Image of the box corners bounds the dual domain.
        let mut lo = alloc::vec![f64::INFINITY; n];
        let mut hi = alloc::vec![f64::NEG_INFINITY; n];
        for mask in 0u32..(1 << n) {
            let corner = DVector::from_fn(n, |i, _| if mask & (1 << i) != 0 { self.domain.hi[i] } else { self.domain.lo[i] });
            let img = &self.quadratic * corner;
            for i in 0..n {
                lo[i] = lo[i].min(img[i]);
                hi[i] = hi[i].max(img[i]);
            }
        }
        Self::new(inv, alloc::vec![0.0; n], alloc::vec![1.0; n], BoxDomain::new(lo, hi)?)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        let quad = 0.5 * v.dot(&(&self.quadratic * &v));
        quad + (0..self.dim()).map(|i| self.eps[i] * math::sin(self.freq[i] * x[i])).sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(x);
        let mut g = &self.quadratic * v;
        for i in 0..self.dim() {
            g[i] += self.eps[i] * self.freq[i] * math::cos(self.freq[i] * x[i]);
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = self.quadratic.clone();
        for i in 0..self.dim() {
            let w = self.freq[i];
            h[(i, i)] -= self.eps[i] * w * w * math::sin(w * x[i]);
        }
        h
    }

    /// `φ_ijk`; only the diagonal `i = j = k` is non-zero for this family.
    pub fn third(&self, x: &[f64], i: usize, j: usize, k: usize) -> f64 {
        if i == j && j == k {
            let w = self.freq[i];
            -self.eps[i] * w * w * w * math::cos(w * x[i])
        } else {
            0.0
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<(), SyzError> {
        if x.len() != self.dim() {
            return Err(SyzError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if !self.domain.contains(x) {
            return Err(SyzError::OutOfDomain);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Trig {
    Cos,
    Sin,
}

/// One separable term of a section potential.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum SectionTerm {
    /// `amp · Πᵢ gᵢ(2π kᵢ xᵢ)`.
    Trig { amp: f64, k: Vec<f64>, fns: Vec<Trig> },
    /// `coef · Πᵢ xᵢ^{powers[i]}`.
    Monomial { coef: f64, powers: Vec<u32> },
}

impl SectionTerm {
    fn arity(&self) -> usize {
        match self {
            SectionTerm::Trig { k, fns, .. } => k.len().min(fns.len()),
            SectionTerm::Monomial { powers, .. } => powers.len(),
        }
    }

    /// Value, first and second derivative of the factor along axis `i`.
    fn factor(&self, i: usize, x: f64) -> [f64; 3] {
        match self {
            SectionTerm::Trig { k, fns, .. } => {
                let w = 2.0 * PI * k[i];
                let (s, c) = (math::sin(w * x), math::cos(w * x));
                match fns[i] {
                    Trig::Cos => [c, -w * s, -w * w * c],
                    Trig::Sin => [s, w * c, -w * w * s],
                }
            }
            SectionTerm::Monomial { powers, .. } => {
                let p = powers[i] as i32;
                let pf = p as f64;
                let v = math::powi(x, p);
                let d1 = if p >= 1 { pf * math::powi(x, p - 1) } else { 0.0 };
                let d2 = if p >= 2 { pf * (pf - 1.0) * math::powi(x, p - 2) } else { 0.0 };
                [v, d1, d2]
            }
        }
    }

    fn scale(&self) -> f64 {
        match self {
            SectionTerm::Trig { amp, .. } => *amp,
            SectionTerm::Monomial { coef, .. } => *coef,
        }
    }
}

/// `f = Σ terms`, with closed-form gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionPotential {
    n: usize,
    terms: Vec<SectionTerm>,
}

/// Value, gradient and Hessian of `f` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionJet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl SectionPotential {
    pub fn new(n: usize, terms: Vec<SectionTerm>) -> Result<Self, SyzError> {
        for t in &terms {
            let ok = match t {
                SectionTerm::Trig { k, fns, amp } => k.len() == n && fns.len() == n && amp.is_finite() && k.iter().all(|v| v.is_finite()),
                SectionTerm::Monomial { powers, coef } => powers.len() == n && coef.is_finite(),
            };
            if !ok || t.arity() != n {
                return Err(SyzError::InvalidPotential("section term arity must equal n and coefficients be finite"));
            }
        }
        Ok(Self { n, terms })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn jet(&self, x: &[f64]) -> SectionJet {
        let n = self.n;
        let mut value = 0.0;
        let mut gradient = DVector::zeros(n);
        let mut hessian = DMatrix::zeros(n, n);
        for term in &self.terms {
            let factors: Vec<[f64; 3]> = (0..n).map(|i| term.factor(i, x[i])).collect();
            let prod_except = |skip: &[usize]| -> f64 {
                (0..n).filter(|i| !skip.contains(i)).map(|i| factors[i][0]).product()
            };
            let c = term.scale();
            value += c * prod_except(&[]);
            for p in 0..n {
                gradient[p] += c * factors[p][1] * prod_except(&[p]);
                for j in 0..n {
                    hessian[(j, p)] += if j == p {
                        c * factors[p][2] * prod_except(&[p])
                    } else {
                        c * factors[j][1] * factors[p][1] * prod_except(&[j, p])
                    };
                }
            }
        }
        SectionJet { value, gradient, hessian }
    }
}

/// Convex Hessian `Φ` with its inverse.
struct HessianData {
    phi: DMatrix<f64>,
    inv: DMatrix<f64>,
}

fn hessian_data(phi: &ConvexPotential, x: &[f64]) -> Result<HessianData, SyzError> {
    phi.check_point(x)?;
    let h = phi.hessian(x);
    let n = h.nrows();
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let det = h.determinant();
    if det.abs() <= 1e-14 * math::powi(scale, n as i32) {
        return Err(SyzError::SingularHessian);
    }
    let chol = Cholesky::new(h.clone()).ok_or(SyzError::NonConvexPotential)?;
    Ok(HessianData { inv: chol.inverse(), phi: h })
}

fn check_section(phi: &ConvexPotential, f: &SectionPotential) -> Result<(), SyzError> {
    if f.dim() != phi.dim() {
        return Err(SyzError::DimensionMismatch { expected: phi.dim(), got: f.dim() });
    }
    Ok(())
}

/// `x̃ = ∇φ(x)`; its Jacobian is `φ_jk`.
pub fn legendre_map(phi: &ConvexPotential, x: &[f64]) -> Result<Vec<f64>, SyzError> {
    phi.check_point(x)?;
    Ok(phi.gradient(x).iter().copied().collect())
}

/// `M = ∂ỹ/∂x = Φ⁻¹(f″ − Q)` with `Q_mj = Σₖ φ_mjk (Φ⁻¹∇f)ₖ`.
fn section_derivative(phi: &ConvexPotential, f: &SectionPotential, x: &[f64], hd: &HessianData) -> DMatrix<f64> {
    let n = phi.dim();
    let jet = f.jet(x);
    let w = &hd.inv * &jet.gradient;
    let q = DMatrix::from_fn(n, n, |m, j| (0..n).map(|k| phi.third(x, m, j, k) * w[k]).sum::<f64>());
    &hd.inv * (jet.hessian - q)
}

pub fn slag_matrix(phi: &ConvexPotential, f: &SectionPotential, x: &[f64]) -> Result<DMatrix<Complex64>, SyzError> {
    check_section(phi, f)?;
    let hd = hessian_data(phi, x)?;
    let m = section_derivative(phi, f, x, &hd);
    Ok(DMatrix::from_fn(phi.dim(), phi.dim(), |i, j| Complex64::new(hd.phi[(i, j)], m[(i, j)])))
}

/// Curvature coefficients `K_ij = ∂ỹʲ/∂xⁱ` on `dxⁱ∧dyʲ`.
pub fn mirror_curvature(phi: &ConvexPotential, f: &SectionPotential, x: &[f64]) -> Result<DMatrix<f64>, SyzError> {
    check_section(phi, f)?;
    let hd = hessian_data(phi, x)?;
    Ok(section_derivative(phi, f, x, &hd).transpose())
}

/// Eigenvalues of the curvature relative to `ω`, i.e. of `E = Φ⁻¹K`.
pub fn mirror_curvature_spectrum(phi: &ConvexPotential, f: &SectionPotential, x: &[f64]) -> Result<Spectrum, SyzError> {
    check_section(phi, f)?;
    let hd = hessian_data(phi, x)?;
    let k = section_derivative(phi, f, x, &hd).transpose();
    let e = &hd.inv * k;
    let defect = (&e - e.transpose()).norm();
    if defect > LAGRANGIAN_TOL * (1.0 + e.norm()) {
        return Err(SyzError::LagrangianViolation { defect });
    }
    let n = phi.dim();
    let e = DMatrix::from_fn(n, n, |i, j| Complex64::new(0.5 * (e[(i, j)] + e[(j, i)]), 0.0));
    Ok(KahlerFrame::identity(n).spectrum_of(&e))
}

fn complex_det(m: &DMatrix<Complex64>) -> Complex64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().determinant(),
    }
}

/// Lifted `arg det S`, tracked along `s ↦ det(Re S + i·s·Im S)` from `s = 0`
/// where the determinant is positive.
pub fn slag_phase(s: &DMatrix<Complex64>) -> Result<f64, SyzError> {
    let re = s.map(|z| Complex64::new(z.re, 0.0));
    let im = s.map(|z| Complex64::new(0.0, z.im));
    let g = |t: f64| complex_det(&(&re + &im * Complex64::new(t, 0.0)));
    let opts = TrackOptions::for_interval(0.0, 1.0, 0.0);
    let start = g(0.0);
    if !(start.re > 0.0) {
        return Err(SyzError::NonConvexPotential);
    }
    let samples = track_argument(g, 0.0, 1.0, 0.0, &opts)?;
    Ok(samples.last().map(|p| p.arg).unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SemiFlatPointReport {
    pub x: Vec<f64>,
    /// Row-major entries of `S(x)`.
    pub slag_matrix: Vec<Complex64>,
    pub det_s: Complex64,
    pub slag_phase: f64,
    pub mirror_spectrum: Spectrum,
    pub mirror_theta: f64,
    pub mirror_radius: f64,
    /// `|slag_phase − mirror_theta|`.
    pub mismatch: f64,
    /// `|e^{i·mirror_theta} − det S/|det S||`.
    pub unit_mismatch: f64,
    /// `Im(e^{−iθ̂} det S) / det Φ`.
    pub slag_imag: f64,
    /// `Im(e^{−iθ̂} r e^{iΘ}) = r sin(Θ − θ̂)`.
    pub mirror_imag: f64,
}

pub fn point_report(phi: &ConvexPotential, f: &SectionPotential, x: &[f64], theta_hat: f64) -> Result<SemiFlatPointReport, SyzError> {
    let s = slag_matrix(phi, f, x)?;
    let det_phi = phi.hessian(x).determinant();
    let det_s = complex_det(&s);
    let phase = slag_phase(&s)?;
    let mirror_spectrum = mirror_curvature_spectrum(phi, f, x)?;
    let ar = spectral::angle_and_radius(&mirror_spectrum);
    let rot = Complex64::from_polar(1.0, -theta_hat);
    let unit = det_s / det_s.norm();
    Ok(SemiFlatPointReport {
        x: x.to_vec(),
        slag_matrix: s.transpose().iter().copied().collect(),
        det_s,
        slag_phase: phase,
        mirror_theta: ar.theta,
        mirror_radius: ar.radius,
        mismatch: (phase - ar.theta).abs(),
        unit_mismatch: (Complex64::from_polar(1.0, ar.theta) - unit).norm(),
        slag_imag: (rot * det_s).im / det_phi,
        mirror_imag: ar.radius * math::sin(ar.theta - theta_hat),
        mirror_spectrum,
    })
}

/// Uniform tensor grid over a box, endpoints included (a single point sits at the midpoint).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxGrid {
    pub domain: BoxDomain,
    pub counts: Vec<usize>,
}

impl BoxGrid {
    pub fn new(domain: BoxDomain, counts: Vec<usize>) -> Result<Self, SyzError> {
        if counts.len() != domain.dim() || counts.contains(&0) {
            return Err(SyzError::InvalidPotential("grid counts must be positive, one per axis"));
        }
        Ok(Self { domain, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coord(&self, axis: usize, j: usize) -> f64 {
        let (lo, hi, c) = (self.domain.lo[axis], self.domain.hi[axis], self.counts[axis]);
        if c == 1 {
            0.5 * (lo + hi)
        } else if j + 1 == c {
            hi
        } else {
            lo + (hi - lo) * j as f64 / (c - 1) as f64
        }
    }

    /// Point with flat index `idx` (last axis fastest).
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let n = self.counts.len();
        let mut x = alloc::vec![0.0; n];
        for axis in (0..n).rev() {
            x[axis] = self.coord(axis, idx % self.counts[axis]);
            idx /= self.counts[axis];
        }
        x
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseEquivalenceSummary {
    pub points: usize,
    pub theta_hat: f64,
    pub max_mismatch: f64,
    pub max_unit_mismatch: f64,
    /// `max |slag_imag − mirror_imag|`.
    pub max_imag_disagreement: f64,
    /// Points where `Im(e^{−iθ̂} det S)` and `r sin(Θ − θ̂)` have opposite strict signs.
    pub sign_disagreements: usize,
}

/// Evaluates both phase functions over the grid.
pub fn phase_equivalence_check(
    phi: &ConvexPotential,
    f: &SectionPotential,
    grid: &BoxGrid,
    theta_hat: f64,
) -> Result<(PhaseEquivalenceSummary, Vec<SemiFlatPointReport>), SyzError> {
    let reports = grid
        .points()
        .map(|x| point_report(phi, f, &x, theta_hat))
        .collect::<Result<Vec<_>, _>>()?;
    let mut summary = PhaseEquivalenceSummary {
        points: reports.len(),
        theta_hat,
        max_mismatch: 0.0,
        max_unit_mismatch: 0.0,
        max_imag_disagreement: 0.0,
        sign_disagreements: 0,
    };
    for r in &reports {
        summary.max_mismatch = summary.max_mismatch.max(r.mismatch);
        summary.max_unit_mismatch = summary.max_unit_mismatch.max(r.unit_mismatch);
        summary.max_imag_disagreement = summary.max_imag_disagreement.max((r.slag_imag - r.mirror_imag).abs());
        if r.slag_imag * r.mirror_imag < 0.0 {
            summary.sign_disagreements += 1;
        }
    }
    Ok((summary, reports))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MongeAmpereResidual {
    pub max_residual: f64,
    /// Residual above [`MA_WARN_TOL`]: the metric is not Ricci-flat, the phase identity still holds.
    pub warning: bool,
}

/// `max |det D²φ − 1|` over the grid.
pub fn monge_ampere_residual(phi: &ConvexPotential, grid: &BoxGrid) -> MongeAmpereResidual {
    let max_residual = grid
        .points()
        .map(|x| (phi.hessian(&x).determinant() - 1.0).abs())
        .fold(0.0, f64::max);
    MongeAmpereResidual { max_residual, warning: max_residual > MA_WARN_TOL }
}
