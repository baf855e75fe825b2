//! Heat flow `u̇ = Θ_ω(α₀ + i∂∂̄u) − θ` on the flat torus `ℂⁿ/ℤ²ⁿ`, `n ≤ 2`.
//!
//! The potential lives on an `N^{2n}` grid over `[0,1)^{2n}` with axes
//! `x₁..xₙ, y₁..yₙ` (`zⱼ = xⱼ + i yⱼ`). Derivatives are spectral and the state
//! is kept in Fourier space projected by the two-thirds rule, with the mean
//! mode pinned to zero. On the torus the unique solution in the class of a
//! constant `α₀` is `u ≡ const`, so the flow has a known limit.

mod grid;

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

pub use grid::{FftPlan, GridShape};

use crate::spectral::{self, HermitianPencil, KahlerFrame, SpectralError};

/// Smallest supported points per axis.
pub const MIN_GRID: usize = 8;
/// `u` larger than this in sup norm counts as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e6;
/// Fraction of spectral energy in dropped modes that triggers an alias warning.
pub const ALIAS_WARN_FRACTION: f64 = 1e-3;
/// Default `c` in `dt ≤ c·h²/λ_max(ω⁻¹)`.
pub const DEFAULT_CFL_CONSTANT: f64 = 0.25;

/// Pointwise kernels go parallel above this many grid points.
const PAR_POINTS: usize = 1 << 13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Error)]
pub enum FlowError {
    #[error("invalid background: {0}")]
    InvalidBackground(&'static str),
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("field has {got} values, grid needs {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("dt = {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("flow diverged at step {step}: ‖u‖∞ = {sup_norm:e}")]
    Diverged { step: usize, sup_norm: f64, trace: Box<FlowTrace> },
    #[error("flow did not converge in {steps} steps: ‖Θ − θ‖∞ = {residual:e}")]
    NotConverged { steps: usize, residual: f64, trace: Box<FlowTrace> },
}

impl FlowError {
    /// Trace of a run that stopped unsuccessfully.
    pub fn trace(&self) -> Option<&FlowTrace> {
        match self {
            FlowError::Diverged { trace, .. } | FlowError::NotConverged { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

/// Constant `(ω₀, α₀)` on the torus plus the grid resolution.
#[derive(Debug, Clone)]
pub struct TorusBackground {
    n: usize,
    pencil: HermitianPencil,
    grid: usize,
}

impl TorusBackground {
    pub fn new(omega0: DMatrix<Complex64>, alpha0: DMatrix<Complex64>, grid: usize) -> Result<Self, FlowError> {
        let pencil = HermitianPencil::new(omega0, alpha0)?;
        let n = pencil.dim();
        if n > 2 {
            return Err(FlowError::InvalidBackground("complex dimension must be 1 or 2"));
        }
        if grid < MIN_GRID || grid % 2 != 0 {
            return Err(FlowError::InvalidBackground("points per axis must be even and at least 8"));
        }
        Ok(Self { n, pencil, grid })
    }

    /// `ω₀ = I` and `α₀ = a·I`.
    pub fn scalar(n: usize, a: f64, grid: usize) -> Result<Self, FlowError> {
        let id = DMatrix::<Complex64>::identity(n, n);
        Self::new(id.clone(), id.map(|z| z * a), grid)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn shape(&self) -> GridShape {
        GridShape { points_per_axis: self.grid, axes: 2 * self.n }
    }

    pub fn omega0(&self) -> &DMatrix<Complex64> {
        self.pencil.omega()
    }

    pub fn alpha0(&self) -> &DMatrix<Complex64> {
        self.pencil.alpha()
    }

    fn frame(&self) -> &KahlerFrame {
        self.pencil.frame()
    }

    /// `det ω₀`, the density of `ωⁿ` against coordinate measure.
    pub fn omega_volume(&self) -> f64 {
        self.omega0().determinant().re
    }

    /// Lifted angle of the constant representative.
    pub fn constant_theta(&self) -> f64 {
        spectral::angle_and_radius(&spectral::relative_eigenvalues(&self.pencil)).theta
    }

    /// `r̂ = |∫(ω + iα₀)ⁿ|`.
    pub fn r_hat(&self) -> f64 {
        (self.omega0() + self.alpha0() * Complex64::i()).determinant().norm()
    }

    /// Largest stable explicit step `c·h²/λ_max(ω⁻¹)`.
    pub fn cfl_limit(&self, cfl_constant: f64) -> f64 {
        let lambda_min = spectral::hermitian_eigenvalues(self.omega0())[0];
        let h = 1.0 / self.grid as f64;
        cfl_constant * h * h * lambda_min
    }
}

/// Real samples of a periodic function on the background grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    shape: GridShape,
    values: Vec<f64>,
}

/// `amp · g(2π k·x)` with `x` ordered as the grid axes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrigMode {
    pub amp: f64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub kind: crate::syz::Trig,
    pub k: Vec<i64>,
}

impl PeriodicField {
    pub fn zeros(bg: &TorusBackground) -> Self {
        Self { shape: bg.shape(), values: vec![0.0; bg.shape().len()] }
    }

    pub fn from_values(bg: &TorusBackground, values: Vec<f64>) -> Result<Self, FlowError> {
        let shape = bg.shape();
        if values.len() != shape.len() {
            return Err(FlowError::ShapeMismatch { expected: shape.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::InvalidConfig("field values must be finite"));
        }
        Ok(Self { shape, values })
    }

    pub fn from_fn(bg: &TorusBackground, f: impl Fn(&[f64]) -> f64) -> Self {
        let shape = bg.shape();
        let values = (0..shape.len()).map(|p| f(&shape.coords(p))).collect();
        Self { shape, values }
    }

    /// `constant + Σ modes`.
    pub fn trigonometric(bg: &TorusBackground, constant: f64, modes: &[TrigMode]) -> Result<Self, FlowError> {
        let axes = bg.shape().axes;
        if modes.iter().any(|m| m.k.len() != axes) {
            return Err(FlowError::InvalidConfig("each mode needs one wavenumber per real axis"));
        }
        if !constant.is_finite() || modes.iter().any(|m| !m.amp.is_finite()) {
            return Err(FlowError::InvalidConfig("initial data must be finite"));
        }
        Ok(Self::from_fn(bg, |x| {
            constant
                + modes
                    .iter()
                    .map(|m| {
                        let phase = 2.0 * PI * m.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
                        m.amp
                            * match m.kind {
                                crate::syz::Trig::Cos => phase.cos(),
                                crate::syz::Trig::Sin => phase.sin(),
                            }
                    })
                    .sum::<f64>()
        }))
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same field with the mean subtracted.
    pub fn normalized(&self) -> Self {
        let m = self.mean();
        Self { shape: self.shape, values: self.values.iter().map(|v| v - m).collect() }
    }

    fn check(&self, bg: &TorusBackground) -> Result<(), FlowError> {
        if self.shape != bg.shape() {
            return Err(FlowError::ShapeMismatch { expected: bg.shape().len(), got: self.values.len() });
        }
        Ok(())
    }
}

/// Per-mode multipliers of `∂²/∂zⱼ∂z̄ₖ`, with dropped modes zeroed.
#[derive(Debug, Clone)]
struct Multipliers {
    keep: Vec<bool>,
    /// `n = 1`: the scalar; `n = 2`: `m₁₁ + i·m₂₂` packed.
    diag: Vec<Complex64>,
    /// `m₁₂` (only for `n = 2`).
    off: Vec<Complex64>,
}

impl Multipliers {
    fn new(n: usize, shape: GridShape) -> Self {
        let len = shape.len();
        let mut keep = vec![false; len];
        let mut diag = vec![ZERO; len];
        let mut off = if n == 2 { vec![ZERO; len] } else { Vec::new() };
        for p in 1..len {
            let idx = shape.index(p);
            if !idx.iter().all(|&j| shape.retains(j)) {
                continue;
            }
            keep[p] = true;
            let k: Vec<f64> = idx.iter().map(|&j| 2.0 * PI * shape.frequency(j) as f64).collect();
            let (kx, ky) = k.split_at(n);
            let m = |j: usize, l: usize| {
                Complex64::new(-(kx[j] * kx[l] + ky[j] * ky[l]), ky[j] * kx[l] - kx[j] * ky[l]) * 0.25
            };
            if n == 1 {
                diag[p] = m(0, 0);
            } else {
                diag[p] = Complex64::new(m(0, 0).re, m(1, 1).re);
                off[p] = m(0, 1);
            }
        }
        Self { keep, diag, off }
    }
}

/// `α₀` reduced by `L⁻¹` plus everything needed to reduce a perturbation.
#[derive(Debug, Clone, Copy)]
struct Reduction {
    /// `L⁻¹` entries row-major.
    l: [Complex64; 4],
    alpha: [Complex64; 4],
}

impl Reduction {
    fn new(bg: &TorusBackground) -> Self {
        let n = bg.dim();
        let li = bg.frame().inverse_cholesky();
        let a = bg.alpha0();
        let get = |m: &DMatrix<Complex64>, i: usize, j: usize| if i < n && j < n { m[(i, j)] } else { ZERO };
        Self {
            l: [get(li, 0, 0), get(li, 0, 1), get(li, 1, 0), get(li, 1, 1)],
            alpha: [get(a, 0, 0), get(a, 0, 1), get(a, 1, 0), get(a, 1, 1)],
        }
    }

    /// `L⁻¹ M L⁻*` for a 2×2 Hermitian `M = [[a, b], [b̄, d]]`; returns `(B₁₁, B₁₂, B₂₂)`.
    #[inline]
    fn reduce2(&self, a: f64, b: Complex64, d: f64) -> (f64, Complex64, f64) {
        let [l00, l01, l10, l11] = self.l;
        let m = [Complex64::new(a, 0.0), b, b.conj(), Complex64::new(d, 0.0)];
        let lm = [
            l00 * m[0] + l01 * m[2],
            l00 * m[1] + l01 * m[3],
            l10 * m[0] + l11 * m[2],
            l10 * m[1] + l11 * m[3],
        ];
        let b00 = lm[0] * l00.conj() + lm[1] * l01.conj();
        let b01 = lm[0] * l10.conj() + lm[1] * l11.conj();
        let b11 = lm[2] * l10.conj() + lm[3] * l11.conj();
        (b00.re, b01, b11.re)
    }

    /// Relative eigenvalues at a point given the `i∂∂̄u` entries.
    #[inline]
    fn eigenvalues(&self, n: usize, h11: f64, h12: Complex64, h22: f64) -> [f64; 2] {
        if n == 1 {
            let w = self.l[0].norm_sqr();
            [w * (self.alpha[0].re + h11), 0.0]
        } else {
            let (a, b, d) = self.reduce2(self.alpha[0].re + h11, self.alpha[1] + h12, self.alpha[3].re + h22);
            spectral::hermitian2_eigenvalues(a, b, d)
        }
    }
}

#[inline]
fn theta_radius(n: usize, lam: [f64; 2]) -> (f64, f64) {
    if n == 1 {
        (lam[0].atan(), (1.0 + lam[0] * lam[0]).sqrt())
    } else {
        (lam[0].atan() + lam[1].atan(), ((1.0 + lam[0] * lam[0]) * (1.0 + lam[1] * lam[1])).sqrt())
    }
}

/// Snapshot statistics of `Θ` over the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThetaStats {
    pub sup_theta: f64,
    pub inf_theta: f64,
    /// `‖Θ − θ‖∞`, which is also `‖u̇‖∞`.
    pub residual: f64,
    /// `V_ω(α_u) = ∫ r ωⁿ`.
    pub volume: f64,
}

/// Spectral workspace for one background.
struct Engine {
    n: usize,
    shape: GridShape,
    plan: FftPlan,
    mult: Multipliers,
    red: Reduction,
    omega_volume: f64,
    diag: Vec<Complex64>,
    off: Vec<Complex64>,
    scratch: Vec<Complex64>,
    theta: Vec<f64>,
    radius: Vec<f64>,
}

impl Engine {
    fn new(bg: &TorusBackground) -> Self {
        let shape = bg.shape();
        let len = shape.len();
        Self {
            n: bg.dim(),
            shape,
            plan: FftPlan::new(shape),
            mult: Multipliers::new(bg.dim(), shape),
            red: Reduction::new(bg),
            omega_volume: bg.omega_volume(),
            diag: vec![ZERO; len],
            off: if bg.dim() == 2 { vec![ZERO; len] } else { Vec::new() },
            scratch: Vec::with_capacity(len),
            theta: vec![0.0; len],
            radius: vec![0.0; len],
        }
    }

    /// Projected spectrum of a real field, and the energy fraction that was dropped.
    fn project(&mut self, values: &[f64]) -> (Vec<Complex64>, f64) {
        let mut hat: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plan.forward(&mut hat, &mut self.scratch);
        let (mut kept, mut dropped) = (0.0, 0.0);
        for (p, z) in hat.iter_mut().enumerate().skip(1) {
            if self.mult.keep[p] {
                kept += z.norm_sqr();
            } else {
                dropped += z.norm_sqr();
                *z = ZERO;
            }
        }
        hat[0] = ZERO;
        let total = kept + dropped;
        (hat, if total > 0.0 { dropped / total } else { 0.0 })
    }

    fn synthesize(&mut self, hat: &[Complex64]) -> Vec<f64> {
        let mut buf = hat.to_vec();
        self.plan.inverse(&mut buf, &mut self.scratch);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Fills `diag` / `off` with the real-space `i∂∂̄u` entries.
    fn hessian(&mut self, hat: &[Complex64]) {
        for ((d, &m), &u) in self.diag.iter_mut().zip(&self.mult.diag).zip(hat) {
            *d = m * u;
        }
        self.plan.inverse(&mut self.diag, &mut self.scratch);
        if self.n == 2 {
            for ((o, &m), &u) in self.off.iter_mut().zip(&self.mult.off).zip(hat) {
                *o = m * u;
            }
            self.plan.inverse(&mut self.off, &mut self.scratch);
        }
    }

    #[inline]
    fn entries(&self, p: usize) -> (f64, Complex64, f64) {
        if self.n == 1 {
            (self.diag[p].re, ZERO, 0.0)
        } else {
            (self.diag[p].re, self.off[p], self.diag[p].im)
        }
    }

    /// Θ and r at every point of the state `hat`.
    fn evaluate(&mut self, hat: &[Complex64]) {
        self.hessian(hat);
        let n = self.n;
        let red = self.red;
        let (diag, off) = (&self.diag, &self.off);
        let kernel = |p: usize, th: &mut f64, r: &mut f64| {
            let (h11, h12, h22) = if n == 1 { (diag[p].re, ZERO, 0.0) } else { (diag[p].re, off[p], diag[p].im) };
            let (t, rr) = theta_radius(n, red.eigenvalues(n, h11, h12, h22));
            *th = t;
            *r = rr;
        };
        if self.shape.len() >= PAR_POINTS {
            self.theta
                .par_iter_mut()
                .zip(self.radius.par_iter_mut())
                .enumerate()
                .for_each(|(p, (th, r))| kernel(p, th, r));
        } else {
            for (p, (th, r)) in self.theta.iter_mut().zip(self.radius.iter_mut()).enumerate() {
                kernel(p, th, r);
            }
        }
    }

    fn stats(&self, target: f64) -> ThetaStats {
        let mut s = ThetaStats { sup_theta: f64::NEG_INFINITY, inf_theta: f64::INFINITY, residual: 0.0, volume: 0.0 };
        let mut rsum = 0.0;
        for (&t, &r) in self.theta.iter().zip(&self.radius) {
            s.sup_theta = s.sup_theta.max(t);
            s.inf_theta = s.inf_theta.min(t);
            s.residual = s.residual.max((t - target).abs());
            rsum += r;
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            s.residual = f64::NAN;
        }
        s.volume = rsum / self.theta.len() as f64 * self.omega_volume;
        s
    }

    /// `P·FFT(Θ − θ)` for the state `hat`, written into `out`.
    fn rhs(&mut self, hat: &[Complex64], target: f64, out: &mut Vec<Complex64>) -> ThetaStats {
        self.evaluate(hat);
        let stats = self.stats(target);
        out.clear();
        out.extend(self.theta.iter().map(|&t| Complex64::new(t - target, 0.0)));
        self.plan.forward(out, &mut self.scratch);
        for (z, &k) in out.iter_mut().zip(&self.mult.keep) {
            if !k {
                *z = ZERO;
            }
        }
        stats
    }
}

/// `i∂∂̄u` on the grid: `n×n` Hermitian matrices stored row-major per point.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianField {
    pub n: usize,
    pub entries: Vec<Complex64>,
    /// Share of the input's spectral energy in modes removed by dealiasing.
    pub alias_fraction: f64,
}

impl HessianField {
    pub fn len(&self) -> usize {
        self.entries.len() / (self.n * self.n)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn at(&self, p: usize) -> DMatrix<Complex64> {
        let n2 = self.n * self.n;
        DMatrix::from_row_slice(self.n, self.n, &self.entries[p * n2..(p + 1) * n2])
    }

    /// Input was not resolved by the dealiased grid.
    pub fn alias_warning(&self) -> bool {
        self.alias_fraction >= ALIAS_WARN_FRACTION
    }
}

pub fn complex_hessian(u: &PeriodicField, bg: &TorusBackground) -> Result<HessianField, FlowError> {
    u.check(bg)?;
    let mut eng = Engine::new(bg);
    let (hat, alias_fraction) = eng.project(&u.values);
    eng.hessian(&hat);
    let n = bg.dim();
    let mut entries = Vec::with_capacity(hat.len() * n * n);
    for p in 0..hat.len() {
        let (h11, h12, h22) = eng.entries(p);
        if n == 1 {
            entries.push(Complex64::new(h11, 0.0));
        } else {
            entries.extend([Complex64::new(h11, 0.0), h12, h12.conj(), Complex64::new(h22, 0.0)]);
        }
    }
    Ok(HessianField { n, entries, alias_fraction })
}

/// Lifted `Θ_ω(α₀ + i∂∂̄u)` at every grid point.
pub fn theta_field(u: &PeriodicField, bg: &TorusBackground) -> Result<PeriodicField, FlowError> {
    u.check(bg)?;
    let mut eng = Engine::new(bg);
    let (hat, _) = eng.project(&u.values);
    eng.evaluate(&hat);
    Ok(PeriodicField { shape: bg.shape(), values: eng.theta })
}

/// `V_ω(α_u)`, the grid mean of `r` times `det ω₀`.
pub fn volume_functional(u: &PeriodicField, bg: &TorusBackground) -> Result<f64, FlowError> {
    u.check(bg)?;
    let mut eng = Engine::new(bg);
    let (hat, _) = eng.project(&u.values);
    eng.evaluate(&hat);
    Ok(eng.stats(0.0).volume)
}

/// `d/ds V(u + s·δu)` at `s = 0`, from `δr = r·tr((I + B²)⁻¹ B δB)`.
pub fn volume_first_variation(u: &PeriodicField, du: &PeriodicField, bg: &TorusBackground) -> Result<f64, FlowError> {
    let h = complex_hessian(u, bg)?;
    let dh = complex_hessian(du, bg)?;
    let frame = bg.frame();
    let n = bg.dim();
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut acc = 0.0;
    for p in 0..h.len() {
        let b = frame.reduce(&(bg.alpha0() + h.at(p)));
        let db = frame.reduce(&dh.at(p));
        let r = (&id + &b * Complex64::i()).determinant().norm();
        let inv = (&id + &b * &b).try_inverse().expect("I + B² is positive definite");
        acc += r * (inv * &b * db).trace().re;
    }
    Ok(acc / h.len() as f64 * bg.omega_volume())
}

/// Smallest eigenvalue over the grid of the linearised coefficients `(I + B²)⁻¹`.
pub fn ellipticity_margin(u: &PeriodicField, bg: &TorusBackground) -> Result<f64, FlowError> {
    let h = complex_hessian(u, bg)?;
    let frame = bg.frame();
    let mut margin = f64::INFINITY;
    for p in 0..h.len() {
        let b = frame.reduce(&(bg.alpha0() + h.at(p)));
        let lam = spectral::hermitian_eigenvalues(&b);
        let worst = lam.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        margin = margin.min(1.0 / (1.0 + worst * worst));
    }
    Ok(margin)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum ThetaTarget {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scheme {
    #[default]
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub dt: f64,
    pub max_steps: usize,
    pub tol: f64,
    pub theta: ThetaTarget,
    pub scheme: Scheme,
    pub cfl_constant: f64,
}

impl FlowConfig {
    /// Largest stable step for `bg`, target `Auto`.
    pub fn for_background(bg: &TorusBackground, tol: f64, max_steps: usize) -> Self {
        Self {
            dt: bg.cfl_limit(DEFAULT_CFL_CONSTANT),
            max_steps,
            tol,
            theta: ThetaTarget::Auto,
            scheme: Scheme::Euler,
            cfl_constant: DEFAULT_CFL_CONSTANT,
        }
    }

    fn validate(&self, bg: &TorusBackground) -> Result<(), FlowError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(FlowError::InvalidConfig("dt must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(FlowError::InvalidConfig("tol must be positive"));
        }
        if !(self.cfl_constant > 0.0) {
            return Err(FlowError::InvalidConfig("cfl constant must be positive"));
        }
        if let ThetaTarget::Value(t) = self.theta {
            if !t.is_finite() {
                return Err(FlowError::InvalidConfig("theta must be finite"));
            }
        }
        let limit = bg.cfl_limit(self.cfl_constant);
        if self.dt > limit {
            return Err(FlowError::CflViolation { dt: self.dt, limit });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowRecord {
    pub step: usize,
    pub sup_theta: f64,
    pub inf_theta: f64,
    pub residual: f64,
    pub volume: f64,
}

impl FlowRecord {
    pub fn oscillation(&self) -> f64 {
        self.sup_theta - self.inf_theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    /// Mean-zero final potential.
    pub final_field: PeriodicField,
    pub converged: bool,
    pub steps: usize,
    pub theta_target: f64,
    pub r_hat: f64,
    pub alias_fraction: f64,
}

impl FlowTrace {
    pub fn last(&self) -> &FlowRecord {
        self.records.last().expect("trace holds the initial record")
    }

    /// Largest per-step increase of `osc Θ`.
    pub fn max_oscillation_increase(&self) -> f64 {
        self.records.windows(2).map(|w| w[1].oscillation() - w[0].oscillation()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min(V − r̂)` over the run.
    pub fn min_bps_gap(&self) -> f64 {
        self.records.iter().map(|r| r.volume - self.r_hat).fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for FlowTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.last();
        write!(
            f,
            "steps={} converged={} residual={:e} V={} r_hat={}",
            self.steps, self.converged, last.residual, last.volume, self.r_hat
        )
    }
}

fn axpy(out: &mut [Complex64], x: &[Complex64], a: f64, y: &[Complex64]) {
    for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + yi * a;
    }
}

/// Explicit stepping `u ← u + dt·(Θ(α_u) − θ)` until `‖Θ − θ‖∞ ≤ tol`.
pub fn run_flow(bg: &TorusBackground, u0: &PeriodicField, cfg: &FlowConfig) -> Result<FlowTrace, FlowError> {
    u0.check(bg)?;
    cfg.validate(bg)?;
    let target = match cfg.theta {
        ThetaTarget::Auto => bg.constant_theta(),
        ThetaTarget::Value(t) => t,
    };
    let mut eng = Engine::new(bg);
    let (mut hat, alias_fraction) = eng.project(&u0.values);
    let len = hat.len();
    let mut k1 = Vec::with_capacity(len);
    let (mut k2, mut k3, mut k4, mut stage) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    if cfg.scheme == Scheme::Rk4 {
        k2.reserve(len);
        k3.reserve(len);
        k4.reserve(len);
        stage = vec![ZERO; len];
    }
    let mut records = Vec::new();
    let dt = cfg.dt;
    let mut step = 0;
    let outcome = loop {
        let s = eng.rhs(&hat, target, &mut k1);
        records.push(FlowRecord { step, sup_theta: s.sup_theta, inf_theta: s.inf_theta, residual: s.residual, volume: s.volume });
        if !s.residual.is_finite() {
            break Err(f64::INFINITY);
        }
        if s.residual <= cfg.tol {
            break Ok(true);
        }
        if step == cfg.max_steps {
            break Ok(false);
        }
        match cfg.scheme {
            Scheme::Euler => {
                for (h, &k) in hat.iter_mut().zip(&k1) {
                    *h += k * dt;
                }
            }
            Scheme::Rk4 => {
                axpy(&mut stage, &hat, 0.5 * dt, &k1);
                eng.rhs(&stage, target, &mut k2);
                axpy(&mut stage, &hat, 0.5 * dt, &k2);
                eng.rhs(&stage, target, &mut k3);
                axpy(&mut stage, &hat, dt, &k3);
                eng.rhs(&stage, target, &mut k4);
                for p in 0..len {
                    hat[p] += (k1[p] + (k2[p] + k3[p]) * 2.0 + k4[p]) * (dt / 6.0);
                }
            }
        }
        step += 1;
        // ‖u‖∞ ≤ Σ|û|/len; only transform back when the cheap bound trips.
        let bound = hat.iter().map(|z| z.norm()).sum::<f64>() / len as f64;
        if !(bound <= DIVERGENCE_BOUND) {
            let sup = eng.synthesize(&hat).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(sup <= DIVERGENCE_BOUND) {
                break Err(sup);
            }
        }
    };
    let final_field = PeriodicField { shape: bg.shape(), values: eng.synthesize(&hat) };
    let last = *records.last().expect("at least one record");
    let trace = FlowTrace {
        records,
        final_field,
        converged: matches!(outcome, Ok(true)),
        steps: step,
        theta_target: target,
        r_hat: bg.r_hat(),
        alias_fraction,
    };
    match outcome {
        Ok(true) => Ok(trace),
        Ok(false) => Err(FlowError::NotConverged { steps: step, residual: last.residual, trace: Box::new(trace) }),
        Err(sup_norm) => Err(FlowError::Diverged { step, sup_norm, trace: Box::new(trace) }),
    }
}

/// `‖u_a − u_b − mean(u_a − u_b)‖∞` between the limits of two converged runs.
pub fn uniqueness_check(
    bg: &TorusBackground,
    u0_a: &PeriodicField,
    u0_b: &PeriodicField,
    cfg: &FlowConfig,
) -> Result<f64, FlowError> {
    let a = run_flow(bg, u0_a, cfg)?;
    let b = run_flow(bg, u0_b, cfg)?;
    Ok(field_distance(&a.final_field, &b.final_field))
}

/// `‖a − b − mean(a − b)‖∞`.
pub fn field_distance(a: &PeriodicField, b: &PeriodicField) -> f64 {
    let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let m = diff.iter().sum::<f64>() / diff.len() as f64;
    diff.iter().fold(0.0, |acc, d| acc.max((d - m).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syz::Trig;

    fn cos_mode(amp: f64, k: &[i64]) -> TrigMode {
        TrigMode { amp, kind: Trig::Cos, k: k.to_vec() }
    }

    fn max_err(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
        a.iter().enumerate().map(|(p, v)| (v - b(p)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn background_validation() {
        assert!(TorusBackground::scalar(1, 1.0, 6).is_err());
        assert!(TorusBackground::scalar(1, 1.0, 9).is_err());
        assert!(TorusBackground::scalar(3, 1.0, 8).is_err());
        assert!(TorusBackground::scalar(2, 1.0, 12).is_ok());
        let neg = DMatrix::from_element(1, 1, Complex64::new(-1.0, 0.0));
        assert!(matches!(
            TorusBackground::new(neg.clone(), neg, 8),
            Err(FlowError::Spectral(SpectralError::NotPositiveDefinite))
        ));
    }

    #[test]
    fn hessian_of_zero_is_zero() {
        let bg = TorusBackground::scalar(2, 0.0, 8).unwrap();
        let h = complex_hessian(&PeriodicField::zeros(&bg), &bg).unwrap();
        assert!(h.entries.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn hessian_of_cosines() {
        let bg = TorusBackground::scalar(1, 0.0, 16).unwrap();
        let shape = bg.shape();
        for axis in 0..2 {
            let mut k = vec![0, 0];
            k[axis] = 1;
            let u = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(1.0, &k)]).unwrap();
            let h = complex_hessian(&u, &bg).unwrap();
            assert!(!h.alias_warning());
            let re: Vec<f64> = h.entries.iter().map(|z| z.re).collect();
            let err = max_err(&re, |p| -PI * PI * (2.0 * PI * shape.coords(p)[axis]).cos());
            assert!(err < 1e-10, "{err}");
            assert!(h.entries.iter().all(|z| z.im.abs() < 1e-12));
        }
    }

    #[test]
    fn hessian_n2_against_closed_form() {
        // u = sin(2π(x₁ + 2y₂)): ∂²/∂z₁∂z̄₂ u = ¼(∂x₁∂x₂ + ∂y₁∂y₂ + i(∂x₁∂y₂ − ∂y₁∂x₂))u = ¼·i·(−(2π)²·2)u.
        let bg = TorusBackground::scalar(2, 0.0, 16).unwrap();
        let shape = bg.shape();
        let u = PeriodicField::trigonometric(&bg, 0.0, &[TrigMode { amp: 1.0, kind: Trig::Sin, k: vec![1, 0, 0, 2] }]).unwrap();
        let h = complex_hessian(&u, &bg).unwrap();
        let w = 2.0 * PI;
        let mut worst: f64 = 0.0;
        for p in 0..h.len() {
            let x = shape.coords(p);
            let s = (w * (x[0] + 2.0 * x[3])).sin();
            let want = [
                Complex64::new(-0.25 * w * w * s, 0.0),
                Complex64::new(0.0, -0.5 * w * w * s),
                Complex64::new(0.0, 0.5 * w * w * s),
                Complex64::new(-w * w * s, 0.0),
            ];
            let m = h.at(p);
            for (i, z) in want.iter().enumerate() {
                worst = worst.max((m[(i / 2, i % 2)] - z).norm());
            }
            assert!((&m - m.adjoint()).norm() < 1e-12);
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn alias_warning_for_unresolved_modes() {
        let bg = TorusBackground::scalar(1, 0.0, 8).unwrap();
        let u = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(1.0, &[3, 0])]).unwrap();
        assert!(complex_hessian(&u, &bg).unwrap().alias_warning());
    }

    #[test]
    fn theta_of_constant_representatives() {
        let bg = TorusBackground::scalar(2, 1.0, 8).unwrap();
        let t = theta_field(&PeriodicField::zeros(&bg), &bg).unwrap();
        assert!(t.values().iter().all(|v| (v - PI / 2.0).abs() < 1e-15));
        let bg = TorusBackground::scalar(1, 1.0, 8).unwrap();
        let t = theta_field(&PeriodicField::zeros(&bg), &bg).unwrap();
        assert!(t.values().iter().all(|v| (v - PI / 4.0).abs() < 1e-15));
    }

    #[test]
    fn theta_linearisation() {
        let eps = 1e-4;
        let bg = TorusBackground::scalar(1, 0.0, 32).unwrap();
        let shape = bg.shape();
        let u = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(eps, &[1, 0])]).unwrap();
        let t = theta_field(&u, &bg).unwrap();
        let err = max_err(t.values(), |p| (-PI * PI * eps * (2.0 * PI * shape.coords(p)[0]).cos()).atan());
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn non_identity_omega_matches_pointwise_pencil() {
        let omega = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(2.0, 0.0), Complex64::new(0.3, 0.4),
            Complex64::new(0.3, -0.4), Complex64::new(1.0, 0.0),
        ]);
        let alpha = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.5, 0.0), Complex64::new(-0.2, 0.1),
            Complex64::new(-0.2, -0.1), Complex64::new(1.5, 0.0),
        ]);
        let bg = TorusBackground::new(omega.clone(), alpha.clone(), 8).unwrap();
        let u = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(0.01, &[1, 0, 0, 1]), cos_mode(0.02, &[0, 1, 1, 0])]).unwrap();
        let t = theta_field(&u, &bg).unwrap();
        let h = complex_hessian(&u, &bg).unwrap();
        for p in 0..h.len() {
            let pencil = HermitianPencil::new(omega.clone(), &alpha + h.at(p)).unwrap();
            let want = spectral::angle_and_radius(&spectral::relative_eigenvalues(&pencil)).theta;
            assert!((t.values()[p] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn volume_examples() {
        let bg = TorusBackground::scalar(1, 0.0, 16).unwrap();
        let zero = PeriodicField::zeros(&bg);
        assert!((volume_functional(&zero, &bg).unwrap() - 1.0).abs() < 1e-15);
        assert!((bg.r_hat() - 1.0).abs() < 1e-15);
        let u = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(0.1, &[1, 0])]).unwrap();
        assert!(volume_functional(&u, &bg).unwrap() > bg.r_hat() + 1e-3);
        let bg = TorusBackground::scalar(2, 1.0, 8).unwrap();
        assert!((volume_functional(&PeriodicField::zeros(&bg), &bg).unwrap() - 2.0).abs() < 1e-14);
        assert!((bg.r_hat() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn first_variation_matches_difference_quotient() {
        let bg = TorusBackground::scalar(2, 0.5, 8).unwrap();
        let u = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(0.02, &[1, 0, 0, 0])]).unwrap();
        let du = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(0.01, &[0, 1, 1, 0])]).unwrap();
        let pred = volume_first_variation(&u, &du, &bg).unwrap();
        let shifted = |s: f64| {
            let v: Vec<f64> = u.values().iter().zip(du.values()).map(|(a, b)| a + s * b).collect();
            volume_functional(&PeriodicField::from_values(&bg, v).unwrap(), &bg).unwrap()
        };
        let err = |s: f64| ((shifted(s) - shifted(-s)) / (2.0 * s) - pred).abs();
        assert!(err(1e-3) < 1e-8 * (1.0 + pred.abs()), "{} vs {pred}", err(1e-3));
    }

    #[test]
    fn zero_initial_data_is_already_converged() {
        let bg = TorusBackground::scalar(1, 1.0, 8).unwrap();
        let cfg = FlowConfig::for_background(&bg, 1e-8, 10);
        let tr = run_flow(&bg, &PeriodicField::zeros(&bg), &cfg).unwrap();
        assert!(tr.converged);
        assert_eq!(tr.steps, 0);
        assert_eq!(tr.final_field.sup_norm(), 0.0);
    }

    #[test]
    fn max_steps_zero_is_not_converged() {
        let bg = TorusBackground::scalar(1, 1.0, 8).unwrap();
        let cfg = FlowConfig::for_background(&bg, 1e-8, 0);
        let u = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(0.1, &[1, 0])]).unwrap();
        match run_flow(&bg, &u, &cfg) {
            Err(FlowError::NotConverged { steps: 0, trace, .. }) => assert_eq!(trace.records.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let bg = TorusBackground::scalar(1, 1.0, 8).unwrap();
        let mut cfg = FlowConfig::for_background(&bg, 1e-8, 10);
        cfg.dt *= 2.0;
        assert!(matches!(run_flow(&bg, &PeriodicField::zeros(&bg), &cfg), Err(FlowError::CflViolation { .. })));
    }

    #[test]
    fn small_flow_converges_with_both_schemes() {
        let bg = TorusBackground::scalar(1, 1.0, 16).unwrap();
        let u = PeriodicField::trigonometric(&bg, 0.3, &[cos_mode(0.05, &[1, 0]), cos_mode(0.02, &[0, 1])]).unwrap();
        for scheme in [Scheme::Euler, Scheme::Rk4] {
            let mut cfg = FlowConfig::for_background(&bg, 1e-8, 20_000);
            cfg.scheme = scheme;
            let tr = run_flow(&bg, &u, &cfg).unwrap();
            assert!(tr.final_field.sup_norm() < 1e-7);
            assert!(tr.final_field.mean().abs() < 1e-12);
            assert!(tr.min_bps_gap() >= -1e-12);
            assert!(tr.max_oscillation_increase() <= 1e-6);
            assert!((tr.last().volume - tr.r_hat).abs() < 1e-6 * tr.r_hat);
        }
    }

    #[test]
    fn ellipticity_margin_is_positive() {
        let bg = TorusBackground::scalar(1, 1.0, 16).unwrap();
        let u = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(0.1, &[1, 0])]).unwrap();
        let m = ellipticity_margin(&u, &bg).unwrap();
        assert!(m > 0.0 && m <= 1.0);
    }

    #[test]
    fn constant_shift_is_invisible() {
        let bg = TorusBackground::scalar(1, 1.0, 16).unwrap();
        let cfg = FlowConfig::for_background(&bg, 1e-8, 20_000);
        let a = PeriodicField::trigonometric(&bg, 0.0, &[cos_mode(0.1, &[1, 0])]).unwrap();
        let b = PeriodicField::trigonometric(&bg, 5.0, &[cos_mode(0.1, &[1, 0])]).unwrap();
        assert!(uniqueness_check(&bg, &a, &b, &cfg).unwrap() < 1e-14);
    }
}
