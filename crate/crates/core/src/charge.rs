//! Central charges of a line bundle and the algebraic obstructions to dHYM.
//!
//! All inputs are intersection numbers `Aₖ = ∫_X ωⁿ⁻ᵏ ∧ c₁(L)ᵏ`. Two
//! normalisations of the same data appear:
//!
//! - the charge path `P(t) = ∫(tω + iα)ⁿ = Σₖ C(n,k) iᵏ tⁿ⁻ᵏ Aₖ`, whose
//!   argument tracked from `t = ∞` (where it is 0) down to `t = 1` is the
//!   lifted angle `theta_dhym`, directly comparable with pointwise `Θ` values;
//! - the central charge `γ(t) = Z_{tω}(L) = −∫ e^{−itω} ch(L)`, related by
//!   `P(t) = −n!·iⁿ·γ(t)`. Its winding angle is
//!   `theta_bridgeland = theta_dhym + π − nπ/2`.
//!
//! No Todd class factor enters any charge.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::math::{binomial, factorial, powi, sqrt};
use crate::winding::{track_argument, TrackError, TrackOptions, TrackedSample};

/// Default relative threshold for declaring `P(t) = 0`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChargeError {
    #[error("invalid topological data: {0}")]
    InvalidData(&'static str),
    #[error("dimension mismatch: operation needs n = {expected}, data has n = {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("t_max = {t_max} is below the required {required}")]
    TMaxTooSmall { t_max: f64, required: f64 },
    #[error("charge path crosses the origin at t = {t}; the lifted angle is undefined")]
    OriginCrossing { t: f64 },
    #[error("argument tracking step underflow near t = {t}")]
    StepUnderflow { t: f64 },
    #[error("ambient central charge vanishes")]
    ZeroAmbientCharge,
    #[error("non-positive volume: {0}")]
    NonPositiveVolume(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubvarietyData {
    pub label: String,
    pub dim: usize,
    /// `Bₖ = ∫_V ωᵖ⁻ᵏ ∧ c₁(L)ᵏ`, `k = 0..=p`.
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub b: Vec<f64>,
}

impl SubvarietyData {
    pub fn new(label: impl Into<String>, dim: usize, b: Vec<f64>) -> Result<Self, ChargeError> {
        let v = Self { label: label.into(), dim, b };
        v.validate()?;
        Ok(v)
    }

    fn validate(&self) -> Result<(), ChargeError> {
        if self.dim == 0 {
            return Err(ChargeError::InvalidData("subvariety dimension must be ≥ 1"));
        }
        if self.b.len() != self.dim + 1 {
            return Err(ChargeError::InvalidData("subvariety B must have dim + 1 entries"));
        }
        if self.b.iter().any(|x| !x.is_finite()) {
            return Err(ChargeError::InvalidData("subvariety B must be finite"));
        }
        if !(self.b[0] > 0.0) {
            return Err(ChargeError::InvalidData("subvariety needs B₀ = ∫_V ωᵖ > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TopologicalData {
    pub n: usize,
    /// `Aₖ = ∫_X ωⁿ⁻ᵏ ∧ c₁(L)ᵏ`, `k = 0..=n`.
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub a: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub subvarieties: Vec<SubvarietyData>,
}

impl TopologicalData {
    pub fn new(n: usize, a: Vec<f64>) -> Result<Self, ChargeError> {
        Self::with_subvarieties(n, a, Vec::new())
    }

    pub fn with_subvarieties(
        n: usize,
        a: Vec<f64>,
        subvarieties: Vec<SubvarietyData>,
    ) -> Result<Self, ChargeError> {
        let d = Self { n, a, subvarieties };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ChargeError> {
        if self.n == 0 || self.n > crate::spectral::MAX_DIM {
            return Err(ChargeError::InvalidData("n must be in 1..=8"));
        }
        if self.a.len() != self.n + 1 {
            return Err(ChargeError::InvalidData("A must have n + 1 entries"));
        }
        if self.a.iter().any(|x| !x.is_finite()) {
            return Err(ChargeError::InvalidData("A must be finite"));
        }
        if !(self.a[0] > 0.0) {
            return Err(ChargeError::InvalidData("A₀ = ∫ωⁿ must be positive"));
        }
        for v in &self.subvarieties {
            v.validate()?;
            if v.dim >= self.n {
                return Err(ChargeError::InvalidData("subvariety dimension must be < n"));
            }
        }
        Ok(())
    }

    /// `10·(1 + Σ|Aₖ|/A₀)`.
    pub fn default_t_max(&self) -> f64 {
        10.0 * (1.0 + self.a.iter().map(|x| x.abs()).sum::<f64>() / self.a[0])
    }

    /// `10·(1 + maxₖ |Aₖ/A₀|)`, the smallest admissible `t_max`.
    pub fn min_t_max(&self) -> f64 {
        let m = self.a.iter().map(|x| (x / self.a[0]).abs()).fold(0.0, f64::max);
        10.0 * (1.0 + m)
    }

    /// Coefficients of `P` by ascending power of `t`.
    pub fn path_coefficients(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut coeffs = alloc::vec![Complex64::new(0.0, 0.0); n + 1];
        for (k, &ak) in self.a.iter().enumerate() {
            coeffs[n - k] = i_pow(k) * (binomial(n, k) * ak);
        }
        coeffs
    }

    /// `P(t) = ∫(tω + iα)ⁿ`.
    pub fn path_value(&self, t: f64) -> Complex64 {
        horner(&self.path_coefficients(), t)
    }

    /// `γ(t) = −Σₖ (−i)ⁿ⁻ᵏ tⁿ⁻ᵏ Aₖ / ((n−k)! k!)`.
    pub fn central_charge_at(&self, t: f64) -> Complex64 {
        charge_series(&self.a, t)
    }

    /// `Z_ω(L) = γ(1)`.
    pub fn central_charge(&self) -> Complex64 {
        self.central_charge_at(1.0)
    }
}

/// `Z_{ω,V}(L) = −∫_V e^{−iω} ch(L)`.
pub fn subvariety_charge(v: &SubvarietyData) -> Complex64 {
    charge_series(&v.b, 1.0)
}

fn charge_series(a: &[f64], t: f64) -> Complex64 {
    let n = a.len() - 1;
    let minus_i = Complex64::new(0.0, -1.0);
    -a.iter()
        .enumerate()
        .map(|(k, &ak)| {
            minus_i.powu((n - k) as u32) * (powi(t, (n - k) as i32) * ak / (factorial(n - k) * factorial(k)))
        })
        .sum::<Complex64>()
}

fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn horner(coeffs: &[Complex64], t: f64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c)
}

/// `P(t) / Σ|cₖ|tᵏ`: same argument, modulus at most 1, so one zero threshold fits every `t`.
fn normalized(coeffs: &[Complex64], t: f64) -> Complex64 {
    let weight = coeffs.iter().rev().fold(0.0, |acc, c| acc * t.abs() + c.norm());
    horner(coeffs, t) / weight
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChargePath {
    pub n: usize,
    /// Coefficients of `P(t)` by ascending power of `t`.
    pub coeffs: Vec<Complex64>,
    pub t_max: f64,
    /// Tracked samples from `t_max` down to `1`.
    pub samples: Vec<TrackedSample>,
    /// Tracked `arg P(1)`, with branch fixed by `arg P(∞) = 0`.
    pub lifted_angle: f64,
    /// `γ(1) = −P(1)/(n!·iⁿ)`.
    pub central_charge: Complex64,
}

impl ChargePath {
    /// The winding angle of `γ`: `theta_dhym + π − nπ/2`.
    pub fn theta_bridgeland(&self) -> f64 {
        bridgeland_offset(self.n) + self.lifted_angle
    }
}

/// Constant `arg(−1/(n!·iⁿ)) = π − nπ/2` between the two angle conventions.
pub fn bridgeland_offset(n: usize) -> f64 {
    PI - n as f64 * FRAC_PI_2
}

fn map_track(e: TrackError, invert: bool) -> ChargeError {
    let fix = |t: f64| if invert { 1.0 / t } else { t };
    match e {
        TrackError::Zero { t } => ChargeError::OriginCrossing { t: fix(t) },
        TrackError::StepUnderflow { t } => ChargeError::StepUnderflow { t: fix(t) },
    }
}

/// Evaluates `P` on an adaptive grid from `t_max` to 1 and tracks its argument.
///
/// The branch at `t_max` is fixed by tracking the reversed polynomial
/// `sⁿP(1/s)` from `s = 0`, where it equals `A₀ > 0`.
pub fn build_charge_path(d: &TopologicalData, t_max: f64, tol: f64) -> Result<ChargePath, ChargeError> {
    d.validate()?;
    let required = d.min_t_max();
    if !(t_max >= required) {
        return Err(ChargeError::TMaxTooSmall { t_max, required });
    }
    if !(tol > 0.0) {
        return Err(ChargeError::InvalidData("tol must be positive"));
    }
    let n = d.n;
    let coeffs = d.path_coefficients();

    // Tail t ∈ [t_max, ∞) as s = 1/t ∈ (0, 1/t_max].
    let reversed: Vec<Complex64> = coeffs.iter().rev().copied().collect();
    let s_end = 1.0 / t_max;
    let tail_opts = TrackOptions::for_interval(0.0, s_end, tol);
    let tail = track_argument(|s| normalized(&reversed, s), 0.0, s_end, 0.0, &tail_opts)
        .map_err(|e| map_track(e, true))?;
    let start_arg = tail.last().map(|s| s.arg).unwrap_or(0.0);

    let opts = TrackOptions::for_interval(t_max, 1.0, tol);
    let samples = if t_max > 1.0 {
        let mut samples = track_argument(|t| normalized(&coeffs, t), t_max, 1.0, start_arg, &opts)
            .map_err(|e| map_track(e, false))?;
        for p in &mut samples {
            p.value = horner(&coeffs, p.t);
        }
        samples
    } else {
        let value = horner(&coeffs, 1.0);
        alloc::vec![TrackedSample { t: 1.0, value, arg: start_arg }]
    };
    let last = *samples.last().expect("tracking returns endpoints");
    let central_charge = -last.value / (i_pow(n) * factorial(n));
    Ok(ChargePath { n, coeffs, t_max, samples, lifted_angle: last.arg, central_charge })
}

/// [`build_charge_path`] with the default `t_max` and zero threshold.
pub fn charge_path(d: &TopologicalData) -> Result<ChargePath, ChargeError> {
    build_charge_path(d, d.default_t_max(), DEFAULT_ZERO_TOL)
}

/// `Arg_{p.v.}(A₀ + iA₁)` for curves (dHYM convention; add π/2 for the
/// Bridgeland convention).
pub fn dim1_angle(d: &TopologicalData) -> Result<f64, ChargeError> {
    if d.n != 1 {
        return Err(ChargeError::DimensionMismatch { expected: 1, got: d.n });
    }
    Ok(Complex64::new(d.a[0], d.a[1]).arg())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Dim2Verdict {
    NonVanishing,
    VanishesAt(f64),
}

/// Whether `P(t) = A₀t² + 2iA₁t − A₂` has a zero on `[1, ∞)`.
pub fn dim2_nonvanishing_check(d: &TopologicalData) -> Result<Dim2Verdict, ChargeError> {
    if d.n != 2 {
        return Err(ChargeError::DimensionMismatch { expected: 2, got: d.n });
    }
    let (a0, a1, a2) = (d.a[0], d.a[1], d.a[2]);
    // Im P = 2·A₁·t only vanishes on [1, ∞) when A₁ = 0.
    if a1.abs() > 1e-14 * (a0.abs() + a2.abs()) {
        return Ok(Dim2Verdict::NonVanishing);
    }
    if a2 > 0.0 {
        let t = sqrt(a2 / a0);
        if t >= 1.0 {
            return Ok(Dim2Verdict::VanishesAt(t));
        }
    }
    Ok(Dim2Verdict::NonVanishing)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChernVerdict {
    /// `(∫ω³)(∫ch₃) = A₀·A₃/6`.
    pub lhs: f64,
    /// `3(∫ch₂∧ω)(∫ch₁∧ω²) = 3·(A₂/2)·A₁`.
    pub rhs: f64,
    /// Strict `lhs < rhs`.
    pub holds: bool,
    /// `(∫ω³)(∫c₁³) = A₀·A₃`.
    pub crossing_lhs: f64,
    /// `9(∫c₁²∧ω)(∫c₁∧ω²) = 9·A₂·A₁`.
    pub crossing_rhs: f64,
    /// Both sides of the degenerate-crossing identity agree (relative 1e-12).
    pub crossing_identity_holds: bool,
    /// `T² = ∫c₁³ / (3∫c₁∧ω²)` when `A₁ ≠ 0`.
    pub crossing_time_squared: Option<f64>,
    /// `T` when `T² > 1` and the crossing identity holds, i.e. `γ(T) = 0` with `T > 1`.
    pub crossing_time: Option<f64>,
}

/// The dimension-3 Chern number inequality together with the identities used
/// to rule out a zero of `γ`.
pub fn chern_inequality_dim3(d: &TopologicalData) -> Result<ChernVerdict, ChargeError> {
    if d.n != 3 {
        return Err(ChargeError::DimensionMismatch { expected: 3, got: d.n });
    }
    let (a0, a1, a2, a3) = (d.a[0], d.a[1], d.a[2], d.a[3]);
    let lhs = a0 * (a3 / 6.0);
    let rhs = 3.0 * (a2 / 2.0) * a1;
    let crossing_lhs = a0 * a3;
    let crossing_rhs = 9.0 * a2 * a1;
    let crossing_identity_holds =
        (crossing_lhs - crossing_rhs).abs() <= 1e-12 * crossing_lhs.abs().max(crossing_rhs.abs());
    let crossing_time_squared = (a1 != 0.0).then(|| a3 / (3.0 * a1));
    let crossing_time = crossing_time_squared
        .filter(|&t2| t2 > 1.0 && crossing_identity_holds)
        .map(sqrt);
    Ok(ChernVerdict {
        lhs,
        rhs,
        holds: lhs < rhs,
        crossing_lhs,
        crossing_rhs,
        crossing_identity_holds,
        crossing_time_squared,
        crossing_time,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubvarietyVerdict {
    pub label: String,
    pub z_v: Complex64,
    pub z_x: Complex64,
    /// `Im(Z_V · conj(Z_X))`, same sign as `Im(Z_V / Z_X)`.
    pub im_product: f64,
    /// `im_product > 0`.
    pub unobstructed: bool,
}

pub fn subvariety_obstruction(d: &TopologicalData, v: &SubvarietyData) -> Result<SubvarietyVerdict, ChargeError> {
    d.validate()?;
    v.validate()?;
    if v.dim >= d.n {
        return Err(ChargeError::InvalidData("subvariety dimension must be < n"));
    }
    let z_x = d.central_charge();
    if z_x.norm() <= 1e-14 * ch_norm(&d.a) {
        return Err(ChargeError::ZeroAmbientCharge);
    }
    let z_v = subvariety_charge(v);
    let im_product = (z_v * z_x.conj()).im;
    Ok(SubvarietyVerdict {
        label: v.label.clone(),
        z_v,
        z_x,
        im_product,
        unobstructed: im_product > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlopeVerdict {
    pub label: String,
    /// `p·∫_V c₁ᵖ⁻¹∧ω / ∫_V c₁ᵖ`.
    pub subvariety_slope: f64,
    /// `n·∫_X c₁ⁿ⁻¹∧ω / ∫_X c₁ⁿ`.
    pub ambient_slope: f64,
    /// Strict `subvariety_slope < ambient_slope`.
    pub holds: bool,
}

/// J-equation slope inequality of a subvariety against the ambient space.
pub fn ls_slope_check(d: &TopologicalData, v: &SubvarietyData) -> Result<SlopeVerdict, ChargeError> {
    d.validate()?;
    v.validate()?;
    let p = v.dim;
    let n = d.n;
    if !(v.b[p] > 0.0) {
        return Err(ChargeError::NonPositiveVolume("∫_V c₁ᵖ ≤ 0"));
    }
    if !(d.a[n] > 0.0) {
        return Err(ChargeError::NonPositiveVolume("∫_X c₁ⁿ ≤ 0"));
    }
    let subvariety_slope = p as f64 * v.b[p - 1] / v.b[p];
    let ambient_slope = n as f64 * d.a[n - 1] / d.a[n];
    Ok(SlopeVerdict {
        label: v.label.clone(),
        subvariety_slope,
        ambient_slope,
        holds: subvariety_slope < ambient_slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BpsNorm {
    pub z_abs: f64,
    /// Euclidean norm of the pairings `∫ωⁿ⁻ᵏ∧chₖ = Aₖ/k!` (a proxy for `‖ch(L)‖`).
    pub ch_norm: f64,
    pub ratio: f64,
    pub positive: bool,
}

fn ch_norm(a: &[f64]) -> f64 {
    sqrt(a.iter().enumerate().map(|(k, x)| { let v = x / factorial(k); v * v }).sum())
}

pub fn bps_norm_bound(d: &TopologicalData) -> BpsNorm {
    let z_abs = d.central_charge().norm();
    let ch_norm = ch_norm(&d.a);
    let ratio = z_abs / ch_norm;
    BpsNorm { z_abs, ch_norm, ratio, positive: ratio > 0.0 }
}

/// Intersection numbers of a form with constant relative eigenvalues `λ`
/// over total volume `volume`: `Aₖ = volume · σₖ(λ) / C(n,k)`.
pub fn constant_model(volume: f64, lambdas: &[f64]) -> Result<TopologicalData, ChargeError> {
    let s = crate::spectral::Spectrum::new(lambdas.to_vec())
        .map_err(|_| ChargeError::InvalidData("model spectrum must have 1..=8 finite values"))?;
    let sigma = crate::spectral::elementary_symmetric(&s);
    let n = s.dim();
    let a = (0..=n).map(|k| volume * sigma.sigma(k) / binomial(n, k)).collect();
    TopologicalData::new(n, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_4;

    fn data(a: &[f64]) -> TopologicalData {
        TopologicalData::new(a.len() - 1, a.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn rejects_invalid_data() {
        assert!(TopologicalData::new(2, alloc::vec![1.0, 0.0]).is_err());
        assert!(TopologicalData::new(1, alloc::vec![0.0, 1.0]).is_err());
        assert!(TopologicalData::new(0, alloc::vec![1.0]).is_err());
        let v = SubvarietyData { label: "V".into(), dim: 2, b: alloc::vec![1.0, 0.0, 0.0] };
        assert!(TopologicalData::with_subvarieties(2, alloc::vec![1.0, 0.0, 0.0], alloc::vec![v]).is_err());
        assert!(SubvarietyData::new("V", 1, alloc::vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn fano_model_path() {
        let d = data(&[6.0, 6.0, 6.0, 6.0]);
        let path = charge_path(&d).unwrap();
        // 6(t+i)³ = 6t³ + 18i t² − 18t − 6i
        let want = [
            Complex64::new(0.0, -6.0),
            Complex64::new(-18.0, 0.0),
            Complex64::new(0.0, 18.0),
            Complex64::new(6.0, 0.0),
        ];
        for (c, w) in path.coeffs.iter().zip(want) {
            assert!((c - w).norm() < 1e-12);
        }
        close(path.lifted_angle, 3.0 * FRAC_PI_4, 1e-9);
        assert!((path.central_charge - Complex64::new(2.0, 2.0)).norm() < 1e-12);
        close(path.theta_bridgeland(), FRAC_PI_4, 1e-9);
    }

    #[test]
    fn curve_and_surface_paths() {
        let path = charge_path(&data(&[1.0, 0.0])).unwrap();
        assert_eq!(path.lifted_angle, 0.0);
        let path = charge_path(&data(&[2.0, 1.0, 0.0])).unwrap();
        close(path.lifted_angle, FRAC_PI_4, 1e-12);
        assert!((path.samples.last().unwrap().value - Complex64::new(2.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn samples_run_from_t_max_to_one() {
        let d = data(&[6.0, 6.0, 6.0, 6.0]);
        let path = charge_path(&d).unwrap();
        assert_eq!(path.samples.first().unwrap().t, d.default_t_max());
        assert_eq!(path.samples.last().unwrap().t, 1.0);
        assert!(path.samples.windows(2).all(|w| w[1].t < w[0].t));
        assert!(path.samples.windows(2).all(|w| (w[1].arg - w[0].arg).abs() < FRAC_PI_2));
    }

    #[test]
    fn branch_at_large_t_max_is_near_zero() {
        let d = data(&[6.0, 6.0, 6.0, 6.0]);
        let path = build_charge_path(&d, 1e7, DEFAULT_ZERO_TOL).unwrap();
        assert!(path.samples[0].arg.abs() < 1e-6);
        close(path.lifted_angle, 3.0 * FRAC_PI_4, 1e-9);
    }

    #[test]
    fn t_max_precondition() {
        let d = data(&[1.0, 3.0]);
        assert!(matches!(build_charge_path(&d, 5.0, 1e-10), Err(ChargeError::TMaxTooSmall { .. })));
        assert!(matches!(build_charge_path(&d, 100.0, 0.0), Err(ChargeError::InvalidData(_))));
    }

    #[test]
    fn origin_crossing_is_reported() {
        // P(t) = (t² − 4)(6t + 3i)
        let d = data(&[6.0, 1.0, 8.0, 12.0]);
        match charge_path(&d) {
            Err(ChargeError::OriginCrossing { t }) => close(t, 2.0, 1e-4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dim1_angles() {
        assert_eq!(dim1_angle(&data(&[1.0, 0.0])).unwrap(), 0.0);
        close(dim1_angle(&data(&[1.0, 1.0])).unwrap(), FRAC_PI_4, 1e-15);
        close(dim1_angle(&data(&[2.0, -2.0])).unwrap(), -FRAC_PI_4, 1e-15);
        assert!(matches!(dim1_angle(&data(&[1.0, 0.0, 0.0])), Err(ChargeError::DimensionMismatch { .. })));
    }

    #[test]
    fn dim2_checks() {
        assert_eq!(dim2_nonvanishing_check(&data(&[2.0, 1.0, 0.0])).unwrap(), Dim2Verdict::NonVanishing);
        assert_eq!(dim2_nonvanishing_check(&data(&[2.0, 0.0, -2.0])).unwrap(), Dim2Verdict::NonVanishing);
        assert_eq!(dim2_nonvanishing_check(&data(&[2.0, 0.0, 2.0])).unwrap(), Dim2Verdict::VanishesAt(1.0));
        // zero at t = ½ < 1 is outside the path
        assert_eq!(dim2_nonvanishing_check(&data(&[4.0, 0.0, 1.0])).unwrap(), Dim2Verdict::NonVanishing);
        assert!(dim2_nonvanishing_check(&data(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn chern_examples() {
        let v = chern_inequality_dim3(&data(&[6.0, 6.0, 6.0, 6.0])).unwrap();
        assert_eq!((v.lhs, v.rhs, v.holds), (6.0, 54.0, true));
        let v = chern_inequality_dim3(&data(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!((v.lhs, v.rhs, v.holds), (0.0, 0.0, false));
        assert_eq!(v.crossing_time_squared, None);
        let v = chern_inequality_dim3(&data(&[6.0, 2.0, 6.0, 36.0])).unwrap();
        assert_eq!((v.lhs, v.rhs, v.holds), (36.0, 18.0, false));
        assert!(chern_inequality_dim3(&data(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn chern_crossing_identity() {
        let v = chern_inequality_dim3(&data(&[6.0, 1.0, 8.0, 12.0])).unwrap();
        assert!(v.crossing_identity_holds);
        assert_eq!(v.crossing_time_squared, Some(4.0));
        assert_eq!(v.crossing_time, Some(2.0));
        let v = chern_inequality_dim3(&data(&[6.0, 6.0, 6.0, 6.0])).unwrap();
        assert!(!v.crossing_identity_holds);
        assert_eq!(v.crossing_time, None);
    }

    #[test]
    fn subvariety_examples() {
        let d = data(&[6.0, 6.0, 6.0, 6.0]);
        let v = SubvarietyData::new("H", 2, alloc::vec![3.0, 3.0, 3.0]).unwrap();
        let r = subvariety_obstruction(&d, &v).unwrap();
        assert!((r.z_v - Complex64::new(0.0, 3.0)).norm() < 1e-14);
        close(r.im_product, 6.0, 1e-13);
        assert!(r.unobstructed);

        let d = data(&[2.0, 0.0, -2.0]);
        let v = SubvarietyData::new("C", 1, alloc::vec![1.0, 0.0]).unwrap();
        let r = subvariety_obstruction(&d, &v).unwrap();
        assert!((r.z_v - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        close(r.im_product, d.central_charge().re, 1e-15);
        assert!(r.unobstructed);

        // Z_X = 1 and Z_V = ½ are both real
        let d = data(&[6.0, 0.0, 2.0, -6.0]);
        assert!((d.central_charge() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let v = SubvarietyData::new("S", 2, alloc::vec![1.0, 0.0, 0.0]).unwrap();
        let r = subvariety_obstruction(&d, &v).unwrap();
        assert_eq!(r.im_product, 0.0);
        assert!(!r.unobstructed);
    }

    #[test]
    fn zero_ambient_charge() {
        // γ(1) = (−A₀/2 + A₂/2) + i·A₁ = 0
        let d = data(&[2.0, 0.0, 2.0]);
        let v = SubvarietyData::new("C", 1, alloc::vec![1.0, 0.0]).unwrap();
        assert_eq!(subvariety_obstruction(&d, &v), Err(ChargeError::ZeroAmbientCharge));
    }

    #[test]
    fn slope_examples() {
        let d = data(&[6.0, 6.0, 6.0, 6.0]);
        let v = SubvarietyData::new("H", 2, alloc::vec![3.0, 3.0, 3.0]).unwrap();
        let r = ls_slope_check(&d, &v).unwrap();
        assert_eq!((r.subvariety_slope, r.ambient_slope, r.holds), (2.0, 3.0, true));

        let d = data(&[1.0, 1.0, 1.0]);
        let v = SubvarietyData::new("C", 1, alloc::vec![1.0, 1.0]).unwrap();
        let r = ls_slope_check(&d, &v).unwrap();
        assert_eq!((r.subvariety_slope, r.ambient_slope, r.holds), (1.0, 2.0, true));

        let v = SubvarietyData::new("C", 1, alloc::vec![2.0, 1.0]).unwrap();
        let r = ls_slope_check(&d, &v).unwrap();
        assert_eq!((r.subvariety_slope, r.ambient_slope, r.holds), (2.0, 2.0, false));

        let v = SubvarietyData::new("C", 1, alloc::vec![1.0, 0.0]).unwrap();
        assert!(matches!(ls_slope_check(&d, &v), Err(ChargeError::NonPositiveVolume(_))));
    }

    #[test]
    fn bps_examples() {
        let b = bps_norm_bound(&data(&[6.0, 6.0, 6.0, 6.0]));
        close(b.z_abs, 2.0 * core::f64::consts::SQRT_2, 1e-14);
        assert!(b.positive);
        let b = bps_norm_bound(&data(&[1.0, 0.0]));
        close(b.z_abs, 1.0, 1e-15);
        let b = bps_norm_bound(&data(&[1.0, 0.0, 0.0]));
        close(b.z_abs, 0.5, 1e-15);
        assert!(b.positive);
    }

    #[test]
    fn constant_model_matches_product() {
        let d = constant_model(2.0, &[1.0, 2.0, 3.0]).unwrap();
        for t in [1.0, 1.5, 7.0] {
            let want = Complex64::new(t, 1.0) * Complex64::new(t, 2.0) * Complex64::new(t, 3.0) * 2.0;
            assert!((d.path_value(t) - want).norm() < 1e-12 * want.norm());
        }
    }
}
