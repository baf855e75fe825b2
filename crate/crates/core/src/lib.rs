//! Numerical machinery for the deformed Hermitian–Yang–Mills (dHYM) equation.
//!
//! The crate is organised around four engines:
//!
//! - [`spectral`]: exact pointwise algebra of a Hermitian form against a
//!   Kähler form (relative eigenvalues, the angle operator `Θ = Σ arctan λᵢ`,
//!   the radius `r = ∏ √(1+λᵢ²)`, symmetric functions, subsolution margins).
//! - [`charge`]: the charge path `P(t) = ∫(tω + iα)ⁿ` built from intersection
//!   numbers and its tracked argument (the lifted angle). Algebraic
//!   obstructions to solvability live here too.
//! - [`syz`]: the semi-flat special Lagrangian / dHYM phase correspondence
//!   evaluated with closed-form derivatives.
//! - `flow` (requires the `std` feature): the heat flow `u̇ = Θ(α₀ + i∂∂̄u) − θ`
//!   on a flat complex torus using Fourier differentiation.
//!
//! Without the default `std` feature the crate is `no_std` and needs only
//! `alloc`.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod charge;
#[cfg(feature = "std")]
pub mod flow;
mod math;
pub mod spectral;
pub mod syz;
pub mod winding;

pub use num_complex::Complex64;
