//! Continuous argument tracking of a complex-valued curve `t ↦ f(t)`.
//!
//! Steps are accepted only when the principal increment `arg(f(t')/f(t))`
//! stays below a bound and agrees with the sum of the two half-step
//! increments; otherwise the step is halved. The tracked argument is the
//! starting branch plus the sum of accepted increments.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TrackError {
    #[error("curve passes through the origin near t = {t}")]
    Zero { t: f64 },
    #[error("step size underflow near t = {t}")]
    StepUnderflow { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct TrackOptions {
    /// Accepted steps change the argument by strictly less than this.
    pub max_arg_step: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// `|f| ≤ zero_threshold` counts as passing through the origin.
    pub zero_threshold: f64,
}

impl TrackOptions {
    pub fn for_interval(start: f64, end: f64, zero_threshold: f64) -> Self {
        let len = (end - start).abs();
        Self {
            max_arg_step: FRAC_PI_4,
            initial_step: len / 32.0,
            max_step: len / 32.0,
            min_step: 1e-12,
            zero_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackedSample {
    pub t: f64,
    pub value: Complex64,
    /// Continuous argument at `t`.
    pub arg: f64,
}

#[inline]
fn increment(from: Complex64, to: Complex64) -> f64 {
    (to * from.conj()).arg()
}

/// Tracks `arg f` from `start` to `end` (either direction), beginning on the
/// branch `start_arg`, which must agree with `arg f(start)` modulo `2π`.
///
/// The returned samples include both endpoints.
pub fn track_argument<F>(
    f: F,
    start: f64,
    end: f64,
    start_arg: f64,
    opts: &TrackOptions,
) -> Result<Vec<TrackedSample>, TrackError>
where
    F: Fn(f64) -> Complex64,
{
    let dir = if end >= start { 1.0 } else { -1.0 };
    let mut t = start;
    let mut value = f(t);
    if value.norm() <= opts.zero_threshold {
        return Err(TrackError::Zero { t });
    }
    let mut arg = start_arg;
    let mut samples = alloc::vec![TrackedSample { t, value, arg }];
    let mut h = opts.initial_step.min(opts.max_step);

    while (end - t) * dir > 0.0 {
        let step = h.min((end - t).abs());
        let next_t = if step == (end - t).abs() { end } else { t + dir * step };
        let mid_t = 0.5 * (t + next_t);
        let next = f(next_t);
        let mid = f(mid_t);
        if next.norm() <= opts.zero_threshold {
            return Err(TrackError::Zero { t: next_t });
        }
        if mid.norm() <= opts.zero_threshold {
            return Err(TrackError::Zero { t: mid_t });
        }
        let whole = increment(value, next);
        let first = increment(value, mid);
        let second = increment(mid, next);
        let consistent = (first + second - whole).abs() < 1e-6;
        if whole.abs() < opts.max_arg_step
            && first.abs() < opts.max_arg_step
            && second.abs() < opts.max_arg_step
            && consistent
        {
            t = next_t;
            value = next;
            arg += whole;
            samples.push(TrackedSample { t, value, arg });
            h = (2.0 * step).min(opts.max_step);
        } else {
            h = 0.5 * step;
            if h < opts.min_step {
                return Err(TrackError::StepUnderflow { t });
            }
        }
    }
    Ok(samples)
}
