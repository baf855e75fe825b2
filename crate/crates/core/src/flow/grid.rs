//! Periodic tensor grids on `[0,1)^d` and multi-dimensional FFTs over them.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Blocks smaller than this are transformed on the calling thread.
const PAR_MIN_LEN: usize = 1 << 14;

/// Shape `[N; d]`, row-major with the last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub points_per_axis: usize,
    pub axes: usize,
}

impl GridShape {
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.axes as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_axis as f64
    }

    /// Multi-index of a flat position.
    pub fn index(&self, mut flat: usize) -> Vec<usize> {
        let n = self.points_per_axis;
        let mut idx = vec![0; self.axes];
        for a in (0..self.axes).rev() {
            idx[a] = flat % n;
            flat /= n;
        }
        idx
    }

    /// Coordinates of a flat position in `[0,1)^d`.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.index(flat).into_iter().map(|j| j as f64 * h).collect()
    }

    /// Signed integer frequency of index `j` along an axis.
    pub fn frequency(&self, j: usize) -> i64 {
        let n = self.points_per_axis;
        if 2 * j < n {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// Two-thirds rule: keep modes with `3|f| < N` on every axis.
    pub fn retains(&self, j: usize) -> bool {
        3 * self.frequency(j).unsigned_abs() < self.points_per_axis as u64
    }
}

/// Forward and inverse plans for one grid.
#[derive(Clone)]
pub struct FftPlan {
    shape: GridShape,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan").field("shape", &self.shape).finish()
    }
}

impl FftPlan {
    pub fn new(shape: GridShape) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            shape,
            forward: planner.plan_fft_forward(shape.points_per_axis),
            inverse: planner.plan_fft_inverse(shape.points_per_axis),
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    /// Unnormalised forward transform in place.
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.transform(&self.forward, data, scratch);
    }

    /// Inverse transform in place, scaled so that `inverse ∘ forward = id`.
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.transform(&self.inverse, data, scratch);
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn transform(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let n = self.shape.points_per_axis;
        let total = data.len();
        debug_assert_eq!(total, self.shape.len());
        scratch.resize(total, Complex64::new(0.0, 0.0));
        for axis in 0..self.shape.axes {
            let inner = n.pow((self.shape.axes - 1 - axis) as u32);
            if inner == 1 {
                run_lines(fft, data);
                continue;
            }
            let block = n * inner;
            let work = |(src, tmp): (&mut [Complex64], &mut [Complex64])| {
                for i in 0..n {
                    for j in 0..inner {
                        tmp[j * n + i] = src[i * inner + j];
                    }
                }
                fft.process(tmp);
                for i in 0..n {
                    for j in 0..inner {
                        src[i * inner + j] = tmp[j * n + i];
                    }
                }
            };
            if total >= PAR_MIN_LEN && total > block {
                data.par_chunks_mut(block).zip(scratch.par_chunks_mut(block)).for_each(work);
            } else {
                data.chunks_mut(block).zip(scratch.chunks_mut(block)).for_each(work);
            }
        }
    }
}

fn run_lines(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
    let n = fft.len();
    if data.len() >= PAR_MIN_LEN {
        let chunk = (data.len() / rayon::current_num_threads().max(1)).max(n) / n * n;
        data.par_chunks_mut(chunk).for_each(|c| fft.process(c));
    } else {
        fft.process(data);
    }
}
