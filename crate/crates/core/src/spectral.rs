//! In-place multi-dimensional FFT on row-major hypercube data: plans one
//! 1-D transform per direction and sweeps it over every lane of each axis.

use crate::fields::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct FftEngine {
    n: usize,
    dims: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    lane: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FftEngine {
    pub fn new(grid: &Grid) -> FftEngine {
        let n = grid.points_per_dim();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        FftEngine {
            n,
            dims: grid.n_dims(),
            forward,
            inverse,
            lane: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// Unnormalized forward transform over all axes.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        for axis in 0..self.dims {
            self.transform_axis(data, axis, true);
        }
    }

    /// Inverse transform over all axes, normalized so that
    /// `inverse(forward(x)) = x`.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        for axis in 0..self.dims {
            self.transform_axis(data, axis, false);
        }
        let scale = 1.0 / (self.n.pow(self.dims as u32) as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform_axis(&mut self, data: &mut [Complex64], axis: usize, fwd: bool) {
        let n = self.n;
        let stride = n.pow((self.dims - 1 - axis) as u32);
        let fft = if fwd {
            self.forward.clone()
        } else {
            self.inverse.clone()
        };
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                fft.process_with_scratch(chunk, &mut self.scratch);
            }
        } else {
            let block = n * stride;
            for b in 0..data.len() / block {
                for inner in 0..stride {
                    let base = b * block + inner;
                    for j in 0..n {
                        self.lane[j] = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut self.lane, &mut self.scratch);
                    for j in 0..n {
                        data[base + j * stride] = self.lane[j];
                    }
                }
            }
        }
    }
}
