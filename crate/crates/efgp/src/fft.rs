//! Thin multi-dimensional FFT layer over rustfft: row-major arrays,
//! axis-by-axis 1D transforms.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Smallest integer >= n whose prime factors are all in {2, 3, 5}.
pub fn next_5_smooth(n: usize) -> usize {
    let mut n = n.max(1);
    loop {
        let mut k = n;
        for p in [2usize, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return n;
        }
        n += 1;
    }
}

/// Forward/inverse FFT plans for a fixed row-major shape.
pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        FftNd {
            shape: shape.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    /// In-place forward DFT: `out_k = Σ_j in_j e^{-2πi j·k/n}` per axis.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        for axis in 0..self.shape.len() {
            self.apply_axis(data, axis, true);
        }
    }

    /// In-place inverse DFT with 1/len normalization:
    /// `out_j = (1/n_total) Σ_k in_k e^{+2πi j·k/n}` per axis.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        for axis in 0..self.shape.len() {
            self.apply_axis(data, axis, false);
        }
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Unnormalized positive-sign DFT (`e^{+2πi jk/n}`), used by the NUFFT.
    pub fn backward_unnormalized(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        for axis in 0..self.shape.len() {
            self.apply_axis(data, axis, false);
        }
    }

    fn apply_axis(&self, data: &mut [Complex64], axis: usize, fwd: bool) {
        let ndim = self.shape.len();
        let n = self.shape[axis];
        let plan = if fwd {
            &self.forward[axis]
        } else {
            &self.inverse[axis]
        };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        if axis == ndim - 1 {
            // contiguous rows; rustfft processes the buffer in chunks of n
            plan.process_with_scratch(data, &mut scratch);
            return;
        }
        let stride: usize = self.shape[axis + 1..].iter().product();
        let outer: usize = self.shape[..axis].iter().product();
        let block = n * stride;
        let mut row = vec![Complex64::default(); n];
        for o in 0..outer {
            let base = o * block;
            for s in 0..stride {
                for i in 0..n {
                    row[i] = data[base + s + i * stride];
                }
                plan.process_with_scratch(&mut row, &mut scratch);
                for i in 0..n {
                    data[base + s + i * stride] = row[i];
                }
            }
        }
    }
}
