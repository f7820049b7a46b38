//! Thin wrapper over rustfft for 1-D and 2-D row-major grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct GridFft {
    n: usize,
    dim: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft").field("n", &self.n).field("dim", &self.dim).finish()
    }
}

impl GridFft {
    pub fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            dim,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// X_k = Σ_j x_j e^{−2πi k·j/n}, unnormalized.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.fwd);
    }

    /// x_j = Σ_k X_k e^{+2πi k·j/n}, unnormalized.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inv);
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "FFT buffer length mismatch");
        plan.process(data);
        if self.dim == 2 {
            transpose_square(data, self.n);
            plan.process(data);
            transpose_square(data, self.n);
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Signed frequency index for FFT slot `k` of an `n`-point transform.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_dft_2d() {
        let n = 4;
        let fft = GridFft::new(n, 2);
        let data: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, (i * i % 5) as f64)).collect();
        let mut out = data.clone();
        fft.forward(&mut out);
        for k1 in 0..n {
            for k2 in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for j1 in 0..n {
                    for j2 in 0..n {
                        let ph = -2.0 * std::f64::consts::PI * ((k1 * j1 + k2 * j2) as f64) / n as f64;
                        s += data[j1 * n + j2] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((s - out[k1 * n + k2]).norm() < 1e-10);
            }
        }
    }
}
