//! Summation and error-bar utilities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Number of batches used for batch-means error bars.
pub const DEFAULT_BATCHES: usize = 100;

/// Batch-means standard error of the mean. Falls back to the i.i.d. formula
/// when there are too few samples to form batches of size ≥ 2.
pub fn batch_means_se(values: &[f64], batches: usize) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    if n < 2 * batches || batches < 2 {
        return sample_std(values) / (n as f64).sqrt();
    }
    let mut means = Vec::with_capacity(batches);
    for b in 0..batches {
        let lo = b * n / batches;
        let hi = (b + 1) * n / batches;
        means.push(mean(&values[lo..hi]));
    }
    sample_std(&means) / (batches as f64).sqrt()
}

pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (n - 1) as f64).sqrt()
}

/// Monte Carlo estimate of a complex expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub value: Complex64,
    /// sqrt(se_re² + se_im²)
    pub std_error: f64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    pub n_samples: usize,
}

impl MomentResult {
    pub fn from_samples(samples: &[Complex64]) -> Self {
        let re: Vec<f64> = samples.iter().map(|z| z.re).collect();
        let im: Vec<f64> = samples.iter().map(|z| z.im).collect();
        let se_re = batch_means_se(&re, DEFAULT_BATCHES);
        let se_im = batch_means_se(&im, DEFAULT_BATCHES);
        Self {
            value: Complex64::new(mean(&re), mean(&im)),
            std_error: se_re.hypot(se_im),
            std_error_re: se_re,
            std_error_im: se_im,
            n_samples: samples.len(),
        }
    }

    pub fn from_real_samples(samples: &[f64]) -> Self {
        let se = batch_means_se(samples, DEFAULT_BATCHES);
        Self {
            value: Complex64::new(mean(samples), 0.0),
            std_error: se,
            std_error_re: se,
            std_error_im: 0.0,
            n_samples: samples.len(),
        }
    }

    /// Per-component z-scores against `oracle`; a zero error bar with exact
    /// agreement gives 0.
    pub fn z_scores(&self, oracle: Complex64) -> (f64, f64) {
        let z = |d: f64, se: f64| if d == 0.0 { 0.0 } else { d / se };
        (
            z(self.value.re - oracle.re, self.std_error_re),
            z(self.value.im - oracle.im, self.std_error_im),
        )
    }

    /// The component z-score of largest magnitude.
    pub fn z_score(&self, oracle: Complex64) -> f64 {
        let (a, b) = self.z_scores(oracle);
        if a.abs() >= b.abs() {
            a
        } else {
            b
        }
    }

    pub fn within(&self, oracle: Complex64, k: f64) -> bool {
        let (a, b) = self.z_scores(oracle);
        a.abs() <= k && b.abs() <= k
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Least-squares polynomial fit of the given degree; coefficients in increasing order.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Option<Vec<f64>> {
    let m = degree + 1;
    if x.len() < m {
        return None;
    }
    let a = nalgebra::DMatrix::from_fn(x.len(), m, |i, j| x[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-12).ok()?;
    Some(sol.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn batch_means_matches_iid_formula_on_iid_data() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let bm = batch_means_se(&v, 100);
        let iid = sample_std(&v) / (v.len() as f64).sqrt();
        assert!((bm / iid - 1.0).abs() < 0.25, "{bm} vs {iid}");
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn polyfit_recovers_quadratic() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 - 2.0 * t + 0.5 * t * t).collect();
        let c = polyfit(&x, &y, 2).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-10 && (c[1] + 2.0).abs() < 1e-10 && (c[2] - 0.5).abs() < 1e-10);
    }
}
