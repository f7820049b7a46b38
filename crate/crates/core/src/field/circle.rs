//! The circle log-field: covariance −log(2|sin π(t−s)|) and its Fourier series.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CovarianceOracle, FieldSample, GridSpec, SynthesisMethod, TruncationVariance};
use crate::error::{invalid, ChaosError, Result};
use crate::fft::GridFft;

/// Periodic separation in [0, 1/2], symmetric in its arguments bit for bit.
pub fn circle_offset(t: f64, s: f64) -> f64 {
    let r = (t - s).abs().rem_euclid(1.0);
    r.min(1.0 - r)
}

/// log(1 / (2|sin π(t − s)|)).
pub fn circle_cov(t: f64, s: f64) -> Result<f64> {
    let r = circle_offset(t, s);
    if r == 0.0 {
        return Err(ChaosError::SingularEvaluation(format!(
            "circle covariance at coincident points t = {t}, s = {s}"
        )));
    }
    Ok(-(2.0 * (PI * r).sin()).ln())
}

/// Σ_{k ≤ n} cos(2πk(t − s)) / k.
pub fn circle_truncated_cov(n: usize, t: f64, s: f64) -> f64 {
    truncated_profile(n, circle_offset(t, s))
}

pub(crate) fn truncated_profile(n: usize, r: f64) -> f64 {
    let mut sum = 0.0;
    for k in (1..=n).rev() {
        sum += (2.0 * PI * k as f64 * r).cos() / k as f64;
    }
    sum
}

/// Harmonic number H_n = Σ_{k ≤ n} 1/k.
pub fn circle_truncated_variance(n: usize) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

/// Coefficients A_k, B_k of one realization of the truncated series.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleModeSet {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CircleModeSet {
    pub fn draw<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> Result<Self> {
        check_modes(n_modes)?;
        let mut a = Vec::with_capacity(n_modes);
        let mut b = Vec::with_capacity(n_modes);
        for _ in 0..n_modes {
            a.push(StandardNormal.sample(rng));
            b.push(StandardNormal.sample(rng));
        }
        Ok(Self { a, b })
    }

    pub fn n_modes(&self) -> usize {
        self.a.len()
    }

    /// Direct evaluation Σ k^{−1/2}(A_k cos 2πkt + B_k sin 2πkt).
    pub fn evaluate(&self, t: f64) -> f64 {
        let mut s = 0.0;
        for k in (1..=self.n_modes()).rev() {
            let th = 2.0 * PI * k as f64 * t;
            s += (self.a[k - 1] * th.cos() + self.b[k - 1] * th.sin()) / (k as f64).sqrt();
        }
        s
    }
}

fn check_modes(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n-modes", "must be at least 1"));
    }
    Ok(())
}

/// FFT synthesizer for the truncated circle series on a periodic grid.
#[derive(Debug, Clone)]
pub struct CircleSynthesizer {
    n_modes: usize,
    grid: GridSpec,
    fft: GridFft,
    variance: f64,
    oracle: CovarianceOracle,
}

impl CircleSynthesizer {
    pub fn new(n_modes: usize, grid: GridSpec) -> Result<Self> {
        check_modes(n_modes)?;
        grid.validate()?;
        if grid.dim != 1 || grid.extent != 1.0 || grid.region != 1.0 {
            return Err(invalid("grid", "circle synthesis needs the periodic unit grid"));
        }
        Ok(Self {
            n_modes,
            grid,
            fft: GridFft::new(grid.points_per_axis, 1),
            variance: circle_truncated_variance(n_modes),
            oracle: CovarianceOracle::CircleTruncated { modes: n_modes },
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn oracle(&self) -> &CovarianceOracle {
        &self.oracle
    }

    /// Two independent realizations from one complex FFT.
    ///
    /// With c_k = k^{−1/2}(A_k − iB_k) and d_k likewise, X₁ + iX₂ has
    /// coefficient (c_k + i d_k)/2 at +k and (c̄_k + i d̄_k)/2 at −k; modes
    /// beyond the grid are folded in at k mod N so grid values are exact.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (FieldSample, FieldSample) {
        let n = self.grid.points_per_axis;
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        let i = Complex64::new(0.0, 1.0);
        for k in 1..=self.n_modes {
            let s = 1.0 / (k as f64).sqrt();
            let a1: f64 = StandardNormal.sample(rng);
            let b1: f64 = StandardNormal.sample(rng);
            let a2: f64 = StandardNormal.sample(rng);
            let b2: f64 = StandardNormal.sample(rng);
            let c = Complex64::new(a1, -b1) * s;
            let d = Complex64::new(a2, -b2) * s;
            g[k % n] += 0.5 * (c + i * d);
            g[(n - k % n) % n] += 0.5 * (c.conj() + i * d.conj());
        }
        self.fft.inverse(&mut g);
        let x1: Vec<f64> = g.iter().map(|z| z.re).collect();
        let x2: Vec<f64> = g.iter().map(|z| z.im).collect();
        (self.wrap(x1), self.wrap(x2))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        self.sample_pair(rng).0
    }

    fn wrap(&self, values: Vec<f64>) -> FieldSample {
        FieldSample::from_parts(
            self.grid,
            values,
            SynthesisMethod::CircleSeries,
            TruncationVariance::Constant(self.variance),
            self.oracle.clone(),
        )
    }
}

/// One realization of the truncated circle series on `grid`.
pub fn sample_circle_field<R: Rng + ?Sized>(n_modes: usize, grid: GridSpec, rng: &mut R) -> Result<FieldSample> {
    Ok(CircleSynthesizer::new(n_modes, grid)?.sample(rng))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_stream;

    #[test]
    fn circle_cov_trivial_values() {
        assert!((circle_cov(0.5, 0.0).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert!(circle_cov(1.0 / 6.0, 0.0).unwrap().abs() < 1e-15);
        assert!((circle_cov(0.25, 0.0).unwrap() - (0.5f64.sqrt()).ln()).abs() < 1e-15);
        assert!(circle_cov(0.3, 1.3).is_err());
    }

    #[test]
    fn truncated_variance_values() {
        assert_eq!(circle_truncated_variance(1), 1.0);
        assert!((circle_truncated_variance(4) - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_cov_converges_with_abel_bound() {
        for &n in &[512usize, 1024, 2048] {
            for i in 0..40 {
                let r = 0.1 + 0.4 * i as f64 / 39.0;
                let d = (circle_truncated_cov(n, r, 0.0) - circle_cov(r, 0.0).unwrap()).abs();
                assert!(d <= 2.0 / n as f64, "n={n} r={r} d={d}");
            }
        }
    }

    #[test]
    fn fft_synthesis_matches_direct_series() {
        // grids both finer and coarser than the mode count
        for &(modes, points) in &[(5usize, 16usize), (40, 16), (64, 128)] {
            let grid = GridSpec::circle(points).unwrap();
            let synth = CircleSynthesizer::new(modes, grid).unwrap();
            let mut r1 = chain_stream(11, 0);
            let (x1, x2) = synth.sample_pair(&mut r1);
            let mut r2 = chain_stream(11, 0);
            let mut a = Vec::new();
            let mut b = Vec::new();
            let mut a2 = Vec::new();
            let mut b2 = Vec::new();
            for _ in 0..modes {
                a.push(StandardNormal.sample(&mut r2));
                b.push(StandardNormal.sample(&mut r2));
                a2.push(StandardNormal.sample(&mut r2));
                b2.push(StandardNormal.sample(&mut r2));
            }
            let m1 = CircleModeSet { a, b };
            let m2 = CircleModeSet { a: a2, b: b2 };
            for j in 0..points {
                let t = j as f64 / points as f64;
                assert!((x1.values()[j] - m1.evaluate(t)).abs() < 1e-10);
                assert!((x2.values()[j] - m2.evaluate(t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_zero_modes() {
        let grid = GridSpec::circle(16).unwrap();
        assert!(CircleSynthesizer::new(0, grid).is_err());
        assert!(CircleModeSet::draw(0, &mut chain_stream(0, 0)).is_err());
    }
}
