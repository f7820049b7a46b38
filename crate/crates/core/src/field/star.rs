//! Almost ⋆-scale invariant fields: covariances in the layer variable u and
//! layered spectral synthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{CovarianceOracle, FieldSample, GridSpec, SeedCovariance, SynthesisMethod, TruncationVariance};
use crate::error::{invalid, Result};
use crate::fft::{signed_index, GridFft};
use crate::quadrature::adaptive_gk;

/// Minimum number of layers per unit of u.
pub const MIN_LAYERS_PER_UNIT: usize = 8;
pub const DEFAULT_LAYERS_PER_UNIT: usize = 16;
/// Absolute tolerance of the u-quadratures.
pub const U_QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayeredNoiseParams {
    pub alpha: f64,
    pub delta: f64,
    pub layers_per_unit: usize,
}

/// One u-layer: midpoint and weight (1 − e^{−αu})Δu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub u: f64,
    pub weight: f64,
}

impl LayeredNoiseParams {
    pub fn new(alpha: f64, delta: f64, layers_per_unit: usize) -> Result<Self> {
        let p = Self {
            alpha,
            delta,
            layers_per_unit,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive and finite, got {}", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1], got {}", self.delta)));
        }
        if self.layers_per_unit < MIN_LAYERS_PER_UNIT {
            return Err(invalid(
                "layers-per-unit",
                format!("must be at least {MIN_LAYERS_PER_UNIT}, got {}", self.layers_per_unit),
            ));
        }
        Ok(())
    }

    /// Upper end log(1/δ) of the u-range.
    pub fn u_max(&self) -> f64 {
        (1.0 / self.delta).ln()
    }

    pub fn layer_count(&self) -> usize {
        (self.layers_per_unit as f64 * self.u_max()).ceil() as usize
    }

    pub fn layers(&self) -> Vec<Layer> {
        let n = self.layer_count();
        if n == 0 {
            return Vec::new();
        }
        let du = self.u_max() / n as f64;
        (0..n)
            .map(|l| {
                let u = (l as f64 + 0.5) * du;
                Layer {
                    u,
                    weight: -(-self.alpha * u).exp_m1() * du,
                }
            })
            .collect()
    }

    /// Exact variance of the layered field: Σ_l (1 − e^{−αu_l})Δu.
    pub fn layered_variance(&self) -> f64 {
        self.layers().iter().map(|l| l.weight).sum()
    }
}

/// ∫_0^{log 1/δ} k(e^u r)(1 − e^{−αu}) du at r = |x − y|.
pub fn cov_y_delta_distance(r: f64, params: &LayeredNoiseParams, seed: &SeedCovariance) -> f64 {
    let r = r.abs();
    let u_max = params.u_max();
    if r == 0.0 {
        return u_max + (-params.alpha * u_max).exp_m1() / params.alpha;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let upper = u_max.min((1.0 / r).ln());
    weighted_u_integral(r, 0.0, upper, |u| -(-params.alpha * u).exp_m1(), seed)
}

pub fn cov_y_delta(x: f64, y: f64, params: &LayeredNoiseParams, seed: &SeedCovariance) -> f64 {
    cov_y_delta_distance((x - y).abs(), params, seed)
}

/// Σ_l k(e^{u_l} r)(1 − e^{−αu_l})Δu: covariance of the layered synthesis.
pub fn layered_cov_distance(r: f64, layers: &[Layer], seed: &SeedCovariance) -> f64 {
    layers
        .iter()
        .rev()
        .map(|l| l.weight * seed.radial_profile(l.u.exp() * r))
        .sum()
}

/// Covariance of the small-scale tail Ŷ_δ = Y − Y_δ at distance r > 0.
pub fn cov_tail_distance(r: f64, delta: f64, alpha: f64, seed: &SeedCovariance) -> f64 {
    let r = r.abs();
    if r >= delta {
        return 0.0;
    }
    let lo = (1.0 / delta).ln();
    let hi = (1.0 / r).ln();
    weighted_u_integral(r, lo, hi, |u| -(-alpha * u).exp_m1(), seed)
}

/// Covariance of the rescaled tail x ↦ Ŷ_δ(δx): ∫_0^{log 1/r} k(e^u r)(1 − δ^α e^{−αu}) du.
pub fn cov_tail_rescaled_distance(r: f64, delta: f64, alpha: f64, seed: &SeedCovariance) -> f64 {
    let r = r.abs();
    if r >= 1.0 {
        return 0.0;
    }
    let scale = delta.powf(alpha);
    weighted_u_integral(r, 0.0, (1.0 / r).ln(), |u| 1.0 - scale * (-alpha * u).exp(), seed)
}

fn weighted_u_integral<W: Fn(f64) -> f64>(r: f64, lo: f64, hi: f64, w: W, seed: &SeedCovariance) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    // unit-length panels keep the adaptive rule well conditioned on long ranges
    let panels = (hi - lo).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    (0..panels)
        .map(|p| {
            let a = lo + p as f64 * width;
            adaptive_gk(|u| seed.radial_profile(u.exp() * r) * w(u), a, a + width, U_QUADRATURE_TOL / panels as f64).0
        })
        .sum()
}

/// Margins of the tail covariance against its bounds at one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMargins {
    pub separation: f64,
    pub tail: f64,
    /// δ/|x−y| − tail
    pub ratio_upper_margin: f64,
    /// log⁺(δ/|x−y|) − tail
    pub log_upper_margin: f64,
    /// log⁺(δ/|x−y|) − tail, to be bounded above by a single constant C
    pub log_lower_gap: f64,
    /// |tail| when |x − y| ≥ δ, else 0
    pub outside_value: f64,
}

pub fn cov_tail_bounds_check(x: f64, y: f64, delta: f64, alpha: f64, seed: &SeedCovariance) -> Result<TailMargins> {
    let r = (x - y).abs();
    if r == 0.0 {
        return Err(invalid("x, y", "tail bounds need distinct points"));
    }
    let tail = cov_tail_distance(r, delta, alpha, seed);
    let log_bound = (delta / r).ln().max(0.0);
    Ok(TailMargins {
        separation: r,
        tail,
        ratio_upper_margin: delta / r - tail,
        log_upper_margin: log_bound - tail,
        log_lower_gap: log_bound - tail,
        outside_value: if r >= delta { tail.abs() } else { 0.0 },
    })
}

/// Upper bound for the lower-bound constant: ∫_0^1 (1 − k(v))/v dv + δ^α/α.
pub fn tail_gap_bound(delta: f64, alpha: f64, seed: &SeedCovariance) -> f64 {
    let (a, _) = adaptive_gk(|v| (1.0 - seed.radial_profile(v)) / v, 0.0, 1.0, 1e-12);
    a + delta.powf(alpha) / alpha
}

/// Summed spectral density of the layers: S(ξ) = Σ_l w_l e^{−du_l} k̂(e^{−u_l}|ξ|).
pub fn layered_spectral_density(rho: f64, layers: &[Layer], seed: &SeedCovariance) -> f64 {
    let d = seed.dim() as f64;
    layers
        .iter()
        .rev()
        .map(|l| l.weight * (-d * l.u).exp() * seed.fourier_profile((-l.u).exp() * rho))
        .sum()
}

/// Spectral synthesizer for the layered field on a padded periodic grid.
///
/// The layers are independent, so their sum is a stationary Gaussian field
/// whose spectral density is the sum of the layer densities; one FFT
/// synthesizes it.
#[derive(Debug, Clone)]
pub struct StarSynthesizer {
    grid: GridSpec,
    params: LayeredNoiseParams,
    amplitude: Vec<f64>,
    fft: GridFft,
    variance: f64,
    oracle: CovarianceOracle,
}

impl StarSynthesizer {
    pub fn new(grid: GridSpec, params: LayeredNoiseParams, seed: Arc<SeedCovariance>) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        if grid.dim != seed.dim() {
            return Err(invalid("dimension", "grid and seed covariance dimensions differ"));
        }
        if grid.padding() < 1.0 - 1e-12 {
            return Err(invalid(
                "extent",
                format!("needs at least one unit of padding beyond the region, got {}", grid.padding()),
            ));
        }
        let layers = params.layers();
        let n = grid.points_per_axis;
        let freq = 2.0 * PI / grid.extent;
        let vol = grid.extent.powi(grid.dim as i32);
        let amplitude: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let rho = match grid.dim {
                    1 => freq * signed_index(idx, n) as f64,
                    _ => {
                        let k1 = signed_index(idx / n, n) as f64;
                        let k2 = signed_index(idx % n, n) as f64;
                        freq * k1.hypot(k2)
                    }
                };
                (layered_spectral_density(rho.abs(), &layers, &seed) / vol).max(0.0).sqrt()
            })
            .collect();
        let variance = params.layered_variance();
        Ok(Self {
            grid,
            params,
            amplitude,
            fft: GridFft::new(n, grid.dim),
            variance,
            oracle: CovarianceOracle::StarLayered {
                params,
                seed,
                layers: Arc::new(layers),
            },
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &LayeredNoiseParams {
        &self.params
    }

    pub fn oracle(&self) -> &CovarianceOracle {
        &self.oracle
    }

    /// Exact covariance of the synthesized grid values at grid offset `r`
    /// (band-limited, periodized), for diagnostics.
    pub fn grid_covariance(&self, offset: [f64; 2]) -> f64 {
        let n = self.grid.points_per_axis;
        let freq = 2.0 * PI / self.grid.extent;
        (0..self.grid.len())
            .map(|idx| {
                let (k1, k2) = match self.grid.dim {
                    1 => (signed_index(idx, n) as f64, 0.0),
                    _ => (signed_index(idx / n, n) as f64, signed_index(idx % n, n) as f64),
                };
                let a = self.amplitude[idx];
                a * a * (freq * (k1 * offset[0] + k2 * offset[1])).cos()
            })
            .sum()
    }

    /// Two independent realizations: real and imaginary parts of
    /// Σ_ξ a(ξ)(Z₁ + iZ₂) e^{iξ·x}.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (FieldSample, FieldSample) {
        let mut g: Vec<Complex64> = self
            .amplitude
            .iter()
            .map(|&a| {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                Complex64::new(a * z1, a * z2)
            })
            .collect();
        self.fft.inverse(&mut g);
        let x1 = g.iter().map(|z| z.re).collect();
        let x2 = g.iter().map(|z| z.im).collect();
        (self.wrap(x1), self.wrap(x2))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        self.sample_pair(rng).0
    }

    fn wrap(&self, values: Vec<f64>) -> FieldSample {
        FieldSample::from_parts(
            self.grid,
            values,
            SynthesisMethod::LayeredStar,
            TruncationVariance::Constant(self.variance),
            self.oracle.clone(),
        )
    }
}

pub fn sample_star_field<R: Rng + ?Sized>(
    grid: GridSpec,
    params: LayeredNoiseParams,
    seed: Arc<SeedCovariance>,
    rng: &mut R,
) -> Result<FieldSample> {
    Ok(StarSynthesizer::new(grid, params, seed)?.sample(rng))
}
