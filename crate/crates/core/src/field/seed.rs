//! Seed covariance k: normalized self-convolution of a radial bump.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;
use crate::special::bessel_j_scaled;

/// Exponent m of the bump (1 − 4r²)^m on B(0, 1/2).
pub const DEFAULT_BUMP_ORDER: u32 = 3;

/// Above this frequency the 1-D bump transform uses its exact
/// integration-by-parts expansion instead of Gauss-Legendre.
const BUMP_FT_SWITCH: f64 = 30.0;

#[derive(Debug, Clone)]
pub struct SeedCovariance {
    dim: usize,
    order: u32,
    /// ∫ φ², so that k(0) = 1
    norm: f64,
    /// coefficients of p(x) = (1 − 4x²)^m in increasing degree
    poly: Vec<f64>,
    gl: GaussLegendre,
}

/// Default seed covariance in dimension `d`.
pub fn seed_covariance_default(d: usize) -> Result<SeedCovariance> {
    SeedCovariance::new(d, DEFAULT_BUMP_ORDER)
}

impl SeedCovariance {
    pub fn new(dim: usize, order: u32) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(invalid("dimension", format!("seed covariance supports d ∈ {{1,2}}, got {dim}")));
        }
        if order < 2 {
            return Err(invalid("bump-order", "must be at least 2"));
        }
        let mut poly = vec![1.0];
        for _ in 0..order {
            let mut next = vec![0.0; poly.len() + 2];
            for (i, c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 2] -= 4.0 * c;
            }
            poly = next;
        }
        let m = order as f64;
        let norm = match dim {
            1 => {
                let gl = GaussLegendre::new(2 * order as usize + 2);
                2.0 * gl.integrate(|x| (1.0 - 4.0 * x * x).powi(2 * order as i32), 0.0, 0.5)
            }
            _ => PI / (4.0 * (2.0 * m + 1.0)),
        };
        Ok(Self {
            dim,
            order,
            norm,
            poly,
            gl: GaussLegendre::new(48),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// The bump φ(r) = (1 − 4r²)^m for r < 1/2.
    pub fn bump(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= 0.5 {
            0.0
        } else {
            (1.0 - 4.0 * r * r).powi(self.order as i32)
        }
    }

    /// k(r) = (φ ∗ φ)(r) / ‖φ‖².
    pub fn radial_profile(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= 1.0 {
            return 0.0;
        }
        if r == 0.0 {
            return 1.0;
        }
        let v = match self.dim {
            1 => self.conv_1d(r),
            _ => self.conv_2d(r),
        };
        (v / self.norm).max(0.0)
    }

    fn conv_1d(&self, r: f64) -> f64 {
        // polynomial integrand of degree 4m on the overlap [r − 1/2, 1/2]
        let gl = GaussLegendre::new(2 * self.order as usize + 2);
        gl.integrate(|y| self.bump(y) * self.bump(r - y), r - 0.5, 0.5)
    }

    fn conv_2d(&self, r: f64) -> f64 {
        // polar coordinates centred on the first bump; for each radius ρ the
        // second bump is positive on |θ| < θ_max(ρ)
        let inner = GaussLegendre::new(40);
        let outer = GaussLegendre::new(40);
        let theta_max = |rho: f64| -> f64 {
            if rho == 0.0 {
                return if r < 0.5 { PI } else { 0.0 };
            }
            let c = (r * r + rho * rho - 0.25) / (2.0 * r * rho);
            if c <= -1.0 {
                PI
            } else if c >= 1.0 {
                0.0
            } else {
                c.acos()
            }
        };
        let g = |rho: f64| -> f64 {
            let tm = theta_max(rho);
            if tm == 0.0 {
                return 0.0;
            }
            let ang = inner.integrate(
                |th| {
                    let d2 = r * r + rho * rho - 2.0 * r * rho * th.cos();
                    self.bump(d2.max(0.0).sqrt())
                },
                0.0,
                tm,
            );
            2.0 * rho * self.bump(rho) * ang
        };
        let lo = (r - 0.5).max(0.0);
        if r < 0.5 {
            let b = 0.5 - r;
            outer.integrate(&g, 0.0, b) + outer.integrate(&g, b, 0.5)
        } else {
            outer.integrate(&g, lo, 0.5)
        }
    }

    /// d-dimensional Fourier transform of the bump at |ξ| = rho.
    pub fn bump_transform(&self, rho: f64) -> f64 {
        let rho = rho.abs();
        match self.dim {
            1 => {
                if rho <= BUMP_FT_SWITCH {
                    self.bump_transform_1d_quadrature(rho)
                } else {
                    self.bump_transform_1d_parts(rho)
                }
            }
            _ => {
                let m = self.order;
                let fact: f64 = (1..=m).map(|k| k as f64).product();
                0.5 * PI * 2f64.powi(m as i32) * fact * bessel_j_scaled(m + 1, 0.5 * rho)
            }
        }
    }

    pub(crate) fn bump_transform_1d_quadrature(&self, rho: f64) -> f64 {
        2.0 * self
            .gl
            .integrate_panels(|x| self.bump(x) * (rho * x).cos(), 0.0, 0.5, 1 + (rho / 40.0) as usize)
    }

    /// ∫_{−a}^{a} p(x) e^{iξx} dx = Σ_j (−1)^j [p^{(j)}(x) e^{iξx}]_{−a}^{a} / (iξ)^{j+1}, exact for polynomials.
    pub(crate) fn bump_transform_1d_parts(&self, rho: f64) -> f64 {
        let a = 0.5;
        let mut deriv = self.poly.clone();
        let mut total = Complex64::new(0.0, 0.0);
        let i_xi = Complex64::new(0.0, rho);
        let e_plus = Complex64::from_polar(1.0, rho * a);
        let e_minus = Complex64::from_polar(1.0, -rho * a);
        let mut denom = i_xi;
        let mut sign = 1.0;
        while !deriv.is_empty() {
            let pa = horner(&deriv, a);
            let pm = horner(&deriv, -a);
            total += sign * (pa * e_plus - pm * e_minus) / denom;
            deriv = derivative(&deriv);
            denom *= i_xi;
            sign = -sign;
        }
        total.re
    }

    /// k̂(|ξ|) = φ̂(|ξ|)² / ‖φ‖², with the convention k̂(ξ) = ∫ k(x) e^{−iξ·x} dx.
    pub fn fourier_profile(&self, rho: f64) -> f64 {
        let b = self.bump_transform(rho);
        b * b / self.norm
    }

    /// Numerical check of the decay requirement: returns the largest value of
    /// k̂(ξ)(1+ξ²)^s over a log-spaced grid on [1e−2, 1e4], with s = (d+1)/2 + 1/4.
    pub fn decay_envelope(&self) -> f64 {
        let s = (self.dim as f64 + 1.0) / 2.0 + 0.25;
        (0..=120)
            .map(|i| 10f64.powf(-2.0 + 6.0 * i as f64 / 120.0))
            .map(|xi| self.fourier_profile(xi) * (1.0 + xi * xi).powf(s))
            .fold(0.0, f64::max)
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_gk;
    use crate::special::bessel_j;

    #[test]
    fn profile_normalization_and_support() {
        for d in 1..=2 {
            let k = seed_covariance_default(d).unwrap();
            assert_eq!(k.radial_profile(0.0), 1.0);
            assert!((k.radial_profile(1e-9) - 1.0).abs() < 1e-6);
            assert_eq!(k.radial_profile(1.2), 0.0);
            assert_eq!(k.radial_profile(1.0), 0.0);
            for i in 0..200 {
                assert!(k.radial_profile(i as f64 / 199.0) >= 0.0);
            }
        }
        assert!(seed_covariance_default(3).is_err());
    }

    #[test]
    fn radial_profile_1d_regression_at_half() {
        // independent route: adaptive quadrature of the raw convolution
        let k = seed_covariance_default(1).unwrap();
        let bump = |x: f64| if x.abs() < 0.5 { (1.0 - 4.0 * x * x).powi(3) } else { 0.0 };
        let (norm, _) = adaptive_gk(|x| bump(x) * bump(x), -0.5, 0.5, 1e-14);
        let (conv, _) = adaptive_gk(|y| bump(y) * bump(0.5 - y), 0.0, 0.5, 1e-14);
        let oracle = conv / norm;
        assert!((k.radial_profile(0.5) - oracle).abs() < 1e-12);
        // frozen regression constant
        assert!((k.radial_profile(0.5) - 0.115_014_648_437_5).abs() < 1e-12, "{}", k.radial_profile(0.5));
    }

    #[test]
    fn bump_transform_routes_agree() {
        let k = seed_covariance_default(1).unwrap();
        for &xi in &[12.0, 20.0, 25.0, 30.0, 35.0, 50.0] {
            let a = k.bump_transform_1d_quadrature(xi);
            let b = k.bump_transform_1d_parts(xi);
            assert!((a - b).abs() < 1e-13, "ξ={xi}: {a} vs {b}");
        }
    }

    #[test]
    fn fourier_profile_is_transform_of_radial_profile_1d() {
        let k = seed_covariance_default(1).unwrap();
        for &xi in &[0.0, 0.7, 3.0, 9.5, 27.0] {
            let (direct, _) = adaptive_gk(|r| 2.0 * k.radial_profile(r) * (xi * r).cos(), 0.0, 1.0, 1e-13);
            assert!((direct - k.fourier_profile(xi)).abs() < 1e-10, "ξ={xi}");
        }
    }

    #[test]
    fn fourier_profile_is_transform_of_radial_profile_2d() {
        let k = seed_covariance_default(2).unwrap();
        for &xi in &[0.0, 1.5, 6.0, 14.0] {
            let (direct, _) = adaptive_gk(
                |r| 2.0 * PI * r * k.radial_profile(r) * bessel_j(0, xi * r),
                0.0,
                1.0,
                1e-10,
            );
            assert!((direct - k.fourier_profile(xi)).abs() < 1e-6, "ξ={xi}: {direct} vs {}", k.fourier_profile(xi));
        }
    }

    #[test]
    fn fourier_profile_nonnegative_and_decaying() {
        for d in 1..=2 {
            let k = seed_covariance_default(d).unwrap();
            for i in 0..400 {
                let xi = 10f64.powf(-2.0 + 6.0 * i as f64 / 399.0);
                assert!(k.fourier_profile(xi) >= 0.0);
            }
            assert!(k.decay_envelope().is_finite());
            // envelope at the top decade does not exceed the overall maximum
            let s = (d as f64 + 1.0) / 2.0 + 0.25;
            let top = k.fourier_profile(1e4) * (1.0 + 1e8f64).powf(s);
            assert!(top <= k.decay_envelope());
        }
    }
}
