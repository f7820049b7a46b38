//! Special functions: complex log-gamma, integer-order Bessel J, cosine integral.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{ChaosError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Distance below which an argument counts as a gamma pole.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// Returns an error if `z` lies within [`POLE_TOLERANCE`] of a non-positive integer.
pub fn check_gamma_pole(z: Complex64) -> Result<()> {
    let n = z.re.round();
    if n <= 0.0 && (z - Complex64::new(n, 0.0)).norm() < POLE_TOLERANCE {
        return Err(ChaosError::Pole { re: z.re, im: z.im });
    }
    Ok(())
}

/// Principal-branch-compatible log Γ(z) for complex z away from poles.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    check_gamma_pole(z)?;
    Ok(ln_gamma_unchecked(z))
}

fn ln_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Γ(z)Γ(1-z) = π / sin(πz)
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_unchecked(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Γ(z) for complex z.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    Ok(ln_gamma(z)?.exp())
}

/// Γ(x) for real x away from poles.
pub fn gamma_real(x: f64) -> Result<f64> {
    Ok(gamma(Complex64::new(x, 0.0))?.re)
}

/// Bessel function of the first kind of integer order.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let x_abs = x.abs();
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    if x_abs < 8.0 {
        return sign * x_abs.powi(n as i32) * bessel_j_scaled_series(n, x_abs);
    }
    sign * bessel_j_trapezoid(n, x_abs)
}

/// J_n(x) / x^n, finite at x = 0.
pub fn bessel_j_scaled(n: u32, x: f64) -> f64 {
    let x = x.abs();
    if x < 8.0 {
        bessel_j_scaled_series(n, x)
    } else {
        bessel_j_trapezoid(n, x) / x.powi(n as i32)
    }
}

fn bessel_j_scaled_series(n: u32, x: f64) -> f64 {
    // Σ_k (-1)^k (x/2)^{2k} / (2^n k! (k+n)!)
    let mut term = 1.0 / (2f64.powi(n as i32) * factorial(n));
    let q = 0.25 * x * x;
    let mut sum = term;
    for k in 1..200 {
        term *= -q / (k as f64 * (k + n as usize) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_j_trapezoid(n: u32, x: f64) -> f64 {
    // J_n(x) = (1/π) ∫_0^π cos(nθ - x sin θ) dθ; periodic integrand, trapezoid converges geometrically
    let m = 2 * ((x + n as f64) as usize + 40);
    let h = PI / m as f64;
    let mut s = 0.5 * (1.0 + (n as f64 * PI - 0.0).cos());
    for j in 1..m {
        let th = j as f64 * h;
        s += (n as f64 * th - x * th.sin()).cos();
    }
    s * h / PI
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Cosine integral Ci(x) = γ + ln x + ∫_0^x (cos t − 1)/t dt, for x > 0.
pub fn cos_integral(x: f64) -> f64 {
    assert!(x > 0.0, "cosine integral requires x > 0");
    const EULER: f64 = 0.577_215_664_901_532_9;
    if x <= 2.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        let x2 = x * x;
        for k in 1..60 {
            term *= -x2 / ((2 * k - 1) as f64 * (2 * k) as f64);
            let add = term / (2 * k) as f64;
            sum += add;
            if add.abs() < 1e-17 {
                break;
            }
        }
        return EULER + x.ln() + sum;
    }
    // continued fraction for E1(ix), Lentz's method
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / f64::MIN_POSITIVE, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(x.cos(), -x.sin()) * h;
    -h.re
}
