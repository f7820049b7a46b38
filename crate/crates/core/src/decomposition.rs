//! Fourier symbols of ⋆-scale kernels, smooth partitions of unity, the
//! extension remainder R, and positivity scans of C_X − C_{Y^(α)} + R.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, ChaosError, Result};
use crate::field::{circle_offset, GridSpec, SeedCovariance};
use crate::moments::cell_pair_toeplitz;
use crate::operator::OperatorMatrix;
use crate::quadrature::{adaptive_gk, adaptive_gk_breaks, GaussLegendre};
use crate::special::cos_integral;

/// Absolute tolerance of the symbol and kernel quadratures.
pub const SYMBOL_TOL: f64 = 1e-13;
/// Breakpoint spacing for oscillatory k̂ integrals.
const PANEL: f64 = 2.0;

/// ∫_a^b v^p k̂(v) dv.
fn weighted_transform_integral(seed: &SeedCovariance, p: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut breaks = vec![a];
    let mut x = (a / PANEL).floor() * PANEL + PANEL;
    while x < b {
        breaks.push(x);
        x += PANEL;
    }
    breaks.push(b);
    adaptive_gk_breaks(|v| if v == 0.0 && p == 0.0 { seed.fourier_profile(0.0) } else { v.powf(p) * seed.fourier_profile(v) }, &breaks, SYMBOL_TOL)
}

/// |ξ|^{−(d+α)} ∫_0^{|ξ|} v^{d−1+α} k̂(v) dv for each ξ, with the ξ = 0 limit
/// k̂(0)/(d+α). Integrals are accumulated along the sorted ξ values.
fn radial_symbol(xi: &[f64], seed: &SeedCovariance, alpha: f64) -> Result<Vec<f64>> {
    if xi.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(invalid("xi", "magnitudes must be finite and nonnegative"));
    }
    if !(alpha >= 0.0) {
        return Err(invalid("alpha", format!("must be nonnegative, got {alpha}")));
    }
    let e = seed.dim() as f64 + alpha;
    let p = e - 1.0;
    let mut order: Vec<usize> = (0..xi.len()).collect();
    order.sort_by(|&i, &j| xi[i].total_cmp(&xi[j]));
    let mut out = vec![0.0; xi.len()];
    let mut acc = 0.0;
    let mut last = 0.0;
    for i in order {
        let x = xi[i];
        acc += weighted_transform_integral(seed, p, last, x);
        last = x;
        out[i] = if x == 0.0 { seed.fourier_profile(0.0) / e } else { acc / x.powf(e) };
    }
    Ok(out)
}

/// K̂(ξ) = |ξ|^{−d} ∫_0^{|ξ|} v^{d−1} k̂(v) dv.
pub fn symbol_k_hat(xi: &[f64], seed: &SeedCovariance) -> Result<Vec<f64>> {
    radial_symbol(xi, seed, 0.0)
}

/// û_α(ξ) = |ξ|^{−d−α} ∫_0^{|ξ|} v^{d−1+α} k̂(v) dv; α = 0 gives K̂.
pub fn symbol_u_alpha(xi: &[f64], seed: &SeedCovariance, alpha: f64) -> Result<Vec<f64>> {
    radial_symbol(xi, seed, alpha)
}

/// Lower and upper constants c₁, c₂ with c₁ ≤ s(ξ)(1+ξ²)^{e/2} ≤ c₂ on a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SymbolBand {
    pub exponent: f64,
    pub c1: f64,
    pub c2: f64,
}

impl SymbolBand {
    pub fn fit(xi: &[f64], values: &[f64], exponent: f64) -> Self {
        let scaled = xi.iter().zip(values).map(|(&x, &v)| v * (1.0 + x * x).powf(0.5 * exponent));
        let (c1, c2) = scaled.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
        Self { exponent, c1, c2 }
    }

    pub fn ratio(&self) -> f64 {
        self.c2 / self.c1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SymbolTable {
    pub xi: Vec<f64>,
    pub k_hat: Vec<f64>,
    /// symbol of C_{Y^(α)}: K̂ − û_α
    pub k_hat_alpha: Vec<f64>,
    pub u_alpha: Vec<f64>,
    pub dim: usize,
    pub alpha: f64,
}

impl SymbolTable {
    pub fn build(xi: &[f64], seed: &SeedCovariance, alpha: f64) -> Result<Self> {
        let k_hat = symbol_k_hat(xi, seed)?;
        let u_alpha = symbol_u_alpha(xi, seed, alpha)?;
        Ok(Self {
            xi: xi.to_vec(),
            k_hat_alpha: k_hat.iter().zip(&u_alpha).map(|(k, u)| k - u).collect(),
            k_hat,
            u_alpha,
            dim: seed.dim(),
            alpha,
        })
    }

    pub fn k_hat_band(&self) -> SymbolBand {
        SymbolBand::fit(&self.xi, &self.k_hat, self.dim as f64)
    }

    pub fn u_alpha_band(&self) -> SymbolBand {
        SymbolBand::fit(&self.xi, &self.u_alpha, self.dim as f64 + self.alpha)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "xi,K-hat,u-alpha-hat")?;
        for i in 0..self.xi.len() {
            writeln!(w, "{},{},{}", self.xi[i], self.k_hat[i], self.u_alpha[i])?;
        }
        Ok(())
    }
}

/// C_X(r) = ∫_0^∞ k(e^u r) du = ∫_r^1 (k(t) − 1)/t dt − log r for 0 < r < 1.
pub fn cx_kernel(r: f64, seed: &SeedCovariance) -> Result<f64> {
    let r = r.abs();
    if r == 0.0 {
        return Err(ChaosError::SingularEvaluation("C_X at zero separation".into()));
    }
    if r >= 1.0 {
        return Ok(0.0);
    }
    Ok(cx_smooth_part(r, seed) - r.ln())
}

/// g(r) = ∫_r^1 (k(t) − 1)/t dt, the bounded part of C_X.
fn cx_smooth_part(r: f64, seed: &SeedCovariance) -> f64 {
    adaptive_gk(|t| if t == 0.0 { 0.0 } else { (seed.radial_profile(t) - 1.0) / t }, r, 1.0, SYMBOL_TOL).0
}

/// lim_{r→0} (C_X(r) + log r) = ∫_0^1 (k(t) − 1)/t dt.
pub fn cx_remainder_at_zero(seed: &SeedCovariance) -> f64 {
    cx_smooth_part(0.0, seed)
}

/// Kernel of U_α = C_X − C_{Y^(α)}: ∫_0^∞ k(e^u r) e^{−αu} du; α = 0 gives C_X.
pub fn u_alpha_kernel(r: f64, alpha: f64, seed: &SeedCovariance) -> Result<f64> {
    if alpha == 0.0 {
        return cx_kernel(r, seed);
    }
    if !(alpha > 0.0) {
        return Err(invalid("alpha", format!("must be nonnegative, got {alpha}")));
    }
    let r = r.abs();
    if r >= 1.0 {
        return Ok(0.0);
    }
    if r == 0.0 {
        return Ok(1.0 / alpha);
    }
    // r^α ∫_r^1 k(t) t^{−1−α} dt = ∫_r^1 (k(t) − 1)(r/t)^α dt/t + (1 − r^α)/α
    let rem = adaptive_gk(|t| (seed.radial_profile(t) - 1.0) * (r / t).powf(alpha) / t, r, 1.0, SYMBOL_TOL).0;
    Ok(rem - (alpha * r.ln()).exp_m1() / alpha)
}

/// C_X(r) in d = 1 through the inverse transform of K̂:
/// (1/π)[∫_0^Ξ K̂(ξ) cos(ξr) dξ − Q Ci(Ξr)] with Q = ∫_0^∞ k̂.
pub fn cx_kernel_from_symbol(r: f64, seed: &SeedCovariance, cutoff: f64) -> Result<f64> {
    if seed.dim() != 1 {
        return Err(invalid("dimension", "the inverse-transform route is implemented for d = 1"));
    }
    let r = r.abs();
    if r == 0.0 {
        return Err(ChaosError::SingularEvaluation("C_X at zero separation".into()));
    }
    let q_total = weighted_transform_integral(seed, 0.0, 0.0, cutoff) + weighted_transform_integral(seed, 0.0, cutoff, 50.0 * cutoff);
    let gl = GaussLegendre::new(20);
    let inner = GaussLegendre::new(20);
    let panel = (0.5f64).min(PI / (4.0 * r));
    let panels = (cutoff / panel).ceil() as usize;
    let width = cutoff / panels as f64;
    let mut q_start = 0.0;
    let mut s = 0.0;
    for p in 0..panels {
        let a = p as f64 * width;
        let b = a + width;
        s += gl.integrate(
            |x| {
                let q = q_start + inner.integrate(|v| seed.fourier_profile(v), a, x);
                let k_hat = if x == 0.0 { seed.fourier_profile(0.0) } else { q / x };
                k_hat * (x * r).cos()
            },
            a,
            b,
        );
        q_start += inner.integrate(|v| seed.fourier_profile(v), a, b);
    }
    Ok((s - q_total * cos_integral(cutoff * r)) / PI)
}

/// Polynomial smoothstep of odd degree 2N + 1: 0 at 0, 1 at 1, N derivatives vanishing at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothstep {
    coeffs: Vec<f64>,
}

impl Smoothstep {
    pub fn new(degree: usize) -> Result<Self> {
        if degree < 3 || degree % 2 == 0 {
            return Err(invalid("smoothstep degree", format!("must be odd and ≥ 3, got {degree}")));
        }
        let n = (degree - 1) / 2;
        // S(x) = x^{N+1} Σ_k C(N+k, k) C(2N+1, N−k) (−x)^k
        let mut coeffs = vec![0.0; degree + 1];
        for k in 0..=n {
            let c = binom(n + k, k) * binom(2 * n + 1, n - k) * if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[n + 1 + k] = c;
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
        }
    }
}

impl Default for Smoothstep {
    fn default() -> Self {
        Self::new(DEFAULT_SMOOTHSTEP_DEGREE).expect("default degree is valid")
    }
}

pub const DEFAULT_SMOOTHSTEP_DEGREE: usize = 7;

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Axis-aligned box [lo, hi] in d ∈ {1, 2} (second coordinate ignored for d = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl AxisBox {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: [lo, 0.0], hi: [hi, 0.0] }
    }

    pub fn square(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPair {
    pub grid: GridSpec,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// a = u/v, b = (1 − u)/v with v = √(u² + (1−u)²) and u a product of
/// smoothstep ramps: 1 on V̄, 0 outside W.
pub fn partition_of_unity(v_box: &AxisBox, w_box: &AxisBox, grid: &GridSpec, step: &Smoothstep) -> Result<PartitionPair> {
    grid.validate()?;
    for k in 0..grid.dim {
        if !(w_box.lo[k] < v_box.lo[k] && v_box.lo[k] <= v_box.hi[k] && v_box.hi[k] < w_box.hi[k]) {
            return Err(invalid("V", "must lie compactly inside W"));
        }
    }
    let ramp = |x: f64, k: usize| -> f64 {
        if x < v_box.lo[k] {
            step.eval((x - w_box.lo[k]) / (v_box.lo[k] - w_box.lo[k]))
        } else if x > v_box.hi[k] {
            step.eval((w_box.hi[k] - x) / (w_box.hi[k] - v_box.hi[k]))
        } else {
            1.0
        }
    };
    let mut a = Vec::with_capacity(grid.len());
    let mut b = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.coords(i);
        let u: f64 = (0..grid.dim).map(|k| ramp(x[k], k)).product();
        let v = (u * u + (1.0 - u) * (1.0 - u)).sqrt();
        a.push(u / v);
        b.push((1.0 - u) / v);
    }
    Ok(PartitionPair { grid: *grid, a, b })
}

/// R_ij = (a_i a_j + b_i b_j − 1) C_X,ij + a_i a_j g̃_ij.
pub fn assemble_r(pair: &PartitionPair, cx: &OperatorMatrix, gtilde: &OperatorMatrix) -> Result<OperatorMatrix> {
    if !cx.same_grid(gtilde) || !pair.grid.same_as(cx.grid()) || pair.a.len() != cx.n() {
        return Err(ChaosError::GridMismatch("partition, C_X and g̃ must share one grid".into()));
    }
    let (a, b) = (&pair.a, &pair.b);
    OperatorMatrix::from_fn(*cx.grid(), cx.origin(), &format!("R[{}]", gtilde.kernel_id()), |i, j| {
        (a[i] * a[j] + b[i] * b[j] - 1.0) * cx.get(i, j) + a[i] * a[j] * gtilde.get(i, j)
    })
}

/// Cell-pair averaged matrix of a stationary kernel K(|x − y|) on a 1-D grid.
pub fn stationary_matrix<K: Fn(f64) -> f64 + Sync>(grid: &GridSpec, kernel_id: &str, kernel: K) -> Result<OperatorMatrix> {
    let w = cell_pair_toeplitz(grid.len(), grid.spacing(), &kernel);
    OperatorMatrix::from_fn(*grid, 0.0, kernel_id, |i, j| w[i.abs_diff(j)])
}

/// Cell-averaged C_X matrix.
pub fn cx_matrix(grid: &GridSpec, seed: &SeedCovariance) -> Result<OperatorMatrix> {
    u_alpha_matrix(grid, seed, 0.0)
}

/// Cell-averaged U_α matrix (α = 0 gives C_X).
pub fn u_alpha_matrix(grid: &GridSpec, seed: &SeedCovariance, alpha: f64) -> Result<OperatorMatrix> {
    if seed.dim() != 1 || grid.dim != 1 {
        return Err(invalid("dimension", "operator matrices are assembled in d = 1"));
    }
    u_alpha_kernel(0.5, alpha, seed)?;
    stationary_matrix(grid, &format!("U_alpha({alpha})"), |r| u_alpha_kernel(r, alpha, seed).unwrap_or(0.0))
}

/// Toy perturbations g̃ of increasing difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GTilde {
    Zero,
    /// amplitude · ψ(x)ψ(y), ψ(x) = (1 − ((x − center)/width)²)³₊
    SeparableBump { amplitude: f64, center: f64, width: f64 },
    /// remainder −log(2 sin π|x−y|) − C_X(x, y) of the circle kernel
    CircleRemainder,
}

impl GTilde {
    pub fn id(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::SeparableBump { amplitude, center, width } => format!("bump(a={amplitude},c={center},w={width})"),
            Self::CircleRemainder => "circle-remainder".into(),
        }
    }

    /// Default ladder: zero, a negative smooth separable bump centred at `center`, the circle remainder.
    pub fn ladder(center: f64) -> [Self; 3] {
        [
            Self::Zero,
            Self::SeparableBump {
                amplitude: -0.5,
                center,
                width: 0.2,
            },
            Self::CircleRemainder,
        ]
    }

    /// Point values of g̃ where a(x)a(y) ≠ 0, zero elsewhere.
    pub fn matrix(&self, pair: &PartitionPair, seed: &SeedCovariance) -> Result<OperatorMatrix> {
        let grid = pair.grid;
        let xs: Vec<f64> = (0..grid.len()).map(|i| grid.coords(i)[0]).collect();
        let psi = |x: f64, c: f64, w: f64| {
            let t = (x - c) / w;
            if t.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - t * t).powi(3)
            }
        };
        let g0 = cx_remainder_at_zero(seed);
        if *self == Self::CircleRemainder {
            let support: Vec<f64> = xs.iter().zip(&pair.a).filter(|(_, &a)| a != 0.0).map(|(&x, _)| x).collect();
            let diam = support.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - support.iter().cloned().fold(f64::INFINITY, f64::min);
            if diam >= 1.0 {
                return Err(invalid("W", "the circle remainder needs supp a of diameter < 1"));
            }
        }
        OperatorMatrix::from_fn(grid, 0.0, &self.id(), |i, j| {
            if pair.a[i] * pair.a[j] == 0.0 {
                return 0.0;
            }
            match *self {
                Self::Zero => 0.0,
                Self::SeparableBump { amplitude, center, width } => amplitude * psi(xs[i], center, width) * psi(xs[j], center, width),
                Self::CircleRemainder => {
                    if i == j {
                        // smooth limit −log 2π − g(0)
                        -(2.0 * PI).ln() - g0
                    } else {
                        let r = (xs[i] - xs[j]).abs();
                        let circle = -(2.0 * (PI * circle_offset(xs[i], xs[j])).sin()).ln();
                        circle - cx_kernel(r, seed).unwrap_or(f64::NAN)
                    }
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScanPoint {
    pub alpha: f64,
    pub min_eig: f64,
    pub grid_points: usize,
    pub kernel_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EigenScan {
    pub points: Vec<ScanPoint>,
    /// Largest α in the list whose minimum eigenvalue is positive.
    pub alpha_star: Option<f64>,
}

impl EigenScan {
    pub fn is_nonincreasing(&self) -> bool {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        pts.windows(2).all(|w| w[1].min_eig <= w[0].min_eig)
    }
}

/// Smallest eigenvalue of h·(U_α + R) for each α (R = 0 when `r` is None).
pub fn min_eig_scan(alphas: &[f64], grid: &GridSpec, seed: &SeedCovariance, r: Option<&OperatorMatrix>) -> Result<EigenScan> {
    if let Some(r) = r {
        if !r.grid().same_as(grid) {
            return Err(ChaosError::GridMismatch("R was assembled on another grid".into()));
        }
    }
    let points = alphas
        .par_iter()
        .map(|&alpha| {
            let u = u_alpha_matrix(grid, seed, alpha)?;
            let (m, id) = match r {
                Some(r) => (
                    OperatorMatrix::from_matrix(*grid, 0.0, "", u.kernel() + r.kernel())?,
                    format!("U_alpha+{}", r.kernel_id()),
                ),
                None => (u, "U_alpha".to_string()),
            };
            if !m.is_symmetric() {
                return Err(ChaosError::Numerical("assembled operator is not symmetric".into()));
            }
            Ok(ScanPoint {
                alpha,
                min_eig: m.min_eigenvalue(),
                grid_points: grid.len(),
                kernel_id: id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let alpha_star = points
        .iter()
        .filter(|p| p.min_eig > 0.0 && p.alpha > 0.0)
        .map(|p| p.alpha)
        .fold(None, |m: Option<f64>, a| Some(m.map_or(a, |m| m.max(a))));
    Ok(EigenScan { points, alpha_star })
}
