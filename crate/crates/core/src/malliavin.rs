//! Malliavin quantities of M = μ(f) on one realization, projection bounds,
//! and small-ball curves.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::chaos::{renormalized_exponential, ChaosGrid, ChaosParams, SobolevNorm, TestFunction};
use crate::error::{invalid, ChaosError, Result};
use crate::fft::GridFft;
use crate::field::{CovarianceOracle, FieldSample, GridSpec, SynthesisSpec};
use crate::mc::map_samples;
use crate::moments::cell_pair_weights;
use crate::rng::ChainPlan;
use crate::stats::{polyfit, wilson_interval};

/// Relative tolerance for the nonnegativity invariants at 2048 grid points.
pub const BASE_TOLERANCE: f64 = 1e-9;

/// Invariant tolerance for a grid: 1e−9 at 2048 points, scaled with the spacing.
pub fn invariant_tolerance(grid: &GridSpec) -> f64 {
    BASE_TOLERANCE * (grid.spacing() * 2048.0 / grid.extent).max(1.0)
}

/// Complex charge w representing h = C·w in the Cameron–Martin space.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ChargeFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ChaosError::GridMismatch("charge values do not match the grid".into()));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("charge", "values must be finite"));
        }
        Ok(Self { grid, values })
    }

    /// Cell indicator divided by the cell volume at grid index `i`.
    pub fn point_mass(grid: GridSpec, i: usize) -> Result<Self> {
        let mut v = vec![Complex64::new(0.0, 0.0); grid.len()];
        *v.get_mut(i).ok_or_else(|| invalid("index", "outside the grid"))? = Complex64::new(1.0 / grid.cell_volume(), 0.0);
        Self::new(grid, v)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Self::new(self.grid, self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * c).collect(),
        }
    }
}

fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(ChaosError::GridMismatch(format!("{a:?} vs {b:?}")))
    }
}

/// Discretized bilinear form (a, b) ↦ ∬ a(x) K(x,y) conj(b(y)) dx dy on a 1-D grid.
#[derive(Debug, Clone)]
pub enum KernelQuadrature {
    /// Periodic grid, stationary kernel: cell-pair averages W_m and their DFT.
    Circulant {
        h: f64,
        weights: Vec<f64>,
        eig: Vec<f64>,
        fft: GridFft,
    },
    /// Point values off the diagonal, log-cell average on it.
    Dense { h: f64, matrix: DMatrix<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KernelPower {
    One,
    Two,
}

impl KernelQuadrature {
    /// Quadrature of C on `grid`.
    pub fn covariance(grid: &GridSpec, oracle: &CovarianceOracle) -> Result<Self> {
        Self::build(grid, oracle, KernelPower::One)
    }

    /// Quadrature of C².
    pub fn covariance_squared(grid: &GridSpec, oracle: &CovarianceOracle) -> Result<Self> {
        Self::build(grid, oracle, KernelPower::Two)
    }

    fn build(grid: &GridSpec, oracle: &CovarianceOracle, power: KernelPower) -> Result<Self> {
        if grid.dim != 1 {
            return Err(invalid("dimension", "Malliavin quadrature is implemented for d = 1"));
        }
        let n = grid.points_per_axis;
        let h = grid.spacing();
        let periodic = oracle.is_circle() && oracle.is_stationary() && (grid.extent - 1.0).abs() < 1e-12;
        if periodic {
            let fft = GridFft::new(n, 1);
            let (weights, eig) = match (oracle, power) {
                (CovarianceOracle::CircleTruncated { modes }, KernelPower::One) => {
                    // eigenvalues n Σ_{k ≤ modes, k ≡ ±j} sinc²(πk/n)/(2k), all ≥ 0
                    let mut eig = vec![0.0; n];
                    for k in 1..=*modes {
                        let x = PI * k as f64 / n as f64;
                        let s = if k % n == 0 { 0.0 } else { (x.sin() / x).powi(2) };
                        let c = n as f64 * s / (2.0 * k as f64);
                        eig[k % n] += c;
                        eig[(n - k % n) % n] += c;
                    }
                    let mut w: Vec<Complex64> = eig.iter().map(|&l| Complex64::new(l, 0.0)).collect();
                    fft.inverse(&mut w);
                    (w.iter().map(|z| z.re / n as f64).collect(), eig)
                }
                _ => {
                    let kernel = |r: f64| match oracle.eval_distance(r) {
                        Ok(c) => match power {
                            KernelPower::One => c,
                            KernelPower::Two => c * c,
                        },
                        Err(_) => 0.0,
                    };
                    let w = cell_pair_weights(n, h, &kernel);
                    let mut e: Vec<Complex64> = w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                    fft.forward(&mut e);
                    (w, e.iter().map(|z| z.re).collect())
                }
            };
            return Ok(Self::Circulant { h, weights, eig, fft });
        }
        let xs: Vec<f64> = (0..grid.len()).map(|i| grid.coords(i)[0]).collect();
        let mut matrix = DMatrix::zeros(xs.len(), xs.len());
        for i in 0..xs.len() {
            let diag = match power {
                KernelPower::One => oracle.diagonal_cell_average(xs[i], h)?,
                KernelPower::Two => oracle.diagonal_cell_average_sq(xs[i], h)?,
            };
            matrix[(i, i)] = diag;
            for j in (i + 1)..xs.len() {
                let c = oracle.eval(xs[i], xs[j])?;
                let v = match power {
                    KernelPower::One => c,
                    KernelPower::Two => c * c,
                };
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
        Ok(Self::Dense { h, matrix })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Circulant { weights, .. } => weights.len(),
            Self::Dense { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell-averaged kernel entry between grid indices i and j.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Circulant { weights, .. } => {
                let n = weights.len();
                weights[(i + n - j) % n]
            }
            Self::Dense { matrix, .. } => matrix[(i, j)],
        }
    }

    /// (K a)_i = Σ_j K_ij a_j.
    fn apply(&self, a: &[Complex64]) -> Vec<Complex64> {
        match self {
            Self::Circulant { eig, fft, .. } => {
                let n = a.len();
                let mut g = a.to_vec();
                fft.forward(&mut g);
                for (z, &l) in g.iter_mut().zip(eig) {
                    *z *= l;
                }
                fft.inverse(&mut g);
                g.iter().map(|z| z / n as f64).collect()
            }
            Self::Dense { matrix, .. } => {
                let n = a.len();
                (0..n)
                    .map(|i| {
                        let mut s = Complex64::new(0.0, 0.0);
                        for j in 0..n {
                            s += matrix[(i, j)] * a[j];
                        }
                        s
                    })
                    .collect()
            }
        }
    }

    fn h(&self) -> f64 {
        match self {
            Self::Circulant { h, .. } | Self::Dense { h, .. } => *h,
        }
    }

    /// h² Σ_ij a_i K_ij conj(b_j).
    pub fn form(&self, a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
        if a.len() != self.len() || b.len() != self.len() {
            return Err(ChaosError::GridMismatch("vector length differs from the quadrature grid".into()));
        }
        // Σ_ij a_i K_ij conj(b_j) = Σ_i a_i conj((K b)_i) for real symmetric K
        let kb = self.apply(b);
        let s: Complex64 = a.iter().zip(&kb).map(|(x, y)| x * y.conj()).sum();
        Ok(s * self.h() * self.h())
    }
}

/// ⟨Ca, Cb⟩_H = ∬ a(x) C(x,y) conj(b(y)) dx dy.
pub fn h_inner(a: &ChargeFunction, b: &ChargeFunction, oracle: &CovarianceOracle) -> Result<Complex64> {
    same_grid(&a.grid, &b.grid)?;
    KernelQuadrature::covariance(&a.grid, oracle)?.form(&a.values, &b.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MalliavinStats {
    pub i1: Complex64,
    pub i2: Complex64,
    pub det_gamma: f64,
    pub d2_norm_sq: f64,
    pub delta_dm: Option<Complex64>,
}

impl MalliavinStats {
    pub const CSV_HEADER: &'static str = "sample,i1_re,i1_im,i2_re,i2_im,det_gamma,d2_norm_sq,delta_dm_re,delta_dm_im";

    pub fn write_csv_row<W: Write>(&self, mut w: W, sample: usize) -> io::Result<()> {
        let (dr, di) = match self.delta_dm {
            Some(z) => (z.re.to_string(), z.im.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            w,
            "{sample},{},{},{},{},{},{},{dr},{di}",
            self.i1.re, self.i1.im, self.i2.re, self.i2.im, self.det_gamma, self.d2_norm_sq
        )
    }

    /// ‖DM‖² = β² Re I₁.
    pub fn dm_norm_sq(&self, beta: f64) -> f64 {
        beta * beta * self.i1.re
    }
}

/// Cached kernel quadratures for repeated evaluation on one grid.
#[derive(Debug, Clone)]
pub struct MalliavinLab {
    grid: GridSpec,
    c: KernelQuadrature,
    c2: KernelQuadrature,
}

impl MalliavinLab {
    pub fn new(grid: GridSpec, oracle: &CovarianceOracle) -> Result<Self> {
        Ok(Self {
            grid,
            c: KernelQuadrature::covariance(&grid, oracle)?,
            c2: KernelQuadrature::covariance_squared(&grid, oracle)?,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn covariance(&self) -> &KernelQuadrature {
        &self.c
    }

    fn check(&self, chaos: &ChaosGrid, f: &TestFunction) -> Result<()> {
        same_grid(&self.grid, chaos.grid())?;
        same_grid(&self.grid, f.grid())
    }

    /// g = f·μ on the grid.
    fn weighted_chaos(chaos: &ChaosGrid, f: &TestFunction) -> Vec<Complex64> {
        chaos.values().iter().zip(f.values()).map(|(z, &w)| z * w).collect()
    }

    pub fn stats(&self, chaos: &ChaosGrid, f: &TestFunction) -> Result<MalliavinStats> {
        self.check(chaos, f)?;
        let b = chaos.beta();
        let b4 = b.powi(4);
        let g = Self::weighted_chaos(chaos, f);
        let gc: Vec<Complex64> = g.iter().map(|z| z.conj()).collect();
        let i1 = self.c.form(&g, &g)?;
        let i2 = self.c.form(&g, &gc)?;
        let d2 = b4 * self.c2.form(&g, &g)?.re;
        Ok(MalliavinStats {
            i1,
            i2,
            det_gamma: 0.25 * b4 * (i1.norm_sqr() - i2.norm_sqr()),
            d2_norm_sq: d2,
            delta_dm: None,
        })
    }

    /// Charges of DF and D F̄: iβ f μ and −iβ f conj(μ).
    pub fn derivative_charges(&self, chaos: &ChaosGrid, f: &TestFunction) -> Result<(ChargeFunction, ChargeFunction)> {
        self.check(chaos, f)?;
        let ib = Complex64::new(0.0, chaos.beta());
        let g = Self::weighted_chaos(chaos, f);
        let df = ChargeFunction::new(self.grid, g.iter().map(|z| ib * z).collect())?;
        let dfb = ChargeFunction::new(self.grid, g.iter().map(|z| -ib * z.conj()).collect())?;
        Ok((df, dfb))
    }

    pub fn inner(&self, a: &ChargeFunction, b: &ChargeFunction) -> Result<Complex64> {
        same_grid(&self.grid, &a.grid)?;
        same_grid(&self.grid, &b.grid)?;
        self.c.form(&a.values, &b.values)
    }

    /// Directions h where the projection bounds are tightest: DF, D F̄, and the
    /// component of DF orthogonal to D F̄ (which makes the first bound an equality).
    pub fn adversarial_directions(&self, chaos: &ChaosGrid, f: &TestFunction) -> Result<[ChargeFunction; 3]> {
        let (df, dfb) = self.derivative_charges(chaos, f)?;
        let nb = self.inner(&dfb, &dfb)?.re;
        let perp = if nb > 0.0 {
            df.add(&dfb.scale(-self.inner(&df, &dfb)? / nb))?
        } else {
            df.clone()
        };
        Ok([df, dfb, perp])
    }

    pub fn projection_margins(&self, chaos: &ChaosGrid, f: &TestFunction, h: &ChargeFunction) -> Result<ProjectionMargins> {
        let stats = self.stats(chaos, f)?;
        let (df, dfb) = self.derivative_charges(chaos, f)?;
        let hh = self.inner(h, h)?.re;
        if !(hh > 0.0) {
            return Err(invalid("h", "Cameron–Martin norm of h is zero"));
        }
        let a = self.inner(&df, h)?.norm();
        let b = self.inner(&dfb, h)?.norm();
        let dm2 = stats.dm_norm_sq(chaos.beta());
        let gap2 = (a - b).powi(2) / hh;
        let lhs1 = if dm2 > 0.0 { stats.det_gamma / dm2 } else { 0.0 };
        Ok(ProjectionMargins {
            first: lhs1 - 0.25 * gap2,
            second: stats.det_gamma - 0.25 * gap2 * gap2,
            det_gamma: stats.det_gamma,
            dm_norm_sq: dm2,
        })
    }
}

/// lhs − rhs of the two projection bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ProjectionMargins {
    /// det γ / ‖DF‖² − ¼(|⟨DF,h⟩| − |⟨D F̄,h⟩|)²/‖h‖²
    pub first: f64,
    /// det γ − ¼(|⟨DF,h⟩| − |⟨D F̄,h⟩|)⁴/‖h‖⁴
    pub second: f64,
    pub det_gamma: f64,
    pub dm_norm_sq: f64,
}

pub fn malliavin_stats(chaos: &ChaosGrid, f: &TestFunction, oracle: &CovarianceOracle) -> Result<MalliavinStats> {
    MalliavinLab::new(*chaos.grid(), oracle)?.stats(chaos, f)
}

pub fn projection_bound_check(
    chaos: &ChaosGrid,
    f: &TestFunction,
    oracle: &CovarianceOracle,
    h: &ChargeFunction,
) -> Result<ProjectionMargins> {
    MalliavinLab::new(*chaos.grid(), oracle)?.projection_margins(chaos, f, h)
}

/// δ(DM) = β ∫ f(x)(iΓ(x) + β Var(x)) :e^{iβΓ(x)}: dx with the synthesis variance.
pub fn delta_dm(field: &FieldSample, chaos: &ChaosGrid, f: &TestFunction, beta: f64) -> Result<Complex64> {
    if chaos.field_fingerprint() != Some(field.fingerprint()) {
        return Err(ChaosError::Provenance("chaos was not built from this field".into()));
    }
    same_grid(field.grid(), chaos.grid())?;
    same_grid(field.grid(), f.grid())?;
    let var = field.variance();
    let mut s = Complex64::new(0.0, 0.0);
    for (i, ((&x, z), &w)) in field.values().iter().zip(chaos.values()).zip(f.values()).enumerate() {
        if w != 0.0 {
            s += w * Complex64::new(beta * var.at(i), x) * z;
        }
    }
    Ok(s * beta * field.grid().cell_volume())
}

/// Expectation of the discretized ‖D²M‖² for a field whose grid covariance is
/// the oracle: β⁴ h² Σ_ij f_i f_j e^{β²C(x_i,x_j)} W²_ij, W² the cell-averaged C².
pub fn d2_norm_expectation(beta: f64, f: &TestFunction, oracle: &CovarianceOracle) -> Result<f64> {
    let grid = f.grid();
    let c2 = KernelQuadrature::covariance_squared(grid, oracle)?;
    let xs: Vec<f64> = (0..grid.len()).map(|i| grid.coords(i)[0]).collect();
    let fv = f.values();
    let b2 = beta * beta;
    let h = grid.spacing();
    let mut s = crate::stats::CompensatedSum::new();
    for i in 0..xs.len() {
        if fv[i] == 0.0 {
            continue;
        }
        for j in 0..xs.len() {
            if fv[j] == 0.0 {
                continue;
            }
            s.add(fv[i] * fv[j] * (b2 * oracle.eval(xs[i], xs[j])?).exp() * c2.entry(i, j));
        }
    }
    Ok(beta.powi(4) * h * h * s.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallBallQuantity {
    DetGamma,
    /// ‖fμ‖_{H^s}
    SobolevNorm { s_milli: i32 },
}

impl SmallBallQuantity {
    pub fn sobolev(s: f64) -> Self {
        Self::SobolevNorm {
            s_milli: (s * 1000.0).round() as i32,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::DetGamma => "det-gamma".into(),
            Self::SobolevNorm { s_milli } => format!("sobolev-norm(s={})", *s_milli as f64 / 1000.0),
        }
    }
}

/// Probabilities below this many samples are flagged as censored.
pub const CENSOR_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SmallBallCurve {
    pub quantity: String,
    pub beta: f64,
    pub n_samples: usize,
    pub eps: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub censored: Vec<bool>,
}

/// Shape of log P̂ against log ε over the uncensored small-ball range.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SmallBallSignature {
    /// Decades of ε spanned by uncensored points with P̂ ≤ 1/2.
    pub observed_eps_decades: f64,
    /// Decades of P̂ spanned by the same points.
    pub observed_decades: f64,
    /// Finite-difference slopes d log P̂/d log ε, from small to large ε.
    pub local_slopes: Vec<f64>,
    /// Quadratic coefficient of log P̂ in log ε; negative when the slope grows toward small ε.
    pub curvature: f64,
    /// Increase of the fitted slope from the largest to the smallest observed ε,
    /// relative to the mean slope.
    pub relative_slope_increase: f64,
    pub super_polynomial: bool,
}

/// Minimum relative slope increase counted as a super-polynomial signature.
pub const MIN_RELATIVE_SLOPE_INCREASE: f64 = 0.05;

impl SmallBallCurve {
    /// Empirical CDF of `values` on `eps` with 95% Wilson intervals.
    pub fn from_values(quantity: String, beta: f64, values: &[f64], eps: &[f64]) -> Result<Self> {
        if eps.windows(2).any(|w| !(w[1] > w[0])) || eps.first().is_none_or(|&e| e <= 0.0) {
            return Err(invalid("eps", "grid must be positive and strictly increasing"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut p_hat = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut censored = Vec::new();
        for &e in eps {
            let k = sorted.partition_point(|&v| v <= e);
            let (l, u) = wilson_interval(k, n, 1.959_963_984_540_054);
            p_hat.push(if n == 0 { 0.0 } else { k as f64 / n as f64 });
            lo.push(l);
            hi.push(u);
            censored.push(k < CENSOR_COUNT);
        }
        Ok(Self {
            quantity,
            beta,
            n_samples: n,
            eps: eps.to_vec(),
            p_hat,
            ci_low: lo,
            ci_high: hi,
            censored,
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "eps,p_hat,ci_low,ci_high,censored")?;
        for i in 0..self.eps.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.eps[i], self.p_hat[i], self.ci_low[i], self.ci_high[i], self.censored[i]
            )?;
        }
        Ok(())
    }

    pub fn signature(&self) -> SmallBallSignature {
        let pts: Vec<(f64, f64)> = (0..self.eps.len())
            .filter(|&i| !self.censored[i] && self.p_hat[i] <= 0.5)
            .map(|i| (self.eps[i].log10(), self.p_hat[i].log10()))
            .collect();
        let (observed_eps_decades, observed_decades) = match (pts.first(), pts.last()) {
            (Some(a), Some(b)) => (b.0 - a.0, b.1 - a.1),
            _ => (0.0, 0.0),
        };
        let local_slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        let (curvature, relative_slope_increase) = if pts.len() >= 3 {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            match polyfit(&x, &y, 2) {
                Some(c) => {
                    let mid = 0.5 * (x[0] + x[x.len() - 1]);
                    let mean_slope = c[1] + 2.0 * c[2] * mid;
                    (c[2], -2.0 * c[2] * observed_eps_decades / mean_slope.abs())
                }
                None => (f64::NAN, f64::NAN),
            }
        } else {
            (f64::NAN, f64::NAN)
        };
        SmallBallSignature {
            observed_eps_decades,
            observed_decades,
            super_polynomial: observed_decades >= 3.0 && relative_slope_increase > MIN_RELATIVE_SLOPE_INCREASE,
            local_slopes,
            curvature,
            relative_slope_increase,
        }
    }
}

/// Log-spaced grid from 10^lo to 10^hi with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi - lo) * per_decade as f64).round() as usize;
    (0..=n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / n.max(1) as f64)).collect()
}

/// Per-sample values of a small-ball quantity.
pub fn smallball_samples(
    quantity: SmallBallQuantity,
    beta: f64,
    f: &TestFunction,
    spec: &SynthesisSpec,
    plan: &ChainPlan,
) -> Result<Vec<f64>> {
    let synth = spec.build()?;
    same_grid(&synth.grid(), f.grid())?;
    let params = ChaosParams::new(beta, f.grid().dim)?;
    match quantity {
        SmallBallQuantity::DetGamma => {
            let lab = MalliavinLab::new(*f.grid(), &synth.oracle())?;
            map_samples(spec, plan, |field| Ok(lab.stats(&renormalized_exponential(field, &params)?, f)?.det_gamma))
        }
        SmallBallQuantity::SobolevNorm { s_milli } => {
            let norm = SobolevNorm::new(*f.grid(), s_milli as f64 / 1000.0)?;
            map_samples(spec, plan, |field| norm.eval(&renormalized_exponential(field, &params)?, f))
        }
    }
}

pub fn smallball_curve(
    quantity: SmallBallQuantity,
    beta: f64,
    f: &TestFunction,
    spec: &SynthesisSpec,
    eps: &[f64],
    plan: &ChainPlan,
) -> Result<SmallBallCurve> {
    if let (Some(a), Some(b)) = (eps.first(), eps.last()) {
        if (b / a).log10() < 4.0 - 1e-9 {
            return Err(invalid("eps", "grid must span at least four decades"));
        }
    }
    let values = smallball_samples(quantity, beta, f, spec, plan)?;
    SmallBallCurve::from_values(quantity.name(), beta, &values, eps)
}
