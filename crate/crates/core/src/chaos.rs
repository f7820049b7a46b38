//! The renormalized exponential :e^{iβΓ}: on a grid and its integrals.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{invalid, ChaosError, Result};
use crate::fft::{signed_index, GridFft};
use crate::field::{FieldSample, GridSpec, TruncationVariance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosParams {
    beta: f64,
    dim: usize,
}

impl ChaosParams {
    pub fn new(beta: f64, dim: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(invalid("dimension", format!("expected 1 or 2, got {dim}")));
        }
        let limit = (dim as f64).sqrt();
        if !(beta > 0.0 && beta < limit) {
            return Err(invalid("beta", format!("must lie in (0, √{dim}) = (0, {limit}), got {beta}")));
        }
        Ok(Self { beta, dim })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Real test function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    grid: GridSpec,
    values: Vec<f64>,
}

impl TestFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ChaosError::GridMismatch(format!(
                "{} test-function values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("test-function", "values must be finite"));
        }
        let f = Self { grid, values };
        if grid.padding() > 0.0 {
            if let Some(i) = (0..grid.len()).find(|&i| f.values[i] != 0.0 && !f.strictly_inside(i)) {
                return Err(invalid(
                    "test-function",
                    format!("support must lie strictly inside the region of interest (index {i})"),
                ));
            }
        }
        Ok(f)
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    fn strictly_inside(&self, i: usize) -> bool {
        let c = self.grid.coords(i);
        c[..self.grid.dim].iter().all(|&x| x > 0.0 && x < self.grid.region)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_mask(&self) -> Vec<bool> {
        self.values.iter().map(|v| *v != 0.0).collect()
    }

    /// Trapezoidal ∫ f.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Values of e^{iβX(x) + (β²/2)Var(x)} on a grid.
#[derive(Debug, Clone)]
pub struct ChaosGrid {
    grid: GridSpec,
    values: Vec<Complex64>,
    beta: f64,
    variance: TruncationVariance,
    field_fingerprint: Option<u64>,
}

impl ChaosGrid {
    /// Wraps given values, e.g. a deterministic μ ≡ c.
    pub fn from_values(grid: GridSpec, values: Vec<Complex64>, beta: f64, variance: TruncationVariance) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ChaosError::GridMismatch("chaos values do not match the grid".into()));
        }
        Ok(Self {
            grid,
            values,
            beta,
            variance,
            field_fingerprint: None,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn variance(&self) -> &TruncationVariance {
        &self.variance
    }

    pub fn field_fingerprint(&self) -> Option<u64> {
        self.field_fingerprint
    }

    /// CSV of (index, Re, Im).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,re,im")?;
        for (i, z) in self.values.iter().enumerate() {
            writeln!(w, "{i},{},{}", z.re, z.im)?;
        }
        Ok(())
    }
}

pub fn renormalized_exponential(field: &FieldSample, params: &ChaosParams) -> Result<ChaosGrid> {
    if field.grid().dim != params.dim() {
        return Err(ChaosError::GridMismatch("field dimension differs from chaos dimension".into()));
    }
    let beta = params.beta();
    let half_b2 = 0.5 * beta * beta;
    let var = field.variance();
    let values = match var {
        TruncationVariance::Constant(v) => {
            let m = (half_b2 * v).exp();
            field.values().iter().map(|&x| Complex64::from_polar(m, beta * x)).collect()
        }
        TruncationVariance::PerPoint(_) => field
            .values()
            .iter()
            .enumerate()
            .map(|(i, &x)| Complex64::from_polar((half_b2 * var.at(i)).exp(), beta * x))
            .collect(),
    };
    Ok(ChaosGrid {
        grid: *field.grid(),
        values,
        beta,
        variance: var.clone(),
        field_fingerprint: Some(field.fingerprint()),
    })
}

fn check_grid(chaos: &ChaosGrid, f: &TestFunction) -> Result<()> {
    if !chaos.grid.same_as(&f.grid) {
        return Err(ChaosError::GridMismatch(format!(
            "chaos grid {:?} vs test-function grid {:?}",
            chaos.grid, f.grid
        )));
    }
    Ok(())
}

/// Trapezoidal approximation of μ(f) = ∫ f :e^{iβΓ}:.
pub fn chaos_integral(chaos: &ChaosGrid, f: &TestFunction) -> Result<Complex64> {
    check_grid(chaos, f)?;
    let mut re = 0.0;
    let mut im = 0.0;
    for (z, &w) in chaos.values.iter().zip(&f.values) {
        re += w * z.re;
        im += w * z.im;
    }
    Ok(Complex64::new(re, im) * chaos.grid.cell_volume())
}

/// Reusable evaluator of the negative-order Sobolev norm on a fixed grid.
#[derive(Debug, Clone)]
pub struct SobolevNorm {
    grid: GridSpec,
    weights: Vec<f64>,
    fft: GridFft,
}

impl SobolevNorm {
    pub fn new(grid: GridSpec, s: f64) -> Result<Self> {
        if s > 0.0 {
            return Err(invalid("s", format!("regularity index must be ≤ 0, got {s}")));
        }
        let n = grid.points_per_axis;
        let freq = 2.0 * PI / grid.extent;
        let weights = (0..grid.len())
            .map(|idx| {
                let k2 = match grid.dim {
                    1 => (signed_index(idx, n) as f64).powi(2),
                    _ => (signed_index(idx / n, n) as f64).powi(2) + (signed_index(idx % n, n) as f64).powi(2),
                };
                (1.0 + freq * freq * k2).powf(s)
            })
            .collect();
        Ok(Self {
            grid,
            weights,
            fft: GridFft::new(n, grid.dim),
        })
    }

    /// (Σ_k (1 + |2πk/L|²)^s |c_k|²)^{1/2} with c_k the normalized DFT of f·chaos.
    pub fn eval(&self, chaos: &ChaosGrid, f: &TestFunction) -> Result<f64> {
        check_grid(chaos, f)?;
        if !self.grid.same_as(&chaos.grid) {
            return Err(ChaosError::GridMismatch("Sobolev evaluator built for another grid".into()));
        }
        let mut g: Vec<Complex64> = chaos.values.iter().zip(&f.values).map(|(z, w)| z * w).collect();
        self.fft.forward(&mut g);
        let scale = 1.0 / self.grid.len() as f64;
        let sum: f64 = g
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * (c * scale).norm_sqr())
            .sum();
        Ok(sum.sqrt())
    }
}

pub fn sobolev_norm(chaos: &ChaosGrid, f: &TestFunction, s: f64) -> Result<f64> {
    SobolevNorm::new(chaos.grid, s)?.eval(chaos, f)
}
