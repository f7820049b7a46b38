//! Dense symmetric kernel matrices on 1-D grids.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ChaosError, Result};
use crate::field::GridSpec;

/// Kernel values K(x_i, x_j) at grid points x_i = origin + i·h, with the
/// cell volume h carried alongside; the discretized operator is h·K.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    grid: GridSpec,
    origin: f64,
    kernel: DMatrix<f64>,
    kernel_id: String,
}

impl OperatorMatrix {
    /// Builds the matrix from the upper triangle of `entry(i, j)` and mirrors it.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(grid: GridSpec, origin: f64, kernel_id: &str, mut entry: F) -> Result<Self> {
        if grid.dim != 1 {
            return Err(ChaosError::InvalidParameter {
                name: "dimension",
                reason: "operator matrices are built on 1-D grids".into(),
            });
        }
        let n = grid.len();
        let mut kernel = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = entry(i, j);
                if !v.is_finite() {
                    return Err(ChaosError::Numerical(format!("non-finite kernel entry at ({i}, {j})")));
                }
                kernel[(i, j)] = v;
                kernel[(j, i)] = v;
            }
        }
        Ok(Self {
            grid,
            origin,
            kernel,
            kernel_id: kernel_id.to_string(),
        })
    }

    pub fn from_matrix(grid: GridSpec, origin: f64, kernel_id: &str, kernel: DMatrix<f64>) -> Result<Self> {
        if kernel.nrows() != grid.len() || kernel.ncols() != grid.len() {
            return Err(ChaosError::GridMismatch(format!(
                "matrix is {}×{} but grid has {} points",
                kernel.nrows(),
                kernel.ncols(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            origin,
            kernel,
            kernel_id: kernel_id.to_string(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn n(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.kernel[(i, j)]
    }

    pub fn position(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.grid.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.position(i)).collect()
    }

    /// Nearest grid index of position x, wrapping periodically.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = (x - self.origin) / self.grid.spacing();
        let r = t.round();
        if (t - r).abs() > 1e-6 {
            return None;
        }
        Some((r as i64).rem_euclid(self.n() as i64) as usize)
    }

    pub fn same_grid(&self, other: &OperatorMatrix) -> bool {
        self.grid == other.grid && self.origin == other.origin
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..i).all(|j| self.kernel[(i, j)] == self.kernel[(j, i)]))
    }

    /// h·K, the matrix of the discretized integral operator.
    pub fn weighted(&self) -> DMatrix<f64> {
        &self.kernel * self.grid.cell_volume()
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.kernel.clone())
    }

    /// Smallest eigenvalue of the weighted operator h·K.
    pub fn min_eigenvalue(&self) -> f64 {
        self.weighted().symmetric_eigenvalues().min()
    }

    /// Spectral norm of K.
    pub fn norm(&self) -> f64 {
        self.kernel.symmetric_eigenvalues().amax()
    }
}
