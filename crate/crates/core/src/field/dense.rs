use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CovarianceOracle, FieldSample, SynthesisMethod, TruncationVariance};
use crate::error::{ChaosError, Result};
use crate::operator::OperatorMatrix;

/// Eigenvalues below −REJECT·‖M‖ mark a matrix as not positive semidefinite.
pub const PSD_REJECT_TOLERANCE: f64 = 1e-6;

/// Symmetric square-root sampler for a covariance matrix.
#[derive(Debug, Clone)]
pub struct DenseSampler {
    matrix: Arc<OperatorMatrix>,
    factor: DMatrix<f64>,
    variance: Arc<Vec<f64>>,
    clipped: usize,
}

impl DenseSampler {
    pub fn new(matrix: Arc<OperatorMatrix>) -> Result<Self> {
        let eig = matrix.eigen();
        let norm = eig.eigenvalues.amax();
        let min = eig.eigenvalues.min();
        if min < -PSD_REJECT_TOLERANCE * norm {
            return Err(ChaosError::NotPositiveSemidefinite { min_eig: min, norm });
        }
        let mut clipped = 0;
        let roots = eig.eigenvalues.map(|l| {
            if l < 0.0 {
                clipped += 1;
                0.0
            } else {
                l.sqrt()
            }
        });
        let v = &eig.eigenvectors;
        let factor = v * DMatrix::from_diagonal(&roots) * v.transpose();
        let variance = Arc::new((0..matrix.n()).map(|i| matrix.get(i, i)).collect());
        Ok(Self {
            matrix,
            factor,
            variance,
            clipped,
        })
    }

    pub fn matrix(&self) -> &Arc<OperatorMatrix> {
        &self.matrix
    }

    /// Number of negative eigenvalues set to zero.
    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        let n = self.matrix.n();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let x = &self.factor * z;
        FieldSample::from_parts(
            *self.matrix.grid(),
            x.iter().copied().collect(),
            SynthesisMethod::DenseFactor,
            TruncationVariance::PerPoint(self.variance.clone()),
            CovarianceOracle::Dense(self.matrix.clone()),
        )
    }
}

pub fn sample_dense<R: Rng + ?Sized>(matrix: &OperatorMatrix, rng: &mut R) -> Result<FieldSample> {
    Ok(DenseSampler::new(Arc::new(matrix.clone()))?.sample(rng))
}
