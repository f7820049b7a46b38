use std::f64::consts::PI;
use std::sync::Arc;

use super::circle::{circle_offset, truncated_profile};
use super::star::{
    cov_tail_distance, cov_tail_rescaled_distance, cov_y_delta_distance, layered_cov_distance, Layer,
    LayeredNoiseParams,
};
use super::SeedCovariance;
use crate::error::{ChaosError, Result};
use crate::operator::OperatorMatrix;

/// Covariance C(x, y) of a field, evaluated analytically or from a matrix.
#[derive(Debug, Clone)]
pub enum CovarianceOracle {
    /// −log(2|sin π(x−y)|) on the unit circle.
    CircleExact,
    /// Σ_{k ≤ modes} cos(2πk(x−y))/k.
    CircleTruncated { modes: usize },
    /// u-integral over [0, log 1/δ], evaluated by adaptive quadrature.
    StarYDelta {
        params: LayeredNoiseParams,
        seed: Arc<SeedCovariance>,
    },
    /// The layer-discretized version used by the synthesizer.
    StarLayered {
        params: LayeredNoiseParams,
        seed: Arc<SeedCovariance>,
        layers: Arc<Vec<Layer>>,
    },
    /// Small-scale tail Y − Y_δ.
    StarTail {
        params: LayeredNoiseParams,
        seed: Arc<SeedCovariance>,
    },
    /// Tail field observed in units of δ: x ↦ Ŷ_δ(δx).
    StarTailRescaled {
        params: LayeredNoiseParams,
        seed: Arc<SeedCovariance>,
    },
    /// Entries of a kernel matrix at grid points.
    Dense(Arc<OperatorMatrix>),
    /// −log|x − y| on the line.
    PureLog,
    /// variance · exp(−(x−y)²/(2 length²)).
    SmoothGaussian { variance: f64, length: f64 },
    Constant(f64),
    /// C convolved on both sides with a discrete mollifier (offset, weight).
    Mollified {
        base: Box<CovarianceOracle>,
        taps: Arc<Vec<(f64, f64)>>,
    },
}

impl CovarianceOracle {
    pub fn star_y_delta(params: LayeredNoiseParams, seed: Arc<SeedCovariance>) -> Self {
        Self::StarYDelta { params, seed }
    }

    pub fn star_layered(params: LayeredNoiseParams, seed: Arc<SeedCovariance>) -> Self {
        let layers = Arc::new(params.layers());
        Self::StarLayered { params, seed, layers }
    }

    pub fn kernel_id(&self) -> String {
        match self {
            Self::CircleExact => "circle-exact".into(),
            Self::CircleTruncated { modes } => format!("circle-truncated({modes})"),
            Self::StarYDelta { params, .. } => format!("star-Ydelta(alpha={},delta={})", params.alpha, params.delta),
            Self::StarLayered { params, .. } => {
                format!("star-layered(alpha={},delta={},lpu={})", params.alpha, params.delta, params.layers_per_unit)
            }
            Self::StarTail { params, .. } => format!("star-tail(alpha={},delta={})", params.alpha, params.delta),
            Self::StarTailRescaled { params, .. } => {
                format!("star-tail-rescaled(alpha={},delta={})", params.alpha, params.delta)
            }
            Self::Dense(m) => format!("dense-matrix({})", m.kernel_id()),
            Self::PureLog => "pure-log".into(),
            Self::SmoothGaussian { variance, length } => format!("smooth-gaussian(var={variance},len={length})"),
            Self::Constant(c) => format!("constant({c})"),
            Self::Mollified { base, .. } => format!("mollified({})", base.kernel_id()),
        }
    }

    pub fn is_circle(&self) -> bool {
        match self {
            Self::CircleExact | Self::CircleTruncated { .. } => true,
            Self::Mollified { base, .. } => base.is_circle(),
            _ => false,
        }
    }

    /// Whether C(x, x) is infinite.
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            Self::CircleExact | Self::PureLog | Self::StarTail { .. } | Self::StarTailRescaled { .. }
        )
    }

    /// Whether C(x, y) depends only on the (periodic, for circle kinds) separation.
    pub fn is_stationary(&self) -> bool {
        match self {
            Self::Dense(_) => false,
            Self::Mollified { base, .. } => base.is_stationary(),
            _ => true,
        }
    }

    /// Distance used by the Onsager bounds: chordal on the circle, Euclidean otherwise.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        if self.is_circle() {
            2.0 * (PI * circle_offset(x, y)).sin()
        } else {
            (x - y).abs()
        }
    }

    /// Interval from which random configurations are drawn.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::Dense(m) => (m.origin(), m.position(m.n() - 1)),
            _ => (0.0, 1.0),
        }
    }

    /// Separation passed to stationary profiles: periodic for circle kinds.
    fn separation(&self, x: f64, y: f64) -> f64 {
        if self.is_circle() {
            circle_offset(x, y)
        } else {
            (x - y).abs()
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            Self::Dense(m) => {
                let i = m.index_of(x);
                let j = m.index_of(y);
                match (i, j) {
                    (Some(i), Some(j)) => Ok(m.get(i, j)),
                    _ => Err(ChaosError::InvalidParameter {
                        name: "position",
                        reason: format!("({x}, {y}) is not on the matrix grid"),
                    }),
                }
            }
            Self::Mollified { base, taps } => {
                let mut s = 0.0;
                for &(sa, wa) in taps.iter() {
                    for &(sb, wb) in taps.iter() {
                        s += wa * wb * base.eval(x - sa, y - sb)?;
                    }
                }
                Ok(s)
            }
            _ => self.eval_distance(self.separation(x, y)),
        }
    }

    /// C as a function of separation r ≥ 0 for stationary kinds.
    pub fn eval_distance(&self, r: f64) -> Result<f64> {
        let singular = || ChaosError::SingularEvaluation(format!("{} at zero separation", self.kernel_id()));
        match self {
            Self::CircleExact => {
                let r = r.rem_euclid(1.0);
                let r = r.min(1.0 - r);
                if r == 0.0 {
                    Err(singular())
                } else {
                    Ok(-(2.0 * (PI * r).sin()).ln())
                }
            }
            Self::CircleTruncated { modes } => {
                let r = r.rem_euclid(1.0);
                Ok(truncated_profile(*modes, r.min(1.0 - r)))
            }
            Self::StarYDelta { params, seed } => Ok(cov_y_delta_distance(r, params, seed)),
            Self::StarLayered { seed, layers, .. } => Ok(layered_cov_distance(r, layers, seed)),
            Self::StarTail { params, seed } => {
                if r == 0.0 {
                    Err(singular())
                } else {
                    Ok(cov_tail_distance(r, params.delta, params.alpha, seed))
                }
            }
            Self::StarTailRescaled { params, seed } => {
                if r == 0.0 {
                    Err(singular())
                } else {
                    Ok(cov_tail_rescaled_distance(r, params.delta, params.alpha, seed))
                }
            }
            Self::PureLog => {
                if r == 0.0 {
                    Err(singular())
                } else {
                    Ok(-r.abs().ln())
                }
            }
            Self::SmoothGaussian { variance, length } => Ok(variance * (-0.5 * (r / length).powi(2)).exp()),
            Self::Constant(c) => Ok(*c),
            Self::Mollified { base, taps } => {
                let mut s = 0.0;
                for &(sa, wa) in taps.iter() {
                    for &(sb, wb) in taps.iter() {
                        s += wa * wb * base.eval(r - sa, -sb)?;
                    }
                }
                Ok(s)
            }
            Self::Dense(_) => Err(ChaosError::InvalidParameter {
                name: "oracle",
                reason: "dense-matrix oracle is not stationary".into(),
            }),
        }
    }

    /// Constant g₀ with C(r) = −log r + g₀ + o(1) as r → 0, for log-singular kinds.
    pub fn log_remainder_at_zero(&self) -> Option<f64> {
        match self {
            Self::CircleExact => Some(-(2.0 * PI).ln()),
            Self::PureLog => Some(0.0),
            _ => None,
        }
    }

    /// Average of C over a pair of coincident cells of side h (d = 1):
    /// −(log h − 3/2) + g₀ for log-singular kernels, C(x, x) otherwise.
    pub fn diagonal_cell_average(&self, x: f64, h: f64) -> Result<f64> {
        if self.is_singular() {
            match self.log_remainder_at_zero() {
                Some(g0) => Ok(-(h.ln() - 1.5) + g0),
                None => Err(ChaosError::SingularEvaluation(format!(
                    "no diagonal cell rule for {}",
                    self.kernel_id()
                ))),
            }
        } else {
            self.eval(x, x)
        }
    }

    /// Cell-pair average of C² on the diagonal (d = 1).
    pub fn diagonal_cell_average_sq(&self, x: f64, h: f64) -> Result<f64> {
        if self.is_singular() {
            match self.log_remainder_at_zero() {
                Some(g0) => {
                    // E log²|s−t| = log²h − 3 log h + 7/2, E log|s−t| = log h − 3/2 for s, t uniform on a cell
                    let l = h.ln();
                    Ok((l * l - 3.0 * l + 3.5) - 2.0 * g0 * (l - 1.5) + g0 * g0)
                }
                None => Err(ChaosError::SingularEvaluation(format!(
                    "no diagonal cell rule for {}",
                    self.kernel_id()
                ))),
            }
        } else {
            Ok(self.eval(x, x)?.powi(2))
        }
    }

    /// sup_x C(x, x) for bounded kernels.
    pub fn sup_variance(&self) -> Option<f64> {
        match self {
            Self::CircleTruncated { modes } => Some(super::circle::circle_truncated_variance(*modes)),
            Self::StarYDelta { params, .. } => {
                let u = params.u_max();
                Some(u + (-params.alpha * u).exp_m1() / params.alpha)
            }
            Self::StarLayered { params, .. } => Some(params.layered_variance()),
            Self::SmoothGaussian { variance, .. } => Some(*variance),
            Self::Constant(c) => Some(*c),
            Self::Dense(m) => Some((0..m.n()).map(|i| m.get(i, i)).fold(f64::NEG_INFINITY, f64::max)),
            _ => None,
        }
    }
}
