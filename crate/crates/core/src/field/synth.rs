use std::sync::Arc;

use rand::Rng;

use super::{CircleSynthesizer, DenseSampler, FieldSample, GridSpec, LayeredNoiseParams, SeedCovariance, StarSynthesizer};
use super::CovarianceOracle;
use crate::error::Result;
use crate::operator::OperatorMatrix;

/// Description of a synthesis path, cheap to clone and send between threads.
#[derive(Debug, Clone)]
pub enum SynthesisSpec {
    Circle {
        modes: usize,
        points: usize,
    },
    Star {
        grid: GridSpec,
        params: LayeredNoiseParams,
        seed: Arc<SeedCovariance>,
    },
    Dense {
        matrix: Arc<OperatorMatrix>,
    },
}

impl SynthesisSpec {
    pub fn build(&self) -> Result<Synthesizer> {
        Ok(match self {
            Self::Circle { modes, points } => Synthesizer::Circle(CircleSynthesizer::new(*modes, GridSpec::circle(*points)?)?),
            Self::Star { grid, params, seed } => Synthesizer::Star(StarSynthesizer::new(*grid, *params, seed.clone())?),
            Self::Dense { matrix } => Synthesizer::Dense(DenseSampler::new(matrix.clone())?),
        })
    }
}

/// A ready-to-sample synthesizer.
#[derive(Debug, Clone)]
pub enum Synthesizer {
    Circle(CircleSynthesizer),
    Star(StarSynthesizer),
    Dense(DenseSampler),
}

impl Synthesizer {
    pub fn grid(&self) -> GridSpec {
        match self {
            Self::Circle(s) => *s.grid(),
            Self::Star(s) => *s.grid(),
            Self::Dense(s) => *s.matrix().grid(),
        }
    }

    pub fn oracle(&self) -> CovarianceOracle {
        match self {
            Self::Circle(s) => s.oracle().clone(),
            Self::Star(s) => s.oracle().clone(),
            Self::Dense(s) => CovarianceOracle::Dense(s.matrix().clone()),
        }
    }

    /// Draws `count` samples, consuming paired draws where the path offers them.
    pub fn for_each<R, F>(&self, rng: &mut R, count: usize, mut visit: F) -> Result<()>
    where
        R: Rng + ?Sized,
        F: FnMut(&FieldSample) -> Result<()>,
    {
        let mut left = count;
        while left > 0 {
            match self {
                Self::Circle(s) => {
                    let (a, b) = s.sample_pair(rng);
                    visit(&a)?;
                    if left > 1 {
                        visit(&b)?;
                    }
                    left -= left.min(2);
                }
                Self::Star(s) => {
                    let (a, b) = s.sample_pair(rng);
                    visit(&a)?;
                    if left > 1 {
                        visit(&b)?;
                    }
                    left -= left.min(2);
                }
                Self::Dense(s) => {
                    visit(&s.sample(rng))?;
                    left -= 1;
                }
            }
        }
        Ok(())
    }
}
