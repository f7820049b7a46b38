//! Gaussian field synthesis with covariance oracles for every path.

mod circle;
mod dense;
mod grid;
mod mollify;
mod oracle;
mod sample;
mod seed;
mod star;
mod synth;

pub use circle::{
    circle_cov, circle_offset, circle_truncated_cov, circle_truncated_variance, sample_circle_field, CircleModeSet,
    CircleSynthesizer,
};
pub use dense::{sample_dense, DenseSampler, PSD_REJECT_TOLERANCE};
pub use grid::GridSpec;
pub use mollify::{mollifier_taps, mollify};
pub use oracle::CovarianceOracle;
pub use sample::{read_field_binary, FieldRecord, FieldSample, SynthesisMethod, TruncationVariance};
pub use seed::{seed_covariance_default, SeedCovariance, DEFAULT_BUMP_ORDER};
pub use star::{
    cov_tail_bounds_check, cov_tail_distance, cov_tail_rescaled_distance, cov_y_delta, cov_y_delta_distance,
    layered_cov_distance, layered_spectral_density, sample_star_field, tail_gap_bound, Layer, LayeredNoiseParams,
    StarSynthesizer, TailMargins, DEFAULT_LAYERS_PER_UNIT, MIN_LAYERS_PER_UNIT, U_QUADRATURE_TOL,
};
pub use synth::{SynthesisSpec, Synthesizer};
