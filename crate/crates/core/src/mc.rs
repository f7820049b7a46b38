//! Monte Carlo driver over synthesized fields.

use crate::error::Result;
use crate::field::{FieldSample, SynthesisSpec};
use crate::rng::ChainPlan;

/// Applies `per_sample` to `plan.samples` field realizations, chains in
/// parallel, results concatenated in chain order.
pub fn map_samples<T, F>(spec: &SynthesisSpec, plan: &ChainPlan, per_sample: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&FieldSample) -> Result<T> + Sync,
{
    let synth = spec.build()?;
    plan.run(|_, rng, n| {
        let mut out = Vec::with_capacity(n);
        synth.for_each(rng, n, |s| {
            out.push(per_sample(s)?);
            Ok(())
        })?;
        Ok(out)
    })
}
