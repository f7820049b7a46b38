use std::sync::Arc;

use super::{CovarianceOracle, FieldSample, TruncationVariance};
use crate::error::{invalid, Result};

/// Discrete mollifier taps (offset, weight) on the grid of spacing h:
/// weights ∝ (1 − (|s|/δ)²)³ for |s| < δ, normalized to unit mass.
pub fn mollifier_taps(h: f64, delta: f64, dim: usize) -> Vec<([i64; 2], f64)> {
    let reach = (delta / h).floor() as i64;
    let mut taps = Vec::new();
    let range2 = if dim == 2 { -reach..=reach } else { 0..=0 };
    for i in -reach..=reach {
        for j in range2.clone() {
            let s = h * ((i * i + j * j) as f64).sqrt();
            if s < delta {
                let w = (1.0 - (s / delta).powi(2)).powi(3);
                if w > 0.0 {
                    taps.push(([i, j], w));
                }
            }
        }
    }
    let total: f64 = taps.iter().map(|t| t.1).sum();
    for t in &mut taps {
        t.1 /= total;
    }
    taps
}

/// Periodic convolution of the field with a unit-mass bump of radius δ.
pub fn mollify(field: &FieldSample, delta: f64) -> Result<FieldSample> {
    let grid = *field.grid();
    let h = grid.spacing();
    if !(delta >= h) {
        return Err(invalid("delta", format!("mollification scale {delta} is below the grid spacing {h}")));
    }
    let taps = mollifier_taps(h, delta, grid.dim);
    let n = grid.points_per_axis as i64;
    let src = field.values();
    let wrap = |a: i64| a.rem_euclid(n) as usize;
    let values: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let (i, j) = if grid.dim == 1 { (idx as i64, 0) } else { (idx as i64 / n, idx as i64 % n) };
            taps.iter()
                .map(|(o, w)| {
                    let k = if grid.dim == 1 { wrap(i - o[0]) } else { wrap(i - o[0]) * n as usize + wrap(j - o[1]) };
                    w * src[k]
                })
                .sum()
        })
        .collect();

    let oracle = field.oracle().clone();
    let variance = if grid.dim == 1 {
        let taps1: Arc<Vec<(f64, f64)>> = Arc::new(taps.iter().map(|(o, w)| (o[0] as f64 * h, *w)).collect());
        let moll = CovarianceOracle::Mollified {
            base: Box::new(oracle.clone()),
            taps: taps1,
        };
        let var = if oracle.is_stationary() {
            TruncationVariance::Constant(moll.eval(0.0, 0.0)?)
        } else {
            let v: Result<Vec<f64>> = (0..grid.len())
                .map(|i| {
                    let x = grid.coords(i)[0];
                    moll.eval(x, x)
                })
                .collect();
            TruncationVariance::PerPoint(Arc::new(v?))
        };
        (var, moll)
    } else {
        // stationary radial oracles only in d = 2
        let mut s = 0.0;
        for (oa, wa) in &taps {
            for (ob, wb) in &taps {
                let dx = (oa[0] - ob[0]) as f64 * h;
                let dy = (oa[1] - ob[1]) as f64 * h;
                s += wa * wb * oracle.eval_distance(dx.hypot(dy))?;
            }
        }
        (TruncationVariance::Constant(s), oracle)
    };
    let (var, moll_oracle) = variance;
    FieldSample::new(grid, values, field.method(), var, moll_oracle)
}
