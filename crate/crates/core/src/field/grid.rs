use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Regular grid on the box [0, extent)^d with `points_per_axis` points per axis.
///
/// Test functions live in the region of interest [0, region]^d; the rest of
/// the box is padding for periodic synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
    pub extent: f64,
    pub region: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, extent: f64, region: f64) -> Result<Self> {
        let g = Self {
            dim,
            points_per_axis,
            extent,
            region,
        };
        g.validate()?;
        Ok(g)
    }

    /// Unit circle [0, 1) with no padding.
    pub fn circle(points: usize) -> Result<Self> {
        Self::new(1, points, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(invalid("dimension", format!("expected 1 or 2, got {}", self.dim)));
        }
        if !self.points_per_axis.is_power_of_two() {
            return Err(invalid(
                "points-per-axis",
                format!("must be a power of two, got {}", self.points_per_axis),
            ));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(invalid("extent", format!("must be positive, got {}", self.extent)));
        }
        if !(self.region > 0.0 && self.region <= self.extent) {
            return Err(invalid("region", format!("must lie in (0, extent], got {}", self.region)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn padding(&self) -> f64 {
        self.extent - self.region
    }

    /// Coordinates of the flat (row-major) index; the second entry is 0 in d = 1.
    pub fn coords(&self, index: usize) -> [f64; 2] {
        let h = self.spacing();
        let n = self.points_per_axis;
        match self.dim {
            1 => [index as f64 * h, 0.0],
            _ => [(index / n) as f64 * h, (index % n) as f64 * h],
        }
    }

    /// Positions along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points_per_axis).map(|i| i as f64 * h).collect()
    }

    pub fn in_region(&self, index: usize) -> bool {
        let c = self.coords(index);
        c[..self.dim].iter().all(|&x| x <= self.region + 1e-12)
    }

    /// Exact equality of every field; used to guard grid mismatches.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }
}
