use std::io::{self, Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CovarianceOracle, GridSpec};
use crate::error::{invalid, ChaosError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SynthesisMethod {
    CircleSeries,
    LayeredStar,
    DenseFactor,
}

impl SynthesisMethod {
    pub fn tag(&self) -> u8 {
        match self {
            Self::CircleSeries => 0,
            Self::LayeredStar => 1,
            Self::DenseFactor => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Self::CircleSeries),
            1 => Some(Self::LayeredStar),
            2 => Some(Self::DenseFactor),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::CircleSeries => "circle-series",
            Self::LayeredStar => "layered-star",
            Self::DenseFactor => "dense-factor",
        }
    }
}

/// Variance of the synthesized approximation at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum TruncationVariance {
    Constant(f64),
    PerPoint(Arc<Vec<f64>>),
}

impl TruncationVariance {
    pub fn at(&self, index: usize) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::PerPoint(v) => v[index],
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }
}

/// A realization of a real Gaussian field on a grid.
#[derive(Debug, Clone)]
pub struct FieldSample {
    grid: GridSpec,
    values: Vec<f64>,
    method: SynthesisMethod,
    variance: TruncationVariance,
    oracle: CovarianceOracle,
    fingerprint: u64,
}

impl FieldSample {
    /// Checked constructor: values must be finite and match the grid size.
    pub fn new(
        grid: GridSpec,
        values: Vec<f64>,
        method: SynthesisMethod,
        variance: TruncationVariance,
        oracle: CovarianceOracle,
    ) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(ChaosError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ChaosError::Numerical(format!("non-finite field value at index {i}")));
        }
        if let TruncationVariance::PerPoint(v) = &variance {
            if v.len() != grid.len() {
                return Err(invalid("truncation-variance", "length differs from grid size"));
            }
        }
        Ok(Self::from_parts(grid, values, method, variance, oracle))
    }

    pub(crate) fn from_parts(
        grid: GridSpec,
        values: Vec<f64>,
        method: SynthesisMethod,
        variance: TruncationVariance,
        oracle: CovarianceOracle,
    ) -> Self {
        let fingerprint = fingerprint(&values);
        Self {
            grid,
            values,
            method,
            variance,
            oracle,
            fingerprint,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> SynthesisMethod {
        self.method
    }

    pub fn variance(&self) -> &TruncationVariance {
        &self.variance
    }

    pub fn oracle(&self) -> &CovarianceOracle {
        &self.oracle
    }

    /// Hash of the values, used to tie derived quantities to this sample.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Binary layout: dimension (u32), points-per-axis (u32), extent (f64),
    /// method tag (u8), then row-major values (f64); all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.grid.dim as u32).to_le_bytes())?;
        w.write_all(&(self.grid.points_per_axis as u32).to_le_bytes())?;
        w.write_all(&self.grid.extent.to_le_bytes())?;
        w.write_all(&[self.method.tag()])?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(17 + 8 * self.values.len());
        self.write_binary(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// CSV with index columns (`i` or `i,j`) and `value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.grid.points_per_axis;
        if self.grid.dim == 1 {
            writeln!(w, "i,value")?;
            for (i, v) in self.values.iter().enumerate() {
                writeln!(w, "{i},{v}")?;
            }
        } else {
            writeln!(w, "i,j,value")?;
            for (idx, v) in self.values.iter().enumerate() {
                writeln!(w, "{},{},{v}", idx / n, idx % n)?;
            }
        }
        Ok(())
    }
}

/// Header and values read back from the binary layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub dim: usize,
    pub points_per_axis: usize,
    pub extent: f64,
    pub method: SynthesisMethod,
    pub values: Vec<f64>,
}

pub fn read_field_binary<R: Read>(mut r: R) -> io::Result<FieldRecord> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let points = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let extent = f64::from_le_bytes(b8);
    r.read_exact(&mut b1)?;
    let method = SynthesisMethod::from_tag(b1[0])
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "unknown method tag"))?;
    let count = points
        .checked_pow(dim as u32)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "grid size overflow"))?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok(FieldRecord {
        dim,
        points_per_axis: points,
        extent,
        method,
        values,
    })
}

fn fingerprint(values: &[f64]) -> u64 {
    // FNV-1a over the bit patterns
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}
