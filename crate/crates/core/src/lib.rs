//! Numerical laboratory for log-correlated Gaussian fields and imaginary
//! multiplicative chaos.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod decomposition;
pub mod error;
pub mod fft;
pub mod malliavin;
pub mod field;
pub mod mc;
pub mod moments;
pub mod onsager;
pub mod operator;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{ChaosError, Result};
