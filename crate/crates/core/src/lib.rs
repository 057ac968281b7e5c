//! Multi-scale phase congruency feature maps with automatic parameter tuning.
//!
//! The pipeline runs image → log-Gabor filter bank → per-orientation phase
//! congruency → maximum/minimum moments → combined cost map, and a
//! derivative-free box-constrained search picks the parameters that maximize
//! a determinant or matrix-norm criterion of that map.

// Domain checks are written as `!(x > lo)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criteria;
pub mod error;
pub mod fft;
pub mod filterbank;
pub mod imageio;
pub mod map;
pub mod moments;
pub mod optimizer;
pub mod pc;
pub mod selfcheck;
pub mod synthetic;

pub use error::{Error, Result};
pub use map::Map;
