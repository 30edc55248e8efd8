//! Hawkes processes with general kernels: resolvent and functional solvers, samplers,
//! scaling-limit reports and distance metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod limits;
pub mod math;
pub mod metrics;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod volterra;

pub use error::{HawkesError, Result};

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
