//! Energy-aware placement of distributed DNN training over a mobile, edge
//! and cloud continuum.
//!
//! The pipeline ranks candidate instance trees by processing load, maps
//! each onto physical nodes with a delay-aware Steiner tree over an expanded
//! graph, then trims data and compute with a continuous refinement step.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod error;
pub mod harness;
pub mod mapper;
pub mod model;
pub mod perf;
pub mod refiner;

pub use error::{Error, Result};
