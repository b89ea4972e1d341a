//! Orphan-target affinity prediction by corresponding projections.
//!
//! Supervised SVR models of related targets are combined into a model for a
//! target without labelled ligands, such that the orphan model's projections
//! onto the supervised models mirror the target similarities.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod cp;
pub mod data;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod numerics;
pub mod svr;

pub use error::{Error, Result};
