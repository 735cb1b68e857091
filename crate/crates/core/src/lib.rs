//! Bivariate quantum signal processing toolkit.
//!
//! Degree-bound calculators, M-QSP circuit synthesis and angle recovery,
//! optimization-landscape surveys, postselection-barrier diagnostics and a
//! time-dependent validation pipeline.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod angle_finding;
pub mod barriers;
pub mod degree_bounds;
pub mod error;
pub mod landscape;
pub mod linalg;
pub mod optim;
pub mod qsp_core;
pub mod seeds;
pub mod special_fns;
pub mod td_sim;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
