//! Sparse inverse-problem toolkit: LASSO and the Variational Garrote on a
//! shared regularized regression framework, with the forward operators,
//! datasets and sweep harness used to compare them.

pub mod data;
pub mod error;
pub mod experiments;
pub mod operators;
pub mod optim;
pub mod raster;
pub mod solvers;
pub mod transforms;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
