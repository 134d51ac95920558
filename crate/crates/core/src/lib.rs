//! Unique ergodicity of the nonlinear filter for finite hidden Markov models.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: model files, validation and Markov-chain primitives.
//! * [`filtering`]: the filter recursion, path simulation, scaled products.
//! * [`simplex_kernel`]: the filter's transition kernel on atomic measures.
//! * [`conditions`]: checkers and certificates for the sufficient conditions.
//! * [`lab`]: stability, occupation and entropy experiments and the verdict.

pub mod conditions;
pub mod filtering;
pub mod lab;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod simplex_kernel;
pub mod tolerances;

pub use filtering::{FilterError, FilterTrace, ObsWord, PathSample, ScaledMatrix};
pub use linalg::Matrix;
pub use model::{HmmModel, ModelError, SimplexVector, ValidationReport};
pub use simplex_kernel::{AtomicMeasure, KernelConfig, KernelError};

use thiserror::Error;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Condition(#[from] conditions::ConditionError),
    #[error(transparent)]
    Lab(#[from] lab::LabError),
}
