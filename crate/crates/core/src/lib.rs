//! Toolkit for analyzing quantum process matrices: validity and signaling
//! structure, causal correlations, and causal (non)separability.
//!
//! The crate is organized bottom-up:
//!
//! - [`qlinalg`]: dense complex linear algebra, tensor slot bookkeeping, the
//!   Hilbert-Schmidt operator basis, Hermitian eigendecomposition.
//! - [`choi`]: Choi-Jamiolkowski operators of quantum instruments.
//! - [`procmat`]: process matrices, term-type analysis, validity and
//!   signaling checks, reduction and conditioning.
//! - [`correlations`]: multipartite probability tables, signaling between
//!   subsets, reduced and conditional processes, fixed causal configurations.
//! - [`polytope`]: linear programming over causal correlation polytopes,
//!   causal game bounds, seesaw optimization of quantum strategies.
//! - [`convexsep`]: convex feasibility tests for causal separability and
//!   extensible causal separability, with certificates.
//! - [`gallery`]: reference processes (quantum switch, OCB matrix and its
//!   tripartite variants) and end-to-end analysis pipelines.
//! - [`cli`]: the `causality-kit` command line interface.
//!
//! All randomized routines take explicit seeds; reports serialize to stable
//! JSON via serde.

pub mod choi;
pub mod cli;
pub mod config;
pub mod convexsep;
pub mod correlations;
pub mod gallery;
pub mod io;
pub mod polytope;
pub mod procmat;
pub mod qlinalg;
pub mod suite;

pub use config::Tolerances;
pub use qlinalg::{ComplexMatrix, HSIndex, TensorSpace};

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
