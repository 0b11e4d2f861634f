//! Dense tensor decompositions for hyperspectral image cubes.
//!
//! Three models are provided on top of a small N-way tensor kernel:
//!
//! - [`cpd`]: canonical polyadic decomposition by ALS, with an optional
//!   compression pipeline, the Kruskal uniqueness check and the core
//!   consistency diagnostic;
//! - [`lmlra`]: low multilinear rank (Tucker) approximation by truncated
//!   HOSVD and HOOI;
//! - [`btd`]: block term decomposition in rank-(L,L,1) and general form.
//!
//! Every iterative solver returns a [`DecompositionTrace`] with the residual
//! after each sweep. Modes and indices are 0-based throughout the API; the
//! text formats in [`hsi`] are 1-based.

pub mod btd;
pub mod cpd;
mod error;
pub mod hsi;
mod linalg;
pub mod lmlra;
mod model;
mod products;
mod random;
mod tensor;
mod trace;

pub use error::{Error, Result};
pub use model::{reconstruct, BlockTerm, BlockTermTensor, KruskalTensor, Model, TuckerTensor};
pub use products::{diag_tensor, khatri_rao, khatri_rao_chain, khatri_rao_except, kronecker, outer_rank1};
pub use tensor::{DenseTensor, Matrix};
pub use trace::{DecompositionTrace, StageError, StopReason};
