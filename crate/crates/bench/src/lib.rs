//! Harness comparing CPD, LMLRA and BTD decompositions of hyperspectral
//! cubes: per-method residual traces, relative errors, iteration counts
//! and a ranked verdict.

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use error::BenchError;
