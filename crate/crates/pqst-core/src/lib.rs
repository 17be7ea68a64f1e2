//! # pqst-core
//!
//! Parallelized Bayesian quantum state tomography.
//!
//! Reconstructs a quantum state from Pauli measurement counts by sampling the
//! posterior over density matrices with many independent adaptive pCN
//! Metropolis–Hastings chains, pooling all chains into a Bayesian mean
//! estimate, and quantifying convergence with autocorrelation-based
//! diagnostics.
//!
//! The pipeline, bottom to top:
//!
//! - [`qmatrix`]: dense complex matrix kernels, density-matrix metrics.
//! - [`bures`]: the map from a real parameter vector to a Bures-distributed
//!   density matrix, plus prior sampling.
//! - [`measurement`]: Pauli POVMs, outcome probabilities, multinomial count
//!   simulation, and the counts-file schema.
//! - [`posterior`]: multinomial log-likelihood of a parameter vector.
//! - [`pcn`]: one adaptive preconditioned Crank–Nicolson chain.
//! - [`runner`]: parallel execution of independent chains, sample
//!   persistence, and pooled estimators.
//! - [`diagnostics`]: ACF, integrated autocorrelation time, effective sample
//!   size, and error-scaling reports.

pub mod bures;
pub mod diagnostics;
mod error;
pub mod measurement;
pub mod pcn;
pub mod posterior;
pub mod qmatrix;
pub mod runner;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Deterministic generator used by every sampling routine in this crate.
///
/// ChaCha with a fixed seed produces the same stream on all platforms, which
/// makes chain outputs and simulated counts bit-reproducible.
pub type ChainRng = rand_chacha::ChaCha8Rng;
