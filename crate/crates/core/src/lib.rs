//! Device models, load statistics and synthetic high-frequency current
//! generation for non-intrusive load monitoring of commercial buildings.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs (and of an explicit seed for the samplers), so the
//! IO-bound pieces (file formats, manifests, CLI) live in the `loadforge`
//! companion crate.
//!
//! Layout:
//!
//! * [`factorize`]: semi-non-negative matrix factorization (signatures times
//!   nonnegative activations), the Lawson-Hanson solver it relies on, signature
//!   normalization against the mains voltage and component-count selection.
//! * [`stats`]: power from current, power derivative, resampling, lagged
//!   autocorrelation, kurtosis, entropy, Laplace scale and THD.
//! * [`genmodel`]: time partitions, on/off Markov chains, activation templates,
//!   ARMA log-noise, Dirichlet mixtures and signature sampling.
//! * [`simulate`]: device, category and building synthesis.
//!
//! Matrix convention: a current matrix is `N x T` (samples per period by
//! periods), signatures are `N x K`, activations are `K x T`, and the model is
//! `I ~ S * A`.

#![no_std]
// `!(x > 0.0)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod factorize;
pub mod genmodel;
pub mod linalg;
pub mod nnls;
pub mod seed;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use factorize::{CurrentMatrix, FactorModel, SignatureBank, SolverOptions};
pub use linalg::Matrix;
pub use stats::PowerSeries;
