//! Classical emulation of scalar, block and two-sided Lanczos recursions on
//! spin-½ chains, with exact-diagonalization oracles.

pub mod block;
pub mod dense;
pub mod error;
pub mod incremental;
pub mod lanczos;
pub mod matrix_io;
pub mod noise;
pub mod nonhermitian;
pub mod operator;
pub mod spin;
pub mod state;
pub mod tridiagonal;

pub use error::{Error, Result};
pub use operator::{DenseOperator, LinearOperator, TransposeOperator};
pub use state::StateVector;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
