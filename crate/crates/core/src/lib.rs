//! ℓᵖ-minimal generalized inverses of wide matrices and the deterministic
//! predictions for the size of their Frobenius norms.

pub mod dense;
pub mod error;
pub mod experiments;
pub mod ginv;
pub mod theory;

pub use dense::{mpp, sample_matrix, DenseMatrix, EnsembleKind, RngStream};
pub use error::{Error, Result};
pub use ginv::{lp_min_ginv, Backend, GinvResult, SolverOptions};
