//! Minimal dense linear algebra, deterministic RNG, and spectral utilities.
//!
//! Everything here is plain `f64`. The theory checks downstream need
//! tolerances near 1e-8, which rules out single precision. No sparse
//! formats: curvature is only ever applied matrix-free or per-layer.

mod matrix;
mod rng;
mod spectral;
pub mod vec_ops;

pub use matrix::Matrix;
pub use rng::Rng;
pub use spectral::{kron_apply, kron_quadform, operator_norm, sym_eigen, sym_solve, OpNorm};
