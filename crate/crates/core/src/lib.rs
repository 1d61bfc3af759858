//! Quadratic-proxy continual learning toolkit.
//!
//! Trains a model over a sequence of tasks while approximating each
//! finished task's loss by its second-order Taylor expansion around the
//! end-of-task parameters. The curvature term is pluggable (exact
//! Hessian, diagonal Fisher, Kronecker-factored Fisher, or synaptic
//! importance), and a theory lab numerically checks the optimization and
//! generalization guarantees that hold for this family of methods.

pub mod curvature;
pub mod error;
pub mod model;
pub mod proxy;
pub mod record;
pub mod tasks;
pub mod tensor;
pub mod theory;
pub mod trainer;

pub use error::{Error, Result};
