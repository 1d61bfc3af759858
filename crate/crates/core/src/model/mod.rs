//! MLP model: architecture, flat parameter layout, loss/gradient/HVP,
//! and the per-layer statistics the curvature builders consume.

mod mlp;
mod real;
mod stats;

pub use mlp::{
    accuracy, hvp, init_params, logits, loss_grad, loss_only, min_abs_preactivation, Activation,
    Batch, LayerSpan, MlpArch,
};
pub use real::{Dual, Real};
pub use stats::{fisher_diag, per_layer_stats, FisherMode, LayerMoments, PerLayerStats};

/// Flat model coordinates; layout is defined by [`MlpArch::layer_span`].
pub type ParamVector = Vec<f64>;
