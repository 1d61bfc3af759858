//! Feedforward MLP: forward, exact backprop, Hessian-vector products.
//!
//! Parameters live in one flat vector, layer-major, each layer's weights
//! (row-major, `[out][in]`) followed by its bias. The network code is
//! generic over [`Real`] so the same forward/backward pass produces
//! gradients (on `f64`) and Hessian-vector products (on [`Dual`]).

use super::real::{Dual, Real};
use crate::error::{Error, Result};
use crate::tensor::{vec_ops, Matrix, Rng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    /// Benchmark activation; non-smooth at zero.
    Relu,
    /// Smooth alternative for theory checks that assume Hessian-Lipschitz losses.
    Tanh,
}

/// Architecture of a fully connected network: layer sizes from input to
/// logits, hidden activation, identity output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArch {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
}

/// Location of one layer's parameters inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpan {
    pub offset: usize,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl LayerSpan {
    #[inline]
    pub fn weight_index(&self, out: usize, inp: usize) -> usize {
        self.offset + out * self.fan_in + inp
    }
    #[inline]
    pub fn bias_index(&self, out: usize) -> usize {
        self.offset + self.fan_in * self.fan_out + out
    }
    #[inline]
    pub fn len(&self) -> usize {
        (self.fan_in + 1) * self.fan_out
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
}

impl MlpArch {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArg(format!(
                "MlpArch needs >= 2 positive layer sizes, got {layer_sizes:?}"
            )));
        }
        Ok(MlpArch {
            layer_sizes,
            activation,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Total parameter count: sum of (fan_in + 1) * fan_out over layers.
    pub fn param_dim(&self) -> usize {
        (0..self.num_layers()).map(|l| self.layer_span(l).len()).sum()
    }

    pub fn layer_span(&self, layer: usize) -> LayerSpan {
        let mut offset = 0;
        for l in 0..layer {
            offset += (self.layer_sizes[l] + 1) * self.layer_sizes[l + 1];
        }
        LayerSpan {
            offset,
            fan_in: self.layer_sizes[layer],
            fan_out: self.layer_sizes[layer + 1],
        }
    }
}

/// A labelled batch: inputs are rows, labels are class indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Matrix, labels: Vec<usize>) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::InvalidArg("empty batch".into()));
        }
        if inputs.rows() != labels.len() {
            return Err(Error::dim(
                "Batch::new",
                format!("{} input rows vs {} labels", inputs.rows(), labels.len()),
            ));
        }
        Ok(Batch { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Sub-batch picked by example indices (used for minibatching).
    pub fn select(&self, idx: &[usize]) -> Batch {
        let cols = self.inputs.cols();
        let mut m = Matrix::zeros(idx.len(), cols);
        let mut labels = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            m.row_mut(r).copy_from_slice(self.inputs.row(i));
            labels.push(self.labels[i]);
        }
        Batch { inputs: m, labels }
    }

    fn check_against(&self, arch: &MlpArch) -> Result<()> {
        if self.inputs.cols() != arch.input_dim() {
            return Err(Error::dim(
                "batch",
                format!("input dim {} vs arch {}", self.inputs.cols(), arch.input_dim()),
            ));
        }
        if let Some(&bad) = self.labels.iter().find(|&&y| y >= arch.output_dim()) {
            return Err(Error::InvalidArg(format!(
                "label {bad} out of range for {} classes",
                arch.output_dim()
            )));
        }
        Ok(())
    }
}

/// Fresh parameters: weights ~ N(0, 1/fan_in), biases zero, drawn in flat
/// index order so a fixed seed gives an identical vector everywhere.
pub fn init_params(arch: &MlpArch, rng: &mut Rng) -> Vec<f64> {
    let mut w = vec![0.0; arch.param_dim()];
    for l in 0..arch.num_layers() {
        let span = arch.layer_span(l);
        let s = 1.0 / (span.fan_in as f64).sqrt();
        for o in 0..span.fan_out {
            for i in 0..span.fan_in {
                w[span.weight_index(o, i)] = rng.normal() * s;
            }
        }
    }
    w
}

/// Per-example working buffers, reused across the batch loop.
pub(crate) struct Workspace<R: Real> {
    /// acts[0] is the input; acts[l+1] the output of layer l (logits for the last).
    pub acts: Vec<Vec<R>>,
    /// gs[l] is d(loss)/d(pre-activation of layer l).
    pub gs: Vec<Vec<R>>,
    probs: Vec<R>,
}

impl<R: Real> Workspace<R> {
    pub fn new(arch: &MlpArch) -> Self {
        let acts = arch.layer_sizes.iter().map(|&s| vec![R::zero(); s]).collect();
        let gs = (0..arch.num_layers())
            .map(|l| vec![R::zero(); arch.layer_sizes[l + 1]])
            .collect();
        Workspace {
            acts,
            gs,
            probs: vec![R::zero(); arch.output_dim()],
        }
    }

    pub fn forward(&mut self, arch: &MlpArch, w: &[R], x: &[f64]) {
        for (a, &xi) in self.acts[0].iter_mut().zip(x) {
            *a = R::from_f64(xi);
        }
        let layers = arch.num_layers();
        for l in 0..layers {
            let span = arch.layer_span(l);
            let (lo, hi) = self.acts.split_at_mut(l + 1);
            let a_in = &lo[l];
            let a_out = &mut hi[0];
            for o in 0..span.fan_out {
                let row = &w[span.weight_index(o, 0)..span.weight_index(o, 0) + span.fan_in];
                let mut z = w[span.bias_index(o)];
                for (wi, ai) in row.iter().zip(a_in.iter()) {
                    z = z + *wi * *ai;
                }
                a_out[o] = if l < layers - 1 {
                    match arch.activation {
                        Activation::Relu => z.relu(),
                        Activation::Tanh => z.tanh(),
                    }
                } else {
                    z
                };
            }
        }
    }

    /// Mean-softmax cross-entropy of the current logits against `label`;
    /// leaves d(loss)/d(logits) in the last `gs` buffer.
    pub fn loss_and_logit_grad(&mut self, label: usize) -> R {
        let logits = self.acts.last().unwrap();
        let mut m = logits[0];
        for &z in &logits[1..] {
            if z.value() > m.value() {
                m = z;
            }
        }
        let mut s = R::zero();
        for (p, &z) in self.probs.iter_mut().zip(logits.iter()) {
            *p = (z - m).exp();
            s = s + *p;
        }
        let loss = m + s.ln() - logits[label];
        let g_out = self.gs.last_mut().unwrap();
        for (g, &p) in g_out.iter_mut().zip(self.probs.iter()) {
            *g = p / s;
        }
        g_out[label] = g_out[label] - R::one();
        loss
    }

    /// Fills gs[l] for every layer below the output, assuming the output
    /// layer's gs is already set.
    pub fn backprop(&mut self, arch: &MlpArch, w: &[R]) {
        for l in (1..arch.num_layers()).rev() {
            let span = arch.layer_span(l);
            let (g_lo, g_hi) = self.gs.split_at_mut(l);
            let g_out = &g_hi[0];
            let g_in = &mut g_lo[l - 1];
            for g in g_in.iter_mut() {
                *g = R::zero();
            }
            for o in 0..span.fan_out {
                let row = &w[span.weight_index(o, 0)..span.weight_index(o, 0) + span.fan_in];
                let go = g_out[o];
                for (gi, wi) in g_in.iter_mut().zip(row.iter()) {
                    *gi = *gi + *wi * go;
                }
            }
            let a = &self.acts[l];
            match arch.activation {
                Activation::Relu => {
                    for (gi, ai) in g_in.iter_mut().zip(a.iter()) {
                        *gi = *gi * ai.relu_grad();
                    }
                }
                Activation::Tanh => {
                    for (gi, ai) in g_in.iter_mut().zip(a.iter()) {
                        *gi = *gi * (R::one() - *ai * *ai);
                    }
                }
            }
        }
    }

    /// Adds this example's parameter gradient into `out`.
    pub fn accumulate_grad(&self, arch: &MlpArch, out: &mut [R]) {
        for l in 0..arch.num_layers() {
            let span = arch.layer_span(l);
            let a_in = &self.acts[l];
            let g = &self.gs[l];
            for o in 0..span.fan_out {
                let go = g[o];
                let row =
                    &mut out[span.weight_index(o, 0)..span.weight_index(o, 0) + span.fan_in];
                for (wi, ai) in row.iter_mut().zip(a_in.iter()) {
                    *wi = *wi + go * *ai;
                }
                out[span.bias_index(o)] = out[span.bias_index(o)] + go;
            }
        }
    }
}

fn check_w(arch: &MlpArch, w: &[f64]) -> Result<()> {
    if w.len() != arch.param_dim() {
        return Err(Error::dim(
            "params",
            format!("{} coords vs arch dim {}", w.len(), arch.param_dim()),
        ));
    }
    Ok(())
}

pub(crate) fn loss_grad_generic<R: Real>(
    arch: &MlpArch,
    w: &[R],
    batch: &Batch,
) -> (R, Vec<R>) {
    let mut ws = Workspace::new(arch);
    let mut grad = vec![R::zero(); w.len()];
    let mut total = R::zero();
    for e in 0..batch.len() {
        ws.forward(arch, w, batch.inputs.row(e));
        let loss = ws.loss_and_logit_grad(batch.labels[e]);
        ws.backprop(arch, w);
        ws.accumulate_grad(arch, &mut grad);
        total = total + loss;
    }
    let inv = 1.0 / batch.len() as f64;
    for g in &mut grad {
        *g = g.scale(inv);
    }
    (total.scale(inv), grad)
}

/// Mean softmax cross-entropy over the batch and its exact gradient.
pub fn loss_grad(arch: &MlpArch, w: &[f64], batch: &Batch) -> Result<(f64, Vec<f64>)> {
    check_w(arch, w)?;
    batch.check_against(arch)?;
    let (loss, grad) = loss_grad_generic(arch, w, batch);
    let gsum: f64 = grad.iter().map(|g| g.abs()).sum();
    if !loss.is_finite() || !gsum.is_finite() {
        return Err(Error::NonFinite("loss_grad".into()));
    }
    Ok((loss, grad))
}

/// Mean loss without the gradient.
pub fn loss_only(arch: &MlpArch, w: &[f64], batch: &Batch) -> Result<f64> {
    check_w(arch, w)?;
    batch.check_against(arch)?;
    let mut ws: Workspace<f64> = Workspace::new(arch);
    let mut total = 0.0;
    for e in 0..batch.len() {
        ws.forward(arch, w, batch.inputs.row(e));
        total += ws.loss_and_logit_grad(batch.labels[e]);
    }
    let loss = total / batch.len() as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss_only".into()));
    }
    Ok(loss)
}

/// Exact Hessian-vector product of the batch-mean loss, computed as the
/// directional derivative of the gradient (forward-over-reverse).
pub fn hvp(arch: &MlpArch, w: &[f64], batch: &Batch, v: &[f64]) -> Result<Vec<f64>> {
    check_w(arch, w)?;
    check_w(arch, v)?;
    batch.check_against(arch)?;
    let wd: Vec<Dual> = w.iter().zip(v).map(|(&wi, &vi)| Dual::new(wi, vi)).collect();
    let (_, grad) = loss_grad_generic(arch, &wd, batch);
    let out: Vec<f64> = grad.iter().map(|g| g.d).collect();
    if !vec_ops::all_finite(&out) {
        return Err(Error::NonFinite("hvp".into()));
    }
    Ok(out)
}

/// Logits for a single input.
pub fn logits(arch: &MlpArch, w: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_w(arch, w)?;
    if x.len() != arch.input_dim() {
        return Err(Error::dim("logits", "input dim"));
    }
    let mut ws: Workspace<f64> = Workspace::new(arch);
    ws.forward(arch, w, x);
    Ok(ws.acts.last().unwrap().clone())
}

/// Classification accuracy; argmax ties break toward the lower class index.
pub fn accuracy(arch: &MlpArch, w: &[f64], batch: &Batch) -> Result<f64> {
    check_w(arch, w)?;
    batch.check_against(arch)?;
    let mut ws: Workspace<f64> = Workspace::new(arch);
    let mut hits = 0usize;
    for e in 0..batch.len() {
        ws.forward(arch, w, batch.inputs.row(e));
        let logits = ws.acts.last().unwrap();
        let mut best = 0usize;
        for (c, &z) in logits.iter().enumerate().skip(1) {
            if z > logits[best] {
                best = c;
            }
        }
        if best == batch.labels[e] {
            hits += 1;
        }
    }
    Ok(hits as f64 / batch.len() as f64)
}

/// Smallest |pre-activation| over hidden layers and batch examples.
/// Finite-difference oracles sample parameters until this clears a margin,
/// keeping ReLU kinks away from the probe.
pub fn min_abs_preactivation(arch: &MlpArch, w: &[f64], batch: &Batch) -> Result<f64> {
    check_w(arch, w)?;
    batch.check_against(arch)?;
    let mut ws: Workspace<f64> = Workspace::new(arch);
    let mut min_abs = f64::INFINITY;
    for e in 0..batch.len() {
        // recompute pre-activations layer by layer
        let x = batch.inputs.row(e);
        ws.forward(arch, w, x);
        for l in 0..arch.num_layers() - 1 {
            let span = arch.layer_span(l);
            let a_in = &ws.acts[l];
            for o in 0..span.fan_out {
                let mut z = w[span.bias_index(o)];
                for i in 0..span.fan_in {
                    z += w[span.weight_index(o, i)] * a_in[i];
                }
                min_abs = min_abs.min(z.abs());
            }
        }
    }
    Ok(min_abs)
}
