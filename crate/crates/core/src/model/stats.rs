//! Per-layer second-moment statistics (Kronecker factors) and per-example
//! squared gradients (Fisher diagonal).

use super::mlp::{loss_grad_generic, Batch, MlpArch, Workspace};
use crate::error::Result;
use crate::tensor::{Matrix, Rng};
use serde::{Deserialize, Serialize};

/// Which labels back the Fisher estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FisherMode {
    /// Labels drawn from the model's own softmax: the Fisher proper.
    Sampled,
    /// Dataset labels: the "empirical Fisher".
    Empirical,
}

/// One layer's Kronecker factors: `a` is the second moment of the layer
/// input with a constant 1 appended for the bias, `g` the second moment of
/// the pre-activation gradient, both batch means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMoments {
    pub a: Matrix,
    pub g: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerLayerStats {
    pub layers: Vec<LayerMoments>,
}

fn label_for<RState>(mode: FisherMode, dataset_label: usize, draw: RState) -> usize
where
    RState: FnOnce() -> usize,
{
    match mode {
        FisherMode::Sampled => draw(),
        FisherMode::Empirical => dataset_label,
    }
}

fn sample_from_logits(logits: &[f64], rng: &mut Rng) -> usize {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    for (c, e) in exps.iter().enumerate() {
        acc += e;
        if u < acc {
            return c;
        }
    }
    logits.len() - 1
}

/// Batch-mean Kronecker factors `(A_l, G_l)` per layer.
pub fn per_layer_stats(
    arch: &MlpArch,
    w: &[f64],
    batch: &Batch,
    rng: &mut Rng,
    mode: FisherMode,
) -> Result<PerLayerStats> {
    // shape checks ride on loss_grad's validation path
    super::mlp::loss_only(arch, w, batch)?;
    let layers = arch.num_layers();
    let mut stats: Vec<LayerMoments> = (0..layers)
        .map(|l| LayerMoments {
            a: Matrix::zeros(arch.layer_sizes[l] + 1, arch.layer_sizes[l] + 1),
            g: Matrix::zeros(arch.layer_sizes[l + 1], arch.layer_sizes[l + 1]),
        })
        .collect();

    let mut ws: Workspace<f64> = Workspace::new(arch);
    let n = batch.len();
    let inv = 1.0 / n as f64;
    let mut abar: Vec<Vec<f64>> = (0..layers)
        .map(|l| vec![0.0; arch.layer_sizes[l] + 1])
        .collect();
    for e in 0..n {
        ws.forward(arch, w, batch.inputs.row(e));
        let label = label_for(mode, batch.labels[e], || {
            sample_from_logits(ws.acts.last().unwrap(), rng)
        });
        ws.loss_and_logit_grad(label);
        ws.backprop(arch, w);
        for l in 0..layers {
            let ab = &mut abar[l];
            ab[..arch.layer_sizes[l]].copy_from_slice(&ws.acts[l]);
            ab[arch.layer_sizes[l]] = 1.0;
            stats[l].a.add_outer(ab, inv);
            stats[l].g.add_outer(&ws.gs[l], inv);
        }
    }
    Ok(PerLayerStats { layers: stats })
}

/// Per-coordinate mean of squared per-example gradients: the Fisher
/// diagonal used by the EWC-style regularizer.
pub fn fisher_diag(
    arch: &MlpArch,
    w: &[f64],
    batch: &Batch,
    rng: &mut Rng,
    mode: FisherMode,
) -> Result<Vec<f64>> {
    super::mlp::loss_only(arch, w, batch)?;
    let layers = arch.num_layers();
    let mut out = vec![0.0; arch.param_dim()];
    let mut ws: Workspace<f64> = Workspace::new(arch);
    let n = batch.len();
    let inv = 1.0 / n as f64;
    for e in 0..n {
        ws.forward(arch, w, batch.inputs.row(e));
        let label = label_for(mode, batch.labels[e], || {
            sample_from_logits(ws.acts.last().unwrap(), rng)
        });
        ws.loss_and_logit_grad(label);
        ws.backprop(arch, w);
        for l in 0..layers {
            let span = arch.layer_span(l);
            let a_in = &ws.acts[l];
            let g = &ws.gs[l];
            for o in 0..span.fan_out {
                let go = g[o];
                let row =
                    &mut out[span.weight_index(o, 0)..span.weight_index(o, 0) + span.fan_in];
                for (s, &ai) in row.iter_mut().zip(a_in.iter()) {
                    let ge = go * ai;
                    *s += ge * ge * inv;
                }
                out[span.bias_index(o)] += go * go * inv;
            }
        }
    }
    Ok(out)
}

/// Exposes the generic path for callers that need per-example gradients
/// of the mean loss in one pass (test oracles).
pub fn mean_loss_grad_f64(arch: &MlpArch, w: &[f64], batch: &Batch) -> (f64, Vec<f64>) {
    loss_grad_generic(arch, w, batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mlp::{init_params, loss_grad};
    use crate::tensor::{kron_quadform, vec_ops};

    fn batch_of(inputs: &[Vec<f64>], labels: Vec<usize>) -> Batch {
        Batch::new(Matrix::from_rows(inputs).unwrap(), labels).unwrap()
    }

    #[test]
    fn single_example_single_layer_factors_are_exact_fisher() {
        // One linear layer, one example: A (x) G must equal the outer
        // product of the flattened per-example gradient.
        let arch = MlpArch::new(vec![3, 2], super::super::mlp::Activation::Relu).unwrap();
        let mut rng = Rng::new(5);
        let w = init_params(&arch, &mut rng);
        let batch = batch_of(&[vec![0.3, -1.2, 0.7]], vec![1]);
        let stats =
            per_layer_stats(&arch, &w, &batch, &mut Rng::new(0), FisherMode::Empirical).unwrap();
        let (_, grad) = loss_grad(&arch, &w, &batch).unwrap();

        // map the flat gradient into kron ordering (a index major, g index minor)
        let span = arch.layer_span(0);
        let p = span.fan_in + 1;
        let q = span.fan_out;
        let mut gk = vec![0.0; p * q];
        for o in 0..q {
            for i in 0..span.fan_in {
                gk[i * q + o] = grad[span.weight_index(o, i)];
            }
            gk[span.fan_in * q + o] = grad[span.bias_index(o)];
        }
        let mut rng2 = Rng::new(9);
        for _ in 0..5 {
            let v = rng2.normal_vec(p * q);
            let qf = kron_quadform(&stats.layers[0].a, &stats.layers[0].g, &v).unwrap();
            let exact = vec_ops::dot(&gk, &v).powi(2);
            assert!(
                (qf - exact).abs() <= 1e-10 * exact.abs().max(1.0),
                "kron {qf} vs exact {exact}"
            );
        }
    }

    #[test]
    fn factors_symmetric_psd() {
        let arch = MlpArch::new(vec![4, 5, 3], super::super::mlp::Activation::Tanh).unwrap();
        let mut rng = Rng::new(6);
        let w = init_params(&arch, &mut rng);
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            inputs.push(rng.normal_vec(4));
            labels.push(i % 3);
        }
        let batch = batch_of(&inputs, labels);
        let stats =
            per_layer_stats(&arch, &w, &batch, &mut Rng::new(1), FisherMode::Sampled).unwrap();
        for lm in &stats.layers {
            assert!(lm.a.symmetry_defect() < 1e-12);
            assert!(lm.g.symmetry_defect() < 1e-12);
            let (va, _) = crate::tensor::sym_eigen(&lm.a).unwrap();
            let (vg, _) = crate::tensor::sym_eigen(&lm.g).unwrap();
            assert!(va[0] > -1e-10, "A eigenvalue {}", va[0]);
            assert!(vg[0] > -1e-10, "G eigenvalue {}", vg[0]);
        }
    }

    #[test]
    fn zero_inputs_leave_only_bias_moment() {
        let arch = MlpArch::new(vec![3, 2], super::super::mlp::Activation::Relu).unwrap();
        let w = vec![0.0; arch.param_dim()];
        let batch = batch_of(&[vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]], vec![0, 1]);
        let stats =
            per_layer_stats(&arch, &w, &batch, &mut Rng::new(0), FisherMode::Empirical).unwrap();
        let a = &stats.layers[0].a;
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                let expect = if r == 3 && c == 3 { 1.0 } else { 0.0 };
                assert_eq!(a.get(r, c), expect);
            }
        }
    }

    #[test]
    fn fisher_diag_nonnegative_and_zero_at_zero_grad() {
        let arch = MlpArch::new(vec![2, 3, 2], super::super::mlp::Activation::Tanh).unwrap();
        let mut rng = Rng::new(8);
        let w = init_params(&arch, &mut rng);
        let batch = batch_of(&[vec![0.5, -0.5], vec![1.0, 0.2]], vec![0, 1]);
        let diag =
            fisher_diag(&arch, &w, &batch, &mut Rng::new(2), FisherMode::Sampled).unwrap();
        assert!(diag.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn logistic_fisher_closed_form() {
        // 1-parameter logistic: loss = log(1 + exp(-y w x)) realized as a
        // 2-class linear net with symmetric logits. At w=0 with x=2 the
        // Fisher of the logit parameterization is x^2 sigma(0) sigma(0) = 1.
        // Here the two-logit softmax with tied labels reproduces it via the
        // weight coordinate of class 1 against class 0.
        let arch = MlpArch::new(vec![1, 2], super::super::mlp::Activation::Relu).unwrap();
        let w = vec![0.0; arch.param_dim()];
        let batch = batch_of(&[vec![2.0]], vec![1]);
        let diag =
            fisher_diag(&arch, &w, &batch, &mut Rng::new(0), FisherMode::Empirical).unwrap();
        // grad wrt class-k weight: (p_k - [k==y]) x ; p = 0.5 each
        // squared: (0.5 * 2)^2 = 1.0 for both weight coordinates
        let span = arch.layer_span(0);
        assert!((diag[span.weight_index(0, 0)] - 1.0).abs() < 1e-12);
        assert!((diag[span.weight_index(1, 0)] - 1.0).abs() < 1e-12);
    }
}
