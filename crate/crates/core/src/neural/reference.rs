//! Slow reference implementations used as oracles in tests.
//!
//! Everything here recomputes the model with explicit per-element arithmetic,
//! independent of the vectorized forward and BPTT paths, so the two can be
//! checked against each other. Not intended for production use.

use crate::dataset::Label;
use crate::features::FeatureSequence;

use super::lstm::LstmParams;
use super::model::{cross_entropy, model_forward, Model, ParamSet};

/// One direction over `inputs` (processing order) with scalar loops only.
fn scalar_direction(p: &LstmParams, inputs: &[&[f64]]) -> Vec<Vec<f64>> {
    let hidden = p.hidden_size();
    let mut h_prev = vec![0.0; hidden];
    let mut c_prev = vec![0.0; hidden];
    let mut outputs = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let mut h = vec![0.0; hidden];
        let mut c = vec![0.0; hidden];
        for j in 0..hidden {
            let mut f_pre = p.b_f[j];
            let mut i_pre = p.b_i[j];
            let mut o_pre = p.b_o[j];
            let mut c_pre = p.b_c[j];
            for (k, &xk) in x.iter().enumerate() {
                f_pre += p.w_f.at(j, k) * xk;
                i_pre += p.w_i.at(j, k) * xk;
                o_pre += p.w_o.at(j, k) * xk;
                c_pre += p.w_c.at(j, k) * xk;
            }
            for (k, &hk) in h_prev.iter().enumerate() {
                f_pre += p.u_f.at(j, k) * hk;
                i_pre += p.u_i.at(j, k) * hk;
                o_pre += p.u_o.at(j, k) * hk;
                c_pre += p.u_c.at(j, k) * hk;
            }
            let f = 1.0 / (1.0 + (-f_pre).exp());
            let i = 1.0 / (1.0 + (-i_pre).exp());
            let o = 1.0 / (1.0 + (-o_pre).exp());
            let c_bar = c_pre.tanh();
            c[j] = f * c_prev[j] + i * c_bar;
            h[j] = o * c[j].tanh();
        }
        outputs.push(h.clone());
        h_prev = h;
        c_prev = c;
    }
    outputs
}

/// End-to-end forward pass recomputed with scalar loops.
pub fn scalar_model_forward(m: &Model, seq: &FeatureSequence) -> Vec<f64> {
    let t_len = seq.seq_len();
    let p = &m.params;

    let inputs: Vec<&[f64]> = seq.vectors.iter().map(|v| v.values.as_slice()).collect();
    let rev_inputs: Vec<&[f64]> = inputs.iter().rev().copied().collect();
    let h1f = scalar_direction(&p.l1_fwd, &inputs);
    let h1b = scalar_direction(&p.l1_bwd, &rev_inputs);

    let l1_out: Vec<Vec<f64>> = (0..t_len)
        .map(|t| {
            let mut v = h1f[t].clone();
            v.extend_from_slice(&h1b[t_len - 1 - t]);
            v
        })
        .collect();

    let l2_in: Vec<&[f64]> = l1_out.iter().map(Vec::as_slice).collect();
    let l2_rev: Vec<&[f64]> = l2_in.iter().rev().copied().collect();
    let h2f = scalar_direction(&p.l2_fwd, &l2_in);
    let h2b = scalar_direction(&p.l2_bwd, &l2_rev);

    let mut readout = h2f[t_len - 1].clone();
    readout.extend_from_slice(&h2b[t_len - 1]);

    let mut logits = vec![0.0; m.config.num_classes];
    for (k, logit) in logits.iter_mut().enumerate() {
        let mut acc = p.dense_b[k];
        for (j, &r) in readout.iter().enumerate() {
            acc += p.dense_w.at(k, j) * r;
        }
        *logit = acc;
    }

    let exps: Vec<f64> = logits.iter().map(|&z| z.exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Central finite differences of the cross-entropy loss with respect to
/// every parameter.
pub fn finite_difference_gradients(
    m: &Model,
    seq: &FeatureSequence,
    label: Label,
    step: f64,
) -> ParamSet {
    let class = label.class_index().expect("labeled sequence");
    let loss_at = |model: &Model| -> f64 {
        cross_entropy(&model_forward(model, seq).unwrap(), class)
    };

    let mut work = m.clone();
    let mut grads = ParamSet::zeros(&m.config);
    let n_tensors = grads.tensors().len();
    for t in 0..n_tensors {
        let len = grads.tensors()[t].len();
        for j in 0..len {
            let original = work.params.tensors()[t][j];
            work.params.tensors_mut()[t][j] = original + step;
            let plus = loss_at(&work);
            work.params.tensors_mut()[t][j] = original - step;
            let minus = loss_at(&work);
            work.params.tensors_mut()[t][j] = original;
            grads.tensors_mut()[t][j] = (plus - minus) / (2.0 * step);
        }
    }
    grads
}
