//! The classifier: two stacked bidirectional LSTM layers over the feature
//! sequence, a dense softmax head, cross-entropy loss, and exact gradients
//! via backpropagation through time.
//!
//! Layer 1 maps D-dimensional inputs to 2H per step (forward and backward
//! halves concatenated); layer 2 maps 2H to 2H. The readout concatenates the
//! terminal state of each direction of layer 2 - the forward state at t = T
//! and the backward state at t = 1 - so both directions contribute their
//! full-context summary. The dense head maps 2H to 2 class logits.

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::rng::Rng;

use super::lstm::{run_direction, CellCache, LstmParams};
use super::mat::Mat;

/// Class index of the positive (preictal) class in logits and probabilities.
pub const PREICTAL_CLASS: usize = 1;

/// Probabilities are clamped to this floor before the log in the loss.
pub const PROB_CLAMP: f64 = 1e-12;

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    /// Features per timestep (144 for 16 channels x 9 features).
    pub input_dim: usize,
    /// LSTM state width per direction.
    pub hidden_size: usize,
    /// Stacked bidirectional layers; the architecture is fixed at 2.
    pub num_bilstm_layers: usize,
    /// Output classes; fixed at 2 (interictal, preictal).
    pub num_classes: usize,
    /// Timesteps per sequence (windows per clip).
    pub seq_len: usize,
}

impl Default for ModelConfig {
    fn default() -> ModelConfig {
        ModelConfig {
            input_dim: 144,
            hidden_size: 32,
            num_bilstm_layers: 2,
            num_classes: 2,
            seq_len: 20,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_size == 0 || self.seq_len == 0 {
            return Err(Error::InvalidArgument(
                "model dimensions must be positive".into(),
            ));
        }
        if self.num_bilstm_layers != 2 {
            return Err(Error::InvalidArgument(format!(
                "this architecture has exactly 2 bilstm layers, got {}",
                self.num_bilstm_layers
            )));
        }
        if self.num_classes != 2 {
            return Err(Error::InvalidArgument(format!(
                "this architecture is binary, got {} classes",
                self.num_classes
            )));
        }
        Ok(())
    }
}

/// Every trainable tensor; also the shape of a gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub l1_fwd: LstmParams,
    pub l1_bwd: LstmParams,
    pub l2_fwd: LstmParams,
    pub l2_bwd: LstmParams,
    pub dense_w: Mat,
    pub dense_b: Vec<f64>,
}

/// Gradients are parameter-shaped.
pub type Gradients = ParamSet;

impl ParamSet {
    pub fn zeros(cfg: &ModelConfig) -> ParamSet {
        let h = cfg.hidden_size;
        ParamSet {
            l1_fwd: LstmParams::zeros(cfg.input_dim, h),
            l1_bwd: LstmParams::zeros(cfg.input_dim, h),
            l2_fwd: LstmParams::zeros(2 * h, h),
            l2_bwd: LstmParams::zeros(2 * h, h),
            dense_w: Mat::zeros(cfg.num_classes, 2 * h),
            dense_b: vec![0.0; cfg.num_classes],
        }
    }

    /// Xavier-uniform initialization of every weight matrix (biases zero),
    /// drawing tensors in canonical order from `rng`.
    pub fn xavier(cfg: &ModelConfig, rng: &mut Rng) -> ParamSet {
        let h = cfg.hidden_size;
        ParamSet {
            l1_fwd: LstmParams::xavier(cfg.input_dim, h, rng),
            l1_bwd: LstmParams::xavier(cfg.input_dim, h, rng),
            l2_fwd: LstmParams::xavier(2 * h, h, rng),
            l2_bwd: LstmParams::xavier(2 * h, h, rng),
            dense_w: super::lstm::xavier_init(cfg.num_classes, 2 * h, 2 * h, cfg.num_classes, rng),
            dense_b: vec![0.0; cfg.num_classes],
        }
    }

    /// Flat views of all 50 tensors in canonical order: the twelve tensors
    /// of l1_fwd, l1_bwd, l2_fwd, l2_bwd (see [`LstmParams::tensors`]),
    /// then dense W and dense b. Checkpoints and optimizer state rely on
    /// this order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = self.l1_fwd.tensors();
        out.extend(self.l1_bwd.tensors());
        out.extend(self.l2_fwd.tensors());
        out.extend(self.l2_bwd.tensors());
        out.push(self.dense_w.data());
        out.push(&self.dense_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.l1_fwd.tensors_mut();
        out.extend(self.l1_bwd.tensors_mut());
        out.extend(self.l2_fwd.tensors_mut());
        out.extend(self.l2_bwd.tensors_mut());
        out.push(self.dense_w.data_mut());
        out.push(&mut self.dense_b);
        out
    }

    /// Names matching [`ParamSet::tensors`], for diagnostics.
    pub fn tensor_names() -> Vec<String> {
        let lstm = [
            "w_f", "w_i", "w_o", "w_c", "u_f", "u_i", "u_o", "u_c", "b_f", "b_i", "b_o", "b_c",
        ];
        let mut names = Vec::with_capacity(50);
        for block in ["l1_fwd", "l1_bwd", "l2_fwd", "l2_bwd"] {
            for t in lstm {
                names.push(format!("{block}.{t}"));
            }
        }
        names.push("dense_w".into());
        names.push("dense_b".into());
        names
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            for v in t {
                *v *= s;
            }
        }
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// The full classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamSet,
}

impl Model {
    /// All-zero parameters (useful as a neutral baseline: every prediction
    /// is 0.5).
    pub fn zeros(config: ModelConfig) -> Result<Model> {
        config.validate()?;
        Ok(Model {
            params: ParamSet::zeros(&config),
            config,
        })
    }

    /// Xavier initialization, deterministic per seed.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Model> {
        config.validate()?;
        let mut rng = Rng::new(seed);
        Ok(Model {
            params: ParamSet::xavier(&config, &mut rng),
            config,
        })
    }
}

/// Numerically stable softmax.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Cross-entropy of a softmax output: -log(probs[label]), with the
/// probability clamped to [`PROB_CLAMP`] so the loss stays finite.
pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(PROB_CLAMP).ln()
}

pub(crate) struct ForwardPass {
    pub l1_fwd: Vec<CellCache>,
    pub l1_bwd: Vec<CellCache>,
    pub l2_fwd: Vec<CellCache>,
    pub l2_bwd: Vec<CellCache>,
    /// layer-1 outputs per input position t: concat(h_fwd[t], h_bwd[t])
    pub l1_out: Vec<Vec<f64>>,
    pub readout: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Caches in backward-direction vectors are stored in processing order:
/// index tau corresponds to input position T-1-tau.
pub(crate) fn forward_pass(m: &Model, inputs: &[&[f64]]) -> ForwardPass {
    let t_len = inputs.len();
    let h = m.config.hidden_size;
    let p = &m.params;

    let rev_inputs: Vec<&[f64]> = inputs.iter().rev().copied().collect();
    let l1_fwd = run_direction(&p.l1_fwd, inputs);
    let l1_bwd = run_direction(&p.l1_bwd, &rev_inputs);

    let mut l1_out = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut v = l1_fwd[t].h.clone();
        v.extend_from_slice(&l1_bwd[t_len - 1 - t].h);
        l1_out.push(v);
    }

    let l2_inputs: Vec<&[f64]> = l1_out.iter().map(Vec::as_slice).collect();
    let l2_rev_inputs: Vec<&[f64]> = l2_inputs.iter().rev().copied().collect();
    let l2_fwd = run_direction(&p.l2_fwd, &l2_inputs);
    let l2_bwd = run_direction(&p.l2_bwd, &l2_rev_inputs);

    // terminal state of each direction: forward at the last position,
    // backward at the first position (= its last processed step)
    let mut readout = l2_fwd[t_len - 1].h.clone();
    readout.extend_from_slice(&l2_bwd[t_len - 1].h);
    debug_assert_eq!(readout.len(), 2 * h);

    let mut logits = p.dense_b.clone();
    p.dense_w.matvec_add(&readout, &mut logits);
    let probs = softmax(&logits);

    ForwardPass {
        l1_fwd,
        l1_bwd,
        l2_fwd,
        l2_bwd,
        l1_out,
        readout,
        probs,
    }
}

fn check_sequence(m: &Model, seq: &FeatureSequence) -> Result<()> {
    if seq.seq_len() != m.config.seq_len {
        return Err(Error::ShapeMismatch(format!(
            "sequence has {} steps, model expects {}",
            seq.seq_len(),
            m.config.seq_len
        )));
    }
    if seq.feature_dim() != m.config.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "sequence has {} features per step, model expects {}",
            seq.feature_dim(),
            m.config.input_dim
        )));
    }
    for v in &seq.vectors {
        if let Some(i) = v.values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature {i} of clip {}",
                seq.clip_id
            )));
        }
    }
    Ok(())
}

/// Class probabilities for one sequence: (interictal, preictal), positive,
/// summing to 1.
pub fn model_forward(m: &Model, seq: &FeatureSequence) -> Result<Vec<f64>> {
    check_sequence(m, seq)?;
    let inputs: Vec<&[f64]> = seq.vectors.iter().map(|v| v.values.as_slice()).collect();
    Ok(forward_pass(m, &inputs).probs)
}

/// Preictal probability per sequence, order preserved.
pub fn predict(m: &Model, seqs: &[FeatureSequence]) -> Result<Vec<f64>> {
    seqs.iter()
        .map(|seq| Ok(model_forward(m, seq)?[PREICTAL_CLASS]))
        .collect()
}

/// BPTT through one direction. `inputs` and `caches` are in processing
/// order; `dh_ext[tau]` is the externally injected dL/dh at step tau.
/// Parameter gradients accumulate into `grads`; input gradients (processing
/// order) are returned when requested.
fn bptt_direction(
    p: &LstmParams,
    inputs: &[&[f64]],
    caches: &[CellCache],
    dh_ext: &[Vec<f64>],
    grads: &mut LstmParams,
    want_dinputs: bool,
) -> Option<Vec<Vec<f64>>> {
    let t_len = inputs.len();
    let hidden = p.hidden_size();
    let input_dim = p.input_dim();
    let zeros = vec![0.0; hidden];

    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let mut dinputs = if want_dinputs {
        Some(vec![vec![0.0; input_dim]; t_len])
    } else {
        None
    };

    for tau in (0..t_len).rev() {
        let cache = &caches[tau];
        let (h_prev, c_prev) = if tau > 0 {
            (&caches[tau - 1].h, &caches[tau - 1].c)
        } else {
            (&zeros, &zeros)
        };

        let mut df_pre = vec![0.0; hidden];
        let mut di_pre = vec![0.0; hidden];
        let mut do_pre = vec![0.0; hidden];
        let mut dcbar_pre = vec![0.0; hidden];
        let mut dc = vec![0.0; hidden];
        for j in 0..hidden {
            let dh = dh_ext[tau][j] + dh_next[j];
            let tanh_c = cache.tanh_c[j];
            let dcj = dh * cache.o[j] * (1.0 - tanh_c * tanh_c) + dc_next[j];
            dc[j] = dcj;
            let f = cache.f[j];
            let i = cache.i[j];
            let o = cache.o[j];
            let c_bar = cache.c_bar[j];
            df_pre[j] = dcj * c_prev[j] * f * (1.0 - f);
            di_pre[j] = dcj * c_bar * i * (1.0 - i);
            do_pre[j] = dh * tanh_c * o * (1.0 - o);
            dcbar_pre[j] = dcj * i * (1.0 - c_bar * c_bar);
        }

        let x = inputs[tau];
        grads.w_f.add_outer(&df_pre, x);
        grads.w_i.add_outer(&di_pre, x);
        grads.w_o.add_outer(&do_pre, x);
        grads.w_c.add_outer(&dcbar_pre, x);
        grads.u_f.add_outer(&df_pre, h_prev);
        grads.u_i.add_outer(&di_pre, h_prev);
        grads.u_o.add_outer(&do_pre, h_prev);
        grads.u_c.add_outer(&dcbar_pre, h_prev);
        for j in 0..hidden {
            grads.b_f[j] += df_pre[j];
            grads.b_i[j] += di_pre[j];
            grads.b_o[j] += do_pre[j];
            grads.b_c[j] += dcbar_pre[j];
        }

        dh_next = vec![0.0; hidden];
        p.u_f.tr_matvec_add(&df_pre, &mut dh_next);
        p.u_i.tr_matvec_add(&di_pre, &mut dh_next);
        p.u_o.tr_matvec_add(&do_pre, &mut dh_next);
        p.u_c.tr_matvec_add(&dcbar_pre, &mut dh_next);

        for j in 0..hidden {
            dc_next[j] = dc[j] * cache.f[j];
        }

        if let Some(dinputs) = dinputs.as_mut() {
            let dx = &mut dinputs[tau];
            p.w_f.tr_matvec_add(&df_pre, dx);
            p.w_i.tr_matvec_add(&di_pre, dx);
            p.w_o.tr_matvec_add(&do_pre, dx);
            p.w_c.tr_matvec_add(&dcbar_pre, dx);
        }
    }
    dinputs
}

/// Forward pass plus exact gradients of `weight * cross_entropy` with
/// respect to every parameter, accumulated into `acc`. Returns the
/// (weighted) loss and the probabilities.
pub(crate) fn loss_and_gradients(
    m: &Model,
    inputs: &[&[f64]],
    label: usize,
    weight: f64,
    acc: &mut Gradients,
) -> (f64, Vec<f64>) {
    let t_len = inputs.len();
    let h = m.config.hidden_size;
    let p = &m.params;
    let pass = forward_pass(m, inputs);
    let loss = weight * cross_entropy(&pass.probs, label);

    // softmax + cross-entropy head: dlogits = probs - onehot(label)
    let mut dlogits = pass.probs.clone();
    dlogits[label] -= 1.0;
    for d in &mut dlogits {
        *d *= weight;
    }

    acc.dense_w.add_outer(&dlogits, &pass.readout);
    for (b, &d) in acc.dense_b.iter_mut().zip(&dlogits) {
        *b += d;
    }

    let mut dreadout = vec![0.0; 2 * h];
    p.dense_w.tr_matvec_add(&dlogits, &mut dreadout);

    // layer 2: the readout touches only the terminal step of each direction
    let mut dh_ext_f = vec![vec![0.0; h]; t_len];
    dh_ext_f[t_len - 1].copy_from_slice(&dreadout[..h]);
    let mut dh_ext_b = vec![vec![0.0; h]; t_len];
    dh_ext_b[t_len - 1].copy_from_slice(&dreadout[h..]);

    let l2_inputs: Vec<&[f64]> = pass.l1_out.iter().map(Vec::as_slice).collect();
    let l2_rev_inputs: Vec<&[f64]> = l2_inputs.iter().rev().copied().collect();
    let d_in2f = bptt_direction(
        &p.l2_fwd,
        &l2_inputs,
        &pass.l2_fwd,
        &dh_ext_f,
        &mut acc.l2_fwd,
        true,
    )
    .unwrap();
    let d_in2b = bptt_direction(
        &p.l2_bwd,
        &l2_rev_inputs,
        &pass.l2_bwd,
        &dh_ext_b,
        &mut acc.l2_bwd,
        true,
    )
    .unwrap();

    // gradient w.r.t. layer-1 output at position t, both directions summed
    let mut dh_ext_l1f = vec![vec![0.0; h]; t_len];
    let mut dh_ext_l1b = vec![vec![0.0; h]; t_len];
    for t in 0..t_len {
        let mut d_out1 = d_in2f[t].clone();
        for (a, b) in d_out1.iter_mut().zip(&d_in2b[t_len - 1 - t]) {
            *a += b;
        }
        dh_ext_l1f[t].copy_from_slice(&d_out1[..h]);
        // the backward direction processed position t at step T-1-t
        dh_ext_l1b[t_len - 1 - t].copy_from_slice(&d_out1[h..]);
    }

    let rev_inputs: Vec<&[f64]> = inputs.iter().rev().copied().collect();
    bptt_direction(
        &p.l1_fwd,
        inputs,
        &pass.l1_fwd,
        &dh_ext_l1f,
        &mut acc.l1_fwd,
        false,
    );
    bptt_direction(
        &p.l1_bwd,
        &rev_inputs,
        &pass.l1_bwd,
        &dh_ext_l1b,
        &mut acc.l1_bwd,
        false,
    );

    (loss, pass.probs)
}

/// Gradient of `cross_entropy(model_forward(m, seq), label)` with respect
/// to every parameter.
pub fn backward(m: &Model, seq: &FeatureSequence, label: Label) -> Result<Gradients> {
    check_sequence(m, seq)?;
    let class = label.class_index()?;
    let inputs: Vec<&[f64]> = seq.vectors.iter().map(|v| v.values.as_slice()).collect();
    let mut grads = ParamSet::zeros(&m.config);
    loss_and_gradients(m, &inputs, class, 1.0, &mut grads);
    Ok(grads)
}
