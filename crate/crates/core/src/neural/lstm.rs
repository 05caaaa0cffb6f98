//! The LSTM cell and bidirectional layer.
//!
//! One cell step computes
//!
//! ```text
//! f_t = sigma(W_f x_t + U_f h_{t-1} + b_f)         forget gate
//! i_t = sigma(W_i x_t + U_i h_{t-1} + b_i)         input gate
//! o_t = sigma(W_o x_t + U_o h_{t-1} + b_o)         output gate
//! c~_t = tanh(W_c x_t + U_c h_{t-1} + b_c)         candidate state
//! C_t = f_t * C_{t-1} + i_t * c~_t
//! h_t = o_t * tanh(C_t)
//! ```
//!
//! with sigma the logistic sigmoid and all products elementwise. Initial
//! states are zero for every direction and layer.

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::mat::Mat;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weights of one LSTM direction: input-to-gate matrices W_* (hidden x
/// input), recurrent matrices U_* (hidden x hidden), and bias vectors b_*.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_f: Mat,
    pub w_i: Mat,
    pub w_o: Mat,
    pub w_c: Mat,
    pub u_f: Mat,
    pub u_i: Mat,
    pub u_o: Mat,
    pub u_c: Mat,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_c: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> LstmParams {
        LstmParams {
            w_f: Mat::zeros(hidden, input_dim),
            w_i: Mat::zeros(hidden, input_dim),
            w_o: Mat::zeros(hidden, input_dim),
            w_c: Mat::zeros(hidden, input_dim),
            u_f: Mat::zeros(hidden, hidden),
            u_i: Mat::zeros(hidden, hidden),
            u_o: Mat::zeros(hidden, hidden),
            u_c: Mat::zeros(hidden, hidden),
            b_f: vec![0.0; hidden],
            b_i: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
        }
    }

    /// Xavier-uniform weights (input matrices with fan_in = input_dim and
    /// fan_out = hidden, recurrent matrices with both fans = hidden), zero
    /// biases. Tensors are drawn in field order, each row-major.
    pub fn xavier(input_dim: usize, hidden: usize, rng: &mut Rng) -> LstmParams {
        LstmParams {
            w_f: xavier_init(hidden, input_dim, input_dim, hidden, rng),
            w_i: xavier_init(hidden, input_dim, input_dim, hidden, rng),
            w_o: xavier_init(hidden, input_dim, input_dim, hidden, rng),
            w_c: xavier_init(hidden, input_dim, input_dim, hidden, rng),
            u_f: xavier_init(hidden, hidden, hidden, hidden, rng),
            u_i: xavier_init(hidden, hidden, hidden, hidden, rng),
            u_o: xavier_init(hidden, hidden, hidden, hidden, rng),
            u_c: xavier_init(hidden, hidden, hidden, hidden, rng),
            b_f: vec![0.0; hidden],
            b_i: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_f.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_f.rows()
    }

    /// Flat views of all twelve tensors in canonical order
    /// (W_f, W_i, W_o, W_c, U_f, U_i, U_o, U_c, b_f, b_i, b_o, b_c);
    /// the checkpoint format and optimizer state both follow this order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w_f.data(),
            self.w_i.data(),
            self.w_o.data(),
            self.w_c.data(),
            self.u_f.data(),
            self.u_i.data(),
            self.u_o.data(),
            self.u_c.data(),
            &self.b_f,
            &self.b_i,
            &self.b_o,
            &self.b_c,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_f.data_mut(),
            self.w_i.data_mut(),
            self.w_o.data_mut(),
            self.w_c.data_mut(),
            self.u_f.data_mut(),
            self.u_i.data_mut(),
            self.u_o.data_mut(),
            self.u_c.data_mut(),
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_o,
            &mut self.b_c,
        ]
    }
}

/// Xavier-uniform matrix: entries drawn from
/// [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))], row-major order.
pub fn xavier_init(
    rows: usize,
    cols: usize,
    fan_in: usize,
    fan_out: usize,
    rng: &mut Rng,
) -> Mat {
    assert!(fan_in > 0 && fan_out > 0, "fans must be positive");
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Mat::from_fn(rows, cols, |_, _| rng.next_uniform(-bound, bound))
}

/// Hidden and cell state of one direction at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl CellState {
    pub fn zeros(hidden: usize) -> CellState {
        CellState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Everything the backward pass needs from one cell step.
#[derive(Debug, Clone)]
pub(crate) struct CellCache {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub c_bar: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// The state-update half of the cell: C_t = f*C_{t-1} + i*c~, h_t = o*tanh(C_t).
/// Split out so the memory-preservation identity can be tested with injected
/// gate values.
pub(crate) fn apply_gates(
    f: &[f64],
    i: &[f64],
    o: &[f64],
    c_bar: &[f64],
    c_prev: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let c: Vec<f64> = f
        .iter()
        .zip(c_prev)
        .zip(i.iter().zip(c_bar))
        .map(|((&f, &cp), (&i, &cb))| f * cp + i * cb)
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|&x| x.tanh()).collect();
    let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(&o, &t)| o * t).collect();
    (c, tanh_c, h)
}

pub(crate) fn cell_forward_cached(
    p: &LstmParams,
    x: &[f64],
    prev_h: &[f64],
    prev_c: &[f64],
) -> CellCache {
    let gate = |w: &Mat, u: &Mat, b: &[f64]| -> Vec<f64> {
        let mut pre = b.to_vec();
        w.matvec_add(x, &mut pre);
        u.matvec_add(prev_h, &mut pre);
        pre
    };
    let f: Vec<f64> = gate(&p.w_f, &p.u_f, &p.b_f).iter().map(|&v| sigmoid(v)).collect();
    let i: Vec<f64> = gate(&p.w_i, &p.u_i, &p.b_i).iter().map(|&v| sigmoid(v)).collect();
    let o: Vec<f64> = gate(&p.w_o, &p.u_o, &p.b_o).iter().map(|&v| sigmoid(v)).collect();
    let c_bar: Vec<f64> = gate(&p.w_c, &p.u_c, &p.b_c).iter().map(|&v| v.tanh()).collect();
    let (c, tanh_c, h) = apply_gates(&f, &i, &o, &c_bar, prev_c);
    CellCache {
        f,
        i,
        o,
        c_bar,
        c,
        tanh_c,
        h,
    }
}

fn check_cell_shapes(p: &LstmParams, x: &[f64], prev: &CellState) -> Result<()> {
    if x.len() != p.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} entries, cell expects {}",
            x.len(),
            p.input_dim()
        )));
    }
    if prev.h.len() != p.hidden_size() || prev.c.len() != p.hidden_size() {
        return Err(Error::ShapeMismatch(format!(
            "state has {}/{} entries, cell expects {}",
            prev.h.len(),
            prev.c.len(),
            p.hidden_size()
        )));
    }
    Ok(())
}

/// One LSTM cell step.
pub fn lstm_cell_forward(p: &LstmParams, x: &[f64], prev: &CellState) -> Result<CellState> {
    check_cell_shapes(p, x, prev)?;
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("cell input at index {i}")));
    }
    let cache = cell_forward_cached(p, x, &prev.h, &prev.c);
    Ok(CellState {
        h: cache.h,
        c: cache.c,
    })
}

/// Runs one direction over `inputs` (given in processing order) from a zero
/// initial state, returning the per-step caches.
pub(crate) fn run_direction(p: &LstmParams, inputs: &[&[f64]]) -> Vec<CellCache> {
    let hidden = p.hidden_size();
    let mut prev_h = vec![0.0; hidden];
    let mut prev_c = vec![0.0; hidden];
    let mut caches = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let cache = cell_forward_cached(p, x, &prev_h, &prev_c);
        prev_h = cache.h.clone();
        prev_c = cache.c.clone();
        caches.push(cache);
    }
    caches
}

/// Bidirectional layer: the forward direction reads t = 1..T, the backward
/// direction reads t = T..1, both from zero initial states. The output at t
/// is concat(h_fwd[t], h_bwd[t]).
pub fn bilstm_layer_forward(
    fwd: &LstmParams,
    bwd: &LstmParams,
    seq: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    if seq.is_empty() {
        return Err(Error::EmptyInput("bilstm layer needs at least one step"));
    }
    let dim = fwd.input_dim();
    if bwd.input_dim() != dim || bwd.hidden_size() != fwd.hidden_size() {
        return Err(Error::ShapeMismatch(
            "forward and backward params disagree on dimensions".into(),
        ));
    }
    for (t, x) in seq.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "step {t} has {} entries, layer expects {dim}",
                x.len()
            )));
        }
    }
    let t_len = seq.len();
    let fwd_inputs: Vec<&[f64]> = seq.iter().map(Vec::as_slice).collect();
    let bwd_inputs: Vec<&[f64]> = seq.iter().rev().map(Vec::as_slice).collect();
    let fwd_caches = run_direction(fwd, &fwd_inputs);
    let bwd_caches = run_direction(bwd, &bwd_inputs);
    let mut out = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut v = fwd_caches[t].h.clone();
        // bwd cache index tau corresponds to input position T-1-tau
        v.extend_from_slice(&bwd_caches[t_len - 1 - t].h);
        out.push(v);
    }
    Ok(out)
}
