//! Single-timestep forward and backward passes for the recurrent cells.
//!
//! Five cell kinds share three parameter families:
//!
//! | kind       | family | tensor weight        |
//! |------------|--------|----------------------|
//! | `rnn`      | simple | none                 |
//! | `gru`      | GRU    | none                 |
//! | `grurntn`  | GRU    | `i × d × d`, candidate `h̃` |
//! | `lstm`     | LSTM   | none                 |
//! | `lstmrntn` | LSTM   | `i × d × d`, candidate `c̃` |
//!
//! The tensor variants add `bilinear(x, W_tsr, ·)` to the candidate
//! pre-activation, so a zero tensor reduces them exactly to their baselines.

mod gru;
mod lstm;
mod output;
mod simple;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{Tensor3, Vector};
use crate::params::ParamSet;

pub use gru::{GruParams, GruTrace};
pub use lstm::{LstmParams, LstmTrace};
pub use output::OutputLayer;
pub use simple::{SimpleParams, SimpleTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Rnn,
    Gru,
    Lstm,
    GruRntn,
    LstmRntn,
}

impl CellKind {
    pub const ALL: [CellKind; 5] = [
        CellKind::Rnn,
        CellKind::Gru,
        CellKind::Lstm,
        CellKind::GruRntn,
        CellKind::LstmRntn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Rnn => "rnn",
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
            CellKind::GruRntn => "grurntn",
            CellKind::LstmRntn => "lstmrntn",
        }
    }

    pub fn has_tensor(self) -> bool {
        matches!(self, CellKind::GruRntn | CellKind::LstmRntn)
    }

    pub fn has_memory_cell(self) -> bool {
        matches!(self, CellKind::Lstm | CellKind::LstmRntn)
    }

    /// The kind with the tensor weight removed.
    pub fn baseline(self) -> CellKind {
        match self {
            CellKind::GruRntn => CellKind::Gru,
            CellKind::LstmRntn => CellKind::Lstm,
            k => k,
        }
    }

    /// Closed-form parameter count of the recurrent cell alone.
    pub fn cell_param_count(self, input_dim: usize, hidden_dim: usize) -> usize {
        let (i, d) = (input_dim, hidden_dim);
        let gate = i * d + d * d + d;
        let tensor = if self.has_tensor() { i * d * d } else { 0 };
        let base = match self.baseline() {
            CellKind::Rnn => gate,
            CellKind::Gru => 3 * gate,
            // four gates plus three d×d peephole matrices
            _ => 4 * gate + 3 * d * d,
        };
        base + tensor
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CellKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown cell kind '{s}'")))
    }
}

/// Recurrent state carried between timesteps. `c` is present iff the cell
/// belongs to the LSTM family.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub h: Vector,
    pub c: Option<Vector>,
}

impl StepState {
    pub fn zeros(kind: CellKind, hidden_dim: usize) -> Self {
        StepState {
            h: Vector::zeros(hidden_dim),
            c: kind.has_memory_cell().then(|| Vector::zeros(hidden_dim)),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.c.as_ref().is_none_or(|c| c.is_finite())
    }
}

/// Per-family parameters. Gradient accumulators use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellParams {
    Simple(SimpleParams),
    Gru(GruParams),
    Lstm(LstmParams),
}

impl CellParams {
    pub fn zeros(kind: CellKind, input_dim: usize, hidden_dim: usize) -> Self {
        let (i, d) = (input_dim, hidden_dim);
        let tensor = kind.has_tensor().then(|| Tensor3::zeros(i, d));
        match kind.baseline() {
            CellKind::Rnn => CellParams::Simple(SimpleParams::zeros(i, d)),
            CellKind::Gru => CellParams::Gru(GruParams::zeros(i, d, tensor)),
            _ => CellParams::Lstm(LstmParams::zeros(i, d, tensor)),
        }
    }

    /// Orthogonal matrices, small uniform tensor, zero biases.
    pub fn init<R: Rng + ?Sized>(kind: CellKind, input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut p = CellParams::zeros(kind, input_dim, hidden_dim);
        p.randomize(rng);
        p
    }

    fn randomize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        use crate::training::init::{orthogonal_init, tensor_uniform_init};
        let (i, d) = (self.input_dim(), self.hidden_dim());
        let tensor = match self {
            CellParams::Simple(_) => None,
            CellParams::Gru(p) => p.w_tsr.as_mut(),
            CellParams::Lstm(p) => p.w_tsr.as_mut(),
        };
        if let Some(t) = tensor {
            *t = tensor_uniform_init(i, d, rng);
        }
        let mats = match self {
            CellParams::Simple(p) => p.matrices_mut(),
            CellParams::Gru(p) => p.matrices_mut(),
            CellParams::Lstm(p) => p.matrices_mut(),
        };
        for m in mats {
            *m = orthogonal_init(m.rows(), m.cols(), rng);
        }
    }

    pub fn kind(&self) -> CellKind {
        match self {
            CellParams::Simple(_) => CellKind::Rnn,
            CellParams::Gru(p) if p.w_tsr.is_some() => CellKind::GruRntn,
            CellParams::Gru(_) => CellKind::Gru,
            CellParams::Lstm(p) if p.w_tsr.is_some() => CellKind::LstmRntn,
            CellParams::Lstm(_) => CellKind::Lstm,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            CellParams::Simple(p) => p.w_xh.rows(),
            CellParams::Gru(p) => p.w_xh.rows(),
            CellParams::Lstm(p) => p.w_xc.rows(),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        match self {
            CellParams::Simple(p) => p.w_xh.cols(),
            CellParams::Gru(p) => p.w_xh.cols(),
            CellParams::Lstm(p) => p.w_xc.cols(),
        }
    }

    pub fn tensor(&self) -> Option<&Tensor3> {
        match self {
            CellParams::Simple(_) => None,
            CellParams::Gru(p) => p.w_tsr.as_ref(),
            CellParams::Lstm(p) => p.w_tsr.as_ref(),
        }
    }

    pub fn tensor_mut(&mut self) -> Option<&mut Tensor3> {
        match self {
            CellParams::Simple(_) => None,
            CellParams::Gru(p) => p.w_tsr.as_mut(),
            CellParams::Lstm(p) => p.w_tsr.as_mut(),
        }
    }

    /// Drops the tensor weight, producing baseline parameters.
    pub fn without_tensor(&self) -> CellParams {
        let mut out = self.clone();
        match &mut out {
            CellParams::Simple(_) => {}
            CellParams::Gru(p) => p.w_tsr = None,
            CellParams::Lstm(p) => p.w_tsr = None,
        }
        out
    }

    /// One forward step from `prev`.
    pub fn step(&self, x: &[f64], prev: &StepState) -> Result<(StepState, StepTrace)> {
        if x.len() != self.input_dim() {
            return Err(shape_err("cell step", format!("input_dim {}", self.input_dim()), format!("x[{}]", x.len())));
        }
        if prev.h.len() != self.hidden_dim() {
            return Err(shape_err("cell step", format!("hidden_dim {}", self.hidden_dim()), format!("h[{}]", prev.h.len())));
        }
        match self {
            CellParams::Simple(p) => {
                let (h, tr) = simple::forward(p, x, &prev.h)?;
                Ok((StepState { h, c: None }, StepTrace::Simple(tr)))
            }
            CellParams::Gru(p) => {
                let (h, tr) = gru::forward(p, x, &prev.h)?;
                Ok((StepState { h, c: None }, StepTrace::Gru(tr)))
            }
            CellParams::Lstm(p) => {
                let c_prev = prev.c.as_ref().ok_or_else(|| {
                    shape_err("lstm step", "state with memory cell", "state without memory cell")
                })?;
                if c_prev.len() != self.hidden_dim() {
                    return Err(shape_err("lstm step", format!("hidden_dim {}", self.hidden_dim()), format!("c[{}]", c_prev.len())));
                }
                let (h, c, tr) = lstm::forward(p, x, &prev.h, c_prev)?;
                Ok((StepState { h, c: Some(c) }, StepTrace::Lstm(tr)))
            }
        }
    }

    /// Backward through one step.
    ///
    /// `upstream` carries `∂E/∂h_t` (and `∂E/∂c_t` for the LSTM family; a
    /// missing `c` is treated as zero). Parameter gradients are accumulated
    /// into `grads`, which must share this layout. Returns `∂E/∂x_t` and the
    /// gradient with respect to the previous state.
    pub fn step_backward(
        &self,
        trace: &StepTrace,
        upstream: &StepState,
        grads: &mut CellParams,
    ) -> Result<(Vector, StepState)> {
        match (self, trace, grads) {
            (CellParams::Simple(p), StepTrace::Simple(tr), CellParams::Simple(g)) => {
                let (gx, gh) = simple::backward(p, tr, &upstream.h, g)?;
                Ok((gx, StepState { h: gh, c: None }))
            }
            (CellParams::Gru(p), StepTrace::Gru(tr), CellParams::Gru(g)) => {
                let (gx, gh) = gru::backward(p, tr, &upstream.h, g)?;
                Ok((gx, StepState { h: gh, c: None }))
            }
            (CellParams::Lstm(p), StepTrace::Lstm(tr), CellParams::Lstm(g)) => {
                let zero;
                let gc = match &upstream.c {
                    Some(c) => c,
                    None => {
                        zero = Vector::zeros(p.w_xc.cols());
                        &zero
                    }
                };
                let (gx, gh, gcp) = lstm::backward(p, tr, &upstream.h, gc, g)?;
                Ok((gx, StepState { h: gh, c: Some(gcp) }))
            }
            (p, tr, g) => Err(Error::KindMismatch {
                params: format!("{} (grads {})", p.kind(), g.kind()),
                trace: tr.family().to_string(),
            }),
        }
    }
}

impl ParamSet for CellParams {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            CellParams::Simple(p) => p.buffers(),
            CellParams::Gru(p) => p.buffers(),
            CellParams::Lstm(p) => p.buffers(),
        }
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        match self {
            CellParams::Simple(p) => p.buffers_mut(),
            CellParams::Gru(p) => p.buffers_mut(),
            CellParams::Lstm(p) => p.buffers_mut(),
        }
    }
}

/// Cached activations of one forward step, sufficient to recompute it and
/// to run the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum StepTrace {
    Simple(SimpleTrace),
    Gru(GruTrace),
    Lstm(LstmTrace),
}

impl StepTrace {
    fn family(&self) -> &'static str {
        match self {
            StepTrace::Simple(_) => "simple",
            StepTrace::Gru(_) => "gru",
            StepTrace::Lstm(_) => "lstm",
        }
    }
}

pub fn step_simple(p: &SimpleParams, x: &[f64], prev: &StepState) -> Result<(StepState, StepTrace)> {
    check_dims(x, &prev.h, p.w_xh.rows(), p.w_xh.cols())?;
    let (h, tr) = simple::forward(p, x, &prev.h)?;
    Ok((StepState { h, c: None }, StepTrace::Simple(tr)))
}

/// GRU step. Ignores any tensor weight present in `p`.
pub fn step_gru(p: &GruParams, x: &[f64], prev: &StepState) -> Result<(StepState, StepTrace)> {
    CellParams::Gru(GruParams { w_tsr: None, ..p.clone() }).step(x, prev)
}

/// GRURNTN step. Fails if `p` carries no tensor weight.
pub fn step_grurntn(p: &GruParams, x: &[f64], prev: &StepState) -> Result<(StepState, StepTrace)> {
    if p.w_tsr.is_none() {
        return Err(shape_err("step_grurntn", "tensor weight", "none"));
    }
    CellParams::Gru(p.clone()).step(x, prev)
}

/// LSTM step. Ignores any tensor weight present in `p`.
pub fn step_lstm(p: &LstmParams, x: &[f64], prev: &StepState) -> Result<(StepState, StepTrace)> {
    CellParams::Lstm(LstmParams { w_tsr: None, ..p.clone() }).step(x, prev)
}

/// LSTMRNTN step. Fails if `p` carries no tensor weight.
pub fn step_lstmrntn(p: &LstmParams, x: &[f64], prev: &StepState) -> Result<(StepState, StepTrace)> {
    if p.w_tsr.is_none() {
        return Err(shape_err("step_lstmrntn", "tensor weight", "none"));
    }
    CellParams::Lstm(p.clone()).step(x, prev)
}

fn check_dims(x: &[f64], h: &[f64], i: usize, d: usize) -> Result<()> {
    if x.len() != i || h.len() != d {
        return Err(shape_err("cell step", format!("i={i}, d={d}"), format!("x[{}], h[{}]", x.len(), h.len())));
    }
    Ok(())
}
