//! Embedding → recurrent cell → softmax language model, with full and
//! truncated backpropagation through time.

use rand::Rng;

use crate::cells::{CellKind, CellParams, OutputLayer, StepState, StepTrace};
use crate::data::Embedding;
use crate::error::{Error, Result};
use crate::linalg::{log_softmax_at, Vector};
use crate::params::{zeros_like, ParamSet};
use crate::training::dropout::StepMasks;
use crate::training::init::orthogonal_init;
use crate::training::LossReport;

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageModel {
    pub embedding: Embedding,
    pub cell: CellParams,
    pub output: OutputLayer,
}

/// Closed-form count of free parameters: embedding, cell (tensor included)
/// and output projection. The cell input is `input_dim` wide.
pub fn count_params(kind: CellKind, input_dim: usize, hidden_dim: usize, vocab_size: usize, embed_dim: usize) -> usize {
    vocab_size * embed_dim + kind.cell_param_count(input_dim, hidden_dim) + hidden_dim * vocab_size + vocab_size
}

impl LanguageModel {
    pub fn zeros(kind: CellKind, vocab_size: usize, embed_dim: usize, hidden_dim: usize) -> Self {
        LanguageModel {
            embedding: Embedding::zeros(vocab_size, embed_dim),
            cell: CellParams::zeros(kind, embed_dim, hidden_dim),
            output: OutputLayer::zeros(hidden_dim, vocab_size),
        }
    }

    /// Orthogonal matrices (embedding and output included), small uniform
    /// tensor, zero biases.
    pub fn init<R: Rng + ?Sized>(kind: CellKind, vocab_size: usize, embed_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        LanguageModel {
            embedding: Embedding {
                table: orthogonal_init(vocab_size, embed_dim, rng),
            },
            cell: CellParams::init(kind, embed_dim, hidden_dim, rng),
            output: OutputLayer {
                w_hy: orthogonal_init(hidden_dim, vocab_size, rng),
                b_y: Vector::zeros(vocab_size),
            },
        }
    }

    pub fn kind(&self) -> CellKind {
        self.cell.kind()
    }

    pub fn vocab_size(&self) -> usize {
        self.output.vocab_size()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.cell.hidden_dim()
    }

    pub fn zero_grads(&self) -> LanguageModel {
        zeros_like(self)
    }

    pub fn initial_state(&self) -> StepState {
        StepState::zeros(self.kind(), self.hidden_dim())
    }

    fn input(&self, id: usize, mask: Option<&StepMasks>) -> Result<Vector> {
        let row = self.embedding.lookup(id)?;
        Ok(match mask {
            Some(m) => row.iter().zip(m.input.iter()).map(|(x, m)| x * m).collect::<Vec<_>>().into(),
            None => Vector::new(row.to_vec()),
        })
    }

    /// Feeds one token and returns the next state with next-token probabilities.
    pub fn step_token(&self, id: usize, state: &StepState) -> Result<(StepState, Vector)> {
        let x = self.input(id, None)?;
        let (next, _) = self.cell.step(&x, state)?;
        let probs = self.output.forward(&next.h)?;
        Ok((next, probs))
    }

    fn check_sequence(&self, tokens: &[usize]) -> Result<()> {
        if tokens.len() < 2 {
            return Err(Error::SequenceTooShort { need: 2, got: tokens.len() });
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= self.vocab_size()) {
            return Err(Error::IndexOutOfRange {
                what: "vocabulary",
                index: bad,
                size: self.vocab_size(),
            });
        }
        Ok(())
    }

    /// `log P(token_{t+1} | token_1..t)` for every predicted position.
    pub fn token_log_probs(&self, tokens: &[usize]) -> Result<Vec<f64>> {
        self.check_sequence(tokens)?;
        let mut state = self.initial_state();
        let mut out = Vec::with_capacity(tokens.len() - 1);
        for w in tokens.windows(2) {
            let x = self.input(w[0], None)?;
            state = self.cell.step(&x, &state)?.0;
            out.push(log_softmax_at(&self.output.logits(&state.h)?, w[1]));
        }
        Ok(out)
    }

    /// Negative log-likelihood (nats) of `tokens[1..]` given their prefixes.
    pub fn sequence_nll(&self, tokens: &[usize]) -> Result<LossReport> {
        let lps = self.token_log_probs(tokens)?;
        Ok(LossReport {
            total_nll: lps.iter().fold(0.0, |acc, lp| acc - lp),
            token_count: lps.len(),
        })
    }

    /// Backpropagation through time over one sequence.
    ///
    /// Accumulates unnormalized gradients of the sequence NLL into `grads`.
    /// With `window = Some(k)`, the error of prediction `i` reaches only the
    /// steps `max(1, i − k) ..= i`; `None` unrolls the whole sequence.
    /// `masks`, when given, holds one dropout mask pair per step.
    pub fn bptt(
        &self,
        tokens: &[usize],
        window: Option<usize>,
        masks: Option<&[StepMasks]>,
        grads: &mut LanguageModel,
    ) -> Result<LossReport> {
        self.check_sequence(tokens)?;
        let steps = tokens.len() - 1;
        if let Some(m) = masks {
            if m.len() != steps {
                return Err(crate::error::shape_err("bptt", format!("{steps} steps"), format!("{} masks", m.len())));
            }
        }
        let mask_at = |t: usize| masks.map(|m| &m[t]);

        let mut state = self.initial_state();
        let mut traces: Vec<StepTrace> = Vec::with_capacity(steps);
        let mut out_grads: Vec<Vector> = Vec::with_capacity(steps);
        let mut total = 0.0;
        for t in 0..steps {
            let x = self.input(tokens[t], mask_at(t))?;
            let (next, trace) = self.cell.step(&x, &state)?;
            let (gh, nll) = match mask_at(t) {
                Some(m) => {
                    let h_out = next.h.hadamard(&m.output)?;
                    let (gh, nll) = self.output.backward_acc(&h_out, tokens[t + 1], 1.0, &mut grads.output)?;
                    (gh.hadamard(&m.output)?, nll)
                }
                None => self.output.backward_acc(&next.h, tokens[t + 1], 1.0, &mut grads.output)?,
            };
            total += nll;
            traces.push(trace);
            out_grads.push(gh);
            state = next;
        }

        let zero = self.initial_state();
        match window {
            Some(k) if k + 1 < steps => {
                for t in 0..steps {
                    let mut upstream = StepState {
                        h: out_grads[t].clone(),
                        c: zero.c.clone(),
                    };
                    for j in (t.saturating_sub(k)..=t).rev() {
                        upstream = self.backward_step(tokens[j], &traces[j], &upstream, mask_at(j), grads)?;
                    }
                }
            }
            _ => {
                let mut carry = zero;
                for t in (0..steps).rev() {
                    carry.h.add_assign(&out_grads[t])?;
                    carry = self.backward_step(tokens[t], &traces[t], &carry, mask_at(t), grads)?;
                }
            }
        }

        Ok(LossReport {
            total_nll: total,
            token_count: steps,
        })
    }

    fn backward_step(
        &self,
        token: usize,
        trace: &StepTrace,
        upstream: &StepState,
        mask: Option<&StepMasks>,
        grads: &mut LanguageModel,
    ) -> Result<StepState> {
        let (mut gx, prev) = self.cell.step_backward(trace, upstream, &mut grads.cell)?;
        if let Some(m) = mask {
            gx = gx.hadamard(&m.input)?;
        }
        grads.embedding.accumulate(token, &gx)?;
        Ok(prev)
    }
}

impl ParamSet for LanguageModel {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        let mut v = self.embedding.buffers();
        v.extend(self.cell.buffers());
        v.extend(self.output.buffers());
        v
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut v = self.embedding.buffers_mut();
        v.extend(self.cell.buffers_mut());
        v.extend(self.output.buffers_mut());
        v
    }
}
