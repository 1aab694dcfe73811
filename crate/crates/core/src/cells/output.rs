use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{log_softmax_at, softmax, Matrix, Vector};
use crate::params::ParamSet;

/// Softmax projection `y = softmax(h W_hy + b_y)` onto the vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputLayer {
    pub w_hy: Matrix,
    pub b_y: Vector,
}

impl OutputLayer {
    pub fn zeros(hidden_dim: usize, vocab_size: usize) -> Self {
        OutputLayer {
            w_hy: Matrix::zeros(hidden_dim, vocab_size),
            b_y: Vector::zeros(vocab_size),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.b_y.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hy.rows()
    }

    pub fn logits(&self, h: &[f64]) -> Result<Vector> {
        if h.len() != self.hidden_dim() {
            return Err(shape_err("output_forward", self.w_hy.shape_str(), format!("h[{}]", h.len())));
        }
        let mut out = self.b_y.clone();
        self.w_hy.vecmul_acc(h, &mut out)?;
        Ok(out)
    }

    /// Probabilities over the vocabulary.
    pub fn forward(&self, h: &[f64]) -> Result<Vector> {
        Ok(softmax(&self.logits(h)?))
    }

    /// `−log p[target]`.
    pub fn nll(&self, h: &[f64], target: usize) -> Result<f64> {
        self.check_target(target)?;
        Ok(-log_softmax_at(&self.logits(h)?, target))
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.vocab_size() {
            return Err(Error::IndexOutOfRange {
                what: "vocabulary",
                index: target,
                size: self.vocab_size(),
            });
        }
        Ok(())
    }

    /// Accumulates the softmax cross-entropy gradient into `grads`, scaled by
    /// `scale`. Returns `(scale·∂E/∂h, nll)`.
    pub fn backward_acc(&self, h: &[f64], target: usize, scale: f64, grads: &mut OutputLayer) -> Result<(Vector, f64)> {
        self.check_target(target)?;
        let logits = self.logits(h)?;
        let nll = -log_softmax_at(&logits, target);
        let mut dlogits = softmax(&logits);
        dlogits[target] -= 1.0;
        for v in dlogits.iter_mut() {
            *v *= scale;
        }
        grads.w_hy.add_outer(h, &dlogits, 1.0)?;
        grads.b_y.add_assign(&dlogits)?;
        Ok((self.w_hy.matvec(&dlogits)?, nll))
    }

    /// Returns `(∂layer, ∂h, nll)` for a single prediction.
    pub fn backward(&self, h: &[f64], target: usize) -> Result<(OutputLayer, Vector, f64)> {
        let mut grads = OutputLayer::zeros(self.hidden_dim(), self.vocab_size());
        let (gh, nll) = self.backward_acc(h, target, 1.0, &mut grads)?;
        Ok((grads, gh, nll))
    }
}

impl ParamSet for OutputLayer {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        vec![("W_hy", self.w_hy.data()), ("b_y", &self.b_y)]
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![("W_hy", self.w_hy.data_mut()), ("b_y", &mut self.b_y)]
    }
}
