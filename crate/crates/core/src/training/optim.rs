//! AdaGrad, global-norm gradient rescaling and validation-driven decay.

use crate::params::ParamSet;

pub const ADAGRAD_EPS: f64 = 1e-8;

/// Global L2 norm over every buffer.
pub fn global_norm<P: ParamSet>(grads: &P) -> f64 {
    grads.sum_of_squares().sqrt()
}

/// Rescales all gradients by `clip_norm / ‖g‖` when `‖g‖ > clip_norm`.
/// Returns the norm measured before rescaling.
pub fn clip_rescale<P: ParamSet>(grads: &mut P, clip_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > clip_norm {
        let s = clip_norm / norm;
        for (_, b) in grads.buffers_mut() {
            b.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}

/// Learning rate after one epoch: decayed by `factor` iff the validation
/// cost strictly increased.
pub fn maybe_decay_lr(current_lr: f64, prev_val_cost: Option<f64>, val_cost: f64, factor: f64) -> f64 {
    match prev_val_cost {
        Some(prev) if val_cost > prev => current_lr * factor,
        _ => current_lr,
    }
}

/// Per-coordinate squared-gradient accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGrad {
    pub accum: Vec<Vec<f64>>,
    pub eps: f64,
}

impl AdaGrad {
    pub fn new<P: ParamSet>(params: &P) -> Self {
        AdaGrad {
            accum: params.buffers().iter().map(|(_, b)| vec![0.0; b.len()]).collect(),
            eps: ADAGRAD_EPS,
        }
    }

    /// `acc += g²; θ −= lr · g / (√acc + ε)`.
    pub fn update<P: ParamSet>(&mut self, params: &mut P, grads: &P, lr: f64) {
        let gb = grads.buffers();
        for (((_, p), (_, g)), acc) in params.buffers_mut().into_iter().zip(gb).zip(&mut self.accum) {
            debug_assert_eq!(p.len(), g.len());
            for ((p, &g), a) in p.iter_mut().zip(g).zip(acc.iter_mut()) {
                if g == 0.0 {
                    continue;
                }
                *a += g * g;
                *p -= lr * g / (a.sqrt() + self.eps);
            }
        }
    }
}
