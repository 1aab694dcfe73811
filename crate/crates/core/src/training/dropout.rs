//! Inverted dropout for the non-recurrent connections.

use rand::Rng;

use crate::linalg::Vector;

/// Mask with entries in `{0, 1/(1−p)}`; each entry is dropped with probability `p`.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vector {
    assert!((0.0..1.0).contains(&p), "dropout probability must lie in [0, 1)");
    if p == 0.0 {
        return Vector::filled(len, 1.0);
    }
    let keep = 1.0 / (1.0 - p);
    Vector::new((0..len).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect())
}

/// Per-timestep masks for the embedding→cell and hidden→output connections.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMasks {
    pub input: Vector,
    pub output: Vector,
}

impl StepMasks {
    pub fn draw<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, p: f64, rng: &mut R) -> Self {
        StepMasks {
            input: dropout_mask(input_dim, p, rng),
            output: dropout_mask(hidden_dim, p, rng),
        }
    }
}
