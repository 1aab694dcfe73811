//! Parameter initialization.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::{Matrix, Tensor3};

/// Random matrix whose smaller-dimension Gram matrix is the identity.
///
/// A Gaussian `max × min` matrix is orthonormalized column by column with
/// two passes of modified Gram–Schmidt, then transposed when `rows < cols`.
pub fn orthogonal_init<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let (long, short) = (rows.max(cols), rows.min(cols));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= proj * b;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        // a draw inside the span of the current basis is resampled
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }

    let mut m = Matrix::zeros(rows, cols);
    for (j, q) in basis.iter().enumerate() {
        for (i, &val) in q.iter().enumerate() {
            if rows >= cols {
                m.set(i, j, val);
            } else {
                m.set(j, i, val);
            }
        }
    }
    m
}

/// Uniform in `[−r, r]` with `r = 1/√(in_dim · out_dim)`.
pub fn tensor_uniform_init<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Tensor3 {
    let r = 1.0 / ((in_dim * out_dim) as f64).sqrt();
    let mut t = Tensor3::zeros(in_dim, out_dim);
    uniform_fill(t.data_mut(), r, rng);
    t
}

pub fn uniform_fill<R: Rng + ?Sized>(buf: &mut [f64], r: f64, rng: &mut R) {
    let dist = Uniform::new_inclusive(-r, r);
    for v in buf {
        *v = dist.sample(rng);
    }
}
