use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{tanh, Matrix, Vector};
use crate::params::ParamSet;

/// `h_t = tanh(x_t W_xh + h_{t-1} W_hh + b_h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleParams {
    pub w_xh: Matrix,
    pub w_hh: Matrix,
    pub b_h: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleTrace {
    pub x: Vector,
    pub h_prev: Vector,
    pub pre: Vector,
    pub h: Vector,
}

impl SimpleParams {
    pub fn zeros(i: usize, d: usize) -> Self {
        SimpleParams {
            w_xh: Matrix::zeros(i, d),
            w_hh: Matrix::zeros(d, d),
            b_h: Vector::zeros(d),
        }
    }

    pub(crate) fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        vec![&mut self.w_xh, &mut self.w_hh]
    }
}

impl ParamSet for SimpleParams {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("W_xh", self.w_xh.data()),
            ("W_hh", self.w_hh.data()),
            ("b_h", &self.b_h),
        ]
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("W_xh", self.w_xh.data_mut()),
            ("W_hh", self.w_hh.data_mut()),
            ("b_h", &mut self.b_h),
        ]
    }
}

pub(super) fn forward(p: &SimpleParams, x: &[f64], h_prev: &[f64]) -> Result<(Vector, SimpleTrace)> {
    let mut pre = p.b_h.clone();
    p.w_xh.vecmul_acc(x, &mut pre)?;
    p.w_hh.vecmul_acc(h_prev, &mut pre)?;
    let h = tanh(&pre);
    let trace = SimpleTrace {
        x: Vector::new(x.to_vec()),
        h_prev: Vector::new(h_prev.to_vec()),
        pre,
        h: h.clone(),
    };
    Ok((h, trace))
}

pub(super) fn backward(
    p: &SimpleParams,
    tr: &SimpleTrace,
    grad_h: &[f64],
    g: &mut SimpleParams,
) -> Result<(Vector, Vector)> {
    let da: Vector = grad_h.iter().zip(tr.h.iter()).map(|(gh, h)| gh * (1.0 - h * h)).collect::<Vec<_>>().into();
    g.w_xh.add_outer(&tr.x, &da, 1.0)?;
    g.w_hh.add_outer(&tr.h_prev, &da, 1.0)?;
    g.b_h.add_assign(&da)?;
    let gx = p.w_xh.matvec(&da)?;
    let gh = p.w_hh.matvec(&da)?;
    Ok((gx, gh))
}
