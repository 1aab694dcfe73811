use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{sigmoid, tanh, Matrix, Tensor3, Vector};
use crate::params::ParamSet;

/// LSTM weights with full peephole matrices, plus the optional tensor that
/// turns the cell into an LSTMRNTN.
///
/// ```text
/// i  = σ(x W_xi + h W_hi + c W_ci + b_i)
/// f  = σ(x W_xf + h W_hf + c W_cf + b_f)
/// a  = bilinear(x, W_tsr, h) + x W_xc + h W_hc + b_c
/// c' = f⊙c + i⊙tanh(a)
/// o  = σ(x W_xo + h W_ho + c' W_co + b_o)
/// h' = o⊙tanh(c')
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub w_xi: Matrix,
    pub w_hi: Matrix,
    pub w_ci: Matrix,
    pub b_i: Vector,
    pub w_xf: Matrix,
    pub w_hf: Matrix,
    pub w_cf: Matrix,
    pub b_f: Vector,
    pub w_xc: Matrix,
    pub w_hc: Matrix,
    pub b_c: Vector,
    pub w_xo: Matrix,
    pub w_ho: Matrix,
    pub w_co: Matrix,
    pub b_o: Vector,
    pub w_tsr: Option<Tensor3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmTrace {
    pub x: Vector,
    pub h_prev: Vector,
    pub c_prev: Vector,
    pub i: Vector,
    pub f: Vector,
    pub o: Vector,
    /// Candidate pre-activation `a`.
    pub pre_cand: Vector,
    pub cand: Vector,
    pub c: Vector,
    pub tanh_c: Vector,
    pub h: Vector,
}

impl LstmParams {
    pub fn zeros(i: usize, d: usize, w_tsr: Option<Tensor3>) -> Self {
        LstmParams {
            w_xi: Matrix::zeros(i, d),
            w_hi: Matrix::zeros(d, d),
            w_ci: Matrix::zeros(d, d),
            b_i: Vector::zeros(d),
            w_xf: Matrix::zeros(i, d),
            w_hf: Matrix::zeros(d, d),
            w_cf: Matrix::zeros(d, d),
            b_f: Vector::zeros(d),
            w_xc: Matrix::zeros(i, d),
            w_hc: Matrix::zeros(d, d),
            b_c: Vector::zeros(d),
            w_xo: Matrix::zeros(i, d),
            w_ho: Matrix::zeros(d, d),
            w_co: Matrix::zeros(d, d),
            b_o: Vector::zeros(d),
            w_tsr,
        }
    }

    pub(crate) fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        vec![
            &mut self.w_xi,
            &mut self.w_hi,
            &mut self.w_ci,
            &mut self.w_xf,
            &mut self.w_hf,
            &mut self.w_cf,
            &mut self.w_xc,
            &mut self.w_hc,
            &mut self.w_xo,
            &mut self.w_ho,
            &mut self.w_co,
        ]
    }
}

impl ParamSet for LstmParams {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        let mut v: Vec<(&'static str, &[f64])> = vec![
            ("W_xi", self.w_xi.data()),
            ("W_hi", self.w_hi.data()),
            ("W_ci", self.w_ci.data()),
            ("b_i", &self.b_i),
            ("W_xf", self.w_xf.data()),
            ("W_hf", self.w_hf.data()),
            ("W_cf", self.w_cf.data()),
            ("b_f", &self.b_f),
            ("W_xc", self.w_xc.data()),
            ("W_hc", self.w_hc.data()),
            ("b_c", &self.b_c),
            ("W_xo", self.w_xo.data()),
            ("W_ho", self.w_ho.data()),
            ("W_co", self.w_co.data()),
            ("b_o", &self.b_o),
        ];
        if let Some(t) = &self.w_tsr {
            v.push(("W_tsr", t.data()));
        }
        v
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut v: Vec<(&'static str, &mut [f64])> = vec![
            ("W_xi", self.w_xi.data_mut()),
            ("W_hi", self.w_hi.data_mut()),
            ("W_ci", self.w_ci.data_mut()),
            ("b_i", &mut self.b_i),
            ("W_xf", self.w_xf.data_mut()),
            ("W_hf", self.w_hf.data_mut()),
            ("W_cf", self.w_cf.data_mut()),
            ("b_f", &mut self.b_f),
            ("W_xc", self.w_xc.data_mut()),
            ("W_hc", self.w_hc.data_mut()),
            ("b_c", &mut self.b_c),
            ("W_xo", self.w_xo.data_mut()),
            ("W_ho", self.w_ho.data_mut()),
            ("W_co", self.w_co.data_mut()),
            ("b_o", &mut self.b_o),
        ];
        if let Some(t) = &mut self.w_tsr {
            v.push(("W_tsr", t.data_mut()));
        }
        v
    }
}

fn gate(x: &[f64], h: &[f64], c: &[f64], wx: &Matrix, wh: &Matrix, wc: &Matrix, b: &Vector) -> Result<Vector> {
    let mut a = b.clone();
    wx.vecmul_acc(x, &mut a)?;
    wh.vecmul_acc(h, &mut a)?;
    wc.vecmul_acc(c, &mut a)?;
    Ok(sigmoid(&a))
}

pub(super) fn forward(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vector, Vector, LstmTrace)> {
    let i = gate(x, h_prev, c_prev, &p.w_xi, &p.w_hi, &p.w_ci, &p.b_i)?;
    let f = gate(x, h_prev, c_prev, &p.w_xf, &p.w_hf, &p.w_cf, &p.b_f)?;

    let mut a = p.b_c.clone();
    if let Some(t) = &p.w_tsr {
        t.bilinear_acc(x, h_prev, &mut a)?;
    }
    p.w_xc.vecmul_acc(x, &mut a)?;
    p.w_hc.vecmul_acc(h_prev, &mut a)?;
    let cand = tanh(&a);

    let d = h_prev.len();
    let c: Vector = (0..d)
        .map(|k| f[k] * c_prev[k] + i[k] * cand[k])
        .collect::<Vec<_>>()
        .into();

    // the output gate peeks at the updated cell
    let o = gate(x, h_prev, &c, &p.w_xo, &p.w_ho, &p.w_co, &p.b_o)?;
    let tanh_c = tanh(&c);
    let h: Vector = o.iter().zip(tanh_c.iter()).map(|(o, t)| o * t).collect::<Vec<_>>().into();

    let trace = LstmTrace {
        x: Vector::new(x.to_vec()),
        h_prev: Vector::new(h_prev.to_vec()),
        c_prev: Vector::new(c_prev.to_vec()),
        i,
        f,
        o,
        pre_cand: a,
        cand,
        c: c.clone(),
        tanh_c,
        h: h.clone(),
    };
    Ok((h, c, trace))
}

/// Returns `(∂x, ∂h_prev, ∂c_prev)`.
pub(super) fn backward(
    p: &LstmParams,
    tr: &LstmTrace,
    grad_h: &[f64],
    grad_c: &[f64],
    g: &mut LstmParams,
) -> Result<(Vector, Vector, Vector)> {
    let d = tr.h_prev.len();
    let mut gx = Vector::zeros(tr.x.len());
    let mut gh_prev = Vector::zeros(d);
    let mut gc_prev = Vector::zeros(d);

    // h' = o⊙tanh(c')
    let mut dc = Vector::zeros(d);
    let mut dao = Vector::zeros(d);
    for k in 0..d {
        let t = tr.tanh_c[k];
        dc[k] = grad_c[k] + grad_h[k] * tr.o[k] * (1.0 - t * t);
        dao[k] = grad_h[k] * t * tr.o[k] * (1.0 - tr.o[k]);
    }

    // output gate, including its peephole on c'
    g.w_xo.add_outer(&tr.x, &dao, 1.0)?;
    g.w_ho.add_outer(&tr.h_prev, &dao, 1.0)?;
    g.w_co.add_outer(&tr.c, &dao, 1.0)?;
    g.b_o.add_assign(&dao)?;
    p.w_xo.matvec_acc(&dao, &mut gx)?;
    p.w_ho.matvec_acc(&dao, &mut gh_prev)?;
    p.w_co.matvec_acc(&dao, &mut dc)?;

    // c' = f⊙c + i⊙tanh(a)
    let mut dai = Vector::zeros(d);
    let mut daf = Vector::zeros(d);
    let mut da = Vector::zeros(d);
    for k in 0..d {
        gc_prev[k] += dc[k] * tr.f[k];
        dai[k] = dc[k] * tr.cand[k] * tr.i[k] * (1.0 - tr.i[k]);
        daf[k] = dc[k] * tr.c_prev[k] * tr.f[k] * (1.0 - tr.f[k]);
        // ∂c'/∂a = i (1 − tanh²(a))
        da[k] = dc[k] * tr.i[k] * (1.0 - tr.cand[k] * tr.cand[k]);
    }

    if let (Some(t), Some(gt)) = (&p.w_tsr, &mut g.w_tsr) {
        t.bilinear_backward_acc(&tr.x, &tr.h_prev, &da, gt, &mut gx, &mut gh_prev)?;
    }
    g.w_xc.add_outer(&tr.x, &da, 1.0)?;
    g.w_hc.add_outer(&tr.h_prev, &da, 1.0)?;
    g.b_c.add_assign(&da)?;
    p.w_xc.matvec_acc(&da, &mut gx)?;
    p.w_hc.matvec_acc(&da, &mut gh_prev)?;

    for (dgate, wx, wh, wc, gwx, gwh, gwc, gb) in [
        (&dai, &p.w_xi, &p.w_hi, &p.w_ci, &mut g.w_xi, &mut g.w_hi, &mut g.w_ci, &mut g.b_i),
        (&daf, &p.w_xf, &p.w_hf, &p.w_cf, &mut g.w_xf, &mut g.w_hf, &mut g.w_cf, &mut g.b_f),
    ] {
        gwx.add_outer(&tr.x, dgate, 1.0)?;
        gwh.add_outer(&tr.h_prev, dgate, 1.0)?;
        gwc.add_outer(&tr.c_prev, dgate, 1.0)?;
        gb.add_assign(dgate)?;
        wx.matvec_acc(dgate, &mut gx)?;
        wh.matvec_acc(dgate, &mut gh_prev)?;
        wc.matvec_acc(dgate, &mut gc_prev)?;
    }

    Ok((gx, gh_prev, gc_prev))
}
