use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{sigmoid, tanh, Matrix, Tensor3, Vector};
use crate::params::ParamSet;

/// GRU weights, with the optional tensor that turns the cell into a GRURNTN.
///
/// ```text
/// r  = σ(x W_xr + h W_hr + b_r)
/// z  = σ(x W_xz + h W_hz + b_z)
/// a  = bilinear(x, W_tsr, r⊙h) + x W_xh + (r⊙h) W_hh + b_h
/// h̃  = tanh(a)
/// h' = (1 − z)⊙h + z⊙h̃
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub w_xr: Matrix,
    pub w_hr: Matrix,
    pub b_r: Vector,
    pub w_xz: Matrix,
    pub w_hz: Matrix,
    pub b_z: Vector,
    pub w_xh: Matrix,
    pub w_hh: Matrix,
    pub b_h: Vector,
    pub w_tsr: Option<Tensor3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruTrace {
    pub x: Vector,
    pub h_prev: Vector,
    pub r: Vector,
    pub z: Vector,
    /// `r ⊙ h_prev`
    pub gated: Vector,
    /// Candidate pre-activation `a`.
    pub pre_cand: Vector,
    pub cand: Vector,
    pub h: Vector,
}

impl GruParams {
    pub fn zeros(i: usize, d: usize, w_tsr: Option<Tensor3>) -> Self {
        GruParams {
            w_xr: Matrix::zeros(i, d),
            w_hr: Matrix::zeros(d, d),
            b_r: Vector::zeros(d),
            w_xz: Matrix::zeros(i, d),
            w_hz: Matrix::zeros(d, d),
            b_z: Vector::zeros(d),
            w_xh: Matrix::zeros(i, d),
            w_hh: Matrix::zeros(d, d),
            b_h: Vector::zeros(d),
            w_tsr,
        }
    }

    pub(crate) fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        vec![
            &mut self.w_xr,
            &mut self.w_hr,
            &mut self.w_xz,
            &mut self.w_hz,
            &mut self.w_xh,
            &mut self.w_hh,
        ]
    }
}

impl ParamSet for GruParams {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        let mut v: Vec<(&'static str, &[f64])> = vec![
            ("W_xr", self.w_xr.data()),
            ("W_hr", self.w_hr.data()),
            ("b_r", &self.b_r),
            ("W_xz", self.w_xz.data()),
            ("W_hz", self.w_hz.data()),
            ("b_z", &self.b_z),
            ("W_xh", self.w_xh.data()),
            ("W_hh", self.w_hh.data()),
            ("b_h", &self.b_h),
        ];
        if let Some(t) = &self.w_tsr {
            v.push(("W_tsr", t.data()));
        }
        v
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut v: Vec<(&'static str, &mut [f64])> = vec![
            ("W_xr", self.w_xr.data_mut()),
            ("W_hr", self.w_hr.data_mut()),
            ("b_r", &mut self.b_r),
            ("W_xz", self.w_xz.data_mut()),
            ("W_hz", self.w_hz.data_mut()),
            ("b_z", &mut self.b_z),
            ("W_xh", self.w_xh.data_mut()),
            ("W_hh", self.w_hh.data_mut()),
            ("b_h", &mut self.b_h),
        ];
        if let Some(t) = &mut self.w_tsr {
            v.push(("W_tsr", t.data_mut()));
        }
        v
    }
}

pub(super) fn forward(p: &GruParams, x: &[f64], h_prev: &[f64]) -> Result<(Vector, GruTrace)> {
    let mut ar = p.b_r.clone();
    p.w_xr.vecmul_acc(x, &mut ar)?;
    p.w_hr.vecmul_acc(h_prev, &mut ar)?;
    let r = sigmoid(&ar);

    let mut az = p.b_z.clone();
    p.w_xz.vecmul_acc(x, &mut az)?;
    p.w_hz.vecmul_acc(h_prev, &mut az)?;
    let z = sigmoid(&az);

    let gated: Vector = r.iter().zip(h_prev).map(|(r, h)| r * h).collect::<Vec<_>>().into();

    let mut a = p.b_h.clone();
    if let Some(t) = &p.w_tsr {
        t.bilinear_acc(x, &gated, &mut a)?;
    }
    p.w_xh.vecmul_acc(x, &mut a)?;
    p.w_hh.vecmul_acc(&gated, &mut a)?;
    let cand = tanh(&a);

    let h: Vector = (0..h_prev.len())
        .map(|k| (1.0 - z[k]) * h_prev[k] + z[k] * cand[k])
        .collect::<Vec<_>>()
        .into();

    let trace = GruTrace {
        x: Vector::new(x.to_vec()),
        h_prev: Vector::new(h_prev.to_vec()),
        r,
        z,
        gated,
        pre_cand: a,
        cand,
        h: h.clone(),
    };
    Ok((h, trace))
}

pub(super) fn backward(p: &GruParams, tr: &GruTrace, grad_h: &[f64], g: &mut GruParams) -> Result<(Vector, Vector)> {
    let d = tr.h_prev.len();
    let mut gx = Vector::zeros(tr.x.len());
    let mut gh_prev = Vector::zeros(d);

    // h' = (1 − z)⊙h + z⊙h̃
    let mut dz = Vector::zeros(d);
    let mut da = Vector::zeros(d);
    for k in 0..d {
        dz[k] = grad_h[k] * (tr.cand[k] - tr.h_prev[k]);
        gh_prev[k] += grad_h[k] * (1.0 - tr.z[k]);
        // f'(a) = 1 − tanh²(a)
        da[k] = grad_h[k] * tr.z[k] * (1.0 - tr.cand[k] * tr.cand[k]);
    }

    // candidate
    let mut dgated = Vector::zeros(d);
    if let (Some(t), Some(gt)) = (&p.w_tsr, &mut g.w_tsr) {
        t.bilinear_backward_acc(&tr.x, &tr.gated, &da, gt, &mut gx, &mut dgated)?;
    }
    g.w_xh.add_outer(&tr.x, &da, 1.0)?;
    g.w_hh.add_outer(&tr.gated, &da, 1.0)?;
    g.b_h.add_assign(&da)?;
    p.w_xh.matvec_acc(&da, &mut gx)?;
    p.w_hh.matvec_acc(&da, &mut dgated)?;

    // gated = r⊙h
    let mut dar = Vector::zeros(d);
    let mut daz = Vector::zeros(d);
    for k in 0..d {
        gh_prev[k] += dgated[k] * tr.r[k];
        dar[k] = dgated[k] * tr.h_prev[k] * tr.r[k] * (1.0 - tr.r[k]);
        daz[k] = dz[k] * tr.z[k] * (1.0 - tr.z[k]);
    }

    g.w_xz.add_outer(&tr.x, &daz, 1.0)?;
    g.w_hz.add_outer(&tr.h_prev, &daz, 1.0)?;
    g.b_z.add_assign(&daz)?;
    p.w_xz.matvec_acc(&daz, &mut gx)?;
    p.w_hz.matvec_acc(&daz, &mut gh_prev)?;

    g.w_xr.add_outer(&tr.x, &dar, 1.0)?;
    g.w_hr.add_outer(&tr.h_prev, &dar, 1.0)?;
    g.b_r.add_assign(&dar)?;
    p.w_xr.matvec_acc(&dar, &mut gx)?;
    p.w_hr.matvec_acc(&dar, &mut gh_prev)?;

    Ok((gx, gh_prev))
}
