//! Central finite-difference oracle for analytic gradients.

use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::cells::CellKind;
use crate::error::{shape_err, Error, Result};
use crate::model::LanguageModel;
use crate::params::ParamSet;
use crate::training::init::uniform_fill;

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_REL_TOL: f64 = 1e-5;
pub const DEFAULT_ABS_FLOOR: f64 = 1e-10;

/// Symmetric difference formulas for one coordinate.
///
/// The two-point formula at `ε = 1e-5` carries about `1e-10` of absolute
/// rounding noise on losses of order ten, which exceeds a `1e-5` relative
/// tolerance for small gradient entries. The six-point formula at a larger
/// step keeps both truncation and rounding error near `1e-12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stencil {
    /// `(L(θ+ε) − L(θ−ε)) / 2ε`.
    Central(f64),
    /// Sixth-order central difference with step `h`.
    Central6(f64),
}

pub const CERTIFY_STENCIL: Stencil = Stencil::Central6(1e-2);

impl Stencil {
    /// Derivative at zero of `f(s) = L(θ + s e_k)`.
    pub fn derivative<F: FnMut(f64) -> Result<f64>>(self, mut f: F) -> Result<f64> {
        let terms: &[(f64, f64)] = match self {
            Stencil::Central(_) => &[(1.0, 1.0), (-1.0, -1.0)],
            Stencil::Central6(_) => &[(3.0, 1.0), (2.0, -9.0), (1.0, 45.0), (-1.0, -45.0), (-2.0, 9.0), (-3.0, -1.0)],
        };
        let (h, denom) = match self {
            Stencil::Central(e) => (e, 2.0 * e),
            Stencil::Central6(h) => (h, 60.0 * h),
        };
        let mut acc = 0.0;
        for &(s, w) in terms {
            let v = f(s * h)?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("loss at offset {}", s * h)));
            }
            acc += w * v;
        }
        Ok(acc / denom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub worst_index: usize,
    pub passed: bool,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} rel {:>10.3e}  abs {:>10.3e}  worst #{:<6} {}",
            self.name,
            self.max_rel_err,
            self.max_abs_err,
            self.worst_index,
            if self.passed { "ok" } else { "FAIL" }
        )
    }
}

/// `(L(θ + ε e_k) − L(θ − ε e_k)) / 2ε` for every coordinate `k`.
pub fn finite_diff<F>(loss: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    finite_diff_with(loss, params, Stencil::Central(eps))
}

pub fn finite_diff_with<F>(mut loss: F, params: &[f64], stencil: Stencil) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut theta = params.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        let orig = theta[k];
        let d = stencil.derivative(|s| {
            theta[k] = orig + s;
            loss(&theta)
        });
        theta[k] = orig;
        out.push(d.map_err(|e| match e {
            Error::NonFinite(_) => Error::NonFinite(format!("loss at coordinate {k}")),
            e => e,
        })?);
    }
    Ok(out)
}

/// Coordinate-wise comparison. Relative error is
/// `|a − n| / max(|a|, |n|, abs_floor)`; a coordinate passes when that is
/// below `rel_tol` or both values are below `abs_floor`.
pub fn compare(name: &str, analytic: &[f64], numeric: &[f64], rel_tol: f64, abs_floor: f64) -> Result<CheckReport> {
    if analytic.len() != numeric.len() {
        return Err(shape_err("compare", format!("[{}]", analytic.len()), format!("[{}]", numeric.len())));
    }
    let mut report = CheckReport {
        name: name.to_owned(),
        max_rel_err: 0.0,
        max_abs_err: 0.0,
        worst_index: 0,
        passed: true,
    };
    for (k, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let abs = (a - n).abs();
        let rel = abs / a.abs().max(n.abs()).max(abs_floor);
        let below_floor = a.abs() < abs_floor && n.abs() < abs_floor;
        let ok = rel < rel_tol || below_floor;
        // coordinates under the floor carry no relative information
        if !below_floor && rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_index = k;
        }
        report.max_abs_err = report.max_abs_err.max(abs);
        report.passed &= ok;
    }
    Ok(report)
}

/// Checks every named buffer of `analytic` against central differences of
/// `loss`, perturbing the matching buffer of `params`.
pub fn check_param_set<P, F>(
    params: &P,
    analytic: &P,
    mut loss: F,
    stencil: Stencil,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<Vec<CheckReport>>
where
    P: ParamSet + Clone,
    F: FnMut(&P) -> Result<f64>,
{
    let names: Vec<&'static str> = params.buffers().iter().map(|(n, _)| *n).collect();
    let analytic_bufs: Vec<Vec<f64>> = analytic.buffers().iter().map(|(_, b)| b.to_vec()).collect();
    let mut work = params.clone();
    let mut reports = Vec::with_capacity(names.len());
    for (bi, name) in names.iter().enumerate() {
        let len = analytic_bufs[bi].len();
        let mut numeric = Vec::with_capacity(len);
        for k in 0..len {
            let orig = work.buffers()[bi].1[k];
            let d = stencil.derivative(|s| {
                work.buffers_mut()[bi].1[k] = orig + s;
                loss(&work)
            });
            work.buffers_mut()[bi].1[k] = orig;
            numeric.push(d.map_err(|e| match e {
                Error::NonFinite(_) => Error::NonFinite(format!("loss while perturbing {name}[{k}]")),
                e => e,
            })?);
        }
        reports.push(compare(name, &analytic_bufs[bi], &numeric, rel_tol, abs_floor)?);
    }
    Ok(reports)
}

/// Dimensions of a randomized certification instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckDims {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub vocab_size: usize,
    pub seq_len: usize,
}

impl Default for CheckDims {
    fn default() -> Self {
        CheckDims {
            input_dim: 5,
            hidden_dim: 7,
            vocab_size: 11,
            seq_len: 6,
        }
    }
}

/// Random model with every parameter (biases and tensor included) drawn
/// uniformly, so no gradient is trivially zero.
pub fn random_model(kind: CellKind, dims: CheckDims, rng: &mut StdRng) -> LanguageModel {
    let mut model = LanguageModel::zeros(kind, dims.vocab_size, dims.input_dim, dims.hidden_dim);
    for (_, b) in model.buffers_mut() {
        uniform_fill(b, 0.5, rng);
    }
    model
}

/// Full-sequence BPTT gradients of one random model and token sequence
/// against central differences of the sequence NLL, per parameter buffer.
pub fn certify(kind: CellKind, dims: CheckDims, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let model = random_model(kind, dims, &mut rng);
    let tokens: Vec<usize> = (0..dims.seq_len + 1).map(|_| rng.gen_range(0..dims.vocab_size)).collect();
    let mut grads = model.zero_grads();
    model.bptt(&tokens, None, None, &mut grads)?;
    let mut reports = check_param_set(
        &model,
        &grads,
        |m| Ok(m.sequence_nll(&tokens)?.total_nll),
        CERTIFY_STENCIL,
        DEFAULT_REL_TOL,
        DEFAULT_ABS_FLOOR,
    )?;
    for r in &mut reports {
        r.name = format!("{kind}/{}", r.name);
    }
    Ok(reports)
}
