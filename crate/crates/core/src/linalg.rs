//! Dense 64-bit linear algebra used by the recurrent cells.
//!
//! Vectors are row vectors: the cells compute `x·W` for a weight `W` of shape
//! `in × out`, matching the row-vector convention of the gate equations.
//! Storage is row-major everywhere.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};

/// A dense vector of `f64`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Self {
        Vector(data)
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn filled(len: usize, value: f64) -> Self {
        Vector(vec![value; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    fn check_same(&self, other: &Vector, op: &'static str) -> Result<()> {
        if self.len() != other.len() {
            return Err(shape_err(op, format!("[{}]", self.len()), format!("[{}]", other.len())));
        }
        Ok(())
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.check_same(other, "add")?;
        Ok(Vector(self.iter().zip(other.iter()).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.check_same(other, "sub")?;
        Ok(Vector(self.iter().zip(other.iter()).map(|(a, b)| a - b).collect()))
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &Vector) -> Result<Vector> {
        self.check_same(other, "hadamard")?;
        Ok(Vector(self.iter().zip(other.iter()).map(|(a, b)| a * b).collect()))
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        self.check_same(other, "dot")?;
        Ok(self.iter().zip(other.iter()).map(|(a, b)| a * b).sum())
    }

    pub fn scale(&self, alpha: f64) -> Vector {
        Vector(self.iter().map(|v| v * alpha).collect())
    }

    /// `self += other` in place.
    pub fn add_assign(&mut self, other: &Vector) -> Result<()> {
        self.check_same(other, "add_assign")?;
        for (a, b) in self.0.iter_mut().zip(other.iter()) {
            *a += b;
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.iter().map(|&v| f(v)).collect())
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.iter().enumerate() {
            if v > self[best] {
                best = i;
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(
                "Matrix::from_vec",
                format!("{rows}x{cols}"),
                format!("data of length {}", data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(shape_err("Matrix::from_rows", format!("{cols} columns"), format!("row of {}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// Row-vector product `x·W`, for `x` of length `rows`.
    pub fn vecmul(&self, x: &[f64]) -> Result<Vector> {
        let mut out = Vector::zeros(self.cols);
        self.vecmul_acc(x, &mut out)?;
        Ok(out)
    }

    /// `out += x·W`.
    pub fn vecmul_acc(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.rows || out.len() != self.cols {
            return Err(shape_err("vecmul", format!("[{}]", x.len()), self.shape_str()));
        }
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(a)) {
                *o += xa * w;
            }
        }
        Ok(())
    }

    /// Column-vector product `W·v`, for `v` of length `cols`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vector> {
        let mut out = Vector::zeros(self.rows);
        self.matvec_acc(v, &mut out)?;
        Ok(out)
    }

    /// `out += W·v`.
    pub fn matvec_acc(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        if v.len() != self.cols || out.len() != self.rows {
            return Err(shape_err("matvec", self.shape_str(), format!("[{}]", v.len())));
        }
        for (r, o) in out.iter_mut().enumerate() {
            *o += self.row(r).iter().zip(v).map(|(w, x)| w * x).sum::<f64>();
        }
        Ok(())
    }

    /// Outer product `a bᵀ` with shape `len(a) × len(b)`.
    pub fn outer(a: &[f64], b: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(a.len(), b.len());
        m.add_outer(a, b, 1.0).expect("shapes agree by construction");
        m
    }

    /// `self += scale · a bᵀ`.
    pub fn add_outer(&mut self, a: &[f64], b: &[f64], scale: f64) -> Result<()> {
        if a.len() != self.rows || b.len() != self.cols {
            return Err(shape_err(
                "add_outer",
                self.shape_str(),
                format!("[{}] x [{}]", a.len(), b.len()),
            ));
        }
        for (r, &ar) in a.iter().enumerate() {
            let s = ar * scale;
            if s == 0.0 {
                continue;
            }
            for (m, &bc) in self.row_mut(r).iter_mut().zip(b) {
                *m += s * bc;
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(shape_err("add", self.shape_str(), other.shape_str()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(shape_err("hadamard", self.shape_str(), other.shape_str()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(shape_err("matmul", self.shape_str(), other.shape_str()));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let row = self.row(r).to_vec();
            other.vecmul_acc(&row, out.row_mut(r))?;
        }
        Ok(out)
    }
}

/// Three-way weight of shape `in_dim × out_dim × out_dim`, stored as
/// `out_dim` slices of shape `in_dim × out_dim`.
///
/// Slice `k` parameterizes output coordinate `k` of the bilinear product
/// `xᵀ · slice[k] · h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    in_dim: usize,
    out_dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Tensor3 {
            in_dim,
            out_dim,
            data: vec![0.0; in_dim * out_dim * out_dim],
        }
    }

    pub fn from_slices(slices: Vec<Matrix>) -> Result<Self> {
        let out_dim = slices.len();
        let in_dim = slices.first().map_or(0, Matrix::rows);
        let mut data = Vec::with_capacity(in_dim * out_dim * out_dim);
        for s in &slices {
            if s.shape() != (in_dim, out_dim) {
                return Err(shape_err("Tensor3::from_slices", format!("{in_dim}x{out_dim}"), s.shape_str()));
            }
            data.extend_from_slice(s.data());
        }
        Ok(Tensor3 { in_dim, out_dim, data })
    }

    pub fn from_vec(in_dim: usize, out_dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != in_dim * out_dim * out_dim {
            return Err(shape_err(
                "Tensor3::from_vec",
                format!("{in_dim}x{out_dim}x{out_dim}"),
                format!("data of length {}", data.len()),
            ));
        }
        Ok(Tensor3 { in_dim, out_dim, data })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}x{}", self.in_dim, self.out_dim, self.out_dim)
    }

    fn slice_len(&self) -> usize {
        self.in_dim * self.out_dim
    }

    /// Slice `k` as a row-major `in_dim × out_dim` block.
    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.slice_len();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.slice_len();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn slice_matrix(&self, k: usize) -> Matrix {
        Matrix::from_vec(self.in_dim, self.out_dim, self.slice(k).to_vec()).expect("slice shape")
    }

    pub fn get(&self, k: usize, a: usize, b: usize) -> f64 {
        self.data[k * self.slice_len() + a * self.out_dim + b]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn check(&self, x: &[f64], h: &[f64], op: &'static str) -> Result<()> {
        if x.len() != self.in_dim || h.len() != self.out_dim {
            return Err(shape_err(
                op,
                self.shape_str(),
                format!("x[{}], h[{}]", x.len(), h.len()),
            ));
        }
        Ok(())
    }

    /// `out += bilinear(x, self, h)`.
    pub fn bilinear_acc(&self, x: &[f64], h: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(x, h, "bilinear")?;
        if out.len() != self.out_dim {
            return Err(shape_err("bilinear", self.shape_str(), format!("out[{}]", out.len())));
        }
        for (k, o) in out.iter_mut().enumerate() {
            let slice = self.slice(k);
            let mut acc = 0.0;
            for (a, &xa) in x.iter().enumerate() {
                let row = &slice[a * self.out_dim..(a + 1) * self.out_dim];
                for (&w, &hb) in row.iter().zip(h) {
                    acc += xa * w * hb;
                }
            }
            *o += acc;
        }
        Ok(())
    }

    /// Accumulates the gradients of `gᵀ · bilinear(x, self, h)` into
    /// `grad_tensor`, `grad_x` and `grad_h`.
    pub fn bilinear_backward_acc(
        &self,
        x: &[f64],
        h: &[f64],
        g: &[f64],
        grad_tensor: &mut Tensor3,
        grad_x: &mut [f64],
        grad_h: &mut [f64],
    ) -> Result<()> {
        self.check(x, h, "bilinear_grads")?;
        if g.len() != self.out_dim
            || grad_x.len() != self.in_dim
            || grad_h.len() != self.out_dim
            || grad_tensor.in_dim != self.in_dim
            || grad_tensor.out_dim != self.out_dim
        {
            return Err(shape_err(
                "bilinear_grads",
                self.shape_str(),
                format!("g[{}], gT {}", g.len(), grad_tensor.shape_str()),
            ));
        }
        let d = self.out_dim;
        for (k, &gk) in g.iter().enumerate() {
            if gk == 0.0 {
                continue;
            }
            let slice = self.slice(k);
            let gslice = grad_tensor.slice_mut(k);
            for (a, &xa) in x.iter().enumerate() {
                let row = &slice[a * d..(a + 1) * d];
                let grow = &mut gslice[a * d..(a + 1) * d];
                let mut row_dot_h = 0.0;
                for b in 0..d {
                    grow[b] += gk * xa * h[b];
                    row_dot_h += row[b] * h[b];
                    grad_h[b] += gk * xa * row[b];
                }
                grad_x[a] += gk * row_dot_h;
            }
        }
        Ok(())
    }
}

/// Bilinear tensor product: `out[k] = xᵀ · T.slice[k] · h`.
pub fn bilinear(x: &Vector, t: &Tensor3, h: &Vector) -> Result<Vector> {
    let mut out = Vector::zeros(t.out_dim());
    t.bilinear_acc(x, h, &mut out)?;
    Ok(out)
}

/// Gradients of `gᵀ · bilinear(x, T, h)` with respect to `x`, `T` and `h`.
pub fn bilinear_grads(x: &Vector, t: &Tensor3, h: &Vector, g: &Vector) -> Result<(Vector, Tensor3, Vector)> {
    let mut gx = Vector::zeros(t.in_dim());
    let mut gt = Tensor3::zeros(t.in_dim(), t.out_dim());
    let mut gh = Vector::zeros(t.out_dim());
    t.bilinear_backward_acc(x, h, g, &mut gt, &mut gx, &mut gh)?;
    Ok((gx, gt, gh))
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &[f64]) -> Vector {
    Vector(x.iter().map(|&v| sigmoid_scalar(v)).collect())
}

pub fn tanh(x: &[f64]) -> Vector {
    Vector(x.iter().map(|v| v.tanh()).collect())
}

/// Derivative of sigmoid expressed through its output `f`: `f(1 − f)`.
pub fn sigmoid_grad_from_output(f: &[f64]) -> Vector {
    Vector(f.iter().map(|&v| v * (1.0 - v)).collect())
}

/// Derivative of tanh expressed through its output `f`: `1 − f²`.
pub fn tanh_grad_from_output(f: &[f64]) -> Vector {
    Vector(f.iter().map(|&v| 1.0 - v * v).collect())
}

/// Softmax with max-subtraction.
pub fn softmax(x: &[f64]) -> Vector {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Vector(out)
}

/// `log(softmax(x))[index]`, computed without forming probabilities.
pub fn log_softmax_at(x: &[f64], index: usize) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = x.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
    x[index] - lse
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_int_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect()
    }

    fn rand_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn bilinear_zero_tensor_gives_zero() {
        let t = Tensor3::zeros(3, 4);
        let out = bilinear(&Vector::new(vec![1.0, -2.0, 3.0]), &t, &Vector::filled(4, 0.7)).unwrap();
        assert_eq!(out, Vector::zeros(4));
    }

    #[test]
    fn bilinear_scalar_case() {
        let t = Tensor3::from_vec(1, 1, vec![5.0]).unwrap();
        let out = bilinear(&Vector::new(vec![2.0]), &t, &Vector::new(vec![3.0])).unwrap();
        assert_eq!(out.as_slice(), &[30.0]);
    }

    #[test]
    fn bilinear_matches_triple_loop() {
        let mut rng = StdRng::seed_from_u64(7);
        let (i, d) = (2, 3);
        let t = Tensor3::from_vec(i, d, rand_int_vec(&mut rng, i * d * d)).unwrap();
        let x = Vector::new(rand_int_vec(&mut rng, i));
        let h = Vector::new(rand_int_vec(&mut rng, d));
        let mut expect = vec![0.0; d];
        for k in 0..d {
            for a in 0..i {
                for b in 0..d {
                    expect[k] += x[a] * t.get(k, a, b) * h[b];
                }
            }
        }
        assert_eq!(bilinear(&x, &t, &h).unwrap().as_slice(), expect.as_slice());
    }

    #[test]
    fn bilinear_rejects_bad_shapes() {
        let t = Tensor3::zeros(2, 3);
        let err = bilinear(&Vector::zeros(3), &t, &Vector::zeros(3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3x3") && msg.contains("x[3]"), "{msg}");
        assert!(bilinear_grads(&Vector::zeros(2), &t, &Vector::zeros(3), &Vector::zeros(2)).is_err());
    }

    #[test]
    fn bilinear_grads_zero_upstream() {
        let mut rng = StdRng::seed_from_u64(1);
        let t = Tensor3::from_vec(2, 3, rand_vec(&mut rng, 18)).unwrap();
        let (gx, gt, gh) = bilinear_grads(
            &Vector::new(rand_vec(&mut rng, 2)),
            &t,
            &Vector::new(rand_vec(&mut rng, 3)),
            &Vector::zeros(3),
        )
        .unwrap();
        assert!(gx.iter().chain(gt.data()).chain(gh.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn bilinear_grads_scalar_case() {
        let t = Tensor3::from_vec(1, 1, vec![5.0]).unwrap();
        let (gx, gt, gh) =
            bilinear_grads(&Vector::new(vec![2.0]), &t, &Vector::new(vec![3.0]), &Vector::new(vec![1.0])).unwrap();
        assert_eq!(gt.data(), &[6.0]);
        assert_eq!(gx.as_slice(), &[15.0]);
        assert_eq!(gh.as_slice(), &[10.0]);
    }

    #[test]
    fn bilinear_grads_match_central_differences() {
        let mut rng = StdRng::seed_from_u64(42);
        let (i, d) = (3, 4);
        let eps = 1e-5;
        let t = Tensor3::from_vec(i, d, rand_vec(&mut rng, i * d * d)).unwrap();
        let x = Vector::new(rand_vec(&mut rng, i));
        let h = Vector::new(rand_vec(&mut rng, d));
        let g = Vector::new(rand_vec(&mut rng, d));
        let loss = |x: &Vector, t: &Tensor3, h: &Vector| bilinear(x, t, h).unwrap().dot(&g).unwrap();
        let (gx, gt, gh) = bilinear_grads(&x, &t, &h, &g).unwrap();
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-10);

        for a in 0..i {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[a] += eps;
            xm[a] -= eps;
            let num = (loss(&xp, &t, &h) - loss(&xm, &t, &h)) / (2.0 * eps);
            assert!(rel(gx[a], num) < 1e-7, "gx[{a}]");
        }
        for b in 0..d {
            let (mut hp, mut hm) = (h.clone(), h.clone());
            hp[b] += eps;
            hm[b] -= eps;
            let num = (loss(&x, &t, &hp) - loss(&x, &t, &hm)) / (2.0 * eps);
            assert!(rel(gh[b], num) < 1e-7, "gh[{b}]");
        }
        for n in 0..t.data().len() {
            let (mut tp, mut tm) = (t.clone(), t.clone());
            tp.data_mut()[n] += eps;
            tm.data_mut()[n] -= eps;
            let num = (loss(&x, &tp, &h) - loss(&x, &tm, &h)) / (2.0 * eps);
            assert!(rel(gt.data()[n], num) < 1e-7, "gT[{n}]");
        }
    }

    #[test]
    fn identity_vecmul_and_matvec() {
        let x = [1.5, -2.0, 0.25];
        let id = Matrix::identity(3);
        assert_eq!(id.vecmul(&x).unwrap().as_slice(), &x);
        assert_eq!(id.matvec(&x).unwrap().as_slice(), &x);
    }

    #[test]
    fn hadamard_with_zero_is_zero() {
        let v = Vector::new(vec![3.0, -1.0, 8.0]);
        assert_eq!(v.hadamard(&Vector::zeros(3)).unwrap(), Vector::zeros(3));
        assert!(v.hadamard(&Vector::zeros(2)).is_err());
    }

    #[test]
    fn matvec_matches_double_loop() {
        let mut rng = StdRng::seed_from_u64(3);
        let m = Matrix::from_vec(4, 5, rand_int_vec(&mut rng, 20)).unwrap();
        let v = rand_int_vec(&mut rng, 5);
        let x = rand_int_vec(&mut rng, 4);
        let mut mv = vec![0.0; 4];
        let mut xm = vec![0.0; 5];
        for r in 0..4 {
            for c in 0..5 {
                mv[r] += m.get(r, c) * v[c];
                xm[c] += x[r] * m.get(r, c);
            }
        }
        assert_eq!(m.matvec(&v).unwrap().as_slice(), mv.as_slice());
        assert_eq!(m.vecmul(&x).unwrap().as_slice(), xm.as_slice());
        assert!(m.matvec(&x).is_err());
    }

    #[test]
    fn outer_product_entries() {
        let m = Matrix::outer(&[1.0, 2.0], &[3.0, 4.0, 5.0]);
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.data(), &[3.0, 4.0, 5.0, 6.0, 8.0, 10.0]);
    }

    #[test]
    fn activations_at_zero() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert_eq!(tanh(&[0.0])[0], 0.0);
        assert_eq!(softmax(&[2.0; 4]).as_slice(), &[0.25; 4]);
        assert_eq!(tanh_grad_from_output(&tanh(&[0.0]))[0], 1.0);
        assert_eq!(sigmoid_grad_from_output(&sigmoid(&[0.0]))[0], 0.25);
    }

    #[test]
    fn softmax_large_logits_do_not_overflow() {
        let p = softmax(&[1e3, 0.0]);
        // exp(-1000) underflows to 0 in f64; the exact value is ~5e-435
        assert_eq!(p[0], 1.0);
        assert!(p[1] >= 0.0 && p[1] < 1e-300);
        assert!(p.is_finite());
    }

    #[test]
    fn sigmoid_extremes_stay_finite() {
        let s = sigmoid(&[-800.0, 800.0]);
        assert!(s.is_finite());
        assert!(s[0] >= 0.0 && s[1] <= 1.0);
    }
}
