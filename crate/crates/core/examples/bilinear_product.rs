//! The bilinear tensor product and its gradients on a small instance.
//!
//!     cargo run --example bilinear_product

use rntn::linalg::{bilinear, bilinear_grads, Matrix, Tensor3, Vector};

fn main() -> rntn::Result<()> {
    // two slices, so the output has two components
    let t = Tensor3::from_slices(vec![
        Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, -1.0]])?,
        Matrix::from_rows(&[vec![0.5, 0.5], vec![-1.0, 0.0], vec![0.0, 3.0]])?,
    ])?;
    let x = Vector::new(vec![1.0, 2.0, -1.0]);
    let h = Vector::new(vec![0.5, -0.25]);

    let out = bilinear(&x, &t, &h)?;
    println!("x = {:?}", x.as_slice());
    println!("h = {:?}", h.as_slice());
    println!("bilinear(x, T, h) = {:?}", out.as_slice());
    for k in 0..t.out_dim() {
        let manual = t.slice_matrix(k).vecmul(&x)?.dot(&h)?;
        println!("  slice {k}: xᵀ T[{k}] h = {manual}");
    }

    let g = Vector::new(vec![1.0, -2.0]);
    let (gx, gt, gh) = bilinear_grads(&x, &t, &h, &g)?;
    println!("\nupstream g = {:?}", g.as_slice());
    println!("∂/∂x = {:?}", gx.as_slice());
    println!("∂/∂h = {:?}", gh.as_slice());
    for k in 0..gt.out_dim() {
        println!("∂/∂T[{k}] = g[{k}]·x hᵀ = {:?}", gt.slice(k));
    }

    let zero = bilinear(&x, &Tensor3::zeros(3, 2), &h)?;
    println!("\nzero tensor → {:?}", zero.as_slice());
    Ok(())
}
