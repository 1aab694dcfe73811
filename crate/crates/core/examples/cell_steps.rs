//! One forward step of every cell kind from the same input and state, and
//! the reduction of the tensor cells to their baselines when the tensor is zero.
//!
//!     cargo run --example cell_steps

use rand::rngs::StdRng;
use rand::SeedableRng;
use rntn::{CellKind, CellParams, ParamSet, StepState};

fn main() -> rntn::Result<()> {
    let (i, d) = (4, 5);
    let mut rng = StdRng::seed_from_u64(42);
    let x = [0.3, -0.7, 0.1, 0.9];

    for kind in CellKind::ALL {
        let params = CellParams::init(kind, i, d, &mut rng);
        let mut prev = StepState::zeros(kind, d);
        prev.h = vec![0.2, -0.1, 0.4, 0.0, -0.3].into();
        let (next, _) = params.step(&x, &prev)?;
        println!("{kind:<9} {:>6} params  h = {:.4?}", params.num_params(), next.h.as_slice());
        if let Some(c) = &next.c {
            println!("{:<26}c = {:.4?}", "", c.as_slice());
        }

        if kind.has_tensor() {
            let mut zeroed = params.clone();
            zeroed.tensor_mut().unwrap().data_mut().fill(0.0);
            let (a, _) = zeroed.step(&x, &prev)?;
            let (b, _) = zeroed.without_tensor().step(&x, &prev)?;
            println!("{:<26}zero tensor equals {}: {}", "", kind.baseline(), a == b);
        }
    }
    Ok(())
}
