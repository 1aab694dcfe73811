//! Certifies the hand-derived BPTT gradients of every cell kind against
//! central finite differences, buffer by buffer.
//!
//!     cargo run --release --example gradient_check [seeds]

use rntn::gradcheck::{certify, CheckDims, DEFAULT_REL_TOL};
use rntn::CellKind;

fn main() -> rntn::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let mut failures = 0;
    for kind in CellKind::ALL {
        for seed in 0..seeds {
            let dims = CheckDims {
                seq_len: 4 + (seed % 3) as usize,
                ..CheckDims::default()
            };
            println!("-- {kind}, seed {seed}, {} steps", dims.seq_len);
            for r in certify(kind, dims, seed)? {
                failures += usize::from(!r.passed);
                println!("   {r}");
            }
        }
    }
    println!("\ntolerance {DEFAULT_REL_TOL:e}: {failures} failing buffers");
    if failures > 0 {
        std::process::exit(2);
    }
    Ok(())
}
