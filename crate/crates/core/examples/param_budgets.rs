//! Free-parameter counts of the word- and character-level configurations,
//! with the baseline hidden sizes that match each tensor model's budget.
//!
//!     cargo run --example param_budgets

use rntn::cli::commands::param_breakdown;
use rntn::{count_params, CellKind};

fn matched_hidden(base: CellKind, target: usize, e: usize, v: usize) -> usize {
    (1..4096).min_by_key(|&d| count_params(base, e, d, v, e).abs_diff(target)).unwrap()
}

fn main() {
    for (task, e, v) in [("word", 128, 10_000), ("char", 32, 50)] {
        println!("{task} level: e={e}, V={v}");
        for kind in [CellKind::GruRntn, CellKind::LstmRntn] {
            let b = param_breakdown(kind, e, 256, v);
            println!(
                "  {kind:<9} d=256  total {:>10}  (embedding {}, cell {} incl. tensor {}, output {})",
                b.total, b.embedding, b.cell, b.tensor, b.output
            );
            let base = kind.baseline();
            let d = matched_hidden(base, b.total, e, v);
            println!("  {base:<9} d={d:<4} total {:>10}  matched", count_params(base, e, d, v, e));
        }
    }
}
