//! Trains a small character-level GRURNTN on a repeated string until it
//! memorizes it, then decodes greedily from the sentence marker.
//!
//!     cargo run --release --example memorize

use rntn::cli::commands;
use rntn::cli::{Checkpoint, RunConfig};
use rntn::{CellKind, Level, TrainConfig};

fn main() -> rntn::Result<()> {
    let dir = std::env::temp_dir().join("rntn-memorize");
    std::fs::create_dir_all(&dir)?;
    let text = "abcdefgh\n".repeat(64);
    let train_path = dir.join("abc.txt");
    std::fs::write(&train_path, &text)?;

    let cfg = RunConfig {
        cell: CellKind::GruRntn,
        task: Level::Char,
        embed_dim: 32,
        hidden_dim: 16,
        train: TrainConfig {
            max_epochs: 50,
            ..TrainConfig::default()
        },
        train_path: Some(train_path),
        checkpoint: dir.join("memorize.ckpt"),
        metrics: dir.join("memorize.csv"),
        ..RunConfig::default()
    };
    let summary = commands::train(&cfg, &mut std::io::stdout())?;

    let ck = Checkpoint::load(&cfg.checkpoint)?;
    let eval = commands::evaluate(&ck, &text, None, 1, None)?;
    println!("\ntrain BPC after {} epochs: {:.4}", summary.rows.len(), eval.metric);
    println!("greedy decode:\n{}", commands::sample(&ck, 27, 0.0, 0)?);
    println!("sampled at T=1:\n{}", commands::sample(&ck, 27, 1.0, 7)?);
    println!("metrics: {}", cfg.metrics.display());
    Ok(())
}
