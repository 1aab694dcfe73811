//! Compares each tensor cell with its parameter-matched baseline on the
//! bundled public-domain Latin text at character level.
//!
//!     cargo run --release --example desk_trend [epochs] [seeds]

use std::path::PathBuf;

use rntn::cli::commands;
use rntn::cli::RunConfig;
use rntn::{count_params, CellKind, Level, TrainConfig, Vocab};

const TEXT: &str = include_str!("../data/de_finibus_liber_primus.txt");

fn main() -> rntn::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let dir = std::env::temp_dir().join("rntn-desk-trend");
    std::fs::create_dir_all(&dir)?;
    let lines: Vec<&str> = TEXT.lines().filter(|l| !l.trim().is_empty()).collect();
    let split = |valid: bool| -> String {
        let picked: Vec<&str> = lines.iter().enumerate().filter(|(i, _)| (i % 10 == 9) == valid).map(|(_, l)| *l).collect();
        picked.join("\n") + "\n"
    };
    let train_path: PathBuf = dir.join("train.txt");
    let valid_path: PathBuf = dir.join("valid.txt");
    let train_text = split(false);
    std::fs::write(&train_path, &train_text)?;
    std::fs::write(&valid_path, split(true))?;
    let v = Vocab::build(&train_text, Level::Char, None)?.len();

    let e = 32;
    for (tensor, d) in [(CellKind::GruRntn, 32), (CellKind::LstmRntn, 32)] {
        let target = count_params(tensor, e, d, v, e);
        let base = tensor.baseline();
        let bd = (1..512).min_by_key(|&x| count_params(base, e, x, v, e).abs_diff(target)).unwrap();
        for (kind, hidden) in [(tensor, d), (base, bd)] {
            let mut finals = Vec::new();
            for seed in 1..=seeds {
                let cfg = RunConfig {
                    cell: kind,
                    task: Level::Char,
                    embed_dim: e,
                    hidden_dim: hidden,
                    train: TrainConfig {
                        max_epochs: epochs,
                        seed,
                        ..TrainConfig::default()
                    },
                    train_path: Some(train_path.clone()),
                    valid_path: Some(valid_path.clone()),
                    checkpoint: dir.join(format!("{kind}.ckpt")),
                    metrics: dir.join(format!("{kind}_{seed}.csv")),
                    ..RunConfig::default()
                };
                let s = commands::train(&cfg, &mut std::io::sink())?;
                finals.push(s.rows.last().map_or(f64::NAN, |r| r.val_metric));
            }
            finals.sort_by(f64::total_cmp);
            println!(
                "{kind:<9} d={hidden:<3} {:>6} params  valid BPC {:.4?}  median {:.4}",
                count_params(kind, e, hidden, v, e),
                finals,
                finals[finals.len() / 2]
            );
        }
    }
    Ok(())
}
