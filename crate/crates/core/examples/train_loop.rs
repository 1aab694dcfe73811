//! Drives the training loop directly through the library: vocabulary and
//! corpus construction, truncated BPTT with dropout, threaded batches,
//! validation-driven learning-rate decay.
//!
//!     cargo run --release --example train_loop [cell] [epochs]

use rand::rngs::StdRng;
use rand::SeedableRng;
use rntn::{CellKind, Corpus, LanguageModel, Level, TrainConfig, Trainer, Vocab};

const TEXT: &str = include_str!("../data/de_finibus_liber_primus.txt");

fn main() -> rntn::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: CellKind = args.next().map(|s| s.parse()).transpose()?.unwrap_or(CellKind::LstmRntn);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let (train_lines, valid_lines): (Vec<_>, Vec<_>) = TEXT.lines().enumerate().partition(|(i, _)| i % 10 != 9);
    let join = |v: Vec<(usize, &str)>| v.into_iter().map(|(_, l)| l).collect::<Vec<_>>().join("\n");
    let (train_text, valid_text) = (join(train_lines), join(valid_lines));

    let vocab = Vocab::build(&train_text, Level::Char, None)?;
    let train = Corpus::encode(&train_text, &vocab);
    let valid = Corpus::encode(&valid_text, &vocab);
    println!(
        "{} train sentences ({} predictions), {} valid, V={}",
        train.len(),
        train.prediction_count(),
        valid.len(),
        vocab.len()
    );

    let model = LanguageModel::init(kind, vocab.len(), 32, 32, &mut StdRng::seed_from_u64(1));
    let config = TrainConfig {
        bptt_limit: Some(20),
        dropout: 0.1,
        threads: 2,
        max_epochs: epochs,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(model, config)?;
    for epoch in 1..=epochs {
        let lr = trainer.lr;
        let t = trainer.train_epoch(&train)?;
        let v = trainer.evaluate(&valid)?;
        trainer.finish_epoch(v.mean_nll());
        println!("epoch {epoch}: lr {lr}  train BPC {:.3}  valid BPC {:.3}", t.bpc(), v.bpc());
    }
    Ok(())
}
