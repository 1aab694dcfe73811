//! Saves a checkpoint, reloads it, checks the bytes survive unchanged, and
//! evaluates it with a per-token log-probability dump.
//!
//!     cargo run --example checkpoint_roundtrip

use rand::rngs::StdRng;
use rand::SeedableRng;
use rntn::cli::checkpoint::{Checkpoint, MAGIC};
use rntn::cli::commands;
use rntn::{CellKind, LanguageModel, Level, ParamSet, Vocab};

const TEXT: &str = "the cat sat on the mat\nthe dog sat on the log\n";

fn main() -> rntn::Result<()> {
    let dir = std::env::temp_dir().join("rntn-checkpoint");
    std::fs::create_dir_all(&dir)?;

    let vocab = Vocab::build(TEXT, Level::Word, None)?;
    let model = LanguageModel::init(CellKind::GruRntn, vocab.len(), 6, 8, &mut StdRng::seed_from_u64(3));
    let ck = Checkpoint::new(model, vocab)?;
    let path = dir.join("model.ckpt");
    ck.save(&path)?;

    let bytes = std::fs::read(&path)?;
    let manifest_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    println!("magic {:?}", std::str::from_utf8(&bytes[..8]).unwrap());
    assert_eq!(&bytes[..8], MAGIC);
    println!("manifest {}", std::str::from_utf8(&bytes[12..12 + manifest_len]).unwrap());
    println!("{} parameters, {} bytes", ck.model.num_params(), bytes.len());

    let loaded = Checkpoint::load(&path)?;
    let again = dir.join("again.ckpt");
    loaded.save(&again)?;
    println!("save → load → save byte-identical: {}", std::fs::read(&again)? == bytes);

    let dump = dir.join("logprobs.tsv");
    let res = commands::evaluate(&loaded, TEXT, None, 1, Some(&dump))?;
    println!("untrained PPL {:.3} over {} predictions (V = {})", res.metric, res.report.token_count, loaded.vocab.len());
    print!("{}", std::fs::read_to_string(&dump)?.lines().take(4).map(|l| format!("  {l}\n")).collect::<String>());
    Ok(())
}
