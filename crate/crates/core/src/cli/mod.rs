//! Command-line front end: `train`, `eval`, `gradcheck`, `params` and `sample`.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors
//! (including unreadable inputs), 2 for numeric failures (non-finite
//! losses or a failed gradient check).

pub mod checkpoint;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::cells::CellKind;
use crate::data::Level;
use crate::error::{Error, Result};
use crate::gradcheck::CheckDims;

pub use checkpoint::{best_path, Checkpoint, Manifest};
pub use config::{Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rntn", version, about = "Gated recurrent neural tensor network language models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a language model; writes metrics CSV and checkpoints
    Train(TrainArgs),
    /// Report PPL (word) or BPC (char) of a checkpoint on a corpus
    Eval(EvalArgs),
    /// Check analytic BPTT gradients against finite differences
    Gradcheck(GradcheckArgs),
    /// Count free parameters of a configuration
    Params(ParamsArgs),
    /// Generate text from a checkpoint
    Sample(SampleArgs),
}

/// Flags shared by every subcommand; they override `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub cell: Option<CellKind>,
    #[arg(long)]
    pub task: Option<Level>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub embed: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Global gradient-norm threshold
    #[arg(long)]
    pub clip: Option<f64>,
    /// BPTT truncation window; 0 means the whole sentence
    #[arg(long = "bptt-k")]
    pub bptt_k: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Sentences per batch
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ModelArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            cell: self.cell,
            task: self.task,
            hidden: self.hidden,
            embed: self.embed,
            lr: self.lr,
            clip: self.clip,
            bptt_k: self.bptt_k,
            dropout: self.dropout,
            batch: self.batch,
            epochs: self.epochs,
            seed: self.seed,
            threads: self.threads,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        config::resolve(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Training text, one sentence per line
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Validation text; defaults to the training text
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Text to evaluate; defaults to the configured test, then validation corpus
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Write per-token log-probabilities here
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Random instances per cell kind
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 11)]
    pub vocab: usize,
    /// Sequence length (predicted tokens)
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    /// Print every parameter, not only the per-kind summary
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Vocabulary size; defaults to 10000 (word) or 50 (char)
    #[arg(long)]
    pub vocab: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Number of tokens to generate
    #[arg(long, default_value_t = 200)]
    pub length: usize,
    /// Softmax temperature; 0 decodes greedily
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFinite(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Train(a) => {
            let mut cfg = a.model.resolve()?;
            if let Some(p) = a.train {
                cfg.train_path = Some(p);
            }
            if let Some(p) = a.valid {
                cfg.valid_path = Some(p);
            }
            if let Some(p) = a.checkpoint {
                cfg.checkpoint = p;
            }
            if let Some(p) = a.metrics {
                cfg.metrics = p;
            }
            let summary = commands::train(&cfg, out)?;
            if let Some(best) = summary.best_val_metric {
                writeln!(out, "best val_{} {best:.4}", commands::metric_name(cfg.task))?;
            }
            Ok(EXIT_OK)
        }
        Command::Eval(a) => {
            let cfg = a.model.resolve()?;
            let ckpt = Checkpoint::load(a.checkpoint.as_ref().unwrap_or(&cfg.checkpoint))?;
            let path = a
                .data
                .or(cfg.test_path)
                .or(cfg.valid_path)
                .ok_or_else(|| Error::Config("no evaluation corpus given (--data)".into()))?;
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read corpus {}: {e}", path.display())))?;
            let res = commands::evaluate(&ckpt, &text, a.model.task, cfg.train.threads, a.dump.as_deref())?;
            writeln!(
                out,
                "{} {}  (nll {} over {} predictions)",
                commands::metric_name(res.level),
                res.metric,
                res.report.total_nll,
                res.report.token_count
            )?;
            Ok(EXIT_OK)
        }
        Command::Gradcheck(a) => {
            let kinds: Vec<CellKind> = match a.model.cell {
                Some(k) => vec![k],
                None => CellKind::ALL.to_vec(),
            };
            let dims = CheckDims {
                input_dim: a.model.embed.unwrap_or(5),
                hidden_dim: a.model.hidden.unwrap_or(7),
                vocab_size: a.vocab,
                seq_len: a.steps,
            };
            if dims.input_dim == 0 || dims.hidden_dim == 0 || dims.vocab_size == 0 || dims.seq_len == 0 {
                return Err(Error::Config("gradcheck dimensions must be positive".into()));
            }
            let reports = commands::gradcheck(&kinds, dims, a.seeds)?;
            let mut all_ok = true;
            for kind in &kinds {
                let prefix = format!("{kind}/");
                let mine: Vec<_> = reports.iter().filter(|r| r.name.starts_with(&prefix)).collect();
                let worst = mine.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
                let ok = mine.iter().all(|r| r.passed);
                all_ok &= ok;
                if a.verbose {
                    for r in &mine {
                        writeln!(out, "{r}")?;
                    }
                }
                writeln!(
                    out,
                    "{kind:<9} {} checks  max rel err {worst:.3e}  {}",
                    mine.len(),
                    if ok { "ok" } else { "FAIL" }
                )?;
            }
            Ok(if all_ok { EXIT_OK } else { EXIT_NUMERIC })
        }
        Command::Params(a) => {
            let cfg = a.model.resolve()?;
            let vocab = a.vocab.unwrap_or(match cfg.task {
                Level::Word => crate::data::PTB_WORD_CAP,
                Level::Char => 50,
            });
            let b = commands::param_breakdown(cfg.cell, cfg.embed_dim, cfg.hidden_dim, vocab);
            writeln!(out, "{} e={} d={} V={}", cfg.cell, cfg.embed_dim, cfg.hidden_dim, vocab)?;
            writeln!(out, "embedding {}", b.embedding)?;
            writeln!(out, "cell      {} (tensor {})", b.cell, b.tensor)?;
            writeln!(out, "output    {}", b.output)?;
            writeln!(out, "total     {}", b.total)?;
            Ok(EXIT_OK)
        }
        Command::Sample(a) => {
            let cfg = a.model.resolve()?;
            if !(a.temperature >= 0.0) {
                return Err(Error::Config("temperature must be non-negative".into()));
            }
            let ckpt = Checkpoint::load(a.checkpoint.as_ref().unwrap_or(&cfg.checkpoint))?;
            let text = commands::sample(&ckpt, a.length, a.temperature, cfg.train.seed)?;
            write!(out, "{text}")?;
            if !text.is_empty() && !text.ends_with('\n') {
                writeln!(out)?;
            }
            Ok(EXIT_OK)
        }
    }
}
