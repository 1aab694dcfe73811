//! The work behind each subcommand, callable without going through argument parsing.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::checkpoint::{best_path, Checkpoint};
use super::config::RunConfig;
use crate::cells::CellKind;
use crate::data::{Corpus, Level, Vocab};
use crate::error::{Error, Result};
use crate::gradcheck::{certify, CheckDims, CheckReport};
use crate::linalg::{softmax, Vector};
use crate::model::{count_params, LanguageModel};
use crate::training::{LossReport, Trainer};

pub const METRICS_HEADER: &str = "epoch,train_nll,val_metric,lr,seconds";

/// PPL at word level, BPC at char level.
pub fn metric(level: Level, report: &LossReport) -> f64 {
    match level {
        Level::Word => report.perplexity(),
        Level::Char => report.bpc(),
    }
}

pub fn metric_name(level: Level) -> &'static str {
    match level {
        Level::Word => "ppl",
        Level::Char => "bpc",
    }
}

fn read_corpus_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read corpus {}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_metric: f64,
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub rows: Vec<EpochRow>,
    pub vocab_size: usize,
    pub param_count: usize,
    pub best_val_metric: Option<f64>,
}

/// Trains from `cfg`, writing the metrics CSV, a checkpoint after
/// initialization and after every epoch, and a `.best` copy whenever the
/// validation metric improves. Progress lines go to `log`.
pub fn train(cfg: &RunConfig, log: &mut dyn Write) -> Result<TrainSummary> {
    cfg.validate()?;
    let train_path = cfg.train_path.as_deref().ok_or_else(|| Error::Config("no training corpus given".into()))?;
    let train_text = read_corpus_text(train_path)?;
    let vocab = Vocab::build(&train_text, cfg.task, cfg.effective_vocab_cap())?;
    let train_corpus = Corpus::encode(&train_text, &vocab);
    let valid_corpus = match &cfg.valid_path {
        Some(p) => Corpus::encode(&read_corpus_text(p)?, &vocab),
        None => train_corpus.clone(),
    };
    if train_corpus.is_empty() || valid_corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut init_rng = StdRng::seed_from_u64(cfg.train.seed);
    let model = LanguageModel::init(cfg.cell, vocab.len(), cfg.embed_dim, cfg.hidden_dim, &mut init_rng);
    let param_count = count_params(cfg.cell, cfg.embed_dim, cfg.hidden_dim, vocab.len(), cfg.embed_dim);
    writeln!(
        log,
        "{} {}: V={} e={} d={} params={} train={} sentences valid={} sentences",
        cfg.cell,
        cfg.task,
        vocab.len(),
        cfg.embed_dim,
        cfg.hidden_dim,
        param_count,
        train_corpus.len(),
        valid_corpus.len()
    )?;

    let mut trainer = Trainer::new(model, cfg.train.clone())?;
    Checkpoint::new(trainer.model.clone(), vocab.clone())?.save(&cfg.checkpoint)?;

    let mut csv = String::from(METRICS_HEADER);
    csv.push('\n');
    fs::write(&cfg.metrics, &csv)?;

    let name = metric_name(cfg.task);
    let mut rows = Vec::new();
    let mut best: Option<f64> = None;
    for epoch in 1..=cfg.train.max_epochs {
        let start = Instant::now();
        let lr = trainer.lr;
        let train_report = trainer.train_epoch(&train_corpus)?;
        let val_report = trainer.evaluate(&valid_corpus)?;
        let val = metric(cfg.task, &val_report);
        if !val.is_finite() {
            return Err(Error::NonFinite(format!("validation {name} {val} at epoch {epoch}")));
        }
        trainer.finish_epoch(val_report.mean_nll());
        let seconds = start.elapsed().as_secs_f64();

        let row = EpochRow {
            epoch,
            train_nll: train_report.mean_nll(),
            val_metric: val,
            lr,
            seconds,
        };
        csv.push_str(&format!("{},{},{},{},{:.3}\n", row.epoch, row.train_nll, row.val_metric, row.lr, row.seconds));
        fs::write(&cfg.metrics, &csv)?;

        let ckpt = Checkpoint::new(trainer.model.clone(), vocab.clone())?;
        ckpt.save(&cfg.checkpoint)?;
        if best.is_none_or(|b| val < b) {
            best = Some(val);
            ckpt.save(&best_path(&cfg.checkpoint))?;
        }
        writeln!(
            log,
            "epoch {epoch:>3}  train_nll {:.4}  val_{name} {val:.4}  lr {lr}  {seconds:.1}s",
            row.train_nll
        )?;
        rows.push(row);
    }

    Ok(TrainSummary {
        rows,
        vocab_size: vocab.len(),
        param_count,
        best_val_metric: best,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub level: Level,
    pub report: LossReport,
    pub metric: f64,
}

/// Evaluates a checkpoint on a text file. With `dump`, writes one line per
/// predicted token: `sentence<TAB>position<TAB>token id<TAB>log-prob`.
pub fn evaluate(ckpt: &Checkpoint, text: &str, task: Option<Level>, threads: usize, dump: Option<&Path>) -> Result<EvalResult> {
    let level = ckpt.vocab.level();
    if let Some(t) = task {
        if t != level {
            return Err(Error::VocabMismatch(format!("checkpoint was trained at {level} level, asked to evaluate at {t} level")));
        }
    }
    let corpus = Corpus::encode(text, &ckpt.vocab);
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let report = crate::training::evaluate_corpus(&ckpt.model, &corpus, threads)?;
    if let Some(path) = dump {
        let mut out = String::new();
        for (si, s) in corpus.sentences.iter().enumerate() {
            for (pi, lp) in ckpt.model.token_log_probs(s)?.into_iter().enumerate() {
                out.push_str(&format!("{si}\t{}\t{}\t{lp}\n", pi + 1, s[pi + 1]));
            }
        }
        fs::write(path, out)?;
    }
    let metric = metric(level, &report);
    if !metric.is_finite() {
        return Err(Error::NonFinite(format!("{} {metric}", metric_name(level))));
    }
    Ok(EvalResult { level, report, metric })
}

/// Below this temperature sampling becomes argmax decoding.
pub const GREEDY_TEMPERATURE: f64 = 1e-8;

/// Generates `length` token ids. Generation starts from `</s>`; whenever
/// `</s>` is produced the state is reset, as at sentence starts in training.
pub fn sample_ids(model: &LanguageModel, eos: usize, length: usize, temperature: f64, seed: u64) -> Result<Vec<usize>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut state = model.initial_state();
    let mut input = eos;
    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        let x = model.embedding.lookup(input)?.to_vec();
        state = model.cell.step(&x, &state)?.0;
        let logits = model.output.logits(&state.h)?;
        let next = if temperature <= GREEDY_TEMPERATURE {
            logits.argmax()
        } else {
            let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
            draw(&softmax(&scaled), &mut rng)
        };
        if !state.is_finite() {
            return Err(Error::NonFinite("hidden state during sampling".into()));
        }
        out.push(next);
        if next == eos {
            state = model.initial_state();
        }
        input = next;
    }
    Ok(out)
}

fn draw(probs: &Vector, rng: &mut StdRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Renders ids as text: `</s>` becomes a newline; word tokens are
/// space-separated within a line.
pub fn render(vocab: &Vocab, ids: &[usize]) -> String {
    let eos = vocab.eos_id();
    let mut out = String::new();
    let mut line_start = true;
    for &id in ids {
        if id == eos {
            out.push('\n');
            line_start = true;
            continue;
        }
        if vocab.level() == Level::Word && !line_start {
            out.push(' ');
        }
        out.push_str(vocab.token(id).unwrap_or(crate::data::UNK));
        line_start = false;
    }
    out
}

pub fn sample(ckpt: &Checkpoint, length: usize, temperature: f64, seed: u64) -> Result<String> {
    let ids = sample_ids(&ckpt.model, ckpt.vocab.eos_id(), length, temperature, seed)?;
    Ok(render(&ckpt.vocab, &ids))
}

/// Per-component parameter counts for `params`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBreakdown {
    pub embedding: usize,
    pub cell: usize,
    pub tensor: usize,
    pub output: usize,
    pub total: usize,
}

pub fn param_breakdown(kind: CellKind, embed_dim: usize, hidden_dim: usize, vocab_size: usize) -> ParamBreakdown {
    let cell = kind.cell_param_count(embed_dim, hidden_dim);
    ParamBreakdown {
        embedding: vocab_size * embed_dim,
        cell,
        tensor: if kind.has_tensor() { embed_dim * hidden_dim * hidden_dim } else { 0 },
        output: hidden_dim * vocab_size + vocab_size,
        total: count_params(kind, embed_dim, hidden_dim, vocab_size, embed_dim),
    }
}

/// Certification reports for each kind over `seeds` random instances.
pub fn gradcheck(kinds: &[CellKind], dims: CheckDims, seeds: u64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for &kind in kinds {
        for seed in 0..seeds {
            for mut r in certify(kind, dims, seed)? {
                r.name = format!("{} seed {seed}", r.name);
                out.push(r);
            }
        }
    }
    Ok(out)
}
