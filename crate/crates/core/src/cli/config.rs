//! Run configuration: JSON file merged with command-line overrides.
//!
//! Schema (every field optional; defaults shown):
//!
//! ```json
//! {
//!   "cell": "grurntn",
//!   "task": "char",
//!   "embed_dim": 32,
//!   "hidden_dim": 256,
//!   "vocab_cap": null,
//!   "train": {
//!     "learning_rate": 0.1,
//!     "decay_factor": 0.5,
//!     "clip_norm": 5.0,
//!     "bptt_limit": null,
//!     "dropout": 0.0,
//!     "batch_size": 15,
//!     "max_epochs": 10,
//!     "seed": 1,
//!     "threads": 1
//!   },
//!   "train_path": null,
//!   "valid_path": null,
//!   "test_path": null,
//!   "checkpoint": "model.ckpt",
//!   "metrics": "metrics.csv"
//! }
//! ```
//!
//! `vocab_cap: null` keeps the 10000 most frequent words at word level and
//! every character at char level. Without `valid_path` the training corpus
//! doubles as the validation set.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cells::CellKind;
use crate::data::{Level, PTB_WORD_CAP};
use crate::error::{Error, Result};
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cell: CellKind,
    pub task: Level,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub vocab_cap: Option<usize>,
    pub train: TrainConfig,
    pub train_path: Option<PathBuf>,
    pub valid_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cell: CellKind::GruRntn,
            task: Level::Char,
            embed_dim: 32,
            hidden_dim: 256,
            vocab_cap: None,
            train: TrainConfig::default(),
            train_path: None,
            valid_path: None,
            test_path: None,
            checkpoint: PathBuf::from("model.ckpt"),
            metrics: PathBuf::from("metrics.csv"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Effective vocabulary cap for this task.
    pub fn effective_vocab_cap(&self) -> Option<usize> {
        match (self.vocab_cap, self.task) {
            (Some(c), _) => Some(c),
            (None, Level::Word) => Some(PTB_WORD_CAP),
            (None, Level::Char) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("embed_dim and hidden_dim must be positive".into()));
        }
        if self.vocab_cap == Some(0) {
            return Err(Error::Config("vocab_cap must be positive".into()));
        }
        self.train.validate()
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub cell: Option<CellKind>,
    pub task: Option<Level>,
    pub hidden: Option<usize>,
    pub embed: Option<usize>,
    pub lr: Option<f64>,
    pub clip: Option<f64>,
    pub bptt_k: Option<usize>,
    pub dropout: Option<f64>,
    pub batch: Option<usize>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($src:ident => $($dst:tt)+) => {
                if let Some(v) = self.$src {
                    cfg.$($dst)+ = v;
                }
            };
        }
        set!(cell => cell);
        set!(task => task);
        set!(hidden => hidden_dim);
        set!(embed => embed_dim);
        set!(lr => train.learning_rate);
        set!(clip => train.clip_norm);
        set!(dropout => train.dropout);
        set!(batch => train.batch_size);
        set!(epochs => train.max_epochs);
        set!(seed => train.seed);
        set!(threads => train.threads);
        if let Some(k) = self.bptt_k {
            // 0 on the command line means unlimited
            cfg.train.bptt_limit = (k > 0).then_some(k);
        }
    }
}

/// Default config, then the file at `path` if any, then `overrides`.
pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_is_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.cell = CellKind::Lstm;
        cfg.train.bptt_limit = Some(20);
        cfg.train_path = Some("a/train.txt".into());
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"hiden_dim": 3}"#), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"cell": "transformer"}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = RunConfig::from_json(r#"{"hidden_dim": 64, "train": {"learning_rate": 0.5, "seed": 9}}"#).unwrap();
        let o = Overrides {
            hidden: Some(16),
            seed: Some(3),
            bptt_k: Some(0),
            ..Default::default()
        };
        o.apply(&mut cfg);
        assert_eq!(cfg.hidden_dim, 16);
        assert_eq!(cfg.train.seed, 3);
        assert_eq!(cfg.train.learning_rate, 0.5);
        assert_eq!(cfg.train.bptt_limit, None);
    }

    #[test]
    fn word_task_caps_vocab() {
        let cfg = RunConfig {
            task: Level::Word,
            ..Default::default()
        };
        assert_eq!(cfg.effective_vocab_cap(), Some(10_000));
        assert_eq!(RunConfig::default().effective_vocab_cap(), None);
    }

    #[test]
    fn validation() {
        let o = Overrides {
            hidden: Some(0),
            ..Default::default()
        };
        assert!(matches!(resolve(None, &o), Err(Error::Config(_))));
        let o = Overrides {
            dropout: Some(1.5),
            ..Default::default()
        };
        assert!(resolve(None, &o).is_err());
    }
}
