//! Corpus ingestion, vocabularies, batching, embeddings and evaluation metrics.
//!
//! Input text is one sentence per line. Each encoded sentence starts with the
//! boundary token `</s>` as context and ends with `</s>` as the final target,
//! so a line of `n` tokens yields `n + 1` predictions.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::params::ParamSet;

pub const UNK: &str = "<unk>";
pub const EOS: &str = "</s>";

/// Word cap used for the Penn Treebank word-level task.
pub const PTB_WORD_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Word,
    Char,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Level::Word => "word",
            Level::Char => "char",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Level::Word),
            "char" => Ok(Level::Char),
            other => Err(Error::Config(format!("unknown task '{other}', expected word or char"))),
        }
    }
}

/// Splits a line into tokens and appends the end-of-sentence marker.
///
/// Word level splits on whitespace; char level keeps every character,
/// spaces included.
pub fn tokenize(line: &str, level: Level) -> Vec<String> {
    let mut out: Vec<String> = match level {
        Level::Word => line.split_whitespace().map(str::to_owned).collect(),
        Level::Char => line.chars().map(String::from).collect(),
    };
    out.push(EOS.to_owned());
    out
}

/// Inverse of char-level [`tokenize`]: concatenates tokens up to the first marker.
pub fn detokenize_chars(tokens: &[String]) -> String {
    tokens.iter().take_while(|t| t.as_str() != EOS).map(String::as_str).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    level: Level,
}

impl Vocab {
    /// Builds a vocabulary from raw text.
    ///
    /// Keeps the `cap` most frequent tokens, breaking frequency ties
    /// lexicographically; `None` keeps everything. `</s>` and `<unk>` are
    /// always present, at ids 0 and 1.
    pub fn build(text: &str, level: Level, cap: Option<usize>) -> Result<Vocab> {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for line in text.lines() {
            let toks = tokenize(strip_cr(line), level);
            for t in &toks[..toks.len() - 1] {
                if t != UNK && t != EOS {
                    *counts.entry(t.clone()).or_default() += 1;
                }
            }
        }
        if counts.is_empty() && !text.contains(UNK) {
            return Err(Error::EmptyCorpus);
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(cap) = cap {
            ranked.truncate(cap);
        }
        let mut tokens = vec![EOS.to_owned(), UNK.to_owned()];
        tokens.extend(ranked.into_iter().map(|(t, _)| t));
        Ok(Vocab::from_tokens(tokens, level))
    }

    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>, level: Level) -> Vocab {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index, level }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn unk_id(&self) -> usize {
        self.index[UNK]
    }

    pub fn eos_id(&self) -> usize {
        self.index[EOS]
    }

    /// Id of `token`, or the `<unk>` id for out-of-vocabulary tokens.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or_else(|| self.unk_id())
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Encodes one line as `[</s>, t_1, …, t_n, </s>]`.
    pub fn encode_line(&self, line: &str) -> Vec<usize> {
        let mut ids = vec![self.eos_id()];
        ids.extend(tokenize(strip_cr(line), self.level).iter().map(|t| self.lookup(t)));
        ids
    }
}

fn strip_cr(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

/// Tokenized sentences as id sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<Vec<usize>>,
    pub level: Level,
}

impl Corpus {
    /// Encodes every non-blank line of `text`.
    pub fn encode(text: &str, vocab: &Vocab) -> Corpus {
        let sentences = text
            .lines()
            .filter(|l| !strip_cr(l).trim().is_empty())
            .map(|l| vocab.encode_line(l))
            .collect();
        Corpus {
            sentences,
            level: vocab.level(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Number of predicted positions across all sentences.
    pub fn prediction_count(&self) -> usize {
        self.sentences.iter().map(|s| s.len().saturating_sub(1)).sum()
    }

    /// Token count excluding sentence markers.
    pub fn text_token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.len().saturating_sub(2)).sum()
    }
}

/// Splits sentence indices `0..n` into shuffled batches of `batch_size`,
/// keeping a final partial batch.
pub fn make_batches<R: Rng + ?Sized>(n: usize, batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let batch_size = batch_size.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// `exp(total_nll / token_count)`; identical to `2^(−(1/N) Σ log₂ p)`.
pub fn perplexity(total_nll_nats: f64, token_count: usize) -> f64 {
    (total_nll_nats / token_count as f64).exp()
}

/// `total_nll / (N ln 2)`: average negative base-2 log-probability.
pub fn bits_per_character(total_nll_nats: f64, char_count: usize) -> f64 {
    total_nll_nats / (char_count as f64 * std::f64::consts::LN_2)
}

/// Trainable token embedding, one row per vocabulary entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub table: Matrix,
}

impl Embedding {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        Embedding {
            table: Matrix::zeros(vocab_size, dim),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    fn check(&self, id: usize) -> Result<()> {
        if id >= self.vocab_size() {
            return Err(Error::IndexOutOfRange {
                what: "embedding",
                index: id,
                size: self.vocab_size(),
            });
        }
        Ok(())
    }

    pub fn lookup(&self, id: usize) -> Result<&[f64]> {
        self.check(id)?;
        Ok(self.table.row(id))
    }

    /// Adds `g` into row `id` of this gradient accumulator.
    pub fn accumulate(&mut self, id: usize, g: &[f64]) -> Result<()> {
        self.check(id)?;
        if g.len() != self.dim() {
            return Err(crate::error::shape_err("embed_grad_accumulate", format!("[{}]", self.dim()), format!("[{}]", g.len())));
        }
        for (r, v) in self.table.row_mut(id).iter_mut().zip(g) {
            *r += v;
        }
        Ok(())
    }
}

impl ParamSet for Embedding {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        vec![("E", self.table.data())]
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![("E", self.table.data_mut())]
    }
}
