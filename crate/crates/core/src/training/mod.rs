//! Mini-batch training: per-sentence BPTT, token-normalized batch gradients,
//! global-norm rescaling, AdaGrad and validation-driven learning-rate decay.

pub mod dropout;
pub mod init;
pub mod optim;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::data::{bits_per_character, make_batches, perplexity, Corpus};
use crate::error::{Error, Result};
use crate::model::LanguageModel;
use crate::params::ParamSet;

pub use dropout::{dropout_mask, StepMasks};
pub use init::{orthogonal_init, tensor_uniform_init};
pub use optim::{clip_rescale, global_norm, maybe_decay_lr, AdaGrad, ADAGRAD_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub decay_factor: f64,
    pub clip_norm: f64,
    /// Truncation window `K`; `None` backpropagates through the whole sentence.
    pub bptt_limit: Option<usize>,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            decay_factor: 0.5,
            clip_norm: 5.0,
            bptt_limit: None,
            dropout: 0.0,
            batch_size: 15,
            max_epochs: 10,
            seed: 1,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay_factor must lie in (0, 1]");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.bptt_limit == Some(0) {
            return bad("bptt_limit must be positive");
        }
        Ok(())
    }
}

/// Summed negative log-likelihood (nats) over a number of predictions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub total_nll: f64,
    pub token_count: usize,
}

impl LossReport {
    pub fn merge(&mut self, other: LossReport) {
        self.total_nll += other.total_nll;
        self.token_count += other.token_count;
    }

    pub fn mean_nll(&self) -> f64 {
        self.total_nll / self.token_count as f64
    }

    pub fn perplexity(&self) -> f64 {
        perplexity(self.total_nll, self.token_count)
    }

    pub fn bpc(&self) -> f64 {
        bits_per_character(self.total_nll, self.token_count)
    }
}

pub fn sequence_nll(model: &LanguageModel, tokens: &[usize]) -> Result<LossReport> {
    model.sequence_nll(tokens)
}

/// Gradients of the NLL of one sentence, without dropout.
pub fn bptt(model: &LanguageModel, tokens: &[usize], window: Option<usize>) -> Result<(LanguageModel, LossReport)> {
    let mut grads = model.zero_grads();
    let report = model.bptt(tokens, window, None, &mut grads)?;
    Ok((grads, report))
}

/// Summed (unnormalized) gradients and loss over `sentences`, split across
/// `threads` workers. Each sentence draws its dropout masks from its own
/// seed, so results do not depend on the thread count beyond summation order.
pub fn batch_gradients(
    model: &LanguageModel,
    sentences: &[&[usize]],
    seeds: &[u64],
    window: Option<usize>,
    dropout: f64,
    threads: usize,
) -> Result<(LanguageModel, LossReport)> {
    let run = |chunk: &[&[usize]], chunk_seeds: &[u64]| -> Result<(LanguageModel, LossReport)> {
        let mut grads = model.zero_grads();
        let mut report = LossReport::default();
        for (tokens, &seed) in chunk.iter().zip(chunk_seeds) {
            let masks = (dropout > 0.0).then(|| {
                let mut rng = StdRng::seed_from_u64(seed);
                (0..tokens.len().saturating_sub(1))
                    .map(|_| StepMasks::draw(model.embed_dim(), model.hidden_dim(), dropout, &mut rng))
                    .collect::<Vec<_>>()
            });
            report.merge(model.bptt(tokens, window, masks.as_deref(), &mut grads)?);
        }
        Ok((grads, report))
    };

    let threads = threads.max(1).min(sentences.len().max(1));
    if threads == 1 {
        return run(sentences, seeds);
    }
    let per = sentences.len().div_ceil(threads);
    let parts: Vec<Result<(LanguageModel, LossReport)>> = std::thread::scope(|s| {
        let handles: Vec<_> = sentences
            .chunks(per)
            .zip(seeds.chunks(per))
            .map(|(c, sd)| s.spawn(move || run(c, sd)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut iter = parts.into_iter();
    let (mut grads, mut report) = iter.next().expect("at least one chunk")?;
    for part in iter {
        let (g, r) = part?;
        grads.add_scaled(&g, 1.0);
        report.merge(r);
    }
    Ok((grads, report))
}

/// Corpus NLL with dropout disabled. Per-sentence results are summed in
/// corpus order regardless of `threads`, so the value is bit-reproducible.
pub fn evaluate_corpus(model: &LanguageModel, corpus: &Corpus, threads: usize) -> Result<LossReport> {
    let eval = |chunk: &[Vec<usize>]| chunk.iter().map(|s| model.sequence_nll(s)).collect::<Result<Vec<_>>>();
    let threads = threads.max(1).min(corpus.len().max(1));
    let reports: Vec<LossReport> = if threads == 1 {
        eval(&corpus.sentences)?
    } else {
        let per = corpus.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = corpus.sentences.chunks(per).map(|c| s.spawn(move || eval(c))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect::<Result<Vec<_>>>()
        })?
        .concat()
    };
    let mut total = LossReport::default();
    for r in reports {
        total.merge(r);
    }
    Ok(total)
}

/// Owns the model and optimizer for the duration of training.
pub struct Trainer {
    pub model: LanguageModel,
    pub optimizer: AdaGrad,
    pub config: TrainConfig,
    pub lr: f64,
    prev_val_cost: Option<f64>,
    rng: StdRng,
}

impl Trainer {
    pub fn new(model: LanguageModel, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = AdaGrad::new(&model);
        Ok(Trainer {
            lr: config.learning_rate,
            rng: StdRng::seed_from_u64(config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1)),
            model,
            optimizer,
            config,
            prev_val_cost: None,
        })
    }

    /// One update from the sentences at `batch` indices. Returns the batch loss.
    pub fn train_batch(&mut self, corpus: &Corpus, batch: &[usize]) -> Result<LossReport> {
        let sentences: Vec<&[usize]> = batch.iter().map(|&i| corpus.sentences[i].as_slice()).collect();
        let seeds: Vec<u64> = batch.iter().map(|_| self.rng.gen()).collect();
        let (mut grads, report) = batch_gradients(
            &self.model,
            &sentences,
            &seeds,
            self.config.bptt_limit,
            self.config.dropout,
            self.config.threads,
        )?;
        if !report.total_nll.is_finite() {
            return Err(Error::NonFinite(format!("training loss {}", report.total_nll)));
        }
        let scale = 1.0 / report.token_count.max(1) as f64;
        for (_, b) in grads.buffers_mut() {
            b.iter_mut().for_each(|v| *v *= scale);
        }
        let norm = clip_rescale(&mut grads, self.config.clip_norm);
        if !norm.is_finite() {
            return Err(Error::NonFinite(format!("gradient norm {norm}")));
        }
        self.optimizer.update(&mut self.model, &grads, self.lr);
        Ok(report)
    }

    /// One pass over `corpus` in freshly shuffled batches.
    pub fn train_epoch(&mut self, corpus: &Corpus) -> Result<LossReport> {
        let batches = make_batches(corpus.len(), self.config.batch_size, &mut self.rng);
        let mut total = LossReport::default();
        for batch in &batches {
            total.merge(self.train_batch(corpus, batch)?);
        }
        Ok(total)
    }

    pub fn evaluate(&self, corpus: &Corpus) -> Result<LossReport> {
        evaluate_corpus(&self.model, corpus, self.config.threads)
    }

    /// Applies the decay rule for this epoch's validation cost and returns
    /// the learning rate for the next epoch.
    pub fn finish_epoch(&mut self, val_cost: f64) -> f64 {
        self.lr = maybe_decay_lr(self.lr, self.prev_val_cost, val_cost, self.config.decay_factor);
        self.prev_val_cost = Some(val_cost);
        self.lr
    }
}

#[cfg(test)]
mod tests;
