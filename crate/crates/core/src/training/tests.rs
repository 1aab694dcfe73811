use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::*;
use crate::cells::{CellKind, CellParams, StepState};
use crate::data::{Level, Vocab};
use crate::linalg::Vector;
use crate::gradcheck::{certify, check_param_set, random_model, CheckDims, CERTIFY_STENCIL};

fn random_tokens(n: usize, vocab: usize, rng: &mut StdRng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..vocab)).collect()
}

#[test]
fn uniform_model_nll_is_n_log_v() {
    let model = LanguageModel::zeros(CellKind::GruRntn, 13, 4, 5);
    let tokens = [0, 3, 7, 12, 1, 0];
    let r = sequence_nll(&model, &tokens).unwrap();
    assert_eq!(r.token_count, 5);
    assert!((r.total_nll - 5.0 * 13f64.ln()).abs() < 1e-12);
    assert!((r.perplexity() - 13.0).abs() < 1e-10);
}

#[test]
fn sequence_nll_composes_single_steps() {
    let mut rng = StdRng::seed_from_u64(1);
    for kind in CellKind::ALL {
        let model = random_model(kind, CheckDims::default(), &mut rng);
        let tokens = random_tokens(8, 11, &mut rng);
        let mut state = model.initial_state();
        let mut expected = 0.0;
        for w in tokens.windows(2) {
            let (next, probs) = model.step_token(w[0], &state).unwrap();
            expected -= probs[w[1]].ln();
            state = next;
        }
        let got = sequence_nll(&model, &tokens).unwrap().total_nll;
        assert!((got - expected).abs() < 1e-12 * expected.abs(), "{kind}: {got} vs {expected}");
    }
}

#[test]
fn confident_correct_model_has_near_zero_nll() {
    let mut model = LanguageModel::zeros(CellKind::Lstm, 2, 3, 3);
    model.output.b_y = Vector::new(vec![40.0, -40.0]);
    let r = sequence_nll(&model, &[0, 0, 0, 0]).unwrap();
    assert!(r.total_nll < 1e-15);
    assert!((r.perplexity() - 1.0).abs() < 1e-15);
}

#[test]
fn short_or_invalid_sequences_are_rejected() {
    let model = LanguageModel::zeros(CellKind::Rnn, 4, 2, 2);
    assert!(matches!(sequence_nll(&model, &[1]), Err(Error::SequenceTooShort { .. })));
    assert!(matches!(sequence_nll(&model, &[1, 4]), Err(Error::IndexOutOfRange { .. })));
    assert!(bptt(&model, &[], None).is_err());
}

#[test]
fn single_step_bptt_is_the_chain_rule() {
    let mut rng = StdRng::seed_from_u64(2);
    let model = random_model(CellKind::GruRntn, CheckDims::default(), &mut rng);
    let (grads, report) = bptt(&model, &[3, 8], None).unwrap();

    let x = model.embedding.lookup(3).unwrap().to_vec();
    let (s, trace) = model.cell.step(&x, &model.initial_state()).unwrap();
    let (out_g, gh, nll) = model.output.backward(&s.h, 8).unwrap();
    let mut cell_g = crate::params::zeros_like(&model.cell);
    let up = StepState { h: gh, c: None };
    let (gx, _) = model.cell.step_backward(&trace, &up, &mut cell_g).unwrap();

    assert_eq!(report.total_nll, nll);
    assert_eq!(grads.output, out_g);
    assert_eq!(grads.cell, cell_g);
    assert_eq!(grads.embedding.table.row(3), gx.as_slice());
    assert!(grads.embedding.table.row(0).iter().all(|&v| v == 0.0));
}

#[test]
fn full_bptt_certified_for_every_kind() {
    for kind in CellKind::ALL {
        for seed in [7, 8] {
            for r in certify(kind, CheckDims::default(), seed).unwrap() {
                assert!(r.passed, "{r}");
            }
        }
    }
}

/// Loss whose exact gradient is the truncated one: for prediction `t`, the
/// state entering step `t − k` comes from the frozen model.
fn truncated_loss(frozen: &LanguageModel, live: &LanguageModel, tokens: &[usize], k: usize) -> Result<f64> {
    let steps = tokens.len() - 1;
    let mut frozen_states = vec![frozen.initial_state()];
    for t in 0..steps {
        let x = frozen.embedding.lookup(tokens[t])?.to_vec();
        let next = frozen.cell.step(&x, &frozen_states[t])?.0;
        frozen_states.push(next);
    }
    let mut total = 0.0;
    for t in 0..steps {
        let start = t.saturating_sub(k);
        let mut state = frozen_states[start].clone();
        for j in start..=t {
            let x = live.embedding.lookup(tokens[j])?.to_vec();
            state = live.cell.step(&x, &state)?.0;
        }
        total += live.output.nll(&state.h, tokens[t + 1])?;
    }
    Ok(total)
}

#[test]
fn truncated_bptt_matches_detached_oracle() {
    let mut rng = StdRng::seed_from_u64(3);
    for kind in CellKind::ALL {
        let model = random_model(kind, CheckDims::default(), &mut rng);
        let tokens = random_tokens(8, 11, &mut rng);
        for k in [1, 2, 4] {
            let (grads, _) = bptt(&model, &tokens, Some(k)).unwrap();
            let reports = check_param_set(&model, &grads, |m| truncated_loss(&model, m, &tokens, k), CERTIFY_STENCIL, 1e-5, 1e-10).unwrap();
            for r in reports {
                assert!(r.passed, "{kind} K={k}: {r}");
            }
        }
    }
}

#[test]
fn long_window_equals_full_bptt() {
    let mut rng = StdRng::seed_from_u64(4);
    let model = random_model(CellKind::LstmRntn, CheckDims::default(), &mut rng);
    let tokens = random_tokens(6, 11, &mut rng);
    let full = bptt(&model, &tokens, None).unwrap();
    assert_eq!(bptt(&model, &tokens, Some(5)).unwrap(), full);
    assert_eq!(bptt(&model, &tokens, Some(50)).unwrap(), full);
}

#[test]
fn window_one_equals_full_without_recurrence() {
    let mut rng = StdRng::seed_from_u64(5);
    let mut model = random_model(CellKind::Rnn, CheckDims::default(), &mut rng);
    if let CellParams::Simple(p) = &mut model.cell {
        p.w_hh.data_mut().fill(0.0);
    }
    let tokens = random_tokens(9, 11, &mut rng);
    let (full, _) = bptt(&model, &tokens, None).unwrap();
    let (trunc, _) = bptt(&model, &tokens, Some(1)).unwrap();
    for ((name, a), (_, b)) in full.buffers().into_iter().zip(trunc.buffers()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{name}");
        }
    }
}

fn max_rel_diff(a: &LanguageModel, b: &LanguageModel) -> f64 {
    let fa = a.to_flat();
    let fb = b.to_flat();
    let scale = fa.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    fa.iter().zip(&fb).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

#[test]
fn threaded_accumulation_matches_sequential() {
    let mut rng = StdRng::seed_from_u64(6);
    let model = random_model(CellKind::GruRntn, CheckDims::default(), &mut rng);
    let sents: Vec<Vec<usize>> = (0..11).map(|i| random_tokens(3 + i % 5, 11, &mut rng)).collect();
    let refs: Vec<&[usize]> = sents.iter().map(|s| s.as_slice()).collect();
    let seeds: Vec<u64> = (0..refs.len() as u64).collect();
    for dropout in [0.0, 0.3] {
        let (seq, r1) = batch_gradients(&model, &refs, &seeds, Some(3), dropout, 1).unwrap();
        for threads in [2, 3, 4, 16] {
            let (par, r2) = batch_gradients(&model, &refs, &seeds, Some(3), dropout, threads).unwrap();
            assert_eq!(r1.token_count, r2.token_count);
            assert!((r1.total_nll - r2.total_nll).abs() <= 1e-10 * r1.total_nll);
            assert!(max_rel_diff(&seq, &par) <= 1e-10, "threads {threads}");
        }
    }
}

#[test]
fn batch_gradient_is_sum_of_sentence_gradients() {
    let mut rng = StdRng::seed_from_u64(7);
    let model = random_model(CellKind::Gru, CheckDims::default(), &mut rng);
    let a = random_tokens(5, 11, &mut rng);
    let b = random_tokens(7, 11, &mut rng);
    let (ga, ra) = bptt(&model, &a, None).unwrap();
    let (gb, rb) = bptt(&model, &b, None).unwrap();
    let (sum, r) = batch_gradients(&model, &[&a, &b], &[0, 0], None, 0.0, 1).unwrap();
    let mut expected = ga;
    expected.add_scaled(&gb, 1.0);
    assert!(max_rel_diff(&expected, &sum) <= 1e-14);
    assert_eq!(r.token_count, ra.token_count + rb.token_count);
}

fn tiny_corpus(text: &str) -> Corpus {
    let vocab = Vocab::build(text, Level::Char, None).unwrap();
    Corpus::encode(text, &vocab)
}

#[test]
fn train_batch_normalizes_clips_and_steps() {
    let corpus = tiny_corpus("abcab\nbca\ncab");
    let mut rng = StdRng::seed_from_u64(8);
    let model = LanguageModel::init(CellKind::GruRntn, 5, 4, 6, &mut rng);
    let config = TrainConfig {
        clip_norm: 0.05,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(model.clone(), config).unwrap();
    let report = trainer.train_batch(&corpus, &[0, 2]).unwrap();

    let refs: Vec<&[usize]> = vec![&corpus.sentences[0], &corpus.sentences[2]];
    let (mut g, r) = batch_gradients(&model, &refs, &[0, 0], None, 0.0, 1).unwrap();
    assert_eq!(report, r);
    assert_eq!(r.token_count, 6 + 4);
    for (_, b) in g.buffers_mut() {
        b.iter_mut().for_each(|v| *v *= 1.0 / 10.0);
    }
    let pre = clip_rescale(&mut g, 0.05);
    assert!(pre > 0.05);
    let mut expected = model;
    AdaGrad::new(&expected).update(&mut expected, &g, 0.1);
    assert_eq!(trainer.model, expected);
}

#[test]
fn learning_rate_only_decays_on_increase() {
    let model = LanguageModel::zeros(CellKind::Rnn, 3, 2, 2);
    let mut t = Trainer::new(model, TrainConfig::default()).unwrap();
    let costs = [2.0, 1.9, 1.95, 1.95, 1.7, 1.8];
    let lrs: Vec<f64> = costs.iter().map(|&c| t.finish_epoch(c)).collect();
    assert_eq!(lrs, vec![0.1, 0.1, 0.05, 0.05, 0.05, 0.025]);
}

#[test]
fn config_validation() {
    assert!(TrainConfig::default().validate().is_ok());
    let bad = [
        TrainConfig { learning_rate: 0.0, ..Default::default() },
        TrainConfig { dropout: 1.0, ..Default::default() },
        TrainConfig { batch_size: 0, ..Default::default() },
        TrainConfig { bptt_limit: Some(0), ..Default::default() },
        TrainConfig { clip_norm: f64::NAN, ..Default::default() },
    ];
    for c in bad {
        assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
    }
}

#[test]
fn evaluation_ignores_dropout() {
    let corpus = tiny_corpus("hello world\nhold the door\n");
    let mut rng = StdRng::seed_from_u64(9);
    let model = LanguageModel::init(CellKind::LstmRntn, 12, 5, 6, &mut rng);
    let config = TrainConfig {
        dropout: 0.5,
        ..TrainConfig::default()
    };
    let trainer = Trainer::new(model.clone(), config).unwrap();
    let a = trainer.evaluate(&corpus).unwrap();
    assert_eq!(a, trainer.evaluate(&corpus).unwrap());
    assert_eq!(a, evaluate_corpus(&model, &corpus, 3).unwrap());
}

#[test]
fn truncated_training_nll_does_not_jump() {
    let text: String = include_str!("../../data/de_finibus_liber_primus.txt").lines().take(40).collect::<Vec<_>>().join("\n");
    let corpus = tiny_corpus(&text);
    let v = Vocab::build(&text, Level::Char, None).unwrap().len();
    for seed in 1..=3 {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = LanguageModel::init(CellKind::GruRntn, v, 8, 16, &mut rng);
        let config = TrainConfig {
            bptt_limit: Some(5),
            batch_size: 4,
            seed,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(model, config).unwrap();
        let mut prev = f64::INFINITY;
        for epoch in 0..8 {
            let nll = trainer.train_epoch(&corpus).unwrap().mean_nll();
            assert!(nll <= prev * 1.05, "seed {seed} epoch {epoch}: {nll} after {prev}");
            prev = nll;
        }
    }
}

#[test]
fn adagrad_accumulators_monotone() {
    let mut rng = StdRng::seed_from_u64(10);
    let mut model = random_model(CellKind::Lstm, CheckDims::default(), &mut rng);
    let mut opt = AdaGrad::new(&model);
    let mut prev: Vec<f64> = opt.accum.concat();
    for _ in 0..1000 {
        let mut g = model.zero_grads();
        for (_, b) in g.buffers_mut() {
            b.iter_mut().for_each(|v| *v = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-3.0..3.0) });
        }
        opt.update(&mut model, &g, 0.01);
        let now = opt.accum.concat();
        assert!(now.iter().zip(&prev).all(|(a, b)| a >= b));
        prev = now;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clip_preserves_direction(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut g = random_model(CellKind::GruRntn, CheckDims::default(), &mut rng);
        for (_, b) in g.buffers_mut() {
            b.iter_mut().for_each(|v| *v *= scale);
        }
        let before = g.to_flat();
        let pre = clip_rescale(&mut g, 5.0);
        let after = g.to_flat();
        let dot: f64 = before.iter().zip(&after).map(|(a, b)| a * b).sum();
        let na = before.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = after.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((dot / (na * nb) - 1.0).abs() <= 1e-12);
        prop_assert!(nb <= 5.0 * (1.0 + 1e-12));
        if pre <= 5.0 {
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn batches_partition_indices(n in 0usize..200, b in 1usize..40, seed in any::<u64>()) {
        let batches = make_batches(n, b, &mut StdRng::seed_from_u64(seed));
        let mut all: Vec<usize> = batches.iter().flatten().copied().collect();
        prop_assert!(batches.iter().all(|x| !x.is_empty() && x.len() <= b));
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }
}
