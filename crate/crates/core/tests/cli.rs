use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rntn::cli::commands::{self, METRICS_HEADER};
use rntn::cli::{self, Checkpoint, RunConfig};
use rntn::{count_params, CellKind, Level, ParamSet, TrainConfig};

const TEXT: &str = "the quick brown fox\njumps over the lazy dog\nthe dog sleeps\nthe fox runs\n";

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["rntn"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_corpus(dir: &Path) -> PathBuf {
    let p = dir.join("corpus.txt");
    fs::write(&p, TEXT).unwrap();
    p
}

fn small_config(dir: &Path, kind: CellKind, level: Level, epochs: usize) -> RunConfig {
    RunConfig {
        cell: kind,
        task: level,
        embed_dim: 4,
        hidden_dim: 6,
        train: TrainConfig {
            max_epochs: epochs,
            batch_size: 2,
            ..TrainConfig::default()
        },
        train_path: Some(write_corpus(dir)),
        checkpoint: dir.join("model.ckpt"),
        metrics: dir.join("metrics.csv"),
        ..RunConfig::default()
    }
}

#[test]
fn zero_epochs_writes_initial_checkpoint_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), CellKind::GruRntn, Level::Char, 0);
    let summary = commands::train(&cfg, &mut Vec::new()).unwrap();
    assert!(summary.rows.is_empty());
    assert!(cfg.checkpoint.exists());
    assert!(!cli::best_path(&cfg.checkpoint).exists());
    assert_eq!(fs::read_to_string(&cfg.metrics).unwrap(), format!("{METRICS_HEADER}\n"));
    let ck = Checkpoint::load(&cfg.checkpoint).unwrap();
    assert_eq!(ck.model.kind(), CellKind::GruRntn);
    assert_eq!(ck.model.num_params(), summary.param_count);
}

#[test]
fn checkpoint_file_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for kind in CellKind::ALL {
        let cfg = small_config(dir.path(), kind, Level::Word, 1);
        commands::train(&cfg, &mut Vec::new()).unwrap();
        let original = fs::read(&cfg.checkpoint).unwrap();
        let again = dir.path().join("again.ckpt");
        Checkpoint::load(&cfg.checkpoint).unwrap().save(&again).unwrap();
        assert_eq!(fs::read(&again).unwrap(), original, "{kind}");
    }
}

fn parse_csv(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn metrics_rows_increase_and_lr_never_grows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), CellKind::Lstm, Level::Char, 8);
    cfg.train.learning_rate = 0.5;
    let summary = commands::train(&cfg, &mut Vec::new()).unwrap();
    let rows = parse_csv(&fs::read_to_string(&cfg.metrics).unwrap());
    assert_eq!(rows.len(), 8);
    assert_eq!(summary.rows.len(), 8);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
        assert!(w[1][3] <= w[0][3]);
    }
    // the best copy holds the lowest validation metric seen
    let best = rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
    assert_eq!(summary.best_val_metric, Some(best));
    let best_ck = Checkpoint::load(&cli::best_path(&cfg.checkpoint)).unwrap();
    let res = commands::evaluate(&best_ck, TEXT, None, 1, None).unwrap();
    assert_eq!(res.metric, best);
}

#[test]
fn single_thread_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run_ix in 0..2 {
        let sub = dir.path().join(format!("run{run_ix}"));
        fs::create_dir(&sub).unwrap();
        let mut cfg = small_config(&sub, CellKind::LstmRntn, Level::Char, 3);
        cfg.train.dropout = 0.2;
        cfg.train.bptt_limit = Some(4);
        commands::train(&cfg, &mut Vec::new()).unwrap();
        let masked: Vec<String> = fs::read_to_string(&cfg.metrics)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_owned())
            .collect();
        outputs.push((masked, fs::read(&cfg.checkpoint).unwrap(), fs::read(cli::best_path(&cfg.checkpoint)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn eval_matches_dumped_log_probs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), CellKind::GruRntn, Level::Word, 2);
    commands::train(&cfg, &mut Vec::new()).unwrap();
    let ck = Checkpoint::load(&cfg.checkpoint).unwrap();
    let dump = dir.path().join("dump.tsv");
    let a = commands::evaluate(&ck, TEXT, Some(Level::Word), 1, Some(&dump)).unwrap();
    let b = commands::evaluate(&ck, TEXT, None, 3, None).unwrap();
    assert_eq!(a, b);

    let lps: Vec<f64> = fs::read_to_string(&dump)
        .unwrap()
        .lines()
        .map(|l| l.split('\t').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(lps.len(), a.report.token_count);
    let mean_nll = -lps.iter().sum::<f64>() / lps.len() as f64;
    assert!((mean_nll.exp() - a.metric).abs() <= 1e-12 * a.metric);
}

#[test]
fn eval_rejects_wrong_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), CellKind::Gru, Level::Char, 0);
    commands::train(&cfg, &mut Vec::new()).unwrap();
    let ck = Checkpoint::load(&cfg.checkpoint).unwrap();
    assert!(matches!(commands::evaluate(&ck, TEXT, Some(Level::Word), 1, None), Err(rntn::Error::VocabMismatch(_))));
}

#[test]
fn zero_output_layer_gives_word_ppl_v() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), CellKind::GruRntn, Level::Word, 0);
    commands::train(&cfg, &mut Vec::new()).unwrap();
    let mut ck = Checkpoint::load(&cfg.checkpoint).unwrap();
    ck.model.output.fill(0.0);
    let res = commands::evaluate(&ck, TEXT, None, 1, None).unwrap();
    let v = ck.vocab.len() as f64;
    assert!((res.metric - v).abs() <= 1e-12 * v, "{} vs {v}", res.metric);
}

#[test]
fn sampling_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), CellKind::Gru, Level::Char, 1);
    commands::train(&cfg, &mut Vec::new()).unwrap();
    let ck = Checkpoint::load(&cfg.checkpoint).unwrap();
    assert_eq!(commands::sample(&ck, 0, 1.0, 3).unwrap(), "");
    let a = commands::sample(&ck, 60, 1.0, 3).unwrap();
    assert_eq!(a, commands::sample(&ck, 60, 1.0, 3).unwrap());
    assert_ne!(a, commands::sample(&ck, 60, 1.0, 4).unwrap());
    assert_eq!(commands::sample(&ck, 40, 0.0, 1).unwrap(), commands::sample(&ck, 40, 0.0, 2).unwrap());
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let cfg_path = dir.path().join("run.json");
    let file_cfg = RunConfig {
        cell: CellKind::Lstm,
        embed_dim: 3,
        hidden_dim: 5,
        train_path: Some(corpus),
        checkpoint: dir.path().join("from_file.ckpt"),
        metrics: dir.path().join("m.csv"),
        ..RunConfig::default()
    };
    fs::write(&cfg_path, file_cfg.to_json()).unwrap();
    let (code, _, err) = run(&["train", "--config", cfg_path.to_str().unwrap(), "--cell", "grurntn", "--epochs", "1"]);
    assert_eq!(code, 0, "{err}");
    let ck = Checkpoint::load(&dir.path().join("from_file.ckpt")).unwrap();
    assert_eq!(ck.model.kind(), CellKind::GruRntn);
    assert_eq!((ck.model.embed_dim(), ck.model.hidden_dim()), (3, 5));
    assert_eq!(parse_csv(&fs::read_to_string(dir.path().join("m.csv")).unwrap()).len(), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["params", "--cell", "transformer"]).0, 1);
    assert_eq!(run(&["params", "--hidden", "0"]).0, 1);
    assert_eq!(run(&["train", "--train", "/nonexistent/file.txt"]).0, 1);
    assert_eq!(run(&["eval", "--checkpoint", "/nonexistent.ckpt", "--data", "x"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
    let (code, out, _) = run(&["params", "--cell", "lstmrntn", "--task", "char", "--embed", "32", "--hidden", "256"]);
    assert_eq!(code, 0);
    let expected = count_params(CellKind::LstmRntn, 32, 256, 50, 32);
    assert!(out.contains(&format!("total     {expected}")), "{out}");
}

#[test]
fn exploding_training_exits_with_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let (code, _, err) = run(&[
        "train",
        "--train",
        corpus.to_str().unwrap(),
        "--checkpoint",
        dir.path().join("c").to_str().unwrap(),
        "--metrics",
        dir.path().join("m").to_str().unwrap(),
        "--cell",
        "rnn",
        "--lr",
        "1e308",
        "--clip",
        "1e308",
        "--hidden",
        "4",
        "--embed",
        "4",
        "--epochs",
        "3",
    ]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("non-finite"), "{err}");
}

#[test]
fn gradcheck_command_passes() {
    let (code, out, _) = run(&["gradcheck", "--seeds", "1", "--steps", "4"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().filter(|l| l.ends_with("ok")).count(), 5);
}

#[test]
fn binary_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let ckpt = dir.path().join("bin.ckpt");
    let bin = env!("CARGO_BIN_EXE_rntn");
    let status = Command::new(bin)
        .args(["train", "--cell", "gru", "--hidden", "8", "--embed", "4", "--epochs", "2", "--train"])
        .arg(&corpus)
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg("--metrics")
        .arg(dir.path().join("m.csv"))
        .output()
        .unwrap();
    assert!(status.status.success());
    let out = Command::new(bin).arg("eval").arg("--checkpoint").arg(&ckpt).arg("--data").arg(&corpus).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("bpc "));
    let out = Command::new(bin).args(["sample", "--length", "0", "--checkpoint"]).arg(&ckpt).output().unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(Command::new(bin).arg("nope").output().unwrap().status.code(), Some(1));
}
