//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrae::checkpoint::{decode_checkpoint, encode_checkpoint, model_checkpoint, model_from_checkpoint};
use rrae::compressor::{reconstruct_compressed, train_compressor, CompressorParams, CompressorTrainConfig};
use rrae::corpus::{toy_corpus, TokenSequence};
use rrae::embeddings::{match_batch, synthetic_table, EmbeddingTable, EOS_TOKEN, UNK_TOKEN};
use rrae::loss::{match_drop_loss, LossKind};
use rrae::model::{self, total_parameter_count, ModelConfig, ModelParams};
use rrae::numerics::{adam_step_params, AdamConfig, AdamState, Matrix, ParamSet, Real};
use rrae::preprocess::{build_dataset, process_sentence, write_dataset, DigitMode, PipelineConfig, SPLIT_NAMES};
use rrae::trainer::{batch_gradient, evaluate, evaluate_with, sentence_gradient, StopReason, TrainConfig, TrainLog, Trainer};

#[derive(Debug)]
struct Fail(String);

impl From<rrae::Error> for Fail {
    fn from(e: rrae::Error) -> Self {
        Fail(e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(e.to_string())
    }
}

type Outcome = Result<String, Fail>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(Fail(format!($($msg)+)));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("parameter count", parameter_count),
        ("gradient correctness", gradient_correctness),
        ("match-drop masking", match_drop_masking),
        ("toy perfect reconstruction", toy_reconstruction),
        ("matching oracle equivalence", matching_oracle),
        ("compressor fidelity", compressor_fidelity),
        ("preprocessing golden suite", preprocessing_golden),
        ("determinism and resume", determinism_and_resume),
        ("lr schedule", lr_schedule),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(p) => Err(Fail(
                p.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into()),
            )),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(Fail(detail)) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// 1

fn parameter_count() -> Outcome {
    let n = total_parameter_count(&ModelConfig::new(300, 10_000, 60)?);
    ensure!(n == 606_070_300, "got {n}");
    let small = ModelParams::init(ModelConfig::new(6, 10, 6)?, 0)?;
    ensure!(
        small.parameter_count() as u64 == total_parameter_count(&small.config),
        "allocated count disagrees with formula"
    );
    Ok(format!("{n}"))
}

// 2

fn matched_flags(params: &ModelParams, table: &EmbeddingTable, seq: &TokenSequence) -> Result<Vec<bool>, Fail> {
    let vectors = model::lookup(table, seq.ids())?;
    let (outs, _) = model::forward(params, &vectors)?;
    Ok(match_drop_loss(&outs, seq.ids(), table)?.per_position.iter().map(|p| p.matched).collect())
}

fn loss_at(params: &ModelParams, table: &EmbeddingTable, seq: &TokenSequence) -> Result<(Real, Vec<bool>), Fail> {
    let vectors = model::lookup(table, seq.ids())?;
    let (outs, _) = model::forward(params, &vectors)?;
    let r = match_drop_loss(&outs, seq.ids(), table)?;
    Ok((r.total_loss, r.per_position.iter().map(|p| p.matched).collect()))
}

fn gradient_correctness() -> Outcome {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut configs = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    while configs < 24 {
        let word_dim = rng.random_range(2..=6);
        let hidden = rng.random_range(1..=10);
        let content = rng.random_range(1..=5);
        let n_words = rng.random_range(3..=10);
        let table = synthetic_table(n_words, word_dim, 15.0, rng.random())?;
        let mut params = ModelParams::init(ModelConfig::new(word_dim, hidden, content)?, rng.random())?;
        params.visit_mut(&mut |name, b| {
            if name.ends_with(".b") {
                b.iter_mut().for_each(|v| *v = rng.random_range(-0.3..0.3));
            }
        });
        let ids: Vec<usize> = (0..content).map(|_| rng.random_range(0..n_words)).collect();
        let seq = TokenSequence::from_content(ids, table.eos_id())?;
        let base = matched_flags(&params, &table, &seq)?;
        if base.iter().all(|&m| m) {
            continue;
        }
        configs += 1;
        let (_, analytic) = sentence_gradient(&params, &seq, &table, LossKind::SquaredError)?;
        let analytic = analytic.flatten();
        for (i, &a) in analytic.iter().enumerate() {
            let bump = |d: Real| -> Result<(Real, Vec<bool>), Fail> {
                let mut q = params.clone();
                let mut k = 0;
                q.visit_mut(&mut |_, b| {
                    if i >= k && i < k + b.len() {
                        b[i - k] += d;
                    }
                    k += b.len();
                });
                loss_at(&q, &table, &seq)
            };
            let (up, m_up) = bump(h)?;
            let (down, m_down) = bump(-h)?;
            ensure!(
                m_up == base && m_down == base,
                "config {configs} param {i}: finite-difference step crossed a match boundary"
            );
            let num = (up - down) / (2.0 * h);
            let rel = ((a - num).abs() / a.abs().max(num.abs()).max(1e-7)) as f64;
            ensure!(
                rel <= 1e-5,
                "config {configs} (w={word_dim} h={hidden} T={}) param {i}: analytic {a} numeric {num} rel {rel:.2e}",
                content + 1
            );
            worst = worst.max(rel);
            checked += 1;
        }
    }
    Ok(format!("{configs} configs, {checked} parameters, worst rel {worst:.2e}"))
}

// 3

/// Trains a tiny model until its training sentences reconstruct, and returns
/// the table, model and the sentences whose every position matches.
fn trained_to_match(seed: u64) -> Result<(EmbeddingTable, ModelParams, Vec<TokenSequence>), Fail> {
    let table = synthetic_table(8, 4, 30.0, seed)?;
    let data = toy_corpus(&table, 6, 1, 3, seed + 1)?;
    let params = ModelParams::init(ModelConfig::new(4, 16, 3)?, seed + 2)?;
    let cfg = TrainConfig {
        minibatch: 2,
        adam: AdamConfig {
            lr0: 3e-3,
            decay: 0.9999,
            l2: 0.0,
            ..AdamConfig::default()
        },
        eval_every: 500,
        patience: u64::MAX,
        min_improvement: 0.0,
        max_iterations: 3000,
        seed,
        loss: LossKind::SquaredError,
    };
    let mut t = Trainer::new(params, cfg, &table, &data, &data)?;
    t.run()?;
    let params = t.params;
    let mut matched = Vec::new();
    for s in &data {
        if matched_flags(&params, &table, s)?.iter().all(|&m| m) {
            matched.push(s.clone());
        }
    }
    Ok((table, params, matched))
}

fn match_drop_masking() -> Outcome {
    use proptest::prelude::*;
    use proptest::test_runner::{Config, TestCaseError, TestRunner};

    let mut runner = TestRunner::new(Config {
        cases: 8,
        failure_persistence: None,
        ..Config::default()
    });
    let checked = std::cell::Cell::new(0usize);
    let result = runner.run(&(0u64..1000, any::<u64>(), 0u64..10_000), |(seed, pick, adam_t)| {
        let (table, params, matched) = trained_to_match(seed).map_err(|e| TestCaseError::fail(e.0))?;
        prop_assume!(!matched.is_empty());
        let mut prng = ChaCha8Rng::seed_from_u64(pick);
        let size = prng.random_range(1..=matched.len());
        let batch: Vec<&TokenSequence> = (0..size).map(|_| &matched[prng.random_range(0..matched.len())]).collect();
        let (loss, grads) = batch_gradient(&params, &batch, &table, LossKind::SquaredError)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(loss, 0.0);
        prop_assert!(grads.flatten().iter().all(|g| g.to_bits() == 0), "non-zero gradient bits");

        let mut stepped = params.clone();
        let mut state = AdamState::new(params.parameter_count());
        state.iteration = adam_t;
        let cfg = AdamConfig {
            l2: 0.0,
            lr0: 1e-2,
            ..AdamConfig::default()
        };
        adam_step_params(&mut stepped, &grads, &mut state, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let before: Vec<u64> = params.flatten().iter().map(|v| v.to_bits() as u64).collect();
        let after: Vec<u64> = stepped.flatten().iter().map(|v| v.to_bits() as u64).collect();
        prop_assert!(before == after, "adam step moved parameters");
        checked.set(checked.get() + 1);
        Ok(())
    });
    match result {
        Ok(()) => Ok(format!("{} trained-to-match instances", checked.get())),
        Err(e) => Err(Fail(e.to_string())),
    }
}

// 4

struct ToyRun {
    table: EmbeddingTable,
    train: Vec<TokenSequence>,
    tune: Vec<TokenSequence>,
    params: ModelParams,
    /// First evaluation at which every requirement held.
    reached_at: Option<u64>,
    iterations: u64,
    elapsed: Duration,
    train_matched: f64,
    train_exact: f64,
    tune_matched: f64,
    best_tune: f64,
}

const TOY_MAX_ITERATIONS: u64 = 20_000;

fn toy_run() -> Result<&'static ToyRun, Fail> {
    static RUN: OnceLock<Result<ToyRun, String>> = OnceLock::new();
    RUN.get_or_init(|| run_toy().map_err(|e| e.0)).as_ref().map_err(|e| Fail(e.clone()))
}

fn run_toy() -> Result<ToyRun, Fail> {
    let table = synthetic_table(50, 8, 30.0, 1)?;
    let all = toy_corpus(&table, 250, 2, 6, 2)?;
    let (train, tune) = (all[..200].to_vec(), all[200..].to_vec());
    let params = ModelParams::init(ModelConfig::new(8, 64, 6)?, 5)?;
    let cfg = TrainConfig {
        minibatch: 16,
        adam: AdamConfig {
            lr0: 1e-3,
            decay: 0.99995,
            l2: 0.0,
            ..AdamConfig::default()
        },
        eval_every: 500,
        patience: u64::MAX,
        min_improvement: 0.0,
        max_iterations: TOY_MAX_ITERATIONS,
        seed: 3,
        loss: LossKind::SquaredError,
    };
    let start = Instant::now();
    let mut t = Trainer::new(params, cfg, &table, &train, &tune)?;
    let mut reached_at = None;
    let mut best_tune: f64 = 0.0;
    let (train_matched, train_exact, tune_matched) = loop {
        let reason = t.run_until(t.iteration() + 500)?;
        let on_train = evaluate(&t.params, &train, &table)?;
        let tune_matched = t.log.records.last().expect("logged").tune_matched;
        best_tune = best_tune.max(tune_matched);
        let rates = (on_train.matched_word_rate(), on_train.exact_sentence_rate(), tune_matched);
        if rates.0 == 1.0 && rates.1 == 1.0 && rates.2 >= 0.95 {
            reached_at = Some(t.iteration());
            break rates;
        }
        if reason != StopReason::Paused {
            break rates;
        }
    };
    Ok(ToyRun {
        iterations: t.iteration(),
        params: t.params,
        table,
        train,
        tune,
        reached_at,
        elapsed: start.elapsed(),
        train_matched,
        train_exact,
        tune_matched,
        best_tune,
    })
}

fn toy_reconstruction() -> Outcome {
    let r = toy_run()?;
    let summary = format!(
        "iteration {} in {:.0}s: train matched {:.4} exact {:.4}, tune matched {:.4} (best {:.4})",
        r.iterations,
        r.elapsed.as_secs_f64(),
        r.train_matched,
        r.train_exact,
        r.tune_matched,
        r.best_tune
    );
    ensure!(r.reached_at.is_some(), "requirements not met within {TOY_MAX_ITERATIONS} iterations; {summary}");
    ensure!(r.elapsed < Duration::from_secs(600), "over 10 minutes; {summary}");
    Ok(summary)
}

// 5

fn matching_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = rand_distr::StandardNormal;
    let mut rows_checked = 0;
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let v = rng.random_range(2..=1000);
        let dim = rng.random_range(1..=64);
        let mut vecs: Vec<Vec<Real>> = (0..v)
            .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(normal) as Real).collect())
            .collect();
        if inst % 4 == 0 {
            // duplicated rows exercise the lowest-index tie rule
            for _ in 0..5 {
                let (a, b) = (rng.random_range(0..v), rng.random_range(0..v));
                vecs[a.max(b)] = vecs[a.min(b)].clone();
            }
        }
        let mut words: Vec<String> = (0..v - 2).map(|i| format!("v{i}")).collect();
        words.push(EOS_TOKEN.into());
        words.push(UNK_TOKEN.into());
        let table = EmbeddingTable::new(words, Matrix::from_rows(&vecs)?)?;
        let n = rng.random_range(1..=40);
        let outputs: Vec<Vec<Real>> = (0..n)
            .map(|_| {
                if rng.random_bool(0.2) {
                    vecs[rng.random_range(0..v)].iter().map(|x| x * 2.5).collect()
                } else {
                    (0..dim).map(|_| rng.sample::<f64, _>(normal) as Real).collect()
                }
            })
            .collect();
        let got = match_batch(&Matrix::from_rows(&outputs)?, &table)?;
        for (r, (o, m)) in outputs.iter().zip(&got).enumerate() {
            let on = o.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            let (mut best, mut best_sim) = (0, f64::NEG_INFINITY);
            for (id, w) in vecs.iter().enumerate() {
                let wn = w.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
                let sim = o.iter().zip(w).map(|(a, b)| *a as f64 * *b as f64).sum::<f64>() / (on * wn);
                if sim > best_sim {
                    best = id;
                    best_sim = sim;
                }
            }
            ensure!(
                m.word_id == best,
                "instance {inst} (V={v} dim={dim}) row {r}: match_batch {} brute force {best}",
                m.word_id
            );
            let diff = (m.similarity as f64 - best_sim).abs();
            ensure!(diff <= 1e-6, "instance {inst} row {r}: similarity off by {diff:.2e}");
            worst = worst.max(diff);
            rows_checked += 1;
        }
    }
    Ok(format!("100 instances, {rows_checked} rows, worst similarity diff {worst:.1e}"))
}

// 6

fn compressor_fidelity() -> Outcome {
    let r = toy_run()?;
    let start = Instant::now();
    let hidden = r.params.config.hidden;
    let compressed_dim = (0.3 * hidden as f64).round() as usize;
    let svs = r
        .train
        .iter()
        .map(|s| Ok(model::encode(&r.params, &model::lookup(&r.table, s.ids())?)?.0))
        .collect::<Result<Vec<Vec<Real>>, Fail>>()?;
    let cfg = CompressorTrainConfig::default();
    let (comp, history) = train_compressor(CompressorParams::init(hidden, compressed_dim, 11)?, &svs, &cfg)?;
    let plain = evaluate(&r.params, &r.tune, &r.table)?.matched_word_rate();
    let compressed = evaluate_with(&r.tune, |s| {
        Ok(reconstruct_compressed(&r.params, &comp, &r.table, s.ids())?.ids)
    })?
    .matched_word_rate();
    let elapsed = start.elapsed();
    let summary = format!(
        "dim {hidden}->{compressed_dim}, reconstruction mse {:.2e}, tune matched {compressed:.4} compressed vs {plain:.4} uncompressed, {:.0}s",
        history.last().unwrap(),
        elapsed.as_secs_f64()
    );
    ensure!(compressed >= plain - 0.02, "{summary}");
    ensure!(elapsed < Duration::from_secs(300), "over 5 minutes; {summary}");
    Ok(summary)
}

// 7

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/preprocess")
}

const OUT_FILES: [&str; 7] = ["train.tok", "tune.tok", "test.tok", "train.txt", "tune.txt", "test.txt", "stats.json"];

fn preprocessing_golden() -> Outcome {
    let dir = fixture_dir();
    let table = rrae::embeddings::load_embeddings(&dir.join("vocab.txt"), None)?;
    let input = std::fs::read_to_string(dir.join("input.txt"))?;
    let mut files = 0;
    for (name, mode) in [("split01", DigitMode::Split01), ("words", DigitMode::Words), ("literal", DigitMode::Literal)] {
        let cfg = PipelineConfig {
            split_fractions: (0.6, 0.2, 0.2),
            rng_seed: 7,
            digit_mode: mode,
            ..PipelineConfig::default()
        };
        let processed: String = input
            .lines()
            .map(|l| process_sentence(l, &cfg, &table).join(" ") + "\n")
            .collect();
        let want = std::fs::read_to_string(dir.join(name).join("processed.txt"))?;
        ensure!(processed == want, "{name}: processed sentences differ from golden");
        for line in want.lines() {
            ensure!(
                process_sentence(line, &cfg, &table).join(" ") == line,
                "{name}: re-processing is not the identity for `{line}`"
            );
        }

        let inputs = [dir.join("input.txt")];
        let tmp = tempfile::tempdir()?;
        for run in ["a", "b"] {
            let out = tmp.path().join(run);
            write_dataset(&build_dataset(&inputs, &cfg, &table)?, &table, &out)?;
            for f in OUT_FILES {
                let got = std::fs::read(out.join(f))?;
                let golden = std::fs::read(dir.join(name).join("out").join(f))?;
                ensure!(got == golden, "{name}: {f} differs from golden (run {run})");
                files += 1;
            }
        }
        ensure!(SPLIT_NAMES.len() == 3, "split names");
    }
    Ok(format!("3 digit modes, {files} output files byte-identical, re-processing idempotent"))
}

// 8

fn small_setup() -> Result<(EmbeddingTable, Vec<TokenSequence>, Vec<TokenSequence>, TrainConfig), Fail> {
    let table = synthetic_table(20, 6, 30.0, 4)?;
    let all = toy_corpus(&table, 60, 1, 5, 6)?;
    let cfg = TrainConfig {
        minibatch: 8,
        adam: AdamConfig {
            lr0: 1e-3,
            decay: 0.9999,
            l2: 1e-6,
            ..AdamConfig::default()
        },
        eval_every: 100,
        patience: u64::MAX,
        min_improvement: 0.0,
        max_iterations: 1500,
        seed: 9,
        loss: LossKind::SquaredError,
    };
    Ok((table, all[..50].to_vec(), all[50..].to_vec(), cfg))
}

fn logs_match(a: &TrainLog, b: &TrainLog) -> bool {
    a.records.len() == b.records.len() && a.records.iter().zip(&b.records).all(|(x, y)| x.same_trajectory(y))
}

fn determinism_and_resume() -> Outcome {
    let (table, train, tune, cfg) = small_setup()?;
    let init = || ModelParams::init(ModelConfig::new(6, 24, 5).unwrap(), 8);
    let full_run = || -> Result<(Vec<u8>, TrainLog), Fail> {
        let mut t = Trainer::new(init()?, cfg, &table, &train, &tune)?;
        t.run()?;
        Ok((encode_checkpoint(&model_checkpoint(&t.params, Some(&t.state))), t.log))
    };
    let (ck_a, log_a) = full_run()?;
    let (ck_b, log_b) = full_run()?;
    ensure!(ck_a == ck_b, "same seed gave different checkpoint bytes");
    ensure!(logs_match(&log_a, &log_b), "same seed gave different logs");

    let k = 730;
    let tmp = tempfile::tempdir()?;
    let (ck_path, log_path) = (tmp.path().join("k.ckpt"), tmp.path().join("k.csv"));
    {
        let mut t = Trainer::new(init()?, cfg, &table, &train, &tune)?;
        ensure!(t.run_until(k)? == StopReason::Paused, "run stopped before iteration {k}");
        std::fs::write(&ck_path, encode_checkpoint(&model_checkpoint(&t.params, Some(&t.state))))?;
        t.log.write_csv(&log_path)?;
    }
    let ck = decode_checkpoint(&std::fs::read(&ck_path)?, "k.ckpt")?;
    let (params, state) = model_from_checkpoint(ck)?;
    let state = state.ok_or_else(|| Fail("checkpoint lost its training state".into()))?;
    let mut t = Trainer::resume(params, state, TrainLog::read_csv(&log_path)?, cfg, &table, &train, &tune)?;
    t.run()?;
    let ck_c = encode_checkpoint(&model_checkpoint(&t.params, Some(&t.state)));
    ensure!(logs_match(&log_a, &t.log), "resumed log diverges from the uninterrupted run");
    let after_k = t.log.records.iter().filter(|r| r.iteration >= k).count();
    ensure!(ck_a == ck_c, "resumed checkpoint differs from the uninterrupted run");
    Ok(format!(
        "{} log records and {} checkpoint bytes identical; resumed at {k}, {after_k} records after",
        log_a.records.len(),
        ck_a.len()
    ))
}

// 9

fn lr_schedule() -> Outcome {
    let table = synthetic_table(3, 2, 30.0, 1)?;
    let data = vec![TokenSequence::from_content(vec![0], table.eos_id())?];
    let cfg = TrainConfig {
        minibatch: 1,
        eval_every: 1,
        patience: u64::MAX,
        min_improvement: 0.0,
        max_iterations: 100_000,
        ..TrainConfig::default()
    };
    let tmp = tempfile::tempdir()?;
    let (ck_path, log_path) = (tmp.path().join("lr.ckpt"), tmp.path().join("lr.csv"));
    let params = ModelParams::init(ModelConfig::new(2, 2, 1)?, 0)?;
    let mut t = Trainer::new(params, cfg, &table, &data, &data)?;
    t.run_until(50_000)?;
    std::fs::write(&ck_path, encode_checkpoint(&model_checkpoint(&t.params, Some(&t.state))))?;
    t.log.write_csv(&log_path)?;
    drop(t);
    let (params, state) = model_from_checkpoint(decode_checkpoint(&std::fs::read(&ck_path)?, "lr.ckpt")?)?;
    let state = state.ok_or_else(|| Fail("checkpoint lost its training state".into()))?;
    let mut t = Trainer::resume(params, state, TrainLog::read_csv(&log_path)?, cfg, &table, &data, &data)?;
    ensure!(t.run()? == StopReason::MaxIterations, "run did not reach 100000 iterations");
    t.log.write_csv(&log_path)?;
    let log = TrainLog::read_csv(&log_path)?;

    let ln_decay = (-1.3e-6f64).ln_1p();
    let mut worst: f64 = 0.0;
    for target in [0u64, 1, 100_000] {
        let rec = log
            .records
            .iter()
            .find(|r| r.iteration == target)
            .ok_or_else(|| Fail(format!("no log record at iteration {target}")))?;
        let want = 4.22e-5 * (target as f64 * ln_decay).exp();
        let rel = (rec.lr - want).abs() / want;
        ensure!(rel <= 1e-12, "iteration {target}: logged {} expected {want} (rel {rel:.2e})", rec.lr);
        worst = worst.max(rel);
    }
    Ok(format!("t in {{0, 1, 100000}}, worst rel {worst:.1e}"))
}
