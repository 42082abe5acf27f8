//! Minibatch training loop, evaluation, and random hyperparameter search.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::loss::{loss_and_grad, LossKind};
use crate::model::{self, ModelConfig, ModelParams};
use crate::numerics::{adam_step_params, AdamConfig, AdamState, ParamSet, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub minibatch: usize,
    pub adam: AdamConfig,
    /// Iterations between tune-set evaluations (and log records).
    pub eval_every: u64,
    /// Evaluations without sufficient tune improvement before stopping.
    pub patience: u64,
    /// Improvement in tune matched-word rate that resets patience (0.001 = 0.1 pp).
    pub min_improvement: f64,
    pub max_iterations: u64,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            minibatch: 32,
            adam: AdamConfig::default(),
            eval_every: 1000,
            patience: 5,
            min_improvement: 0.001,
            max_iterations: 2_220_000,
            seed: 0,
            loss: LossKind::SquaredError,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| {
            Err(Error::Config {
                field: field.into(),
                msg: msg.into(),
            })
        };
        if self.minibatch == 0 {
            return bad("minibatch", "must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience", "must be at least 1");
        }
        if self.eval_every == 0 {
            return bad("eval_every", "must be at least 1");
        }
        if !(self.min_improvement >= 0.0) {
            return bad("min_improvement", "must be non-negative");
        }
        self.adam.validate()
    }
}

/// Serializable position of a ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// Everything beyond the parameters needed to resume training exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub adam: AdamState,
    /// RNG position at the start of the current epoch, before its batch
    /// order was drawn.
    pub epoch_rng: RngState,
    pub epoch: u64,
    /// Batches already consumed in the current epoch.
    pub cursor: u64,
    pub best_tune: f64,
    pub stale_evals: u64,
    /// Minibatch loss accumulated since the last log record.
    pub loss_sum: f64,
    pub loss_batches: u64,
}

impl TrainState {
    pub fn new(parameter_count: usize, seed: u64) -> Self {
        TrainState {
            adam: AdamState::new(parameter_count),
            epoch_rng: RngState::capture(&ChaCha8Rng::seed_from_u64(seed)),
            epoch: 0,
            cursor: 0,
            best_tune: f64::NEG_INFINITY,
            stale_evals: 0,
            loss_sum: 0.0,
            loss_batches: 0,
        }
    }

    pub fn iteration(&self) -> u64 {
        self.adam.iteration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iteration: u64,
    /// Learning rate the step at `iteration` uses.
    pub lr: f64,
    pub train_loss: f64,
    pub tune_matched: f64,
    pub tune_exact: f64,
    pub seconds: f64,
}

impl LogRecord {
    /// Equality on every field except wall-clock time.
    pub fn same_trajectory(&self, other: &LogRecord) -> bool {
        self.iteration == other.iteration
            && self.lr.to_bits() == other.lr.to_bits()
            && self.train_loss.to_bits() == other.train_loss.to_bits()
            && self.tune_matched.to_bits() == other.tune_matched.to_bits()
            && self.tune_exact.to_bits() == other.tune_exact.to_bits()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<LogRecord>,
}

pub const LOG_HEADER: &str = "iteration,lr,train_loss,tune_matched,tune_exact,seconds";

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(LOG_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{:e},{},{},{},{:.3}\n",
                r.iteration, r.lr, r.train_loss, r.tune_matched, r.tune_exact, r.seconds
            ));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<TrainLog> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.display().to_string();
        let mut lines = text.lines();
        if lines.next() != Some(LOG_HEADER) {
            return Err(Error::Parse {
                source_name: name,
                line: 1,
                msg: format!("expected header `{LOG_HEADER}`"),
            });
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            let err = || Error::Parse {
                source_name: name.clone(),
                line: i + 2,
                msg: "malformed log record".into(),
            };
            if f.len() != 6 {
                return Err(err());
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| err());
            records.push(LogRecord {
                iteration: f[0].parse().map_err(|_| err())?,
                lr: num(1)?,
                train_loss: num(2)?,
                tune_matched: num(3)?,
                tune_exact: num(4)?,
                seconds: num(5)?,
            });
        }
        Ok(TrainLog { records })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Tune matched-word rate stopped improving for `patience` evaluations.
    Plateau,
    MaxIterations,
    /// [`Trainer::run_until`] reached its target iteration.
    Paused,
}

/// Stateful training driver. Construct with [`Trainer::new`] or
/// [`Trainer::resume`], then call [`Trainer::run`].
pub struct Trainer<'a> {
    pub params: ModelParams,
    pub state: TrainState,
    pub log: TrainLog,
    cfg: TrainConfig,
    table: &'a EmbeddingTable,
    train: &'a [TokenSequence],
    tune: &'a [TokenSequence],
    plan: Vec<Vec<usize>>,
    next_epoch_rng: RngState,
    clock: Instant,
    seconds_offset: f64,
    stopped: Option<StopReason>,
}

impl<'a> Trainer<'a> {
    pub fn new(
        params: ModelParams,
        cfg: TrainConfig,
        table: &'a EmbeddingTable,
        train: &'a [TokenSequence],
        tune: &'a [TokenSequence],
    ) -> Result<Self> {
        let state = TrainState::new(params.parameter_count(), cfg.seed);
        Self::resume(params, state, TrainLog::default(), cfg, table, train, tune)
    }

    /// Continues from a saved state. `log` holds the records written so far.
    pub fn resume(
        params: ModelParams,
        state: TrainState,
        log: TrainLog,
        cfg: TrainConfig,
        table: &'a EmbeddingTable,
        train: &'a [TokenSequence],
        tune: &'a [TokenSequence],
    ) -> Result<Self> {
        cfg.validate()?;
        if train.is_empty() || tune.is_empty() {
            return Err(Error::Usage("training needs non-empty train and tune sets".into()));
        }
        if params.config.word_dim != table.dim() {
            return Err(Error::shape(
                "train",
                format!("model word_dim {}", params.config.word_dim),
                format!("embedding dim {}", table.dim()),
            ));
        }
        if let Some(s) = train.iter().chain(tune).find(|s| s.len() > params.config.max_steps()) {
            return Err(Error::Length(format!(
                "sentence of {} words exceeds max_len {}",
                s.content_len(),
                params.config.max_len
            )));
        }
        if state.adam.len() != params.parameter_count() {
            return Err(Error::Checkpoint(format!(
                "optimizer state tracks {} parameters but the model has {}",
                state.adam.len(),
                params.parameter_count()
            )));
        }
        let seconds_offset = log.records.last().map_or(0.0, |r| r.seconds);
        let mut trainer = Trainer {
            params,
            state,
            log,
            cfg,
            table,
            train,
            tune,
            plan: Vec::new(),
            next_epoch_rng: RngState::capture(&ChaCha8Rng::seed_from_u64(0)),
            clock: Instant::now(),
            seconds_offset,
            stopped: None,
        };
        trainer.draw_plan();
        if trainer.state.cursor as usize > trainer.plan.len() {
            return Err(Error::Checkpoint("epoch cursor beyond the batch plan".into()));
        }
        Ok(trainer)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> u64 {
        self.state.iteration()
    }

    /// Batch order for the current epoch: bucket by length so every batch has
    /// uniform length, shuffle within buckets, chunk, then shuffle the batches.
    fn draw_plan(&mut self) {
        let mut rng = self.state.epoch_rng.restore();
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.train.iter().enumerate() {
            buckets.entry(s.len()).or_default().push(i);
        }
        let mut plan = Vec::new();
        for (_, mut idx) in buckets {
            idx.shuffle(&mut rng);
            plan.extend(idx.chunks(self.cfg.minibatch).map(<[usize]>::to_vec));
        }
        plan.shuffle(&mut rng);
        self.plan = plan;
        self.next_epoch_rng = RngState::capture(&rng);
    }

    /// Runs until a stop rule fires.
    pub fn run(&mut self) -> Result<StopReason> {
        self.run_until(u64::MAX)
    }

    /// Runs until a stop rule fires or `iteration` steps have been taken.
    pub fn run_until(&mut self, iteration: u64) -> Result<StopReason> {
        if let Some(r) = self.stopped {
            return Ok(r);
        }
        if self.log.records.is_empty() {
            let loss = mean_loss(&self.params, self.train, self.table, self.cfg.loss)?;
            self.record(loss)?;
            if let Some(r) = self.stopped {
                return Ok(r);
            }
        }
        loop {
            if self.iteration() >= self.cfg.max_iterations {
                if self.log.records.last().map(|r| r.iteration) != Some(self.iteration()) {
                    let loss = self.pending_loss();
                    self.record(loss)?;
                }
                self.stopped = Some(StopReason::MaxIterations);
                return Ok(StopReason::MaxIterations);
            }
            if self.iteration() >= iteration {
                return Ok(StopReason::Paused);
            }
            self.step()?;
            if self.iteration() % self.cfg.eval_every == 0 {
                let loss = self.pending_loss();
                self.record(loss)?;
                if let Some(r) = self.stopped {
                    return Ok(r);
                }
            }
        }
    }

    fn pending_loss(&self) -> f64 {
        if self.state.loss_batches == 0 {
            0.0
        } else {
            self.state.loss_sum / self.state.loss_batches as f64
        }
    }

    fn record(&mut self, train_loss: f64) -> Result<()> {
        let eval = evaluate(&self.params, self.tune, self.table)?;
        let tune_matched = eval.matched_word_rate();
        let rec = LogRecord {
            iteration: self.iteration(),
            lr: self.cfg.adam.lr(self.iteration()),
            train_loss,
            tune_matched,
            tune_exact: eval.exact_sentence_rate(),
            seconds: self.seconds_offset + self.clock.elapsed().as_secs_f64(),
        };
        self.log.records.push(rec);
        self.state.loss_sum = 0.0;
        self.state.loss_batches = 0;

        if tune_matched > self.state.best_tune + self.cfg.min_improvement {
            self.state.best_tune = tune_matched;
            self.state.stale_evals = 0;
        } else {
            self.state.stale_evals += 1;
            if self.state.stale_evals >= self.cfg.patience {
                self.stopped = Some(StopReason::Plateau);
            }
        }
        Ok(())
    }

    /// One minibatch: forward, match-drop loss, backward, one ADAM step.
    pub fn step(&mut self) -> Result<f64> {
        if self.state.cursor as usize >= self.plan.len() {
            self.state.epoch += 1;
            self.state.cursor = 0;
            self.state.epoch_rng = self.next_epoch_rng;
            self.draw_plan();
        }
        let batch_index = self.state.cursor as usize;
        let batch: Vec<&TokenSequence> = self.plan[batch_index].iter().map(|&i| &self.train[i]).collect();
        let (loss, grads) = batch_gradient(&self.params, &batch, self.table, self.cfg.loss)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss at iteration {} (epoch {}, batch {batch_index})",
                self.iteration(),
                self.state.epoch
            )));
        }
        adam_step_params(&mut self.params, &grads, &mut self.state.adam, &self.cfg.adam)
            .map_err(|e| Error::Training(format!("iteration {}: {e}", self.iteration())))?;
        self.state.cursor += 1;
        self.state.loss_sum += loss;
        self.state.loss_batches += 1;
        Ok(loss)
    }
}

/// Mean per-sentence loss and the gradient of that mean.
///
/// Items are processed in parallel; per-item gradients are summed in batch
/// order so the result does not depend on the thread count.
pub fn batch_gradient(
    params: &ModelParams,
    batch: &[&TokenSequence],
    table: &EmbeddingTable,
    kind: LossKind,
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::Usage("empty minibatch".into()));
    }
    let items: Vec<Result<(Real, ModelParams)>> = batch
        .par_iter()
        .map(|s| sentence_gradient(params, s, table, kind))
        .collect();
    let mut total = params.zeros_like();
    let mut loss = 0.0;
    for item in items {
        let (l, g) = item?;
        loss += l as f64;
        total.add_assign(&g);
    }
    let scale = 1.0 / batch.len() as Real;
    total.scale(scale);
    Ok((loss / batch.len() as f64, total))
}

/// Summed loss and gradient for a single sentence.
pub fn sentence_gradient(
    params: &ModelParams,
    sentence: &TokenSequence,
    table: &EmbeddingTable,
    kind: LossKind,
) -> Result<(Real, ModelParams)> {
    let vectors = model::lookup(table, sentence.ids())?;
    let (outputs, trace) = model::forward(params, &vectors)?;
    let (report, grads) = loss_and_grad(kind, &outputs, sentence.ids(), table)?;
    let mut acc = params.zeros_like();
    if !report.all_matched() {
        model::model_backward_into(params, &trace, &grads, &mut acc)?;
    }
    Ok((report.total_loss, acc))
}

fn mean_loss(params: &ModelParams, data: &[TokenSequence], table: &EmbeddingTable, kind: LossKind) -> Result<f64> {
    let losses = data
        .par_iter()
        .map(|s| {
            let vectors = model::lookup(table, s.ids())?;
            let (outputs, _) = model::forward(params, &vectors)?;
            Ok(loss_and_grad(kind, &outputs, s.ids(), table)?.0.total_loss as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / data.len() as f64)
}

/// Convenience wrapper: train from `params` until a stop rule fires.
pub fn train(
    params: ModelParams,
    train: &[TokenSequence],
    tune: &[TokenSequence],
    cfg: TrainConfig,
    table: &EmbeddingTable,
) -> Result<(ModelParams, TrainLog, StopReason)> {
    let mut t = Trainer::new(params, cfg, table, train, tune)?;
    let reason = t.run()?;
    Ok((t.params, t.log, reason))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketStats {
    pub sentences: usize,
    /// Word positions before the end-of-sentence marker.
    pub words: usize,
    pub matched_words: usize,
    pub exact_sentences: usize,
}

impl BucketStats {
    fn add(&mut self, other: &BucketStats) {
        self.sentences += other.sentences;
        self.words += other.words;
        self.matched_words += other.matched_words;
        self.exact_sentences += other.exact_sentences;
    }
}

/// Reconstruction metrics. Matched-word counts cover the words before the
/// end-of-sentence marker; a sentence is exact only if every position,
/// the marker included, matches.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub totals: BucketStats,
    /// Keyed by words before the end-of-sentence marker.
    pub buckets: BTreeMap<usize, BucketStats>,
}

impl EvalReport {
    pub fn matched_word_rate(&self) -> f64 {
        rate(self.totals.matched_words, self.totals.words)
    }

    pub fn exact_sentence_rate(&self) -> f64 {
        rate(self.totals.exact_sentences, self.totals.sentences)
    }

    /// Tallies one sentence given its target ids and the reconstructed ids.
    pub fn add(&mut self, target: &TokenSequence, output: &[usize]) {
        let n = target.content_len();
        let ids = target.ids();
        let matched_words = ids[..n].iter().zip(output).filter(|(a, b)| a == b).count();
        let exact = output.len() == ids.len() && ids.iter().zip(output).all(|(a, b)| a == b);
        let s = BucketStats {
            sentences: 1,
            words: n,
            matched_words,
            exact_sentences: exact as usize,
        };
        self.totals.add(&s);
        self.buckets.entry(n).or_default().add(&s);
    }
}

pub(crate) fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(params: &ModelParams, dataset: &[TokenSequence], table: &EmbeddingTable) -> Result<EvalReport> {
    evaluate_with(dataset, |s| Ok(model::reconstruct(params, table, s.ids())?.ids))
}

/// Evaluates an arbitrary reconstruction function (for example one that
/// routes the sentence vector through the compressor).
pub fn evaluate_with<F>(dataset: &[TokenSequence], reconstruct: F) -> Result<EvalReport>
where
    F: Fn(&TokenSequence) -> Result<Vec<usize>> + Sync,
{
    if dataset.is_empty() {
        return Err(Error::Usage("cannot evaluate an empty dataset".into()));
    }
    let outputs = dataset.par_iter().map(&reconstruct).collect::<Result<Vec<_>>>()?;
    let mut report = EvalReport::default();
    for (s, out) in dataset.iter().zip(&outputs) {
        report.add(s, out);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Log-uniform range for the initial learning rate.
    pub lr0: (f64, f64),
    /// Log-uniform range for the L2 coefficient.
    pub l2: (f64, f64),
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            lr0: (1e-4, 1e-2),
            l2: (1e-9, 1e-5),
            p1: vec![0.8, 0.85, 0.9],
            p2: vec![0.99, 0.999],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("lr0", self.lr0), ("l2", self.l2)] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Config {
                    field: name.into(),
                    msg: "range must satisfy 0 < low <= high".into(),
                });
            }
        }
        for (name, set) in [("p1", &self.p1), ("p2", &self.p2)] {
            if set.is_empty() || set.iter().any(|p| !(0.0..1.0).contains(p)) {
                return Err(Error::Config {
                    field: name.into(),
                    msg: "must be a non-empty list of values in [0, 1)".into(),
                });
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, base: &AdamConfig, rng: &mut R) -> AdamConfig {
        let log_uniform = |(lo, hi): (f64, f64), rng: &mut R| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo.ln()..hi.ln()).exp()
            }
        };
        AdamConfig {
            lr0: log_uniform(self.lr0, rng),
            l2: log_uniform(self.l2, rng),
            p1: self.p1[rng.random_range(0..self.p1.len())],
            p2: self.p2[rng.random_range(0..self.p2.len())],
            ..*base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub adam: AdamConfig,
    pub tune_matched: f64,
    pub tune_exact: f64,
    pub iterations: u64,
}

/// Samples `trials` optimizer settings, trains each from the same
/// initialization for at most `budget` iterations, and ranks them by final
/// tune matched-word rate (best first; ties keep trial order).
#[allow(clippy::too_many_arguments)]
pub fn random_search(
    space: &SearchSpace,
    trials: usize,
    budget: u64,
    model_cfg: ModelConfig,
    base: &TrainConfig,
    train: &[TokenSequence],
    tune: &[TokenSequence],
    table: &EmbeddingTable,
) -> Result<Vec<TrialResult>> {
    if trials == 0 {
        return Err(Error::Usage("search needs at least one trial".into()));
    }
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(base.seed);
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let adam = space.sample(&base.adam, &mut rng);
        let cfg = TrainConfig {
            adam,
            max_iterations: budget,
            ..*base
        };
        let params = ModelParams::init(model_cfg, base.seed)?;
        let mut t = Trainer::new(params, cfg, table, train, tune)?;
        t.run()?;
        let eval = evaluate(&t.params, tune, table)?;
        results.push(TrialResult {
            trial,
            adam,
            tune_matched: eval.matched_word_rate(),
            tune_exact: eval.exact_sentence_rate(),
            iterations: t.iteration(),
        });
    }
    results.sort_by(|a, b| b.tune_matched.total_cmp(&a.tune_matched).then(a.trial.cmp(&b.trial)));
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkpoint::{decode_checkpoint, encode_checkpoint, model_checkpoint, model_from_checkpoint};
    use crate::corpus::toy_corpus;
    use crate::embeddings::synthetic_table;

    struct Toy {
        table: EmbeddingTable,
        train: Vec<TokenSequence>,
        tune: Vec<TokenSequence>,
    }

    fn toy() -> Toy {
        let table = synthetic_table(12, 4, 30.0, 3).unwrap();
        let all = toy_corpus(&table, 40, 1, 4, 5).unwrap();
        Toy {
            table,
            train: all[..30].to_vec(),
            tune: all[30..].to_vec(),
        }
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            minibatch: 4,
            adam: AdamConfig {
                lr0: 3e-3,
                decay: 0.9999,
                l2: 0.0,
                ..AdamConfig::default()
            },
            eval_every: 10,
            patience: 100,
            max_iterations: 60,
            seed: 8,
            ..TrainConfig::default()
        }
    }

    fn params() -> ModelParams {
        ModelParams::init(ModelConfig::new(4, 6, 6).unwrap(), 1).unwrap()
    }

    fn same_log(a: &[LogRecord], b: &[LogRecord]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_trajectory(y))
    }

    #[test]
    fn zero_lr_leaves_parameters() {
        let t = toy();
        let c = TrainConfig {
            adam: AdamConfig { lr0: 0.0, ..cfg().adam },
            max_iterations: 15,
            ..cfg()
        };
        let (p, _, _) = train(params(), &t.train, &t.tune, c, &t.table).unwrap();
        assert_eq!(p, params());
    }

    #[test]
    fn identical_seeds_identical_logs() {
        let t = toy();
        let (p1, l1, _) = train(params(), &t.train, &t.tune, cfg(), &t.table).unwrap();
        let (p2, l2, _) = train(params(), &t.train, &t.tune, cfg(), &t.table).unwrap();
        assert_eq!(p1, p2);
        assert!(same_log(&l1.records, &l2.records));
        assert_eq!(l1.records.len(), 7);
        assert!(l1.records.windows(2).all(|w| w[0].iteration < w[1].iteration));
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let t = toy();
        let (full, full_log, _) = train(params(), &t.train, &t.tune, cfg(), &t.table).unwrap();

        // 23 is mid-epoch and between evaluations.
        let mut a = Trainer::new(params(), cfg(), &t.table, &t.train, &t.tune).unwrap();
        assert_eq!(a.run_until(23).unwrap(), StopReason::Paused);
        let bytes = encode_checkpoint(&model_checkpoint(&a.params, Some(&a.state)));
        let (p, st) = model_from_checkpoint(decode_checkpoint(&bytes, "mem").unwrap()).unwrap();
        let mut b = Trainer::resume(p, st.unwrap(), a.log.clone(), cfg(), &t.table, &t.train, &t.tune).unwrap();
        b.run().unwrap();
        assert_eq!(b.params, full);
        assert!(same_log(&b.log.records, &full_log.records));
    }

    #[test]
    fn logged_lr_follows_schedule() {
        let t = toy();
        let (_, log, _) = train(params(), &t.train, &t.tune, cfg(), &t.table).unwrap();
        for r in &log.records {
            let want = 3e-3 * 0.9999f64.powf(r.iteration as f64);
            assert!((r.lr - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn plateau_stops_training() {
        let t = toy();
        let c = TrainConfig {
            adam: AdamConfig { lr0: 0.0, ..cfg().adam },
            patience: 2,
            max_iterations: 1000,
            ..cfg()
        };
        let (_, log, reason) = train(params(), &t.train, &t.tune, c, &t.table).unwrap();
        assert_eq!(reason, StopReason::Plateau);
        // first record sets the best score, two more without improvement
        assert_eq!(log.records.len(), 3);
    }

    #[test]
    fn one_small_step_reduces_batch_loss() {
        let t = toy();
        let batch: Vec<&TokenSequence> = t.train.iter().filter(|s| s.len() == 3).take(4).collect();
        let mut p = params();
        let (before, g) = batch_gradient(&p, &batch, &t.table, LossKind::SquaredError).unwrap();
        assert!(before > 0.0);
        let mut st = AdamState::new(p.parameter_count());
        let a = AdamConfig {
            lr0: 1e-6,
            l2: 0.0,
            ..AdamConfig::default()
        };
        adam_step_params(&mut p, &g, &mut st, &a).unwrap();
        let (after, _) = batch_gradient(&p, &batch, &t.table, LossKind::SquaredError).unwrap();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn evaluate_matches_recount() {
        let t = toy();
        let p = params();
        let rep = evaluate(&p, &t.train, &t.table).unwrap();
        let (mut words, mut matched, mut exact) = (0, 0, 0);
        for s in &t.train {
            let out = model::reconstruct(&p, &t.table, s.ids()).unwrap().ids;
            let n = s.len() - 1;
            words += n;
            matched += (0..n).filter(|&i| out[i] == s.ids()[i]).count();
            exact += (out == s.ids()) as usize;
        }
        assert_eq!(rep.totals.words, words);
        assert_eq!(rep.totals.matched_words, matched);
        assert_eq!(rep.totals.exact_sentences, exact);
        let bucket_words: usize = rep.buckets.values().map(|b| b.matched_words).sum();
        assert_eq!(bucket_words, matched);
    }

    #[test]
    fn evaluate_arithmetic() {
        let s = TokenSequence::from_content(vec![1, 2, 3, 4], 9).unwrap();
        let mut perfect = EvalReport::default();
        perfect.add(&s, s.ids());
        assert_eq!((perfect.matched_word_rate(), perfect.exact_sentence_rate()), (1.0, 1.0));
        let mut one_off = EvalReport::default();
        one_off.add(&s, &[1, 2, 0, 4, 9]);
        assert_eq!(one_off.matched_word_rate(), 0.75);
        assert_eq!(one_off.exact_sentence_rate(), 0.0);
    }

    #[test]
    fn search_is_reproducible_and_ranked() {
        let t = toy();
        let mc = ModelConfig::new(4, 6, 6).unwrap();
        let base = TrainConfig { eval_every: 5, ..cfg() };
        let one = random_search(&SearchSpace::default(), 1, 10, mc, &base, &t.train, &t.tune, &t.table).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].trial, 0);
        let a = random_search(&SearchSpace::default(), 3, 10, mc, &base, &t.train, &t.tune, &t.table).unwrap();
        let b = random_search(&SearchSpace::default(), 3, 10, mc, &base, &t.train, &t.tune, &t.table).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].tune_matched >= w[1].tune_matched));
    }

    #[test]
    fn csv_round_trip() {
        let log = TrainLog {
            records: vec![LogRecord {
                iteration: 5,
                lr: 4.22e-5,
                train_loss: 1.25,
                tune_matched: 0.5,
                tune_exact: 0.125,
                seconds: 1.5,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        log.write_csv(&p).unwrap();
        assert_eq!(TrainLog::read_csv(&p).unwrap(), log);
    }

    #[test]
    fn config_validation_names_field() {
        let c = TrainConfig { minibatch: 0, ..cfg() };
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "minibatch"),
            other => panic!("{other:?}"),
        }
    }
}
