//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::compressor::{
    compress, decompress, load_compressor, reconstruct_compressed, save_compressor, train_compressor, CompressorParams,
    CompressorTrainConfig,
};
use crate::corpus::{read_token_file, toy_corpus, write_token_file, TokenSequence, TOKEN_FILE_MAGIC};
use crate::embeddings::{load_embeddings, save_embeddings, synthetic_table, EmbeddingFormat, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval_report::{curves_from_report, sentence_table_with, write_report};
use crate::loss::LossKind;
use crate::model::{self, ModelConfig, ModelParams};
use crate::numerics::{AdamConfig, Real};
use crate::preprocess::{build_dataset, encode_tokens, process_sentence, write_dataset, DigitMode, PipelineConfig};
use crate::svfile::{read_vectors, write_vectors_binary, write_vectors_text};
use crate::trainer::{evaluate_with, random_search, SearchSpace, TrainConfig, TrainLog, Trainer};

#[derive(Debug, Parser)]
#[command(name = "rrae", version, about = "Invertible sentence embeddings with a residual recurrent autoencoder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize, normalize, dedup and split raw one-sentence-per-line text.
    Preprocess(PreprocessArgs),
    /// Write a synthetic embedding table and random toy corpus.
    ToyData(ToyDataArgs),
    /// Train the autoencoder.
    Train(TrainArgs),
    /// Sentences to sentence vectors.
    Encode(EncodeArgs),
    /// Sentence vectors to sentences.
    Decode(DecodeArgs),
    /// Train the sentence-vector compressor on a trained model's vectors.
    TrainCompressor(TrainCompressorArgs),
    /// Sentence vectors to compressed vectors.
    Compress(CompressArgs),
    /// Compressed vectors to sentence vectors.
    Decompress(CompressArgs),
    /// Reconstruction metrics, length curves and a sample sentence table.
    Evaluate(EvaluateArgs),
    /// Random search over optimizer settings.
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 60)]
    pub max_words: usize,
    /// Train, tune and test fractions, comma separated.
    #[arg(long, default_value = "0.98,0.01,0.01")]
    pub splits: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DigitMode::Split01)]
    pub digit_mode: DigitMode,
}

#[derive(Debug, Args)]
pub struct ToyDataArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub words: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    /// Minimum angle between any two embedding rows, in degrees.
    #[arg(long, default_value_t = 30.0)]
    pub min_angle: f64,
    #[arg(long, default_value_t = 200)]
    pub train: usize,
    #[arg(long, default_value_t = 50)]
    pub tune: usize,
    #[arg(long, default_value_t = 50)]
    pub test: usize,
    #[arg(long, default_value_t = 2)]
    pub min_len: usize,
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Flat TOML file; see `TrainFileConfig` for keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory with train.tok and tune.tok (and embeddings.txt unless
    /// --embeddings is given).
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_out: PathBuf,
    /// Continue from this checkpoint and its log.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training log CSV. Defaults to the checkpoint path with a .csv extension.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Pause after this many iterations; the checkpoint can be resumed.
    #[arg(long)]
    pub stop_at: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// A token-id file, or raw text with one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the float32 binary format instead of text.
    #[arg(long)]
    pub binary: bool,
    /// Digit handling for raw text input.
    #[arg(long, value_enum, default_value_t = DigitMode::Split01)]
    pub digit_mode: DigitMode,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainCompressorArgs {
    /// Trained model checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to 0.3 of the hidden size.
    #[arg(long)]
    pub compressed_dim: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub minibatch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub compressor: PathBuf,
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Token-id file to evaluate.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
    /// Route sentence vectors through this compressor.
    #[arg(long)]
    pub compressor: Option<PathBuf>,
    /// Sentences in the sample table.
    #[arg(long, default_value_t = 20)]
    pub sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// TOML file with `lr0 = [lo, hi]`, `l2 = [lo, hi]`, `p1 = [...]`, `p2 = [...]`.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    /// Iterations per trial.
    #[arg(long)]
    pub budget: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ranked results as JSON; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flat training configuration file. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainFileConfig {
    pub hidden: usize,
    pub max_len: usize,
    pub minibatch: usize,
    pub lr0: f64,
    pub decay: f64,
    pub l2: f64,
    pub p1: f64,
    pub p2: f64,
    pub epsilon: f64,
    pub eval_every: u64,
    pub patience: u64,
    pub min_improvement: f64,
    pub max_iterations: u64,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainFileConfig {
            hidden: 10_000,
            max_len: 60,
            minibatch: t.minibatch,
            lr0: t.adam.lr0,
            decay: t.adam.decay,
            l2: t.adam.l2,
            p1: t.adam.p1,
            p2: t.adam.p2,
            epsilon: t.adam.epsilon,
            eval_every: t.eval_every,
            patience: t.patience,
            min_improvement: t.min_improvement,
            max_iterations: t.max_iterations,
            seed: t.seed,
            loss: t.loss,
        }
    }
}

impl TrainFileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config {
            field: toml_error_field(&e),
            msg: format!("{}: {}", path.display(), e.message()),
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            minibatch: self.minibatch,
            adam: AdamConfig {
                lr0: self.lr0,
                decay: self.decay,
                l2: self.l2,
                p1: self.p1,
                p2: self.p2,
                epsilon: self.epsilon,
            },
            eval_every: self.eval_every,
            patience: self.patience,
            min_improvement: self.min_improvement,
            max_iterations: self.max_iterations,
            seed: self.seed,
            loss: self.loss,
        }
    }
}

fn toml_error_field(e: &toml::de::Error) -> String {
    let msg = e.message();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        return rest.split('`').next().unwrap_or("").to_string();
    }
    "config".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    lr0: Option<(f64, f64)>,
    l2: Option<(f64, f64)>,
    p1: Option<Vec<f64>>,
    p2: Option<Vec<f64>>,
}

fn load_space(path: Option<&Path>) -> Result<SearchSpace> {
    let mut space = SearchSpace::default();
    let Some(path) = path else {
        return Ok(space);
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: SpaceFile = toml::from_str(&text).map_err(|e| Error::Config {
        field: toml_error_field(&e),
        msg: format!("{}: {}", path.display(), e.message()),
    })?;
    if let Some(v) = f.lr0 {
        space.lr0 = v;
    }
    if let Some(v) = f.l2 {
        space.l2 = v;
    }
    if let Some(v) = f.p1 {
        space.p1 = v;
    }
    if let Some(v) = f.p2 {
        space.p2 = v;
    }
    space.validate()?;
    Ok(space)
}

fn parse_splits(s: &str) -> Result<(f64, f64, f64)> {
    let bad = || Error::Config {
        field: "splits".into(),
        msg: format!("expected three comma-separated fractions, got `{s}`"),
    };
    let v: Vec<f64> = s
        .split(',')
        .map(|f| f.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(bad()),
    }
}

fn resolve_embeddings(explicit: Option<&Path>, data_dir: &Path) -> Result<EmbeddingTable> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let bin = data_dir.join("embeddings.bin");
            if bin.exists() {
                bin
            } else {
                data_dir.join("embeddings.txt")
            }
        }
    };
    load_embeddings(&path, None)
}

fn log_path_for(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("csv")
}

/// Runs the CLI with explicit arguments (the first being the program name).
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::Usage(e.to_string())),
    };
    run(cli)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::ToyData(a) => toy_data(a),
        Command::Train(a) => train(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::TrainCompressor(a) => train_comp(a),
        Command::Compress(a) => transform(a, true),
        Command::Decompress(a) => transform(a, false),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Search(a) => search(a),
    }
}

fn preprocess(a: PreprocessArgs) -> Result<()> {
    let table = load_embeddings(&a.embeddings, None)?;
    let cfg = PipelineConfig {
        max_words: a.max_words,
        split_fractions: parse_splits(&a.splits)?,
        digit_mode: a.digit_mode,
        rng_seed: a.seed,
        ..PipelineConfig::default()
    };
    let ds = build_dataset(&a.input, &cfg, &table)?;
    write_dataset(&ds, &table, &a.out_dir)?;
    let (tr, tu, te) = ds.stats.split_sizes;
    println!(
        "sentences={} train={tr} tune={tu} test={te} duplicates={} too_long={} oov_rate={:.4}",
        ds.stats.sentences, ds.stats.duplicates_removed, ds.stats.too_long_removed, ds.stats.oov_rate
    );
    Ok(())
}

fn toy_data(a: ToyDataArgs) -> Result<()> {
    let table = synthetic_table(a.words, a.dim, a.min_angle, a.seed)?;
    let all = toy_corpus(&table, a.train + a.tune + a.test, a.min_len, a.max_len, a.seed.wrapping_add(1))?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    save_embeddings(&table, &a.out_dir.join("embeddings.txt"), EmbeddingFormat::Text)?;
    let (train, rest) = all.split_at(a.train);
    let (tune, test) = rest.split_at(a.tune);
    let hash = table.vocab_hash();
    for (name, part) in [("train", train), ("tune", tune), ("test", test)] {
        write_token_file(&a.out_dir.join(format!("{name}.tok")), &hash, part)?;
    }
    println!("vocab={} dim={} train={} tune={} test={}", table.len(), a.dim, a.train, a.tune, a.test);
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut file = TrainFileConfig::load(a.config.as_deref())?;
    if let Some(s) = a.seed {
        file.seed = s;
    }
    let cfg = file.train_config();
    cfg.validate()?;
    let table = resolve_embeddings(a.embeddings.as_deref(), &a.data_dir)?;
    let train_set = read_token_file(&a.data_dir.join("train.tok"), &table)?;
    let tune_set = read_token_file(&a.data_dir.join("tune.tok"), &table)?;
    let log_out = a.log.clone().unwrap_or_else(|| log_path_for(&a.checkpoint_out));

    let mut trainer = match &a.resume {
        Some(ck) => {
            let (params, state) = load_checkpoint(ck)?;
            let state = state.ok_or_else(|| {
                Error::Checkpoint(format!("{} has no training state to resume from", ck.display()))
            })?;
            let log = TrainLog::read_csv(a.log.as_deref().map_or(log_path_for(ck), Path::to_path_buf).as_path())?;
            Trainer::resume(params, state, log, cfg, &table, &train_set, &tune_set)?
        }
        None => {
            let mc = ModelConfig::new(table.dim(), file.hidden, file.max_len).map_err(|e| match e {
                Error::Config { .. } => e,
                other => Error::Config {
                    field: "hidden".into(),
                    msg: other.to_string(),
                },
            })?;
            let params = ModelParams::init(mc, cfg.seed)?;
            Trainer::new(params, cfg, &table, &train_set, &tune_set)?
        }
    };
    let reason = trainer.run_until(a.stop_at.unwrap_or(u64::MAX))?;
    save_checkpoint(&trainer.params, Some(&trainer.state), &a.checkpoint_out)?;
    trainer.log.write_csv(&log_out)?;
    let last = trainer.log.records.last().expect("at least one record");
    println!(
        "stopped={reason:?} iteration={} tune_matched={:.4} tune_exact={:.4}",
        trainer.iteration(),
        last.tune_matched,
        last.tune_exact
    );
    Ok(())
}

fn read_sentences(path: &Path, table: &EmbeddingTable, digit_mode: DigitMode) -> Result<Vec<TokenSequence>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.starts_with(TOKEN_FILE_MAGIC) {
        return read_token_file(path, table);
    }
    let cfg = PipelineConfig {
        digit_mode,
        ..PipelineConfig::default()
    };
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| encode_tokens(&process_sentence(l, &cfg, table), table))
        .collect())
}

fn write_vectors(path: &Path, dim: usize, v: &[Vec<Real>], binary: bool) -> Result<()> {
    if binary {
        write_vectors_binary(path, dim, v)
    } else {
        write_vectors_text(path, dim, v)
    }
}

fn load_model_for(checkpoint: &Path, table: &EmbeddingTable) -> Result<ModelParams> {
    let (params, _) = load_checkpoint(checkpoint)?;
    if params.config.word_dim != table.dim() {
        return Err(Error::shape(
            "load model",
            format!("checkpoint word_dim {}", params.config.word_dim),
            format!("embedding dim {}", table.dim()),
        ));
    }
    Ok(params)
}

fn encode(a: EncodeArgs) -> Result<()> {
    let table = load_embeddings(&a.embeddings, None)?;
    let params = load_model_for(&a.checkpoint, &table)?;
    let sentences = read_sentences(&a.input, &table, a.digit_mode)?;
    let mut out = Vec::with_capacity(sentences.len());
    for s in &sentences {
        if s.len() > params.config.max_steps() {
            return Err(Error::Length(format!(
                "sentence of {} words exceeds max_len {}",
                s.content_len(),
                params.config.max_len
            )));
        }
        let (sv, _) = model::encode(&params, &model::lookup(&table, s.ids())?)?;
        out.push(sv);
    }
    write_vectors(&a.out, params.config.hidden, &out, a.binary)?;
    println!("encoded={}", out.len());
    Ok(())
}

fn decode(a: DecodeArgs) -> Result<()> {
    let table = load_embeddings(&a.embeddings, None)?;
    let params = load_model_for(&a.checkpoint, &table)?;
    let (dim, vectors) = read_vectors(&a.vectors)?;
    if dim != params.config.hidden {
        return Err(Error::shape(
            "decode",
            format!("checkpoint hidden {}", params.config.hidden),
            format!("vector file dim {dim}"),
        ));
    }
    let mut text = String::new();
    for sv in &vectors {
        let r = model::decode_until_eos(&params, &table, sv)?;
        let words: Vec<&str> = r
            .ids
            .iter()
            .filter(|&&i| i != table.eos_id())
            .map(|&i| table.word(i))
            .collect();
        text.push_str(&words.join(" "));
        text.push('\n');
    }
    std::fs::write(&a.out, text).map_err(|e| Error::io(&a.out, e))?;
    println!("decoded={}", vectors.len());
    Ok(())
}

fn train_comp(a: TrainCompressorArgs) -> Result<()> {
    let table = resolve_embeddings(a.embeddings.as_deref(), &a.data_dir)?;
    let params = load_model_for(&a.checkpoint, &table)?;
    let train_set = read_token_file(&a.data_dir.join("train.tok"), &table)?;
    let svs = train_set
        .iter()
        .map(|s| Ok(model::encode(&params, &model::lookup(&table, s.ids())?)?.0))
        .collect::<Result<Vec<_>>>()?;
    let h = params.config.hidden;
    let c = a.compressed_dim.unwrap_or(((0.3 * h as f64).round() as usize).max(1));
    let comp = CompressorParams::init(h, c, a.seed)?;
    let cfg = CompressorTrainConfig {
        adam: AdamConfig {
            lr0: a.lr,
            decay: 1.0,
            l2: 0.0,
            ..AdamConfig::default()
        },
        epochs: a.epochs,
        minibatch: a.minibatch,
        seed: a.seed,
    };
    let (comp, hist) = train_compressor(comp, &svs, &cfg)?;
    save_compressor(&comp, &a.out)?;
    println!(
        "compressed_dim={c} initial_loss={:.6e} final_loss={:.6e}",
        hist[0],
        hist.last().unwrap()
    );
    Ok(())
}

fn transform(a: CompressArgs, forward: bool) -> Result<()> {
    let comp = load_compressor(&a.compressor)?;
    let (dim, vectors) = read_vectors(&a.vectors)?;
    let (want, out_dim) = if forward {
        (comp.hidden(), comp.compressed_dim())
    } else {
        (comp.compressed_dim(), comp.hidden())
    };
    if dim != want {
        return Err(Error::shape(
            if forward { "compress" } else { "decompress" },
            format!("compressor expects dim {want}"),
            format!("vector file dim {dim}"),
        ));
    }
    let out = vectors
        .iter()
        .map(|v| if forward { compress(&comp, v) } else { decompress(&comp, v) })
        .collect::<Result<Vec<_>>>()?;
    write_vectors(&a.out, out_dim, &out, a.binary)?;
    println!("vectors={}", out.len());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let table = load_embeddings(&a.embeddings, None)?;
    let params = load_model_for(&a.checkpoint, &table)?;
    let data = read_token_file(&a.data, &table)?;
    let comp = a.compressor.as_deref().map(load_compressor).transpose()?;
    if let Some(c) = &comp {
        if c.hidden() != params.config.hidden {
            return Err(Error::shape(
                "evaluate",
                format!("model hidden {}", params.config.hidden),
                format!("compressor hidden {}", c.hidden()),
            ));
        }
    }
    let recon = |s: &TokenSequence| -> Result<Vec<usize>> {
        Ok(match &comp {
            Some(c) => reconstruct_compressed(&params, c, &table, s.ids())?.ids,
            None => model::reconstruct(&params, &table, s.ids())?.ids,
        })
    };
    let report = evaluate_with(&data, recon)?;
    if let Some(dir) = &a.report_dir {
        let curves = curves_from_report(&report);
        let table_rows = sentence_table_with(&data, &table, a.sample.min(data.len()), a.seed, recon)?;
        write_report(dir, &curves, &table_rows)?;
    }
    println!(
        "matched={:.6} exact={:.6} sentences={}",
        report.matched_word_rate(),
        report.exact_sentence_rate(),
        report.totals.sentences
    );
    Ok(())
}

fn search(a: SearchArgs) -> Result<()> {
    let mut file = TrainFileConfig::load(a.config.as_deref())?;
    if let Some(s) = a.seed {
        file.seed = s;
    }
    let base = file.train_config();
    base.validate()?;
    let space = load_space(a.space.as_deref())?;
    let table = resolve_embeddings(a.embeddings.as_deref(), &a.data_dir)?;
    let train_set = read_token_file(&a.data_dir.join("train.tok"), &table)?;
    let tune_set = read_token_file(&a.data_dir.join("tune.tok"), &table)?;
    let mc = ModelConfig::new(table.dim(), file.hidden, file.max_len)?;
    let results = random_search(&space, a.trials, a.budget, mc, &base, &train_set, &tune_set, &table)?;
    let json = serde_json::to_string_pretty(&results).expect("results serialize") + "\n";
    match &a.out {
        Some(p) => std::fs::write(p, json).map_err(|e| Error::io(p, e))?,
        None => print!("{json}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_unknown_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "hidden = 64\nlr0 = 1e-3\n").unwrap();
        let c = TrainFileConfig::load(Some(&p)).unwrap();
        assert_eq!(c.hidden, 64);
        assert_eq!(c.minibatch, 32);
        std::fs::write(&p, "hiden = 64\n").unwrap();
        match TrainFileConfig::load(Some(&p)) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "hiden"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_parsing() {
        assert_eq!(parse_splits("0.8, 0.1,0.1").unwrap(), (0.8, 0.1, 0.1));
        assert!(parse_splits("0.8,0.2").is_err());
    }
}
