//! The full autoencoder: encoder RRNN, sentence-vector layer, decoder RRNN
//! fed the same sentence vector at every step, and an affine regression head
//! that emits one word vector per step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingTable, MatchResult};
use crate::error::{Error, Result};
use crate::numerics::{DenseLayer, Matrix, ParamSet, Real};
use crate::rrnn::{self, RrnnCellParams, RrnnTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub word_dim: usize,
    /// Encoder/decoder width; also the sentence-vector size.
    pub hidden: usize,
    /// Longest sentence in words, not counting the end-of-sentence marker.
    pub max_len: usize,
}

impl ModelConfig {
    pub fn new(word_dim: usize, hidden: usize, max_len: usize) -> Result<Self> {
        let cfg = ModelConfig {
            word_dim,
            hidden,
            max_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("word_dim", self.word_dim), ("hidden", self.hidden), ("max_len", self.max_len)] {
            if v == 0 {
                return Err(Error::Config {
                    field: field.into(),
                    msg: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }

    /// Longest sequence the model accepts, end-of-sentence marker included.
    pub fn max_steps(&self) -> usize {
        self.max_len + 1
    }
}

/// Number of trainable parameters for a configuration.
pub fn total_parameter_count(cfg: &ModelConfig) -> u64 {
    let (w, h) = (cfg.word_dim as u64, cfg.hidden as u64);
    let encoder = RrnnCellParams::count_for(w, h);
    let sv = h * h + h;
    let decoder = RrnnCellParams::count_for(h, h);
    let output = h * w + w;
    encoder + sv + decoder + output
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub enc: RrnnCellParams,
    pub sv: DenseLayer,
    pub dec: RrnnCellParams,
    pub out: DenseLayer,
}

impl ModelParams {
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (config.word_dim, config.hidden);
        Ok(ModelParams {
            config,
            enc: RrnnCellParams::init(w, h, &mut rng),
            sv: DenseLayer::glorot(h, h, &mut rng),
            dec: RrnnCellParams::init(h, h, &mut rng),
            out: DenseLayer::glorot(h, w, &mut rng),
        })
    }

    pub fn zeros(config: ModelConfig) -> Self {
        let (w, h) = (config.word_dim, config.hidden);
        ModelParams {
            config,
            enc: RrnnCellParams::zeros(w, h),
            sv: DenseLayer::zeros(h, h),
            dec: RrnnCellParams::zeros(h, h),
            out: DenseLayer::zeros(h, w),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(self.config)
    }
}

impl ParamSet for ModelParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[Real])) {
        self.enc.visit_prefixed("enc", f);
        self.sv.visit("sv", f);
        self.dec.visit_prefixed("dec", f);
        self.out.visit("out", f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [Real])) {
        self.enc.visit_prefixed_mut("enc", f);
        self.sv.visit_mut("sv", f);
        self.dec.visit_prefixed_mut("dec", f);
        self.out.visit_mut("out", f);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeTrace {
    pub enc: RrnnTrace,
    /// Encoder output at the last processed step (input to the sv layer).
    pub enc_out: Vec<Real>,
    pub sv: Vec<Real>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    pub sv: Vec<Real>,
    pub dec: RrnnTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub encode: EncodeTrace,
    pub decode: DecodeTrace,
    pub outputs: Vec<Vec<Real>>,
}

/// Sentence vector `tanh(sv_layer(encoder(x)))` for a sequence of word
/// vectors (end-of-sentence vector included by the caller).
pub fn encode<V: AsRef<[Real]>>(params: &ModelParams, word_vectors: &[V]) -> Result<(Vec<Real>, EncodeTrace)> {
    let cfg = &params.config;
    if word_vectors.is_empty() {
        return Err(Error::Usage("cannot encode an empty sentence".into()));
    }
    if word_vectors.len() > cfg.max_steps() {
        return Err(Error::Length(format!(
            "sentence has {} steps; the model accepts at most {}",
            word_vectors.len(),
            cfg.max_steps()
        )));
    }
    let (enc_out, enc) = rrnn::encoder_forward(&params.enc, word_vectors)?;
    let mut sv = params.sv.forward(&enc_out)?;
    sv.iter_mut().for_each(|v| *v = v.tanh());
    Ok((
        sv.clone(),
        EncodeTrace { enc, enc_out, sv },
    ))
}

/// Runs the decoder for exactly `steps` steps and applies the affine head.
pub fn decode(params: &ModelParams, sv: &[Real], steps: usize) -> Result<(Vec<Vec<Real>>, DecodeTrace)> {
    let cfg = &params.config;
    if steps == 0 || steps > cfg.max_steps() {
        return Err(Error::Length(format!(
            "decode length {steps} outside 1..={}",
            cfg.max_steps()
        )));
    }
    if sv.len() != cfg.hidden {
        return Err(Error::shape(
            "decode",
            format!("hidden {}", cfg.hidden),
            format!("sentence vector of length {}", sv.len()),
        ));
    }
    let (a_outs, dec) = rrnn::decoder_forward(&params.dec, sv, steps)?;
    let outputs = a_outs
        .iter()
        .map(|a| params.out.forward(a))
        .collect::<Result<Vec<_>>>()?;
    Ok((outputs, DecodeTrace { sv: sv.to_vec(), dec }))
}

/// Encode then decode with as many steps as the input has.
pub fn forward<V: AsRef<[Real]>>(params: &ModelParams, word_vectors: &[V]) -> Result<(Vec<Vec<Real>>, ForwardTrace)> {
    let (sv, encode_trace) = encode(params, word_vectors)?;
    let (outputs, decode_trace) = decode(params, &sv, word_vectors.len())?;
    Ok((
        outputs.clone(),
        ForwardTrace {
            encode: encode_trace,
            decode: decode_trace,
            outputs,
        },
    ))
}

/// Gradients of all parameters given the gradient w.r.t. each output vector.
pub fn model_backward<V: AsRef<[Real]>>(params: &ModelParams, trace: &ForwardTrace, grad_outputs: &[V]) -> Result<ModelParams> {
    let mut acc = params.zeros_like();
    model_backward_into(params, trace, grad_outputs, &mut acc)?;
    Ok(acc)
}

/// [`model_backward`] accumulating into an existing gradient set.
pub fn model_backward_into<V: AsRef<[Real]>>(
    params: &ModelParams,
    trace: &ForwardTrace,
    grad_outputs: &[V],
    acc: &mut ModelParams,
) -> Result<()> {
    let w = params.config.word_dim;
    if grad_outputs.len() != trace.decode.dec.len() || grad_outputs.len() != trace.outputs.len() {
        return Err(Error::Usage(format!(
            "trace has {} steps but {} output gradients were given",
            trace.decode.dec.len(),
            grad_outputs.len()
        )));
    }
    if grad_outputs.iter().any(|g| g.as_ref().len() != w) {
        return Err(Error::shape("model_backward", format!("word_dim {w}"), "output gradient length"));
    }
    let grad_sv = decode_backward_into(params, &trace.decode, grad_outputs, acc);
    encode_backward_into(params, &trace.encode, &grad_sv, acc);
    Ok(())
}

/// Head and decoder backward. Returns the gradient w.r.t. the sentence
/// vector, summed over all decoder steps.
pub(crate) fn decode_backward_into<V: AsRef<[Real]>>(
    params: &ModelParams,
    trace: &DecodeTrace,
    grad_outputs: &[V],
    acc: &mut ModelParams,
) -> Vec<Real> {
    let h = params.config.hidden;
    let grad_a: Vec<Option<Vec<Real>>> = grad_outputs
        .iter()
        .zip(&trace.dec.steps)
        .map(|(g, step)| {
            let g = g.as_ref();
            if g.iter().all(|&v| v == 0.0) {
                return None;
            }
            let mut ga = vec![0.0; h];
            params.out.accumulate_backward(&step.a_out, g, &mut acc.out, &mut ga);
            Some(ga)
        })
        .collect();

    let mut grad_sv = vec![0.0; h];
    rrnn::backward_accumulate(
        &params.dec,
        &trace.dec,
        |t| grad_a[t].as_deref(),
        None,
        &mut acc.dec,
        |_, g| {
            for (s, v) in grad_sv.iter_mut().zip(g) {
                *s += v;
            }
        },
    );
    grad_sv
}

pub(crate) fn encode_backward_into(params: &ModelParams, trace: &EncodeTrace, grad_sv: &[Real], acc: &mut ModelParams) {
    let h = params.config.hidden;
    let grad_pre: Vec<Real> = grad_sv
        .iter()
        .zip(&trace.sv)
        .map(|(g, s)| g * (1.0 - s * s))
        .collect();
    let mut grad_enc_out = vec![0.0; h];
    params
        .sv
        .accumulate_backward(&trace.enc_out, &grad_pre, &mut acc.sv, &mut grad_enc_out);
    let last = trace.enc.len() - 1;
    rrnn::backward_accumulate(
        &params.enc,
        &trace.enc,
        |t| (t == last).then_some(grad_enc_out.as_slice()),
        None,
        &mut acc.enc,
        |_, _| {},
    );
}

/// Word vectors for a token-id sequence.
pub fn lookup<'a>(table: &'a EmbeddingTable, ids: &[usize]) -> Result<Vec<&'a [Real]>> {
    ids.iter()
        .map(|&id| {
            if id < table.len() {
                Ok(table.vector(id))
            } else {
                Err(Error::Usage(format!("token id {id} outside vocabulary of {}", table.len())))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub ids: Vec<usize>,
    pub matches: Vec<MatchResult>,
}

/// Encodes `token_ids` (which must end with EOS) and decodes the same number
/// of steps, matching every output to its nearest word.
pub fn reconstruct(params: &ModelParams, table: &EmbeddingTable, token_ids: &[usize]) -> Result<Reconstruction> {
    if token_ids.last() != Some(&table.eos_id()) {
        return Err(Error::Usage("token sequence must end with the end-of-sentence id".into()));
    }
    let vectors = lookup(table, token_ids)?;
    let (sv, _) = encode(params, &vectors)?;
    decode_matched(params, table, &sv, token_ids.len())
}

/// Decodes `steps` outputs from `sv` and matches each to the dictionary.
pub fn decode_matched(params: &ModelParams, table: &EmbeddingTable, sv: &[Real], steps: usize) -> Result<Reconstruction> {
    let (outputs, _) = decode(params, sv, steps)?;
    let matches = table.match_batch(&Matrix::from_rows(&outputs)?)?;
    Ok(Reconstruction {
        ids: matches.iter().map(|m| m.word_id).collect(),
        matches,
    })
}

/// Inference decoding: step until the end-of-sentence word is matched or
/// `max_len + 1` steps have been produced.
pub fn decode_until_eos(params: &ModelParams, table: &EmbeddingTable, sv: &[Real]) -> Result<Reconstruction> {
    let cfg = &params.config;
    if sv.len() != cfg.hidden {
        return Err(Error::shape(
            "decode_until_eos",
            format!("hidden {}", cfg.hidden),
            format!("sentence vector of length {}", sv.len()),
        ));
    }
    let mut state = params.dec.p0.clone();
    let mut out = Reconstruction {
        ids: Vec::new(),
        matches: Vec::new(),
    };
    for _ in 0..cfg.max_steps() {
        let step = rrnn::cell_step(&params.dec, sv, &state)?;
        let y = params.out.forward(&step.a_out)?;
        let m = table.match_vector(&y)?;
        out.ids.push(m.word_id);
        out.matches.push(m);
        state = step.p_next;
        if m.word_id == table.eos_id() {
            break;
        }
    }
    Ok(out)
}
