//! Two-layer autoencoder that shrinks sentence vectors: a tanh compression
//! layer followed by an affine decompression layer.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{fill_params, param_blocks, read_checkpoint, write_checkpoint, Checkpoint};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::model::{self, ModelParams, Reconstruction};
use crate::numerics::{adam_step_params, AdamConfig, AdamState, DenseLayer, Matrix, ParamSet, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct CompressorParams {
    pub compress: DenseLayer,
    pub decompress: DenseLayer,
}

impl CompressorParams {
    /// Glorot-initialized compressor. Requires `1 <= compressed_dim < hidden`.
    pub fn init(hidden: usize, compressed_dim: usize, seed: u64) -> Result<Self> {
        if compressed_dim == 0 || compressed_dim >= hidden {
            return Err(Error::Config {
                field: "compressed_dim".into(),
                msg: format!("must be in 1..{hidden}, got {compressed_dim}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(CompressorParams {
            compress: DenseLayer::glorot(hidden, compressed_dim, &mut rng),
            decompress: DenseLayer::glorot(compressed_dim, hidden, &mut rng),
        })
    }

    /// Identity weights and zero biases with no size reduction.
    pub fn identity(hidden: usize) -> Self {
        CompressorParams {
            compress: DenseLayer {
                weights: Matrix::identity(hidden),
                bias: vec![0.0; hidden],
            },
            decompress: DenseLayer {
                weights: Matrix::identity(hidden),
                bias: vec![0.0; hidden],
            },
        }
    }

    pub fn zeros(hidden: usize, compressed_dim: usize) -> Self {
        CompressorParams {
            compress: DenseLayer::zeros(hidden, compressed_dim),
            decompress: DenseLayer::zeros(compressed_dim, hidden),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.hidden(), self.compressed_dim())
    }

    pub fn hidden(&self) -> usize {
        self.compress.input_dim()
    }

    pub fn compressed_dim(&self) -> usize {
        self.compress.output_dim()
    }
}

impl ParamSet for CompressorParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[Real])) {
        self.compress.visit("comp.compress", f);
        self.decompress.visit("comp.decompress", f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [Real])) {
        self.compress.visit_mut("comp.compress", f);
        self.decompress.visit_mut("comp.decompress", f);
    }
}

pub fn compress(params: &CompressorParams, sv: &[Real]) -> Result<Vec<Real>> {
    if sv.len() != params.hidden() {
        return Err(Error::shape(
            "compress",
            format!("hidden {}", params.hidden()),
            format!("vector of length {}", sv.len()),
        ));
    }
    let mut y = params.compress.forward(sv)?;
    y.iter_mut().for_each(|v| *v = v.tanh());
    Ok(y)
}

pub fn decompress(params: &CompressorParams, cv: &[Real]) -> Result<Vec<Real>> {
    if cv.len() != params.compressed_dim() {
        return Err(Error::shape(
            "decompress",
            format!("compressed_dim {}", params.compressed_dim()),
            format!("vector of length {}", cv.len()),
        ));
    }
    params.decompress.forward(cv)
}

/// Mean over vectors of the mean per-component squared reconstruction error.
pub fn reconstruction_loss<V: AsRef<[Real]>>(params: &CompressorParams, data: &[V]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Usage("empty sentence-vector dataset".into()));
    }
    let mut total = 0.0;
    for sv in data {
        let sv = sv.as_ref();
        let out = decompress(params, &compress(params, sv)?)?;
        total += out.iter().zip(sv).map(|(o, s)| ((o - s) * (o - s)) as f64).sum::<f64>();
    }
    Ok(total / (data.len() * params.hidden()) as f64)
}

/// Loss and gradient of [`reconstruction_loss`] over `batch`.
pub fn loss_and_grad<V: AsRef<[Real]>>(params: &CompressorParams, batch: &[V]) -> Result<(f64, CompressorParams)> {
    if batch.is_empty() {
        return Err(Error::Usage("empty sentence-vector batch".into()));
    }
    let h = params.hidden();
    let scale = 1.0 / (batch.len() * h) as Real;
    let mut acc = params.zeros_like();
    let mut loss = 0.0;
    let mut grad_code = vec![0.0; params.compressed_dim()];
    for sv in batch {
        let sv = sv.as_ref();
        let code = compress(params, sv)?;
        let out = decompress(params, &code)?;
        let diff: Vec<Real> = out.iter().zip(sv).map(|(o, s)| o - s).collect();
        loss += diff.iter().map(|d| (d * d) as f64).sum::<f64>();
        let grad_out: Vec<Real> = diff.iter().map(|d| 2.0 * d * scale).collect();
        grad_code.iter_mut().for_each(|g| *g = 0.0);
        params
            .decompress
            .accumulate_backward(&code, &grad_out, &mut acc.decompress, &mut grad_code);
        let grad_pre: Vec<Real> = grad_code.iter().zip(&code).map(|(g, c)| g * (1.0 - c * c)).collect();
        params.compress.accumulate_param_grads(sv, &grad_pre, &mut acc.compress);
    }
    Ok((loss / (batch.len() * h) as f64, acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressorTrainConfig {
    pub adam: AdamConfig,
    pub epochs: usize,
    pub minibatch: usize,
    pub seed: u64,
}

impl Default for CompressorTrainConfig {
    fn default() -> Self {
        CompressorTrainConfig {
            adam: AdamConfig {
                lr0: 1e-3,
                decay: 1.0,
                l2: 0.0,
                ..AdamConfig::default()
            },
            epochs: 200,
            minibatch: 32,
            seed: 0,
        }
    }
}

/// Trains with ADAM on shuffled minibatches. The returned history holds the
/// full-dataset loss before training and after each epoch.
pub fn train_compressor<V: AsRef<[Real]>>(
    mut params: CompressorParams,
    data: &[V],
    cfg: &CompressorTrainConfig,
) -> Result<(CompressorParams, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::Usage("compressor training needs at least one sentence vector".into()));
    }
    if cfg.minibatch == 0 {
        return Err(Error::Config {
            field: "minibatch".into(),
            msg: "must be at least 1".into(),
        });
    }
    cfg.adam.validate()?;
    if let Some(v) = data.iter().find(|v| v.as_ref().len() != params.hidden()) {
        return Err(Error::shape(
            "train_compressor",
            format!("hidden {}", params.hidden()),
            format!("vector of length {}", v.as_ref().len()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(params.parameter_count());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = vec![reconstruction_loss(&params, data)?];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.minibatch) {
            let batch: Vec<&[Real]> = chunk.iter().map(|&i| data[i].as_ref()).collect();
            let (loss, grads) = loss_and_grad(&params, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite compressor loss at iteration {}",
                    state.iteration
                )));
            }
            adam_step_params(&mut params, &grads, &mut state, &cfg.adam)?;
        }
        history.push(reconstruction_loss(&params, data)?);
    }
    Ok((params, history))
}

/// Encodes a token sequence, passes the sentence vector through the
/// compressor, and decodes the same number of steps.
pub fn reconstruct_compressed(
    model: &ModelParams,
    comp: &CompressorParams,
    table: &EmbeddingTable,
    token_ids: &[usize],
) -> Result<Reconstruction> {
    let vectors = model::lookup(table, token_ids)?;
    let (sv, _) = model::encode(model, &vectors)?;
    let restored = decompress(comp, &compress(comp, &sv)?)?;
    model::decode_matched(model, table, &restored, token_ids.len())
}

pub fn save_compressor(params: &CompressorParams, path: &Path) -> Result<()> {
    let ck = Checkpoint {
        dims: vec![params.hidden() as u64, params.compressed_dim() as u64],
        blocks: param_blocks(params),
        train_state: None,
    };
    write_checkpoint(&ck, path)
}

pub fn load_compressor(path: &Path) -> Result<CompressorParams> {
    let ck = read_checkpoint(path)?;
    let [h, c] = ck.dims[..] else {
        return Err(Error::Checkpoint(format!("{} is not a compressor checkpoint", path.display())));
    };
    let mut params = CompressorParams::zeros(h as usize, c as usize);
    fill_params(&mut params, &ck.blocks)?;
    Ok(params)
}
