//! Versioned binary checkpoints for model and compressor parameters plus
//! optional training state.
//!
//! Layout (little-endian): magic, u32 version, u32 dimension count and the
//! dimensions as u64, u32 block count and blocks as (u32 name length, name,
//! u64 element count, f64 data), a u8 flag followed by the training state
//! when set, and a CRC32 of every preceding byte.

use std::path::Path;

use crate::embeddings::ByteReader;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::numerics::{AdamState, ParamSet, Real};
use crate::trainer::{RngState, TrainState};

pub const CHECKPOINT_MAGIC: &[u8] = b"RRAE-CKPT1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub data: Vec<f64>,
}

/// Format-level contents of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// `[word_dim, hidden, max_len]` for models, `[hidden, compressed_dim]`
    /// for compressors.
    pub dims: Vec<u64>,
    pub blocks: Vec<Block>,
    pub train_state: Option<TrainState>,
}

pub fn param_blocks<P: ParamSet>(params: &P) -> Vec<Block> {
    let mut out = Vec::new();
    params.visit(&mut |name, b| {
        out.push(Block {
            name: name.to_string(),
            data: b.iter().map(|&v| v as f64).collect(),
        })
    });
    out
}

/// Copies `blocks` into `params`. Every block of `params` must be present
/// with a matching length, and no extra blocks may appear.
pub fn fill_params<P: ParamSet>(params: &mut P, blocks: &[Block]) -> Result<()> {
    let mut err = None;
    let mut used = 0;
    params.visit_mut(&mut |name, b| {
        if err.is_some() {
            return;
        }
        match blocks.iter().find(|blk| blk.name == name) {
            None => err = Some(format!("missing parameter block `{name}`")),
            Some(blk) if blk.data.len() != b.len() => {
                err = Some(format!(
                    "block `{name}` has {} values, expected {}",
                    blk.data.len(),
                    b.len()
                ))
            }
            Some(blk) => {
                used += 1;
                for (x, &v) in b.iter_mut().zip(&blk.data) {
                    *x = v as Real;
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(Error::Checkpoint(e));
    }
    if used != blocks.len() {
        return Err(Error::Checkpoint("checkpoint contains unexpected parameter blocks".into()));
    }
    Ok(())
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn block(&mut self, name: &str, data: impl ExactSizeIterator<Item = f64>) {
        self.u32(name.len() as u32);
        self.0.extend_from_slice(name.as_bytes());
        self.u64(data.len() as u64);
        for v in data {
            self.f64(v);
        }
    }
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.u32(ck.dims.len() as u32);
    for &d in &ck.dims {
        w.u64(d);
    }
    w.u32(ck.blocks.len() as u32);
    for b in &ck.blocks {
        w.block(&b.name, b.data.iter().copied());
    }
    match &ck.train_state {
        None => w.u8(0),
        Some(s) => {
            w.u8(1);
            w.u64(s.adam.iteration);
            w.block("adam.m", s.adam.first_moment.iter().map(|&v| v as f64));
            w.block("adam.v", s.adam.second_moment.iter().map(|&v| v as f64));
            w.0.extend_from_slice(&s.epoch_rng.seed);
            w.u64(s.epoch_rng.stream);
            w.0.extend_from_slice(&s.epoch_rng.word_pos.to_le_bytes());
            w.u64(s.epoch);
            w.u64(s.cursor);
            w.f64(s.best_tune);
            w.u64(s.stale_evals);
            w.f64(s.loss_sum);
            w.u64(s.loss_batches);
        }
    }
    let crc = crc32fast::hash(&w.0);
    w.u32(crc);
    w.0
}

enum ParseFail {
    Truncated,
    Invalid(String),
}

fn parse_body(r: &mut ByteReader) -> std::result::Result<Checkpoint, ParseFail> {
    use ParseFail::*;
    fn need<T>(v: Option<T>) -> std::result::Result<T, ParseFail> {
        v.ok_or(Truncated)
    }
    let f64_at = |r: &mut ByteReader| need(r.u64()).map(f64::from_bits);
    let block = |r: &mut ByteReader| -> std::result::Result<Block, ParseFail> {
        let n = need(r.u32())? as usize;
        let name = String::from_utf8(need(r.take(n))?.to_vec()).map_err(|_| Invalid("block name is not UTF-8".into()))?;
        let count = need(r.u64())?;
        let bytes = need(usize::try_from(count).ok().and_then(|c| c.checked_mul(8)).and_then(|len| r.take(len)))?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Block { name, data })
    };

    let ndims = need(r.u32())?;
    let dims = (0..ndims).map(|_| need(r.u64())).collect::<std::result::Result<Vec<_>, _>>()?;
    let nblocks = need(r.u32())?;
    let mut blocks = Vec::new();
    for _ in 0..nblocks {
        blocks.push(block(r)?);
    }
    let train_state = match need(r.take(1))?[0] {
        0 => None,
        1 => {
            let iteration = need(r.u64())?;
            let m = block(r)?;
            let v = block(r)?;
            if m.name != "adam.m" || v.name != "adam.v" || m.data.len() != v.data.len() {
                return Err(Invalid("malformed optimizer state".into()));
            }
            let seed: [u8; 32] = need(r.take(32))?.try_into().unwrap();
            let stream = need(r.u64())?;
            let word_pos = u128::from_le_bytes(need(r.take(16))?.try_into().unwrap());
            Some(TrainState {
                adam: AdamState {
                    first_moment: m.data.iter().map(|&x| x as Real).collect(),
                    second_moment: v.data.iter().map(|&x| x as Real).collect(),
                    iteration,
                },
                epoch_rng: RngState { seed, stream, word_pos },
                epoch: need(r.u64())?,
                cursor: need(r.u64())?,
                best_tune: f64_at(r)?,
                stale_evals: need(r.u64())?,
                loss_sum: f64_at(r)?,
                loss_batches: need(r.u64())?,
            })
        }
        f => return Err(Invalid(format!("bad training-state flag {f}"))),
    };
    Ok(Checkpoint {
        dims,
        blocks,
        train_state,
    })
}

pub fn decode_checkpoint(bytes: &[u8], source: &str) -> Result<Checkpoint> {
    let fail = |msg: String| Error::Checkpoint(format!("{source}: {msg}"));
    let header = CHECKPOINT_MAGIC.len() + 4;
    if bytes.len() < CHECKPOINT_MAGIC.len() || &bytes[..CHECKPOINT_MAGIC.len()] != CHECKPOINT_MAGIC {
        return Err(fail("not a checkpoint file (bad magic)".into()));
    }
    if bytes.len() < header + 4 {
        return Err(fail("file is truncated".into()));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let crc_ok = crc32fast::hash(body) == u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let mut r = ByteReader::new(body);
    r.take(CHECKPOINT_MAGIC.len());
    let version = r.u32().unwrap();
    if version != CHECKPOINT_VERSION {
        return Err(fail(if crc_ok {
            format!("unsupported version {version} (expected {CHECKPOINT_VERSION})")
        } else {
            "checksum mismatch".into()
        }));
    }
    let parsed = parse_body(&mut r);
    match (parsed, crc_ok) {
        (Ok(ck), true) if r.position() == body.len() => Ok(ck),
        (Ok(_), true) => Err(fail("unexpected trailing bytes".into())),
        (Err(ParseFail::Invalid(m)), true) => Err(fail(m)),
        (Err(ParseFail::Truncated), _) => Err(fail("file is truncated".into())),
        (_, false) => Err(fail("checksum mismatch".into())),
    }
}

pub fn write_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(ck)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, &path.display().to_string())
}

pub fn save_checkpoint(params: &ModelParams, train_state: Option<&TrainState>, path: &Path) -> Result<()> {
    write_checkpoint(&model_checkpoint(params, train_state), path)
}

pub fn model_checkpoint(params: &ModelParams, train_state: Option<&TrainState>) -> Checkpoint {
    let c = params.config;
    Checkpoint {
        dims: vec![c.word_dim as u64, c.hidden as u64, c.max_len as u64],
        blocks: param_blocks(params),
        train_state: train_state.cloned(),
    }
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, Option<TrainState>)> {
    model_from_checkpoint(read_checkpoint(path)?)
}

pub fn model_from_checkpoint(ck: Checkpoint) -> Result<(ModelParams, Option<TrainState>)> {
    let [w, h, l] = ck.dims[..] else {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    };
    let cfg = ModelConfig::new(w as usize, h as usize, l as usize)
        .map_err(|e| Error::Checkpoint(format!("invalid model configuration: {e}")))?;
    let mut params = ModelParams::zeros(cfg);
    fill_params(&mut params, &ck.blocks)?;
    if let Some(s) = &ck.train_state {
        if s.adam.len() != params.parameter_count() {
            return Err(Error::Checkpoint("optimizer state does not match the model size".into()));
        }
    }
    Ok((params, ck.train_state))
}
