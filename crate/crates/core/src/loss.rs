//! Match-drop regression loss.
//!
//! Each output position is matched against the dictionary by cosine. A
//! position whose nearest word is already the target contributes exactly
//! zero loss and zero gradient. Every other position contributes the squared
//! Euclidean distance to the target word vector.

use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingTable, MatchResult};
use crate::error::{Error, Result};
use crate::numerics::{dot, norm, Matrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Squared Euclidean distance to the target vector.
    #[default]
    SquaredError,
    /// `1 - cosine(output, target)`; kept for the ablation comparison.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionLoss {
    pub loss: Real,
    pub matched: bool,
    pub nearest: MatchResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total_loss: Real,
    pub per_position: Vec<PositionLoss>,
    pub matched_count: usize,
    pub position_count: usize,
}

impl LossReport {
    pub fn all_matched(&self) -> bool {
        self.matched_count == self.position_count
    }
}

fn check_inputs<V: AsRef<[Real]>>(outputs: &[V], targets: &[usize], table: &EmbeddingTable) -> Result<Vec<MatchResult>> {
    if outputs.len() != targets.len() {
        return Err(Error::Usage(format!(
            "{} outputs but {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    if let Some(t) = targets.iter().find(|&&t| t >= table.len()) {
        return Err(Error::Usage(format!("target id {t} outside vocabulary of {}", table.len())));
    }
    if outputs.is_empty() {
        return Ok(Vec::new());
    }
    table.match_batch(&Matrix::from_rows(outputs)?)
}

/// Loss report and per-position gradients in one matching pass.
pub fn loss_and_grad<V: AsRef<[Real]>>(
    kind: LossKind,
    outputs: &[V],
    targets: &[usize],
    table: &EmbeddingTable,
) -> Result<(LossReport, Vec<Vec<Real>>)> {
    let matches = check_inputs(outputs, targets, table)?;
    let mut per_position = Vec::with_capacity(outputs.len());
    let mut grads = Vec::with_capacity(outputs.len());
    let mut total = 0.0;
    let mut matched_count = 0;
    for ((out, &target), nearest) in outputs.iter().zip(targets).zip(matches) {
        let out = out.as_ref();
        let matched = nearest.word_id == target;
        let (loss, grad) = if matched {
            matched_count += 1;
            (0.0, vec![0.0; out.len()])
        } else {
            let t = table.vector(target);
            match kind {
                LossKind::SquaredError => squared_error(out, t),
                LossKind::Cosine => cosine_error(out, t)?,
            }
        };
        total += loss;
        per_position.push(PositionLoss { loss, matched, nearest });
        grads.push(grad);
    }
    Ok((
        LossReport {
            total_loss: total,
            per_position,
            matched_count,
            position_count: targets.len(),
        },
        grads,
    ))
}

fn squared_error(out: &[Real], target: &[Real]) -> (Real, Vec<Real>) {
    let diff: Vec<Real> = out.iter().zip(target).map(|(o, t)| o - t).collect();
    let loss = dot(&diff, &diff);
    (loss, diff.into_iter().map(|d| 2.0 * d).collect())
}

fn cosine_error(out: &[Real], target: &[Real]) -> Result<(Real, Vec<Real>)> {
    let no = norm(out);
    if !(no > 0.0) {
        return Err(Error::Loss("cosine loss is undefined for a zero output vector".into()));
    }
    let nt = norm(target);
    let c = dot(out, target) / (no * nt);
    // d/dx (1 - x.t / (|x| |t|)) = -(t / (|x||t|) - c x / |x|^2)
    let grad = out
        .iter()
        .zip(target)
        .map(|(x, t)| -(t / (no * nt) - c * x / (no * no)))
        .collect();
    Ok((1.0 - c, grad))
}

pub fn match_drop_loss<V: AsRef<[Real]>>(outputs: &[V], targets: &[usize], table: &EmbeddingTable) -> Result<LossReport> {
    loss_and_grad(LossKind::SquaredError, outputs, targets, table).map(|(r, _)| r)
}

/// Zero vector at matched positions, `2 (output - target)` elsewhere.
pub fn match_drop_grad<V: AsRef<[Real]>>(outputs: &[V], targets: &[usize], table: &EmbeddingTable) -> Result<Vec<Vec<Real>>> {
    loss_and_grad(LossKind::SquaredError, outputs, targets, table).map(|(_, g)| g)
}

/// Ablation: `1 - cosine` with the same match-drop masking.
pub fn cosine_loss<V: AsRef<[Real]>>(outputs: &[V], targets: &[usize], table: &EmbeddingTable) -> Result<LossReport> {
    if let Some(i) = outputs.iter().position(|o| !(norm(o.as_ref()) > 0.0)) {
        return Err(Error::Loss(format!("output {i} is a zero vector")));
    }
    loss_and_grad(LossKind::Cosine, outputs, targets, table).map(|(r, _)| r)
}

pub fn cosine_grad<V: AsRef<[Real]>>(outputs: &[V], targets: &[usize], table: &EmbeddingTable) -> Result<Vec<Vec<Real>>> {
    loss_and_grad(LossKind::Cosine, outputs, targets, table).map(|(_, g)| g)
}
