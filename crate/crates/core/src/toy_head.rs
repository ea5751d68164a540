//! Linear prediction heads over precomputed feature vectors, trained by
//! full-batch gradient descent on the total loss.

use serde::{Deserialize, Serialize};

use crate::anchors::ProposalLabel;
use crate::angle::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::loss::{loss_gpn, loss_gr, loss_total, GraspConfigBatch, LossConfig, Proposal, ProposalBatch, RoiConfig};

const OFFSETS: usize = NUM_CLASSES * 4;

/// Targets for the proposal and the angle ROI produced from one feature row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyTarget {
    pub proposal: ProposalLabel,
    #[serde(default)]
    pub proposal_deltas: Option<[f64; 4]>,
    pub angle_class: usize,
    #[serde(default)]
    pub angle_offsets: Option<[f64; 4]>,
}

/// Four weight matrices, each stored row-major with one row per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyHead {
    dim: usize,
    cls: Vec<f64>,
    reg: Vec<f64>,
    angle: Vec<f64>,
    offsets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub total: f64,
    /// Cross-entropy part of both losses.
    pub classification: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Loss before the first step and after every step.
    pub trajectory: Vec<LossPoint>,
    pub learning_rate: f64,
}

impl FitReport {
    pub fn is_non_increasing(&self) -> bool {
        self.trajectory.windows(2).all(|w| w[1].total <= w[0].total)
    }

    pub fn last(&self) -> LossPoint {
        *self.trajectory.last().expect("trajectory holds the initial loss")
    }
}

fn matvec(features: &[f64], w: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (f, row) in features.iter().zip(w.chunks_exact(cols)) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += f * v;
        }
    }
    out
}

fn outer_add(grad: &mut [f64], features: &[f64], g: &[f64]) {
    let cols = g.len();
    for (f, row) in features.iter().zip(grad.chunks_exact_mut(cols)) {
        for (r, v) in row.iter_mut().zip(g) {
            *r += f * v;
        }
    }
}

impl ToyHead {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            cls: vec![0.0; dim * 2],
            reg: vec![0.0; dim * 4],
            angle: vec![0.0; dim * NUM_CLASSES],
            offsets: vec![0.0; dim * OFFSETS],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward(&self, features: &[Vec<f64>], targets: &[ToyTarget]) -> (ProposalBatch, GraspConfigBatch) {
        let mut proposals = Vec::with_capacity(features.len());
        let mut rois = Vec::with_capacity(features.len());
        for (f, t) in features.iter().zip(targets) {
            let logits = matvec(f, &self.cls, 2);
            let deltas = matvec(f, &self.reg, 4);
            proposals.push(Proposal {
                logits: [logits[0], logits[1]],
                deltas: [deltas[0], deltas[1], deltas[2], deltas[3]],
                target: t.proposal,
                target_deltas: t.proposal_deltas,
            });
            let offsets = matvec(f, &self.offsets, OFFSETS);
            rois.push(RoiConfig {
                angle_logits: matvec(f, &self.angle, NUM_CLASSES),
                offsets: offsets.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect(),
                target_class: t.angle_class,
                target_offsets: t.angle_offsets,
            });
        }
        (ProposalBatch { proposals }, GraspConfigBatch { rois })
    }

    /// Loss at the current weights and its gradient with respect to them.
    fn loss_and_gradient(&self, features: &[Vec<f64>], targets: &[ToyTarget], config: &LossConfig) -> Result<(LossPoint, ToyHead)> {
        let (pb, gb) = self.forward(features, targets);
        let gpn = loss_gpn(&pb, config)?;
        let gr = loss_gr(&gb, config)?;
        let point = LossPoint {
            total: loss_total(gpn.value, gr.value)?,
            classification: gpn.classification + gr.classification,
        };
        let mut g = ToyHead::zeros(self.dim);
        for (i, f) in features.iter().enumerate() {
            outer_add(&mut g.cls, f, &gpn.grad_logits[i]);
            outer_add(&mut g.reg, f, &gpn.grad_deltas[i]);
            outer_add(&mut g.angle, f, &gr.grad_logits[i]);
            outer_add(&mut g.offsets, f, gr.grad_offsets[i].as_flattened());
        }
        Ok((point, g))
    }

    fn descend(&mut self, g: &ToyHead, lr: f64) {
        for (w, d) in [
            (&mut self.cls, &g.cls),
            (&mut self.reg, &g.reg),
            (&mut self.angle, &g.angle),
            (&mut self.offsets, &g.offsets),
        ] {
            for (a, b) in w.iter_mut().zip(d) {
                *a -= lr * b;
            }
        }
    }
}

fn check_inputs(head: &ToyHead, features: &[Vec<f64>], targets: &[ToyTarget], learning_rate: f64) -> Result<()> {
    if features.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if features.len() != targets.len() {
        return Err(Error::InvalidBatch(format!(
            "{} feature rows but {} targets",
            features.len(),
            targets.len()
        )));
    }
    if let Some(i) = features.iter().position(|f| f.len() != head.dim || f.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidBatch(format!("feature row {i} is not {} finite values", head.dim)));
    }
    if !(learning_rate.is_finite() && learning_rate >= 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate {learning_rate}")));
    }
    Ok(())
}

/// Runs `steps` gradient descent updates from the head's current weights.
/// The trajectory holds `steps + 1` values.
pub fn fit_toy_head(
    head: &mut ToyHead,
    features: &[Vec<f64>],
    targets: &[ToyTarget],
    steps: usize,
    learning_rate: f64,
    config: &LossConfig,
) -> Result<FitReport> {
    run(head, features, targets, steps, learning_rate, config, None)
}

/// Like [`fit_toy_head`] but stops as soon as the classification loss drops
/// below `classification_target`, or after `max_steps`.
pub fn fit_until_converged(
    head: &mut ToyHead,
    features: &[Vec<f64>],
    targets: &[ToyTarget],
    max_steps: usize,
    learning_rate: f64,
    classification_target: f64,
    config: &LossConfig,
) -> Result<FitReport> {
    run(head, features, targets, max_steps, learning_rate, config, Some(classification_target))
}

fn run(
    head: &mut ToyHead,
    features: &[Vec<f64>],
    targets: &[ToyTarget],
    steps: usize,
    learning_rate: f64,
    config: &LossConfig,
    stop_below: Option<f64>,
) -> Result<FitReport> {
    check_inputs(head, features, targets, learning_rate)?;
    let mut trajectory: Vec<LossPoint> = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let (current, grad) = head.loss_and_gradient(features, targets, config)?;
        if let Some(first) = trajectory.first().map(|p| p.total) {
            if current.total > 10.0 * first {
                return Err(Error::Divergence { step, loss: current.total, initial: first });
            }
        }
        trajectory.push(current);
        if step == steps || stop_below.is_some_and(|t| current.classification < t) {
            break;
        }
        head.descend(&grad, learning_rate);
    }
    Ok(FitReport { trajectory, learning_rate })
}

/// Halves `initial` until `steps` updates from zero weights give a
/// non-increasing loss. Gives up after `max_halvings`.
pub fn select_learning_rate(
    features: &[Vec<f64>],
    targets: &[ToyTarget],
    steps: usize,
    initial: f64,
    max_halvings: usize,
    config: &LossConfig,
) -> Result<f64> {
    let dim = features.first().map_or(0, Vec::len);
    if initial.is_nan() || initial <= 0.0 {
        return Err(Error::InvalidArgument(format!("initial learning rate {initial} must be positive")));
    }
    let mut lr = initial;
    for _ in 0..=max_halvings {
        let mut head = ToyHead::zeros(dim);
        match fit_toy_head(&mut head, features, targets, steps, lr, config) {
            Ok(r) if r.is_non_increasing() => return Ok(lr),
            Ok(_) | Err(Error::Divergence { .. }) => lr *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidArgument(format!(
        "no learning rate down to {lr} gave a non-increasing loss"
    )))
}
