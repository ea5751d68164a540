//! Grasp proposal loss, grasp configuration loss and their sum, each with
//! analytic gradients.
//!
//! ```text
//! L_gpn   = Σ_i CE(p_i, p*_i) + λ  Σ_i p*_i · reg(b_i - b*_i)
//! L_gr    = Σ_r CE(ρ_r, c*_r) + λ2 Σ_r [c*_r ≠ 0] · reg(β_{r,c*} - β*_r)
//! L_total = L_gpn + L_gr
//! ```
//!
//! Proposals labelled [`ProposalLabel::Ignore`] contribute nothing. Sums run
//! in index order so results are bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::anchors::ProposalLabel;
use crate::angle::NUM_CLASSES;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionLoss {
    /// Absolute error summed over the four components.
    #[default]
    L1,
    /// Huber-style smooth L1 with transition at 1.
    SmoothL1,
}

impl std::str::FromStr for RegressionLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Self::L1),
            "smooth_l1" | "smooth-l1" => Ok(Self::SmoothL1),
            other => Err(Error::InvalidArgument(format!("unknown regression loss `{other}`"))),
        }
    }
}

impl RegressionLoss {
    /// Value and derivative at residual `r`. The L1 subgradient at 0 is 0.
    fn eval(self, r: f64) -> (f64, f64) {
        match self {
            RegressionLoss::L1 => (r.abs(), if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 0.0 }),
            RegressionLoss::SmoothL1 if r.abs() < 1.0 => (0.5 * r * r, r),
            RegressionLoss::SmoothL1 => (r.abs() - 0.5, r.signum()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda: f64,
    pub lambda2: f64,
    pub regression: RegressionLoss,
    /// Divide classification sums by the number of contributing terms.
    pub normalize_classification: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            lambda2: 1.0,
            regression: RegressionLoss::L1,
            normalize_classification: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    /// `(not graspable, graspable)`.
    pub logits: [f64; 2],
    pub deltas: [f64; 4],
    pub target: ProposalLabel,
    #[serde(default)]
    pub target_deltas: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProposalBatch {
    pub proposals: Vec<Proposal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiConfig {
    /// One logit per class, background first.
    pub angle_logits: Vec<f64>,
    /// Box offsets predicted for each class.
    pub offsets: Vec<[f64; 4]>,
    pub target_class: usize,
    #[serde(default)]
    pub target_offsets: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GraspConfigBatch {
    pub rois: Vec<RoiConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpnLoss {
    pub value: f64,
    pub classification: f64,
    /// Unweighted regression sum.
    pub regression: f64,
    pub grad_logits: Vec<[f64; 2]>,
    pub grad_deltas: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrLoss {
    pub value: f64,
    pub classification: f64,
    /// Unweighted regression sum.
    pub regression: f64,
    pub grad_logits: Vec<Vec<f64>>,
    pub grad_offsets: Vec<Vec<[f64; 4]>>,
}

/// Cross-entropy of `softmax(logits)` against `target`, and its gradient
/// `softmax - onehot` scaled by `scale`.
fn softmax_cross_entropy(logits: &[f64], target: usize, scale: f64, grad: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let log_z = max + sum.ln();
    for (g, z) in grad.iter_mut().zip(logits) {
        *g = scale * (z - log_z).exp();
    }
    grad[target] -= scale;
    log_z - logits[target]
}

fn regression(kind: RegressionLoss, pred: &[f64; 4], target: &[f64; 4], weight: f64, grad: &mut [f64; 4]) -> f64 {
    let mut total = 0.0;
    for k in 0..4 {
        let (v, d) = kind.eval(pred[k] - target[k]);
        total += v;
        grad[k] = weight * d;
    }
    total
}

fn check_lambda(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be a non-negative number, got {v}")))
    }
}

pub fn loss_gpn(batch: &ProposalBatch, config: &LossConfig) -> Result<GpnLoss> {
    check_lambda("lambda", config.lambda)?;
    let props = &batch.proposals;
    if props.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for (i, p) in props.iter().enumerate() {
        if p.target == ProposalLabel::Positive && p.target_deltas.is_none() {
            return Err(Error::InvalidBatch(format!("positive proposal {i} has no target deltas")));
        }
    }
    let active = props.iter().filter(|p| p.target != ProposalLabel::Ignore).count();
    let cls_scale = if config.normalize_classification && active > 0 {
        1.0 / active as f64
    } else {
        1.0
    };

    let mut out = GpnLoss {
        value: 0.0,
        classification: 0.0,
        regression: 0.0,
        grad_logits: vec![[0.0; 2]; props.len()],
        grad_deltas: vec![[0.0; 4]; props.len()],
    };
    for (i, p) in props.iter().enumerate() {
        let target = match p.target {
            ProposalLabel::Ignore => continue,
            ProposalLabel::Negative => 0,
            ProposalLabel::Positive => 1,
        };
        out.classification += cls_scale * softmax_cross_entropy(&p.logits, target, cls_scale, &mut out.grad_logits[i]);
        if let (ProposalLabel::Positive, Some(t)) = (p.target, &p.target_deltas) {
            out.regression += regression(config.regression, &p.deltas, t, config.lambda, &mut out.grad_deltas[i]);
        }
    }
    out.value = out.classification + config.lambda * out.regression;
    Ok(out)
}

pub fn loss_gr(batch: &GraspConfigBatch, config: &LossConfig) -> Result<GrLoss> {
    check_lambda("lambda2", config.lambda2)?;
    let rois = &batch.rois;
    if rois.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for (i, r) in rois.iter().enumerate() {
        if r.angle_logits.len() != NUM_CLASSES || r.offsets.len() != NUM_CLASSES {
            return Err(Error::InvalidBatch(format!(
                "roi {i}: expected {NUM_CLASSES} logits and offsets, got {} and {}",
                r.angle_logits.len(),
                r.offsets.len()
            )));
        }
        if r.target_class >= NUM_CLASSES {
            return Err(Error::InvalidBatch(format!("roi {i}: target class {}", r.target_class)));
        }
        if r.target_class != 0 && r.target_offsets.is_none() {
            return Err(Error::InvalidBatch(format!("roi {i}: angle target has no offsets")));
        }
    }
    let cls_scale = if config.normalize_classification {
        1.0 / rois.len() as f64
    } else {
        1.0
    };

    let mut out = GrLoss {
        value: 0.0,
        classification: 0.0,
        regression: 0.0,
        grad_logits: vec![vec![0.0; NUM_CLASSES]; rois.len()],
        grad_offsets: vec![vec![[0.0; 4]; NUM_CLASSES]; rois.len()],
    };
    for (i, r) in rois.iter().enumerate() {
        let c = r.target_class;
        out.classification += cls_scale * softmax_cross_entropy(&r.angle_logits, c, cls_scale, &mut out.grad_logits[i]);
        if c != 0 {
            let t = r.target_offsets.as_ref().unwrap();
            out.regression += regression(config.regression, &r.offsets[c], t, config.lambda2, &mut out.grad_offsets[i][c]);
        }
    }
    out.value = out.classification + config.lambda2 * out.regression;
    Ok(out)
}

pub fn loss_total(gpn: f64, gr: f64) -> Result<f64> {
    for v in [gpn, gr] {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
    }
    Ok(gpn + gr)
}
