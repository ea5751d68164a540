//! Finite-difference verification of the analytic loss gradients.

use serde::{Deserialize, Serialize};

use crate::anchors::ProposalLabel;
use crate::angle::NUM_CLASSES;
use crate::error::Result;
use crate::loss::{loss_gpn, loss_gr, GraspConfigBatch, LossConfig, Proposal, ProposalBatch, RoiConfig};
use crate::rng::SplitMix64;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Residuals closer to an L1 kink than this are pushed away so that a
/// central difference never straddles it.
const KINK_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradcheckConfig {
    pub batches: usize,
    pub seed: u64,
    pub step: f64,
    pub tolerance: f64,
    pub proposals_per_batch: usize,
    pub rois_per_batch: usize,
    pub loss: LossConfig,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            batches: 100,
            seed: 0,
            step: DEFAULT_STEP,
            tolerance: DEFAULT_TOLERANCE,
            proposals_per_batch: 8,
            rois_per_batch: 4,
            loss: LossConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub batches: usize,
    pub max_rel_error_gpn: f64,
    pub max_rel_error_gr: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn away_from_kink(rng: &mut SplitMix64, pred: f64) -> f64 {
    loop {
        let t = rng.uniform(-1.0, 1.0);
        let r = (pred - t).abs();
        if r >= KINK_MARGIN && (r - 1.0).abs() >= KINK_MARGIN {
            return t;
        }
    }
}

fn random_deltas(rng: &mut SplitMix64) -> [f64; 4] {
    std::array::from_fn(|_| rng.uniform(-1.0, 1.0))
}

pub fn random_proposal_batch(rng: &mut SplitMix64, n: usize) -> ProposalBatch {
    let proposals = (0..n)
        .map(|_| {
            let target = match rng.below(3) {
                0 => ProposalLabel::Negative,
                1 => ProposalLabel::Positive,
                _ => ProposalLabel::Ignore,
            };
            let logits = [rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)];
            let deltas = random_deltas(rng);
            let target_deltas = (target == ProposalLabel::Positive)
                .then(|| std::array::from_fn(|k| away_from_kink(rng, deltas[k])));
            Proposal { logits, deltas, target, target_deltas }
        })
        .collect();
    ProposalBatch { proposals }
}

pub fn random_config_batch(rng: &mut SplitMix64, n: usize) -> GraspConfigBatch {
    let rois = (0..n)
        .map(|_| {
            let angle_logits = (0..NUM_CLASSES).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let offsets: Vec<[f64; 4]> = (0..NUM_CLASSES).map(|_| random_deltas(rng)).collect();
            let target_class = rng.below(NUM_CLASSES as u64) as usize;
            let target_offsets = (target_class != 0)
                .then(|| std::array::from_fn(|k| away_from_kink(rng, offsets[target_class][k])));
            RoiConfig { angle_logits, offsets, target_class, target_offsets }
        })
        .collect();
    GraspConfigBatch { rois }
}

fn check<B: Clone>(
    batch: &B,
    analytic: &[f64],
    step: f64,
    get: impl Fn(&mut B, usize) -> &mut f64,
    value: impl Fn(&B) -> Result<f64>,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut probe = batch.clone();
    for (k, &a) in analytic.iter().enumerate() {
        let orig = *get(&mut probe, k);
        *get(&mut probe, k) = orig + step;
        let plus = value(&probe)?;
        *get(&mut probe, k) = orig - step;
        let minus = value(&probe)?;
        *get(&mut probe, k) = orig;
        worst = worst.max(relative_error(a, (plus - minus) / (2.0 * step)));
    }
    Ok(worst)
}

/// Largest relative error over every logit and delta of the batch.
pub fn check_gpn(batch: &ProposalBatch, config: &LossConfig, step: f64) -> Result<f64> {
    let l = loss_gpn(batch, config)?;
    let analytic: Vec<f64> = l
        .grad_logits
        .iter()
        .zip(&l.grad_deltas)
        .flat_map(|(g, d)| g.iter().chain(d).copied())
        .collect();
    check(
        batch,
        &analytic,
        step,
        |b, k| {
            let p = &mut b.proposals[k / 6];
            match k % 6 {
                j @ 0..=1 => &mut p.logits[j],
                j => &mut p.deltas[j - 2],
            }
        },
        |b| Ok(loss_gpn(b, config)?.value),
    )
}

pub fn check_gr(batch: &GraspConfigBatch, config: &LossConfig, step: f64) -> Result<f64> {
    let l = loss_gr(batch, config)?;
    let per_roi = NUM_CLASSES * 5;
    let analytic: Vec<f64> = l
        .grad_logits
        .iter()
        .zip(&l.grad_offsets)
        .flat_map(|(g, o)| g.iter().chain(o.as_flattened()).copied())
        .collect();
    check(
        batch,
        &analytic,
        step,
        |b, k| {
            let r = &mut b.rois[k / per_roi];
            match k % per_roi {
                j if j < NUM_CLASSES => &mut r.angle_logits[j],
                j => {
                    let j = j - NUM_CLASSES;
                    &mut r.offsets[j / 4][j % 4]
                }
            }
        },
        |b| Ok(loss_gr(b, config)?.value),
    )
}

pub fn run_gradcheck(config: &GradcheckConfig) -> Result<GradcheckReport> {
    let mut rng = SplitMix64::new(config.seed);
    let (mut gpn, mut gr) = (0.0_f64, 0.0_f64);
    for _ in 0..config.batches {
        let pb = random_proposal_batch(&mut rng, config.proposals_per_batch);
        let gb = random_config_batch(&mut rng, config.rois_per_batch);
        gpn = gpn.max(check_gpn(&pb, &config.loss, config.step)?);
        gr = gr.max(check_gr(&gb, &config.loss, config.step)?);
    }
    Ok(GradcheckReport {
        batches: config.batches,
        max_rel_error_gpn: gpn,
        max_rel_error_gr: gr,
        tolerance: config.tolerance,
        passed: gpn < config.tolerance && gr < config.tolerance,
    })
}
