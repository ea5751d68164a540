//! Rectangle metric and dataset-level accuracy.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{split, Sample, SplitMode, SplitSpec};
use crate::error::{Error, Result};
use crate::geometry::{angle_difference, jaccard_with, GraspPose, JaccardMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub angle_threshold: f64,
    pub jaccard_threshold: f64,
    /// Accept an angle difference equal to the threshold.
    pub inclusive_angle: bool,
    pub jaccard_mode: JaccardMode,
    /// Predictions scored per sample; the sample counts as correct if any of
    /// them is.
    pub top_k: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            angle_threshold: 30.0,
            jaccard_threshold: 0.25,
            inclusive_angle: true,
            jaccard_mode: JaccardMode::Rotated,
            top_k: 1,
        }
    }
}

impl MetricConfig {
    /// Applies both thresholds. The Jaccard comparison is always strict.
    pub fn accepts(&self, angle_diff: f64, jaccard: f64) -> bool {
        let angle_ok = if self.inclusive_angle {
            angle_diff <= self.angle_threshold
        } else {
            angle_diff < self.angle_threshold
        };
        angle_ok && jaccard > self.jaccard_threshold
    }
}

/// Prediction file contents: `{"predictions": {"<id>": [[x, y, theta, h, w], ...]}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub predictions: BTreeMap<String, Vec<[f64; 5]>>,
}

impl PredictionSet {
    pub fn from_poses(poses: &BTreeMap<String, Vec<GraspPose>>) -> Self {
        Self {
            predictions: poses
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(GraspPose::to_array).collect()))
                .collect(),
        }
    }

    pub fn poses(&self) -> Result<BTreeMap<String, Vec<GraspPose>>> {
        self.predictions
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.iter().map(|a| GraspPose::from_array(*a)).collect::<Result<_>>()?)))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub correct: bool,
    pub gt_index: usize,
    pub angle_diff: f64,
    pub jaccard: f64,
}

/// Scores one prediction against every ground truth. The reported ground
/// truth is the qualifying one with the highest Jaccard, or the overall
/// highest when none qualifies.
pub fn is_correct(pred: &GraspPose, gts: &[GraspPose], config: &MetricConfig) -> Result<MatchOutcome> {
    if gts.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    let mut best: Option<MatchOutcome> = None;
    for (i, gt) in gts.iter().enumerate() {
        let angle_diff = angle_difference(pred.theta, gt.theta);
        let jaccard = jaccard_with(pred, gt, config.jaccard_mode);
        let cand = MatchOutcome { correct: config.accepts(angle_diff, jaccard), gt_index: i, angle_diff, jaccard };
        best = match best {
            Some(b) if (b.correct, b.jaccard) >= (cand.correct, cand.jaccard) => Some(b),
            _ => Some(cand),
        };
    }
    Ok(best.expect("gts is non-empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub id: String,
    pub prediction: GraspPose,
    pub gt_index: Option<usize>,
    pub angle_diff: Option<f64>,
    pub jaccard: Option<f64>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split_mode: Option<SplitMode>,
    pub metric: MetricConfig,
    pub per_sample: Vec<SampleOutcome>,
    pub accuracy: f64,
    pub n_correct: usize,
    pub n_total: usize,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<32} {:>6} {:>10} {:>8} {:>7}", "id", "gt", "angle_diff", "jaccard", "correct");
        for o in &self.per_sample {
            let gt = o.gt_index.map_or("-".to_string(), |g| g.to_string());
            let ad = o.angle_diff.map_or("-".to_string(), |v| format!("{v:.2}"));
            let jc = o.jaccard.map_or("-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(s, "{:<32} {gt:>6} {ad:>10} {jc:>8} {:>7}", o.id, if o.correct { "yes" } else { "no" });
        }
        let mode = self.split_mode.map_or("none", SplitMode::as_str);
        let _ = writeln!(
            s,
            "split {mode}, jaccard {:?}: {}/{} correct\naccuracy {}",
            self.metric.jaccard_mode, self.n_correct, self.n_total, self.accuracy
        );
        s
    }
}

/// Scores every sample in `test` against its prediction list, reporting in
/// id order. Samples without ground truth count as incorrect.
pub fn evaluate(
    predictions: &BTreeMap<String, Vec<GraspPose>>,
    test: &[Sample],
    split_mode: Option<SplitMode>,
    config: &MetricConfig,
) -> Result<EvalReport> {
    if config.top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    let mut missing: Vec<String> = test
        .iter()
        .filter(|s| predictions.get(&s.id).is_none_or(Vec::is_empty))
        .map(|s| s.id.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingPrediction(missing));
    }

    let mut order: Vec<&Sample> = test.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut per_sample = Vec::with_capacity(order.len());
    for s in order {
        let preds = &predictions[&s.id];
        let gts = s.gt_poses();
        let mut outcome = SampleOutcome {
            id: s.id.clone(),
            prediction: preds[0],
            gt_index: None,
            angle_diff: None,
            jaccard: None,
            correct: false,
        };
        if !gts.is_empty() {
            for (k, p) in preds.iter().take(config.top_k).enumerate() {
                let m = is_correct(p, &gts, config)?;
                if k == 0 || m.correct {
                    outcome.prediction = *p;
                    outcome.gt_index = Some(m.gt_index);
                    outcome.angle_diff = Some(m.angle_diff);
                    outcome.jaccard = Some(m.jaccard);
                    outcome.correct = m.correct;
                }
                if m.correct {
                    break;
                }
            }
        }
        per_sample.push(outcome);
    }
    let n_total = per_sample.len();
    let n_correct = per_sample.iter().filter(|o| o.correct).count();
    Ok(EvalReport {
        split_mode,
        metric: *config,
        per_sample,
        accuracy: if n_total == 0 { 0.0 } else { n_correct as f64 / n_total as f64 },
        n_correct,
        n_total,
    })
}

/// Splits `dataset` and evaluates its test side.
pub fn evaluate_split(
    predictions: &BTreeMap<String, Vec<GraspPose>>,
    dataset: Vec<Sample>,
    spec: &SplitSpec,
    config: &MetricConfig,
) -> Result<EvalReport> {
    let (_, test) = split(dataset, spec)?;
    evaluate(predictions, &test, Some(spec.mode), config)
}
