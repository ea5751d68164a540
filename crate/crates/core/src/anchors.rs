//! Grasp proposal anchors, anchor-to-ground-truth matching and box deltas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AxisBox;

pub const DEFAULT_SCALES: [f64; 3] = [32.0, 64.0, 128.0];
pub const DEFAULT_ASPECTS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorGrid {
    pub rows: usize,
    pub cols: usize,
    /// Pixels between neighboring cell centers.
    pub stride: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub cx: f64,
    pub cy: f64,
    pub scale: f64,
    /// Width over height.
    pub aspect: f64,
}

impl Anchor {
    pub fn width(&self) -> f64 {
        self.scale * self.aspect.sqrt()
    }

    pub fn height(&self) -> f64 {
        self.scale / self.aspect.sqrt()
    }

    pub fn bbox(&self) -> AxisBox {
        AxisBox::from_center(self.cx, self.cy, self.width(), self.height())
    }
}

/// One anchor per (cell, scale, aspect), cells in row-major order with
/// scales varying slower than aspects. Cell `(r, c)` is centered at
/// `((c + 0.5) * stride, (r + 0.5) * stride)`.
pub fn generate_anchors(grid: &AnchorGrid, scales: &[f64], aspects: &[f64]) -> Result<Vec<Anchor>> {
    if grid.stride.is_nan() || grid.stride <= 0.0 {
        return Err(Error::InvalidArgument(format!("stride {} must be positive", grid.stride)));
    }
    if let Some(v) = scales.iter().chain(aspects).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidArgument(format!("scales and aspects must be positive, got {v}")));
    }
    let mut out = Vec::with_capacity(grid.rows * grid.cols * scales.len() * aspects.len());
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let (cx, cy) = ((c as f64 + 0.5) * grid.stride, (r as f64 + 0.5) * grid.stride);
            for &scale in scales {
                for &aspect in aspects {
                    out.push(Anchor { cx, cy, scale, aspect });
                }
            }
        }
    }
    Ok(out)
}

/// Classification target of one proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalLabel {
    Negative,
    Positive,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchThresholds {
    /// IoU at or above which an anchor is positive.
    pub positive: f64,
    /// IoU at or below which an anchor is negative.
    pub negative: f64,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        Self { positive: 0.7, negative: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalTarget {
    pub label: ProposalLabel,
    /// Ground truth with the highest IoU (absent when nothing overlaps).
    pub gt_index: Option<usize>,
    pub iou: f64,
    /// Encoded deltas towards the matched ground truth, for positives.
    pub deltas: Option<[f64; 4]>,
}

/// Labels each anchor by its best IoU with the ground-truth boxes. Every
/// ground truth also claims the anchor(s) that overlap it most, so no
/// ground truth is left without a positive.
pub fn match_proposals(
    anchors: &[Anchor],
    gt_boxes: &[AxisBox],
    thresholds: &MatchThresholds,
) -> Result<Vec<ProposalTarget>> {
    if gt_boxes.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    let boxes: Vec<AxisBox> = anchors.iter().map(Anchor::bbox).collect();
    let ious: Vec<Vec<f64>> = boxes
        .iter()
        .map(|a| gt_boxes.iter().map(|g| a.iou(g)).collect())
        .collect();

    let mut best_for_gt = vec![0.0_f64; gt_boxes.len()];
    for row in &ious {
        for (g, &v) in row.iter().enumerate() {
            best_for_gt[g] = best_for_gt[g].max(v);
        }
    }

    ious.iter()
        .zip(&boxes)
        .map(|(row, abox)| {
            let (g, best) = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            let claimed = row
                .iter()
                .zip(&best_for_gt)
                .any(|(&v, &b)| b > 0.0 && v == b);
            let label = if best >= thresholds.positive || claimed {
                ProposalLabel::Positive
            } else if best <= thresholds.negative {
                ProposalLabel::Negative
            } else {
                ProposalLabel::Ignore
            };
            let deltas = match label {
                ProposalLabel::Positive => Some(encode_deltas(abox, &gt_boxes[g])?),
                _ => None,
            };
            Ok(ProposalTarget {
                label,
                gt_index: (best > 0.0).then_some(g),
                iou: best,
                deltas,
            })
        })
        .collect()
}

/// `(tx, ty, tw, th) = ((x - xa) / wa, (y - ya) / ha, ln(w / wa), ln(h / ha))`
/// on box centers and sizes.
pub fn encode_deltas(anchor: &AxisBox, target: &AxisBox) -> Result<[f64; 4]> {
    let (wa, ha) = (anchor.width(), anchor.height());
    if !(wa > 0.0 && ha > 0.0) {
        return Err(Error::DegenerateAnchor(format!("{wa}x{ha}")));
    }
    let (w, h) = (target.width(), target.height());
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::DegenerateBox(format!("target is {w}x{h}")));
    }
    let (ca, c) = (anchor.center(), target.center());
    Ok([
        (c.x - ca.x) / wa,
        (c.y - ca.y) / ha,
        (w / wa).ln(),
        (h / ha).ln(),
    ])
}

pub fn decode_deltas(anchor: &AxisBox, d: &[f64; 4]) -> Result<AxisBox> {
    let (wa, ha) = (anchor.width(), anchor.height());
    if !(wa > 0.0 && ha > 0.0) {
        return Err(Error::DegenerateAnchor(format!("{wa}x{ha}")));
    }
    let ca = anchor.center();
    Ok(AxisBox::from_center(
        ca.x + d[0] * wa,
        ca.y + d[1] * ha,
        wa * d[2].exp(),
        ha * d[3].exp(),
    ))
}
