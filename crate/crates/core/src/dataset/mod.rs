//! Scenes, dataset loaders and train/test splits.

mod canonical;
mod cornell;
mod jacquard;
mod split;

use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GraspPose, GraspQuad};
use crate::mask::Provenance;
use crate::raster::{BinaryMask, DepthMap};

pub use canonical::{
    read_dataset, record_to_sample, sample_to_record, samples_to_jsonl, write_dataset,
    SampleRecord,
};
pub use cornell::load_cornell;
pub use jacquard::load_jacquard;
pub use split::{split, split_indices, SplitIndices, SplitMode, SplitSpec, TRAIN_RATIO};

/// Files backing a sample's rasters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub rgb: Option<PathBuf>,
    pub depth: Option<PathBuf>,
    pub mask: Option<PathBuf>,
}

/// One scene with its ground-truth grasps.
///
/// Pixels are optional: loaders only record file paths and the frame size,
/// and [`Sample::load_pixels`] pulls the rasters in on demand.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub files: SampleFiles,
    pub rgb: Option<RgbImage>,
    pub depth: Option<DepthMap>,
    pub mask: Option<BinaryMask>,
    pub grasps_pos: Vec<GraspQuad>,
    pub grasps_neg: Option<Vec<GraspQuad>>,
    pub object_category: Option<String>,
    pub provenance: Provenance,
}

impl Sample {
    pub fn new(id: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            id: id.into(),
            width,
            height,
            files: SampleFiles::default(),
            rgb: None,
            depth: None,
            mask: None,
            grasps_pos: Vec::new(),
            grasps_neg: None,
            object_category: None,
            provenance: Provenance::Original,
        }
    }

    /// Ground-truth poses fitted from the positive rectangles.
    pub fn gt_poses(&self) -> Vec<GraspPose> {
        self.grasps_pos
            .iter()
            .filter_map(|q| q.fit_pose().ok())
            .collect()
    }

    /// Reads any raster that has a file but no pixels yet, then checks that
    /// all rasters share the sample's frame size.
    pub fn load_pixels(&mut self) -> Result<()> {
        if self.rgb.is_none() {
            if let Some(p) = &self.files.rgb {
                let img = image::open(p).map_err(|e| Error::image(p, e))?;
                self.rgb = Some(img.to_rgb8());
            }
        }
        if self.mask.is_none() {
            if let Some(p) = &self.files.mask {
                self.mask = Some(BinaryMask::load(p)?);
            }
        }
        if self.depth.is_none() {
            if let Some(p) = &self.files.depth {
                self.depth = Some(DepthMap::load(p)?);
            }
        }
        self.check_shapes()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let frame = (self.width, self.height);
        let mut dims = Vec::new();
        if let Some(r) = &self.rgb {
            dims.push(("rgb", r.dimensions()));
        }
        if let Some(m) = &self.mask {
            dims.push(("mask", (m.width(), m.height())));
        }
        if let Some(d) = &self.depth {
            dims.push(("depth", (d.width(), d.height())));
        }
        match dims.iter().find(|(_, d)| *d != frame) {
            Some((name, d)) => Err(Error::ShapeMismatch(format!(
                "sample {}: {name} is {}x{}, frame is {}x{}",
                self.id, d.0, d.1, frame.0, frame.1
            ))),
            None => Ok(()),
        }
    }

    /// Whether every vertex lies in the tolerated annotation window
    /// `[-0.25 W, 1.25 W] x [-0.25 H, 1.25 H]`.
    pub fn quad_in_frame(&self, q: &GraspQuad) -> bool {
        let (w, h) = (self.width as f64, self.height as f64);
        q.vertices.iter().all(|v| {
            (-0.25 * w..=1.25 * w).contains(&v.x) && (-0.25 * h..=1.25 * h).contains(&v.y)
        })
    }
}

/// Summary of a loader run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub format: String,
    pub samples: usize,
    pub grasps_kept: usize,
    pub dropped_non_finite: usize,
    pub dropped_out_of_frame: usize,
    /// Kept rectangles that fail the strict rectangle check; their poses are
    /// fitted with [`GraspQuad::fit_pose`].
    pub non_rectangular: usize,
    pub empty_grasp_files: Vec<String>,
    pub missing_depth: usize,
}

impl LoadReport {
    fn absorb(&mut self, o: LoadReport) {
        self.samples += o.samples;
        self.grasps_kept += o.grasps_kept;
        self.dropped_non_finite += o.dropped_non_finite;
        self.dropped_out_of_frame += o.dropped_out_of_frame;
        self.non_rectangular += o.non_rectangular;
        self.empty_grasp_files.extend(o.empty_grasp_files);
        self.missing_depth += o.missing_depth;
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Drops rectangles outside the annotation window and tallies the rest.
fn keep_in_frame(sample: &Sample, quads: Vec<GraspQuad>, report: &mut LoadReport) -> Vec<GraspQuad> {
    let (kept, dropped): (Vec<_>, Vec<_>) =
        quads.into_iter().partition(|q| sample.quad_in_frame(q));
    if !dropped.is_empty() {
        log::warn!("{}: dropped {} out-of-frame rectangle(s)", sample.id, dropped.len());
    }
    report.dropped_out_of_frame += dropped.len();
    report.non_rectangular += kept.iter().filter(|q| !q.is_rectangle()).count();
    report.grasps_kept += kept.len();
    kept
}
