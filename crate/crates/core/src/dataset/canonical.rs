//! Canonical interchange: one JSON document per sample, one sample per line
//! (JSON Lines). Rasters are referenced by path; grasps are stored as
//! `[x, y, theta, h, w]` arrays rounded to 6 fractional digits.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Sample, SampleFiles};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, GraspPose, GraspQuad};
use crate::mask::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub rgb: Option<PathBuf>,
    pub depth: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub object_category: Option<String>,
    #[serde(default)]
    pub provenance: Provenance,
    pub grasps_pos: Vec<[f64; 5]>,
    #[serde(default)]
    pub grasps_neg: Option<Vec<[f64; 5]>>,
}

fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn quantize(p: &GraspPose) -> [f64; 5] {
    [
        round6(p.x),
        round6(p.y),
        normalize_angle(round6(p.theta)),
        round6(p.h),
        round6(p.w),
    ]
}

fn quads_to_arrays(quads: &[GraspQuad], id: &str) -> Result<Vec<[f64; 5]>> {
    quads
        .iter()
        .map(|q| {
            q.fit_pose()
                .map(|p| quantize(&p))
                .map_err(|e| Error::InvalidGrasp(format!("sample {id}: {e}")))
        })
        .collect()
}

fn arrays_to_quads(arrays: &[[f64; 5]]) -> Result<Vec<GraspQuad>> {
    arrays
        .iter()
        .map(|a| GraspPose::from_array(*a).map(|p| p.to_quad()))
        .collect()
}

pub fn sample_to_record(s: &Sample) -> Result<SampleRecord> {
    Ok(SampleRecord {
        id: s.id.clone(),
        width: s.width,
        height: s.height,
        rgb: s.files.rgb.clone(),
        depth: s.files.depth.clone(),
        mask: s.files.mask.clone(),
        object_category: s.object_category.clone(),
        provenance: s.provenance,
        grasps_pos: quads_to_arrays(&s.grasps_pos, &s.id)?,
        grasps_neg: s
            .grasps_neg
            .as_deref()
            .map(|q| quads_to_arrays(q, &s.id))
            .transpose()?,
    })
}

/// Builds a sample from a record. Relative raster paths resolve against
/// `base`.
pub fn record_to_sample(r: SampleRecord, base: &Path) -> Result<Sample> {
    let resolve = |p: Option<PathBuf>| p.map(|p| if p.is_relative() { base.join(p) } else { p });
    let mut s = Sample::new(r.id, r.width, r.height);
    s.files = SampleFiles {
        rgb: resolve(r.rgb),
        depth: resolve(r.depth),
        mask: resolve(r.mask),
    };
    s.object_category = r.object_category;
    s.provenance = r.provenance;
    s.grasps_pos = arrays_to_quads(&r.grasps_pos)?;
    s.grasps_neg = r.grasps_neg.as_deref().map(arrays_to_quads).transpose()?;
    Ok(s)
}

pub fn samples_to_jsonl(samples: &[Sample]) -> Result<String> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(&sample_to_record(s)?)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, samples: &[Sample]) -> Result<()> {
    let text = samples_to_jsonl(samples)?;
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<Sample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    let base = super::absolute(parent.unwrap_or(Path::new(".")));
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let rec: SampleRecord = serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            record_to_sample(rec, &base)
        })
        .collect()
}
