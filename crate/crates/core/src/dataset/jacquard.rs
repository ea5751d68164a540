//! Jacquard layout: per scene `<prefix>_grasps.txt` (one `x;y;theta;opening;jaw_size`
//! grasp per line, theta in degrees), `<prefix>_RGB.png`, optional
//! `<prefix>_perfect_depth.tiff` and `<prefix>_mask.png`. The directory
//! holding a scene names its object category.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use super::{absolute, keep_in_frame, LoadReport, Sample};
use crate::error::{Error, Result};
use crate::geometry::GraspPose;

const GRASP_SUFFIX: &str = "_grasps.txt";

pub fn load_jacquard(dir: &Path) -> Result<(Vec<Sample>, LoadReport)> {
    if !dir.is_dir() {
        return Err(Error::EmptyDataset(format!("{} is not a directory", dir.display())));
    }
    let mut grasp_files = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(dir, e.into()))?;
        if entry.file_type().is_file() && entry.file_name().to_string_lossy().ends_with(GRASP_SUFFIX) {
            grasp_files.push(entry.path().to_path_buf());
        }
    }
    if grasp_files.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no Jacquard grasp files (*{GRASP_SUFFIX}) under {}",
            dir.display()
        )));
    }
    let loaded: Vec<(Sample, LoadReport)> = grasp_files
        .par_iter()
        .map(|p| load_scene(p))
        .collect::<Result<_>>()?;
    let mut report = LoadReport {
        format: "jacquard".into(),
        ..Default::default()
    };
    let mut samples = Vec::with_capacity(loaded.len());
    for (s, r) in loaded {
        report.absorb(r);
        samples.push(s);
    }
    samples.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((samples, report))
}

fn load_scene(grasp_path: &Path) -> Result<(Sample, LoadReport)> {
    let name = grasp_path.file_name().unwrap().to_string_lossy();
    let prefix = name.trim_end_matches(GRASP_SUFFIX).to_string();
    let sibling = |suffix: &str| -> PathBuf { grasp_path.with_file_name(format!("{prefix}{suffix}")) };

    let rgb = sibling("_RGB.png");
    if !rgb.is_file() {
        return Err(Error::MissingImage { id: prefix, path: rgb });
    }
    let (w, h) = image::image_dimensions(&rgb).map_err(|e| Error::image(&rgb, e))?;
    let mut sample = Sample::new(prefix.clone(), w, h);
    sample.files.rgb = Some(absolute(&rgb));
    let mut report = LoadReport { samples: 1, ..Default::default() };
    let depth = sibling("_perfect_depth.tiff");
    if depth.is_file() {
        sample.files.depth = Some(absolute(&depth));
    } else {
        report.missing_depth = 1;
    }
    let mask = sibling("_mask.png");
    if mask.is_file() {
        sample.files.mask = Some(absolute(&mask));
    }
    sample.object_category = grasp_path
        .parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned());

    let text = std::fs::read_to_string(grasp_path).map_err(|e| Error::io(grasp_path, e))?;
    let poses = parse_grasp_lines(&text, grasp_path)?;
    if poses.is_empty() {
        log::warn!("{prefix}: empty grasp file");
        report.empty_grasp_files.push(prefix);
    }
    let quads = poses.iter().map(GraspPose::to_quad).collect();
    sample.grasps_pos = keep_in_frame(&sample, quads, &mut report);
    Ok((sample, report))
}

/// Parses `x;y;theta;opening;jaw_size` lines into poses with `w = opening`
/// and `h = jaw_size`, normalizing theta.
pub fn parse_grasp_lines(text: &str, path: &Path) -> Result<Vec<GraspPose>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<f64> = line
            .split(';')
            .map(|f| f.trim().parse::<f64>().map_err(|e| err(format!("bad field `{f}`: {e}"))))
            .collect::<Result<_>>()?;
        let [x, y, theta, opening, jaw] = fields[..] else {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        };
        out.push(GraspPose::new(x, y, theta, jaw, opening).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}
