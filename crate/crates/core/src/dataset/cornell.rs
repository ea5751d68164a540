//! Cornell layout: `pcdNNNNr.png` images with `pcdNNNNcpos.txt` /
//! `pcdNNNNcneg.txt` rectangle files (one `x y` pair per line, four lines per
//! rectangle). Optional extras next to each image: `pcdNNNNd.tiff` (depth)
//! and `pcdNNNNmask.png`. Object categories come from a `z.txt` anywhere in
//! the tree whose lines read `<image number> <object id> [description]`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use super::{absolute, keep_in_frame, LoadReport, Sample};
use crate::error::{Error, Result};
use crate::geometry::{GraspQuad, Point};

const POS_SUFFIX: &str = "cpos.txt";

pub fn load_cornell(dir: &Path) -> Result<(Vec<Sample>, LoadReport)> {
    if !dir.is_dir() {
        return Err(Error::EmptyDataset(format!("{} is not a directory", dir.display())));
    }
    let mut pos_files = Vec::new();
    let mut categories = HashMap::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(dir, e.into()))?;
        let name = entry.file_name().to_string_lossy();
        if name == "z.txt" {
            categories.extend(parse_categories(entry.path())?);
        } else if name.starts_with("pcd") && name.ends_with(POS_SUFFIX) {
            pos_files.push(entry.path().to_path_buf());
        }
    }
    if pos_files.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no Cornell rectangle files (pcd*{POS_SUFFIX}) under {}",
            dir.display()
        )));
    }

    let loaded: Vec<(Sample, LoadReport)> = pos_files
        .par_iter()
        .map(|p| load_scene(p, &categories))
        .collect::<Result<_>>()?;

    let mut report = LoadReport {
        format: "cornell".into(),
        ..Default::default()
    };
    let mut samples = Vec::with_capacity(loaded.len());
    for (s, r) in loaded {
        report.absorb(r);
        samples.push(s);
    }
    samples.sort_by(|a, b| a.id.cmp(&b.id));
    if report.dropped_non_finite > 0 {
        log::warn!("dropped {} rectangle(s) with non-finite coordinates", report.dropped_non_finite);
    }
    Ok((samples, report))
}

fn load_scene(pos_path: &Path, categories: &HashMap<String, String>) -> Result<(Sample, LoadReport)> {
    let name = pos_path.file_name().unwrap().to_string_lossy();
    let id = name.trim_end_matches(POS_SUFFIX).to_string();
    let sibling = |suffix: &str| -> PathBuf { pos_path.with_file_name(format!("{id}{suffix}")) };

    let rgb = sibling("r.png");
    if !rgb.is_file() {
        return Err(Error::MissingImage { id, path: rgb });
    }
    let (w, h) = image::image_dimensions(&rgb).map_err(|e| Error::image(&rgb, e))?;
    let mut sample = Sample::new(id.clone(), w, h);
    sample.files.rgb = Some(absolute(&rgb));
    let depth = sibling("d.tiff");
    let mut report = LoadReport { samples: 1, ..Default::default() };
    if depth.is_file() {
        sample.files.depth = Some(absolute(&depth));
    } else {
        report.missing_depth = 1;
    }
    let mask = sibling("mask.png");
    if mask.is_file() {
        sample.files.mask = Some(absolute(&mask));
    }
    sample.object_category = categories.get(&id).cloned();

    let (pos, dropped) = parse_rectangles(pos_path)?;
    report.dropped_non_finite += dropped;
    if pos.is_empty() {
        report.empty_grasp_files.push(id.clone());
    }
    sample.grasps_pos = keep_in_frame(&sample, pos, &mut report);

    let neg_path = sibling("cneg.txt");
    if neg_path.is_file() {
        let (neg, dropped) = parse_rectangles(&neg_path)?;
        report.dropped_non_finite += dropped;
        let mut neg_report = LoadReport::default();
        let neg = keep_in_frame(&sample, neg, &mut neg_report);
        report.dropped_out_of_frame += neg_report.dropped_out_of_frame;
        sample.grasps_neg = Some(neg);
    }
    Ok((sample, report))
}

/// Parses a rectangle file. Returns the finite rectangles and the number of
/// rectangles dropped because a coordinate was NaN or infinite.
pub(crate) fn parse_rectangles(path: &Path) -> Result<(Vec<GraspQuad>, usize)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rectangle_text(&text, path)
}

pub(crate) fn parse_rectangle_text(text: &str, path: &Path) -> Result<(Vec<GraspQuad>, usize)> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(i + 1, format!("expected `x y`, found `{line}`")));
        }
        let mut xy = [0.0; 2];
        for (v, f) in xy.iter_mut().zip(&fields) {
            *v = f
                .parse::<f64>()
                .map_err(|e| parse_err(i + 1, format!("bad coordinate `{f}`: {e}")))?;
        }
        points.push(Point::new(xy[0], xy[1]));
    }
    if points.len() % 4 != 0 {
        return Err(parse_err(
            text.lines().count(),
            format!("{} points is not a multiple of 4", points.len()),
        ));
    }
    let mut dropped = 0;
    let quads = points
        .chunks_exact(4)
        .map(|c| GraspQuad::new([c[0], c[1], c[2], c[3]]))
        .filter(|q| {
            let finite = q.is_finite();
            dropped += usize::from(!finite);
            finite
        })
        .collect();
    Ok((quads, dropped))
}

fn parse_categories(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let (Some(img), Some(obj)) = (fields.next(), fields.next()) else {
            continue;
        };
        let n: u32 = img.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("bad image number `{img}`"),
        })?;
        out.insert(format!("pcd{n:04}"), obj.to_string());
    }
    Ok(out)
}
