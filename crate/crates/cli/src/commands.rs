use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use graspbench::augment::{apply, plan_expansion, AugmentSpec};
use graspbench::baseline::{predict_sample, PcaConfig};
use graspbench::dataset::{
    load_cornell, load_jacquard, read_dataset, split_indices, write_dataset, LoadReport, Sample, SplitMode,
    SplitSpec,
};
use graspbench::eval::{evaluate, is_correct, MetricConfig, PredictionSet};
use graspbench::gradcheck::{run_gradcheck, GradcheckConfig, DEFAULT_STEP, DEFAULT_TOLERANCE};
use graspbench::loss::{LossConfig, RegressionLoss};
use graspbench::mask::{composite, depth_range, to_rgd};
use graspbench::synthetic::{bar_scenes, BarSceneConfig};
use graspbench::{Error, GraspPose, JaccardMode, Provenance};

use crate::config::{Global, Recorder};
use crate::draw;

/// An internal check did not pass; the command still produced its report.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl CheckFailed {
    pub fn kind(&self) -> &'static str {
        "check_failed"
    }
}

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Cornell,
    Jacquard,
    /// A canonical JSON Lines dataset file.
    Canonical,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct ConvertArgs {
    /// Dataset directory, or a canonical file with `--format canonical`.
    #[arg(long, env = "GRASPBENCH_DATA_ROOT")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "cornell")]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `image_wise` or `object_wise`.
    #[arg(long, default_value = "image_wise")]
    pub mode: SplitMode,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct AugmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON augmentation spec; defaults to the 125-variant grid.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Transform the grasps only and write no images.
    #[arg(long)]
    pub annotations_only: bool,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct MaskifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct RgdArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Depth mapped to 0; defaults to each image's finite minimum.
    #[arg(long, requires = "d_max")]
    pub d_min: Option<f64>,
    /// Depth mapped to 255; defaults to each image's finite maximum.
    #[arg(long, requires = "d_min")]
    pub d_max: Option<f64>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct MetricArgs {
    /// `rotated` or `axis_aligned`.
    #[arg(long, default_value = "rotated")]
    pub jaccard_mode: JaccardMode,
    /// Reject angle differences equal to the threshold.
    #[arg(long)]
    pub exclusive_angle: bool,
    #[arg(long, default_value_t = 1)]
    pub top_k: usize,
}

impl MetricArgs {
    fn config(&self) -> MetricConfig {
        MetricConfig {
            jaccard_mode: self.jaccard_mode,
            inclusive_angle: !self.exclusive_angle,
            top_k: self.top_k,
            ..MetricConfig::default()
        }
    }
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Split the input with the global seed and score only the test side.
    #[arg(long)]
    pub split: Option<SplitMode>,
    #[command(flatten)]
    #[serde(flatten)]
    pub metric: MetricArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    pub batches: usize,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda2: f64,
    /// `l1` or `smooth_l1`.
    #[arg(long, default_value = "l1")]
    pub regression: RegressionLoss,
    /// Divide classification sums by the number of terms.
    #[arg(long)]
    pub normalize: bool,
    /// Directory for the report; printed only when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct VisualizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Draw at most this many samples.
    #[arg(long)]
    pub limit: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub metric: MetricArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct BaselineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.2)]
    pub opening_factor: f64,
    #[arg(long, default_value_t = 0.6)]
    pub plate_factor: f64,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn prepare(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn save_png(img: &image::RgbImage, path: &Path) -> Result<()> {
    img.save(path).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn cmd_convert(args: &ConvertArgs, _: &Global, rec: &Recorder) -> Result<()> {
    let (samples, report) = match args.format {
        Format::Cornell => load_cornell(&args.input)?,
        Format::Jacquard => load_jacquard(&args.input)?,
        Format::Canonical => {
            let samples = read_dataset(&args.input)?;
            let report = LoadReport {
                format: "canonical".into(),
                samples: samples.len(),
                grasps_kept: samples.iter().map(|s| s.grasps_pos.len()).sum(),
                ..LoadReport::default()
            };
            (samples, report)
        }
    };
    prepare(&args.out)?;
    write_dataset(&args.out.join("dataset.jsonl"), &samples)?;
    write_json(&args.out.join("load_report.json"), &report)?;
    rec.write(&args.out)?;
    print_json(&report)
}

#[derive(Serialize)]
struct SplitRecord<'a> {
    mode: SplitMode,
    seed: u64,
    train: Vec<&'a str>,
    test: Vec<&'a str>,
}

pub fn cmd_split(args: &SplitArgs, global: &Global, rec: &Recorder) -> Result<()> {
    let samples = read_dataset(&args.input)?;
    let spec = SplitSpec { mode: args.mode, seed: global.seed };
    let idx = split_indices(&samples, &spec)?;
    let pick = |ids: &[usize]| ids.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    let (train, test) = (pick(&idx.train), pick(&idx.test));
    prepare(&args.out)?;
    write_dataset(&args.out.join("train.jsonl"), &train)?;
    write_dataset(&args.out.join("test.jsonl"), &test)?;
    let record = SplitRecord {
        mode: args.mode,
        seed: global.seed,
        train: train.iter().map(|s| s.id.as_str()).collect(),
        test: test.iter().map(|s| s.id.as_str()).collect(),
    };
    write_json(&args.out.join("split.json"), &record)?;
    rec.write(&args.out)?;
    println!("{} train / {} test ({})", train.len(), test.len(), args.mode.as_str());
    Ok(())
}

/// Writes the loaded rasters of a generated sample under `out/images` and
/// points its files there, relative to `out`.
fn store_rasters(s: &mut Sample, out: &Path, suffix: &str) -> Result<()> {
    if let Some(img) = s.rgb.take() {
        let rel = PathBuf::from("images").join(format!("{}{suffix}.png", s.id));
        save_png(&img, &out.join(&rel))?;
        s.files.rgb = Some(rel);
    }
    if let Some(m) = s.mask.take() {
        let rel = PathBuf::from("images").join(format!("{}_mask.png", s.id));
        m.save(&out.join(&rel))?;
        s.files.mask = Some(rel);
    }
    if let Some(d) = s.depth.take() {
        let rel = PathBuf::from("images").join(format!("{}_depth.bin", s.id));
        d.save(&out.join(&rel))?;
        s.files.depth = Some(rel);
    }
    Ok(())
}

#[derive(Serialize)]
struct AugmentSummary {
    inputs: usize,
    outputs: usize,
    multiplier: usize,
    grasps_out_of_frame: usize,
}

pub fn cmd_augment(args: &AugmentArgs, global: &Global, rec: &Recorder) -> Result<()> {
    let spec = match &args.spec {
        Some(p) => AugmentSpec::load(p)?,
        None => AugmentSpec::default(),
    };
    let samples = read_dataset(&args.input)?;
    let plan = plan_expansion(samples.len(), &spec, global.seed)?;
    prepare(&args.out.join("images"))?;

    let groups: Vec<(Vec<Sample>, usize)> = samples
        .into_par_iter()
        .zip(plan)
        .map(|(mut s, params)| -> Result<(Vec<Sample>, usize)> {
            if !args.annotations_only {
                s.load_pixels().with_context(|| format!("sample {}", s.id))?;
            }
            let mut out = Vec::with_capacity(params.len());
            let mut lost = 0;
            for p in &params {
                let mut a = apply(&s, p);
                lost += a.out_of_frame.len();
                if p.is_identity() {
                    a.sample.rgb = None;
                    a.sample.mask = None;
                    a.sample.depth = None;
                } else {
                    store_rasters(&mut a.sample, &args.out, "")?;
                }
                out.push(a.sample);
            }
            Ok((out, lost))
        })
        .collect::<Result<_>>()?;

    let multiplier = spec.target_multiplier;
    let inputs = groups.len();
    let grasps_out_of_frame = groups.iter().map(|g| g.1).sum();
    let all: Vec<Sample> = groups.into_iter().flat_map(|g| g.0).collect();
    write_dataset(&args.out.join("dataset.jsonl"), &all)?;
    let summary = AugmentSummary { inputs, outputs: all.len(), multiplier, grasps_out_of_frame };
    write_json(&args.out.join("augment_report.json"), &summary)?;
    rec.write(&args.out)?;
    print_json(&summary)
}

fn rewrite_images(
    input: &Path,
    out: &Path,
    suffix: &str,
    f: impl Fn(&Sample) -> Result<(image::RgbImage, Provenance)> + Sync,
) -> Result<usize> {
    let samples = read_dataset(input)?;
    prepare(&out.join("images"))?;
    let done: Vec<Sample> = samples
        .into_par_iter()
        .map(|mut s| -> Result<Sample> {
            s.load_pixels().with_context(|| format!("sample {}", s.id))?;
            let (img, provenance) = f(&s).with_context(|| format!("sample {}", s.id))?;
            let rel = PathBuf::from("images").join(format!("{}{suffix}.png", s.id));
            save_png(&img, &out.join(&rel))?;
            s.files.rgb = Some(rel);
            s.provenance = provenance;
            Ok(s)
        })
        .collect::<Result<_>>()?;
    write_dataset(&out.join("dataset.jsonl"), &done)?;
    Ok(done.len())
}

pub fn cmd_maskify(args: &MaskifyArgs, _: &Global, rec: &Recorder) -> Result<()> {
    let n = rewrite_images(&args.input, &args.out, "_masked", |s| {
        let rgb = s.rgb.as_ref().ok_or_else(|| Error::MissingImage {
            id: s.id.clone(),
            path: PathBuf::new(),
        })?;
        let mask = s.mask.as_ref().ok_or_else(|| Error::MissingMask(s.id.clone()))?;
        let m = composite(rgb, mask)?;
        Ok((m.rgb, m.provenance))
    })?;
    rec.write(&args.out)?;
    println!("composited {n} images");
    Ok(())
}

pub fn cmd_rgd(args: &RgdArgs, _: &Global, rec: &Recorder) -> Result<()> {
    let n = rewrite_images(&args.input, &args.out, "_rgd", |s| {
        let rgb = s.rgb.as_ref().ok_or_else(|| Error::MissingImage {
            id: s.id.clone(),
            path: PathBuf::new(),
        })?;
        let depth = s.depth.as_ref().ok_or_else(|| Error::MissingDepth(s.id.clone()))?;
        let (lo, hi) = match (args.d_min, args.d_max) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => depth_range(depth)?,
        };
        let m = to_rgd(rgb, depth, lo, hi)?;
        Ok((m.rgb, m.provenance))
    })?;
    rec.write(&args.out)?;
    println!("converted {n} images");
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, global: &Global, rec: &Recorder) -> Result<()> {
    let samples = read_dataset(&args.input)?;
    let preds = PredictionSet::load(&args.predictions)?.poses()?;
    let config = args.metric.config();
    let report = match args.split {
        Some(mode) => {
            let spec = SplitSpec { mode, seed: global.seed };
            graspbench::eval::evaluate_split(&preds, samples, &spec, &config)?
        }
        None => evaluate(&preds, &samples, None, &config)?,
    };
    prepare(&args.out)?;
    write_json(&args.out.join("eval_report.json"), &report)?;
    rec.write(&args.out)?;
    print!("{}", report.to_table());
    Ok(())
}

pub fn cmd_gradcheck(args: &GradcheckArgs, global: &Global, rec: &Recorder) -> Result<()> {
    let config = GradcheckConfig {
        batches: args.batches,
        seed: global.seed,
        step: args.step,
        tolerance: args.tolerance,
        loss: LossConfig {
            lambda: args.lambda,
            lambda2: args.lambda2,
            regression: args.regression,
            normalize_classification: args.normalize,
        },
        ..GradcheckConfig::default()
    };
    let report = run_gradcheck(&config)?;
    if let Some(out) = &args.out {
        prepare(out)?;
        write_json(&out.join("gradcheck_report.json"), &report)?;
        rec.write(out)?;
    }
    print_json(&report)?;
    if !report.passed {
        return Err(CheckFailed(format!(
            "max relative error {:.3e} (gpn) / {:.3e} (gr) exceeds {:.1e}",
            report.max_rel_error_gpn, report.max_rel_error_gr, report.tolerance
        ))
        .into());
    }
    Ok(())
}

pub fn cmd_visualize(args: &VisualizeArgs, _: &Global, rec: &Recorder) -> Result<()> {
    let mut samples = read_dataset(&args.input)?;
    samples.truncate(args.limit.unwrap_or(usize::MAX));
    let preds: BTreeMap<String, Vec<GraspPose>> = match &args.predictions {
        Some(p) => PredictionSet::load(p)?.poses()?,
        None => BTreeMap::new(),
    };
    let config = args.metric.config();
    prepare(&args.out)?;
    samples.into_par_iter().try_for_each(|mut s| -> Result<()> {
        s.load_pixels().with_context(|| format!("sample {}", s.id))?;
        let Some(mut img) = s.rgb.take() else {
            return Err(Error::MissingImage { id: s.id.clone(), path: PathBuf::new() }.into());
        };
        let gts = s.gt_poses();
        for g in &gts {
            draw::dashed_quad(&mut img, &g.to_quad(), draw::GT_COLOR);
        }
        for p in preds.get(&s.id).into_iter().flatten().take(config.top_k) {
            let ok = !gts.is_empty() && is_correct(p, &gts, &config)?.correct;
            let color = if ok { draw::CORRECT_COLOR } else { draw::WRONG_COLOR };
            draw::solid_quad(&mut img, &p.to_quad(), color);
        }
        save_png(&img, &args.out.join(format!("{}.png", s.id)))
    })?;
    rec.write(&args.out)?;
    Ok(())
}

pub fn cmd_baseline(args: &BaselineArgs, _: &Global, rec: &Recorder) -> Result<()> {
    let samples = read_dataset(&args.input)?;
    let config = PcaConfig { opening_factor: args.opening_factor, plate_factor: args.plate_factor };
    let results: Vec<(String, graspbench::baseline::BaselineGrasp)> = samples
        .par_iter()
        .map(|s| Ok((s.id.clone(), predict_sample(s, &config).with_context(|| format!("sample {}", s.id))?)))
        .collect::<Result<_>>()?;
    let degenerate = results.iter().filter(|r| r.1.degenerate).count();
    if degenerate > 0 {
        log::warn!("{degenerate} mask(s) had no dominant axis; their angle defaults to 0");
    }
    let poses: BTreeMap<String, Vec<GraspPose>> = results.into_iter().map(|(id, g)| (id, vec![g.pose])).collect();
    prepare(&args.out)?;
    PredictionSet::from_poses(&poses).save(&args.out.join("predictions.json"))?;
    rec.write(&args.out)?;
    println!("predicted {} samples ({degenerate} degenerate)", poses.len());
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs, global: &Global, rec: &Recorder) -> Result<()> {
    let mut scenes = bar_scenes(args.count, global.seed, &BarSceneConfig::default());
    prepare(&args.out.join("images"))?;
    scenes
        .par_iter_mut()
        .try_for_each(|s| store_rasters(s, &args.out, "_rgb"))?;
    write_dataset(&args.out.join("dataset.jsonl"), &scenes)?;
    rec.write(&args.out)?;
    println!("wrote {} scenes", scenes.len());
    Ok(())
}
