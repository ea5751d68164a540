//! Geometric and photometric augmentation that keeps grasp annotations,
//! masks and depth aligned with the transformed image.

use std::path::Path;

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Sample, SampleFiles};
use crate::error::{Error, Result};
use crate::geometry::{Point, RigidTransform};
use crate::mask::Provenance;
use crate::raster::{BinaryMask, DepthMap};
use crate::rng::SplitMix64;

/// Enumerated augmentation grid. The cross product of the three lists is the
/// pool from which `target_multiplier` variants per sample are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    /// Degrees, positive turns +x toward +y.
    pub rotations: Vec<f64>,
    /// Pixel offsets `[dx, dy]`.
    pub translations: Vec<[f64; 2]>,
    pub brightness_factors: Vec<f64>,
    pub target_multiplier: usize,
}

impl Default for AugmentSpec {
    /// 5 rotations x 5x5 translation grid x 1 brightness = 125 variants.
    fn default() -> Self {
        let steps = [-40.0, -20.0, 0.0, 20.0, 40.0];
        Self {
            rotations: vec![-20.0, -10.0, 0.0, 10.0, 20.0],
            translations: steps
                .iter()
                .flat_map(|&dx| steps.iter().map(move |&dy| [dx, dy]))
                .collect(),
            brightness_factors: vec![1.0],
            target_multiplier: 125,
        }
    }
}

impl AugmentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: Self = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn combination_count(&self) -> usize {
        self.rotations.len() * self.translations.len() * self.brightness_factors.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_multiplier == 0 {
            return Err(Error::InvalidSpec("target_multiplier must be at least 1".into()));
        }
        let all_finite = self.rotations.iter().chain(self.translations.iter().flatten()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidSpec("non-finite rotation or translation".into()));
        }
        if let Some(b) = self.brightness_factors.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::InvalidSpec(format!("brightness factor {b} must be positive")));
        }
        let available = self.combination_count();
        if available < self.target_multiplier {
            return Err(Error::InsufficientSpec {
                available,
                required: self.target_multiplier,
            });
        }
        Ok(())
    }

    /// Cross product in rotation-major, then translation, then brightness order.
    pub fn combinations(&self) -> Vec<TransformParams> {
        let mut out = Vec::with_capacity(self.combination_count());
        for &rotation in &self.rotations {
            for &[dx, dy] in &self.translations {
                for &brightness in &self.brightness_factors {
                    out.push(TransformParams { rotation, dx, dy, brightness });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub rotation: f64,
    pub dx: f64,
    pub dy: f64,
    pub brightness: f64,
}

impl TransformParams {
    pub const IDENTITY: TransformParams = TransformParams {
        rotation: 0.0,
        dx: 0.0,
        dy: 0.0,
        brightness: 1.0,
    };

    pub fn is_identity(&self) -> bool {
        self.is_rigid_identity() && self.brightness == 1.0
    }

    fn is_rigid_identity(&self) -> bool {
        self.rotation == 0.0 && self.dx == 0.0 && self.dy == 0.0
    }

    pub fn id_suffix(&self) -> String {
        format!("r{}_t{}_{}_b{}", self.rotation, self.dx, self.dy, self.brightness)
    }

    /// Rotation about the image center (pixel centers at integer
    /// coordinates) followed by the translation.
    pub fn rigid(&self, width: u32, height: u32) -> RigidTransform {
        RigidTransform {
            rotation_deg: self.rotation,
            center: Point::new((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0),
            translation: Point::new(self.dx, self.dy),
        }
    }
}

/// An augmented sample plus the indices of positive grasps whose center
/// left the frame. Such grasps are kept.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub sample: Sample,
    pub out_of_frame: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fill {
    White,
    Edge,
}

fn warp_rgb(src: &RgbImage, t: &RigidTransform, fill: Fill) -> RgbImage {
    let (w, h) = src.dimensions();
    let fetch = |x: i64, y: i64| -> [f64; 3] {
        let inside = x >= 0 && y >= 0 && x < w as i64 && y < h as i64;
        let (cx, cy) = match (inside, fill) {
            (true, _) => (x as u32, y as u32),
            (false, Fill::White) => return [255.0; 3],
            (false, Fill::Edge) => (x.clamp(0, w as i64 - 1) as u32, y.clamp(0, h as i64 - 1) as u32),
        };
        src.get_pixel(cx, cy).0.map(f64::from)
    };
    RgbImage::from_fn(w, h, |x, y| {
        let s = t.invert(Point::new(x as f64, y as f64));
        let (x0, y0) = (s.x.floor(), s.y.floor());
        let (fx, fy) = (s.x - x0, s.y - y0);
        let (xi, yi) = (x0 as i64, y0 as i64);
        let taps = [
            (fetch(xi, yi), (1.0 - fx) * (1.0 - fy)),
            (fetch(xi + 1, yi), fx * (1.0 - fy)),
            (fetch(xi, yi + 1), (1.0 - fx) * fy),
            (fetch(xi + 1, yi + 1), fx * fy),
        ];
        let mut acc = [0.0; 3];
        for (px, wgt) in taps {
            if wgt == 0.0 {
                continue;
            }
            for c in 0..3 {
                acc[c] += px[c] * wgt;
            }
        }
        Rgb(acc.map(|v| (v + 0.5).floor().clamp(0.0, 255.0) as u8))
    })
}

fn nearest_source(t: &RigidTransform, x: u32, y: u32, w: u32, h: u32) -> Option<(u32, u32)> {
    let s = t.invert(Point::new(x as f64, y as f64));
    let (sx, sy) = (s.x.round(), s.y.round());
    (sx >= 0.0 && sy >= 0.0 && sx < w as f64 && sy < h as f64).then_some((sx as u32, sy as u32))
}

fn warp_mask(src: &BinaryMask, t: &RigidTransform) -> BinaryMask {
    let (w, h) = (src.width(), src.height());
    BinaryMask::from_fn(w, h, |x, y| {
        nearest_source(t, x, y, w, h).is_some_and(|(sx, sy)| src.get(sx, sy))
    })
}

fn warp_depth(src: &DepthMap, t: &RigidTransform) -> DepthMap {
    let (w, h) = (src.width(), src.height());
    DepthMap::from_fn(w, h, |x, y| {
        nearest_source(t, x, y, w, h).map_or(f32::NAN, |(sx, sy)| src.get(sx, sy))
    })
}

fn adjust_brightness(img: &mut RgbImage, factor: f64) {
    for px in img.pixels_mut() {
        for c in px.0.iter_mut() {
            *c = (*c as f64 * factor + 0.5).floor().clamp(0.0, 255.0) as u8;
        }
    }
}

/// Applies one rotation/translation/brightness combination.
///
/// Rasters that are loaded get resampled (bilinear RGB, nearest mask and
/// depth); annotation-only samples just have their grasps transformed.
pub fn apply(sample: &Sample, params: &TransformParams) -> Augmented {
    let t = params.rigid(sample.width, sample.height);
    let rigid = !params.is_rigid_identity();
    let mut out = Sample::new(
        if params.is_identity() {
            sample.id.clone()
        } else {
            format!("{}_{}", sample.id, params.id_suffix())
        },
        sample.width,
        sample.height,
    );
    out.object_category = sample.object_category.clone();
    out.provenance = sample.provenance;
    out.files = if params.is_identity() {
        sample.files.clone()
    } else {
        SampleFiles::default()
    };

    let fill = if sample.provenance == Provenance::MaskComposited {
        Fill::White
    } else {
        Fill::Edge
    };
    out.rgb = sample.rgb.as_ref().map(|img| {
        let mut img = if rigid { warp_rgb(img, &t, fill) } else { img.clone() };
        if params.brightness != 1.0 {
            adjust_brightness(&mut img, params.brightness);
        }
        img
    });
    out.mask = sample.mask.as_ref().map(|m| if rigid { warp_mask(m, &t) } else { m.clone() });
    out.depth = sample.depth.as_ref().map(|d| if rigid { warp_depth(d, &t) } else { d.clone() });

    out.grasps_pos = sample.grasps_pos.iter().map(|q| t.apply_quad(q)).collect();
    out.grasps_neg = sample
        .grasps_neg
        .as_ref()
        .map(|n| n.iter().map(|q| t.apply_quad(q)).collect());

    let (w, h) = (sample.width as f64, sample.height as f64);
    let out_of_frame = out
        .grasps_pos
        .iter()
        .enumerate()
        .filter(|(_, q)| {
            let cx = q.vertices.iter().map(|v| v.x).sum::<f64>() / 4.0;
            let cy = q.vertices.iter().map(|v| v.y).sum::<f64>() / 4.0;
            !(0.0..w).contains(&cx) || !(0.0..h).contains(&cy)
        })
        .map(|(i, _)| i)
        .collect();
    Augmented { sample: out, out_of_frame }
}

/// Chooses `target_multiplier` combinations for each of `n_samples` inputs.
///
/// The identity combination, when the grid contains it, is always kept; the
/// rest are drawn without replacement by the seeded generator, one sample
/// after another. Each selection is returned in grid order.
pub fn plan_expansion(n_samples: usize, spec: &AugmentSpec, seed: u64) -> Result<Vec<Vec<TransformParams>>> {
    spec.validate()?;
    let combos = spec.combinations();
    let m = spec.target_multiplier;
    if m == combos.len() {
        return Ok(vec![combos; n_samples]);
    }
    let identity = combos.iter().position(TransformParams::is_identity);
    let pool: Vec<usize> = (0..combos.len()).filter(|&i| Some(i) != identity).collect();
    let mut rng = SplitMix64::new(seed);
    Ok((0..n_samples)
        .map(|_| {
            let mut pool = pool.clone();
            rng.shuffle(&mut pool);
            let mut chosen: Vec<usize> = identity.into_iter().chain(pool).take(m).collect();
            chosen.sort_unstable();
            chosen.into_iter().map(|i| combos[i]).collect()
        })
        .collect())
}

/// Emits exactly `target_multiplier` variants per input, ordered by input
/// then by grid position.
pub fn expand(train: &[Sample], spec: &AugmentSpec, seed: u64) -> Result<Vec<Augmented>> {
    let plan = plan_expansion(train.len(), spec, seed)?;
    Ok(train
        .par_iter()
        .zip(plan.par_iter())
        .flat_map_iter(|(s, params)| params.iter().map(move |p| apply(s, p)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GraspPose;

    fn scene() -> Sample {
        let mut s = Sample::new("s", 21, 11);
        s.rgb = Some(RgbImage::from_fn(21, 11, |x, y| Rgb([x as u8 * 10, y as u8 * 20, 7])));
        s.mask = Some(BinaryMask::from_fn(21, 11, |x, y| (5..15).contains(&x) && (3..8).contains(&y)));
        s.grasps_pos = vec![GraspPose::new(10.0, 5.0, 20.0, 4.0, 8.0).unwrap().to_quad()];
        s
    }

    #[test]
    fn identity_leaves_sample_unchanged() {
        let s = scene();
        let a = apply(&s, &TransformParams::IDENTITY);
        assert_eq!(a.sample.id, "s");
        assert_eq!(a.sample.rgb, s.rgb);
        assert_eq!(a.sample.mask, s.mask);
        assert_eq!(a.sample.grasps_pos, s.grasps_pos);
        assert!(a.out_of_frame.is_empty());
    }

    #[test]
    fn brightness_moves_no_geometry() {
        let s = scene();
        let p = TransformParams { brightness: 1.5, ..TransformParams::IDENTITY };
        let a = apply(&s, &p);
        assert_eq!(a.sample.grasps_pos, s.grasps_pos);
        assert_eq!(a.sample.mask, s.mask);
        let px = a.sample.rgb.unwrap();
        assert_eq!(px.get_pixel(20, 10).0, [255, 255, 11]);
    }

    #[test]
    fn translation_shifts_pixels_exactly() {
        let s = scene();
        let p = TransformParams { dx: 2.0, dy: 1.0, ..TransformParams::IDENTITY };
        let a = apply(&s, &p);
        let (src, dst) = (s.rgb.unwrap(), a.sample.rgb.unwrap());
        assert_eq!(dst.get_pixel(7, 4), src.get_pixel(5, 3));
        // edge replicated
        assert_eq!(dst.get_pixel(0, 0), src.get_pixel(0, 0));
        let m = a.sample.mask.unwrap();
        assert!(m.get(7, 4) && !m.get(6, 4));
        assert_eq!(a.sample.id, "s_r0_t2_1_b1");
    }

    #[test]
    fn composited_images_fill_white() {
        let mut s = scene();
        s.provenance = Provenance::MaskComposited;
        let a = apply(&s, &TransformParams { dx: 3.0, ..TransformParams::IDENTITY });
        assert_eq!(a.sample.rgb.unwrap().get_pixel(0, 5).0, [255, 255, 255]);
    }

    #[test]
    fn out_of_frame_flagged_and_kept() {
        let s = scene();
        let a = apply(&s, &TransformParams { dx: 15.0, ..TransformParams::IDENTITY });
        assert_eq!(a.out_of_frame, vec![0]);
        assert_eq!(a.sample.grasps_pos.len(), 1);
    }

    #[test]
    fn default_spec_has_125_combinations() {
        let spec = AugmentSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.combination_count(), 125);
        let bad = AugmentSpec { target_multiplier: 126, ..AugmentSpec::default() };
        assert!(matches!(bad.validate(), Err(Error::InsufficientSpec { available: 125, required: 126 })));
    }

    #[test]
    fn multiplier_one_is_identity_only() {
        let spec = AugmentSpec { target_multiplier: 1, ..AugmentSpec::default() };
        let out = expand(&[scene(), scene()], &spec, 4).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|a| a.sample.id == "s"));
    }

    #[test]
    fn expansion_is_deterministic() {
        let spec = AugmentSpec { target_multiplier: 10, ..AugmentSpec::default() };
        let a = plan_expansion(5, &spec, 11).unwrap();
        assert_eq!(a, plan_expansion(5, &spec, 11).unwrap());
        assert_ne!(a, plan_expansion(5, &spec, 12).unwrap());
        assert!(a.iter().all(|p| p.len() == 10 && p.iter().any(TransformParams::is_identity)));
    }
}
