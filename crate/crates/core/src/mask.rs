//! Background removal by mask compositing, and RGD images (blue channel
//! replaced by normalized depth).

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, DepthMap};

pub const WHITE: Rgb<u8> = Rgb([255, 255, 255]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Original,
    MaskComposited,
    Rgd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedImage {
    pub rgb: RgbImage,
    pub provenance: Provenance,
}

fn check_dims(what: &str, rgb: &RgbImage, w: u32, h: u32) -> Result<()> {
    if rgb.dimensions() != (w, h) {
        return Err(Error::ShapeMismatch(format!(
            "image is {}x{}, {what} is {w}x{h}",
            rgb.width(),
            rgb.height()
        )));
    }
    Ok(())
}

/// Keeps object pixels and paints everything else pure white.
pub fn composite(rgb: &RgbImage, mask: &BinaryMask) -> Result<MaskedImage> {
    check_dims("mask", rgb, mask.width(), mask.height())?;
    let mut out = rgb.clone();
    let width = rgb.width() as usize;
    out.par_chunks_mut(width * 3).enumerate().for_each(|(y, row)| {
        for (x, px) in row.chunks_exact_mut(3).enumerate() {
            if !mask.get(x as u32, y as u32) {
                px.copy_from_slice(&WHITE.0);
            }
        }
    });
    Ok(MaskedImage {
        rgb: out,
        provenance: Provenance::MaskComposited,
    })
}

/// Maps a depth to a byte: `round_half_up(255 * clamp((d - lo) / (hi - lo), 0, 1))`,
/// with non-finite depths mapped to 0.
pub fn depth_to_byte(d: f32, d_min: f64, d_max: f64) -> u8 {
    if !d.is_finite() {
        return 0;
    }
    let t = ((d as f64 - d_min) / (d_max - d_min)).clamp(0.0, 1.0);
    (255.0 * t + 0.5).floor() as u8
}

/// Replaces the blue channel with normalized depth; red and green are kept.
pub fn to_rgd(rgb: &RgbImage, depth: &DepthMap, d_min: f64, d_max: f64) -> Result<MaskedImage> {
    check_dims("depth", rgb, depth.width(), depth.height())?;
    if !d_min.is_finite() || !d_max.is_finite() || d_min >= d_max {
        return Err(Error::BadRange { d_min, d_max });
    }
    let mut out = rgb.clone();
    for (x, y, px) in out.enumerate_pixels_mut() {
        px[2] = depth_to_byte(depth.get(x, y), d_min, d_max);
    }
    Ok(MaskedImage {
        rgb: out,
        provenance: Provenance::Rgd,
    })
}

/// Per-image normalization range over finite depth values.
pub fn depth_range(depth: &DepthMap) -> Result<(f64, f64)> {
    match depth.finite_range() {
        Some((lo, hi)) if lo < hi => Ok((lo as f64, hi as f64)),
        Some((lo, hi)) => Err(Error::BadRange { d_min: lo as f64, d_max: hi as f64 }),
        None => Err(Error::BadRange { d_min: f64::NAN, d_max: f64::NAN }),
    }
}
