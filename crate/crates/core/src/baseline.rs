//! Non-learned grasp predictor from the principal axes of an object mask.

use serde::{Deserialize, Serialize};

use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, GraspPose};
use crate::raster::BinaryMask;

pub const MIN_PIXELS: usize = 10;

/// Eigenvalue contrast below which the mask has no usable orientation.
pub const ISOTROPY_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcaConfig {
    /// Opening as a multiple of the extent along the minor axis.
    pub opening_factor: f64,
    /// Plate size as a multiple of the extent along the major axis.
    pub plate_factor: f64,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self { opening_factor: 1.2, plate_factor: 0.6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineGrasp {
    pub pose: GraspPose,
    /// Second moments were isotropic; `theta` was set to 0.
    pub degenerate: bool,
}

/// Centroid grasp closing along the minor principal axis of the mask.
pub fn pca_baseline(mask: &BinaryMask, config: &PcaConfig) -> Result<BaselineGrasp> {
    let pts: Vec<(f64, f64)> = mask.object_pixels().map(|(x, y)| (x as f64, y as f64)).collect();
    if pts.len() < MIN_PIXELS {
        return Err(Error::EmptyMask(pts.len()));
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in &pts {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (sxx, syy, sxy) = (sxx / n, syy / n, sxy / n);

    let spread = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let degenerate = spread / (sxx + syy) < ISOTROPY_THRESHOLD;
    let phi = if degenerate { 0.0 } else { 0.5 * (2.0 * sxy).atan2(sxx - syy) };

    let (c, s) = (phi.cos(), phi.sin());
    let extent = |f: &dyn Fn(f64, f64) -> f64| {
        let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, y)| {
            let v = f(x - mx, y - my);
            (lo.min(v), hi.max(v))
        });
        hi - lo + 1.0
    };
    let major = extent(&|dx, dy| dx * c + dy * s);
    let minor = extent(&|dx, dy| -dx * s + dy * c);

    let theta = if degenerate { 0.0 } else { normalize_angle(phi.to_degrees() + 90.0) };
    let pose = GraspPose::new(mx, my, theta, config.plate_factor * major, config.opening_factor * minor)?;
    Ok(BaselineGrasp { pose, degenerate })
}

/// Runs [`pca_baseline`] on the sample's mask, reading it from disk if it is
/// not loaded.
pub fn predict_sample(sample: &Sample, config: &PcaConfig) -> Result<BaselineGrasp> {
    match (&sample.mask, &sample.files.mask) {
        (Some(m), _) => pca_baseline(m, config),
        (None, Some(p)) => pca_baseline(&BinaryMask::load(p)?, config),
        (None, None) => Err(Error::MissingMask(sample.id.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bar(angle_deg: f64) -> BinaryMask {
        let (c, s) = (angle_deg.to_radians().cos(), angle_deg.to_radians().sin());
        BinaryMask::from_fn(200, 200, |x, y| {
            let (dx, dy) = (x as f64 - 100.0, y as f64 - 100.0);
            (dx * c + dy * s).abs() < 50.0 && (-dx * s + dy * c).abs() < 10.0
        })
    }

    #[test]
    fn horizontal_bar_closes_vertically() {
        let g = pca_baseline(&bar(0.0), &PcaConfig::default()).unwrap();
        assert!(!g.degenerate);
        assert_eq!(g.pose.theta, -90.0);
        assert!((g.pose.x - 100.0).abs() < 1e-9 && (g.pose.y - 100.0).abs() < 1e-9);
        assert!((g.pose.w - 1.2 * 19.0).abs() < 1e-9);
        assert!((g.pose.h - 0.6 * 99.0).abs() < 1e-9);
    }

    #[test]
    fn rotated_bar_rotates_theta() {
        let g = pca_baseline(&bar(30.0), &PcaConfig::default()).unwrap();
        assert!((g.pose.theta - (-60.0)).abs() < 1.0, "{}", g.pose.theta);
    }

    #[test]
    fn disk_is_degenerate() {
        let m = BinaryMask::from_fn(101, 101, |x, y| {
            let (dx, dy) = (x as f64 - 50.0, y as f64 - 50.0);
            dx * dx + dy * dy <= 900.0
        });
        let g = pca_baseline(&m, &PcaConfig::default()).unwrap();
        assert!(g.degenerate);
        assert_eq!(g.pose.theta, 0.0);
    }

    #[test]
    fn tiny_mask_is_rejected() {
        let m = BinaryMask::from_fn(10, 10, |x, y| x < 3 && y < 3);
        assert!(matches!(pca_baseline(&m, &PcaConfig::default()), Err(Error::EmptyMask(9))));
        let s = Sample::new("a", 4, 4);
        assert!(matches!(predict_sample(&s, &PcaConfig::default()), Err(Error::MissingMask(_))));
    }
}
