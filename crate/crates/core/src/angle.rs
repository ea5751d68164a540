//! Quantization of grasp angles into classification targets.
//!
//! The range `[-90, 90)` is cut into [`NUM_ANGLE_BINS`] equal half-open bins,
//! numbered `1..=19`. Class `0` is reserved for background, giving
//! [`NUM_CLASSES`] classes in total.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_ANGLE_BINS: usize = 19;
pub const NUM_CLASSES: usize = NUM_ANGLE_BINS + 1;

/// Width of one angle bin in degrees.
pub const BIN_WIDTH: f64 = 180.0 / NUM_ANGLE_BINS as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngleClass(u8);

impl AngleClass {
    pub const BACKGROUND: AngleClass = AngleClass(0);

    pub fn new(index: usize) -> Result<Self> {
        if index < NUM_CLASSES {
            Ok(Self(index as u8))
        } else {
            Err(Error::InvalidClass(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_background(self) -> bool {
        self.0 == 0
    }
}

pub fn angle_to_class(theta: f64) -> Result<AngleClass> {
    if !(-90.0..90.0).contains(&theta) {
        return Err(Error::OutOfRange(theta));
    }
    // (θ + 90) / (180 / 19) written so that bin edges land on exact products
    let bin = ((theta + 90.0) * NUM_ANGLE_BINS as f64 / 180.0).floor() as usize;
    Ok(AngleClass(1 + bin.min(NUM_ANGLE_BINS - 1) as u8))
}

/// Center of the bin for an angle class.
pub fn class_to_angle(c: AngleClass) -> Result<f64> {
    if c.is_background() {
        return Err(Error::BackgroundHasNoAngle);
    }
    let k = c.index() as f64;
    Ok(-90.0 + (2.0 * k - 1.0) * 90.0 / NUM_ANGLE_BINS as f64)
}

/// Applies the credibility rule to a class distribution: some angle class
/// must strictly outscore background. Returns the best angle class when the
/// prediction is credible.
pub fn is_credible(probs: &[f64]) -> Result<Option<AngleClass>> {
    if probs.len() != NUM_CLASSES {
        return Err(Error::NotADistribution(format!(
            "expected {NUM_CLASSES} probabilities, got {}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::NotADistribution(format!("invalid probability {p}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::NotADistribution(format!("probabilities sum to {sum}")));
    }
    let (best, p_best) = probs
        .iter()
        .enumerate()
        .skip(1)
        .fold((1, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
    Ok((p_best > probs[0]).then_some(AngleClass(best as u8)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_formula_examples() {
        assert_eq!(angle_to_class(-90.0).unwrap().index(), 1);
        assert_eq!(angle_to_class(0.0).unwrap().index(), 10);
        assert_eq!(angle_to_class(89.99).unwrap().index(), 19);
        assert!(matches!(angle_to_class(90.0), Err(Error::OutOfRange(_))));
        assert!(matches!(angle_to_class(-90.5), Err(Error::OutOfRange(_))));
        assert!(angle_to_class(f64::NAN).is_err());
    }

    #[test]
    fn bin_centers() {
        assert_eq!(class_to_angle(AngleClass::new(10).unwrap()).unwrap(), 0.0);
        let c1 = class_to_angle(AngleClass::new(1).unwrap()).unwrap();
        assert!((c1 - (-90.0 + 90.0 / 19.0)).abs() < 1e-12);
        assert!((c1 + 85.263).abs() < 1e-3);
        assert!(matches!(
            class_to_angle(AngleClass::BACKGROUND),
            Err(Error::BackgroundHasNoAngle)
        ));
        assert!(AngleClass::new(20).is_err());
    }

    fn one_hot(i: usize) -> Vec<f64> {
        let mut v = vec![0.0; NUM_CLASSES];
        v[i] = 1.0;
        v
    }

    #[test]
    fn credibility_rule() {
        assert_eq!(is_credible(&one_hot(5)).unwrap(), Some(AngleClass(5)));
        assert_eq!(is_credible(&one_hot(0)).unwrap(), None);
        let uniform = vec![1.0 / NUM_CLASSES as f64; NUM_CLASSES];
        assert_eq!(is_credible(&uniform).unwrap(), None);
    }

    #[test]
    fn credibility_rejects_bad_input() {
        assert!(is_credible(&[0.5, 0.5]).is_err());
        let mut v = one_hot(3);
        v[4] = 0.5;
        assert!(matches!(is_credible(&v), Err(Error::NotADistribution(_))));
        let mut neg = one_hot(3);
        neg[3] = 1.5;
        neg[4] = -0.5;
        assert!(is_credible(&neg).is_err());
    }
}
