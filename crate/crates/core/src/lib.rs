//! Grasp-detection building blocks: grasp rectangle geometry, angle
//! classification targets, dataset loading and splitting, mask-based image
//! preprocessing, augmentation, proposal matching and losses, and the
//! rectangle-metric evaluation.
//!
//! Image coordinates have `x` to the right and `y` down. Grasp angles are in
//! degrees in `[-90, 90)` and give the direction of the gripper closing axis.

pub mod anchors;
pub mod angle;
pub mod augment;
pub mod baseline;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod gradcheck;
pub mod loss;
pub mod mask;
pub mod raster;
pub mod rng;
pub mod synthetic;
pub mod toy_head;

pub use anchors::{generate_anchors, match_proposals, Anchor, AnchorGrid, ProposalLabel};
pub use angle::{angle_to_class, class_to_angle, is_credible, AngleClass};
pub use augment::{AugmentSpec, TransformParams};
pub use dataset::{LoadReport, Sample, SplitMode, SplitSpec};
pub use error::{Error, Result};
pub use eval::{evaluate, is_correct, EvalReport, MetricConfig};
pub use geometry::{
    angle_difference, jaccard, jaccard_with, normalize_angle, AxisBox, GraspAngled, GraspPose,
    GraspQuad, JaccardMode, Point,
};
pub use loss::{loss_gpn, loss_gr, loss_total, LossConfig, RegressionLoss};
pub use mask::{composite, to_rgd, MaskedImage, Provenance};
pub use raster::{BinaryMask, DepthMap};
pub use rng::SplitMix64;
