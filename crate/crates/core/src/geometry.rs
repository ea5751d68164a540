//! Grasp rectangle representations and rotated-rectangle overlap.
//!
//! Three interchangeable forms are supported:
//!
//! * [`GraspPose`] — center, closing-axis angle, plate size `h` and opening `w`.
//! * [`GraspQuad`] — four ordered image-plane vertices. Edge `v1→v2` is a plate
//!   edge (length `h`) and edge `v2→v3` spans the opening (length `w`).
//! * [`GraspAngled`] — the angle plus the de-rotated axis-aligned box.
//!
//! Angles are in degrees, measured in image coordinates (x right, y down) and
//! normalized to the half-open range `[-90, 90)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when validating annotated rectangles.
pub const RECTANGLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Maps any angle in degrees onto `[-90, 90)` using 180° periodicity.
pub fn normalize_angle(deg: f64) -> f64 {
    if (-90.0..90.0).contains(&deg) {
        return deg;
    }
    let r = (deg + 90.0).rem_euclid(180.0) - 90.0;
    // rem_euclid can round up to exactly 180 for tiny negative inputs
    if r >= 90.0 {
        r - 180.0
    } else {
        r
    }
}

/// Smallest absolute difference between two grasp angles modulo 180°.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Five-dimensional grasp `{x, y, θ, h, w}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    pub x: f64,
    pub y: f64,
    /// Closing-axis angle in degrees, `[-90, 90)`.
    pub theta: f64,
    /// Plate size.
    pub h: f64,
    /// Gripper opening.
    pub w: f64,
}

impl GraspPose {
    /// Builds a pose, normalizing `theta` and rejecting non-positive or
    /// non-finite sizes.
    pub fn new(x: f64, y: f64, theta: f64, h: f64, w: f64) -> Result<Self> {
        if ![x, y, theta, h, w].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrasp(format!(
                "non-finite field in {{x:{x}, y:{y}, theta:{theta}, h:{h}, w:{w}}}"
            )));
        }
        if h <= 0.0 || w <= 0.0 {
            return Err(Error::InvalidGrasp(format!(
                "sizes must be positive, got h={h} w={w}"
            )));
        }
        Ok(Self {
            x,
            y,
            theta: normalize_angle(theta),
            h,
            w,
        })
    }

    /// `[x, y, theta, h, w]`, the canonical array form.
    pub fn to_array(&self) -> [f64; 5] {
        [self.x, self.y, self.theta, self.h, self.w]
    }

    pub fn from_array(a: [f64; 5]) -> Result<Self> {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn center(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn area(&self) -> f64 {
        self.h * self.w
    }

    /// Unit vector along the closing axis.
    pub fn closing_axis(&self) -> Point {
        let t = self.theta.to_radians();
        Point::new(t.cos(), t.sin())
    }

    pub fn to_quad(&self) -> GraspQuad {
        pose_to_quad(self)
    }

    pub fn to_angled(&self) -> GraspAngled {
        pose_to_angled(self)
    }
}

/// Four ordered vertices of a grasp rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspQuad {
    pub vertices: [Point; 4],
}

impl GraspQuad {
    pub fn new(vertices: [Point; 4]) -> Self {
        Self { vertices }
    }

    pub fn from_coords(c: [(f64, f64); 4]) -> Self {
        Self::new(c.map(|(x, y)| Point::new(x, y)))
    }

    pub fn is_finite(&self) -> bool {
        self.vertices.iter().all(|p| p.is_finite())
    }

    fn edges(&self) -> [Point; 4] {
        let v = &self.vertices;
        [v[1].sub(v[0]), v[2].sub(v[1]), v[3].sub(v[2]), v[0].sub(v[3])]
    }

    /// Checks that opposite edges have equal length and adjacent edges are
    /// orthogonal, both within `rel_tol`.
    pub fn validate(&self, rel_tol: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonRectangle("non-finite vertex".into()));
        }
        let e = self.edges();
        let len = e.map(Point::norm);
        if len.contains(&0.0) {
            return Err(Error::NonRectangle("zero-length edge".into()));
        }
        for (a, b) in [(0, 2), (1, 3)] {
            if (len[a] - len[b]).abs() > rel_tol * len[a].max(len[b]) {
                return Err(Error::NonRectangle(format!(
                    "opposite edges differ: {} vs {}",
                    len[a], len[b]
                )));
            }
        }
        for i in 0..4 {
            let j = (i + 1) % 4;
            let cos = e[i].dot(e[j]) / (len[i] * len[j]);
            if cos.abs() > rel_tol {
                return Err(Error::NonRectangle(format!(
                    "edges {} and {} not orthogonal (cos = {cos:e})",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }

    pub fn is_rectangle(&self) -> bool {
        self.validate(RECTANGLE_TOLERANCE).is_ok()
    }

    /// Least-squares style pose fit that tolerates imperfect annotations:
    /// opposite edges are averaged instead of trusting a single one. Agrees
    /// with [`quad_to_pose`] on exact rectangles.
    pub fn fit_pose(&self) -> Result<GraspPose> {
        if !self.is_finite() {
            return Err(Error::NonRectangle("non-finite vertex".into()));
        }
        let v = &self.vertices;
        let c = centroid(v);
        let open_a = v[2].sub(v[1]);
        let open_b = v[3].sub(v[0]);
        let dir = Point::new(open_a.x + open_b.x, open_a.y + open_b.y);
        let w = 0.5 * (open_a.norm() + open_b.norm());
        let h = 0.5 * (v[1].sub(v[0]).norm() + v[2].sub(v[3]).norm());
        GraspPose::new(c.x, c.y, dir.y.atan2(dir.x).to_degrees(), h, w)
    }

    /// Signed shoelace area (positive when counter-clockwise in a y-up frame).
    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bounding_box(&self) -> AxisBox {
        let xs = self.vertices.map(|p| p.x);
        let ys = self.vertices.map(|p| p.y);
        AxisBox {
            x_min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            y_min: ys.iter().copied().fold(f64::INFINITY, f64::min),
            x_max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            y_max: ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn centroid(v: &[Point; 4]) -> Point {
    Point::new(
        (v[0].x + v[1].x + v[2].x + v[3].x) / 4.0,
        (v[0].y + v[1].y + v[2].y + v[3].y) / 4.0,
    )
}

/// Angle plus the horizontal box obtained by de-rotating the grasp so that
/// its closing axis lies along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspAngled {
    pub theta: f64,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl GraspAngled {
    pub fn axis_box(&self) -> AxisBox {
        AxisBox {
            x_min: self.x_min,
            y_min: self.y_min,
            x_max: self.x_max,
            y_max: self.y_max,
        }
    }
}

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl AxisBox {
    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        Self {
            x_min: cx - width / 2.0,
            y_min: cy - height / 2.0,
            x_max: cx + width / 2.0,
            y_max: cy + height / 2.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn intersection_area(&self, o: &AxisBox) -> f64 {
        let w = self.x_max.min(o.x_max) - self.x_min.max(o.x_min);
        let h = self.y_max.min(o.y_max) - self.y_min.max(o.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersection over union; zero when either box is empty.
    pub fn iou(&self, o: &AxisBox) -> f64 {
        let inter = self.intersection_area(o);
        let union = self.area() + o.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Converts a rectangle to a pose. Center is the vertex mean, the `v2→v3`
/// edge fixes the closing axis and the opening `w`, and `v1→v2` gives `h`.
pub fn quad_to_pose(q: &GraspQuad) -> Result<GraspPose> {
    q.validate(RECTANGLE_TOLERANCE)?;
    let v = &q.vertices;
    let c = centroid(v);
    let open = v[2].sub(v[1]);
    let theta = open.y.atan2(open.x).to_degrees();
    GraspPose::new(c.x, c.y, theta, v[1].sub(v[0]).norm(), open.norm())
}

pub fn pose_to_quad(p: &GraspPose) -> GraspQuad {
    let u = p.closing_axis();
    let v = Point::new(-u.y, u.x);
    let (hw, hh) = (p.w / 2.0, p.h / 2.0);
    let at = |su: f64, sv: f64| {
        Point::new(
            p.x + su * hw * u.x + sv * hh * v.x,
            p.y + su * hw * u.y + sv * hh * v.y,
        )
    };
    GraspQuad::new([at(-1.0, -1.0), at(-1.0, 1.0), at(1.0, 1.0), at(1.0, -1.0)])
}

pub fn pose_to_angled(p: &GraspPose) -> GraspAngled {
    GraspAngled {
        theta: p.theta,
        x_min: p.x - p.w / 2.0,
        y_min: p.y - p.h / 2.0,
        x_max: p.x + p.w / 2.0,
        y_max: p.y + p.h / 2.0,
    }
}

pub fn angled_to_pose(a: &GraspAngled) -> Result<GraspPose> {
    if !(a.x_min < a.x_max && a.y_min < a.y_max) {
        return Err(Error::DegenerateBox(format!(
            "[{}, {}] x [{}, {}]",
            a.x_min, a.x_max, a.y_min, a.y_max
        )));
    }
    GraspPose::new(
        (a.x_min + a.x_max) / 2.0,
        (a.y_min + a.y_max) / 2.0,
        a.theta,
        a.y_max - a.y_min,
        a.x_max - a.x_min,
    )
}

pub fn polygon_signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum();
    twice / 2.0
}

/// Keeps the part of `poly` on the left of the directed line `a→b`.
fn clip_half_plane(poly: &[Point], a: Point, b: Point) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    let edge = b.sub(a);
    let side = |p: Point| edge.cross(p.sub(a));
    for i in 0..n {
        let s = poly[i];
        let e = poly[(i + 1) % n];
        let (ds, de) = (side(s), side(e));
        let (s_in, e_in) = (ds >= 0.0, de >= 0.0);
        if s_in != e_in {
            let t = ds / (ds - de);
            out.push(Point::new(s.x + (e.x - s.x) * t, s.y + (e.y - s.y) * t));
        }
        if e_in {
            out.push(e);
        }
    }
    out
}

/// Intersection polygon of two convex polygons (Sutherland–Hodgman).
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let mut clip = clip.to_vec();
    if polygon_signed_area(&clip) < 0.0 {
        clip.reverse();
    }
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        out = clip_half_plane(&out, clip[i], clip[(i + 1) % clip.len()]);
        if out.len() < 3 {
            return Vec::new();
        }
    }
    out
}

/// Area of `a ∩ b` for two rectangles; zero when they are disjoint.
pub fn convex_intersection_area(a: &GraspQuad, b: &GraspQuad) -> f64 {
    polygon_signed_area(&clip_convex(&a.vertices, &b.vertices)).abs()
}

/// How rectangles are compared by [`jaccard_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JaccardMode {
    /// True rotated-polygon overlap.
    #[default]
    Rotated,
    /// Overlap of the axis-aligned bounding boxes of the rotated rectangles.
    AxisAligned,
}

impl std::str::FromStr for JaccardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotated" => Ok(Self::Rotated),
            "axis_aligned" | "axis-aligned" => Ok(Self::AxisAligned),
            other => Err(Error::InvalidArgument(format!("unknown jaccard mode `{other}`"))),
        }
    }
}

/// Jaccard index (intersection over union) of two grasp rectangles.
pub fn jaccard(pred: &GraspPose, truth: &GraspPose) -> f64 {
    jaccard_with(pred, truth, JaccardMode::Rotated)
}

pub fn jaccard_with(pred: &GraspPose, truth: &GraspPose, mode: JaccardMode) -> f64 {
    let (qa, qb) = (pred.to_quad(), truth.to_quad());
    match mode {
        JaccardMode::Rotated => {
            let inter = convex_intersection_area(&qa, &qb);
            let union = pred.area() + truth.area() - inter;
            (inter / union).clamp(0.0, 1.0)
        }
        JaccardMode::AxisAligned => qa.bounding_box().iou(&qb.bounding_box()),
    }
}

/// Rotation about a center followed by a translation, in image coordinates.
///
/// A positive angle turns +x toward +y, which matches how grasp angles are
/// measured, so a pose's angle simply shifts by `rotation_deg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation_deg: f64,
    pub center: Point,
    pub translation: Point,
}

impl RigidTransform {
    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let d = p.sub(self.center);
        Point::new(
            self.center.x + c * d.x - s * d.y + self.translation.x,
            self.center.y + s * d.x + c * d.y + self.translation.y,
        )
    }

    /// Preimage of `p`.
    pub fn invert(&self, p: Point) -> Point {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let d = Point::new(
            p.x - self.translation.x - self.center.x,
            p.y - self.translation.y - self.center.y,
        );
        Point::new(
            self.center.x + c * d.x + s * d.y,
            self.center.y - s * d.x + c * d.y,
        )
    }

    pub fn apply_pose(&self, p: &GraspPose) -> GraspPose {
        let c = self.apply(p.center());
        GraspPose {
            x: c.x,
            y: c.y,
            theta: normalize_angle(p.theta + self.rotation_deg),
            h: p.h,
            w: p.w,
        }
    }

    pub fn apply_quad(&self, q: &GraspQuad) -> GraspQuad {
        GraspQuad::new(q.vertices.map(|v| self.apply(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pose(x: f64, y: f64, t: f64, h: f64, w: f64) -> GraspPose {
        GraspPose::new(x, y, t, h, w).unwrap()
    }

    #[test]
    fn normalize_half_open_range() {
        assert_eq!(normalize_angle(90.0), -90.0);
        assert_eq!(normalize_angle(-90.0), -90.0);
        assert_eq!(normalize_angle(135.0), -45.0);
        assert_eq!(normalize_angle(-1e-20), -1e-20);
        assert_eq!(normalize_angle(-180.0), 0.0);
        assert!(normalize_angle(89.999) < 90.0);
    }

    #[test]
    fn angle_difference_is_periodic() {
        assert_eq!(angle_difference(10.0, 10.0 + 180.0 * 3.0), 0.0);
        assert_eq!(angle_difference(-75.0, 75.0), 30.0);
        assert_eq!(angle_difference(30.0, 0.0), 30.0);
    }

    #[test]
    fn quad_to_pose_axis_aligned() {
        let q = GraspQuad::from_coords([(0.0, 0.0), (0.0, 10.0), (4.0, 10.0), (4.0, 0.0)]);
        let p = quad_to_pose(&q).unwrap();
        assert_eq!(p, pose(2.0, 5.0, 0.0, 10.0, 4.0));
    }

    #[test]
    fn quad_to_pose_vertical_closing_axis_normalizes() {
        let q = GraspQuad::from_coords([(0.0, 0.0), (10.0, 0.0), (10.0, 4.0), (0.0, 4.0)]);
        let p = quad_to_pose(&q).unwrap();
        assert_eq!(p.theta, -90.0);
        assert_eq!((p.x, p.y, p.h, p.w), (5.0, 2.0, 10.0, 4.0));
    }

    #[test]
    fn pose_to_quad_inverse_example() {
        let q = pose(2.0, 5.0, 0.0, 10.0, 4.0).to_quad();
        let expected = [(0.0, 0.0), (0.0, 10.0), (4.0, 10.0), (4.0, 0.0)];
        for (v, (x, y)) in q.vertices.iter().zip(expected) {
            assert_abs_diff_eq!(v.x, x, epsilon = 1e-12);
            assert_abs_diff_eq!(v.y, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_square_at_origin() {
        let q = pose(0.0, 0.0, 0.0, 2.0, 2.0).to_quad();
        for v in q.vertices {
            assert_eq!(v.x.abs(), 1.0);
            assert_eq!(v.y.abs(), 1.0);
        }
        assert_eq!(q.area(), 4.0);
    }

    #[test]
    fn non_rectangle_rejected() {
        let q = GraspQuad::from_coords([(0.0, 0.0), (0.0, 10.0), (5.0, 10.0), (4.0, 0.0)]);
        assert!(matches!(quad_to_pose(&q), Err(Error::NonRectangle(_))));
        let z = GraspQuad::from_coords([(0.0, 0.0), (0.0, 0.0), (4.0, 10.0), (4.0, 0.0)]);
        assert!(matches!(quad_to_pose(&z), Err(Error::NonRectangle(_))));
    }

    #[test]
    fn fit_pose_tolerates_annotation_noise() {
        let q = GraspQuad::from_coords([(0.0, 0.0), (0.01, 10.0), (4.0, 10.02), (4.0, 0.0)]);
        assert!(!q.is_rectangle());
        let p = q.fit_pose().unwrap();
        assert_abs_diff_eq!(p.w, 4.0, epsilon = 0.02);
        assert_abs_diff_eq!(p.h, 10.0, epsilon = 0.02);
        assert_abs_diff_eq!(p.theta, 0.0, epsilon = 0.5);
    }

    #[test]
    fn angled_form_examples() {
        let a = pose(5.0, 2.0, 30.0, 4.0, 10.0).to_angled();
        assert_eq!(
            a,
            GraspAngled { theta: 30.0, x_min: 0.0, y_min: 0.0, x_max: 10.0, y_max: 4.0 }
        );
        let b = pose(0.0, 0.0, -90.0, 1.0, 1.0).to_angled();
        assert_eq!(
            b,
            GraspAngled { theta: -90.0, x_min: -0.5, y_min: -0.5, x_max: 0.5, y_max: 0.5 }
        );
        let bad = GraspAngled { theta: 0.0, x_min: 1.0, y_min: 0.0, x_max: 1.0, y_max: 2.0 };
        assert!(matches!(angled_to_pose(&bad), Err(Error::DegenerateBox(_))));
    }

    #[test]
    fn intersection_examples() {
        let sq = |x0: f64, x1: f64| {
            GraspQuad::from_coords([(x0, 0.0), (x0, 10.0), (x1, 10.0), (x1, 0.0)])
        };
        assert_abs_diff_eq!(convex_intersection_area(&sq(0.0, 10.0), &sq(0.0, 10.0)), 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(convex_intersection_area(&sq(0.0, 10.0), &sq(5.0, 15.0)), 50.0, epsilon = 1e-9);
        assert_eq!(convex_intersection_area(&sq(0.0, 10.0), &sq(20.0, 30.0)), 0.0);
    }

    #[test]
    fn jaccard_examples() {
        let g = pose(3.0, 4.0, 17.0, 12.0, 5.0);
        assert_abs_diff_eq!(jaccard(&g, &g), 1.0, epsilon = 1e-12);
        let a = pose(5.0, 5.0, 0.0, 10.0, 10.0);
        let b = pose(10.0, 5.0, 0.0, 10.0, 10.0);
        assert_abs_diff_eq!(jaccard(&a, &b), 1.0 / 3.0, epsilon = 1e-12);
        let far = pose(100.0, 5.0, 0.0, 10.0, 10.0);
        assert_eq!(jaccard(&a, &far), 0.0);
    }

    #[test]
    fn axis_aligned_mode_uses_bounding_boxes() {
        let a = pose(0.0, 0.0, 45.0, 2.0, 2.0);
        let b = pose(0.0, 0.0, 0.0, 2.0, 2.0);
        assert!(jaccard_with(&a, &b, JaccardMode::Rotated) < 0.9);
        // bounding box of a contains b entirely: IoU = 4 / 8
        assert_abs_diff_eq!(jaccard_with(&a, &b, JaccardMode::AxisAligned), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn rigid_transform_quarter_turn() {
        let t = RigidTransform {
            rotation_deg: 90.0,
            center: Point::new(0.0, 0.0),
            translation: Point::new(0.0, 0.0),
        };
        let p = t.apply_pose(&pose(10.0, 0.0, 0.0, 3.0, 6.0));
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 10.0, epsilon = 1e-12);
        assert_eq!(p.theta, -90.0);
        let back = t.invert(t.apply(Point::new(3.0, -7.0)));
        assert_abs_diff_eq!(back.x, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back.y, -7.0, epsilon = 1e-12);
    }
}
