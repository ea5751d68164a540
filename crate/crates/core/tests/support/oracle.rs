//! Independent reference computations for tests. Nothing here calls into the
//! library's geometry code.

#![allow(dead_code)]

/// Corners of a grasp rectangle `[x, y, theta, h, w]` built from first
/// principles: `w` along the closing direction, `h` across it.
pub fn rect_corners(g: [f64; 5]) -> [(f64, f64); 4] {
    let [x, y, theta, h, w] = g;
    let t = theta.to_radians();
    let (ux, uy) = (t.cos() * w / 2.0, t.sin() * w / 2.0);
    let (vx, vy) = (-t.sin() * h / 2.0, t.cos() * h / 2.0);
    [
        (x - ux - vx, y - uy - vy),
        (x - ux + vx, y - uy + vy),
        (x + ux + vx, y + uy + vy),
        (x + ux - vx, y + uy - vy),
    ]
}

/// Horizontal extent of a convex polygon on the line at height `y`.
fn row_span(poly: &[(f64, f64)], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (y0, y1) = (a.1.min(b.1), a.1.max(b.1));
        if y < y0 || y > y1 || y0 == y1 {
            continue;
        }
        let x = a.0 + (y - a.1) / (b.1 - a.1) * (b.0 - a.0);
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo <= hi).then_some((lo, hi))
}

/// Grid points `(j + 0.5) * step` inside `[lo, hi]`.
fn points_in(lo: f64, hi: f64, step: f64) -> i64 {
    let first = (lo / step - 0.5).ceil() as i64;
    let last = (hi / step - 0.5).floor() as i64;
    (last - first + 1).max(0)
}

/// Areas of `a`, `b` and `a ∩ b` estimated by counting the centers of a
/// square grid with spacing `step` that fall inside each region.
pub fn raster_areas(a: &[(f64, f64)], b: &[(f64, f64)], step: f64) -> (f64, f64, f64) {
    let all = a.iter().chain(b);
    let y_lo = all.clone().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_hi = all.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut na, mut nb, mut ni) = (0_i64, 0_i64, 0_i64);
    let mut row = (y_lo / step - 0.5).ceil() as i64;
    loop {
        let y = (row as f64 + 0.5) * step;
        if y > y_hi {
            break;
        }
        let sa = row_span(a, y);
        let sb = row_span(b, y);
        if let Some((l, h)) = sa {
            na += points_in(l, h, step);
        }
        if let Some((l, h)) = sb {
            nb += points_in(l, h, step);
        }
        if let (Some(p), Some(q)) = (sa, sb) {
            ni += points_in(p.0.max(q.0), p.1.min(q.1), step);
        }
        row += 1;
    }
    let cell = step * step;
    (na as f64 * cell, nb as f64 * cell, ni as f64 * cell)
}

/// Rasterized intersection over union of two grasp rectangles.
pub fn raster_jaccard(a: [f64; 5], b: [f64; 5], step: f64) -> f64 {
    let (na, nb, ni) = raster_areas(&rect_corners(a), &rect_corners(b), step);
    let union = na + nb - ni;
    if union == 0.0 {
        0.0
    } else {
        ni / union
    }
}

/// Rasterized IoU of two axis-aligned boxes `(x_min, y_min, x_max, y_max)`.
pub fn raster_box_iou(a: [f64; 4], b: [f64; 4], step: f64) -> f64 {
    let corners = |r: [f64; 4]| [(r[0], r[1]), (r[0], r[3]), (r[2], r[3]), (r[2], r[1])];
    let (na, nb, ni) = raster_areas(&corners(a), &corners(b), step);
    ni / (na + nb - ni)
}

/// Softmax cross-entropy straight from the definition.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let z: f64 = logits.iter().map(|l| l.exp()).sum();
    -(logits[target].exp() / z).ln()
}
