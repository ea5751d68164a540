use graspbench::GraspQuad;
use image::{Rgb, RgbImage};
use imageproc::drawing::draw_line_segment_mut;

pub const GT_COLOR: Rgb<u8> = Rgb([30, 90, 255]);
pub const CORRECT_COLOR: Rgb<u8> = Rgb([0, 200, 0]);
pub const WRONG_COLOR: Rgb<u8> = Rgb([230, 0, 0]);

const DASH: f32 = 6.0;
const GAP: f32 = 4.0;

fn edges(q: &GraspQuad) -> impl Iterator<Item = ((f32, f32), (f32, f32))> + '_ {
    (0..4).map(move |i| {
        let (a, b) = (q.vertices[i], q.vertices[(i + 1) % 4]);
        ((a.x as f32, a.y as f32), (b.x as f32, b.y as f32))
    })
}

/// Two-pixel outline; plate edges are drawn a second time offset inward so
/// they read heavier than the opening edges.
pub fn solid_quad(img: &mut RgbImage, q: &GraspQuad, color: Rgb<u8>) {
    for (k, (a, b)) in edges(q).enumerate() {
        draw_line_segment_mut(img, a, b, color);
        draw_line_segment_mut(img, (a.0 + 1.0, a.1), (b.0 + 1.0, b.1), color);
        if k % 2 == 0 {
            draw_line_segment_mut(img, (a.0, a.1 + 1.0), (b.0, b.1 + 1.0), color);
        }
    }
}

pub fn dashed_quad(img: &mut RgbImage, q: &GraspQuad, color: Rgb<u8>) {
    for (a, b) in edges(q) {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len = (dx * dx + dy * dy).sqrt();
        if len == 0.0 {
            continue;
        }
        let (ux, uy) = (dx / len, dy / len);
        let mut t = 0.0;
        while t < len {
            let end = (t + DASH).min(len);
            draw_line_segment_mut(img, (a.0 + ux * t, a.1 + uy * t), (a.0 + ux * end, a.1 + uy * end), color);
            t = end + GAP;
        }
    }
}
