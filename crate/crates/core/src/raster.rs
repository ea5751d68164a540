//! Single-channel rasters that travel with a sample: binary object masks and
//! depth maps.

use std::io::{Read, Write};
use std::path::Path;

use image::{DynamicImage, GrayImage, Luma};

use crate::error::{Error, Result};

/// Grayscale values at or above this level mark object pixels.
pub const MASK_THRESHOLD: u8 = 128;

/// Magic bytes of the raw float depth format.
pub const DEPTH_MAGIC: &[u8; 8] = b"GBDEPTH1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { width, height, data }
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Self::from_fn(img.width(), img.height(), |x, y| {
            img.get_pixel(x, y)[0] >= MASK_THRESHOLD
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::image(path, e))?;
        Ok(Self::from_gray(&img.to_luma8()))
    }

    /// Writes the mask as an 8-bit PNG with object pixels at 255.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_gray().save(path).map_err(|e| Error::image(path, e))
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            Luma([if self.get(x, y) { 255 } else { 0 }])
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[(y * self.width + x) as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    /// Coordinates `(x, y)` of every object pixel in row-major order.
    pub fn object_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i as u32 % self.width, i as u32 / self.width))
    }
}

/// Per-pixel depth; non-finite values mark holes.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::ShapeMismatch(format!(
                "depth buffer has {} values for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f32) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[(y * self.width + x) as usize]
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    /// Minimum and maximum over finite values, if any.
    pub fn finite_range(&self) -> Option<(f32, f32)> {
        self.data
            .iter()
            .filter(|v| v.is_finite())
            .fold(None, |acc, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }

    /// Loads a depth map. Files starting with [`DEPTH_MAGIC`] use the raw float
    /// layout (magic, `u32` LE width, `u32` LE height, then `f32` LE values in
    /// row-major order); anything else is decoded as a grayscale image whose
    /// raw sample values become depths (16-bit PNG/TIFF keep full precision).
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(DEPTH_MAGIC) {
            return Self::decode_raw(&bytes).map_err(|msg| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: msg,
            });
        }
        let img = image::load_from_memory(&bytes).map_err(|e| Error::image(path, e))?;
        let (w, h) = (img.width(), img.height());
        let data: Vec<f32> = match img {
            DynamicImage::ImageLuma16(g) => g.into_raw().into_iter().map(f32::from).collect(),
            DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(f32::from).collect(),
            DynamicImage::ImageRgb32F(g) => g.pixels().map(|p| p[0]).collect(),
            DynamicImage::ImageRgba32F(g) => g.pixels().map(|p| p[0]).collect(),
            other => other.to_luma16().into_raw().into_iter().map(f32::from).collect(),
        };
        Self::new(w, h, data)
    }

    fn decode_raw(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = &bytes[DEPTH_MAGIC.len()..];
        let mut word = [0u8; 4];
        let mut read_u32 = |r: &mut &[u8]| -> std::result::Result<u32, String> {
            r.read_exact(&mut word).map_err(|e| e.to_string())?;
            Ok(u32::from_le_bytes(word))
        };
        let w = read_u32(&mut r)?;
        let h = read_u32(&mut r)?;
        let n = w as usize * h as usize;
        if r.len() != n * 4 {
            return Err(format!("expected {} bytes of depth data, found {}", n * 4, r.len()));
        }
        let data = r
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { width: w, height: h, data })
    }

    /// Writes the raw float layout described in [`DepthMap::load`].
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + self.data.len() * 4);
        buf.extend_from_slice(DEPTH_MAGIC);
        buf.extend_from_slice(&self.width.to_le_bytes());
        buf.extend_from_slice(&self.height.to_le_bytes());
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_threshold_and_png_roundtrip() {
        let g = GrayImage::from_fn(4, 3, |x, _| Luma([(x * 64) as u8]));
        let m = BinaryMask::from_gray(&g);
        // 0, 64, 128, 192
        assert_eq!(m.count(), 2 * 3);
        assert!(!m.get(1, 0));
        assert!(m.get(2, 0));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        m.save(&p).unwrap();
        assert_eq!(BinaryMask::load(&p).unwrap(), m);
    }

    #[test]
    fn depth_raw_roundtrip_keeps_holes() {
        let d = DepthMap::from_fn(5, 2, |x, y| if x == 3 { f32::NAN } else { (x + 10 * y) as f32 });
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.gbd");
        d.save(&p).unwrap();
        let back = DepthMap::load(&p).unwrap();
        assert_eq!(back.width(), 5);
        assert!(back.get(3, 1).is_nan());
        assert_eq!(back.get(4, 1), 14.0);
        assert_eq!(back.finite_range(), Some((0.0, 14.0)));
    }

    #[test]
    fn depth_from_16bit_png() {
        let img = image::ImageBuffer::<Luma<u16>, _>::from_fn(3, 2, |x, _| Luma([1000 + x as u16]));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        img.save(&p).unwrap();
        let d = DepthMap::load(&p).unwrap();
        assert_eq!(d.get(2, 1), 1002.0);
    }
}
