//! Pre-processing of segmented cells.
//!
//! Cells arrive already cropped, as a grayscale (and optionally RGB) raster
//! plus a binary mask of the same size. This module rescales them to a common
//! frame, extracts region geometry from the mask, quantizes gray levels for
//! co-occurrence statistics and standardizes feature vectors.

mod geometry;
mod standardize;

pub use geometry::{extract_geometry, Point, RegionGeometry};
pub use standardize::Standardizer;

use image::{GrayImage, Luma, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;

/// Default side of the square frame cells are rescaled into.
pub const DEFAULT_TARGET_SIDE: u32 = 72;

/// Binary raster, `true` = cell foreground.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; (width * height) as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[(y * width + x) as usize] = f(x, y);
            }
        }
        m
    }

    /// Any non-zero pixel is foreground.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self::from_fn(img.width(), img.height(), |x, y| img.get_pixel(x, y)[0] > 0)
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            Luma([if self.get(x, y) { 255 } else { 0 }])
        })
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[(y * self.width + x) as usize]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u64) < self.width as u64
            && (y as u64) < self.height as u64
            && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[(y * self.width + x) as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Foreground coordinates in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i as u32 % self.width, i as u32 / self.width))
    }

    /// Clockwise quarter turn: `(x, y) -> (h - 1 - y, x)`.
    pub fn rotate90(&self) -> Mask {
        let h = self.height;
        let mut out = Mask::new(self.height, self.width);
        for (x, y) in self.foreground() {
            out.set(h - 1 - y, x, true);
        }
        out
    }
}

/// A segmented cell: rasters, mask and optional ground-truth label.
#[derive(Debug, Clone)]
pub struct CellSample {
    pub id: String,
    pub gray: GrayImage,
    pub rgb: Option<RgbImage>,
    pub mask: Mask,
    pub label: Option<ClassLabel>,
}

impl CellSample {
    pub fn new(
        id: impl Into<String>,
        gray: GrayImage,
        rgb: Option<RgbImage>,
        mask: Mask,
        label: Option<ClassLabel>,
    ) -> Result<Self> {
        let id = id.into();
        let dims = (mask.width(), mask.height());
        if gray.dimensions() != dims || rgb.as_ref().is_some_and(|c| c.dimensions() != dims) {
            return Err(Error::Dimension(format!(
                "cell `{id}`: mask is {}x{} but pixels are {}x{}",
                dims.0,
                dims.1,
                gray.width(),
                gray.height()
            )));
        }
        if mask.count() == 0 {
            return Err(Error::EmptyRegion(format!("cell `{id}` has an empty mask")));
        }
        Ok(Self {
            id,
            gray,
            rgb,
            mask,
            label,
        })
    }

    /// Color raster, replicating the gray channel when no color image exists.
    pub fn rgb_or_gray(&self) -> RgbImage {
        match &self.rgb {
            Some(c) => c.clone(),
            None => RgbImage::from_fn(self.gray.width(), self.gray.height(), |x, y| {
                let v = self.gray.get_pixel(x, y)[0];
                Rgb([v, v, v])
            }),
        }
    }
}

/// Placement of a uniformly scaled source raster inside a square frame.
struct Placement {
    scale: f64,
    off_x: i64,
    off_y: i64,
    width: i64,
    height: i64,
}

impl Placement {
    fn new(src_w: u32, src_h: u32, target: u32) -> Self {
        let scale = target as f64 / src_w.max(src_h) as f64;
        let width = ((src_w as f64 * scale).round() as i64).clamp(1, target as i64);
        let height = ((src_h as f64 * scale).round() as i64).clamp(1, target as i64);
        Self {
            scale,
            off_x: (target as i64 - width) / 2,
            off_y: (target as i64 - height) / 2,
            width,
            height,
        }
    }

    /// Continuous source coordinate of an output pixel centre, or `None` in the padding.
    fn source(&self, u: u32, v: u32) -> Option<(f64, f64)> {
        let (lu, lv) = (u as i64 - self.off_x, v as i64 - self.off_y);
        if lu < 0 || lv < 0 || lu >= self.width || lv >= self.height {
            return None;
        }
        Some((
            (lu as f64 + 0.5) / self.scale - 0.5,
            (lv as f64 + 0.5) / self.scale - 0.5,
        ))
    }
}

fn nearest(coord: f64, len: u32) -> u32 {
    ((coord + 0.5).floor().max(0.0) as u32).min(len - 1)
}

fn bilinear<const C: usize>(
    sample: impl Fn(u32, u32) -> [u8; C],
    w: u32,
    h: u32,
    sx: f64,
    sy: f64,
) -> [u8; C] {
    let x = sx.clamp(0.0, (w - 1) as f64);
    let y = sy.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as u32, y.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let (p00, p10, p01, p11) = (sample(x0, y0), sample(x1, y0), sample(x0, y1), sample(x1, y1));
    let mut out = [0u8; C];
    for c in 0..C {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Uniformly rescale a cell into a `target_side` square, centred, zero padded.
///
/// The scale factor is `target_side / max(width, height)`, so the aspect
/// ratio is kept. Pixels are resampled bilinearly, the mask by nearest
/// neighbour.
pub fn rescale_cell(cell: &CellSample, target_side: u32) -> Result<CellSample> {
    if target_side < 16 {
        return Err(Error::InvalidParam(format!("target side must be >= 16, got {target_side}")));
    }
    if cell.mask.count() == 0 {
        return Err(Error::EmptyRegion(format!("cell `{}` has an empty mask", cell.id)));
    }
    let (w, h) = (cell.mask.width(), cell.mask.height());
    let place = Placement::new(w, h, target_side);
    let mut mask = Mask::new(target_side, target_side);
    let mut gray = GrayImage::new(target_side, target_side);
    let mut rgb = cell.rgb.as_ref().map(|_| RgbImage::new(target_side, target_side));
    for v in 0..target_side {
        for u in 0..target_side {
            let Some((sx, sy)) = place.source(u, v) else {
                continue;
            };
            mask.set(u, v, cell.mask.get(nearest(sx, w), nearest(sy, h)));
            let g = bilinear(|x, y| cell.gray.get_pixel(x, y).0, w, h, sx, sy);
            gray.put_pixel(u, v, Luma(g));
            if let (Some(out), Some(src)) = (rgb.as_mut(), cell.rgb.as_ref()) {
                out.put_pixel(u, v, Rgb(bilinear(|x, y| src.get_pixel(x, y).0, w, h, sx, sy)));
            }
        }
    }
    if mask.count() == 0 {
        return Err(Error::EmptyRegion(format!(
            "cell `{}` vanished when rescaled to {target_side}px",
            cell.id
        )));
    }
    CellSample::new(cell.id.clone(), gray, rgb, mask, cell.label)
}

/// Uniform binning of `[0, 255]` into `levels` bins.
pub fn quantize_value(value: u8, levels: u32) -> u32 {
    value as u32 * levels / 256
}

/// Representative gray value of a bin.
pub fn bin_center(bin: u32, levels: u32) -> u8 {
    let lo = (bin * 256).div_ceil(levels);
    let hi = ((bin + 1) * 256).div_ceil(levels) - 1;
    ((lo + hi) / 2) as u8
}

/// Map every pixel to its bin index in `0..levels`.
pub fn quantize_gray(img: &GrayImage, levels: u32) -> Result<Vec<u32>> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidParam(format!("levels must be in [2, 256], got {levels}")));
    }
    Ok(img.pixels().map(|p| quantize_value(p[0], levels)).collect())
}
