//! Color statistics over RGB and HSV channels.

use std::f64::consts::TAU;

use image::RgbImage;

use crate::error::{Error, Result};
use crate::imaging::Mask;

use super::registry::COLOR_COUNT;

/// HSV with every component in `[0, 1]`; gray pixels get hue 0.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    } / 6.0;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

/// Mean, population std and skewness (0 when the std vanishes).
fn linear_stats(values: &[f64]) -> [f64; 3] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let deviations: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let [std, skew] = spread(&deviations);
    [mean, std, skew]
}

fn spread(deviations: &[f64]) -> [f64; 2] {
    let n = deviations.len() as f64;
    let m2 = deviations.iter().map(|d| d * d).sum::<f64>() / n;
    let m3 = deviations.iter().map(|d| d * d * d).sum::<f64>() / n;
    let std = m2.sqrt();
    let skew = if m2 < 1e-12 { 0.0 } else { m3 / m2.powf(1.5) };
    [std, skew]
}

/// Circular statistics for hue on the unit circle `[0, 1)`.
///
/// The mean is the angle of the resultant vector (0 if it vanishes);
/// deviations are wrapped into `[-0.5, 0.5)` before taking moments.
fn hue_stats(hues: &[f64]) -> [f64; 3] {
    let (s, c) = hues
        .iter()
        .fold((0.0, 0.0), |(s, c), h| (s + (TAU * h).sin(), c + (TAU * h).cos()));
    let n = hues.len() as f64;
    let mean = if s.hypot(c) / n < 1e-12 {
        0.0
    } else {
        (s.atan2(c) / TAU).rem_euclid(1.0)
    };
    // rem_euclid can round up to exactly 1.0
    let mean = if mean >= 1.0 { 0.0 } else { mean };
    let deviations: Vec<f64> = hues
        .iter()
        .map(|h| (h - mean + 0.5).rem_euclid(1.0) - 0.5)
        .collect();
    let [std, skew] = spread(&deviations);
    [mean, std, skew]
}

/// Compute the color slots in registry order: R, G, B, H, S, V × mean, std, skewness.
pub fn extract_color(rgb: &RgbImage, mask: &Mask) -> Result<Vec<f64>> {
    if rgb.dimensions() != (mask.width(), mask.height()) {
        return Err(Error::Dimension("color: pixel and mask sizes differ".into()));
    }
    let n = mask.count();
    if n == 0 {
        return Err(Error::EmptyRegion("color: mask interior is empty".into()));
    }
    let mut channels: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::with_capacity(n));
    for (x, y) in mask.foreground() {
        let [r, g, b] = rgb.get_pixel(x, y).0;
        let (h, s, v) = rgb_to_hsv(r, g, b);
        for (ch, val) in channels.iter_mut().zip([r as f64, g as f64, b as f64, h, s, v]) {
            ch.push(val);
        }
    }
    let mut out = Vec::with_capacity(COLOR_COUNT);
    for (k, ch) in channels.iter().enumerate() {
        out.extend(if k == 3 { hue_stats(ch) } else { linear_stats(ch) });
    }
    Ok(out)
}
