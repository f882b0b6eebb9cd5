//! Synthetic segmented cells for desk-scale runs: discs, elongated ellipses
//! and irregular harmonic blobs, each class with its own texture and tint.

use std::f64::consts::PI;

use image::{GrayImage, Luma, Rgb, RgbImage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{CellSample, Mask};
use crate::label::ClassLabel;
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_cells: usize,
    /// Class shares in canonical order; counts use largest remainder.
    pub proportions: [f64; 3],
    /// Standard deviation of the per-pixel gray noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_cells: 600,
            proportions: [0.5, 0.25, 0.25],
            noise: 5.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn class_counts(&self) -> Result<[usize; 3]> {
        let total: f64 = self.proportions.iter().sum();
        if self.proportions.iter().any(|p| !p.is_finite() || *p < 0.0) || total <= 0.0 {
            return Err(Error::InvalidParam("class proportions must be non-negative with a positive sum".into()));
        }
        let exact: Vec<f64> = self.proportions.iter().map(|p| p / total * self.n_cells as f64).collect();
        let mut counts = [0usize; 3];
        for (c, e) in counts.iter_mut().zip(&exact) {
            *c = e.floor() as usize;
        }
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
        let mut left = self.n_cells - counts.iter().sum::<usize>();
        for &c in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[c] += 1;
            left -= 1;
        }
        Ok(counts)
    }
}

/// Cell outline in polar form.
enum Outline {
    Disc { r: f64, wobble: f64, phase: f64 },
    Ellipse { a: f64, b: f64, angle: f64 },
    Blob { r: f64, harmonics: Vec<(f64, f64, f64)> },
}

impl Outline {
    fn sample(label: ClassLabel, rng: &mut ChaCha8Rng) -> Self {
        match label {
            ClassLabel::Circular => Outline::Disc {
                r: rng.gen_range(22.0..28.0),
                wobble: rng.gen_range(0.0..0.03),
                phase: rng.gen_range(0.0..2.0 * PI),
            },
            ClassLabel::Elongated => {
                let a = rng.gen_range(26.0..34.0);
                let aspect = rng.gen_range(2.0..3.5);
                Outline::Ellipse {
                    a,
                    b: a / aspect,
                    angle: rng.gen_range(0.0..PI),
                }
            }
            ClassLabel::Other => Outline::Blob {
                r: rng.gen_range(19.0..25.0),
                harmonics: (3..=6)
                    .map(|k| (k as f64, rng.gen_range(0.06..0.15), rng.gen_range(0.0..2.0 * PI)))
                    .collect(),
            },
        }
    }

    fn extent(&self) -> f64 {
        match self {
            Outline::Disc { r, wobble, .. } => r * (1.0 + wobble),
            Outline::Ellipse { a, .. } => *a,
            Outline::Blob { r, harmonics } => r * (1.0 + harmonics.iter().map(|h| h.1).sum::<f64>()),
        }
    }

    /// Normalized radial position: below 1 inside the cell.
    fn rho(&self, dx: f64, dy: f64) -> f64 {
        let dist = dx.hypot(dy);
        let phi = dy.atan2(dx);
        match self {
            Outline::Disc { r, wobble, phase } => dist / (r * (1.0 + wobble * (2.0 * phi + phase).cos())),
            Outline::Ellipse { a, b, angle } => {
                let (s, c) = angle.sin_cos();
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                ((u / a).powi(2) + (v / b).powi(2)).sqrt()
            }
            Outline::Blob { r, harmonics } => {
                let scale: f64 = 1.0 + harmonics.iter().map(|(k, amp, ph)| amp * (k * phi + ph).cos()).sum::<f64>();
                dist / (r * scale)
            }
        }
    }
}

const BACKGROUND: u8 = 228;

/// Per-cell appearance drawn once; class effects are partly masked by jitter.
struct Appearance {
    base: f64,
    /// Class-specific texture strength.
    strength: f64,
    period: f64,
    /// Red, green and blue offsets.
    tint: [f64; 3],
}

impl Appearance {
    fn sample(label: ClassLabel, rng: &mut ChaCha8Rng) -> Self {
        let (strength, shift) = match label {
            ClassLabel::Circular => (rng.gen_range(10.0..50.0), [4.0, 0.0, -2.0]),
            ClassLabel::Elongated => (rng.gen_range(0.0..18.0), [0.0, 2.0, 2.0]),
            ClassLabel::Other => (rng.gen_range(0.5..3.0), [-4.0, -2.0, 4.0]),
        };
        let jitter = Normal::new(0.0, 8.0).expect("positive std");
        Self {
            base: rng.gen_range(110.0..140.0),
            strength,
            period: rng.gen_range(5.0..8.0),
            tint: std::array::from_fn(|c| shift[c] + jitter.sample(rng)),
        }
    }

    /// Gray level inside the cell; each class has a distinct texture.
    fn gray(&self, label: ClassLabel, rho: f64, x: f64, y: f64, speckle: f64) -> f64 {
        match label {
            // bright central pallor fading to a darker rim
            ClassLabel::Circular => self.base + self.strength * (-(rho / 0.5).powi(2)).exp(),
            // fine oblique banding
            ClassLabel::Elongated => self.base + self.strength * (2.0 * PI * (x + y) / self.period).sin(),
            // grainy
            ClassLabel::Other => self.base + self.strength * speckle,
        }
    }

    fn rgb(&self, g: f64) -> [f64; 3] {
        [g + 60.0 + self.tint[0], g * 0.55 + self.tint[1], g * 0.65 + self.tint[2]]
    }
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// One synthetic cell drawn from `rng`.
pub fn render_cell(id: impl Into<String>, label: ClassLabel, noise: f64, rng: &mut ChaCha8Rng) -> Result<CellSample> {
    let outline = Outline::sample(label, rng);
    let side = (2.0 * outline.extent()).ceil() as u32 + 10;
    let c = (side as f64 - 1.0) / 2.0 + rng.gen_range(-1.5..1.5);
    let look = Appearance::sample(label, rng);
    let normal = Normal::new(0.0, noise.max(0.0)).map_err(|e| Error::InvalidParam(e.to_string()))?;
    let mut mask = Mask::new(side, side);
    let mut gray = GrayImage::new(side, side);
    let mut rgb = RgbImage::new(side, side);
    for y in 0..side {
        for x in 0..side {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            let rho = outline.rho(dx, dy);
            let n = normal.sample(rng);
            if rho <= 1.0 {
                mask.set(x, y, true);
                let g = look.gray(label, rho, x as f64, y as f64, normal.sample(rng)) + n;
                let [r, gg, b] = look.rgb(g);
                gray.put_pixel(x, y, Luma([to_u8(g)]));
                rgb.put_pixel(x, y, Rgb([to_u8(r), to_u8(gg), to_u8(b)]));
            } else {
                let g = f64::from(BACKGROUND) + n * 0.5;
                gray.put_pixel(x, y, Luma([to_u8(g)]));
                rgb.put_pixel(x, y, Rgb([to_u8(g + 6.0), to_u8(g - 4.0), to_u8(g)]));
            }
        }
    }
    CellSample::new(id, gray, Some(rgb), mask, Some(label))
}

/// `cfg.n_cells` cells, grouped by class in canonical order. Cell `i` uses
/// its own random stream, so any prefix is stable across cell counts per class.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<CellSample>> {
    let counts = cfg.class_counts()?;
    let mut cells = Vec::with_capacity(cfg.n_cells);
    for (label, &n) in ClassLabel::ALL.iter().zip(&counts) {
        for j in 0..n {
            let mut rng = rng_for(cfg.seed, ((label.index() as u64) << 32) | j as u64);
            cells.push(render_cell(format!("{}_{:04}", label.name(), j), *label, cfg.noise, &mut rng)?);
        }
    }
    Ok(cells)
}
