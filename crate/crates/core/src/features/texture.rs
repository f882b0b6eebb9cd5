//! Intensity moments and the GLCM property bank.

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{quantize_gray, Mask};

use super::registry::TEXTURE_COUNT;

/// Default number of gray levels the co-occurrence matrices are built on.
pub const DEFAULT_GLCM_LEVELS: u32 = 32;
const MIN_PAIRS: usize = 4;

/// One co-occurrence offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlcmConfig {
    pub levels: u32,
    pub distance: u32,
    pub angle: u32,
}

impl GlcmConfig {
    pub const ANGLES: [u32; 4] = [0, 45, 90, 135];

    /// The 12 configurations, ordered by index `n = 4(d-1) + angle_rank + 1`.
    pub fn bank(levels: u32) -> Vec<GlcmConfig> {
        (1..=3)
            .flat_map(|distance| {
                Self::ANGLES.iter().map(move |&angle| GlcmConfig {
                    levels,
                    distance,
                    angle,
                })
            })
            .collect()
    }

    pub fn index(&self) -> usize {
        let rank = Self::ANGLES.iter().position(|&a| a == self.angle).unwrap_or(0);
        4 * (self.distance as usize - 1) + rank + 1
    }

    /// Pixel offset `(dx, dy)` with y pointing down, so 90° looks upward.
    pub fn offset(&self) -> (i64, i64) {
        let d = self.distance as i64;
        match self.angle {
            0 => (d, 0),
            45 => (d, -d),
            90 => (0, -d),
            _ => (-d, -d),
        }
    }
}

/// Normalized symmetric co-occurrence matrix over mask-interior pairs.
#[derive(Debug, Clone)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
    pairs: usize,
}

impl Glcm {
    pub fn build(quantized: &[u32], mask: &Mask, cfg: GlcmConfig) -> Result<Glcm> {
        let levels = cfg.levels as usize;
        let (w, h) = (mask.width() as i64, mask.height() as i64);
        let (dx, dy) = cfg.offset();
        let mut counts = vec![0u64; levels * levels];
        let mut pairs = 0usize;
        for (x, y) in mask.foreground() {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if !mask.get_signed(nx, ny) {
                continue;
            }
            let i = quantized[(y as i64 * w + x as i64) as usize] as usize;
            let j = quantized[(ny * w + nx) as usize] as usize;
            counts[i * levels + j] += 1;
            counts[j * levels + i] += 1;
            pairs += 1;
        }
        let _ = h;
        if pairs < MIN_PAIRS {
            return Err(Error::InsufficientTexture {
                config: format!("n={} (d={}, {}°)", cfg.index(), cfg.distance, cfg.angle),
                pairs,
            });
        }
        let total = (2 * pairs) as f64;
        Ok(Glcm {
            levels,
            p: counts.into_iter().map(|c| c as f64 / total).collect(),
            pairs,
        })
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn total_mass(&self) -> f64 {
        self.p.iter().sum()
    }

    /// `[contrast, dissimilarity, homogeneity, energy, correlation]`.
    pub fn properties(&self) -> [f64; 5] {
        let l = self.levels;
        let (mut contrast, mut dissim, mut homog, mut energy) = (0.0, 0.0, 0.0, 0.0);
        let (mut mu_i, mut mu_j) = (0.0, 0.0);
        for i in 0..l {
            for j in 0..l {
                let p = self.p[i * l + j];
                if p == 0.0 {
                    continue;
                }
                let d = i as f64 - j as f64;
                contrast += p * d * d;
                dissim += p * d.abs();
                homog += p / (1.0 + d * d);
                energy += p * p;
                mu_i += p * i as f64;
                mu_j += p * j as f64;
            }
        }
        let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
        for i in 0..l {
            for j in 0..l {
                let p = self.p[i * l + j];
                if p == 0.0 {
                    continue;
                }
                let (di, dj) = (i as f64 - mu_i, j as f64 - mu_j);
                var_i += p * di * di;
                var_j += p * dj * dj;
                cov += p * di * dj;
            }
        }
        let correlation = if var_i < 1e-15 || var_j < 1e-15 {
            0.0
        } else {
            cov / (var_i * var_j).sqrt()
        };
        [contrast, dissim, homog, energy, correlation]
    }
}

/// Population skewness and excess kurtosis; 0 for zero-variance data.
pub fn skew_kurtosis(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 < 1e-12 {
        return (0.0, 0.0);
    }
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Compute the texture slots in registry order.
pub fn extract_texture(gray: &GrayImage, mask: &Mask, levels: u32) -> Result<Vec<f64>> {
    if gray.dimensions() != (mask.width(), mask.height()) {
        return Err(Error::Dimension("texture: pixel and mask sizes differ".into()));
    }
    let interior: Vec<f64> = mask
        .foreground()
        .map(|(x, y)| gray.get_pixel(x, y)[0] as f64)
        .collect();
    if interior.len() < MIN_PAIRS {
        return Err(Error::InsufficientTexture {
            config: "intensity moments".into(),
            pairs: interior.len(),
        });
    }
    let (skew, kurt) = skew_kurtosis(&interior);
    let quantized = quantize_gray(gray, levels)?;
    let mut out = Vec::with_capacity(TEXTURE_COUNT);
    out.push(skew);
    out.push(kurt);
    for cfg in GlcmConfig::bank(levels) {
        out.extend(Glcm::build(&quantized, mask, cfg)?.properties());
    }
    debug_assert_eq!(out.len(), TEXTURE_COUNT);
    Ok(out)
}
