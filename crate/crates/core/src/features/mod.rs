//! Feature registry and per-cell extractors.

mod color;
pub mod registry;
mod shape;
mod texture;

pub use color::{extract_color, rgb_to_hsv};
pub use registry::{registry, FeatureRegistry, RegistryEntry, FEATURE_COUNT};
pub use shape::{extract_shape, hu_moments};
pub use texture::{extract_texture, skew_kurtosis, Glcm, GlcmConfig, DEFAULT_GLCM_LEVELS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::imaging::{extract_geometry, rescale_cell, CellSample, DEFAULT_TARGET_SIDE};
use crate::schema::{FeatureGroup, FeatureSchema, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    /// Side of the square frame cells are rescaled into; `None` keeps the input size.
    pub target_side: Option<u32>,
    pub glcm_levels: u32,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            target_side: Some(DEFAULT_TARGET_SIDE),
            glcm_levels: DEFAULT_GLCM_LEVELS,
        }
    }
}

/// All 121 features of one cell.
pub fn extract_all(cell: &CellSample, cfg: &ExtractionConfig) -> Result<FeatureVector> {
    extract_groups(cell, &FeatureGroup::ALL, cfg)
}

/// Features of the requested groups, in registry order.
///
/// Shape, texture and color are all measured on the largest connected
/// component of the (rescaled) mask.
pub fn extract_groups(
    cell: &CellSample,
    groups: &[FeatureGroup],
    cfg: &ExtractionConfig,
) -> Result<FeatureVector> {
    let wrap = |e: Error| Error::Extraction {
        id: cell.id.clone(),
        source: Box::new(e),
    };
    let scaled;
    let cell = match cfg.target_side {
        Some(side) => {
            scaled = rescale_cell(cell, side).map_err(wrap)?;
            &scaled
        }
        None => cell,
    };
    let geom = extract_geometry(&cell.mask).map_err(wrap)?;
    let schema = FeatureSchema::for_groups(groups);
    let mut values = Vec::with_capacity(schema.len());
    for group in FeatureGroup::ALL {
        if !groups.contains(&group) {
            continue;
        }
        let part = match group {
            FeatureGroup::Shape => extract_shape(&geom),
            FeatureGroup::Texture => extract_texture(&cell.gray, &geom.region, cfg.glcm_levels),
            FeatureGroup::Color => extract_color(&cell.rgb_or_gray(), &geom.region),
        }
        .map_err(wrap)?;
        values.extend(part);
    }
    FeatureVector::new(values, &schema).map_err(wrap)
}

/// Extract many cells in parallel; output order follows input order.
pub fn extract_batch(
    cells: &[CellSample],
    groups: &[FeatureGroup],
    cfg: &ExtractionConfig,
) -> Result<Vec<FeatureVector>> {
    cells
        .par_iter()
        .map(|c| extract_groups(c, groups, cfg))
        .collect()
}

/// Extract labelled cells into a dataset over the requested groups.
pub fn extract_dataset(
    cells: &[CellSample],
    groups: &[FeatureGroup],
    cfg: &ExtractionConfig,
) -> Result<LabeledDataset> {
    let vectors = extract_batch(cells, groups, cfg)?;
    let samples = cells
        .iter()
        .zip(vectors)
        .map(|(c, v)| {
            let label = c
                .label
                .ok_or_else(|| Error::InvalidLabel(format!("<missing> for `{}`", c.id)))?;
            Ok((c.id.clone(), v, label))
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::from_vectors(FeatureSchema::for_groups(groups), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Mask;
    use image::{GrayImage, Luma};

    fn disk_cell(side: u32, r: f64) -> CellSample {
        let c = (side as f64 - 1.0) / 2.0;
        let mask = Mask::from_fn(side, side, |x, y| {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            dx * dx + dy * dy <= r * r
        });
        let gray = GrayImage::from_fn(side, side, |x, y| Luma([(100 + (x * 3 + y * 5) % 60) as u8]));
        CellSample::new("disk", gray, None, mask, None).unwrap()
    }

    #[test]
    fn full_vector_contract() {
        let cell = disk_cell(50, 20.0);
        let v = extract_all(&cell, &ExtractionConfig::default()).unwrap();
        assert_eq!(v.values().len(), 121);
        assert_eq!(v.schema_hash(), registry().digest());
        let again = extract_all(&cell, &ExtractionConfig::default()).unwrap();
        assert_eq!(v, again);
    }

    #[test]
    fn group_subset_matches_full_slices() {
        let cell = disk_cell(50, 20.0);
        let cfg = ExtractionConfig::default();
        let full = extract_all(&cell, &cfg).unwrap();
        let shape = extract_groups(&cell, &[FeatureGroup::Shape], &cfg).unwrap();
        let color = extract_groups(&cell, &[FeatureGroup::Color], &cfg).unwrap();
        assert_eq!(shape.values(), &full.values()[..41]);
        assert_eq!(color.values(), &full.values()[103..]);
    }

    #[test]
    fn errors_carry_cell_id() {
        let mask = Mask::from_fn(20, 20, |_, y| y == 10);
        let cell = CellSample::new("thin", GrayImage::new(20, 20), None, mask, None).unwrap();
        let cfg = ExtractionConfig {
            target_side: None,
            ..Default::default()
        };
        match extract_all(&cell, &cfg) {
            Err(Error::Extraction { id, .. }) => assert_eq!(id, "thin"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn batch_preserves_order() {
        let cells: Vec<_> = [10.0, 15.0, 20.0].iter().map(|&r| disk_cell(50, r)).collect();
        let cfg = ExtractionConfig {
            target_side: None,
            ..Default::default()
        };
        let out = extract_batch(&cells, &[FeatureGroup::Shape], &cfg).unwrap();
        assert!(out[0].values()[0] < out[1].values()[0]);
        assert!(out[1].values()[0] < out[2].values()[0]);
    }
}
