//! The fixed, ordered 121-slot feature registry.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::schema::{schema_digest, FeatureGroup};

pub const SHAPE_COUNT: usize = 41;
pub const TEXTURE_COUNT: usize = 62;
pub const COLOR_COUNT: usize = 18;
pub const FEATURE_COUNT: usize = SHAPE_COUNT + TEXTURE_COUNT + COLOR_COUNT;

/// Shape slots in extraction order.
pub const SHAPE_NAMES: [&str; SHAPE_COUNT] = [
    "area",
    "perimeter",
    "convex area",
    "convex perimeter",
    "major axis",
    "minor axis",
    "equivalent diameter",
    "eccentricity",
    "elongation",
    "aspect ratio",
    "circularity",
    "roundness",
    "compactness",
    "solidity",
    "extent",
    "shape factor",
    "sphericity",
    "modification ratio",
    "r factor",
    "shape",
    "max feret",
    "min feret",
    "max r",
    "min r",
    "hu1",
    "hu2",
    "hu3",
    "hu4",
    "hu5",
    "hu6",
    "hu7",
    "fd1",
    "fd2",
    "fd3",
    "fd4",
    "fd5",
    "fd6",
    "fd7",
    "fd8",
    "fd9",
    "fd10",
];

/// Per-configuration GLCM properties, in slot order.
pub const GLCM_PROPERTIES: [&str; 5] = ["contrast", "dissimilarity", "homogeneity", "energy", "correlation"];

/// Color channels, in slot order.
pub const COLOR_CHANNELS: [&str; 6] = ["r", "g", "b", "h", "s", "v"];
pub const COLOR_STATS: [&str; 3] = ["mean", "std", "skewness"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub name: String,
    pub group: FeatureGroup,
}

#[derive(Debug)]
pub struct FeatureRegistry {
    entries: Vec<RegistryEntry>,
    names: Vec<String>,
    index: HashMap<String, usize>,
    digest: String,
}

impl FeatureRegistry {
    fn build() -> Self {
        let mut entries: Vec<RegistryEntry> = SHAPE_NAMES
            .iter()
            .map(|n| RegistryEntry {
                name: n.to_string(),
                group: FeatureGroup::Shape,
            })
            .collect();
        let texture = ["skewness".to_string(), "kurtosis".to_string()]
            .into_iter()
            .chain((1..=12).flat_map(|n| GLCM_PROPERTIES.iter().map(move |p| format!("{p}{n}"))));
        entries.extend(texture.map(|name| RegistryEntry {
            name,
            group: FeatureGroup::Texture,
        }));
        let color = COLOR_CHANNELS
            .iter()
            .flat_map(|c| COLOR_STATS.iter().map(move |s| format!("{c} {s}")));
        entries.extend(color.map(|name| RegistryEntry {
            name,
            group: FeatureGroup::Color,
        }));

        let names: Vec<String> = entries.iter().map(|e| e.name.clone()).collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let digest = schema_digest(&names);
        Self {
            entries,
            names,
            index,
            digest,
        }
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn group_of(&self, name: &str) -> Option<FeatureGroup> {
        self.position(name).map(|i| self.entries[i].group)
    }

    pub fn group_count(&self, group: FeatureGroup) -> usize {
        self.entries.iter().filter(|e| e.group == group).count()
    }

    /// Digest of the ordered name list; equals the full schema hash.
    pub fn digest(&self) -> &str {
        &self.digest
    }
}

pub fn registry() -> &'static FeatureRegistry {
    static REGISTRY: OnceLock<FeatureRegistry> = OnceLock::new();
    REGISTRY.get_or_init(FeatureRegistry::build)
}
