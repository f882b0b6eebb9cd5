//! Feature schemas: ordered, named, grouped feature slots and their digest.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Shape,
    Texture,
    Color,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [FeatureGroup::Shape, FeatureGroup::Texture, FeatureGroup::Color];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Shape => "shape",
            FeatureGroup::Texture => "texture",
            FeatureGroup::Color => "color",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "shape" => Ok(FeatureGroup::Shape),
            "texture" | "txt" => Ok(FeatureGroup::Texture),
            "color" | "colour" => Ok(FeatureGroup::Color),
            other => Err(Error::Parse(format!("unknown feature group `{other}`"))),
        }
    }
}

/// Digest of an ordered feature-name list (hex SHA-256 of the names joined by `\n`).
pub fn schema_digest<S: AsRef<str>>(names: &[S]) -> String {
    let mut h = Sha256::new();
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(n.as_ref().as_bytes());
    }
    hex::encode(h.finalize())
}

/// Ordered list of named feature slots.
///
/// Every slot name must come from the registry and slots must keep registry
/// order, so any schema is a (possibly full) sub-sequence of the registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    names: Vec<String>,
    groups: Vec<FeatureGroup>,
    hash: String,
}

impl FeatureSchema {
    /// The full 121-slot registry schema.
    pub fn full() -> Self {
        let reg = registry();
        Self::from_names(reg.names()).expect("registry is a valid schema")
    }

    /// Registry slots belonging to the given groups, in registry order.
    pub fn for_groups(groups: &[FeatureGroup]) -> Self {
        let names: Vec<&str> = registry()
            .entries()
            .iter()
            .filter(|e| groups.contains(&e.group))
            .map(|e| e.name.as_str())
            .collect();
        Self::from_names(&names).expect("registry subsequence is a valid schema")
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let reg = registry();
        let mut last: Option<usize> = None;
        let mut groups = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let pos = reg
                .position(n)
                .ok_or_else(|| Error::UnknownFeature(n.to_string()))?;
            if last.is_some_and(|l| pos <= l) {
                return Err(Error::Schema {
                    expected: "feature columns in registry order without repeats".into(),
                    found: format!("`{n}` out of order"),
                });
            }
            last = Some(pos);
            groups.push(reg.entries()[pos].group);
        }
        Ok(Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            groups,
            hash: schema_digest(names),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Column indices of the slots that belong to `group`.
    pub fn group_columns(&self, group: FeatureGroup) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| **g == group)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn ensure_same(&self, other_hash: &str) -> Result<()> {
        if self.hash != other_hash {
            return Err(Error::Schema {
                expected: self.hash.clone(),
                found: other_hash.to_string(),
            });
        }
        Ok(())
    }
}

/// One cell's feature values tagged with the digest of their schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    schema_hash: String,
}

impl FeatureVector {
    /// Rejects non-finite values and length mismatches.
    pub fn new(values: Vec<f64>, schema: &FeatureSchema) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}-slot schema",
                values.len(),
                schema.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(schema.names()[i].clone()));
        }
        Ok(Self {
            values,
            schema_hash: schema.hash().to_string(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn schema_hash(&self) -> &str {
        &self.schema_hash
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_schema_hash_matches_registry_digest() {
        let s = FeatureSchema::full();
        assert_eq!(s.len(), 121);
        assert_eq!(s.hash(), registry().digest());
    }

    #[test]
    fn group_schema_is_subsequence() {
        let s = FeatureSchema::for_groups(&[FeatureGroup::Shape, FeatureGroup::Texture]);
        assert_eq!(s.len(), 103);
        assert!(s.group_columns(FeatureGroup::Color).is_empty());
        assert_ne!(s.hash(), FeatureSchema::full().hash());
    }

    #[test]
    fn out_of_order_rejected() {
        assert!(FeatureSchema::from_names(&["kurtosis", "skewness"]).is_err());
        assert!(matches!(
            FeatureSchema::from_names(&["wobble"]),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn vector_rejects_nan() {
        let s = FeatureSchema::from_names(&["skewness", "kurtosis"]).unwrap();
        assert!(FeatureVector::new(vec![1.0, f64::NAN], &s).is_err());
        assert!(FeatureVector::new(vec![1.0], &s).is_err());
        assert!(FeatureVector::new(vec![1.0, 2.0], &s).is_ok());
    }
}
