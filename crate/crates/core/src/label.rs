//! Class vocabulary for the sickle-cell morphology task.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Morphology class of a red blood cell.
///
/// The canonical order `(circular, elongated, other)` is used by every
/// confusion matrix, probability vector and report in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    /// Normal discocyte.
    Circular,
    /// Sickle cell.
    Elongated,
    /// Any other deformity.
    Other,
}

impl ClassLabel {
    pub const COUNT: usize = 3;
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Circular, ClassLabel::Elongated, ClassLabel::Other];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Circular => 0,
            ClassLabel::Elongated => 1,
            ClassLabel::Other => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Circular => "circular",
            ClassLabel::Elongated => "elongated",
            ClassLabel::Other => "other",
        }
    }

    /// Single-letter tag used in the confusion-matrix tables.
    pub fn short(self) -> char {
        match self {
            ClassLabel::Circular => 'c',
            ClassLabel::Elongated => 'e',
            ClassLabel::Other => 'o',
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circular" | "c" => Ok(ClassLabel::Circular),
            "elongated" | "e" => Ok(ClassLabel::Elongated),
            "other" | "o" => Ok(ClassLabel::Other),
            _ => Err(Error::InvalidLabel(s.to_string())),
        }
    }
}
