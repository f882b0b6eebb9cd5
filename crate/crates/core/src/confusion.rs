//! Confusion matrices with the fixed `(circular, elongated, other)` class order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;

/// `k x k` count matrix; `counts[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 {
            return Err(Error::EmptyData("confusion matrix has no classes".into()));
        }
        if counts.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("confusion matrix must be square".into()));
        }
        Ok(Self { counts })
    }

    /// Convenience constructor for the 3x3 tables printed in reports.
    pub fn from_3x3(rows: [[u64; 3]; 3]) -> Self {
        Self {
            counts: rows.iter().map(|r| r.to_vec()).collect(),
        }
    }

    /// Count `(true, predicted)` pairs of class indices.
    pub fn from_indices(truth: &[usize], predicted: &[usize], k: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Dimension(format!(
                "{} true labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = Self::zeros(k);
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::Dimension(format!("class index out of range for k = {k}")));
            }
            cm.counts[t][p] += 1;
        }
        Ok(cm)
    }

    pub fn from_labels(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Result<Self> {
        let t: Vec<usize> = truth.iter().map(|l| l.index()).collect();
        let p: Vec<usize> = predicted.iter().map(|l| l.index()).collect();
        Self::from_indices(&t, &p, ClassLabel::COUNT)
    }

    /// Element-wise sum, e.g. pooling the test folds of a cross-validation.
    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.k() != self.k() {
            return Err(Error::Dimension(format!("cannot add a {0}x{0} matrix to a {1}x{1} one", other.k(), self.k())));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    /// Per-class true counts.
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Per-class predicted counts.
    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.k())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let k = self.k();
        let counts = (0..k)
            .map(|i| (0..k).map(|j| self.counts[j][i]).collect())
            .collect();
        Self { counts }
    }

    /// Collapse classes into groups; entry `(G, H)` is the block sum.
    ///
    /// `groups` must partition `0..k`: every index exactly once.
    pub fn merge_classes(&self, groups: &[Vec<usize>]) -> Result<Self> {
        let k = self.k();
        let mut owner = vec![None; k];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Partition(format!("group {g} is empty")));
            }
            for &i in members {
                if i >= k {
                    return Err(Error::Partition(format!("class index {i} out of range 0..{k}")));
                }
                if owner[i].replace(g).is_some() {
                    return Err(Error::Partition(format!("class index {i} appears in two groups")));
                }
            }
        }
        if let Some(missing) = owner.iter().position(Option::is_none) {
            return Err(Error::Partition(format!("class index {missing} is in no group")));
        }
        let mut merged = Self::zeros(groups.len());
        for i in 0..k {
            for j in 0..k {
                let (gi, gj) = (owner[i].unwrap(), owner[j].unwrap());
                merged.counts[gi][gj] += self.counts[i][j];
            }
        }
        Ok(merged)
    }

    /// Matrix with classes reordered by `perm` (new index `a` = old `perm[a]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let counts = perm
            .iter()
            .map(|&i| perm.iter().map(|&j| self.counts[i][j]).collect())
            .collect();
        Self { counts }
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |i: usize| {
            ClassLabel::from_index(i)
                .filter(|_| self.k() == ClassLabel::COUNT)
                .map(|l| l.short().to_string())
                .unwrap_or_else(|| i.to_string())
        };
        write!(f, "   ")?;
        for j in 0..self.k() {
            write!(f, " {:>6}", tag(j))?;
        }
        for i in 0..self.k() {
            writeln!(f)?;
            write!(f, "{:>3}", tag(i))?;
            for j in 0..self.k() {
                write!(f, " {:>6}", self.counts[i][j])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_diagonal() {
        let cm = ConfusionMatrix::from_3x3([[10, 0, 0], [0, 10, 0], [0, 0, 10]]);
        let m = cm.merge_classes(&[vec![0], vec![1, 2]]).unwrap();
        assert_eq!(m.counts(), &[vec![10, 0], vec![0, 20]]);
    }

    #[test]
    fn merge_validation_rf() {
        let cm = ConfusionMatrix::from_3x3([[1042, 5, 52], [16, 153, 23], [75, 3, 71]]);
        let m = cm.merge_classes(&[vec![0], vec![1, 2]]).unwrap();
        assert_eq!(m.counts(), &[vec![1042, 57], vec![91, 250]]);
        assert_eq!(m.total(), cm.total());
    }

    #[test]
    fn merge_singletons_is_identity() {
        let cm = ConfusionMatrix::from_3x3([[4, 1, 2], [0, 7, 3], [5, 6, 9]]);
        assert_eq!(cm.merge_classes(&[vec![0], vec![1], vec![2]]).unwrap(), cm);
    }

    #[test]
    fn merge_rejects_bad_partitions() {
        let cm = ConfusionMatrix::zeros(3);
        assert!(matches!(
            cm.merge_classes(&[vec![0, 1], vec![1, 2]]),
            Err(Error::Partition(_))
        ));
        assert!(matches!(cm.merge_classes(&[vec![0], vec![1]]), Err(Error::Partition(_))));
        assert!(matches!(cm.merge_classes(&[vec![0, 1, 2, 3]]), Err(Error::Partition(_))));
    }

    #[test]
    fn from_streams_counts() {
        let t = [0, 0, 1, 2, 2, 2];
        let p = [0, 1, 1, 2, 0, 2];
        let cm = ConfusionMatrix::from_indices(&t, &p, 3).unwrap();
        assert_eq!(cm.total(), 6);
        assert_eq!(cm.get(0, 1), 1);
        assert_eq!(cm.get(2, 2), 2);
        assert_eq!(cm.row_sums(), vec![2, 1, 3]);
    }
}
