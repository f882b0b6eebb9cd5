//! CART trees stored as flat node arrays, and the shared growing routine
//! used by decision trees, both forest flavours and gradient boosting.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{validate_range, Classifier, Proba, K};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
const PURE: f64 = 1e-12;

/// One node; `left == 0` marks a leaf (the root is never a child).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Class distribution for classification leaves, `[value]` for regression.
    pub value: Vec<f64>,
    /// Weighted impurity decrease of the split (0 for leaves).
    pub impurity_decrease: f64,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.left == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn leaf(&self, x: &[f64]) -> &Node {
        let mut n = &self.nodes[0];
        while !n.is_leaf() {
            n = if x[n.feature] <= n.threshold {
                &self.nodes[n.left]
            } else {
                &self.nodes[n.right]
            };
        }
        n
    }

    pub fn value(&self, x: &[f64]) -> &[f64] {
        &self.leaf(x).value
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + walk(nodes, n.left).max(walk(nodes, n.right))
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    /// Per-feature sum of impurity decreases (unnormalized).
    pub fn impurity_decreases(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for n in self.nodes.iter().filter(|n| !n.is_leaf()) {
            imp[n.feature] += n.impurity_decrease;
        }
        imp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Splitter {
    /// Exhaustive search over midpoints of sorted distinct values.
    Best,
    /// One uniform threshold per candidate feature.
    Random,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: usize,
    pub splitter: Splitter,
}

/// Node statistics and impurity for one split criterion.
pub(crate) trait Criterion {
    type Stats: Clone;

    fn empty(&self) -> Self::Stats;
    fn push(&self, s: &mut Self::Stats, i: usize);
    fn pop(&self, s: &mut Self::Stats, i: usize);
    fn weight(&self, s: &Self::Stats) -> f64;
    /// Impurity per unit weight.
    fn impurity(&self, s: &Self::Stats) -> f64;
    fn leaf_value(&self, samples: &[usize], s: &Self::Stats) -> Vec<f64>;
}

/// Weighted Gini impurity over class labels.
pub(crate) struct Gini<'a> {
    pub labels: &'a [usize],
    pub class_weight: [f64; K],
}

impl Criterion for Gini<'_> {
    type Stats = [f64; K];

    fn empty(&self) -> Self::Stats {
        [0.0; K]
    }

    fn push(&self, s: &mut Self::Stats, i: usize) {
        let y = self.labels[i];
        s[y] += self.class_weight[y];
    }

    fn pop(&self, s: &mut Self::Stats, i: usize) {
        let y = self.labels[i];
        s[y] -= self.class_weight[y];
    }

    fn weight(&self, s: &Self::Stats) -> f64 {
        s.iter().sum()
    }

    fn impurity(&self, s: &Self::Stats) -> f64 {
        let w = self.weight(s);
        if w <= 0.0 {
            return 0.0;
        }
        1.0 - s.iter().map(|c| (c / w) * (c / w)).sum::<f64>()
    }

    fn leaf_value(&self, _samples: &[usize], s: &Self::Stats) -> Vec<f64> {
        let w = self.weight(s);
        s.iter().map(|c| c / w).collect()
    }
}

/// Squared error on boosting residuals, with the multinomial Newton leaf step.
pub(crate) struct Residual<'a> {
    pub residuals: &'a [f64],
    pub n_classes: usize,
}

impl Criterion for Residual<'_> {
    /// (sum, sum of squares, count)
    type Stats = (f64, f64, f64);

    fn empty(&self) -> Self::Stats {
        (0.0, 0.0, 0.0)
    }

    fn push(&self, s: &mut Self::Stats, i: usize) {
        let r = self.residuals[i];
        s.0 += r;
        s.1 += r * r;
        s.2 += 1.0;
    }

    fn pop(&self, s: &mut Self::Stats, i: usize) {
        let r = self.residuals[i];
        s.0 -= r;
        s.1 -= r * r;
        s.2 -= 1.0;
    }

    fn weight(&self, s: &Self::Stats) -> f64 {
        s.2
    }

    fn impurity(&self, s: &Self::Stats) -> f64 {
        if s.2 <= 0.0 {
            return 0.0;
        }
        let m = s.0 / s.2;
        (s.1 / s.2 - m * m).max(0.0)
    }

    fn leaf_value(&self, samples: &[usize], _s: &Self::Stats) -> Vec<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for &i in samples {
            let r = self.residuals[i];
            num += r;
            den += r.abs() * (1.0 - r.abs());
        }
        let k = self.n_classes as f64;
        let v = if den.abs() < 1e-150 { 0.0 } else { (k - 1.0) / k * num / den };
        vec![v]
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Split {
    fn beats(&self, other: &Option<Split>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.gain > o.gain
                    || (self.gain == o.gain
                        && (self.feature, self.threshold).partial_cmp(&(o.feature, o.threshold))
                            == Some(std::cmp::Ordering::Less))
            }
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Best exhaustive split of `samples` on feature `f`, or `None` if `f` is constant here.
fn best_on_feature<C: Criterion>(
    x: &Matrix,
    crit: &C,
    samples: &[usize],
    f: usize,
    parent: &C::Stats,
    parent_cost: f64,
    min_leaf: usize,
) -> Option<Option<Split>> {
    let mut order: Vec<usize> = samples.to_vec();
    order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
    let first = x.get(order[0], f);
    let last = x.get(order[order.len() - 1], f);
    if first == last {
        return None;
    }
    let mut left = crit.empty();
    let mut right = parent.clone();
    let mut best: Option<Split> = None;
    let m = order.len();
    for pos in 0..m - 1 {
        crit.push(&mut left, order[pos]);
        crit.pop(&mut right, order[pos]);
        let (a, b) = (x.get(order[pos], f), x.get(order[pos + 1], f));
        if a == b || pos + 1 < min_leaf || m - pos - 1 < min_leaf {
            continue;
        }
        let cost = crit.weight(&left) * crit.impurity(&left) + crit.weight(&right) * crit.impurity(&right);
        let cand = Split {
            feature: f,
            threshold: midpoint(a, b),
            gain: parent_cost - cost,
        };
        // thresholds increase along the sweep, so only strictly larger gains win
        if best.as_ref().is_none_or(|b| cand.gain > b.gain) {
            best = Some(cand);
        }
    }
    Some(best)
}

/// Split of `samples` on feature `f` at one uniform random threshold.
fn random_on_feature<C: Criterion>(
    x: &Matrix,
    crit: &C,
    samples: &[usize],
    f: usize,
    parent_cost: f64,
    min_leaf: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Option<Split>> {
    let (lo, hi) = samples
        .iter()
        .map(|&i| x.get(i, f))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return None;
    }
    let threshold = rng.gen_range(lo..hi);
    let (mut left, mut right) = (crit.empty(), crit.empty());
    let mut n_left = 0;
    for &i in samples {
        if x.get(i, f) <= threshold {
            crit.push(&mut left, i);
            n_left += 1;
        } else {
            crit.push(&mut right, i);
        }
    }
    if n_left < min_leaf || samples.len() - n_left < min_leaf {
        return Some(None);
    }
    let cost = crit.weight(&left) * crit.impurity(&left) + crit.weight(&right) * crit.impurity(&right);
    Some(Some(Split {
        feature: f,
        threshold,
        gain: parent_cost - cost,
    }))
}

fn find_split<C: Criterion>(
    x: &Matrix,
    crit: &C,
    samples: &[usize],
    stats: &C::Stats,
    p: &GrowParams,
    rng: &mut ChaCha8Rng,
) -> Option<Split> {
    let d = x.cols();
    let parent_cost = crit.weight(stats) * crit.impurity(stats);
    let features: Vec<usize> = if p.max_features >= d && p.splitter == Splitter::Best {
        (0..d).collect()
    } else {
        let mut f: Vec<usize> = (0..d).collect();
        f.shuffle(rng);
        f
    };
    let mut best: Option<Split> = None;
    let mut visited = 0;
    for f in features {
        if visited >= p.max_features && best.is_some() {
            break;
        }
        let found = match p.splitter {
            Splitter::Best => best_on_feature(x, crit, samples, f, stats, parent_cost, p.min_samples_leaf),
            Splitter::Random => random_on_feature(x, crit, samples, f, parent_cost, p.min_samples_leaf, rng),
        };
        let Some(cand) = found else { continue };
        visited += 1;
        if let Some(c) = cand {
            if c.beats(&best) {
                best = Some(c);
            }
        }
    }
    best
}

/// Grow a tree depth-first (left child first) over `samples`, which may
/// contain repeats (bootstrap draws count once per occurrence).
pub(crate) fn grow<C: Criterion>(
    x: &Matrix,
    crit: &C,
    samples: Vec<usize>,
    p: &GrowParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, samples, depth)
    let mut stack = vec![(0usize, samples, 0usize)];
    nodes.push(placeholder());
    while let Some((slot, samples, depth)) = stack.pop() {
        let mut stats = crit.empty();
        for &i in &samples {
            crit.push(&mut stats, i);
        }
        let can_split = p.max_depth.is_none_or(|m| depth < m)
            && samples.len() >= p.min_samples_split.max(2)
            && samples.len() >= 2 * p.min_samples_leaf
            && crit.impurity(&stats) > PURE;
        let split = if can_split {
            find_split(x, crit, &samples, &stats, p, rng)
        } else {
            None
        };
        let value = crit.leaf_value(&samples, &stats);
        match split {
            None => {
                nodes[slot] = Node {
                    feature: 0,
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                    value,
                    impurity_decrease: 0.0,
                };
            }
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    samples.iter().partition(|&&i| x.get(i, s.feature) <= s.threshold);
                let left = nodes.len();
                nodes.push(placeholder());
                let right = nodes.len();
                nodes.push(placeholder());
                nodes[slot] = Node {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                    value,
                    impurity_decrease: s.gain.max(0.0),
                };
                // right pushed first so the left subtree is grown first
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    Tree {
        nodes,
        n_features: x.cols(),
    }
}

fn placeholder() -> Node {
    Node {
        feature: 0,
        threshold: 0.0,
        left: 0,
        right: 0,
        value: Vec::new(),
        impurity_decrease: 0.0,
    }
}

/// Balanced class weights `n / (present_classes * count_k)`; absent classes get 0.
pub(crate) fn balanced_weights(labels: &[usize]) -> [f64; K] {
    let mut counts = [0usize; K];
    for &y in labels {
        counts[y] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    let n = labels.len() as f64;
    counts.map(|c| if c == 0 { 0.0 } else { n / (present * c as f64) })
}

/// How many features each node may consider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> Result<usize> {
        let n = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().round() as usize,
            MaxFeatures::Log2 => (d as f64).log2().round() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => {
                if n > d {
                    return Err(Error::InvalidParam(format!("max_features {n} exceeds {d} features")));
                }
                n
            }
            MaxFeatures::Fraction(f) => {
                validate_range("max_features fraction", f, 0.0, 1.0, true)?;
                (f * d as f64).round() as usize
            }
        };
        Ok(n.clamp(1, d.max(1)))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    #[default]
    None,
    /// `n / (classes * count_k)`, computed on the training labels.
    Balanced,
}

impl ClassWeight {
    pub(crate) fn weights(self, labels: &[usize]) -> [f64; K] {
        match self {
            ClassWeight::None => [1.0; K],
            ClassWeight::Balanced => balanced_weights(labels),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionTreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub class_weight: ClassWeight,
}

impl Default for DecisionTreeParams {
    fn default() -> Self {
        Self {
            max_depth: Some(12),
            min_samples_split: 2,
            min_samples_leaf: 1,
            class_weight: ClassWeight::None,
        }
    }
}

pub(crate) fn validate_stopping(min_samples_split: usize, min_samples_leaf: usize) -> Result<()> {
    if min_samples_split < 2 {
        return Err(Error::InvalidParam("min_samples_split must be >= 2".into()));
    }
    if min_samples_leaf < 1 {
        return Err(Error::InvalidParam("min_samples_leaf must be >= 1".into()));
    }
    Ok(())
}

/// CART classifier with Gini impurity and exhaustive midpoint thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    tree: Tree,
}

impl DecisionTree {
    pub fn fit(p: &DecisionTreeParams, x: &Matrix, y: &[usize]) -> Result<Self> {
        validate_stopping(p.min_samples_split, p.min_samples_leaf)?;
        let crit = Gini {
            labels: y,
            class_weight: p.class_weight.weights(y),
        };
        let grow_params = GrowParams {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            max_features: x.cols(),
            splitter: Splitter::Best,
        };
        // the exhaustive splitter never draws from the generator
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(Self {
            tree: grow(x, &crit, (0..y.len()).collect(), &grow_params, &mut rng),
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }
}

impl Classifier for DecisionTree {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        leaf_proba(self.tree.value(x))
    }
}

pub(crate) fn leaf_proba(v: &[f64]) -> Proba {
    let mut p = [0.0; K];
    p.copy_from_slice(&v[..K]);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(max_depth: Option<usize>) -> GrowParams {
        GrowParams {
            max_depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: usize::MAX,
            splitter: Splitter::Best,
        }
    }

    fn grow_gini(x: &Matrix, y: &[usize], p: &GrowParams) -> Tree {
        let crit = Gini {
            labels: y,
            class_weight: [1.0; K],
        };
        grow(x, &crit, (0..y.len()).collect(), p, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn threshold_midpoint() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [1.0], [3.0]]).unwrap();
        let t = grow_gini(&x, &[0, 0, 1, 1], &params(None));
        assert_eq!(t.n_splits(), 1);
        assert_eq!(t.nodes()[0].threshold, 0.0);
        assert_eq!(t.value(&[-0.5]), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn xor_needs_zero_gain_root() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0, 1, 1, 0];
        let t = grow_gini(&x, &y, &params(Some(2)));
        for i in 0..4 {
            let v = t.value(x.row(i));
            assert_eq!(v[y[i]], 1.0);
        }
        // equal gains on both features: the lower index wins
        assert_eq!(t.nodes()[0].feature, 0);
    }

    #[test]
    fn pure_input_is_single_leaf() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let t = grow_gini(&x, &[2, 2, 2], &params(None));
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.value(&[0.0]), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn depth_limit() {
        let x = Matrix::from_rows(&(0..16).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<usize> = (0..16).map(|i| i % 3).collect();
        assert!(grow_gini(&x, &y, &params(Some(2))).depth() <= 2);
    }

    #[test]
    fn balanced() {
        let w = balanced_weights(&[0, 0, 0, 1]);
        assert_eq!(w, [4.0 / 6.0, 2.0, 0.0]);
    }
}
