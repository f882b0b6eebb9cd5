//! Feature importance (mean decrease in impurity and permutation) and the
//! select-and-retrain loop over specialist ensembles.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confusion::ConfusionMatrix;
use crate::dataset::LabeledDataset;
use crate::ensemble::{EnsembleSpec, FittedMember, Selector};
use crate::error::{Error, Result};
use crate::experiments::report::{ExperimentReport, ReportRow};
use crate::learners::tree::Tree;
use crate::learners::{argmax, Classifier, K};
use crate::matrix::Matrix;
use crate::metrics::MetricId;
use crate::model::{ModelSpec, TrainedModel};
use crate::rng::{derive_seed, rng_for};
use crate::schema::FeatureGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    Mdi,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: ImportanceMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    /// Slot names in schema order.
    pub names: Vec<String>,
    /// One score per name: a share summing to 1 for MDI, a metric drop for permutation.
    pub scores: Vec<f64>,
    /// Names by descending score; ties keep schema order.
    pub ranking: Vec<String>,
}

impl ImportanceReport {
    fn new(method: ImportanceMethod, names: Vec<String>, scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let ranking = order.iter().map(|&i| names[i].clone()).collect();
        Self {
            method,
            metric: None,
            repeats: None,
            names,
            scores,
            ranking,
        }
    }

    pub fn score(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.scores[i])
    }

    pub fn top(&self, k: usize) -> &[String] {
        &self.ranking[..k.min(self.ranking.len())]
    }

    /// `rank,name,score` lines.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "name", "score"])?;
        for (r, name) in self.ranking.iter().enumerate() {
            let s = self.score(name).unwrap_or_default();
            w.write_record([(r + 1).to_string(), name.clone(), s.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
        true
    } else {
        false
    }
}

/// Mean of per-tree normalized impurity decreases, normalized again.
/// `None` when no tree has a split.
pub fn mdi_from_trees(trees: &[&Tree], n_features: usize) -> Option<Vec<f64>> {
    let mut acc = vec![0.0; n_features];
    for t in trees {
        let mut imp = t.impurity_decreases();
        if normalize(&mut imp) {
            acc.iter_mut().zip(&imp).for_each(|(a, v)| *a += v);
        }
    }
    normalize(&mut acc).then_some(acc)
}

/// MDI of one member mapped onto the full schema; `None` for non-tree members.
fn member_mdi(m: &FittedMember, width: usize) -> Option<Vec<f64>> {
    let trees = m.model.trees()?;
    mdi_from_trees(&trees, m.columns.len()).map(|local| {
        let mut full = vec![0.0; width];
        for (&c, v) in m.columns.iter().zip(local) {
            full[c] = v;
        }
        full
    })
}

/// Mean decrease in impurity summed over the tree-based members of `model`.
pub fn mdi_importance(model: &TrainedModel) -> Result<ImportanceReport> {
    let width = model.feature_names.len();
    let mut total = vec![0.0; width];
    let mut any = false;
    for m in model.state.members() {
        if let Some(s) = member_mdi(m, width) {
            total.iter_mut().zip(&s).for_each(|(a, v)| *a += v);
            any = true;
        }
    }
    if !any || !normalize(&mut total) {
        return Err(Error::UnsupportedModel(format!(
            "MDI needs a tree-based learner with at least one split (model is {})",
            model.learner_kind
        )));
    }
    Ok(ImportanceReport::new(ImportanceMethod::Mdi, model.feature_names.clone(), total))
}

/// Permutation importance of any classifier over rows `x` with labels `y`.
///
/// Column `j`, repeat `r` is shuffled with the stream `(derive_seed(seed, j), r)`,
/// so scores do not depend on thread count.
pub fn permutation_scores<F>(
    predict: F,
    x: &Matrix,
    y: &[usize],
    metric: MetricId,
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: Fn(&Matrix) -> Vec<usize> + Sync,
{
    if repeats == 0 {
        return Err(Error::InvalidParam("repeats must be >= 1".into()));
    }
    if x.rows() == 0 {
        return Err(Error::EmptyData("no evaluation samples".into()));
    }
    let score = |pred: &[usize]| -> Result<f64> { metric.compute(&ConfusionMatrix::from_indices(y, pred, K)?) };
    let baseline = score(&predict(x))?;
    (0..x.cols())
        .into_par_iter()
        .map(|j| {
            let col = x.column(j);
            let mut drop = 0.0;
            for r in 0..repeats {
                let mut perm = col.clone();
                perm.shuffle(&mut rng_for(derive_seed(seed, j as u64), r as u64));
                let mut xp = x.clone();
                for (i, v) in perm.into_iter().enumerate() {
                    xp.set(i, j, v);
                }
                drop += baseline - score(&predict(&xp))?;
            }
            Ok(drop / repeats as f64)
        })
        .collect()
}

/// Permutation importance of a trained model on raw (unstandardized) data.
pub fn permutation_importance(
    model: &TrainedModel,
    eval: &LabeledDataset,
    metric: MetricId,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    let schema = eval.schema().clone();
    let predict = |x: &Matrix| -> Vec<usize> {
        model
            .predict_matrix(&schema, x)
            .map(|(labels, _)| labels.iter().map(|l| l.index()).collect())
            .unwrap_or_default()
    };
    if eval.is_empty() {
        return Err(Error::EmptyData("no evaluation samples".into()));
    }
    // surface schema errors before the parallel loop swallows them
    model.predict_matrix(&schema, &eval.features().select_rows(&[0]))?;
    let scores = permutation_scores(predict, eval.features(), &eval.label_indices(), metric, repeats, seed)?;
    let mut r = ImportanceReport::new(ImportanceMethod::Permutation, model.feature_names.clone(), scores);
    r.metric = Some(metric);
    r.repeats = Some(repeats);
    Ok(r)
}

/// How many slots to keep per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Smallest top-ranked set whose importance reaches this share of the
    /// group's total; 1.0 or more keeps every slot.
    CumulativeMass(f64),
    /// Top `k` slots of each listed group; unlisted groups keep every slot.
    TopK(BTreeMap<FeatureGroup, usize>),
}

impl Default for SelectionRule {
    fn default() -> Self {
        SelectionRule::CumulativeMass(0.95)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub rule: SelectionRule,
    /// Remove every color slot before retraining.
    pub drop_color: bool,
    /// Score non-tree members by permutation on the training data.
    pub permutation_fallback: bool,
    pub permutation_repeats: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            rule: SelectionRule::default(),
            drop_color: false,
            permutation_fallback: true,
            permutation_repeats: 5,
        }
    }
}

/// Indices (into `cols`) chosen by `rule` from `scores`.
fn select_group(cols: &[usize], scores: &[f64], group: FeatureGroup, rule: &SelectionRule) -> Vec<usize> {
    let mut order: Vec<usize> = cols.to_vec();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let keep = match rule {
        SelectionRule::CumulativeMass(t) if *t >= 1.0 => cols.len(),
        SelectionRule::CumulativeMass(t) => {
            let total: f64 = cols.iter().map(|&c| scores[c]).sum();
            let mut acc = 0.0;
            let mut n = 0;
            for &c in &order {
                if total <= 0.0 || acc >= t * total {
                    break;
                }
                acc += scores[c];
                n += 1;
            }
            n
        }
        SelectionRule::TopK(k) => k.get(&group).copied().unwrap_or(cols.len()),
    };
    let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
    kept.sort_unstable();
    kept
}

pub struct SelectionOutcome {
    /// Model retrained on the selected slots.
    pub model: TrainedModel,
    /// Model on the original selectors, used for the importance scores.
    pub full_model: TrainedModel,
    /// Importance over the full schema that drove the selection.
    pub importance: ImportanceReport,
    /// Retained slots read by at least one member, in schema order.
    pub selected: Vec<String>,
    /// Full-feature and reduced-feature rows side by side.
    pub report: ExperimentReport,
}

/// Fit `spec`, score features per group from its fitted members, keep the
/// slots chosen by `cfg.rule`, refit the members on their reduced slices and
/// evaluate both models on `test`.
pub fn select_and_retrain(
    spec: &EnsembleSpec,
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<SelectionOutcome> {
    let schema = train.schema().clone();
    let width = schema.len();
    let (full_model, _) = TrainedModel::train(&ModelSpec::Ensemble(spec.clone()), train, seed)?;

    let z = full_model.standardizer.apply_dataset(train)?;
    let y = z.label_indices();
    let mut scores = vec![0.0; width];
    for (i, m) in full_model.state.members().iter().enumerate() {
        let member_scores = match member_mdi(m, width) {
            Some(s) => s,
            None if cfg.permutation_fallback => {
                let xs = z.features().select_columns(&m.columns);
                let local = permutation_scores(
                    |x| (0..x.rows()).map(|r| argmax(&m.model.predict_proba_row(x.row(r)))).collect(),
                    &xs,
                    &y,
                    MetricId::Accuracy,
                    cfg.permutation_repeats,
                    derive_seed(seed, 3000 + i as u64),
                )?;
                let mut full = vec![0.0; width];
                for (&c, v) in m.columns.iter().zip(local) {
                    full[c] = v.max(0.0);
                }
                normalize(&mut full);
                full
            }
            None => {
                return Err(Error::UnsupportedModel(format!(
                    "member {i} ({}) has no impurity importance and permutation fallback is off",
                    m.kind
                )))
            }
        };
        scores.iter_mut().zip(&member_scores).for_each(|(a, v)| *a += v);
    }

    let mut keep = vec![false; width];
    for g in FeatureGroup::ALL {
        if cfg.drop_color && g == FeatureGroup::Color {
            continue;
        }
        for c in select_group(&schema.group_columns(g), &scores, g, &cfg.rule) {
            keep[c] = true;
        }
    }
    let mut used = vec![false; width];
    for m in full_model.state.members() {
        m.columns.iter().for_each(|&c| used[c] = true);
    }
    let selected: Vec<String> = (0..width)
        .filter(|&c| keep[c] && used[c])
        .map(|c| schema.names()[c].clone())
        .collect();

    let mut reduced = spec.clone();
    for (i, (member, fitted)) in reduced.members.iter_mut().zip(full_model.state.members()).enumerate() {
        let names: Vec<String> = fitted
            .columns
            .iter()
            .filter(|&&c| keep[c])
            .map(|&c| schema.names()[c].clone())
            .collect();
        if names.is_empty() {
            return Err(Error::EmptySelection { member: i });
        }
        member.group = Selector::Names(names);
    }
    let (model, _) = TrainedModel::train(&ModelSpec::Ensemble(reduced), train, seed)?;

    normalize(&mut scores);
    let method = if full_model.state.members().iter().all(|m| m.model.trees().is_some()) {
        ImportanceMethod::Mdi
    } else {
        ImportanceMethod::Permutation
    };
    let importance = ImportanceReport::new(method, schema.names().to_vec(), scores);

    let mut report = ExperimentReport::new("exp4", "Feature selection and retraining", "holdout", seed);
    let n_full = distinct_columns(&full_model);
    let n_reduced = distinct_columns(&model);
    let label = spec.label();
    report.rows.push(
        ReportRow::from_result(format!("{label} (all features)"), n_full, full_model.evaluate(test).map(|(cm, _)| cm))
            .with_combiner(spec.combiner.name()),
    );
    report.rows.push(
        ReportRow::from_result(format!("{label} (selected features)"), n_reduced, model.evaluate(test).map(|(cm, _)| cm))
            .with_combiner(spec.combiner.name()),
    );
    Ok(SelectionOutcome {
        model,
        full_model,
        importance,
        selected,
        report,
    })
}

/// Number of schema slots read by at least one member.
pub fn distinct_columns(model: &TrainedModel) -> usize {
    let mut seen = vec![false; model.feature_names.len()];
    for m in model.state.members() {
        for &c in &m.columns {
            seen[c] = true;
        }
    }
    seen.iter().filter(|&&s| s).count()
}
