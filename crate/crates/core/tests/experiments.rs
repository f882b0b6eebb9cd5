mod common;

use std::path::Path;

use rbc_core::ensemble::Combiner;
use rbc_core::experiments::fixtures::{replay_report, FIXTURES};
use rbc_core::experiments::{
    run_group_experiment, run_specialist_experiment, run_validation, ExperimentPlan, Protocol, ReportRow,
    SpecialistConfig, ValidationConfig,
};
use rbc_core::learners::LearnerKind;
use rbc_core::{FeatureGroup, FeatureTable};

fn fast() -> Protocol {
    Protocol::Holdout { test_fraction: 0.25 }
}

#[test]
fn group_grid_has_one_row_per_group_and_learner() {
    let data = common::full_dataset(60, 1);
    let r = run_group_experiment(&data, &LearnerKind::POOL, fast(), &common::cheap_learners(), 1).unwrap();
    assert_eq!(r.rows.len(), 21);
    assert!(r.rows.iter().all(ReportRow::consistent));
    assert_eq!(r.rows[0].n_features, 41);
}

#[test]
fn specialist_report_has_four_rows_without_color_in_pairs() {
    let data = common::full_dataset(60, 2);
    let cfg = SpecialistConfig {
        specialists: Some(vec![LearnerKind::Dt, LearnerKind::Knn, LearnerKind::Dt]),
        protocol: fast(),
        learners: common::cheap_learners(),
        ..Default::default()
    };
    let r = run_specialist_experiment(&data, &cfg).unwrap();
    assert_eq!(r.rows.len(), 4);
    let widths: Vec<usize> = r.rows.iter().map(|r| r.n_features).collect();
    assert_eq!(widths, [121, 121, 103, 103]);
    assert_eq!(r.rows[0].combiner.as_deref(), Some(Combiner::HardVote.name()));
    let bad = SpecialistConfig {
        specialists: Some(vec![LearnerKind::Dt]),
        ..cfg
    };
    assert!(run_specialist_experiment(&data, &bad).is_err());
}

#[test]
fn cross_validation_pools_every_sample_once() {
    let data = common::full_dataset(60, 3);
    let r = run_group_experiment(&data, &[LearnerKind::Dt], Protocol::Cv { n_folds: 5 }, &[], 1).unwrap();
    for row in &r.rows {
        assert_eq!(row.confusion.as_ref().unwrap().total(), 60);
    }
    assert!(r.protocol.contains("5-fold"));
}

#[test]
fn validation_needs_matching_schemas() {
    let train = common::full_dataset(60, 4);
    let valid = common::full_dataset(30, 5);
    let cfg = ValidationConfig {
        learners: common::cheap_learners(),
        ..Default::default()
    };
    let r = run_validation(&train, &valid, &cfg).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert!(r.notes.iter().any(|n| n.contains("standardizer")));
    let shape_only = valid.select_columns(&valid.schema().group_columns(FeatureGroup::Shape)).unwrap();
    assert!(run_validation(&train, &shape_only, &cfg).is_err());
}

fn write_plan(dir: &Path, body: &str) -> ExperimentPlan {
    FeatureTable::from(&common::full_dataset(60, 6)).write_csv(dir.join("train.csv")).unwrap();
    FeatureTable::from(&common::full_dataset(30, 7)).write_csv(dir.join("valid.csv")).unwrap();
    ExperimentPlan::from_json(body).unwrap()
}

#[test]
fn plans_run_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(
        dir.path(),
        r#"{
            "id": "exp1_voting",
            "train": "train.csv",
            "sizes": [6, 7],
            "protocol": {"mode": "holdout", "test_fraction": 0.25},
            "learners": [
                {"kind": "RF", "n_trees": 5}, {"kind": "ET", "n_trees": 5},
                {"kind": "GB", "n_rounds": 5}, {"kind": "MLP", "epochs": 5}, {"kind": "SVM", "epochs": 3}
            ]
        }"#,
    );
    let a = plan.run(dir.path()).unwrap();
    let b = plan.run(dir.path()).unwrap();
    assert_eq!(a.rows.len(), 8);
    assert_eq!(a.id, "exp1_voting");
    assert_eq!(a.deterministic_json().unwrap(), b.deterministic_json().unwrap());
    a.write_all(dir.path().join("out"), "exp1").unwrap();
    for ext in ["md", "csv", "json"] {
        assert!(dir.path().join("out").join(format!("exp1.{ext}")).exists());
    }
}

#[test]
fn plan_validation() {
    assert!(ExperimentPlan::from_json(r#"{"id": "exp1_stacking", "train": "x.csv", "sizes": [1]}"#).is_err());
    assert!(ExperimentPlan::from_json(r#"{"id": "exp5_validation", "train": "x.csv"}"#).is_err());
    assert!(ExperimentPlan::from_json(r#"{"id": "exp9", "train": "x.csv"}"#).is_err());
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), r#"{"id": "exp5_validation", "train": "train.csv", "validation": "valid.csv", "learners": [{"kind": "RF", "n_trees": 5}, {"kind": "ET", "n_trees": 5}, {"kind": "GB", "n_rounds": 5}]}"#);
    assert_eq!(plan.run(dir.path()).unwrap().rows.len(), 3);
}

#[test]
fn fixture_replay_rows_are_consistent() {
    let r = replay_report().unwrap();
    assert_eq!(r.rows.len(), FIXTURES.len());
    assert!(r.rows.iter().all(ReportRow::consistent));
    let md = r.to_markdown();
    assert!(md.contains("89.72%"), "{md}");
}
