mod common;

use rbc_core::ensemble::{fit_ensemble, Combiner, EnsembleSpec, FittedEnsemble, MemberSpec, Selector};
use rbc_core::learners::{Classifier, LearnerConfig, LearnerKind};
use rbc_core::Error;

fn member(kind: LearnerKind, selector: Selector) -> MemberSpec {
    MemberSpec::new(LearnerConfig::default_for(kind), selector)
}

#[test]
fn weighted_hard_vote_follows_dominant_member() {
    let data = common::full_dataset(90, 1);
    let mut spec = EnsembleSpec::new(
        vec![member(LearnerKind::Dt, Selector::Shape), member(LearnerKind::Knn, Selector::Texture)],
        Combiner::HardVote,
    );
    spec.weights = Some(vec![5.0, 1.0]);
    let (model, diag) = fit_ensemble(&spec, &data, 2).unwrap();
    assert!(diag.is_none());
    let FittedEnsemble::Voting(v) = &model else { panic!("expected voting") };
    assert!((v.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let first = &model.members()[0];
    for i in 0..data.len() {
        let row = data.features().row(i);
        assert_eq!(model.predict_row(row), first.model.predict_row(&first.columns.iter().map(|&c| row[c]).collect::<Vec<_>>()));
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let data = common::full_dataset(30, 2);
    let two = vec![member(LearnerKind::Dt, Selector::All), member(LearnerKind::Dt, Selector::All)];
    let mut spec = EnsembleSpec::new(two.clone(), Combiner::SoftVote);
    spec.weights = Some(vec![1.0, -1.0]);
    assert!(matches!(fit_ensemble(&spec, &data, 0), Err(Error::InvalidParam(_))));
    spec.weights = Some(vec![1.0]);
    assert!(fit_ensemble(&spec, &data, 0).is_err());

    let mut spec = EnsembleSpec::new(vec![member(LearnerKind::Dt, Selector::All)], Combiner::HardVote);
    spec.replication = true;
    assert!(fit_ensemble(&spec, &data, 0).is_err());

    let spec = EnsembleSpec::new(vec![member(LearnerKind::Dt, Selector::Names(vec![]))], Combiner::HardVote);
    assert!(matches!(fit_ensemble(&spec, &data, 0), Err(Error::EmptySelection { member: 0 })));

    let spec = EnsembleSpec::new(vec![member(LearnerKind::Dt, Selector::Names(vec!["nope".into()]))], Combiner::HardVote);
    assert!(fit_ensemble(&spec, &data, 0).is_err());
}

#[test]
fn member_failure_names_the_member() {
    let data = common::full_dataset(30, 3);
    let mut bad = LearnerConfig::default_for(LearnerKind::Gb);
    if let rbc_core::learners::LearnerParams::Gb(p) = &mut bad.params {
        p.learning_rate = -1.0;
    }
    let spec = EnsembleSpec::new(
        vec![member(LearnerKind::Dt, Selector::All), MemberSpec::new(bad, Selector::All)],
        Combiner::Stacking,
    );
    let err = fit_ensemble(&spec, &data, 0).unwrap_err();
    assert!(matches!(err, Error::Member { index: 1, .. }), "{err}");
}

#[test]
fn stacking_is_reproducible() {
    let data = common::full_dataset(90, 4);
    let spec = EnsembleSpec::new(
        vec![member(LearnerKind::Rf, Selector::Shape), member(LearnerKind::Et, Selector::Texture)],
        Combiner::Stacking,
    );
    let (a, da) = fit_ensemble(&spec, &data, 8).unwrap();
    let (b, db) = fit_ensemble(&spec, &data, 8).unwrap();
    assert_eq!(a, b);
    assert_eq!(da, db);
}
