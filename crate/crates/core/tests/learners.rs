mod common;

use rbc_core::learners::{fit, Classifier, FittedLearner, KnnParams, LearnerConfig, LearnerKind, LearnerParams};
use rbc_core::Error;

fn train_accuracy(m: &FittedLearner, x: &rbc_core::Matrix, y: &[usize]) -> f64 {
    let p = m.predict(x);
    p.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

#[test]
fn every_kind_learns_separable_blobs() {
    let (x, y) = common::blobs(150, 4, 2.0, 1);
    for kind in LearnerKind::POOL.into_iter().chain([LearnerKind::LogReg]) {
        let m = fit(&LearnerConfig::default_for(kind).with_seed(5), &x, &y).unwrap();
        let acc = train_accuracy(&m, &x, &y);
        assert!(acc >= 0.85, "{kind}: {acc}");
        for p in m.predict_proba(&x) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{kind}: {p:?}");
        }
    }
}

#[test]
fn json_round_trip_predicts_identically() {
    let (x, y) = common::blobs(90, 3, 1.0, 2);
    for kind in LearnerKind::POOL {
        let m = fit(&LearnerConfig::default_for(kind).with_seed(9), &x, &y).unwrap();
        let back: FittedLearner = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back.predict_proba(&x), m.predict_proba(&x), "{kind}");
    }
}

#[test]
fn same_seed_same_model_other_seed_differs() {
    let (x, y) = common::blobs(90, 3, 1.0, 3);
    let a = fit(&LearnerConfig::default_for(LearnerKind::Rf).with_seed(1), &x, &y).unwrap();
    let b = fit(&LearnerConfig::default_for(LearnerKind::Rf).with_seed(1), &x, &y).unwrap();
    let c = fit(&LearnerConfig::default_for(LearnerKind::Rf).with_seed(2), &x, &y).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn stochastic_kinds_need_a_seed() {
    let (x, y) = common::blobs(30, 2, 1.0, 4);
    for kind in LearnerKind::POOL {
        let r = fit(&LearnerConfig::default_for(kind), &x, &y);
        assert_eq!(r.is_err(), kind.is_stochastic(), "{kind}");
    }
}

#[test]
fn scale_sensitive_learners_refuse_raw_features() {
    let (mut x, y) = common::blobs(60, 2, 1.0, 5);
    for i in 0..x.rows() {
        let v = x.get(i, 1);
        x.set(i, 1, 1000.0 + 50.0 * v);
    }
    let err = fit(&LearnerConfig::default_for(LearnerKind::Knn), &x, &y).unwrap_err();
    assert!(matches!(err, Error::Unstandardized { column: 1, .. }), "{err}");
    let relaxed = LearnerConfig::new(LearnerParams::Knn(KnnParams {
        allow_unstandardized: true,
        ..Default::default()
    }));
    assert!(fit(&relaxed, &x, &y).is_ok());
    // trees are scale invariant
    assert!(fit(&LearnerConfig::default_for(LearnerKind::Dt), &x, &y).is_ok());
}

#[test]
fn config_json_uses_kind_tag() {
    let cfg: LearnerConfig = serde_json::from_str(r#"{"kind": "GB", "n_rounds": 7, "learning_rate": 0.2}"#).unwrap();
    assert_eq!(cfg.kind(), LearnerKind::Gb);
    let err = serde_json::from_str::<LearnerConfig>(r#"{"kind": "XGB"}"#);
    assert!(err.is_err());
}
