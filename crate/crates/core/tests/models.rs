mod common;

use rand::Rng;
use rand_distr::StandardNormal;
use rbc_core::ensemble::{Combiner, EnsembleSpec, MemberSpec, Selector};
use rbc_core::learners::{LearnerConfig, LearnerKind};
use rbc_core::model::{ModelSpec, TrainedModel, FORMAT_VERSION};
use rbc_core::rng::rng_for;
use rbc_core::{Error, FeatureGroup, FeatureSchema, Matrix};

fn stacked() -> ModelSpec {
    ModelSpec::Ensemble(EnsembleSpec::new(
        vec![
            MemberSpec::new(LearnerConfig::default_for(LearnerKind::Rf), Selector::Shape),
            MemberSpec::new(LearnerConfig::default_for(LearnerKind::Et), Selector::Texture),
        ],
        Combiner::Stacking,
    ))
}

#[test]
fn save_load_predict_is_bit_identical() {
    let data = common::full_dataset(120, 1);
    let (model, _) = TrainedModel::train(&stacked(), &data, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = TrainedModel::load(&path).unwrap();

    let mut rng = rng_for(99, 0);
    let values: Vec<f64> = (0..1000 * 121).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0).collect();
    let x = Matrix::from_vec(1000, 121, values).unwrap();
    let schema = FeatureSchema::full();
    let (la, pa) = model.predict_matrix(&schema, &x).unwrap();
    let (lb, pb) = loaded.predict_matrix(&schema, &x).unwrap();
    assert_eq!(la, lb);
    assert!(pa.iter().flatten().zip(pb.iter().flatten()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(loaded.to_json().unwrap(), model.to_json().unwrap());
}

#[test]
fn header_records_provenance() {
    let data = common::full_dataset(60, 2);
    let spec = ModelSpec::Single(LearnerConfig::default_for(LearnerKind::Gb));
    let (model, diag) = TrainedModel::train(&spec, &data, 3).unwrap();
    assert!(diag.is_none());
    assert_eq!(model.format_version, FORMAT_VERSION);
    assert_eq!(model.schema_hash, data.schema().hash());
    assert_eq!(model.feature_names.len(), 121);
    assert_eq!(model.seed, 3);
    let v: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();
    for key in ["format_version", "created", "schema_hash", "feature_names", "class_order", "standardizer", "learner_kind", "hyperparameters", "seed", "state"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn wrong_schema_is_a_hard_error() {
    let data = common::full_dataset(60, 3);
    let (model, _) = TrainedModel::train(&ModelSpec::Single(LearnerConfig::default_for(LearnerKind::Dt)), &data, 0).unwrap();
    let shape_only = data.select_columns(&data.schema().group_columns(FeatureGroup::Shape)).unwrap();
    assert!(matches!(model.evaluate(&shape_only), Err(Error::Schema { .. })));
}

#[test]
fn future_format_is_refused() {
    let data = common::full_dataset(30, 4);
    let (model, _) = TrainedModel::train(&ModelSpec::Single(LearnerConfig::default_for(LearnerKind::Dt)), &data, 0).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();
    v["format_version"] = serde_json::json!(FORMAT_VERSION + 1);
    let err = TrainedModel::from_json(&v.to_string()).unwrap_err();
    assert!(matches!(err, Error::FormatVersion { .. }), "{err}");
}

#[test]
fn training_is_insensitive_to_feature_scale() {
    // the stored standardizer absorbs affine rescaling of the raw features
    let data = common::full_dataset(90, 5);
    let scaled = data.with_features(Matrix::from_vec(90, 121, data.features().as_slice().iter().map(|v| 40.0 * v + 300.0).collect()).unwrap()).unwrap();
    let spec = ModelSpec::Single(LearnerConfig::default_for(LearnerKind::Knn));
    let (a, _) = TrainedModel::train(&spec, &data, 0).unwrap();
    let (b, _) = TrainedModel::train(&spec, &scaled, 0).unwrap();
    assert_eq!(a.predict_dataset(&data).unwrap(), b.predict_dataset(&scaled).unwrap());
}
