#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use rbc_core::learners::{BoostingParams, ForestParams, LearnerConfig, LearnerParams, MlpParams, SvmParams};
use rbc_core::rng::rng_for;
use rbc_core::{ClassLabel, FeatureSchema, LabeledDataset, Matrix};

/// Gaussian blobs: class `c` is shifted by `sep * c` on the first two columns.
pub fn blobs(n: usize, d: usize, sep: f64, seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = rng_for(seed, 0);
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 3;
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            let shift = match j {
                0 => sep * c as f64,
                1 => sep * (c == 2) as u8 as f64,
                _ => 0.0,
            };
            data.push(0.5 * z + shift);
        }
        y.push(c);
    }
    (Matrix::from_vec(n, d, data).unwrap(), y)
}

/// A full-schema dataset whose columns are roughly standardized and where
/// the class is visible in every feature group.
pub fn full_dataset(n: usize, seed: u64) -> LabeledDataset {
    let schema = FeatureSchema::full();
    let d = schema.len();
    let mut rng = rng_for(seed, 1);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 3;
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            let signal = if j % 7 == 0 { 0.8 * (c as f64 - 1.0) } else { 0.0 };
            data.push(0.8 * z + signal);
        }
        labels.push(ClassLabel::from_index(c).unwrap());
    }
    let ids = (0..n).map(|i| format!("s{i:04}")).collect();
    LabeledDataset::new(schema, ids, Matrix::from_vec(n, d, data).unwrap(), labels).unwrap()
}

/// Small, fast configurations for every pool learner.
pub fn cheap_learners() -> Vec<LearnerConfig> {
    let forest = ForestParams {
        n_trees: 5,
        ..Default::default()
    };
    vec![
        LearnerConfig::new(LearnerParams::Rf(forest.clone())),
        LearnerConfig::new(LearnerParams::Et(forest)),
        LearnerConfig::new(LearnerParams::Gb(BoostingParams {
            n_rounds: 5,
            ..Default::default()
        })),
        LearnerConfig::new(LearnerParams::Mlp(MlpParams {
            hidden_units: 8,
            epochs: 5,
            ..Default::default()
        })),
        LearnerConfig::new(LearnerParams::Svm(SvmParams {
            epochs: 3,
            ..Default::default()
        })),
    ]
}
