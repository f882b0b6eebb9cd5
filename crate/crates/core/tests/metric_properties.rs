use proptest::prelude::*;
use rbc_core::imaging::Standardizer;
use rbc_core::metrics::{accuracy, sds, suite};
use rbc_core::{ClassLabel, ConfusionMatrix, FeatureSchema, FeatureVector, LabeledDataset, Matrix};

fn matrix3() -> impl Strategy<Value = [[u64; 3]; 3]> {
    prop::array::uniform3(prop::array::uniform3(0u64..60)).prop_filter("non-empty", |m| m.iter().flatten().any(|&v| v > 0))
}

proptest! {
    #[test]
    fn metrics_stay_in_range(m in matrix3()) {
        let s = suite(&ConfusionMatrix::from_3x3(m)).unwrap();
        for v in [s.accuracy, s.f1_macro, s.f1_weighted, s.f1_micro, s.sds_score, s.cba] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((-1.0..=1.0).contains(&s.mcc));
    }

    #[test]
    fn sds_gain_is_abnormal_confusion(m in matrix3()) {
        let cm = ConfusionMatrix::from_3x3(m);
        let n = cm.total() as f64;
        let gain = (m[1][2] + m[2][1]) as f64 / n;
        prop_assert!((sds(&cm).unwrap() - accuracy(&cm) - gain).abs() < 1e-12);
    }

    #[test]
    fn merge_preserves_totals(m in matrix3()) {
        let cm = ConfusionMatrix::from_3x3(m);
        let merged = cm.merge_classes(&[vec![0], vec![1, 2]]).unwrap();
        prop_assert_eq!(merged.total(), cm.total());
        prop_assert_eq!(merged.get(0, 0), m[0][0]);
        prop_assert!(merged.trace() >= cm.trace());
    }

    #[test]
    fn relabelling_classes_keeps_accuracy_and_mcc(m in matrix3(), perm in Just([0usize, 1, 2]).prop_shuffle()) {
        let cm = ConfusionMatrix::from_3x3(m);
        let p = cm.permuted(&perm);
        let (a, b) = (suite(&cm).unwrap(), suite(&p).unwrap());
        prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
        prop_assert!((a.mcc - b.mcc).abs() < 1e-9);
        prop_assert!((a.f1_macro - b.f1_macro).abs() < 1e-9);
    }

    #[test]
    fn streams_rebuild_the_matrix(m in matrix3()) {
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for (t, row) in m.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                for _ in 0..n {
                    truth.push(ClassLabel::from_index(t).unwrap());
                    pred.push(ClassLabel::from_index(p).unwrap());
                }
            }
        }
        prop_assert_eq!(ConfusionMatrix::from_labels(&truth, &pred).unwrap(), ConfusionMatrix::from_3x3(m));
    }

    #[test]
    fn standardizer_round_trip(values in prop::collection::vec(-1e4f64..1e4, 12 * 121)) {
        let schema = FeatureSchema::full();
        let ids = (0..12).map(|i| format!("c{i}")).collect();
        let labels = (0..12).map(|i| ClassLabel::from_index(i % 3).unwrap()).collect();
        let ds = LabeledDataset::new(schema.clone(), ids, Matrix::from_vec(12, 121, values.clone()).unwrap(), labels).unwrap();
        let st = Standardizer::fit(&ds).unwrap();
        let v = FeatureVector::new(values[..121].to_vec(), &schema).unwrap();
        let back = st.inverse(&st.apply(&v).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(v.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}
