mod common;

use akiphen_core::cohort::{generate_cohort, CohortConfig};
use akiphen_core::eval::{
    auc, fit_predict, nested_cv, precision_recall, prepare_stays, stratified_group_folds,
    CvConfig, ModelKind, TuneParams,
};
use akiphen_core::baselines::LrTrainConfig;
use akiphen_core::features::ScalingStats;
use akiphen_core::kdigo::apply_exclusions;
use akiphen_core::model::HyperConfig;
use akiphen_core::Error;
use common::metric_oracle::brute_auc;
use proptest::prelude::*;

#[test]
fn auc_examples() {
    let l = [false, false, true, true];
    assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &l).unwrap(), 0.75);
    assert_eq!(auc(&[0.1, 0.2, 0.3, 0.4], &l).unwrap(), 1.0);
    assert_eq!(auc(&[0.3; 4], &l).unwrap(), 0.5);
    assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &l).unwrap(), 0.0);
    assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(Error::Metric(_))));
    assert!(matches!(auc(&[0.1], &[true, false]), Err(Error::Dimension(_))));
}

#[test]
fn precision_recall_examples() {
    let scores = [0.9, 0.8, 0.7, 0.6, 0.1, 0.2];
    let labels = [true, true, false, false, true, false];
    let pr = precision_recall(&scores, &labels, 0.5).unwrap();
    assert_eq!(pr.precision, 0.5);
    assert!((pr.recall - 2.0 / 3.0).abs() < 1e-15);
    assert!(pr.precision_defined);

    let perfect = precision_recall(&[0.9, 0.1], &[true, false], 0.5).unwrap();
    assert_eq!((perfect.precision, perfect.recall), (1.0, 1.0));

    let none = precision_recall(&[0.2, 0.1], &[true, false], 0.5).unwrap();
    assert_eq!((none.precision, none.recall), (0.0, 0.0));
    assert!(!none.precision_defined);

    // the cutoff itself counts as a positive call
    let edge = precision_recall(&[0.5, 0.1], &[true, false], 0.5).unwrap();
    assert_eq!(edge.recall, 1.0);
    assert!(precision_recall(&[0.5], &[false], 0.5).is_err());
}

proptest! {
    #[test]
    fn auc_matches_pairwise_count(
        raw in prop::collection::vec((0u8..6, any::<bool>()), 2..60)
    ) {
        let scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64 / 5.0).collect();
        let labels: Vec<bool> = raw.iter().map(|(_, l)| *l).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let a = auc(&scores, &labels).unwrap();
        prop_assert!((a - brute_auc(&scores, &labels)).abs() < 1e-12);
    }
}

fn planted_labels(n: usize, every: usize) -> Vec<bool> {
    (0..n).map(|i| i % every == 0).collect()
}

#[test]
fn folds_are_stratified() {
    let labels = planted_labels(100, 5);
    let groups: Vec<String> = (0..100).map(|i| format!("p{i}")).collect();
    for seed in 0..5 {
        let folds = stratified_group_folds(&labels, &groups, 5, seed).unwrap();
        for f in 0..5 {
            let cases = (0..100).filter(|&i| folds[i] == f && labels[i]).count();
            let size = folds.iter().filter(|&&x| x == f).count();
            assert!((3..=5).contains(&cases), "fold {f} has {cases} cases");
            assert!((19..=21).contains(&size), "fold {f} has {size} stays");
        }
    }
}

#[test]
fn folds_keep_patients_together() {
    let labels = planted_labels(100, 5);
    // stays 2i and 2i+1 belong to the same patient
    let groups: Vec<String> = (0..100).map(|i| format!("p{}", i / 2)).collect();
    let folds = stratified_group_folds(&labels, &groups, 5, 7).unwrap();
    for i in (0..100).step_by(2) {
        assert_eq!(folds[i], folds[i + 1]);
    }
    let cases: Vec<usize> = (0..5)
        .map(|f| (0..100).filter(|&i| folds[i] == f && labels[i]).count())
        .collect();
    assert_eq!(cases.iter().sum::<usize>(), 20);
    assert!(cases.iter().all(|&c| (3..=5).contains(&c)), "{cases:?}");
}

#[test]
fn infeasible_folds_are_rejected() {
    let groups: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
    let few_cases = planted_labels(20, 10);
    assert!(matches!(
        stratified_group_folds(&few_cases, &groups, 5, 0),
        Err(Error::Fold(_))
    ));
    let one_patient = vec!["p".to_string(); 20];
    assert!(matches!(
        stratified_group_folds(&planted_labels(20, 2), &one_patient, 5, 0),
        Err(Error::Fold(_))
    ));
    assert!(matches!(
        stratified_group_folds(&planted_labels(20, 2), &groups, 1, 0),
        Err(Error::Fold(_))
    ));
}

fn tiny_hyper() -> HyperConfig {
    HyperConfig {
        emb_dim: 4,
        word_dim: 3,
        bottom_hidden: 4,
        top_hidden: 4,
        static_proj: 3,
        epochs: 2,
        batch_size: 16,
        max_note_len: 8,
        ..HyperConfig::default()
    }
}

fn small_dataset() -> (Vec<akiphen_core::eval::EvalStay>, usize) {
    let (stays, vocab) = generate_cohort(&CohortConfig {
        n_stays: 160,
        case_fraction: 0.3,
        seed: 3,
        ..CohortConfig::default()
    })
    .unwrap();
    let (kept, _) = apply_exclusions(&stays, 24.0, 7.0).unwrap();
    let data = prepare_stays(&stays, &kept, &vocab, 24.0, 8).unwrap();
    (data, vocab.len())
}

#[test]
fn nested_cv_produces_one_record_per_model_and_fold() {
    let (data, vocab_size) = small_dataset();
    let cv = CvConfig {
        outer_folds: 3,
        inner_folds: 2,
        lr_multipliers: vec![1.0],
        hops_grid: vec![1, 2],
        ..CvConfig::default()
    };
    let lr = LrTrainConfig {
        epochs: 50,
        ..LrTrainConfig::default()
    };
    let kinds = ModelKind::ALL;
    let report = nested_cv(&data, &kinds, &tiny_hyper(), &lr, &cv, vocab_size).unwrap();
    assert_eq!(report.records.len(), kinds.len() * 3);
    for r in &report.records {
        for v in [r.auc, r.precision, r.recall] {
            assert!((0.0..=1.0).contains(&v), "{r:?}");
        }
        if r.model != ModelKind::MnHielstm {
            assert_eq!(r.chosen.hops, tiny_hyper().hops);
        }
    }
    assert_eq!(report.summary.len(), kinds.len());
    let cells = report.row(ModelKind::MnHielstm).unwrap().cells();
    assert_eq!(cells[0], "MN+HieLSTM");
    assert!(cells[1..].iter().all(|c| c.contains(" ± ")), "{cells:?}");

    // threaded outer folds give the same records
    let parallel = nested_cv(
        &data,
        &kinds,
        &tiny_hyper(),
        &lr,
        &CvConfig { jobs: 3, ..cv.clone() },
        vocab_size,
    )
    .unwrap();
    assert_eq!(parallel, report);
}

#[test]
fn scaling_guard_rejects_foreign_split() {
    let (data, _) = small_dataset();
    let tensors: Vec<_> = data[..20].iter().map(|s| s.tensor.clone()).collect();
    let stats = ScalingStats::fit(&tensors, "outer0").unwrap();
    assert!(stats.assert_split("outer0").is_ok());
    assert!(matches!(stats.assert_split("outer1"), Err(Error::Contract(_))));
    let scaled = stats.apply(&data[0].tensor).unwrap();
    let other = ScalingStats::fit(&tensors, "outer1").unwrap();
    assert!(other.apply(&scaled).is_err());
}

#[test]
fn fit_predict_ignores_test_labels() {
    let (mut data, vocab_size) = small_dataset();
    let n = data.len();
    let train: Vec<usize> = (0..n * 2 / 3).collect();
    let test: Vec<usize> = (n * 2 / 3..n).collect();
    let p = TuneParams { lr_mult: 1.0, hops: 1 };
    let lr = LrTrainConfig {
        epochs: 50,
        ..LrTrainConfig::default()
    };
    for kind in [ModelKind::MnHielstm, ModelKind::LrBoth] {
        let a = fit_predict(kind, &data, &train, &test, &tiny_hyper(), &lr, p, vocab_size, "s").unwrap();
        for &i in &test {
            data[i].label = !data[i].label;
        }
        let b = fit_predict(kind, &data, &train, &test, &tiny_hyper(), &lr, p, vocab_size, "s").unwrap();
        for &i in &test {
            data[i].label = !data[i].label;
        }
        assert_eq!(a, b, "{kind}");
        assert!(a.iter().all(|&q| q > 0.0 && q < 1.0));
    }
}
