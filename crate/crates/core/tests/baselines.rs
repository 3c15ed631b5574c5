mod common;

use akiphen_core::baselines::{
    lr_gradient, lr_loss, lr_train, HieLstmOnly, LrParams, LrTrainConfig, LstmBaseline,
    Standardizer,
};
use akiphen_core::model::{batch_loss, predict_proba, train_classifier, Classifier, StayInput};
use akiphen_core::numeric::gradcheck::{self, relative_error};
use akiphen_core::Error;
use common::inputs::{random_input, tiny_config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: usize = 30;

fn toy_2d() -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs = vec![
        vec![0.2, 1.0],
        vec![1.5, -0.3],
        vec![-0.7, 0.4],
        vec![0.9, 0.8],
        vec![-1.2, -1.0],
        vec![0.1, -0.6],
        vec![2.0, 0.3],
        vec![-0.4, 1.4],
    ];
    let ys = vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
    (xs, ys)
}

#[test]
fn lr_matches_grid_search_optimum() {
    let (xs, ys) = toy_2d();
    let l2 = 0.1;
    let cfg = LrTrainConfig {
        l2,
        epochs: 20_000,
        lr: 0.5,
    };
    let fit = lr_train(&xs, &ys, &cfg).unwrap();
    let fitted = lr_loss(&fit, &xs, &ys).unwrap();

    let mut best = f64::INFINITY;
    let grid: Vec<f64> = (0..=120).map(|i| -3.0 + 0.05 * i as f64).collect();
    for &w0 in &grid {
        for &w1 in &grid {
            for &b in &grid {
                let p = LrParams {
                    weights: vec![w0, w1],
                    bias: b,
                    l2,
                };
                best = best.min(lr_loss(&p, &xs, &ys).unwrap());
            }
        }
    }
    assert!((fitted - best).abs() < 1e-3, "gd {fitted} grid {best}");
    assert!(fitted <= best + 1e-12);
}

#[test]
fn lr_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let dim = rng.random_range(1..6);
        let xs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let ys = [1.0, 0.0, 1.0, 0.0];
        let p = LrParams {
            weights: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-1.0..1.0),
            l2: rng.random_range(0.0..0.5),
        };
        let (gw, gb) = lr_gradient(&p, &xs, &ys);
        let h = gradcheck::FD_STEP;
        for k in 0..=dim {
            let bump = |d: f64| {
                let mut q = p.clone();
                if k < dim {
                    q.weights[k] += d;
                } else {
                    q.bias += d;
                }
                lr_loss(&q, &xs, &ys).unwrap()
            };
            let numeric = (bump(h) - bump(-h)) / (2.0 * h);
            let analytic = if k < dim { gw[k] } else { gb };
            assert!(relative_error(analytic, numeric) < 1e-4);
        }
    }
}

#[test]
fn lr_separable_and_regularisation_limit() {
    let xs: Vec<Vec<f64>> = (-5..=5)
        .filter(|&i| i != 0)
        .map(|i| vec![i as f64 * 0.3])
        .collect();
    let ys: Vec<f64> = xs.iter().map(|x| (x[0] > 0.0) as u8 as f64).collect();
    let fit = lr_train(
        &xs,
        &ys,
        &LrTrainConfig {
            l2: 0.0,
            epochs: 500,
            lr: 0.5,
        },
    )
    .unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        assert_eq!((fit.predict(x) >= 0.5) as u8 as f64, *y);
    }

    let mut last = f64::INFINITY;
    for l2 in [1.0, 1e2, 1e4] {
        let cfg = LrTrainConfig {
            l2,
            epochs: 2000,
            lr: 0.5 / (1.0 + l2),
        };
        let fit = lr_train(&xs, &ys, &cfg).unwrap();
        let norm = fit.weights[0].abs();
        assert!(norm < last);
        last = norm;
    }
    assert!(last < 1e-3);
    let cfg = LrTrainConfig {
        l2: 1e4,
        epochs: 2000,
        lr: 0.5 / (1.0 + 1e4),
    };
    let fit = lr_train(&xs, &ys, &cfg).unwrap();
    for x in &xs {
        assert!((fit.predict(x) - 0.5).abs() < 1e-2);
    }

    let err = lr_train(&xs, &vec![0.0; xs.len()], &LrTrainConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Training(_)));
}

#[test]
fn lr_is_equivariant_under_feature_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| (x[0] - x[2] + 0.3 * x[3] > 0.0) as u8 as f64)
        .collect();
    let perm = [2, 0, 3, 1];
    let permuted: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| perm.iter().map(|&k| x[k]).collect())
        .collect();
    let cfg = LrTrainConfig::default();
    let a = lr_train(&xs, &ys, &cfg).unwrap();
    let b = lr_train(&permuted, &ys, &cfg).unwrap();
    for (j, &k) in perm.iter().enumerate() {
        assert!((b.weights[j] - a.weights[k]).abs() < 1e-10);
    }
    for (x, xp) in xs.iter().zip(&permuted) {
        assert!((a.predict(x) - b.predict(xp)).abs() < 1e-12);
        assert!(a.predict(x) > 0.0 && a.predict(x) < 1.0);
    }
}

#[test]
fn standardizer_ignores_missing_entries() {
    let xs = vec![vec![1.0, 10.0], vec![3.0, 0.0], vec![5.0, 20.0]];
    let missing = vec![vec![false, false], vec![false, true], vec![false, false]];
    let s = Standardizer::fit(&xs, Some(&missing)).unwrap();
    assert_eq!(s.mean, vec![3.0, 15.0]);
    let out = s.apply(&xs[1], Some(&missing[1]));
    assert_eq!(out[1], 0.0);
    assert!((out[0]).abs() < 1e-15);
}

fn random_batch(seed: u64, n: usize) -> Vec<StayInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_input(&mut rng, 3, VOCAB)).collect()
}

fn separable_pair() -> (Vec<StayInput>, Vec<f64>) {
    let mut xs = random_batch(3, 2);
    xs[0].tensor.values.fill(1.0);
    xs[1].tensor.values.fill(-1.0);
    xs[0].notes = vec![vec![3, 4]];
    xs[1].notes = vec![vec![5, 6]];
    (xs, vec![1.0, 0.0])
}

fn check_model<M: Classifier<Input = StayInput> + Clone + PartialEq + std::fmt::Debug>(
    make: impl Fn() -> M,
) {
    let xs = random_batch(4, 4);
    let ys = [1.0, 0.0, 1.0, 0.0];
    let m = make();
    let report = gradcheck::check(m.params(), |t| batch_loss(&m, t, &xs, &ys), usize::MAX).unwrap();
    assert!(report.max_rel_error < 1e-4, "{report:?}");

    let mut cfg = tiny_config(3, 1, 5);
    cfg.epochs = 0;
    let init = make();
    let mut trained = init.clone();
    train_classifier(&mut trained, &xs, &ys, &cfg.train_options()).unwrap();
    assert_eq!(trained, init);

    let (pair, labels) = separable_pair();
    cfg.epochs = 50;
    let mut model = make();
    let hist = train_classifier(&mut model, &pair, &labels, &cfg.train_options()).unwrap();
    assert!(*hist.last().unwrap() < 0.1, "{hist:?}");
    let p = predict_proba(&model, &xs).unwrap();
    assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));

    let err = train_classifier(&mut model, &pair, &[0.0, 0.0], &cfg.train_options()).unwrap_err();
    assert!(matches!(err, Error::Training(_)));
}

#[test]
fn lstm_baseline_gradients_training_and_init() {
    check_model(|| LstmBaseline::new(&tiny_config(3, 1, 6), 21).unwrap());
}

#[test]
fn note_only_baseline_gradients_training_and_init() {
    check_model(|| HieLstmOnly::new(&tiny_config(3, 1, 7), VOCAB).unwrap());
}
