use akiphen_core::cohort::{generate_cohort, read_cohort, write_cohort, CohortConfig, Variable};
use akiphen_core::kdigo::{label_stay, Window};
use akiphen_core::util::mean;

#[test]
fn ten_stays_are_repeatable() {
    let cfg = CohortConfig {
        n_stays: 10,
        seed: 7,
        ..CohortConfig::default()
    };
    let (a, va) = generate_cohort(&cfg).unwrap();
    let (b, vb) = generate_cohort(&cfg).unwrap();
    assert_eq!(a.len(), 10);
    assert_eq!(a, b);
    assert_eq!(va, vb);
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    write_cohort(&a, &va, &p1).unwrap();
    write_cohort(&b, &vb, &p2).unwrap();
    assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
}

#[test]
fn case_count_within_binomial_interval() {
    let cfg = CohortConfig {
        n_stays: 1000,
        case_fraction: 0.2,
        seed: 11,
        ..CohortConfig::default()
    };
    let (stays, _) = generate_cohort(&cfg).unwrap();
    let cases = stays.iter().filter(|s| s.planted_subtype.is_some()).count() as f64;
    // 99% normal interval of Binomial(1000, 0.2): 200 +- 2.576 * sqrt(160)
    let half = 2.576 * (1000.0f64 * 0.2 * 0.8).sqrt();
    assert!((cases - 200.0).abs() <= half, "{cases} cases");
}

#[test]
fn subtype_two_creatinine_matches_target() {
    let cfg = CohortConfig {
        n_stays: 500,
        case_fraction: 0.99,
        subtype_mixture: [0.0, 1.0, 0.0],
        seed: 5,
        ..CohortConfig::default()
    };
    let (stays, _) = generate_cohort(&cfg).unwrap();
    let per_stay: Vec<f64> = stays
        .iter()
        .filter(|s| s.planted_subtype == Some(2))
        .map(|s| {
            let v: Vec<f64> = s
                .series(Variable::Creatinine)
                .unwrap()
                .between(0.0, 24.0)
                .map(|p| p.1)
                .collect();
            mean(&v)
        })
        .collect();
    assert!(per_stay.len() >= 480);
    let m = mean(&per_stay);
    assert!((m - 1.96).abs() < 0.05, "mean SCr {m}");
}

#[test]
fn planted_labels_agree_with_kdigo() {
    for (noise, seed) in [(1.0, 21), (0.35, 22)] {
        let cfg = CohortConfig {
            n_stays: 1500,
            case_fraction: 0.5,
            noise_scale: noise,
            seed,
            ..CohortConfig::default()
        };
        let (stays, _) = generate_cohort(&cfg).unwrap();
        let (mut cases, mut agree) = (0, 0);
        for s in &stays {
            for t1 in [24.0, 48.0] {
                let early = akiphen_core::kdigo::detect_aki(
                    s.series(Variable::Creatinine).unwrap(),
                    s.series(Variable::Urine).unwrap(),
                    akiphen_core::kdigo::admission_baseline(
                        s.series(Variable::Creatinine).unwrap(),
                    )
                    .as_ref(),
                    Window::new(f64::NEG_INFINITY, t1),
                )
                .unwrap();
                assert!(!early.is_case, "{} has AKI before {t1}", s.stay_id);
                let label = label_stay(s, t1, 7.0).unwrap();
                match s.planted_subtype {
                    None => assert!(!label.is_case, "control {} labelled case", s.stay_id),
                    Some(k) => {
                        assert!(label.is_case, "case {} labelled control", s.stay_id);
                        cases += 1;
                        let planted = [1, 3, 2][k as usize - 1];
                        if label.stage == Some(planted) {
                            agree += 1;
                        }
                    }
                }
            }
        }
        let share = agree as f64 / cases as f64;
        assert!(share >= 0.95, "stage agreement {share} at noise {noise}");
    }
}

#[test]
fn round_trip_preserves_everything() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    for n in [0, 1, 1000] {
        let cfg = CohortConfig {
            n_stays: n.max(1),
            seed: 9,
            ..CohortConfig::default()
        };
        let (mut stays, vocab) = generate_cohort(&cfg).unwrap();
        stays.truncate(n);
        write_cohort(&stays, &vocab, &path).unwrap();
        if n == 0 {
            let text = std::fs::read_to_string(&path).unwrap();
            assert_eq!(text.lines().count(), 1);
        }
        let back = read_cohort(&path).unwrap();
        assert_eq!(back.stays, stays);
        assert_eq!(back.vocab, vocab);
    }
}

#[test]
fn malformed_record_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let (stays, vocab) = generate_cohort(&CohortConfig {
        n_stays: 3,
        seed: 1,
        ..CohortConfig::default()
    })
    .unwrap();
    write_cohort(&stays, &vocab, &path).unwrap();
    let mut lines: Vec<String> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    lines[2] = "{\"stay_id\": 3".into();
    std::fs::write(&path, lines.join("\n")).unwrap();
    match read_cohort(&path) {
        Err(akiphen_core::Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn complementary_modalities_only_touch_cases() {
    use akiphen_core::cohort::RISK_WORDS;
    let base = CohortConfig {
        n_stays: 800,
        case_fraction: 0.5,
        risk_shift: 2.0,
        seed: 13,
        ..CohortConfig::default()
    };
    let split = CohortConfig {
        complementary_modalities: true,
        ..base.clone()
    };
    let (a, _) = generate_cohort(&base).unwrap();
    let (b, _) = generate_cohort(&split).unwrap();
    let risk_share = |stays: &[akiphen_core::cohort::IcuStay]| {
        let (mut risk, mut total) = (0usize, 0usize);
        for s in stays.iter().filter(|s| s.planted_subtype.is_some()) {
            for n in &s.notes {
                total += n.tokens.len();
                risk += n.tokens.iter().filter(|t| RISK_WORDS.contains(&t.as_str())).count();
            }
        }
        risk as f64 / total as f64
    };
    for (x, y) in a.iter().zip(&b) {
        if x.planted_subtype.is_none() {
            assert_eq!(x, y);
        }
    }
    // half of the cases lose the notes shift, so risk words get rarer
    assert!(risk_share(&b) < risk_share(&a) - 0.02, "{} {}", risk_share(&b), risk_share(&a));
}
