//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod kdigo_oracle {
    //! Brute-force KDIGO evaluation: enumerates every measurement pair and
    //! every contiguous urine span instead of scanning runs.

    use akiphen_core::cohort::EventSeries;
    use akiphen_core::kdigo::{BaselineScr, TriggerRule, Window, TOL};

    pub struct Outcome {
        pub is_case: bool,
        pub onset: Option<f64>,
        pub rule: Option<TriggerRule>,
        pub stage: Option<u8>,
    }

    fn in_window(w: Window, t: f64) -> bool {
        t > w.start && t <= w.end
    }

    /// All (firing time, later value) of rising pairs within 48 h.
    fn delta_pairs(scr: &EventSeries, w: Window) -> Vec<(f64, f64)> {
        let p = &scr.points;
        let mut out = Vec::new();
        for j in 0..p.len() {
            for i in 0..j {
                let dt = p[j].0 - p[i].0;
                if dt <= 48.0 + TOL && p[j].1 - p[i].1 >= 0.3 - TOL && in_window(w, p[j].0) {
                    out.push((p[j].0, p[j].1));
                }
            }
        }
        out
    }

    fn ratios(scr: &EventSeries, b: &BaselineScr, w: Window) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &(t, v) in &scr.points {
            let lag = t - b.source_window.1;
            if in_window(w, t) && lag >= -TOL && lag <= 168.0 + TOL {
                out.push((t, v / b.value));
            }
        }
        out
    }

    /// Every span of consecutive below-threshold points `a..=b` where `a`
    /// starts a run; the span lasts until the next point (or its own last
    /// point). Fires `hours` after `a` when long enough.
    fn urine_fire(u: &EventSeries, thr: f64, hours: f64, w: Window) -> Option<f64> {
        let p = &u.points;
        let mut best: Option<f64> = None;
        for a in 0..p.len() {
            if a > 0 && p[a - 1].1 < thr {
                continue;
            }
            for b in a..p.len() {
                if (a..=b).any(|k| p[k].1 >= thr) {
                    break;
                }
                let end = if b + 1 < p.len() { p[b + 1].0 } else { p[b].0 };
                let fire = p[a].0 + hours;
                if end - p[a].0 >= hours - TOL && in_window(w, fire) {
                    best = Some(best.map_or(fire, |x: f64| x.min(fire)));
                }
            }
        }
        best
    }

    pub fn evaluate(
        scr: &EventSeries,
        urine: &EventSeries,
        baseline: Option<&BaselineScr>,
        w: Window,
        rrt: bool,
    ) -> Outcome {
        let deltas = delta_pairs(scr, w);
        let rs = baseline.map(|b| ratios(scr, b, w)).unwrap_or_default();
        let mut events: Vec<(f64, u8, TriggerRule)> = Vec::new();
        if let Some(t) = deltas.iter().map(|d| d.0).reduce(f64::min) {
            events.push((t, 0, TriggerRule::ScrDelta48h));
        }
        if let Some(t) = rs
            .iter()
            .filter(|r| r.1 >= 1.5 - TOL)
            .map(|r| r.0)
            .reduce(f64::min)
        {
            events.push((t, 1, TriggerRule::ScrRatio7d));
        }
        if let Some(t) = urine_fire(urine, 0.5, 6.0, w) {
            events.push((t, 2, TriggerRule::Urine6h));
        }
        let first = events
            .iter()
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
            .copied();
        let Some((onset, _, rule)) = first else {
            return Outcome {
                is_case: false,
                onset: None,
                rule: None,
                stage: None,
            };
        };
        let mut stage = 1;
        let peak = rs.iter().map(|r| r.1).fold(0.0, f64::max);
        if peak >= 2.0 - TOL {
            stage = 2;
        }
        if peak >= 3.0 - TOL {
            stage = 3;
        }
        if urine_fire(urine, 0.5, 12.0, w).is_some() {
            stage = stage.max(2);
        }
        if deltas.iter().any(|d| d.1 >= 4.0 - TOL)
            || urine_fire(urine, 0.3, 24.0, w).is_some()
            || urine_fire(urine, 0.01, 12.0, w).is_some()
            || rrt
        {
            stage = 3;
        }
        Outcome {
            is_case: true,
            onset: Some(onset),
            rule: Some(rule),
            stage: Some(stage),
        }
    }
}

pub mod trajectories {
    use akiphen_core::cohort::{EventSeries, Variable};
    use akiphen_core::kdigo::{BaselineScr, Window};
    use rand::Rng;

    pub struct Case {
        pub scr: EventSeries,
        pub urine: EventSeries,
        pub baseline: Option<BaselineScr>,
        pub window: Window,
        pub rrt: bool,
    }

    /// Random creatinine/urine trajectories on a quarter-hour grid, mixing
    /// flat stretches, steps and ramps so that every clause fires sometimes.
    pub fn random_case<R: Rng>(rng: &mut R) -> Case {
        let horizon = 240.0;
        // per-case intensity of creatinine jumps and oliguric episodes
        let p_jump = [0.0, 0.02, 0.06, 0.15][rng.random_range(0..4)];
        let p_low = [0.0, 0.0, 0.03, 0.08][rng.random_range(0..4)];
        let mut scr = Vec::new();
        let mut t = rng.random_range(0..16) as f64 * 0.25;
        let mut v: f64 = rng.random_range(0.6..2.5);
        while t < horizon && scr.len() < 60 {
            scr.push((t, (v * 100.0).round() / 100.0));
            if rng.random_bool(p_jump) {
                match rng.random_range(0..3) {
                    0 => v += rng.random_range(0.1..0.5),
                    1 => v *= rng.random_range(1.2..2.2),
                    _ => v = (v - rng.random_range(0.0..0.4)).max(0.3),
                }
            } else {
                v += rng.random_range(-0.04..0.04);
            }
            v = v.clamp(0.3, 9.0);
            t += rng.random_range(1..64) as f64 * 0.25;
        }
        if rng.random_bool(0.1) {
            scr.clear();
        }
        let mut urine = Vec::new();
        let mut t = rng.random_range(0..8) as f64 * 0.25;
        let mut low: Option<(f64, f64)> = None;
        while t < horizon && urine.len() < 200 {
            match low {
                Some(_) if rng.random_bool(0.12) => low = None,
                None if rng.random_bool(p_low) => {
                    low = Some([(0.0, 0.01), (0.01, 0.3), (0.3, 0.5)][rng.random_range(0..3)])
                }
                _ => {}
            }
            let r = match low {
                Some((a, b)) => rng.random_range(a..b),
                None => rng.random_range(0.5..2.0),
            };
            urine.push((t, r));
            t += rng.random_range(1..16) as f64 * 0.25;
        }
        if rng.random_bool(0.1) {
            urine.clear();
        }
        if scr.is_empty() && urine.is_empty() {
            urine.push((1.0, 1.0));
        }
        let t1 = [24.0, 48.0][rng.random_range(0..2)];
        let window = Window::new(t1, t1 + 168.0);
        let scr = EventSeries::new(Variable::Creatinine, scr);
        let baseline = akiphen_core::kdigo::prediction_baseline(&scr, t1);
        Case {
            scr,
            urine: EventSeries::new(Variable::Urine, urine),
            baseline,
            window,
            rrt: rng.random_bool(0.05),
        }
    }
}

pub mod inputs {
    //! Random model inputs and small hyperparameter sets.

    use akiphen_core::features::{StayTensor, D, STATIC_DIM};
    use akiphen_core::model::{HyperConfig, StayInput};
    use rand::Rng;

    pub fn tiny_config(t: usize, hops: usize, seed: u64) -> HyperConfig {
        HyperConfig {
            memory_size: t,
            emb_dim: 4,
            word_dim: 3,
            bottom_hidden: 5,
            top_hidden: 4,
            static_proj: 3,
            hops,
            batch_size: 2,
            lr: 0.05,
            epochs: 10,
            max_note_len: 6,
            init_scale: 0.5,
            seed,
        }
    }

    pub fn random_tensor<R: Rng>(rng: &mut R, t: usize) -> StayTensor {
        StayTensor {
            t,
            d: D,
            values: (0..t * D).map(|_| rng.random_range(-1.0..1.0)).collect(),
            mask: vec![true; t * D],
            scaled_with: Some("test".into()),
        }
    }

    pub fn random_notes<R: Rng>(rng: &mut R, vocab_size: usize, n_notes: usize) -> Vec<Vec<usize>> {
        (0..n_notes)
            .map(|_| {
                let len = rng.random_range(1..5);
                (0..len).map(|_| rng.random_range(2..vocab_size)).collect()
            })
            .collect()
    }

    pub fn random_input<R: Rng>(rng: &mut R, t: usize, vocab_size: usize) -> StayInput {
        let mut statics = [0.0; STATIC_DIM];
        for s in &mut statics {
            *s = rng.random_range(0.0..1.0);
        }
        let n_notes = rng.random_range(0..4);
        StayInput {
            tensor: random_tensor(rng, t),
            statics,
            notes: random_notes(rng, vocab_size, n_notes),
        }
    }
}

pub mod metric_oracle {
    /// Pairwise count of positives outranking negatives, ties worth 1/2.
    pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            if !li {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }
}
