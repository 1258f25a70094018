//! Whole check suites, shared by the per-crate tests and the acceptance run.
//! Each function panics on the first failure and returns a short summary.

use appropriateness::aggregate::{
    aggregate_strategy, fit_categorical, AnnotatorCount, EmState, ItemLabels, LabelMatrix, MaceConfig, Provenance,
    Strategy,
};
use appropriateness::eval::{class_weights, majority_baseline, make_folds, random_baseline, score, FoldPlan, PredictionSet};
use appropriateness::rng;
use appropriateness::stats::{kendall_tau_b, krippendorff_alpha, wilcoxon_signed_rank, Metric, WilcoxonOutcome};
use appropriateness::taxonomy::{close, AnnotationRecord, Dimension};
use appropriateness::Execution;
use rand::Rng;

/// Yes-counts of the conservative labels of the released corpus (2191 arguments).
pub const TABLE_1A_YES: [usize; 14] = [1182, 594, 402, 427, 735, 183, 658, 774, 459, 508, 174, 108, 77, 32];
pub const CORPUS: usize = 2191;

pub fn corpus_rates() -> [f64; 14] {
    TABLE_1A_YES.map(|y| y as f64 / CORPUS as f64)
}

pub fn random_matrix(n: usize, rates: [f64; 14], seed: u64) -> LabelMatrix {
    let mut r = rng::stream(seed, 1);
    let mut m = LabelMatrix::new(Provenance::Conservative);
    for i in 0..n {
        m.push(format!("arg{i:05}"), rates.map(|p| r.random_bool(p))).unwrap();
    }
    m
}

fn random_units(r: &mut rng::Rng) -> Vec<Vec<Option<u32>>> {
    let units = r.random_range(1..=8);
    let coders = r.random_range(2..=4);
    let values = r.random_range(1..=4);
    let missing = r.random_range(0.0..0.4);
    (0..units)
        .map(|_| {
            (0..coders)
                .map(|_| (!r.random_bool(missing)).then(|| r.random_range(1..=values)))
                .collect()
        })
        .collect()
}

/// Alpha against the pairwise oracle, both metrics, up to 8 units x 4 coders.
pub fn alpha_suite(instances: usize) -> String {
    let mut r = rng::stream(101, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let units = random_units(&mut r);
        for metric in [Metric::Nominal, Metric::Ordinal] {
            let fast = krippendorff_alpha(&units, metric);
            let slow = super::alpha_pairwise(&units, metric == Metric::Ordinal);
            match (fast, slow) {
                (Err(_), None) => {}
                (Ok(a), None) => assert!(a.degenerate && a.value == 1.0, "{units:?}"),
                (Ok(a), Some(b)) => {
                    assert!(!a.degenerate);
                    worst = worst.max((a.value - b).abs());
                    assert!((a.value - b).abs() < 1e-9, "{metric:?} {units:?}: {} vs {b}", a.value);
                }
                (Err(e), Some(b)) => panic!("{units:?}: error {e} but oracle gives {b}"),
            }
        }
    }
    format!("{instances} instances, max |diff| {worst:.1e}")
}

/// tau-b against O(n^2) pair enumeration on heavily tied sequences.
pub fn tau_suite(instances: usize) -> String {
    let mut r = rng::stream(102, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = r.random_range(2..=40);
        let levels_x = r.random_range(1..=6);
        let levels_y = r.random_range(1..=6);
        let x: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..levels_x))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..levels_y)) * 0.5).collect();
        match (kendall_tau_b(&x, &y).unwrap(), super::tau_b_pairs(&x, &y)) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                worst = worst.max((a - b).abs());
                assert!((a - b).abs() < 1e-12, "{x:?} {y:?}: {a} vs {b}");
            }
            other => panic!("{x:?} {y:?}: {other:?}"),
        }
    }
    format!("{instances} instances, max |diff| {worst:.1e}")
}

/// The exact Wilcoxon branch against full sign enumeration for n = 1..=max_n.
pub fn wilcoxon_suite(max_n: usize, per_n: usize) -> String {
    let mut r = rng::stream(103, 0);
    let mut tested = 0;
    for n in 1..=max_n {
        for _ in 0..per_n {
            let a: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..6))).collect();
            let b: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..6))).collect();
            match (wilcoxon_signed_rank(&a, &b, 0.05).unwrap(), super::wilcoxon_enumerated(&a, &b)) {
                (WilcoxonOutcome::NoTest, None) => {}
                (WilcoxonOutcome::Test(t), Some((w, p))) => {
                    assert_eq!(t.w_plus, w);
                    assert!((t.p_value - p).abs() < 1e-12, "{a:?} {b:?}: {} vs {p}", t.p_value);
                    tested += 1;
                }
                other => panic!("{a:?} {b:?}: {other:?}"),
            }
        }
    }
    format!("{} samples, {tested} with a test", max_n * per_n)
}

fn random_item_labels(r: &mut rng::Rng) -> ItemLabels {
    let labels = r.random_range(2..=4);
    let annotators = r.random_range(2..=5);
    let items = (0..r.random_range(5..=40))
        .map(|_| {
            let mut item = Vec::new();
            for j in 0..annotators {
                if r.random_bool(0.8) {
                    item.push((j, r.random_range(0..labels)));
                }
            }
            if item.is_empty() {
                item.push((0, r.random_range(0..labels)));
            }
            item
        })
        .collect();
    ItemLabels {
        labels,
        annotators,
        items,
    }
}

fn random_state(annotators: usize, labels: usize, r: &mut rng::Rng) -> EmState {
    EmState {
        theta: (0..annotators).map(|_| r.random_range(0.05..0.95)).collect(),
        xi: (0..annotators)
            .map(|_| {
                let raw: Vec<f64> = (0..labels).map(|_| r.random_range(0.1..1.0)).collect();
                let z: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / z).collect()
            })
            .collect(),
    }
}

/// The EM objective never decreases, from random starts and in full fits.
pub fn em_monotone_suite(instances: usize) -> String {
    let mut r = rng::stream(104, 0);
    let mut steps = 0;
    for _ in 0..instances {
        let data = random_item_labels(&mut r);
        let s = 0.1 / data.labels as f64;
        let mut state = random_state(data.annotators, data.labels, &mut r);
        let mut last = f64::NEG_INFINITY;
        for _ in 0..50 {
            let step = state.step(&data, s).expect("finite");
            assert!(step.objective >= last - 1e-9 * last.abs().max(1.0), "{} < {last}", step.objective);
            last = step.objective;
            state = step.next;
            steps += 1;
        }
        let fit = fit_categorical(&data, &MaceConfig::default(), 0).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
        }
    }
    format!("{instances} instances, {steps} checked steps")
}

fn log_likelihood(data: &ItemLabels, theta: &[f64], xi: &[Vec<f64>]) -> f64 {
    let k = data.labels;
    data.items
        .iter()
        .map(|item| {
            let total: f64 = (0..k)
                .map(|t| {
                    item.iter()
                        .map(|&(j, a)| theta[j] * xi[j][a] + if a == t { 1.0 - theta[j] } else { 0.0 })
                        .product::<f64>()
                        / k as f64
                })
                .sum();
            total.ln()
        })
        .sum()
}

/// Two reliable annotators (spam 5% of the time) and one pure spammer over
/// 300 binary items. Returns the fraction of items recovered.
pub fn planted_recovery() -> f64 {
    let mut r = rng::stream(105, 0);
    let truth: Vec<usize> = (0..300).map(|_| usize::from(r.random_bool(0.4))).collect();
    let spam = [0.05, 0.05, 1.0];
    let items: Vec<Vec<(usize, usize)>> = truth
        .iter()
        .map(|&t| {
            (0..3)
                .map(|j| {
                    let label = if r.random_bool(spam[j]) { r.random_range(0..2) } else { t };
                    (j, label)
                })
                .collect()
        })
        .collect();
    let data = ItemLabels {
        labels: 2,
        annotators: 3,
        items,
    };
    let fit = fit_categorical(&data, &MaceConfig::default(), 0).unwrap();
    let hits = fit.labels().iter().zip(&truth).filter(|(a, b)| a == b).count();
    assert!(hits as f64 >= 0.95 * truth.len() as f64, "{hits} / {}", truth.len());
    assert!(fit.theta[2] > 0.8 && fit.theta[0] < 0.2 && fit.theta[1] < 0.2, "{:?}", fit.theta);

    // Grid search over spam rates with uniform spam distributions: EM must
    // reach at least the same likelihood, up to the smoothing penalty.
    let uniform = vec![vec![0.5, 0.5]; 3];
    let grid: Vec<f64> = (1..50).map(|i| f64::from(i) / 50.0).collect();
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                let ll = log_likelihood(&data, &[a, b, c], &uniform);
                if ll > best.0 {
                    best = (ll, [a, b, c]);
                }
            }
        }
    }
    assert!(fit.log_likelihood >= best.0 - 0.5, "{} < {}", fit.log_likelihood, best.0);
    // The grid model pins the spam distributions to uniform, so its decoding
    // may differ where the reliable annotators disagree; EM must still be
    // about as accurate.
    let grid_hits = data
        .items
        .iter()
        .zip(&truth)
        .filter(|(item, &t)| {
            let score = |c: usize| -> f64 {
                item.iter()
                    .map(|&(j, a)| best.1[j] * 0.5 + if a == c { 1.0 - best.1[j] } else { 0.0 })
                    .product()
            };
            usize::from(score(1) > score(0)) == t
        })
        .count();
    assert!(hits + 3 >= grid_hits, "EM {hits} vs grid {grid_hits}");
    hits as f64 / truth.len() as f64
}

fn random_record(r: &mut rng::Rng, argument: &str, annotator: &str) -> AnnotationRecord {
    let mut rec = AnnotationRecord::appropriate(argument, annotator).with_rating(r.random_range(1..=3));
    for d in Dimension::FLAGS {
        rec = rec.with(d, r.random_bool(0.25));
    }
    close(&rec)
}

/// liberal ⊆ majority ⊆ conservative on random vote matrices.
pub fn strategy_nesting(cases: usize) -> String {
    let mut r = rng::stream(201, 0);
    let mut cells = 0;
    for case in 0..cases {
        let annotators = r.random_range(2..=5);
        let items = r.random_range(1..=12);
        let mut recs = Vec::new();
        for i in 0..items {
            for j in 0..annotators {
                recs.push(random_record(&mut r, &format!("a{i}"), &format!("w{j}")));
            }
        }
        let get = |s| aggregate_strategy(&recs, s, AnnotatorCount::Uniform).unwrap();
        let (lib, maj, con) = (get(Strategy::Liberal), get(Strategy::Majority), get(Strategy::Conservative));
        for ((l, m), c) in lib.rows().iter().zip(maj.rows()).zip(con.rows()) {
            for d in 0..14 {
                assert!(!l[d] || m[d], "case {case}: liberal yes but majority no");
                assert!(!m[d] || c[d], "case {case}: majority yes but conservative no");
                cells += 1;
            }
        }
    }
    format!("{cases} matrices, {cells} cells")
}

/// Partition, 70/10/20 sizes within one argument, and per-dimension test
/// fold rates within `tolerance_pts` of the global rate. Returns the
/// largest deviation seen, in points.
pub fn check_plan(m: &LabelMatrix, plan: &FoldPlan, tolerance_pts: f64) -> f64 {
    plan.check().unwrap();
    let n = m.len() as f64;
    let global: Vec<f64> = Dimension::ALL.iter().map(|&d| m.yes_count(d) as f64 / n).collect();
    let mut worst: f64 = 0.0;
    for (_, _, folding) in plan.iter() {
        assert_eq!(folding.train.len() + folding.dev.len() + folding.test.len(), m.len());
        assert!((folding.test.len() as f64 - 0.2 * n).abs() <= 1.0);
        assert!((folding.dev.len() as f64 - 0.1 * n).abs() <= 1.0);
        assert!((folding.train.len() as f64 - 0.7 * n).abs() <= 1.0);
        let test = m.select(&folding.test).unwrap();
        for d in 0..14 {
            let rate = test.iter().filter(|r| r[d]).count() as f64 / test.len() as f64;
            let dev = (rate - global[d]).abs() * 100.0;
            worst = worst.max(dev);
            assert!(
                dev <= tolerance_pts,
                "dimension {d}: fold rate {rate:.4} vs global {:.4}",
                global[d]
            );
        }
    }
    worst
}

/// Fold invariants over random label matrices of 500 to 2500 arguments.
pub fn fold_invariants(cases: usize) -> String {
    let mut r = rng::stream(202, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = r.random_range(500..2500);
        let rates: [f64; 14] = std::array::from_fn(|_| r.random_range(0.01..0.7));
        let m = random_matrix(n, rates, r.random());
        let plan = make_folds(&m, r.random()).unwrap();
        worst = worst.max(check_plan(&m, &plan, 2.0));
    }
    let m = random_matrix(CORPUS, corpus_rates(), 7);
    worst = worst.max(check_plan(&m, &make_folds(&m, 2023).unwrap(), 2.0));
    format!("{} matrices, max fold-rate deviation {worst:.2} pts", cases + 1)
}

/// Scoring the gold labels as predictions gives exactly 1.
pub fn gold_scores_one(cases: usize) -> String {
    let mut r = rng::stream(203, 0);
    for _ in 0..cases {
        let n = r.random_range(10..400);
        let m = random_matrix(n, std::array::from_fn(|_| r.random_range(0.0..0.6)), r.random());
        let plan = make_folds(&m, r.random()).unwrap();
        let mut perfect = PredictionSet::new("gold");
        for (rep, f, folding) in plan.iter() {
            for id in &folding.test {
                perfect.insert(rep, f, id.clone(), *m.get(id).unwrap()).unwrap();
            }
        }
        let report = score(&perfect, &m, &plan, Execution::default()).unwrap();
        assert_eq!(report.macro_f1, 1.0);
        assert!(report.per_dimension.iter().all(|&v| v == 1.0));
    }
    format!("{cases} corpora, every score 1.0")
}

/// Every artifact of the evaluation pipeline, concatenated.
pub fn pipeline_bytes(seed: u64) -> Vec<u8> {
    let m = random_matrix(400, corpus_rates(), seed);
    let plan = make_folds(&m, seed).unwrap();
    let mut out = Vec::new();
    plan.write_tsv(&mut out).unwrap();
    let weights = class_weights(&m.select(&plan.folding(0, 0).train).unwrap()).unwrap();
    weights.write_tsv(&mut out).unwrap();
    for preds in [random_baseline(&plan, seed), majority_baseline(&plan, &m).unwrap()] {
        preds.write_tsv(&mut out).unwrap();
        let report = score(&preds, &m, &plan, Execution::default()).unwrap();
        out.extend(serde_json::to_vec(&report).unwrap());
    }
    out
}

pub fn pipeline_reproducible() -> String {
    let a = pipeline_bytes(99);
    assert_eq!(a, pipeline_bytes(99));
    assert_ne!(a, pipeline_bytes(100));
    format!("{} identical bytes across runs", a.len())
}
