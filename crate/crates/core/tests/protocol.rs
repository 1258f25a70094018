//! Properties of aggregation, fold construction, scoring and the
//! end-to-end evaluation pipeline.

mod common;

use appropriateness::aggregate::{LabelMatrix, Provenance};
use appropriateness::eval::{
    majority_baseline, make_folds, make_folds_with, random_baseline, score, significance, two_class_f1, FoldConfig,
    PredictionSet,
};
use appropriateness::stats::{wilcoxon_signed_rank, WilcoxonOutcome};
use appropriateness::taxonomy::Dimension;
use appropriateness::Execution;
use common::suites::{self, check_plan, random_matrix, CORPUS};
use proptest::prelude::*;

fn rates() -> [f64; 14] {
    suites::corpus_rates()
}

#[test]
fn strategies_are_nested_on_random_vote_matrices() {
    suites::strategy_nesting(1000);
}

#[test]
fn folds_on_a_corpus_sized_matrix() {
    let m = random_matrix(CORPUS, rates(), 7);
    let plan = make_folds(&m, 2023).unwrap();
    for (_, _, f) in plan.iter() {
        assert!(f.test.len() == 438 || f.test.len() == 439);
    }
    check_plan(&m, &plan, 2.0);
    assert_eq!(plan, make_folds(&m, 2023).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// With at least 500 arguments each test fold holds 100 or more, and the
    /// per-dimension rates stay within 2 points of the corpus rate.
    #[test]
    fn fold_invariants_hold_on_random_matrices(
        n in 500usize..1500,
        seed in any::<u64>(),
        rates in prop::array::uniform14(0.01f64..0.7),
    ) {
        let m = random_matrix(n, rates, seed);
        let plan = make_folds(&m, seed ^ 0x5eed).unwrap();
        check_plan(&m, &plan, 2.0);
    }

    /// Small corpora: partition and split sizes still hold. Fourteen joint
    /// constraints cannot always be met to within one argument, so the
    /// stratification bound here is two.
    #[test]
    fn fold_partition_on_small_matrices(n in 10usize..120, seed in any::<u64>()) {
        let m = random_matrix(n, [0.3; 14], seed);
        let plan = make_folds_with(&m, FoldConfig::standard(seed)).unwrap();
        plan.check().unwrap();
        let nf = n as f64;
        for (_, _, f) in plan.iter() {
            prop_assert!((f.test.len() as f64 - 0.2 * nf).abs() <= 1.0);
            prop_assert!((f.dev.len() as f64 - 0.1 * nf).abs() <= 1.0);
            prop_assert!((f.train.len() as f64 - 0.7 * nf).abs() <= 1.0);
            let test = m.select(&f.test).unwrap();
            for d in Dimension::ALL {
                let got = test.iter().filter(|r| r[d.index()]).count() as f64;
                let want = m.yes_count(d) as f64 * test.len() as f64 / nf;
                prop_assert!((got - want).abs() <= 2.0 + 1e-9, "{d}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn gold_scores_one(n in 10usize..200, seed in any::<u64>()) {
        let m = random_matrix(n, [0.2; 14], seed);
        let plan = make_folds(&m, seed).unwrap();
        let mut perfect = PredictionSet::new("gold");
        for (r, f, folding) in plan.iter() {
            for id in &folding.test {
                perfect.insert(r, f, id.clone(), *m.get(id).unwrap()).unwrap();
            }
        }
        let report = score(&perfect, &m, &plan, Execution::Sequential).unwrap();
        prop_assert_eq!(report.macro_f1, 1.0);
        prop_assert!(report.per_dimension.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn two_class_f1_is_class_symmetric(pairs in prop::collection::vec(any::<(bool, bool)>(), 1..200)) {
        let (p, g): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let np: Vec<bool> = p.iter().map(|b| !b).collect();
        let ng: Vec<bool> = g.iter().map(|b| !b).collect();
        let a = two_class_f1(&p, &g).unwrap();
        let b = two_class_f1(&np, &ng).unwrap();
        prop_assert!((a - b).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
    }
}

/// Expected two-class macro F1 of predicting "no" everywhere at rate r.
fn majority_no(r: f64) -> f64 {
    (1.0 - r) / (2.0 - r)
}

#[test]
fn majority_baseline_matches_the_closed_form() {
    // Exact rates in every fold: 40 arguments per test fold, positives spread
    // evenly so each fold has the same rate as the corpus.
    let n = 200;
    let mut m = LabelMatrix::new(Provenance::Conservative);
    for i in 0..n {
        let row: [bool; 14] = std::array::from_fn(|d| i % 20 < d.min(9));
        m.push(format!("x{i:03}"), row).unwrap();
    }
    let plan = make_folds(&m, 3).unwrap();
    let preds = majority_baseline(&plan, &m).unwrap();
    let report = score(&preds, &m, &plan, Execution::Sequential).unwrap();
    for d in 0..14 {
        let r = m.rows().iter().filter(|row| row[d]).count() as f64 / n as f64;
        let expected = if r == 0.0 { 1.0 } else { majority_no(r) };
        let per_fold_rates_equal = report.folds.iter().all(|f| (f.f1[d] - expected).abs() < 1e-12);
        assert!(per_fold_rates_equal, "dimension {d}: {:?} vs {expected}", report.folds[0].f1[d]);
    }
}

#[test]
fn baselines_at_corpus_marginals() {
    // Independent labels at the corpus yes-rates. Random guessing has
    // expected F1 r / (r + 1/2) on the yes class and (1 - r) / (3/2 - r) on
    // the no class; the majority baseline follows the closed form above
    // (or its mirror image for IN, whose majority is yes).
    let m = random_matrix(CORPUS, rates(), 11);
    let plan = make_folds(&m, 11).unwrap();
    let random = score(&random_baseline(&plan, 11), &m, &plan, Execution::default()).unwrap();
    let majority = score(&majority_baseline(&plan, &m).unwrap(), &m, &plan, Execution::default()).unwrap();
    let mut expected_random = 0.0;
    let mut expected_majority = 0.0;
    for d in 0..14 {
        let r = m.rows().iter().filter(|row| row[d]).count() as f64 / CORPUS as f64;
        let er = (r / (r + 0.5) + (1.0 - r) / (1.5 - r)) / 2.0;
        let em = if r > 0.5 { majority_no(1.0 - r) } else { majority_no(r) };
        assert!((random.per_dimension[d] - er).abs() < 0.03, "random {d}");
        assert!((majority.per_dimension[d] - em).abs() < 0.01, "majority {d}");
        expected_random += er / 14.0;
        expected_majority += em / 14.0;
    }
    assert!((random.macro_f1 - expected_random).abs() < 0.01);
    assert!((majority.macro_f1 - expected_majority).abs() < 0.005);
    assert!((majority.get(Dimension::RU) - 0.50).abs() < 0.01);
    let verdict = significance(&random, &majority, 0.05).unwrap();
    assert!(verdict.outcome.test().is_some());
}

#[test]
fn pipeline_is_byte_reproducible() {
    suites::pipeline_reproducible();
}

#[test]
fn significance_edge_cases() {
    let m = random_matrix(300, rates(), 8);
    let plan = make_folds(&m, 8).unwrap();
    let a = score(&random_baseline(&plan, 8), &m, &plan, Execution::Sequential).unwrap();
    let same = significance(&a, &a, 0.05).unwrap();
    assert!(same.outcome.test().is_none_or(|t| !t.significant));

    let high: Vec<f64> = (0..25).map(|i| 0.5 + f64::from(i) / 100.0).collect();
    let low: Vec<f64> = high.iter().map(|x| x - 0.1 - x / 10.0).collect();
    let WilcoxonOutcome::Test(t) = wilcoxon_signed_rank(&high, &low, 0.05).unwrap() else {
        panic!("no test")
    };
    assert!(t.significant);
    assert!((t.p_value - 2.0 / 2f64.powi(25)).abs() < 1e-18, "{}", t.p_value);
    let WilcoxonOutcome::Test(r) = wilcoxon_signed_rank(&low, &high, 0.05).unwrap() else {
        panic!("no test")
    };
    assert_eq!(r.p_value, t.p_value);

    let other = make_folds(&m, 9).unwrap();
    let b = score(&random_baseline(&other, 8), &m, &other, Execution::Sequential).unwrap();
    assert!(significance(&a, &b, 0.05).is_err());
}

#[test]
fn parallel_and_sequential_scores_agree() {
    let m = random_matrix(300, rates(), 5);
    let plan = make_folds(&m, 5).unwrap();
    let preds = random_baseline(&plan, 5);
    assert_eq!(
        score(&preds, &m, &plan, Execution::Sequential).unwrap(),
        score(&preds, &m, &plan, Execution::Parallel).unwrap()
    );
}

#[test]
fn coverage_gaps_are_counted() {
    let m = random_matrix(50, rates(), 5);
    let plan = make_folds(&m, 5).unwrap();
    let mut preds = random_baseline(&plan, 5);
    let first = preds.rows.keys().next().unwrap().clone();
    preds.rows.remove(&first);
    preds.insert(0, 0, "stranger", [false; 14]).unwrap();
    match score(&preds, &m, &plan, Execution::Sequential) {
        Err(appropriateness::Error::Coverage { missing, unexpected, .. }) => {
            assert_eq!((missing, unexpected), (1, 1));
        }
        other => panic!("{other:?}"),
    }
}
