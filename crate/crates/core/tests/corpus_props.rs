//! Referential integrity and ingestion properties of the corpus store.

use appropriateness::corpus::{
    corpus_stats, Argument, Corpus, DuplicatePolicy, Format, GroupBy, PairReason, QualityRating, ReasonCode,
    Source,
};
use appropriateness::taxonomy::close;
use appropriateness::{AnnotationRecord, Dimension, Error, ValidationMode};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Argument(u8, u8),
    Annotation(u8, u8, u16),
    Rating(u8, u8, u8),
    Pair(u8, u8, u8),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..12, 0u8..5).prop_map(|(a, s)| Op::Argument(a, s)),
        (0u8..12, 0u8..4, any::<u16>()).prop_map(|(a, w, f)| Op::Annotation(a, w, f)),
        (0u8..12, 0u8..3, 0u8..5).prop_map(|(a, r, s)| Op::Rating(a, r, s)),
        (0u8..12, 0u8..12, 0u8..17).prop_map(|(a, b, c)| Op::Pair(a, b, c)),
    ]
}

/// A strictly valid record: appropriate, or inappropriate with at least
/// toxic emotions plus whatever the bits select.
fn record(argument: &str, annotator: &str, flags: u16) -> AnnotationRecord {
    let rating = 1 + (flags % 3) as u8;
    let mut r = AnnotationRecord::appropriate(argument, annotator);
    if rating < 3 {
        r = r.with_rating(rating).with(Dimension::TE, true);
        for (i, d) in Dimension::FLAGS.into_iter().enumerate() {
            if flags >> (i + 2) & 1 == 1 {
                r = r.with(d, true);
            }
        }
    }
    close(&r)
}

fn argument(a: u8, s: u8) -> Argument {
    Argument {
        argument_id: format!("a{a}"),
        source: Source::ALL[usize::from(s)],
        issue: format!("Issue {}", a % 4),
        text: "First claim. Second claim!".to_string(),
    }
}

fn referenced_ids(c: &Corpus) -> Vec<String> {
    let mut ids: Vec<String> = c.annotations().iter().map(|r| r.argument_id.clone()).collect();
    ids.extend(c.ratings().iter().map(|r| r.argument_id.clone()));
    for p in c.pairs() {
        ids.push(p.more_convincing_id.clone());
        ids.push(p.less_convincing_id.clone());
    }
    ids
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Whatever the insertion order, nothing ever points at a missing
    /// argument, and an insert fails exactly when its target is missing.
    #[test]
    fn references_always_resolve(ops in prop::collection::vec(op(), 0..80)) {
        let mut c = Corpus::new();
        for op in ops {
            match op {
                Op::Argument(a, s) => {
                    let known = c.contains(&format!("a{a}"));
                    let res = c.add_argument(argument(a, s), DuplicatePolicy::SkipWithWarning);
                    prop_assert_eq!(res.unwrap(), !known);
                }
                Op::Annotation(a, w, f) => {
                    let id = format!("a{a}");
                    let known = c.contains(&id);
                    let res = c.add_annotation(record(&id, &format!("w{w}"), f), DuplicatePolicy::Reject, true);
                    match res {
                        Ok(_) => prop_assert!(known),
                        Err(Error::UnknownArgument(missing)) => {
                            prop_assert!(!known);
                            prop_assert_eq!(missing, id);
                        }
                        Err(e) => prop_assert!(false, "{e}"),
                    }
                }
                Op::Rating(a, r, s) => {
                    let id = format!("a{a}");
                    let known = c.contains(&id);
                    let rating = QualityRating {
                        argument_id: id,
                        dimension: "appropriateness".into(),
                        rater_id: format!("r{r}"),
                        score: s,
                    };
                    match c.add_rating(rating, DuplicatePolicy::SkipWithWarning) {
                        Ok(_) => prop_assert!(known && (1..=3).contains(&s)),
                        Err(Error::RatingOutOfRange(_)) => prop_assert!(!(1..=3).contains(&s)),
                        Err(Error::UnknownArgument(_)) => prop_assert!(!known),
                        Err(e) => prop_assert!(false, "{e}"),
                    }
                }
                Op::Pair(a, b, reason) => {
                    let (x, y) = (format!("a{a}"), format!("a{b}"));
                    let both = c.contains(&x) && c.contains(&y);
                    let pair = PairReason {
                        pair_id: format!("{x}_{y}"),
                        more_convincing_id: x,
                        less_convincing_id: y,
                        reason: ReasonCode::ALL[usize::from(reason)],
                    };
                    let res = c.add_pair(pair);
                    prop_assert_eq!(res.is_ok(), both && a != b);
                }
            }
            for id in referenced_ids(&c) {
                prop_assert!(c.contains(&id), "dangling reference to {}", id);
            }
        }
    }

    /// Ingesting the same annotation file twice under skip-with-warning
    /// leaves the store unchanged the second time.
    #[test]
    fn repeated_ingestion_is_idempotent(
        flags in prop::collection::vec((0u8..6, 0u8..3, any::<u16>()), 1..40),
    ) {
        let mut c = Corpus::new();
        for a in 0..6 {
            c.add_argument(argument(a, a % 5), DuplicatePolicy::Reject).unwrap();
        }
        let mut seen = std::collections::HashSet::new();
        let records: Vec<AnnotationRecord> = flags
            .into_iter()
            .filter(|(a, w, _)| seen.insert((*a, *w)))
            .map(|(a, w, f)| record(&format!("a{a}"), &format!("w{w}"), f))
            .collect();
        let mut file = Vec::new();
        appropriateness::corpus::write_annotations(&mut file, Format::Jsonl, &records).unwrap();

        let first = c
            .ingest_annotations(&file[..], Format::Jsonl, ValidationMode::Strict, DuplicatePolicy::SkipWithWarning)
            .unwrap();
        prop_assert_eq!(first.ingested, records.len(), "{:?}", first.rejected);
        let snapshot = c.annotations().to_vec();
        let second = c
            .ingest_annotations(&file[..], Format::Jsonl, ValidationMode::Strict, DuplicatePolicy::SkipWithWarning)
            .unwrap();
        prop_assert_eq!(second.ingested, 0);
        prop_assert_eq!(c.annotations(), &snapshot[..]);
    }

    #[test]
    fn group_totals_add_up(args in prop::collection::vec((0u8..60, 0u8..5), 0..60)) {
        let mut c = Corpus::new();
        for (a, s) in args {
            c.add_argument(argument(a, s), DuplicatePolicy::SkipWithWarning).unwrap();
        }
        for by in [GroupBy::Source, GroupBy::Genre] {
            let stats = corpus_stats(&c, by);
            let sum: usize = stats.groups.values().map(|g| g.arguments).sum();
            let sentences: usize = stats.groups.values().map(|g| g.sentences).sum();
            prop_assert_eq!(sum, stats.total.arguments);
            prop_assert_eq!(sentences, stats.total.sentences);
            prop_assert_eq!(stats.total.sentences, 2 * stats.total.arguments);
            let issues: usize = stats.groups.values().map(|g| g.issues).sum();
            prop_assert!(issues >= stats.total.issues);
        }
    }
}
