//! The result tables of `report`, computed from the stored corpus.

use anyhow::{bail, Result};

use appropriateness::aggregate::{
    aggregate_strategy, compare_aggregations, mace_fit, mace_labels, AnnotatorCount, LabelMatrix, MaceConfig, Strategy,
};
use appropriateness::corpus::{corpus_stats, Corpus, GroupBy, GroupStats, Source};
use appropriateness::eval::{human_performance, majority_baseline, make_folds, random_baseline, score, significance, FoldPlan, ScoreReport};
use appropriateness::report::{
    combined_table, table1a, table1b, table1c, table2, table3, table4, table5, table7, Cell, ScoreLine, SourceGroup,
    Table,
};
use appropriateness::stats::{
    agreement, dimension_correlations, external_correlations, mean_labels, pair_reason_correlations, Metric,
};
use appropriateness::{AnnotationRecord, Execution};

use crate::ReportTable;

pub struct Inputs<'a> {
    pub corpus: &'a Corpus,
    pub seed: u64,
    pub folds: Option<FoldPlan>,
    /// Additional approaches for table5.
    pub scores: Vec<ScoreReport>,
}

const ORDER: [ReportTable; 13] = [
    ReportTable::CorpusStats,
    ReportTable::Table1a,
    ReportTable::Table1b,
    ReportTable::Table1c,
    ReportTable::Table2,
    ReportTable::Table3,
    ReportTable::Table4,
    ReportTable::Table5,
    ReportTable::Table7,
    ReportTable::Table8,
    ReportTable::Table9,
    ReportTable::Table10,
    ReportTable::Table11,
];

/// Builds the requested table, or every table whose inputs are present
/// for `All` (missing ratings or pairs skip a table with a note on stderr).
pub fn build(inputs: &Inputs, which: ReportTable) -> Result<Vec<Table>> {
    if which != ReportTable::All {
        return Ok(vec![one(inputs, which)?]);
    }
    let mut out = Vec::new();
    for t in ORDER {
        if let Some(reason) = missing_input(inputs.corpus, t) {
            eprintln!("skipping {t:?}: {reason}");
            continue;
        }
        out.push(one(inputs, t)?);
    }
    Ok(out)
}

fn missing_input(corpus: &Corpus, t: ReportTable) -> Option<&'static str> {
    let quality_for = |sources: &[Source]| {
        corpus
            .ratings()
            .iter()
            .any(|r| corpus.argument(&r.argument_id).is_some_and(|a| sources.contains(&a.source)))
    };
    match t {
        ReportTable::Table3 if !quality_for(SourceGroup::Ukp.sources()) => Some("no quality ratings for UKP arguments"),
        ReportTable::Table7 if !quality_for(&GAQ) => Some("no quality ratings for GAQ arguments"),
        ReportTable::Table4 if corpus.pairs().is_empty() => Some("no convincingness pairs"),
        ReportTable::Table8 | ReportTable::Table9 | ReportTable::Table10 | ReportTable::Table11 => {
            let group = group_of(t)?;
            let sub = corpus.filtered(|a| group.sources().contains(&a.source));
            sub.annotations().is_empty().then_some("no annotated arguments in this group")
        }
        _ if t != ReportTable::CorpusStats && corpus.annotations().is_empty() => Some("no annotations"),
        _ => None,
    }
}

const GAQ: [Source; 3] = [Source::GaqDebates, Source::GaqQa, Source::GaqReviews];

fn group_of(t: ReportTable) -> Option<SourceGroup> {
    match t {
        ReportTable::Table8 => Some(SourceGroup::Ukp),
        ReportTable::Table9 => Some(SourceGroup::GaqDebates),
        ReportTable::Table10 => Some(SourceGroup::GaqQa),
        ReportTable::Table11 => Some(SourceGroup::GaqReviews),
        _ => None,
    }
}

fn conservative(records: &[AnnotationRecord]) -> Result<LabelMatrix> {
    Ok(aggregate_strategy(records, Strategy::Conservative, AnnotatorCount::Uniform)?)
}

fn one(inputs: &Inputs, which: ReportTable) -> Result<Table> {
    let corpus = inputs.corpus;
    let records = corpus.annotations();
    if which != ReportTable::CorpusStats && records.is_empty() {
        bail!("the corpus store has no annotations");
    }
    Ok(match which {
        ReportTable::CorpusStats => stats_table(corpus),
        ReportTable::Table1a => table1a(&conservative(records)?),
        ReportTable::Table1b => table1b(&agreement(records, Metric::Ordinal)?),
        ReportTable::Table1c => table1c(&dimension_correlations(records, Execution::default())?),
        ReportTable::Table2 => {
            let config = MaceConfig {
                seed: inputs.seed,
                ..MaceConfig::default()
            };
            let mace = mace_labels(&mace_fit(records, &config)?);
            let rows = Strategy::ALL
                .into_iter()
                .map(|s| {
                    let rule = aggregate_strategy(records, s, AnnotatorCount::Uniform)?;
                    Ok((s, compare_aggregations(&mace, &rule)?))
                })
                .collect::<Result<Vec<_>>>()?;
            table2(&rows)
        }
        ReportTable::Table3 => table3(&quality_correlations(corpus, SourceGroup::Ukp.sources())?),
        ReportTable::Table7 => table7(&quality_correlations(corpus, &GAQ)?),
        ReportTable::Table4 => table4(&pair_reason_correlations(corpus.pairs(), &mean_labels(records))?),
        ReportTable::Table5 => evaluation(inputs)?,
        ReportTable::Table8 | ReportTable::Table9 | ReportTable::Table10 | ReportTable::Table11 => {
            let group = group_of(which).expect("appendix table");
            let sub = corpus.filtered(|a| group.sources().contains(&a.source));
            let recs = sub.annotations();
            if recs.is_empty() {
                bail!("no annotated arguments from {}", group.tag());
            }
            combined_table(
                group.table_name(),
                &format!("Label counts, agreement and correlations for {}", group.tag()),
                &conservative(recs)?,
                &agreement(recs, Metric::Ordinal)?,
                &dimension_correlations(recs, Execution::default())?,
            )
        }
        ReportTable::All => unreachable!("handled by build"),
    })
}

fn quality_correlations(
    corpus: &Corpus,
    sources: &[Source],
) -> Result<appropriateness::stats::CorrelationMatrix> {
    let sub = corpus.filtered(|a| sources.contains(&a.source));
    let means = sub.quality_means();
    if means.is_empty() {
        bail!("no quality ratings for arguments of {sources:?}");
    }
    let qualities: Vec<String> = means.keys().cloned().collect();
    Ok(external_correlations(&mean_labels(sub.annotations()), &means, &qualities)?)
}

/// Baselines, human upper bound and any extra approaches. An extra
/// approach is marked `*` when it differs significantly from both
/// baselines.
fn evaluation(inputs: &Inputs) -> Result<Table> {
    let records = inputs.corpus.annotations();
    let gold = conservative(records)?;
    let plan = match &inputs.folds {
        Some(p) => p.clone(),
        None => make_folds(&gold, inputs.seed)?,
    };
    let exec = Execution::default();
    let random = score(&random_baseline(&plan, inputs.seed), &gold, &plan, exec)?;
    let majority = score(&majority_baseline(&plan, &gold)?, &gold, &plan, exec)?;
    let human = human_performance(records, &gold)?;
    let mut lines = vec![ScoreLine::from(&random), ScoreLine::from(&majority)];
    for extra in &inputs.scores {
        let mut line = ScoreLine::from(extra);
        let beats = |b: &ScoreReport| significance(extra, b, 0.05).map(|s| s.outcome.significant());
        if beats(&random)? && beats(&majority)? {
            line.marker = "*".into();
        }
        lines.push(line);
    }
    lines.push(ScoreLine::from(&human));
    Ok(table5(&lines))
}

fn stats_table(corpus: &Corpus) -> Table {
    let stats = corpus_stats(corpus, GroupBy::Source);
    let mut t = Table {
        name: "corpus-stats".into(),
        title: "Arguments, issues and sentences per source".into(),
        columns: ["source", "genre", "arguments", "issues", "sentences", "mean_sentences"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    let row = |name: &str, genre: String, g: &GroupStats| {
        vec![
            Cell::Text(name.to_string()),
            Cell::Text(genre),
            Cell::Count(g.arguments),
            Cell::Count(g.issues),
            Cell::Count(g.sentences),
            Cell::Value(g.mean_sentences),
        ]
    };
    for source in Source::ALL {
        if let Some(g) = stats.groups.get(source.tag()) {
            t.rows.push(row(source.tag(), source.genre().tag().to_string(), g));
        }
    }
    t.rows.push(row("total", String::new(), &stats.total));
    t
}
