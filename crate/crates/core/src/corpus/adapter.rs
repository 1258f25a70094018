//! Import of the publicly released corpus layout.
//!
//! The released gold file is a comma-separated table with one row per
//! argument:
//!
//! ```text
//! post_id, source_dataset, issue, post_text,
//! Inappropriateness, Toxic Emotions, ..., Reason Unclassified,
//! fold0.0, ..., fold4.4
//! ```
//!
//! Dimension columns carry the aggregated labels; `fold{r}.{f}` columns
//! (optional) carry `TRAIN` / `VALID` / `TEST` for repetition `r` and fold
//! `f`, both 0-based. Column lookup is by header name, so column order and
//! extra columns do not matter.

use std::collections::BTreeMap;
use std::io::Read;

use super::io::Lines;
use super::{Argument, Corpus, DuplicatePolicy, IngestReport, Source};
use crate::aggregate::{LabelMatrix, Provenance};
use crate::eval::{FoldPlan, Folding};
use crate::taxonomy::{AnnotationRecord, Dimension, ValidationMode};
use crate::tsv::{self, Table};
use crate::{Error, Result};

/// Arguments, aggregated labels and (when present) the published folds.
#[derive(Debug, Clone)]
pub struct ReleasedGold {
    pub corpus: Corpus,
    pub labels: LabelMatrix,
    pub folds: Option<FoldPlan>,
}

/// Maps the source names seen in released files onto [`Source`].
fn normalize_source(raw: &str) -> Result<Source> {
    let key: String = raw
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    let source = if key.contains("dagstuhl") {
        Source::Dagstuhl
    } else if key.contains("ukp") {
        Source::UkpConvArg2
    } else if key.contains("review") {
        Source::GaqReviews
    } else if key.contains("qa") || key.contains("question") || key.contains("forum") {
        Source::GaqQa
    } else if key.contains("debate") {
        Source::GaqDebates
    } else {
        return Err(Error::UnknownSource(raw.to_string()));
    };
    Ok(source)
}

/// Finds the column of a dimension by two-letter code or full name.
fn dimension_column(table: &Table, d: Dimension) -> Option<String> {
    table
        .headers()
        .find(|h| h.eq_ignore_ascii_case(d.code()) || h.eq_ignore_ascii_case(d.name()))
        .map(str::to_string)
}

/// Aggregated labels may be written as `0`/`1`, `0.0`/`1.0` or as a share
/// of annotators; any positive value means yes.
fn parse_label(line: usize, column: &str, value: &str) -> Result<bool> {
    let v = value.trim();
    if let Ok(b) = tsv::parse_bit(line, column, v) {
        return Ok(b);
    }
    match v.parse::<f64>() {
        Ok(x) if (0.0..=1.0).contains(&x) => Ok(x > 0.0),
        _ => Err(Error::parse(line, format!("column `{column}`: bad label `{v}`"))),
    }
}

fn fold_column(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("fold")?;
    let (r, f) = rest.split_once('.')?;
    Some((r.parse().ok()?, f.parse().ok()?))
}

pub fn import_released_gold<R: Read>(reader: R) -> Result<ReleasedGold> {
    let table = Table::read_with(reader, b',', &["post_id", "source_dataset", "issue", "post_text"])?;
    let mut columns = Vec::with_capacity(14);
    for d in Dimension::ALL {
        columns.push(dimension_column(&table, d).ok_or_else(|| {
            Error::parse(1, format!("missing column for dimension {} ({})", d.code(), d.name()))
        })?);
    }
    let mut fold_cols: Vec<((usize, usize), String)> = table
        .headers()
        .filter_map(|h| fold_column(h).map(|k| (k, h.to_string())))
        .collect();
    fold_cols.sort();

    let mut corpus = Corpus::new();
    let mut labels = LabelMatrix::new(Provenance::Conservative);
    let mut cells: BTreeMap<(usize, usize), Folding> = BTreeMap::new();
    for (line, row) in &table.rows {
        let line = *line;
        let id = table.field(line, row, "post_id")?.trim().to_string();
        let source = normalize_source(table.field(line, row, "source_dataset")?)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        corpus
            .add_argument(
                Argument {
                    argument_id: id.clone(),
                    source,
                    issue: table.field(line, row, "issue")?.to_string(),
                    text: table.field(line, row, "post_text")?.to_string(),
                },
                DuplicatePolicy::Reject,
            )
            .map_err(|e| Error::parse(line, e.to_string()))?;
        let mut row_labels = [false; 14];
        for (d, col) in columns.iter().enumerate() {
            row_labels[d] = parse_label(line, col, table.field(line, row, col)?)?;
        }
        labels.push(id.clone(), row_labels)?;
        for ((r, f), col) in &fold_cols {
            let cell = cells.entry((*r, *f)).or_insert_with(|| Folding {
                train: Vec::new(),
                dev: Vec::new(),
                test: Vec::new(),
            });
            match table.field(line, row, col)?.trim().to_ascii_uppercase().as_str() {
                "TRAIN" => cell.train.push(id.clone()),
                "VALID" | "DEV" | "VALIDATION" => cell.dev.push(id.clone()),
                "TEST" => cell.test.push(id.clone()),
                "" => {}
                other => return Err(Error::parse(line, format!("column `{col}`: unknown split `{other}`"))),
            }
        }
    }
    corpus.log("released-gold", labels.len());

    let folds = if cells.is_empty() {
        None
    } else {
        let repetitions = cells.keys().map(|k| k.0 + 1).max().unwrap_or(0);
        let folds = cells.keys().map(|k| k.1 + 1).max().unwrap_or(0);
        if cells.len() != repetitions * folds {
            return Err(Error::InvalidInput("fold columns do not form a full grid".into()));
        }
        let mut foldings: Vec<Vec<Folding>> = vec![Vec::new(); repetitions];
        for ((r, _), cell) in cells {
            foldings[r].push(cell);
        }
        let plan = FoldPlan {
            seed: None,
            repetitions,
            folds,
            foldings,
        };
        plan.check()?;
        Some(plan)
    };
    Ok(ReleasedGold { corpus, labels, folds })
}

const ID_COLUMNS: [&str; 3] = ["argument_id", "post_id", "id"];
const ANNOTATOR_COLUMNS: [&str; 4] = ["annotator_id", "annotator", "worker_id", "worker"];

fn first_present(table: &Table, names: &[&str]) -> Option<String> {
    names.iter().find(|n| table.has(n)).map(|n| n.to_string())
}

/// Reads per-annotator records from a tab- or comma-separated file whose
/// header names the argument (`argument_id` / `post_id`), the annotator
/// (`annotator_id` / `annotator` / `worker_id`) and every dimension by code
/// or full name. `IN` must hold the raw 1..=3 rating. The delimiter is
/// taken from the header line.
pub fn import_released_annotations<R: Read>(
    corpus: &mut Corpus,
    mut reader: R,
    mode: ValidationMode,
) -> Result<IngestReport> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let header = text.lines().next().unwrap_or_default();
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };
    let table = Table::read_with(text.as_bytes(), delimiter, &[])?;
    let id_col = first_present(&table, &ID_COLUMNS)
        .ok_or_else(|| Error::parse(1, "no argument id column (argument_id / post_id)"))?;
    let who_col = first_present(&table, &ANNOTATOR_COLUMNS)
        .ok_or_else(|| Error::parse(1, "no annotator column (annotator_id / annotator / worker_id)"))?;
    let mut columns = Vec::with_capacity(14);
    for d in Dimension::ALL {
        columns.push(dimension_column(&table, d).ok_or_else(|| {
            Error::parse(1, format!("missing column for dimension {} ({})", d.code(), d.name()))
        })?);
    }
    let ru_col = first_present(&table, &["ru_text", "ru_free_text"]);
    let batch_col = first_present(&table, &["batch_id", "batch"]);

    let parsed: Lines<AnnotationRecord> = table
        .rows
        .iter()
        .map(|(line, row)| {
            let line = *line;
            let record = (|| -> Result<AnnotationRecord> {
                let rating = table.field(line, row, &columns[0])?.trim();
                let in_rating = match rating.parse::<f64>() {
                    Ok(x) if x == 1.0 || x == 2.0 || x == 3.0 => x as u8,
                    _ => return Err(Error::parse(line, format!("IN rating `{rating}` is not 1, 2 or 3"))),
                };
                let mut record = AnnotationRecord::appropriate(
                    table.field(line, row, &id_col)?.trim(),
                    table.field(line, row, &who_col)?.trim(),
                )
                .with_rating(in_rating);
                for d in Dimension::FLAGS {
                    let col = &columns[d.index()];
                    record = record.with(d, parse_label(line, col, table.field(line, row, col)?)?);
                }
                record.ru_free_text = ru_col
                    .as_deref()
                    .and_then(|c| table.get(row, c))
                    .map(str::to_string)
                    .filter(|t| !t.trim().is_empty());
                record.batch_id = batch_col
                    .as_deref()
                    .and_then(|c| table.get(row, c))
                    .unwrap_or_default()
                    .to_string();
                Ok(record)
            })();
            (line, record.map_err(|e| e.to_string()))
        })
        .collect();
    let report = corpus.ingest_records(parsed, mode, DuplicatePolicy::Reject);
    corpus.log("released-annotations", report.ingested);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let mut cols = vec!["post_id".to_string(), "source_dataset".into(), "issue".into(), "post_text".into()];
        cols.extend(Dimension::ALL.iter().map(|d| d.name().to_string()));
        for r in 0..2 {
            for f in 0..2 {
                cols.push(format!("fold{r}.{f}"));
            }
        }
        cols.join(",")
    }

    #[test]
    fn gold_with_folds() {
        let mut text = header();
        text.push('\n');
        let splits = [["TEST", "TRAIN", "TEST", "VALID"], ["TRAIN", "TEST", "VALID", "TEST"]];
        for (i, s) in splits.iter().enumerate() {
            let labels: Vec<&str> = (0..14).map(|d| if d == 0 || d == 13 && i == 1 { "1.0" } else { "0.0" }).collect();
            text.push_str(&format!(
                "p{i},GAQ QA forums,\"issue, {i}\",text {i},{},{}\n",
                labels.join(","),
                s.join(",")
            ));
        }
        let gold = import_released_gold(text.as_bytes()).unwrap();
        assert_eq!(gold.corpus.arguments().len(), 2);
        assert_eq!(gold.corpus.arguments()[0].source, Source::GaqQa);
        assert_eq!(gold.corpus.arguments()[0].issue, "issue, 0");
        assert_eq!(gold.labels.yes_count(Dimension::IN), 2);
        assert_eq!(gold.labels.yes_count(Dimension::RU), 1);
        let plan = gold.folds.unwrap();
        assert_eq!((plan.repetitions, plan.folds), (2, 2));
        assert_eq!(plan.folding(1, 1).dev, vec!["p0".to_string()]);
    }

    #[test]
    fn source_aliases() {
        assert_eq!(normalize_source("Dagstuhl-15512").unwrap(), Source::Dagstuhl);
        assert_eq!(normalize_source("UKPConvArg2").unwrap(), Source::UkpConvArg2);
        assert_eq!(normalize_source("gaq-debates").unwrap(), Source::GaqDebates);
        assert_eq!(normalize_source("GAQ reviews").unwrap(), Source::GaqReviews);
        assert!(normalize_source("reddit").is_err());
    }

    #[test]
    fn annotations_by_full_name() {
        let mut corpus = Corpus::new();
        corpus
            .add_argument(
                Argument {
                    argument_id: "p0".into(),
                    source: Source::Dagstuhl,
                    issue: "i".into(),
                    text: "t".into(),
                },
                DuplicatePolicy::Reject,
            )
            .unwrap();
        let mut cols = vec!["post_id".to_string(), "annotator".into()];
        cols.extend(Dimension::ALL.iter().map(|d| d.name().to_string()));
        let mut text = cols.join("\t");
        text.push('\n');
        let row = |who: &str, rating: &str, te: &str, ei: &str| {
            let mut cells = vec!["p0".to_string(), who.to_string(), rating.to_string(), te.into(), ei.into()];
            cells.extend(std::iter::repeat_n("0".to_string(), 11));
            cells.join("\t") + "\n"
        };
        text.push_str(&row("a", "2", "1", "1"));
        text.push_str(&row("b", "3", "0", "0"));
        text.push_str(&row("c", "2", "0", "1"));
        let report = import_released_annotations(&mut corpus, text.as_bytes(), ValidationMode::Lenient).unwrap();
        assert_eq!(report.ingested, 3);
        assert_eq!(report.repairs.len(), 1);
        assert!(corpus.annotations()[2].flag(Dimension::TE));
    }
}
