//! Canonical TSV / JSONL schemas for corpus collections.
//!
//! ```text
//! arguments.tsv    argument_id  source  issue  text
//! annotations.tsv  argument_id  annotator_id  batch_id  IN  TE ... RU  ru_text
//! ratings.tsv      argument_id  dimension  rater_id  score
//! pairs.tsv        pair_id  more_convincing_id  less_convincing_id  reason
//! ```
//!
//! Binary cells are `0`/`1`, `IN` is `1`/`2`/`3`. JSONL files carry one
//! serde-encoded object per line with the same field names.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    Argument, Corpus, DuplicatePolicy, IngestReport, LineIssue, PairReason, QualityRating,
    ReasonCode, Repair, Source,
};
use crate::taxonomy::{self, AnnotationRecord, Dimension, ValidationMode, Violation};
use crate::tsv::{self, Table};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Tsv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Format::Tsv),
            "jsonl" | "json" => Ok(Format::Jsonl),
            other => Err(Error::InvalidInput(format!("unknown format `{other}`"))),
        }
    }
}

pub(crate) const ARGUMENT_COLUMNS: [&str; 4] = ["argument_id", "source", "issue", "text"];
pub(crate) const RATING_COLUMNS: [&str; 4] = ["argument_id", "dimension", "rater_id", "score"];
pub(crate) const PAIR_COLUMNS: [&str; 4] =
    ["pair_id", "more_convincing_id", "less_convincing_id", "reason"];

pub(crate) fn annotation_columns() -> Vec<&'static str> {
    let mut cols = vec!["argument_id", "annotator_id", "batch_id"];
    cols.extend(Dimension::ALL.iter().map(|d| d.code()));
    cols.push("ru_text");
    cols
}

/// Per-line parse outcome: either a value or a line-scoped problem.
pub type Lines<T> = Vec<(usize, std::result::Result<T, String>)>;

fn jsonl_lines<T: DeserializeOwned, R: Read>(reader: R) -> Result<Lines<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, serde_json::from_str(&line).map_err(|e| e.to_string())));
    }
    Ok(out)
}

fn write_jsonl<T: Serialize, W: Write>(mut out: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_arguments<R: Read>(reader: R, format: Format) -> Result<Vec<(usize, Argument)>> {
    match format {
        Format::Jsonl => jsonl_lines::<Argument, _>(reader)?
            .into_iter()
            .map(|(line, r)| r.map(|a| (line, a)).map_err(|m| Error::parse(line, m)))
            .collect(),
        Format::Tsv => {
            let table = Table::read(reader, &ARGUMENT_COLUMNS)?;
            table
                .rows
                .iter()
                .map(|(line, row)| {
                    let line = *line;
                    let source = table.field(line, row, "source")?;
                    let source = Source::from_str(source)?;
                    Ok((
                        line,
                        Argument {
                            argument_id: table.field(line, row, "argument_id")?.to_string(),
                            source,
                            issue: table.field(line, row, "issue")?.to_string(),
                            text: table.field(line, row, "text")?.to_string(),
                        },
                    ))
                })
                .collect()
        }
    }
}

fn parse_annotation_row(table: &Table, line: usize, row: &csv::StringRecord) -> Result<AnnotationRecord> {
    let rating_cell = table.field(line, row, "IN")?.trim();
    let in_rating: u8 = match rating_cell {
        "1" => 1,
        "2" => 2,
        "3" => 3,
        other => {
            return Err(Error::parse(line, format!("IN rating `{other}` is not 1, 2 or 3")));
        }
    };
    let mut flags = BTreeMap::new();
    for d in Dimension::FLAGS {
        let cell = table.field(line, row, d.code())?;
        flags.insert(d, tsv::parse_bit(line, d.code(), cell)?);
    }
    let ru_text = table
        .get(row, "ru_text")
        .map(str::to_string)
        .filter(|t| !t.trim().is_empty());
    Ok(AnnotationRecord {
        argument_id: table.field(line, row, "argument_id")?.to_string(),
        annotator_id: table.field(line, row, "annotator_id")?.to_string(),
        in_rating,
        flags,
        ru_free_text: ru_text,
        batch_id: table.get(row, "batch_id").unwrap_or_default().to_string(),
        submitted_at: None,
    })
}

impl Corpus {
    /// Adds every argument of the stream. The whole file is rejected on the
    /// first parse error, unknown source or (under `Reject`) duplicate id.
    pub fn ingest_arguments<R: Read>(
        &mut self,
        reader: R,
        format: Format,
        duplicates: DuplicatePolicy,
    ) -> Result<usize> {
        let parsed = parse_arguments(reader, format)?;
        let mut seen = HashSet::new();
        let mut fresh = Vec::with_capacity(parsed.len());
        for (line, arg) in parsed {
            if arg.text.trim().is_empty() {
                return Err(Error::parse(line, format!("argument `{}` has empty text", arg.argument_id)));
            }
            let dup = self.contains(&arg.argument_id) || !seen.insert(arg.argument_id.clone());
            if dup {
                match duplicates {
                    DuplicatePolicy::Reject => return Err(Error::DuplicateId(arg.argument_id)),
                    DuplicatePolicy::SkipWithWarning => {
                        log::warn!("line {line}: skipping duplicate argument `{}`", arg.argument_id);
                        continue;
                    }
                }
            }
            fresh.push(arg);
        }
        let n = fresh.len();
        for arg in fresh {
            self.add_argument(arg, DuplicatePolicy::Reject)?;
        }
        self.log("arguments", n);
        Ok(n)
    }

    /// Adds annotation records, validating each against the taxonomy.
    ///
    /// Structural problems, unknown arguments and (in strict mode) rule
    /// violations reject the offending line only. Lenient mode repairs
    /// records by closure and reports every repair.
    pub fn ingest_annotations<R: Read>(
        &mut self,
        reader: R,
        format: Format,
        mode: ValidationMode,
        duplicates: DuplicatePolicy,
    ) -> Result<IngestReport> {
        let parsed = parse_annotations(reader, format)?;
        let report = self.ingest_records(parsed, mode, duplicates);
        self.log("annotations", report.ingested);
        Ok(report)
    }

    /// Shared validation path for parsed annotation lines.
    pub(crate) fn ingest_records(
        &mut self,
        parsed: Lines<AnnotationRecord>,
        mode: ValidationMode,
        duplicates: DuplicatePolicy,
    ) -> IngestReport {
        let mut report = IngestReport::default();
        for (line, parsed) in parsed {
            let record = match parsed {
                Ok(r) => r,
                Err(message) => {
                    report.rejected.push(LineIssue { line, message });
                    continue;
                }
            };
            let verdict = match taxonomy::validate(&record, mode) {
                Ok(v) => v,
                Err(e) => {
                    report.rejected.push(LineIssue {
                        line,
                        message: format!("malformed record: {e}"),
                    });
                    continue;
                }
            };
            let record = match mode {
                ValidationMode::Strict => {
                    if !verdict.is_ok() {
                        let text: Vec<String> = verdict.violations.iter().map(|v| v.to_string()).collect();
                        report.rejected.push(LineIssue {
                            line,
                            message: format!("violations: {}", text.join("; ")),
                        });
                        continue;
                    }
                    record
                }
                ValidationMode::Lenient => {
                    let closed = taxonomy::close(&record);
                    if closed != record {
                        let upward: Vec<Violation> = taxonomy::validate(&record, ValidationMode::Strict)
                            .map(|r| r.violations)
                            .unwrap_or_default()
                            .into_iter()
                            .filter(|v| {
                                matches!(
                                    v,
                                    Violation::SubWithoutParent { .. }
                                        | Violation::CoreWithoutInappropriateness { .. }
                                )
                            })
                            .collect();
                        log::info!(
                            "line {line}: repaired {}/{} by closure",
                            record.argument_id,
                            record.annotator_id
                        );
                        report.repairs.push(Repair {
                            line,
                            argument_id: record.argument_id.clone(),
                            annotator_id: record.annotator_id.clone(),
                            violations: upward,
                        });
                    }
                    closed
                }
            };
            match self.add_annotation(record, duplicates, false) {
                Ok(true) => report.ingested += 1,
                Ok(false) => report.skipped.push(LineIssue {
                    line,
                    message: "duplicate (argument, annotator) skipped".into(),
                }),
                Err(e) => report.rejected.push(LineIssue {
                    line,
                    message: e.to_string(),
                }),
            }
        }
        report
    }

    pub fn ingest_ratings<R: Read>(
        &mut self,
        reader: R,
        format: Format,
        duplicates: DuplicatePolicy,
    ) -> Result<IngestReport> {
        let parsed: Lines<QualityRating> = match format {
            Format::Jsonl => jsonl_lines(reader)?,
            Format::Tsv => {
                let table = Table::read(reader, &RATING_COLUMNS)?;
                table
                    .rows
                    .iter()
                    .map(|(line, row)| {
                        let r = (|| -> Result<QualityRating> {
                            let score = table.field(*line, row, "score")?.trim();
                            let score: u8 = score
                                .parse()
                                .map_err(|_| Error::parse(*line, format!("score `{score}` is not an integer")))?;
                            Ok(QualityRating {
                                argument_id: table.field(*line, row, "argument_id")?.to_string(),
                                dimension: table.field(*line, row, "dimension")?.trim().to_string(),
                                rater_id: table.field(*line, row, "rater_id")?.to_string(),
                                score,
                            })
                        })();
                        (*line, r.map_err(|e| e.to_string()))
                    })
                    .collect()
            }
        };
        let mut report = IngestReport::default();
        for (line, r) in parsed {
            let outcome = r.and_then(|q| self.add_rating(q, duplicates).map_err(|e| e.to_string()));
            match outcome {
                Ok(true) => report.ingested += 1,
                Ok(false) => report.skipped.push(LineIssue { line, message: "duplicate rating skipped".into() }),
                Err(message) => report.rejected.push(LineIssue { line, message }),
            }
        }
        self.log("ratings", report.ingested);
        Ok(report)
    }

    pub fn ingest_pairs<R: Read>(&mut self, reader: R, format: Format) -> Result<IngestReport> {
        let parsed: Lines<PairReason> = match format {
            Format::Jsonl => jsonl_lines(reader)?,
            Format::Tsv => {
                let table = Table::read(reader, &PAIR_COLUMNS)?;
                table
                    .rows
                    .iter()
                    .map(|(line, row)| {
                        let r = (|| -> Result<PairReason> {
                            Ok(PairReason {
                                pair_id: table.field(*line, row, "pair_id")?.to_string(),
                                more_convincing_id: table.field(*line, row, "more_convincing_id")?.to_string(),
                                less_convincing_id: table.field(*line, row, "less_convincing_id")?.to_string(),
                                reason: ReasonCode::from_str(table.field(*line, row, "reason")?)?,
                            })
                        })();
                        (*line, r.map_err(|e| e.to_string()))
                    })
                    .collect()
            }
        };
        let mut report = IngestReport::default();
        for (line, p) in parsed {
            match p.and_then(|p| self.add_pair(p).map_err(|e| e.to_string())) {
                Ok(true) => report.ingested += 1,
                Ok(false) => report.skipped.push(LineIssue { line, message: "duplicate pair reason skipped".into() }),
                Err(message) => report.rejected.push(LineIssue { line, message }),
            }
        }
        self.log("pairs", report.ingested);
        Ok(report)
    }

    pub fn write_arguments<W: Write>(&self, out: W, format: Format) -> Result<()> {
        match format {
            Format::Jsonl => write_jsonl(out, &self.arguments),
            Format::Tsv => {
                let mut w = tsv::writer(out);
                w.write_record(ARGUMENT_COLUMNS)?;
                for a in &self.arguments {
                    w.write_record([a.argument_id.as_str(), a.source.tag(), &a.issue, &a.text])?;
                }
                w.flush()?;
                Ok(())
            }
        }
    }

    pub fn write_annotations<W: Write>(&self, out: W, format: Format) -> Result<()> {
        write_annotations(out, format, &self.annotations)
    }

    pub fn write_ratings<W: Write>(&self, out: W, format: Format) -> Result<()> {
        match format {
            Format::Jsonl => write_jsonl(out, &self.ratings),
            Format::Tsv => {
                let mut w = tsv::writer(out);
                w.write_record(RATING_COLUMNS)?;
                for r in &self.ratings {
                    w.write_record([&r.argument_id, &r.dimension, &r.rater_id, &r.score.to_string()])?;
                }
                w.flush()?;
                Ok(())
            }
        }
    }

    pub fn write_pairs<W: Write>(&self, out: W, format: Format) -> Result<()> {
        match format {
            Format::Jsonl => write_jsonl(out, &self.pairs),
            Format::Tsv => {
                let mut w = tsv::writer(out);
                w.write_record(PAIR_COLUMNS)?;
                for p in &self.pairs {
                    w.write_record([&p.pair_id, &p.more_convincing_id, &p.less_convincing_id, p.reason.tag()])?;
                }
                w.flush()?;
                Ok(())
            }
        }
    }
}

/// Parses an annotation file without checking it against any corpus.
/// Each entry is a 1-based line number with the record or a message
/// saying why the line could not be read.
pub fn parse_annotations<R: Read>(reader: R, format: Format) -> Result<Lines<AnnotationRecord>> {
    Ok(match format {
        Format::Jsonl => jsonl_lines(reader)?,
        Format::Tsv => {
            let cols = annotation_columns();
            let required: Vec<&str> = cols.iter().copied().filter(|c| *c != "ru_text").collect();
            let table = Table::read(reader, &required)?;
            table
                .rows
                .iter()
                .map(|(line, row)| (*line, parse_annotation_row(&table, *line, row).map_err(|e| e.to_string())))
                .collect()
        }
    })
}

/// Writes records in the canonical annotation schema.
pub fn write_annotations<W: Write>(out: W, format: Format, records: &[AnnotationRecord]) -> Result<()> {
    match format {
        Format::Jsonl => write_jsonl(out, records),
        Format::Tsv => {
            let mut w = tsv::writer(out);
            w.write_record(annotation_columns())?;
            for r in records {
                let mut row: Vec<String> = vec![r.argument_id.clone(), r.annotator_id.clone(), r.batch_id.clone()];
                row.push(r.in_rating.to_string());
                for d in Dimension::FLAGS {
                    row.push(tsv::bit(r.flag(d)).to_string());
                }
                row.push(r.ru_free_text.clone().unwrap_or_default());
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}
