//! Result tables in CSV, Markdown and JSON.
//!
//! Builders take the outputs of [`crate::aggregate`], [`crate::stats`] and
//! [`crate::eval`] and lay them out with dimensions in taxonomy order.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::{LabelMatrix, Strategy};
use crate::corpus::Source;
use crate::eval::{HumanPerformance, ScoreReport};
use crate::stats::{AgreementReport, Alpha, CorrelationMatrix};
use crate::taxonomy::Dimension;
use crate::tsv;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Md,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "md" | "markdown" => Ok(OutputFormat::Md),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidInput(format!("unknown output format `{other}`"))),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Md => "md",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Count(usize),
    /// Shown with two decimals in Markdown, four in CSV.
    Value(f64),
    /// A percentage, shown without decimals in Markdown.
    Percent(f64),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(t) => t.clone(),
            Cell::Count(n) => n.to_string(),
            Cell::Value(v) => format!("{v:.4}"),
            Cell::Percent(v) => format!("{v:.2}"),
            Cell::Empty => String::new(),
        }
    }

    fn markdown(&self) -> String {
        match self {
            Cell::Text(t) => t.replace('|', "\\|"),
            Cell::Count(n) => n.to_string(),
            Cell::Value(v) => format!("{v:.2}"),
            Cell::Percent(v) => format!("{v:.0}%"),
            Cell::Empty => String::new(),
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, title: impl Into<String>, columns: Vec<String>) -> Self {
        Table {
            name: name.to_string(),
            title: title.into(),
            columns,
            rows: Vec::new(),
        }
    }

    /// Finds the cell in the row whose first cell reads `row`.
    pub fn cell(&self, row: &str, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows
            .iter()
            .find(|r| matches!(r.first(), Some(Cell::Text(t)) if t == row))
            .and_then(|r| r.get(c))
    }

    pub fn write<W: Write>(&self, mut out: W, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Csv => {
                let mut w = tsv::csv_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()?;
            }
            OutputFormat::Md => out.write_all(self.markdown().as_bytes())?,
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut out, self)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn render(&self, format: OutputFormat) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, format).expect("writing to memory");
        String::from_utf8(buf).expect("tables are UTF-8")
    }

    pub fn markdown(&self) -> String {
        let mut s = format!("### {}\n\n", self.title);
        let _ = writeln!(s, "| {} |", self.columns.join(" | "));
        let _ = writeln!(s, "|{}", self.columns.iter().map(|_| "---|").collect::<String>());
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::markdown).collect();
            let _ = writeln!(s, "| {} |", cells.join(" | "));
        }
        s
    }
}

fn codes() -> Vec<String> {
    Dimension::ALL.iter().map(|d| d.code().to_string()).collect()
}

fn dimension_cells(d: Dimension) -> Vec<Cell> {
    vec![Cell::Text(d.code().into()), Cell::Text(d.name().into())]
}

/// Yes/no counts per dimension of a label matrix.
pub fn table1a(labels: &LabelMatrix) -> Table {
    let mut t = Table::new(
        "table1a",
        format!("Label counts ({} aggregation, {} arguments)", labels.provenance(), labels.len()),
        ["code", "dimension", "yes", "no"].map(String::from).to_vec(),
    );
    for d in Dimension::ALL {
        let yes = labels.yes_count(d);
        let mut row = dimension_cells(d);
        row.extend([Cell::Count(yes), Cell::Count(labels.len() - yes)]);
        t.rows.push(row);
    }
    t
}

/// Full agreement and Krippendorff's alpha per dimension.
pub fn table1b(agreement: &AgreementReport) -> Table {
    let mut t = Table::new(
        "table1b",
        "Agreement of all annotators",
        ["code", "dimension", "full", "alpha"].map(String::from).to_vec(),
    );
    for row in &agreement.rows {
        let mut cells = dimension_cells(row.dimension);
        cells.extend([Cell::Percent(row.full_agreement_pct), Cell::Value(row.alpha)]);
        t.rows.push(cells);
    }
    t
}

/// Dimension-by-dimension correlation, diagonal left blank.
pub fn table1c(correlations: &CorrelationMatrix) -> Table {
    let mut columns = vec!["code".to_string()];
    columns.extend(codes());
    let mut t = Table::new("table1c", "Kendall's tau-b between dimensions, averaged over annotators", columns);
    for (i, name) in correlations.rows.iter().enumerate() {
        let mut row = vec![Cell::Text(name.clone())];
        for (j, v) in correlations.cells[i].iter().enumerate() {
            row.push(if i == j { Cell::Empty } else { Cell::from(*v) });
        }
        t.rows.push(row);
    }
    t
}

/// Alpha between MACE labels and each rule-based strategy.
pub fn table2(by_strategy: &[(Strategy, Vec<(Dimension, Alpha)>)]) -> Table {
    let mut columns = ["code", "dimension"].map(String::from).to_vec();
    columns.extend(by_strategy.iter().map(|(s, _)| s.to_string()));
    let mut t = Table::new("table2", "Krippendorff's alpha between MACE and rule-based labels", columns);
    for d in Dimension::ALL {
        let mut row = dimension_cells(d);
        for (_, alphas) in by_strategy {
            row.push(
                alphas
                    .iter()
                    .find(|(x, _)| *x == d)
                    .map_or(Cell::Empty, |(_, a)| Cell::Value(a.value)),
            );
        }
        t.rows.push(row);
    }
    t
}

/// Quality-dimension correlations. Values are reported against
/// appropriateness, i.e. with the sign of the inappropriateness correlation
/// flipped, so that agreement between "high quality" and "appropriate"
/// reads positive.
pub fn quality_table(name: &str, title: &str, correlations: &CorrelationMatrix) -> Table {
    let mut columns = vec!["quality".to_string()];
    columns.extend(correlations.columns.iter().cloned());
    let mut t = Table::new(name, title, columns);
    for (i, q) in correlations.rows.iter().enumerate() {
        let mut row = vec![Cell::Text(q.clone())];
        row.extend(correlations.cells[i].iter().map(|v| Cell::from(v.map(|x| -x))));
        t.rows.push(row);
    }
    t
}

pub fn table3(correlations: &CorrelationMatrix) -> Table {
    quality_table(
        "table3",
        "Kendall's tau-b of mean quality ratings with appropriateness per dimension",
        correlations,
    )
}

pub fn table7(correlations: &CorrelationMatrix) -> Table {
    quality_table(
        "table7",
        "Kendall's tau-b of quality ratings with appropriateness per dimension (GAQ)",
        correlations,
    )
}

/// Pair-reason correlations with the difference of mean labels.
pub fn table4(correlations: &CorrelationMatrix) -> Table {
    let mut columns = vec!["reason".to_string()];
    columns.extend(correlations.columns.iter().cloned());
    let mut t = Table::new(
        "table4",
        "Kendall's tau-b of convincingness reasons with mean-label differences",
        columns,
    );
    for (i, r) in correlations.rows.iter().enumerate() {
        let mut row = vec![Cell::Text(r.clone())];
        row.extend(correlations.cells[i].iter().map(|v| Cell::from(*v)));
        t.rows.push(row);
    }
    t
}

/// One line of the evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub approach: String,
    pub per_dimension: [f64; 14],
    pub macro_f1: f64,
    /// Appended to the macro cell, e.g. a significance marker.
    pub marker: String,
}

impl From<&ScoreReport> for ScoreLine {
    fn from(r: &ScoreReport) -> Self {
        ScoreLine {
            approach: r.approach.clone(),
            per_dimension: r.per_dimension,
            macro_f1: r.macro_f1,
            marker: String::new(),
        }
    }
}

impl From<&HumanPerformance> for ScoreLine {
    fn from(h: &HumanPerformance) -> Self {
        ScoreLine {
            approach: "human".into(),
            per_dimension: h.per_dimension,
            macro_f1: h.macro_f1,
            marker: String::new(),
        }
    }
}

pub fn table5(lines: &[ScoreLine]) -> Table {
    let mut columns = vec!["approach".to_string()];
    columns.extend(codes());
    columns.push("macro".into());
    columns.push("significance".into());
    let mut t = Table::new("table5", "Two-class macro F1 over the cross-validation folds", columns);
    for l in lines {
        let mut row = vec![Cell::Text(l.approach.clone())];
        row.extend(l.per_dimension.iter().map(|v| Cell::Value(*v)));
        row.push(Cell::Value(l.macro_f1));
        row.push(Cell::Text(l.marker.clone()));
        t.rows.push(row);
    }
    t
}

/// Source groups of the per-source appendix tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceGroup {
    /// Dagstuhl and UKPConvArg2 arguments together.
    Ukp,
    GaqDebates,
    GaqQa,
    GaqReviews,
}

impl SourceGroup {
    pub const ALL: [SourceGroup; 4] = [
        SourceGroup::Ukp,
        SourceGroup::GaqDebates,
        SourceGroup::GaqQa,
        SourceGroup::GaqReviews,
    ];

    pub fn sources(self) -> &'static [Source] {
        match self {
            SourceGroup::Ukp => &[Source::Dagstuhl, Source::UkpConvArg2],
            SourceGroup::GaqDebates => &[Source::GaqDebates],
            SourceGroup::GaqQa => &[Source::GaqQa],
            SourceGroup::GaqReviews => &[Source::GaqReviews],
        }
    }

    /// Name of the appendix table for this group.
    pub fn table_name(self) -> &'static str {
        match self {
            SourceGroup::Ukp => "table8",
            SourceGroup::GaqDebates => "table9",
            SourceGroup::GaqQa => "table10",
            SourceGroup::GaqReviews => "table11",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SourceGroup::Ukp => "ukp",
            SourceGroup::GaqDebates => "gaq-debates",
            SourceGroup::GaqQa => "gaq-qa",
            SourceGroup::GaqReviews => "gaq-reviews",
        }
    }
}

/// Counts, agreement and correlations side by side, one row per dimension.
pub fn combined_table(
    name: &str,
    title: &str,
    labels: &LabelMatrix,
    agreement: &AgreementReport,
    correlations: &CorrelationMatrix,
) -> Table {
    let mut columns = ["code", "dimension", "yes", "no", "full", "alpha"].map(String::from).to_vec();
    columns.extend(codes());
    let mut t = Table::new(name, title, columns);
    for d in Dimension::ALL {
        let i = d.index();
        let yes = labels.yes_count(d);
        let a = agreement.get(d);
        let mut row = dimension_cells(d);
        row.extend([
            Cell::Count(yes),
            Cell::Count(labels.len() - yes),
            Cell::Percent(a.full_agreement_pct),
            Cell::Value(a.alpha),
        ]);
        for (j, v) in correlations.cells[i].iter().enumerate() {
            row.push(if i == j { Cell::Empty } else { Cell::from(*v) });
        }
        t.rows.push(row);
    }
    t
}
