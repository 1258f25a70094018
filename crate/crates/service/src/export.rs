use std::str::FromStr;

use appropriateness::aggregate::{aggregate_strategy, AnnotatorCount, Strategy};
use appropriateness::corpus::{write_annotations, Format};
use appropriateness::report::{table1b, table1c, OutputFormat};
use appropriateness::stats::{agreement, dimension_correlations, Metric};
use appropriateness::Execution;

use crate::campaign::Campaign;
use crate::{Result, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Annotations,
    ConservativeGold,
    Agreement,
    Correlations,
}

impl FromStr for ExportKind {
    type Err = ServiceError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "annotations" => Ok(ExportKind::Annotations),
            "conservative-gold" => Ok(ExportKind::ConservativeGold),
            "agreement" => Ok(ExportKind::Agreement),
            "correlations" => Ok(ExportKind::Correlations),
            other => Err(ServiceError::BadRequest(format!(
                "unknown export `{other}`; expected annotations, conservative-gold, agreement or correlations"
            ))),
        }
    }
}

impl ExportKind {
    pub fn content_type(self) -> &'static str {
        match self {
            ExportKind::Annotations | ExportKind::ConservativeGold => "text/tab-separated-values; charset=utf-8",
            ExportKind::Agreement | ExportKind::Correlations => "text/csv; charset=utf-8",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            ExportKind::Annotations => "annotations.tsv",
            ExportKind::ConservativeGold => "conservative-gold.tsv",
            ExportKind::Agreement => "agreement.csv",
            ExportKind::Correlations => "correlations.csv",
        }
    }
}

/// Renders an export from a snapshot. The annotation dump holds every
/// stored record; the derived exports only use arguments that every
/// roster annotator has answered.
pub fn export(campaign: &Campaign, kind: ExportKind) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match kind {
        ExportKind::Annotations => write_annotations(&mut out, Format::Tsv, &campaign.records())?,
        ExportKind::ConservativeGold => {
            aggregate_strategy(&campaign.complete_records(), Strategy::Conservative, AnnotatorCount::Uniform)?
                .write_tsv(&mut out)?
        }
        ExportKind::Agreement => {
            let report = agreement(&campaign.complete_records(), Metric::Ordinal)?;
            table1b(&report).write(&mut out, OutputFormat::Csv)?
        }
        ExportKind::Correlations => {
            let corr = dimension_correlations(&campaign.complete_records(), Execution::default())?;
            table1c(&corr).write(&mut out, OutputFormat::Csv)?
        }
    }
    Ok(out)
}
