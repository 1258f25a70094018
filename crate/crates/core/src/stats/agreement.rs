use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::alpha::{krippendorff_alpha, Metric};
use crate::taxonomy::{AnnotationRecord, Dimension};
use crate::{Error, Result};

/// Items x annotators view of a set of records.
pub(crate) struct Panel<'a> {
    pub annotators: Vec<&'a str>,
    pub cells: Vec<Vec<Option<&'a AnnotationRecord>>>,
}

impl<'a> Panel<'a> {
    pub fn new(records: &'a [AnnotationRecord]) -> Self {
        let annotators: Vec<&str> = records
            .iter()
            .map(|r| r.annotator_id.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let col: HashMap<&str, usize> = annotators.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let mut row: HashMap<&str, usize> = HashMap::new();
        let mut cells: Vec<Vec<Option<&AnnotationRecord>>> = Vec::new();
        for r in records {
            let i = *row.entry(r.argument_id.as_str()).or_insert_with(|| {
                cells.push(vec![None; annotators.len()]);
                cells.len() - 1
            });
            cells[i][col[r.annotator_id.as_str()]] = Some(r);
        }
        Panel { annotators, cells }
    }

    /// Label codes for one dimension: the raw 1..=3 rating for IN, 0/1 otherwise.
    pub fn codes(&self, d: Dimension) -> Vec<Vec<Option<u32>>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|c| c.map(|r| raw_code(r, d))).collect())
            .collect()
    }
}

fn raw_code(r: &AnnotationRecord, d: Dimension) -> u32 {
    if d == Dimension::IN {
        u32::from(r.in_rating)
    } else {
        u32::from(r.flag(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionAgreement {
    pub dimension: Dimension,
    /// Share of items on which all annotators gave the same label, in percent.
    pub full_agreement_pct: f64,
    pub alpha: f64,
    pub alpha_degenerate: bool,
    pub metric: Metric,
    pub annotators: usize,
    pub items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub rows: Vec<DimensionAgreement>,
}

impl AgreementReport {
    pub fn get(&self, d: Dimension) -> &DimensionAgreement {
        &self.rows[d.index()]
    }
}

fn full_agreement_of(codes: &[Vec<Option<u32>>]) -> Result<(f64, usize)> {
    let mut agreeing = 0usize;
    let mut total = 0usize;
    for unit in codes {
        let labels: Vec<u32> = unit.iter().flatten().copied().collect();
        if labels.len() < 2 {
            continue;
        }
        total += 1;
        if labels.iter().all(|l| *l == labels[0]) {
            agreeing += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidInput("no item has two or more annotations".into()));
    }
    Ok((100.0 * agreeing as f64 / total as f64, total))
}

/// Percentage of items (with at least two annotations) on which every
/// annotator gave the same label. IN is compared on the raw 1..=3 scale.
pub fn full_agreement(records: &[AnnotationRecord], d: Dimension) -> Result<f64> {
    let panel = Panel::new(records);
    full_agreement_of(&panel.codes(d)).map(|(pct, _)| pct)
}

/// Full agreement and alpha for all 14 dimensions. IN uses the raw 1..=3
/// ratings with `in_metric`; the binary dimensions use the nominal metric.
pub fn agreement(records: &[AnnotationRecord], in_metric: Metric) -> Result<AgreementReport> {
    let panel = Panel::new(records);
    let rows = Dimension::ALL
        .into_iter()
        .map(|d| {
            let codes = panel.codes(d);
            let (pct, items) = full_agreement_of(&codes)?;
            let metric = if d == Dimension::IN { in_metric } else { Metric::Nominal };
            let alpha = krippendorff_alpha(&codes, metric)?;
            Ok(DimensionAgreement {
                dimension: d,
                full_agreement_pct: pct,
                alpha: alpha.value,
                alpha_degenerate: alpha.degenerate,
                metric,
                annotators: panel.annotators.len(),
                items,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AgreementReport { rows })
}
