use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::agreement::Panel;
use super::rank::kendall_tau_b;
use crate::corpus::{PairReason, ReasonCode};
use crate::par::Execution;
use crate::taxonomy::{AnnotationRecord, Dimension};
use crate::{Error, Result};

/// Labelled matrix of correlation coefficients; `None` marks an undefined
/// coefficient (a constant input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
    pub method: String,
}

impl CorrelationMatrix {
    pub fn get(&self, row: &str, column: &str) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == column)?;
        self.cells[r][c]
    }
}

fn codes() -> Vec<String> {
    Dimension::ALL.iter().map(|d| d.code().to_string()).collect()
}

/// 14 x 14 tau-b between dimensions, computed per annotator on that
/// annotator's binary labels (IN binarized) and averaged over annotators.
/// Annotators for whom a cell is undefined are left out of its average.
pub fn dimension_correlations(records: &[AnnotationRecord], execution: Execution) -> Result<CorrelationMatrix> {
    let panel = Panel::new(records);
    if panel.annotators.is_empty() {
        return Err(Error::InvalidInput("no annotations".into()));
    }
    let columns: Vec<Vec<Vec<f64>>> = (0..panel.annotators.len())
        .map(|j| {
            let mine: Vec<[bool; 14]> = panel
                .cells
                .iter()
                .filter_map(|row| row[j].map(|r| r.binary_labels()))
                .collect();
            (0..14)
                .map(|d| mine.iter().map(|l| f64::from(u8::from(l[d]))).collect())
                .collect()
        })
        .collect();

    let per_cell = execution.map_range(14 * 14, |n| {
        let (a, b) = (n / 14, n % 14);
        let mut sum = 0.0;
        let mut count = 0usize;
        for cols in &columns {
            if cols[a].len() < 2 {
                continue;
            }
            if let Some(t) = kendall_tau_b(&cols[a], &cols[b]).expect("equal lengths") {
                sum += t;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    });
    let cells = per_cell.chunks(14).map(|c| c.to_vec()).collect();
    Ok(CorrelationMatrix {
        rows: codes(),
        columns: codes(),
        cells,
        method: "kendall tau-b per annotator, averaged".into(),
    })
}

/// Mean binary label per argument over its annotators (IN binarized first).
pub fn mean_labels(records: &[AnnotationRecord]) -> BTreeMap<String, [f64; 14]> {
    let mut sums: BTreeMap<String, ([f64; 14], usize)> = BTreeMap::new();
    for r in records {
        let e = sums.entry(r.argument_id.clone()).or_insert(([0.0; 14], 0));
        for (s, l) in e.0.iter_mut().zip(r.binary_labels()) {
            *s += f64::from(u8::from(l));
        }
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(id, (s, n))| (id, s.map(|v| v / n as f64)))
        .collect()
}

/// tau-b between each external quality dimension's mean rating and each
/// inappropriateness dimension's mean label, over the arguments having both.
pub fn external_correlations(
    label_means: &BTreeMap<String, [f64; 14]>,
    quality_means: &BTreeMap<String, BTreeMap<String, f64>>,
    qualities: &[String],
) -> Result<CorrelationMatrix> {
    let mut cells = Vec::with_capacity(qualities.len());
    for q in qualities {
        let ratings = quality_means
            .get(q)
            .ok_or_else(|| Error::UnknownDimension(q.clone()))?;
        let common: Vec<(&[f64; 14], f64)> = ratings
            .iter()
            .filter_map(|(id, &score)| label_means.get(id).map(|l| (l, score)))
            .collect();
        if common.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no argument has both labels and `{q}` ratings"
            )));
        }
        let y: Vec<f64> = common.iter().map(|c| c.1).collect();
        let row = (0..14)
            .map(|d| {
                let x: Vec<f64> = common.iter().map(|c| c.0[d]).collect();
                if x.len() < 2 {
                    return Ok(None);
                }
                kendall_tau_b(&x, &y)
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    Ok(CorrelationMatrix {
        rows: qualities.to_vec(),
        columns: codes(),
        cells,
        method: "kendall tau-b of per-argument means".into(),
    })
}

/// tau-b between "the pair carries this reason" and the difference of mean
/// labels (b minus a) per dimension, over all pairs whose arguments are
/// labelled.
///
/// Every pair carries the `overall` reason, so that row is computed on both
/// orientations of each pair: (a, b) with indicator 1 and (b, a) with
/// indicator 0.
pub fn pair_reason_correlations(
    pairs: &[PairReason],
    label_means: &BTreeMap<String, [f64; 14]>,
) -> Result<CorrelationMatrix> {
    let mut grouped: BTreeMap<&str, (&str, &str, BTreeSet<ReasonCode>)> = BTreeMap::new();
    for p in pairs {
        let e = grouped
            .entry(p.pair_id.as_str())
            .or_insert((p.more_convincing_id.as_str(), p.less_convincing_id.as_str(), BTreeSet::new()));
        if (e.0, e.1) != (p.more_convincing_id.as_str(), p.less_convincing_id.as_str()) {
            return Err(Error::Mismatch(format!(
                "pair `{}` appears with different arguments",
                p.pair_id
            )));
        }
        e.2.insert(p.reason);
    }
    let mut usable = Vec::new();
    let mut skipped = 0usize;
    for (a, b, reasons) in grouped.values() {
        match (label_means.get(*a), label_means.get(*b)) {
            (Some(ma), Some(mb)) => usable.push((ma, mb, reasons)),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} pairs skipped: an endpoint has no labels");
    }
    if usable.len() < 2 {
        return Err(Error::InvalidInput("fewer than two labelled pairs".into()));
    }

    let mut cells = Vec::with_capacity(ReasonCode::ALL.len());
    for reason in ReasonCode::ALL {
        let row = (0..14)
            .map(|d| {
                let (x, y): (Vec<f64>, Vec<f64>) = if reason == ReasonCode::Overall {
                    usable
                        .iter()
                        .flat_map(|(ma, mb, _)| [(1.0, mb[d] - ma[d]), (0.0, ma[d] - mb[d])])
                        .unzip()
                } else {
                    usable
                        .iter()
                        .map(|(ma, mb, rs)| (f64::from(u8::from(rs.contains(&reason))), mb[d] - ma[d]))
                        .unzip()
                };
                kendall_tau_b(&x, &y)
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    Ok(CorrelationMatrix {
        rows: ReasonCode::ALL.iter().map(|r| r.tag().to_string()).collect(),
        columns: codes(),
        cells,
        method: "kendall tau-b of reason indicator vs mean-label difference".into(),
    })
}
