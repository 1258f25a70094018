//! Turning per-annotator records into gold labels.

mod mace;
mod matrix;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::stats::{krippendorff_alpha, Alpha, Metric};
use crate::taxonomy::{close_labels, AnnotationRecord, Dimension};
use crate::{Error, Result};

pub use mace::{
    fit_categorical, mace_fit, mace_labels, mace_labels_with_threshold, CategoricalFit, EmState, EmStep,
    ItemLabels,
    MaceConfig, MaceModel,
};
pub use matrix::{LabelMatrix, Provenance};

/// Binarized root rating: ratings 1 and 2 mean inappropriate.
pub fn binarize_in(rating: u8) -> Result<bool> {
    match rating {
        1 | 2 => Ok(true),
        3 => Ok(false),
        r => Err(Error::RatingOutOfRange(r.into())),
    }
}

/// Rule-based combination of the annotators' binary votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Yes only if every annotator said yes.
    Liberal,
    /// Yes if a strict majority said yes.
    Majority,
    /// Yes if any annotator said yes.
    Conservative,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Liberal, Strategy::Majority, Strategy::Conservative];

    /// Minimum yes-votes out of `n` for a yes label.
    pub fn threshold(self, n: usize) -> usize {
        match self {
            Strategy::Conservative => 1,
            Strategy::Majority => (n + 2) / 2,
            Strategy::Liberal => n,
        }
    }

    pub fn provenance(self) -> Provenance {
        match self {
            Strategy::Liberal => Provenance::Liberal,
            Strategy::Majority => Provenance::Majority,
            Strategy::Conservative => Provenance::Conservative,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.provenance().tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "liberal" => Ok(Strategy::Liberal),
            "majority" => Ok(Strategy::Majority),
            "conservative" => Ok(Strategy::Conservative),
            other => Err(Error::InvalidInput(format!("unknown strategy `{other}`"))),
        }
    }
}

/// How to treat arguments whose annotator count differs from the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnnotatorCount {
    /// Every argument must have the same number of annotators.
    #[default]
    Uniform,
    /// Thresholds use each argument's own annotator count.
    PerArgument,
}

/// Records grouped by argument id, in order of first appearance.
pub fn by_argument(records: &[AnnotationRecord]) -> Vec<(&str, Vec<&AnnotationRecord>)> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<(&str, Vec<&AnnotationRecord>)> = Vec::new();
    for r in records {
        let i = *index.entry(r.argument_id.as_str()).or_insert_with(|| {
            groups.push((r.argument_id.as_str(), Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(r);
    }
    groups
}

/// Thresholds the yes-votes per dimension, then closes each row under the
/// hierarchy.
pub fn aggregate_strategy(
    records: &[AnnotationRecord],
    strategy: Strategy,
    counts: AnnotatorCount,
) -> Result<LabelMatrix> {
    let groups = by_argument(records);
    let expected = groups.first().map(|g| g.1.len()).unwrap_or(0);
    let mut out = LabelMatrix::new(strategy.provenance());
    for (id, recs) in groups {
        let n = recs.len();
        if counts == AnnotatorCount::Uniform && n != expected {
            return Err(Error::UnequalAnnotatorCount {
                argument_id: id.to_string(),
                expected,
                found: n,
            });
        }
        let mut votes = [0usize; 14];
        for r in &recs {
            for (v, yes) in votes.iter_mut().zip(r.binary_labels()) {
                *v += usize::from(yes);
            }
        }
        let need = strategy.threshold(n);
        let mut row = votes.map(|v| v >= need);
        close_labels(&mut row);
        out.push(id, row)?;
    }
    Ok(out)
}

/// Majority on the raw 1..=3 scale: the value chosen by at least two
/// annotators (a strict majority), else the median.
pub fn majority_in_rating(ratings: &[u8]) -> Result<u8> {
    if ratings.is_empty() {
        return Err(Error::InvalidInput("no ratings to combine".into()));
    }
    if let Some(&r) = ratings.iter().find(|r| !(1..=3).contains(*r)) {
        return Err(Error::RatingOutOfRange(r.into()));
    }
    let mut counts = [0usize; 4];
    for &r in ratings {
        counts[r as usize] += 1;
    }
    if let Some(v) = (1..=3).find(|&v| 2 * counts[v] > ratings.len()) {
        return Ok(v as u8);
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_unstable();
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// Nominal alpha per dimension between two label sources treated as two
/// annotators.
pub fn compare_aggregations(a: &LabelMatrix, b: &LabelMatrix) -> Result<Vec<(Dimension, Alpha)>> {
    if !a.same_ids(b) {
        return Err(Error::Mismatch(format!(
            "label matrices cover different arguments ({} vs {} rows)",
            a.len(),
            b.len()
        )));
    }
    let other = b.select(a.ids())?;
    Dimension::ALL
        .into_iter()
        .map(|d| {
            let units: Vec<Vec<Option<u32>>> = a
                .rows()
                .iter()
                .zip(&other)
                .map(|(x, y)| vec![Some(x[d.index()] as u32), Some(y[d.index()] as u32)])
                .collect();
            Ok((d, krippendorff_alpha(&units, Metric::Nominal)?))
        })
        .collect()
}
