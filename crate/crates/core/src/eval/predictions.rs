use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use crate::aggregate::LabelMatrix;
use crate::rng;
use crate::taxonomy::Dimension;
use crate::tsv::{self, Table};
use crate::{Error, Result};

/// `(repetition, fold, argument_id)`, 0-based.
pub type PredictionKey = (usize, usize, String);

/// Binary predictions of one approach for the test items of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub approach: String,
    pub rows: BTreeMap<PredictionKey, [bool; 14]>,
}

impl PredictionSet {
    pub fn new(approach: impl Into<String>) -> Self {
        PredictionSet {
            approach: approach.into(),
            rows: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, repetition: usize, fold: usize, id: impl Into<String>, labels: [bool; 14]) -> Result<()> {
        let key = (repetition, fold, id.into());
        if self.rows.contains_key(&key) {
            return Err(Error::DuplicateId(format!(
                "{} (repetition {}, fold {})",
                key.2,
                repetition + 1,
                fold + 1
            )));
        }
        self.rows.insert(key, labels);
        Ok(())
    }

    pub fn get(&self, repetition: usize, fold: usize, id: &str) -> Option<&[bool; 14]> {
        self.rows.get(&(repetition, fold, id.to_string()))
    }

    /// Errors with the full count of gaps unless the set covers exactly the
    /// plan's test sets.
    pub fn check_coverage(&self, plan: &FoldPlan) -> Result<()> {
        let expected: BTreeSet<(usize, usize, &str)> = plan
            .iter()
            .flat_map(|(r, f, folding)| folding.test.iter().map(move |id| (r, f, id.as_str())))
            .collect();
        let present: BTreeSet<(usize, usize, &str)> =
            self.rows.keys().map(|(r, f, id)| (*r, *f, id.as_str())).collect();
        let missing: Vec<_> = expected.difference(&present).collect();
        let unexpected: Vec<_> = present.difference(&expected).collect();
        if missing.is_empty() && unexpected.is_empty() {
            return Ok(());
        }
        let describe = |k: &(usize, usize, &str), what: &str| {
            format!("{what} {} in repetition {} fold {}", k.2, k.0 + 1, k.1 + 1)
        };
        let first = missing
            .first()
            .map(|k| describe(k, "missing"))
            .or_else(|| unexpected.first().map(|k| describe(k, "unexpected")))
            .unwrap_or_default();
        Err(Error::Coverage {
            missing: missing.len(),
            unexpected: unexpected.len(),
            first,
        })
    }

    /// TSV `repetition fold argument_id` + 14 binary columns, 1-based.
    pub fn write_tsv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = tsv::writer(out);
        let mut header = vec!["repetition", "fold", "argument_id"];
        header.extend(Dimension::ALL.iter().map(|d| d.code()));
        w.write_record(&header)?;
        for ((r, f), rows) in self.by_cell() {
            let (r, f) = ((r + 1).to_string(), (f + 1).to_string());
            for (id, labels) in rows {
                let mut rec = vec![r.as_str(), f.as_str(), id];
                rec.extend(labels.iter().map(|&b| tsv::bit(b)));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    fn by_cell(&self) -> BTreeMap<(usize, usize), Vec<(&str, &[bool; 14])>> {
        let mut out: BTreeMap<(usize, usize), Vec<(&str, &[bool; 14])>> = BTreeMap::new();
        for ((r, f, id), labels) in &self.rows {
            out.entry((*r, *f)).or_default().push((id.as_str(), labels));
        }
        out
    }

    pub fn read_tsv<R: Read>(approach: impl Into<String>, input: R) -> Result<Self> {
        let mut required = vec!["repetition", "fold", "argument_id"];
        required.extend(Dimension::ALL.iter().map(|d| d.code()));
        let table = Table::read(input, &required)?;
        let mut set = PredictionSet::new(approach);
        for (line, row) in &table.rows {
            let line = *line;
            let index = |name: &str| -> Result<usize> {
                let v = table.field(line, row, name)?;
                match v.trim().parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(Error::parse(line, format!("`{name}` must be a positive integer, found `{v}`"))),
                }
            };
            let mut labels = [false; 14];
            for d in Dimension::ALL {
                labels[d.index()] = tsv::parse_bit(line, d.code(), table.field(line, row, d.code())?)?;
            }
            set.insert(index("repetition")?, index("fold")?, table.field(line, row, "argument_id")?, labels)
                .map_err(|e| Error::parse(line, e.to_string()))?;
        }
        Ok(set)
    }
}

/// Uniform yes/no per test item and dimension. Each (repetition, fold)
/// draws from its own seeded stream.
pub fn random_baseline(plan: &FoldPlan, seed: u64) -> PredictionSet {
    let mut set = PredictionSet::new("random");
    for (r, f, folding) in plan.iter() {
        let mut rng = rng::stream(seed, rng::stream_id(&[21, r as u16, f as u16]));
        for id in &folding.test {
            let labels: [bool; 14] = std::array::from_fn(|_| rng.random::<bool>());
            set.rows.insert((r, f, id.clone()), labels);
        }
    }
    set
}

/// The majority label of each fold's training split, per dimension, for
/// every test item. An exact tie predicts "no".
pub fn majority_baseline(plan: &FoldPlan, gold: &LabelMatrix) -> Result<PredictionSet> {
    let mut set = PredictionSet::new("majority");
    for (r, f, folding) in plan.iter() {
        let train = gold.select(&folding.train)?;
        if train.is_empty() {
            return Err(Error::InvalidInput(format!(
                "repetition {} fold {} has an empty training split",
                r + 1,
                f + 1
            )));
        }
        let labels: [bool; 14] = std::array::from_fn(|d| {
            let yes = train.iter().filter(|row| row[d]).count();
            2 * yes > train.len()
        });
        for id in &folding.test {
            set.rows.insert((r, f, id.clone()), labels);
        }
    }
    Ok(set)
}
