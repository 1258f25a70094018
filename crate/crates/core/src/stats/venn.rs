use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exact-subset counts of arguments rated low on the requested dimensions.
///
/// Cell `mask` holds the number of arguments that are low on exactly the
/// dimensions whose bits are set in `mask` (bit `i` = `dimensions[i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VennCounts {
    pub dimensions: Vec<String>,
    pub threshold: f64,
    pub arguments: usize,
    pub cells: Vec<usize>,
}

impl VennCounts {
    fn bit(&self, name: &str) -> Result<usize> {
        self.dimensions
            .iter()
            .position(|d| d == name)
            .map(|i| 1 << i)
            .ok_or_else(|| Error::UnknownDimension(name.to_string()))
    }

    /// Arguments low on every dimension in `names` (and anything else).
    pub fn region(&self, names: &[&str]) -> Result<usize> {
        let mut need = 0;
        for n in names {
            need |= self.bit(n)?;
        }
        Ok(self
            .cells
            .iter()
            .enumerate()
            .filter(|(m, _)| m & need == need)
            .map(|(_, c)| c)
            .sum())
    }

    /// Arguments low on at least one of `names`.
    pub fn union(&self, names: &[&str]) -> Result<usize> {
        let mut any = 0;
        for n in names {
            any |= self.bit(n)?;
        }
        Ok(self
            .cells
            .iter()
            .enumerate()
            .filter(|(m, _)| m & any != 0)
            .map(|(_, c)| c)
            .sum())
    }

    /// Arguments low on `name`.
    pub fn low(&self, name: &str) -> Result<usize> {
        self.region(&[name])
    }

    /// Arguments low on at least one dimension.
    pub fn low_on_any(&self) -> usize {
        self.cells.iter().skip(1).sum()
    }
}

/// Counts arguments whose mean rating is `<= low_threshold`, for every
/// combination of `dimensions`. Only arguments rated on all requested
/// dimensions are counted; with no dimensions, every rated argument falls
/// in the single cell.
pub fn venn_overlap(
    quality_means: &BTreeMap<String, BTreeMap<String, f64>>,
    dimensions: &[String],
    low_threshold: f64,
) -> Result<VennCounts> {
    if dimensions.len() > 16 {
        return Err(Error::InvalidInput("at most 16 dimensions".into()));
    }
    let mut maps = Vec::with_capacity(dimensions.len());
    for d in dimensions {
        maps.push(
            quality_means
                .get(d)
                .ok_or_else(|| Error::UnknownDimension(d.clone()))?,
        );
    }
    let universe: BTreeSet<&String> = match maps.first() {
        None => quality_means.values().flat_map(|m| m.keys()).collect(),
        Some(first) => first
            .keys()
            .filter(|id| maps.iter().all(|m| m.contains_key(*id)))
            .collect(),
    };
    let mut cells = vec![0usize; 1 << dimensions.len()];
    for id in &universe {
        let mut mask = 0;
        for (i, m) in maps.iter().enumerate() {
            if m[*id] <= low_threshold {
                mask |= 1 << i;
            }
        }
        cells[mask] += 1;
    }
    Ok(VennCounts {
        dimensions: dimensions.to_vec(),
        threshold: low_threshold,
        arguments: universe.len(),
        cells,
    })
}
