use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Difference function of Krippendorff's alpha.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nominal,
    Ordinal,
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nominal" => Ok(Metric::Nominal),
            "ordinal" => Ok(Metric::Ordinal),
            other => Err(Error::InvalidInput(format!("unknown alpha metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub value: f64,
    /// Set when expected disagreement is zero (a single value occurs in the
    /// whole table); `value` is then reported as 1.
    pub degenerate: bool,
    pub observed: f64,
    pub expected: f64,
    /// Number of pairable values (labels in units with at least two labels).
    pub pairable: usize,
}

/// Krippendorff's alpha over a units x coders table with missing cells.
///
/// Units with fewer than two labels are ignored. Ordinal distances use the
/// marginal frequencies of the coincidence matrix:
/// `d(c, k) = (sum_{g=c..=k} n_g - (n_c + n_k) / 2)^2`.
pub fn krippendorff_alpha(units: &[Vec<Option<u32>>], metric: Metric) -> Result<Alpha> {
    let mut values: BTreeMap<u32, usize> = BTreeMap::new();
    for unit in units {
        if unit.iter().flatten().count() >= 2 {
            for v in unit.iter().flatten() {
                values.entry(*v).or_default();
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Degenerate("no unit has two or more labels".into()));
    }
    let order: Vec<u32> = values.keys().copied().collect();
    let index: BTreeMap<u32, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let k = order.len();

    let mut coincidence = vec![vec![0.0f64; k]; k];
    for unit in units {
        let m = unit.iter().flatten().count();
        if m < 2 {
            continue;
        }
        let labels: Vec<usize> = unit.iter().flatten().map(|v| index[v]).collect();
        let mut counts = vec![0.0f64; k];
        for &l in &labels {
            counts[l] += 1.0;
        }
        let w = 1.0 / (m as f64 - 1.0);
        for c in 0..k {
            if counts[c] == 0.0 {
                continue;
            }
            for e in 0..k {
                let pairs = if c == e {
                    counts[c] * (counts[c] - 1.0)
                } else {
                    counts[c] * counts[e]
                };
                coincidence[c][e] += pairs * w;
            }
        }
    }
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    let delta = distance_table(metric, &marginals);

    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for e in 0..k {
            observed += coincidence[c][e] * delta[c][e];
            expected += marginals[c] * marginals[e] * delta[c][e];
        }
    }
    observed /= n;
    expected /= n * (n - 1.0);
    let pairable = n.round() as usize;
    if expected == 0.0 {
        return Ok(Alpha {
            value: 1.0,
            degenerate: true,
            observed,
            expected,
            pairable,
        });
    }
    Ok(Alpha {
        value: 1.0 - observed / expected,
        degenerate: false,
        observed,
        expected,
        pairable,
    })
}

fn distance_table(metric: Metric, marginals: &[f64]) -> Vec<Vec<f64>> {
    let k = marginals.len();
    let mut d = vec![vec![0.0; k]; k];
    for c in 0..k {
        for e in 0..k {
            if c == e {
                continue;
            }
            d[c][e] = match metric {
                Metric::Nominal => 1.0,
                Metric::Ordinal => {
                    let (lo, hi) = (c.min(e), c.max(e));
                    let span: f64 = marginals[lo..=hi].iter().sum();
                    let x = span - (marginals[lo] + marginals[hi]) / 2.0;
                    x * x
                }
            };
        }
    }
    d
}
