//! Brute-force reference implementations used to check the fast kernels.
#![allow(dead_code)]

use std::collections::BTreeMap;

pub mod suites;

/// Krippendorff's alpha in its pairwise form:
/// `1 - (n - 1) * sum_u sum_{i != j in u} d(v_i, v_j) / (m_u - 1)
///        / sum_{i != j over all pairable values} d(v_i, v_j)`.
/// `None` when there is no disagreement to expect.
pub fn alpha_pairwise(units: &[Vec<Option<u32>>], ordinal: bool) -> Option<f64> {
    let pairable: Vec<Vec<u32>> = units
        .iter()
        .map(|u| u.iter().flatten().copied().collect::<Vec<_>>())
        .filter(|u| u.len() >= 2)
        .collect();
    let pooled: Vec<u32> = pairable.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let mut freq: BTreeMap<u32, f64> = BTreeMap::new();
    for v in &pooled {
        *freq.entry(*v).or_default() += 1.0;
    }
    let delta = |a: u32, b: u32| -> f64 {
        if a == b {
            return 0.0;
        }
        if !ordinal {
            return 1.0;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let span: f64 = freq.range(lo..=hi).map(|(_, c)| c).sum();
        let d = span - (freq[&lo] + freq[&hi]) / 2.0;
        d * d
    };
    let mut within = 0.0;
    for u in &pairable {
        let m = u.len() as f64;
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j {
                    within += delta(u[i], u[j]) / (m - 1.0);
                }
            }
        }
    }
    let mut between = 0.0;
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j {
                between += delta(pooled[i], pooled[j]);
            }
        }
    }
    if between == 0.0 {
        return None;
    }
    Some(1.0 - (n - 1.0) * within / between)
}

/// Kendall's tau-b by enumerating all pairs.
pub fn tau_b_pairs(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut c, mut d, mut tx, mut ty) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1.0;
            } else if dy == 0.0 {
                ty += 1.0;
            } else if (dx > 0.0) == (dy > 0.0) {
                c += 1.0;
            } else {
                d += 1.0;
            }
        }
    }
    let denom = ((c + d + tx) * (c + d + ty)).sqrt();
    (denom > 0.0).then(|| (c - d) / denom)
}

/// Two-sided signed-rank p-value by enumerating all 2^n sign patterns.
/// Returns `(w_plus, p)`, or `None` when every difference is zero.
pub fn wilcoxon_enumerated(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return None;
    }
    let n = diffs.len();
    let ranks: Vec<f64> = diffs
        .iter()
        .map(|d| {
            let below = diffs.iter().filter(|e| e.abs() < d.abs()).count() as f64;
            let equal = diffs.iter().filter(|e| e.abs() == d.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    let p = (2.0 * (le.min(ge) as f64) / total).min(1.0);
    Some((observed, p))
}
