use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Largest number of nonzero differences handled by the exact distribution.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonTest {
    /// Nonzero differences used.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `w_plus - w_minus`; positive when `a` tends to exceed `b`.
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub method: WilcoxonMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum WilcoxonOutcome {
    /// Every difference was zero.
    NoTest,
    Test(WilcoxonTest),
}

impl WilcoxonOutcome {
    pub fn significant(&self) -> bool {
        matches!(self, WilcoxonOutcome::Test(t) if t.significant)
    }

    pub fn test(&self) -> Option<&WilcoxonTest> {
        match self {
            WilcoxonOutcome::Test(t) => Some(t),
            WilcoxonOutcome::NoTest => None,
        }
    }
}

/// Average ranks (1-based) of `|d|`, returned doubled so they stay integral.
fn doubled_ranks(abs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0u64; abs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && abs[order[j + 1]] == abs[order[i]] {
            j += 1;
        }
        // Positions i..=j share rank (i+1 + j+1) / 2, doubled: i + j + 2.
        for &o in &order[i..=j] {
            ranks[o] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test of paired samples.
///
/// Zero differences are dropped and tied absolute differences share their
/// average rank. Up to [`EXACT_LIMIT`] pairs the null distribution of `W+`
/// is enumerated exactly (ties included); above it a normal approximation
/// with continuity and tie correction is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha_level: f64) -> Result<WilcoxonOutcome> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in sample".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Ok(WilcoxonOutcome::NoTest);
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let plus2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total2: u64 = ranks.iter().sum();
    let w_plus = plus2 as f64 / 2.0;
    let w_minus = (total2 - plus2) as f64 / 2.0;

    let (p, method) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, plus2), WilcoxonMethod::Exact)
    } else {
        (normal_p(n, &abs, w_plus), WilcoxonMethod::Normal)
    };
    Ok(WilcoxonOutcome::Test(WilcoxonTest {
        n,
        w_plus,
        w_minus,
        statistic: w_plus - w_minus,
        p_value: p,
        significant: p < alpha_level,
        method,
    }))
}

/// `min(1, 2 * min(P(W+ <= obs), P(W+ >= obs)))` under the null where each
/// doubled rank enters the sum with probability 1/2.
fn exact_p(ranks: &[u64], observed: u64) -> f64 {
    let total: u64 = ranks.iter().sum();
    let mut ways = vec![0f64; total as usize + 1];
    ways[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if ways[s] != 0.0 {
                ways[s + r] += ways[s];
            }
        }
        reach += r;
    }
    let all: f64 = 2f64.powi(ranks.len() as i32);
    let obs = observed as usize;
    let lower: f64 = ways[..=obs].iter().sum::<f64>() / all;
    let upper: f64 = ways[obs..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(n: usize, abs: &[f64], w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let dev = ((w_plus - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let std = Normal::standard();
    (2.0 * (1.0 - std.cdf(z))).min(1.0)
}
