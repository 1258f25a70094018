//! MACE: annotator reliability estimated by EM.
//!
//! Each item has a latent true label `t` with a uniform prior. Annotator `j`
//! spams with probability `theta[j]`; a spamming annotator draws its label
//! from `xi[j]`, otherwise it copies `t`:
//!
//! ```text
//! P(a | t) = (1 - theta_j) [a = t] + theta_j xi_j(a)
//! ```
//!
//! The M-step adds `smoothing` to every fractional count. That is the MAP
//! update under Beta / Dirichlet priors, so the penalized objective
//!
//! ```text
//! loglik + s * sum_j (ln theta_j + ln(1 - theta_j) + sum_c ln xi_j(c))
//! ```
//!
//! never decreases across iterations. Restarts are ranked by the plain
//! log-likelihood of their final parameters.

use std::collections::{BTreeSet, HashMap};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{LabelMatrix, Provenance};
use crate::par::Execution;
use crate::rng;
use crate::taxonomy::{AnnotationRecord, Dimension};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaceConfig {
    pub iterations: usize,
    pub restarts: usize,
    /// Additive smoothing; `None` means `0.1 / K` for `K` labels.
    pub smoothing: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for MaceConfig {
    fn default() -> Self {
        MaceConfig {
            iterations: 50,
            restarts: 10,
            smoothing: None,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl MaceConfig {
    pub fn smoothing_for(&self, k: usize) -> f64 {
        self.smoothing.unwrap_or(0.1 / k as f64)
    }
}

/// Sparse label table for one categorical variable: per item, the
/// `(annotator, label)` pairs observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemLabels {
    pub labels: usize,
    pub annotators: usize,
    pub items: Vec<Vec<(usize, usize)>>,
}

impl ItemLabels {
    fn check(&self) -> Result<()> {
        if self.labels < 2 {
            return Err(Error::Degenerate("need at least two labels".into()));
        }
        if self.annotators < 2 {
            return Err(Error::Degenerate("need at least two annotators".into()));
        }
        for (i, item) in self.items.iter().enumerate() {
            if item.is_empty() {
                return Err(Error::InvalidInput(format!("item {i} has no annotation")));
            }
            for &(j, a) in item {
                if j >= self.annotators || a >= self.labels {
                    return Err(Error::InvalidInput(format!(
                        "item {i}: annotator {j} / label {a} out of range"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Model parameters between EM steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EmState {
    pub theta: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
}

/// Result of one E-step at the current parameters, plus the M-step update.
#[derive(Debug, Clone, PartialEq)]
pub struct EmStep {
    pub posterior: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub objective: f64,
    pub next: EmState,
}

impl EmState {
    /// `theta = 0.5`, uniform `xi`.
    pub fn uniform(annotators: usize, labels: usize) -> Self {
        EmState {
            theta: vec![0.5; annotators],
            xi: vec![vec![1.0 / labels as f64; labels]; annotators],
        }
    }

    fn perturbed(annotators: usize, labels: usize, rng: &mut rng::Rng) -> Self {
        let theta = (0..annotators).map(|_| 0.4 + 0.2 * rng.random::<f64>()).collect();
        let xi = (0..annotators)
            .map(|_| {
                let raw: Vec<f64> = (0..labels).map(|_| 1.0 + 0.2 * rng.random::<f64>()).collect();
                let z: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / z).collect()
            })
            .collect();
        EmState { theta, xi }
    }

    fn log_prior(&self, s: f64) -> f64 {
        let mut total = 0.0;
        for (t, xi) in self.theta.iter().zip(&self.xi) {
            total += s * (t.ln() + (1.0 - t).ln());
            total += s * xi.iter().map(|x| x.ln()).sum::<f64>();
        }
        total
    }

    /// E-step at `self` followed by the smoothed M-step. `None` when the
    /// likelihood is not finite.
    pub fn step(&self, data: &ItemLabels, smoothing: f64) -> Option<EmStep> {
        let k = data.labels;
        let m = data.annotators;
        let log_prior_t = -(k as f64).ln();
        let mut spam = vec![0.0; m];
        let mut copy = vec![0.0; m];
        let mut spam_labels = vec![vec![0.0; k]; m];
        let mut posterior = Vec::with_capacity(data.items.len());
        let mut ll = 0.0;
        let mut logw = vec![0.0; k];

        for item in &data.items {
            for (t, lw) in logw.iter_mut().enumerate() {
                *lw = log_prior_t;
                for &(j, a) in item {
                    let p = self.theta[j] * self.xi[j][a] + if a == t { 1.0 - self.theta[j] } else { 0.0 };
                    *lw += p.ln();
                }
            }
            let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !top.is_finite() {
                return None;
            }
            let z: f64 = logw.iter().map(|lw| (lw - top).exp()).sum();
            ll += top + z.ln();
            let post: Vec<f64> = logw.iter().map(|lw| (lw - top).exp() / z).collect();

            for &(j, a) in item {
                let spam_mass = self.theta[j] * self.xi[j][a];
                for (t, &pt) in post.iter().enumerate() {
                    let copy_mass = if a == t { 1.0 - self.theta[j] } else { 0.0 };
                    let denom = copy_mass + spam_mass;
                    let q = if denom > 0.0 { copy_mass / denom } else { 0.0 };
                    copy[j] += pt * q;
                    spam[j] += pt * (1.0 - q);
                    spam_labels[j][a] += pt * (1.0 - q);
                }
            }
            posterior.push(post);
        }

        let objective = ll + self.log_prior(smoothing);
        if !objective.is_finite() {
            return None;
        }
        let s = smoothing;
        let theta = (0..m).map(|j| (spam[j] + s) / (spam[j] + copy[j] + 2.0 * s)).collect();
        let xi = spam_labels
            .iter()
            .map(|counts| {
                let z: f64 = counts.iter().sum::<f64>() + k as f64 * s;
                counts.iter().map(|c| (c + s) / z).collect()
            })
            .collect();
        Some(EmStep {
            posterior,
            log_likelihood: ll,
            objective,
            next: EmState { theta, xi },
        })
    }
}

/// A fitted model for one categorical variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalFit {
    /// Spamming probability per annotator.
    pub theta: Vec<f64>,
    /// Label distribution per annotator when spamming.
    pub xi: Vec<Vec<f64>>,
    /// Distribution over the true label per item.
    pub posterior: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    /// Penalized objective at the final parameters.
    pub objective: f64,
    /// Index of the restart that was kept.
    pub restart: usize,
    /// Penalized objective before each M-step of the kept restart, then at
    /// the final parameters.
    pub trace: Vec<f64>,
}

impl CategoricalFit {
    /// Posterior argmax per item; ties go to the lowest label index.
    pub fn labels(&self) -> Vec<usize> {
        self.posterior
            .iter()
            .map(|p| {
                let mut best = 0;
                for (c, &v) in p.iter().enumerate() {
                    if v > p[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

fn run_restart(data: &ItemLabels, config: &MaceConfig, stream: u64, restart: usize) -> Option<CategoricalFit> {
    let s = config.smoothing_for(data.labels);
    let mut r = rng::stream(config.seed, stream.wrapping_add(restart as u64));
    let mut state = EmState::perturbed(data.annotators, data.labels, &mut r);
    let mut trace = Vec::with_capacity(config.iterations + 1);
    for _ in 0..config.iterations {
        let step = state.step(data, s)?;
        trace.push(step.objective);
        state = step.next;
    }
    let last = state.step(data, s)?;
    trace.push(last.objective);
    Some(CategoricalFit {
        theta: state.theta,
        xi: state.xi,
        posterior: last.posterior,
        log_likelihood: last.log_likelihood,
        objective: last.objective,
        restart,
        trace,
    })
}

fn best(fits: impl IntoIterator<Item = Option<CategoricalFit>>) -> Option<CategoricalFit> {
    let mut out: Option<CategoricalFit> = None;
    for fit in fits.into_iter().flatten() {
        let better = match &out {
            None => true,
            Some(b) => fit.log_likelihood > b.log_likelihood,
        };
        if better {
            out = Some(fit);
        }
    }
    out
}

fn stream_base(variable: u16) -> u64 {
    rng::stream_id(&[7, variable])
}

/// Fits one variable with `config.restarts` seeded restarts and keeps the
/// one with the highest log-likelihood (earliest restart on ties).
pub fn fit_categorical(data: &ItemLabels, config: &MaceConfig, variable: u16) -> Result<CategoricalFit> {
    data.check()?;
    let restarts = config.restarts.max(1);
    let base = stream_base(variable) << 16;
    let fits = config.execution.map_range(restarts, |r| run_restart(data, config, base, r));
    best(fits).ok_or_else(|| Error::Degenerate("no restart reached a finite likelihood".into()))
}

/// A fitted model over all 14 dimensions (IN binarized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaceModel {
    pub config: MaceConfig,
    pub annotators: Vec<String>,
    pub items: Vec<String>,
    /// One fit per dimension, in taxonomy order.
    pub dimensions: Vec<CategoricalFit>,
}

impl MaceModel {
    pub fn fit(&self, d: Dimension) -> &CategoricalFit {
        &self.dimensions[d.index()]
    }

    pub fn log_likelihood(&self) -> f64 {
        self.dimensions.iter().map(|f| f.log_likelihood).sum()
    }
}

/// Per-dimension EM over binary labels. Restarts of all dimensions run as
/// one parallel batch and are merged deterministically.
pub fn mace_fit(records: &[AnnotationRecord], config: &MaceConfig) -> Result<MaceModel> {
    let annotators: Vec<String> = records
        .iter()
        .map(|r| r.annotator_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if annotators.len() < 2 {
        return Err(Error::Degenerate(format!(
            "MACE needs at least two annotators, found {}",
            annotators.len()
        )));
    }
    let annotator_index: HashMap<&str, usize> =
        annotators.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();

    let groups = super::by_argument(records);
    let items: Vec<String> = groups.iter().map(|(id, _)| id.to_string()).collect();
    let tables: Vec<ItemLabels> = Dimension::ALL
        .iter()
        .map(|d| ItemLabels {
            labels: 2,
            annotators: annotators.len(),
            items: groups
                .iter()
                .map(|(_, recs)| {
                    recs.iter()
                        .map(|r| (annotator_index[r.annotator_id.as_str()], usize::from(r.flag(*d))))
                        .collect()
                })
                .collect(),
        })
        .collect();
    for t in &tables {
        t.check()?;
    }

    let restarts = config.restarts.max(1);
    let fits = config.execution.map_range(Dimension::COUNT * restarts, |n| {
        let (d, r) = (n / restarts, n % restarts);
        run_restart(&tables[d], config, stream_base(d as u16) << 16, r)
    });
    let mut per_dim = Vec::with_capacity(Dimension::COUNT);
    let mut fits = fits.into_iter();
    for d in Dimension::ALL {
        let chunk: Vec<_> = fits.by_ref().take(restarts).collect();
        per_dim.push(best(chunk).ok_or(Error::NonFiniteLikelihood(d))?);
    }
    Ok(MaceModel {
        config: *config,
        annotators,
        items,
        dimensions: per_dim,
    })
}

/// Posterior argmax labels; a 0.5 / 0.5 posterior resolves to `no`.
pub fn mace_labels(model: &MaceModel) -> LabelMatrix {
    mace_labels_with_threshold(model, 0.5)
}

/// `yes` iff the posterior of `yes` strictly exceeds `threshold`.
pub fn mace_labels_with_threshold(model: &MaceModel, threshold: f64) -> LabelMatrix {
    let mut out = LabelMatrix::new(Provenance::Mace);
    for (i, id) in model.items.iter().enumerate() {
        let mut row = [false; 14];
        for (d, fit) in model.dimensions.iter().enumerate() {
            row[d] = fit.posterior[i][1] > threshold;
        }
        out.push(id.clone(), row).expect("item ids are unique");
    }
    out
}
