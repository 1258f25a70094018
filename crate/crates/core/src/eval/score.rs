use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::predictions::PredictionSet;
use crate::aggregate::LabelMatrix;
use crate::par::Execution;
use crate::stats::{wilcoxon_signed_rank, WilcoxonOutcome};
use crate::taxonomy::{AnnotationRecord, Dimension};
use crate::{Error, Result};

/// F1 of one class given counts; a class that is neither present nor
/// predicted scores 1.
fn class_f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Unweighted mean of the yes-class and no-class F1.
///
/// A class with gold instances but no predictions (or the reverse) scores
/// 0; a class with neither scores 1.
pub fn two_class_f1(predicted: &[bool], gold: &[bool]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions for {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &g) in predicted.iter().zip(gold) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok((class_f1(tp, fp, fn_) + class_f1(tn, fn_, fp)) / 2.0)
}

fn f1_row(predicted: &[[bool; 14]], gold: &[[bool; 14]]) -> Result<[f64; 14]> {
    let mut out = [0.0; 14];
    for (d, slot) in out.iter_mut().enumerate() {
        let p: Vec<bool> = predicted.iter().map(|r| r[d]).collect();
        let g: Vec<bool> = gold.iter().map(|r| r[d]).collect();
        *slot = two_class_f1(&p, &g)?;
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub repetition: usize,
    pub fold: usize,
    pub f1: [f64; 14],
    pub macro_f1: f64,
}

/// Verdict of a paired comparison, attached to the report of `approach`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub approach: String,
    pub other: String,
    pub outcome: WilcoxonOutcome,
    pub alpha_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub approach: String,
    /// Fingerprint of the plan the folds come from.
    pub plan: String,
    /// Mean over folds, per dimension.
    pub per_dimension: [f64; 14],
    /// Unweighted mean of `per_dimension`.
    pub macro_f1: f64,
    pub folds: Vec<FoldScore>,
    #[serde(default)]
    pub significance: Vec<Significance>,
}

impl ScoreReport {
    pub fn get(&self, d: Dimension) -> f64 {
        self.per_dimension[d.index()]
    }

    pub fn fold_macros(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.macro_f1).collect()
    }
}

/// Two-class macro F1 of `predictions` against `gold` on every test fold of
/// `plan`, averaged over folds per dimension and then over dimensions.
pub fn score(predictions: &PredictionSet, gold: &LabelMatrix, plan: &FoldPlan, execution: Execution) -> Result<ScoreReport> {
    predictions.check_coverage(plan)?;
    let cells: Vec<(usize, usize, &[String])> = plan.iter().map(|(r, f, x)| (r, f, &x.test[..])).collect();
    let folds = execution
        .map(&cells, |&(r, f, test)| -> Result<FoldScore> {
            let g = gold.select(test)?;
            let p: Vec<[bool; 14]> = test
                .iter()
                .map(|id| *predictions.get(r, f, id).expect("coverage checked"))
                .collect();
            let f1 = f1_row(&p, &g)?;
            Ok(FoldScore {
                repetition: r,
                fold: f,
                f1,
                macro_f1: mean(&f1),
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    if folds.is_empty() {
        return Err(Error::InvalidInput("plan has no folds".into()));
    }
    let per_dimension: [f64; 14] =
        std::array::from_fn(|d| folds.iter().map(|f| f.f1[d]).sum::<f64>() / folds.len() as f64);
    Ok(ScoreReport {
        approach: predictions.approach.clone(),
        plan: plan.fingerprint(),
        macro_f1: mean(&per_dimension),
        per_dimension,
        folds,
        significance: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorScore {
    pub annotator: String,
    pub items: usize,
    pub f1: [f64; 14],
    pub macro_f1: f64,
}

/// Human upper bound: each annotator scored alone against the gold labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanPerformance {
    /// Mean over annotators, per dimension.
    pub per_dimension: [f64; 14],
    pub macro_f1: f64,
    pub by_annotator: Vec<AnnotatorScore>,
    /// Annotators that did not label every gold argument.
    pub partial: Vec<String>,
}

impl HumanPerformance {
    pub fn get(&self, d: Dimension) -> f64 {
        self.per_dimension[d.index()]
    }
}

/// Scores every annotator's labels (IN binarized) against `gold` over the
/// arguments they labelled, then averages the per-dimension scores over
/// annotators. Records for arguments outside `gold` are ignored.
pub fn human_performance(records: &[AnnotationRecord], gold: &LabelMatrix) -> Result<HumanPerformance> {
    let mut by: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        if gold.get(&r.argument_id).is_some() {
            by.entry(r.annotator_id.as_str()).or_default().push(r);
        }
    }
    if by.is_empty() {
        return Err(Error::InvalidInput("no annotation overlaps the gold labels".into()));
    }
    let mut by_annotator = Vec::with_capacity(by.len());
    let mut partial = Vec::new();
    for (who, recs) in by {
        if recs.len() < gold.len() {
            log::warn!("annotator {who} covers {} of {} gold arguments", recs.len(), gold.len());
            partial.push(who.to_string());
        }
        let p: Vec<[bool; 14]> = recs.iter().map(|r| r.binary_labels()).collect();
        let g: Vec<[bool; 14]> = recs
            .iter()
            .map(|r| *gold.get(&r.argument_id).expect("filtered above"))
            .collect();
        let f1 = f1_row(&p, &g)?;
        by_annotator.push(AnnotatorScore {
            annotator: who.to_string(),
            items: recs.len(),
            macro_f1: mean(&f1),
            f1,
        });
    }
    let per_dimension: [f64; 14] = std::array::from_fn(|d| {
        by_annotator.iter().map(|a| a.f1[d]).sum::<f64>() / by_annotator.len() as f64
    });
    Ok(HumanPerformance {
        macro_f1: mean(&per_dimension),
        per_dimension,
        by_annotator,
        partial,
    })
}

/// Wilcoxon signed-rank test over the paired per-fold macro F1 of two
/// reports built on the same plan. A positive statistic favours `a`.
pub fn significance(a: &ScoreReport, b: &ScoreReport, alpha_level: f64) -> Result<Significance> {
    if a.plan != b.plan {
        return Err(Error::Mismatch(format!(
            "reports come from different fold plans ({} vs {})",
            a.plan, b.plan
        )));
    }
    let same_cells = a.folds.len() == b.folds.len()
        && a.folds
            .iter()
            .zip(&b.folds)
            .all(|(x, y)| (x.repetition, x.fold) == (y.repetition, y.fold));
    if !same_cells {
        return Err(Error::Mismatch("reports list different folds".into()));
    }
    let outcome = wilcoxon_signed_rank(&a.fold_macros(), &b.fold_macros(), alpha_level)?;
    Ok(Significance {
        approach: a.approach.clone(),
        other: b.approach.clone(),
        outcome,
        alpha_level,
    })
}
