//! Repeated stratified cross-validation, baselines and scoring for
//! classifiers trained outside this crate.
//!
//! The workflow is file based: [`make_folds`] writes the plan, an external
//! trainer reads it together with [`class_weights`], and its predictions come
//! back as a [`PredictionSet`] to be [`score`]d.

mod folds;
mod predictions;
mod score;
mod weights;

pub use folds::{make_folds, make_folds_with, FoldConfig, FoldPlan, Folding, Split};
pub use predictions::{majority_baseline, random_baseline, PredictionKey, PredictionSet};
pub use score::{
    human_performance, score, significance, two_class_f1, AnnotatorScore, FoldScore, HumanPerformance, ScoreReport,
    Significance,
};
pub use weights::{class_weights, ClassWeights, MAX_WEIGHT, MIN_WEIGHT};
