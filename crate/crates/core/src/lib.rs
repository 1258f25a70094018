//! Toolkit for hierarchical appropriateness annotations of arguments.
//!
//! The crate covers the whole analysis path of an annotation campaign:
//!
//! * [`taxonomy`]: the fixed 14-dimension inappropriateness hierarchy and
//!   the validation / closure rules every annotation record must obey.
//! * [`corpus`]: arguments, annotations, external quality ratings and
//!   convincingness pair reasons, with TSV/JSONL ingestion and a
//!   directory-backed store.
//! * [`aggregate`]: rule-based label aggregation and the MACE
//!   annotator-reliability model fitted by EM.
//! * [`stats`]: Krippendorff's alpha, Kendall's tau-b, Pearson's r,
//!   Venn overlap counts and the Wilcoxon signed-rank test.
//! * [`eval`]: stratified repeated cross-validation, baselines, two-class
//!   macro F1 scoring, human upper bound and significance verdicts.
//! * [`report`]: CSV / Markdown renderings of the standard result tables.
//!
//! Parallel kernels run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to sequential loops otherwise; see
//! [`Execution`].

pub mod aggregate;
pub mod corpus;
pub mod error;
pub mod eval;
mod par;
pub mod report;
pub mod rng;
pub mod stats;
pub mod taxonomy;
mod tsv;

pub use error::{Error, Result};
pub use par::Execution;
pub use taxonomy::{AnnotationRecord, Dimension, ValidationMode};
