//! Agreement, correlation and significance statistics.

mod agreement;
mod alpha;
mod correlation;
mod rank;
mod venn;
mod wilcoxon;

pub use agreement::{agreement, full_agreement, AgreementReport, DimensionAgreement};
pub use alpha::{krippendorff_alpha, Alpha, Metric};
pub use correlation::{
    dimension_correlations, external_correlations, mean_labels, pair_reason_correlations, CorrelationMatrix,
};
pub use rank::{kendall_tau_b, pearson_r};
pub use venn::{venn_overlap, VennCounts};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonOutcome, WilcoxonTest, EXACT_LIMIT};
