//! `appropriateness`: ingest annotation data, aggregate labels, compute
//! agreement and correlations, run the evaluation protocol, serve a
//! campaign and render the result tables.
//!
//! Usage errors exit with 2 (clap's default). Data errors exit with 1 and
//! print a JSON object `{"error", "message", "causes"}` on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use appropriateness::report::OutputFormat;

mod commands;
mod tables;

#[derive(Debug, Parser)]
#[command(name = "appropriateness", version, about = "Appropriateness annotation toolkit")]
struct Cli {
    /// Data directory: the corpus store lives in `corpus/`, campaigns in
    /// `campaigns/`.
    #[arg(long, global = true, env = "APPROPRIATENESS_DATA_DIR", default_value = "appropriateness-data")]
    data: PathBuf,

    /// Rendering of tables and reports.
    #[arg(long, global = true, value_enum, default_value_t = Fmt::Csv)]
    format: Fmt,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Fmt {
    Csv,
    Md,
    Json,
}

impl From<Fmt> for OutputFormat {
    fn from(f: Fmt) -> Self {
        match f {
            Fmt::Csv => OutputFormat::Csv,
            Fmt::Md => OutputFormat::Md,
            Fmt::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IngestKind {
    Arguments,
    Annotations,
    Ratings,
    Pairs,
    /// A released aggregated-labels file (arguments, labels, folds).
    ReleasedGold,
    /// A released per-annotator file.
    ReleasedAnnotations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Liberal,
    Majority,
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Nominal,
    Ordinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrelateKind {
    /// Dimension by dimension, averaged over annotators.
    Dimensions,
    /// External quality ratings against mean labels.
    Quality,
    /// Convincingness pair reasons against label differences.
    Reasons,
    /// Pearson's r between two quality dimensions.
    Pearson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    Random,
    Majority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportTable {
    Table1a,
    Table1b,
    Table1c,
    Table2,
    Table3,
    Table4,
    Table5,
    Table7,
    Table8,
    Table9,
    Table10,
    Table11,
    CorpusStats,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add a file to the corpus store.
    Ingest {
        #[arg(long, value_enum)]
        kind: IngestKind,
        #[arg(long = "in")]
        input: PathBuf,
        /// Validation of annotation records.
        #[arg(long, value_enum, default_value_t = Mode::Lenient)]
        mode: Mode,
        /// Skip items whose key is already stored instead of failing.
        #[arg(long)]
        skip_duplicates: bool,
        /// Roster of annotators, comma separated. Annotation ingestion then
        /// rejects anyone not on it.
        #[arg(long, value_delimiter = ',')]
        roster: Vec<String>,
    },
    /// Check an annotation file without storing it. Exits 1 on violations.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Strict)]
        mode: Mode,
    },
    /// Rule-based label aggregation.
    Aggregate {
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        /// Use each argument's own annotator count instead of failing on
        /// unequal panels.
        #[arg(long)]
        per_argument: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit MACE and write its labels.
    Mace {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        /// Additive smoothing; 0.1 / K when omitted.
        #[arg(long)]
        smoothing: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the fitted model as JSON.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Full agreement and Krippendorff's alpha per dimension.
    Agreement {
        /// Difference function for the 3-point IN rating.
        #[arg(long, value_enum, default_value_t = MetricArg::Ordinal)]
        metric: MetricArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kendall's tau-b (or Pearson's r) correlations.
    Correlate {
        #[arg(long, value_enum)]
        kind: CorrelateKind,
        /// Restrict to arguments of these sources (comma separated tags).
        #[arg(long, value_delimiter = ',')]
        source: Vec<String>,
        /// Quality dimensions: rows for `quality`, exactly two for `pearson`.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlap of arguments rated low on several quality dimensions.
    Venn {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<String>,
        /// Mean ratings strictly below this count as low.
        #[arg(long, default_value_t = 2.0)]
        threshold: f64,
        #[arg(long, value_delimiter = ',')]
        source: Vec<String>,
    },
    /// Stratified repeated cross-validation folds.
    Folds {
        #[arg(long)]
        seed: u64,
        /// Label matrix to stratify on; conservative labels when omitted.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class weights of every training split, one file per folding.
    Weights {
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        folds: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Baseline predictions over a fold plan.
    Baseline {
        #[arg(long, value_enum)]
        kind: BaselineKind,
        #[arg(long, required_if_eq("kind", "random"))]
        seed: Option<u64>,
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        folds: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-class macro F1 of predictions over a fold plan.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        folds: PathBuf,
        /// Approach name; the prediction file stem when omitted.
        #[arg(long)]
        name: Option<String>,
        /// Write the full report (per fold) as JSON for `significance`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Each annotator scored against the gold labels.
    Human {
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Wilcoxon signed-rank test between two score reports.
    Significance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Run the campaign server.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Create this campaign on start unless it already exists.
        #[arg(long)]
        campaign: Option<PathBuf>,
    },
    /// Render result tables from the stored corpus.
    Report {
        #[arg(value_enum)]
        table: ReportTable,
        /// Seed for MACE and for the folds and random baseline.
        #[arg(long)]
        seed: u64,
        /// Published folds to use instead of generating them.
        #[arg(long)]
        folds: Option<PathBuf>,
        /// Extra score reports (JSON from `score --report`) for table5.
        #[arg(long, value_delimiter = ',')]
        scores: Vec<PathBuf>,
        /// Write one file per table here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub struct Ctx {
    pub data: PathBuf,
    pub format: OutputFormat,
}

impl Ctx {
    pub fn corpus_dir(&self) -> PathBuf {
        self.data.join("corpus")
    }

    pub fn campaigns_dir(&self) -> PathBuf {
        self.data.join("campaigns")
    }
}

/// Raised by a subcommand to ask for exit code 1 after it has already
/// printed its own report.
#[derive(Debug)]
pub struct Reported;

impl std::fmt::Display for Reported {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("failure already reported")
    }
}

impl std::error::Error for Reported {}

fn error_kind(e: &anyhow::Error) -> String {
    if let Some(core) = e.downcast_ref::<appropriateness::Error>() {
        let debug = format!("{core:?}");
        let name: String = debug.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
        let mut snake = String::new();
        for (i, c) in name.chars().enumerate() {
            if c.is_ascii_uppercase() && i > 0 {
                snake.push('_');
            }
            snake.push(c.to_ascii_lowercase());
        }
        return snake;
    }
    if e.downcast_ref::<appropriateness_service::ServiceError>().is_some() {
        return "service".into();
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "io".into();
    }
    if e.downcast_ref::<serde_json::Error>().is_some() {
        return "json".into();
    }
    "data".into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let ctx = Ctx {
        data: cli.data,
        format: cli.format.into(),
    };
    match commands::run(&ctx, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Reported>() => ExitCode::from(1),
        Err(e) => {
            let report = serde_json::json!({
                "error": error_kind(&e),
                "message": e.to_string(),
                "causes": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
            });
            eprintln!("{report}");
            ExitCode::from(1)
        }
    }
}
