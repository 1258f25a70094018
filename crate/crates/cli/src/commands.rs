use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use appropriateness::aggregate::{aggregate_strategy, mace_fit, mace_labels, AnnotatorCount, LabelMatrix, MaceConfig, Strategy};
use appropriateness::corpus::{
    import_released_annotations, import_released_gold, parse_annotations, Corpus, CorpusDir, DuplicatePolicy, Format,
    IngestReport, Source,
};
use appropriateness::eval::{
    class_weights, human_performance, majority_baseline, make_folds, random_baseline, score, significance, FoldPlan,
    PredictionSet, ScoreReport,
};
use appropriateness::report::{quality_table, table1b, table1c, table4, table5, Cell, OutputFormat, ScoreLine, Table};
use appropriateness::stats::{
    agreement, dimension_correlations, external_correlations, mean_labels, pair_reason_correlations, pearson_r,
    venn_overlap, Metric,
};
use appropriateness::taxonomy::validate;
use appropriateness::{Execution, ValidationMode};
use appropriateness_service::{router, AppState, CampaignSpec, Config, Registry, ServiceError, SystemClock};

use crate::{
    tables, BaselineKind, Command, CorrelateKind, Ctx, IngestKind, MetricArg, Mode, Reported, StrategyArg,
};

pub fn run(ctx: &Ctx, command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            kind,
            input,
            mode,
            skip_duplicates,
            roster,
        } => ingest(ctx, kind, &input, mode.into(), skip_duplicates, &roster),
        Command::Validate { input, mode } => validate_file(&input, mode.into()),
        Command::Aggregate {
            strategy,
            per_argument,
            out,
        } => {
            let corpus = load(ctx)?;
            let counts = if per_argument {
                AnnotatorCount::PerArgument
            } else {
                AnnotatorCount::Uniform
            };
            let labels = aggregate_strategy(corpus.annotations(), strategy.into(), counts)?;
            labels.write_tsv(sink(out.as_deref())?)?;
            Ok(())
        }
        Command::Mace {
            seed,
            restarts,
            iterations,
            smoothing,
            out,
            model,
        } => {
            let corpus = load(ctx)?;
            let config = MaceConfig {
                iterations,
                restarts,
                smoothing,
                seed,
                execution: Execution::default(),
            };
            let fitted = mace_fit(corpus.annotations(), &config)?;
            if let Some(path) = model {
                write_json(&fitted, Some(&path))?;
            }
            mace_labels(&fitted).write_tsv(sink(out.as_deref())?)?;
            Ok(())
        }
        Command::Agreement { metric, out } => {
            let corpus = load(ctx)?;
            let report = agreement(corpus.annotations(), metric.into())?;
            emit(ctx, &table1b(&report), out.as_deref())
        }
        Command::Correlate {
            kind,
            source,
            dims,
            out,
        } => correlate(ctx, kind, &source, &dims, out.as_deref()),
        Command::Venn {
            dims,
            threshold,
            source,
        } => {
            let corpus = restrict(load(ctx)?, &source)?;
            let counts = venn_overlap(&corpus.quality_means(), &dims, threshold)?;
            if ctx.format == OutputFormat::Json {
                return write_json(&counts, None);
            }
            let mut columns = counts.dimensions.clone();
            columns.push("arguments".into());
            let mut t = Table {
                name: "venn".into(),
                title: format!("Arguments by low-rated dimensions (mean below {threshold})"),
                columns,
                rows: Vec::new(),
            };
            for (mask, n) in counts.cells.iter().enumerate() {
                let mut row: Vec<Cell> = (0..counts.dimensions.len())
                    .map(|i| Cell::Text(if mask & (1 << i) != 0 { "low" } else { "" }.into()))
                    .collect();
                row.push(Cell::Count(*n));
                t.rows.push(row);
            }
            emit(ctx, &t, None)
        }
        Command::Folds { seed, gold, out } => {
            let gold = gold_labels(ctx, gold.as_deref())?;
            let plan = make_folds(&gold, seed)?;
            plan.write_tsv(sink(out.as_deref())?)?;
            Ok(())
        }
        Command::Weights { gold, folds, out } => {
            let gold = gold_labels(ctx, gold.as_deref())?;
            let plan = read_plan(&folds)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (r, f, folding) in plan.iter() {
                let weights = class_weights(&gold.select(&folding.train)?)?;
                let path = out.join(format!("weights-r{}-f{}.tsv", r + 1, f + 1));
                weights.write_tsv(sink(Some(&path))?)?;
            }
            Ok(())
        }
        Command::Baseline {
            kind,
            seed,
            gold,
            folds,
            out,
        } => {
            let plan = read_plan(&folds)?;
            let predictions = match kind {
                BaselineKind::Random => random_baseline(&plan, seed.expect("clap requires a seed")),
                BaselineKind::Majority => majority_baseline(&plan, &gold_labels(ctx, gold.as_deref())?)?,
            };
            predictions.write_tsv(sink(out.as_deref())?)?;
            Ok(())
        }
        Command::Score {
            pred,
            gold,
            folds,
            name,
            report,
        } => {
            let gold = gold_labels(ctx, gold.as_deref())?;
            let plan = read_plan(&folds)?;
            let name = name.unwrap_or_else(|| {
                pred.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "predictions".into())
            });
            let file = File::open(&pred).with_context(|| format!("opening {}", pred.display()))?;
            let predictions = PredictionSet::read_tsv(name, file)?;
            let scored = score(&predictions, &gold, &plan, Execution::default())?;
            if let Some(path) = report {
                write_json(&scored, Some(&path))?;
            }
            emit(ctx, &table5(&[ScoreLine::from(&scored)]), None)
        }
        Command::Human { gold } => {
            let corpus = load(ctx)?;
            let gold = gold_labels(ctx, gold.as_deref())?;
            let human = human_performance(corpus.annotations(), &gold)?;
            if ctx.format == OutputFormat::Json {
                return write_json(&human, None);
            }
            emit(ctx, &table5(&[ScoreLine::from(&human)]), None)
        }
        Command::Significance { a, b, alpha } => {
            let a = read_score(&a)?;
            let b = read_score(&b)?;
            write_json(&significance(&a, &b, alpha)?, None)
        }
        Command::Serve { host, port, campaign } => serve(ctx, &host, port, campaign.as_deref()),
        Command::Report {
            table,
            seed,
            folds,
            scores,
            out,
        } => {
            let corpus = load(ctx)?;
            let inputs = tables::Inputs {
                corpus: &corpus,
                seed,
                folds: folds.map(|p| read_plan(&p)).transpose()?,
                scores: scores.iter().map(|p| read_score(p)).collect::<Result<_>>()?,
            };
            let built = tables::build(&inputs, table)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                    for t in &built {
                        let path = dir.join(format!("{}.{}", t.name, ctx.format.extension()));
                        t.write(sink(Some(&path))?, ctx.format)?;
                    }
                    Ok(())
                }
                None if ctx.format == OutputFormat::Json && built.len() > 1 => write_json(&built, None),
                None => {
                    let mut w = sink(None)?;
                    for (i, t) in built.iter().enumerate() {
                        if i > 0 {
                            writeln!(w)?;
                        }
                        t.write(&mut w, ctx.format)?;
                    }
                    w.flush()?;
                    Ok(())
                }
            }
        }
    }
}

impl From<Mode> for ValidationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Strict => ValidationMode::Strict,
            Mode::Lenient => ValidationMode::Lenient,
        }
    }
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Liberal => Strategy::Liberal,
            StrategyArg::Majority => Strategy::Majority,
            StrategyArg::Conservative => Strategy::Conservative,
        }
    }
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Nominal => Metric::Nominal,
            MetricArg::Ordinal => Metric::Ordinal,
        }
    }
}

fn load(ctx: &Ctx) -> Result<Corpus> {
    let dir = ctx.corpus_dir();
    CorpusDir::new(&dir)
        .load()
        .with_context(|| format!("loading the corpus store at {}", dir.display()))
}

/// Keeps the arguments of the given source tags; all of them when empty.
fn restrict(corpus: Corpus, sources: &[String]) -> Result<Corpus> {
    if sources.is_empty() {
        return Ok(corpus);
    }
    let keep = sources
        .iter()
        .map(|s| Source::from_str(s))
        .collect::<appropriateness::Result<Vec<_>>>()?;
    Ok(corpus.filtered(|a| keep.contains(&a.source)))
}

fn input_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "json") => Format::Jsonl,
        _ => Format::Tsv,
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

/// Stdout, or a created file.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json<T: Serialize + ?Sized>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn emit(ctx: &Ctx, table: &Table, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    table.write(&mut w, ctx.format)?;
    w.flush()?;
    Ok(())
}

fn read_plan(path: &Path) -> Result<FoldPlan> {
    FoldPlan::read_tsv(open(path)?).with_context(|| format!("reading folds from {}", path.display()))
}

fn read_score(path: &Path) -> Result<ScoreReport> {
    serde_json::from_reader(open(path)?).with_context(|| format!("reading a score report from {}", path.display()))
}

/// The label file when given, otherwise conservative labels of the store.
fn gold_labels(ctx: &Ctx, path: Option<&Path>) -> Result<LabelMatrix> {
    match path {
        Some(p) => LabelMatrix::read_tsv(open(p)?).with_context(|| format!("reading labels from {}", p.display())),
        None => {
            let corpus = load(ctx)?;
            if corpus.annotations().is_empty() {
                bail!("the corpus store has no annotations; pass --gold");
            }
            Ok(aggregate_strategy(
                corpus.annotations(),
                Strategy::Conservative,
                AnnotatorCount::Uniform,
            )?)
        }
    }
}

#[derive(Serialize)]
struct IngestSummary {
    kind: String,
    report: IngestReport,
    lines_written: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    files: Vec<String>,
}

fn ingest(
    ctx: &Ctx,
    kind: IngestKind,
    input: &Path,
    mode: ValidationMode,
    skip_duplicates: bool,
    roster: &[String],
) -> Result<()> {
    let store = CorpusDir::new(ctx.corpus_dir());
    let mut writer = store.lock()?;
    let mut corpus = store.load()?;
    if !roster.is_empty() {
        corpus.declare_roster(roster.iter().cloned());
        writer.write_roster(roster)?;
    }
    let duplicates = if skip_duplicates {
        DuplicatePolicy::SkipWithWarning
    } else {
        DuplicatePolicy::Reject
    };
    let reader = open(input)?;
    let format = input_format(input);
    let mut files = Vec::new();
    let report = match kind {
        IngestKind::Arguments => IngestReport {
            ingested: corpus.ingest_arguments(reader, format, duplicates)?,
            ..IngestReport::default()
        },
        IngestKind::Annotations => corpus.ingest_annotations(reader, format, mode, duplicates)?,
        IngestKind::Ratings => corpus.ingest_ratings(reader, format, duplicates)?,
        IngestKind::Pairs => corpus.ingest_pairs(reader, format)?,
        IngestKind::ReleasedAnnotations => import_released_annotations(&mut corpus, reader, mode)?,
        IngestKind::ReleasedGold => {
            let released = import_released_gold(reader)?;
            let mut ingested = 0;
            for a in released.corpus.arguments() {
                ingested += usize::from(corpus.add_argument(a.clone(), duplicates)?);
            }
            let labels = store.path().join("released-gold.tsv");
            released.labels.write_tsv(sink(Some(&labels))?)?;
            files.push(labels.display().to_string());
            if let Some(plan) = &released.folds {
                let path = store.path().join("released-folds.tsv");
                plan.write_tsv(sink(Some(&path))?)?;
                files.push(path.display().to_string());
            }
            IngestReport {
                ingested,
                ..IngestReport::default()
            }
        }
    };
    let lines_written = writer.commit(&corpus)?;
    let kind = format!("{kind:?}");
    write_json(
        &IngestSummary {
            kind,
            report,
            lines_written,
            files,
        },
        None,
    )
}

#[derive(Serialize)]
struct Invalid {
    line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    argument_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    annotator_id: Option<String>,
    problems: Vec<Problem>,
}

#[derive(Serialize)]
struct Problem {
    #[serde(skip_serializing_if = "Option::is_none")]
    dimension: Option<String>,
    message: String,
}

fn validate_file(input: &Path, mode: ValidationMode) -> Result<()> {
    let lines = parse_annotations(open(input)?, input_format(input))?;
    let mut invalid = Vec::new();
    let mut warnings = 0;
    for (line, parsed) in &lines {
        let record = match parsed {
            Ok(r) => r,
            Err(message) => {
                invalid.push(Invalid {
                    line: *line,
                    argument_id: None,
                    annotator_id: None,
                    problems: vec![Problem {
                        dimension: None,
                        message: message.clone(),
                    }],
                });
                continue;
            }
        };
        let problems = match validate(record, mode) {
            Err(structural) => vec![Problem {
                dimension: None,
                message: structural.to_string(),
            }],
            Ok(report) => {
                warnings += report.warnings.len();
                report
                    .violations
                    .iter()
                    .map(|v| Problem {
                        dimension: Some(v.dimension().code().to_string()),
                        message: v.to_string(),
                    })
                    .collect()
            }
        };
        if !problems.is_empty() {
            invalid.push(Invalid {
                line: *line,
                argument_id: Some(record.argument_id.clone()),
                annotator_id: Some(record.annotator_id.clone()),
                problems,
            });
        }
    }
    let failed = !invalid.is_empty();
    write_json(
        &serde_json::json!({
            "checked": lines.len(),
            "valid": lines.len() - invalid.len(),
            "warnings": warnings,
            "invalid": invalid,
        }),
        None,
    )?;
    if failed {
        return Err(Reported.into());
    }
    Ok(())
}

fn correlate(ctx: &Ctx, kind: CorrelateKind, source: &[String], dims: &[String], out: Option<&Path>) -> Result<()> {
    let corpus = restrict(load(ctx)?, source)?;
    let records = corpus.annotations();
    match kind {
        CorrelateKind::Dimensions => emit(ctx, &table1c(&dimension_correlations(records, Execution::default())?), out),
        CorrelateKind::Quality => {
            let means = corpus.quality_means();
            let qualities: Vec<String> = if dims.is_empty() {
                means.keys().cloned().collect()
            } else {
                dims.to_vec()
            };
            let m = external_correlations(&mean_labels(records), &means, &qualities)?;
            emit(
                ctx,
                &quality_table("quality", "Kendall's tau-b of mean quality ratings with appropriateness", &m),
                out,
            )
        }
        CorrelateKind::Reasons => emit(
            ctx,
            &table4(&pair_reason_correlations(corpus.pairs(), &mean_labels(records))?),
            out,
        ),
        CorrelateKind::Pearson => {
            let [x, y] = dims else {
                bail!("pearson needs exactly two quality dimensions in --dims");
            };
            let means = corpus.quality_means();
            let (xs, ys) = paired_means(&means, x, y)?;
            let r = pearson_r(&xs, &ys)?;
            let t = Table {
                name: "pearson".into(),
                title: format!("Pearson's r between mean {x} and mean {y} ratings"),
                columns: ["x", "y", "arguments", "r"].map(String::from).to_vec(),
                rows: vec![vec![
                    Cell::Text(x.clone()),
                    Cell::Text(y.clone()),
                    Cell::Count(xs.len()),
                    Cell::from(r),
                ]],
            };
            emit(ctx, &t, out)
        }
    }
}

/// Mean ratings of the arguments rated on both dimensions, by argument id.
pub fn paired_means(
    means: &std::collections::BTreeMap<String, std::collections::BTreeMap<String, f64>>,
    x: &str,
    y: &str,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let get = |d: &str| {
        means
            .get(d)
            .ok_or_else(|| anyhow::anyhow!("no ratings for quality dimension `{d}`"))
    };
    let (mx, my) = (get(x)?, get(y)?);
    Ok(mx
        .iter()
        .filter_map(|(id, a)| my.get(id).map(|b| (*a, *b)))
        .unzip())
}

fn serve(ctx: &Ctx, host: &str, port: u16, campaign: Option<&Path>) -> Result<()> {
    let mut config = Config::from_env(ctx.campaigns_dir())?;
    config.data_dir = ctx.campaigns_dir();
    let registry = Registry::open(&config.data_dir, Arc::new(SystemClock), config.pacing_window)?;
    if let Some(path) = campaign {
        let spec: CampaignSpec = serde_json::from_reader(open(path)?)
            .with_context(|| format!("reading a campaign spec from {}", path.display()))?;
        match registry.create(spec) {
            Ok(_) | Err(ServiceError::CampaignExists(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let app = router(AppState {
        registry: Arc::new(registry),
        admin_token: config.admin_token.clone(),
    });
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        appropriateness_service::serve(listener, app).await?;
        Ok(())
    })
}
