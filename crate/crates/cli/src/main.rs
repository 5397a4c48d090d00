//! Command-line front end: ingestion, configuration, analysis, emission.
//!
//! Exit codes: 0 success, 1 selfcheck failure, 2 data error, 3 numerical
//! error. Identical inputs and flags produce byte-identical output.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use histent_core::analysis::{
    self, AnalysisConfig, AnalysisError, AnalysisRecord, CompareMetric, OutputFormat, RunMetadata,
};
use histent_core::coherent::{EmbeddingConfig, EmbeddingMode};
use histent_core::entropy::LogBase;
use histent_core::gram::GramError;
use histent_core::majorization::MajorizationError;
use histent_core::selfcheck;
use histent_core::timeseries::{self, Aggregation, ColumnSchema, WindowSpec};

/// Environment variable naming a directory searched for relative input
/// paths that do not resolve against the working directory.
const DATA_DIR_ENV: &str = "HISTENT_DATA_DIR";

const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "histent",
    version,
    about = "History-state spectral analysis of time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a price CSV: cumulative or per-window entanglement
    /// spectra, entropies and regime labels.
    Analyze(Box<AnalyzeArgs>),
    /// Run the embedded verification fixtures and print a pass/fail
    /// table.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input CSV (header row; ISO dates). Relative paths also resolve
    /// under $HISTENT_DATA_DIR.
    #[arg(long)]
    input: PathBuf,

    /// Date column of the input.
    #[arg(long, default_value = "Date")]
    date_column: String,

    /// Value column of the input.
    #[arg(long, default_value = "Open")]
    value_column: String,

    /// Distinguishability width, in units of one price unit.
    #[arg(long, default_value_t = 1.0)]
    sigma_r: f64,

    /// Embed logarithms of prices instead of raw prices.
    #[arg(long)]
    log_prices: bool,

    /// Rényi order to report; repeatable. Defaults to 1 and 2.
    #[arg(long = "q", value_name = "Q")]
    qs: Vec<f64>,

    /// History shape: full, month, week, or fixed:K.
    #[arg(long, default_value = "full")]
    window: String,

    /// Prefix stride for --window full. Defaults to 10, or 1 when only
    /// q = 2 is requested (purity fast path, no eigendecompositions).
    #[arg(long)]
    stride: Option<usize>,

    /// Reference index CSV compared against per-window indicators
    /// (window modes only).
    #[arg(long)]
    reference: Option<PathBuf>,

    /// Value column of the reference CSV.
    #[arg(long, default_value = "Close")]
    reference_value_column: String,

    /// Reduction of the reference's daily values inside each window.
    #[arg(long, value_enum, default_value_t = AggArg::Mean)]
    reference_agg: AggArg,

    /// Indicator compared against the reference. Defaults to e2 when
    /// q = 2 is reported, ne otherwise.
    #[arg(long, value_enum)]
    compare_metric: Option<MetricArg>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Output path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Leading spectrum weights kept per record.
    #[arg(long, default_value_t = 15)]
    spectrum_head: usize,

    /// Base entropies are reported in.
    #[arg(long, value_enum, default_value_t = BaseArg::Bits)]
    base: BaseArg,
}

#[derive(Args)]
struct SelfcheckArgs {
    /// Corrupts the named fixture (error-path test hook).
    #[arg(long, hide = true)]
    fault: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseArg {
    Bits,
    Nats,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggArg {
    Mean,
    Last,
    First,
    Max,
}

impl AggArg {
    fn to_core(self) -> Aggregation {
        match self {
            AggArg::Mean => Aggregation::Mean,
            AggArg::Last => Aggregation::Last,
            AggArg::First => Aggregation::First,
            AggArg::Max => Aggregation::Max,
        }
    }

    fn name(self) -> &'static str {
        match self {
            AggArg::Mean => "mean",
            AggArg::Last => "last",
            AggArg::First => "first",
            AggArg::Max => "max",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    /// Quadratic Rényi entropy.
    E2,
    /// Effective state count 2^E.
    Ne,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn data(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(err: AnalysisError) -> Failure {
        let code = match &err {
            AnalysisError::Gram(GramError::Indefinite { .. })
            | AnalysisError::Gram(GramError::Eigensolver(_))
            | AnalysisError::PurityCrossCheck { .. }
            | AnalysisError::Majorization(MajorizationError::InternalMajorizationViolation {
                ..
            }) => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<timeseries::TimeSeriesError> for Failure {
    fn from(err: timeseries::TimeSeriesError) -> Failure {
        Failure::data(err.to_string())
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze(args) => match run_analyze(*args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(failure) => {
                eprintln!("error: {}", failure.message);
                ExitCode::from(failure.code)
            }
        },
        Command::Selfcheck(args) => run_selfcheck(&args),
    }
}

fn run_selfcheck(args: &SelfcheckArgs) -> ExitCode {
    let results = selfcheck::run(args.fault.as_deref());
    println!("{:<26}{:<8}detail", "fixture", "status");
    for r in &results {
        println!(
            "{:<26}{:<8}{}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    if selfcheck::all_passed(&results) {
        ExitCode::SUCCESS
    } else {
        let failed: Vec<&str> = results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name)
            .collect();
        eprintln!("error: failing fixtures: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}

/// Window flag: `full` means cumulative prefixes, anything else is a
/// partition spec.
fn parse_window(text: &str) -> Result<Option<WindowSpec>, Failure> {
    match text {
        "full" => Ok(None),
        "month" => Ok(Some(WindowSpec::CalendarMonth)),
        "week" => Ok(Some(WindowSpec::TradingWeek)),
        other => {
            if let Some(count) = other.strip_prefix("fixed:") {
                let k: usize = count
                    .parse()
                    .map_err(|_| Failure::data(format!("invalid window size in {other:?}")))?;
                if k == 0 {
                    return Err(Failure::data("fixed window size must be at least 1"));
                }
                Ok(Some(WindowSpec::FixedCount(k)))
            } else {
                Err(Failure::data(format!(
                    "unknown window {other:?}; expected full, month, week or fixed:K"
                )))
            }
        }
    }
}

fn resolve_input(path: &PathBuf) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.clone();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => {
            let candidate = PathBuf::from(dir).join(path);
            if candidate.exists() {
                candidate
            } else {
                path.clone()
            }
        }
        None => path.clone(),
    }
}

fn read_series(path: &PathBuf, schema: &ColumnSchema) -> Result<timeseries::ParsedCsv, Failure> {
    let resolved = resolve_input(path);
    let file = File::open(&resolved)
        .map_err(|e| Failure::data(format!("cannot open {}: {e}", resolved.display())))?;
    Ok(timeseries::parse_price_csv(BufReader::new(file), schema)?)
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let window = parse_window(&args.window)?;
    if args.reference.is_some() && window.is_none() {
        return Err(Failure::data(
            "--reference needs a window mode (month, week or fixed:K)",
        ));
    }

    let schema = ColumnSchema {
        date: args.date_column.clone(),
        value: args.value_column.clone(),
    };
    let parsed = read_series(&args.input, &schema)?;
    if parsed.skipped > 0 {
        eprintln!(
            "warning: skipped {} row(s) with empty or null values",
            parsed.skipped
        );
    }
    let series = parsed.series;

    let mut qs = if args.qs.is_empty() {
        vec![1.0, 2.0]
    } else {
        args.qs.clone()
    };
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    qs.dedup();
    let q2_only = qs == [2.0];

    let config = AnalysisConfig {
        embedding: EmbeddingConfig {
            sigma: args.sigma_r,
            mode: if args.log_prices {
                EmbeddingMode::LogPrice
            } else {
                EmbeddingMode::Raw
            },
        },
        base: match args.base {
            BaseArg::Bits => LogBase::Bits,
            BaseArg::Nats => LogBase::Nats,
        },
        qs,
        spectrum_head: args.spectrum_head,
        ..Default::default()
    };

    let mut meta = RunMetadata {
        window: args.window.clone(),
        stride: None,
        method: "spectral".into(),
        inputs: vec![
            ("input".into(), args.input.display().to_string()),
            ("value_column".into(), args.value_column.clone()),
        ],
        reference_aggregation: None,
        comparison: None,
    };

    let records: Vec<AnalysisRecord> = match &window {
        None => {
            let stride = args.stride.unwrap_or(if q2_only { 1 } else { 10 });
            meta.stride = Some(stride);
            if q2_only {
                meta.method = "incremental-purity".into();
                analysis::cumulative_renyi2(&series, &config, stride)?
            } else {
                analysis::cumulative_analysis(&series, &config, stride)?
            }
        }
        Some(spec) => {
            let records = analysis::window_analysis(&series, spec, &config)?;
            if let Some(reference_path) = &args.reference {
                let ref_schema = ColumnSchema {
                    date: args.date_column.clone(),
                    value: args.reference_value_column.clone(),
                };
                let reference = read_series(reference_path, &ref_schema)?;
                let aggregated =
                    timeseries::aggregate(&reference.series, spec, args.reference_agg.to_core());
                let metric = match args.compare_metric {
                    Some(MetricArg::E2) => CompareMetric::Renyi2,
                    Some(MetricArg::Ne) => CompareMetric::EffectiveStates,
                    None => {
                        if config.qs.contains(&2.0) {
                            CompareMetric::Renyi2
                        } else {
                            CompareMetric::EffectiveStates
                        }
                    }
                };
                let indicator = analysis::indicator_series(&records, metric)?;
                meta.comparison = Some(analysis::compare_to_reference(&indicator, &aggregated)?);
                meta.reference_aggregation = Some(args.reference_agg.name().into());
                meta.inputs
                    .push(("reference".into(), reference_path.display().to_string()));
                meta.inputs.push((
                    "reference_value_column".into(),
                    args.reference_value_column.clone(),
                ));
                meta.inputs.push((
                    "compare_metric".into(),
                    match metric {
                        CompareMetric::Renyi2 => "e2".into(),
                        CompareMetric::EffectiveStates => "ne".into(),
                    },
                ));
            }
            records
        }
    };

    let format = match args.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    match &args.output {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::data(format!("cannot create {}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            analysis::emit(&records, &config, &meta, format, &mut out)?;
            out.flush().map_err(AnalysisError::Io)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            analysis::emit(&records, &config, &meta, format, &mut out)?;
            out.flush().map_err(AnalysisError::Io)?;
        }
    }
    Ok(())
}
