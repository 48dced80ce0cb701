use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use benford_audit::audit::{read_first_digit_counts, run_audit, AuditConfig};
use benford_audit::gof_tests::{chi2_benford, DigitHistogram};
use benford_audit::imperfect_fit::fit_imperfect;
use benford_audit::ingest::{load_csv, synth_benford, Generator, RegimeSpec};
use benford_audit::transforms::{self, SampleValue, TheilBase, TransformKind};
use benford_audit::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "benford-audit",
    version,
    about = "Digit-law audits of yearly budget series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full audit: histograms, chi-square grid and imperfect-law fits.
    Analyze(AnalyzeArgs),
    /// Emit a transformed series as CSV.
    Transform(TransformArgs),
    /// Fit the imperfect Benford law to a first-digit histogram CSV.
    Fit(FitArgs),
    /// Generate a synthetic Benford-distributed series.
    Synth(SynthArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV with a header row.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Name of the year column.
    #[arg(long, default_value = "year")]
    year_column: String,
    /// Value columns (repeatable); default is every non-year column.
    #[arg(short, long = "column")]
    columns: Vec<String>,
    /// Regime file with `name,start,end` rows.
    #[arg(short, long)]
    regimes: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// TOML config; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Transforms analyzed next to the raw data (repeatable).
    #[arg(short, long = "transform")]
    transforms: Vec<TransformKind>,
    /// Base for a bare `theil` transform.
    #[arg(long, value_enum)]
    theil_base: Option<BaseArg>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(short, long = "transform", default_value = "theil")]
    transform: TransformKind,
    #[arg(long, value_enum)]
    theil_base: Option<BaseArg>,
    /// Output CSV; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with `digit` and `count` columns (a histogram export works).
    #[arg(long)]
    histogram: PathBuf,
    /// Output TOML; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short = 'n', long, default_value_t = 64)]
    count: usize,
    #[arg(short, long, value_enum, default_value = "weyl")]
    generator: GeneratorArg,
    /// Seed for the seeded-random generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Orders of magnitude spanned.
    #[arg(long, default_value_t = 1)]
    decades: u32,
    #[arg(long, default_value_t = 1922)]
    start_year: i32,
    #[arg(long, default_value = "value")]
    label: String,
    /// Output CSV; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseArg {
    Natural,
    Decimal,
}

impl From<BaseArg> for TheilBase {
    fn from(b: BaseArg) -> Self {
        match b {
            BaseArg::Natural => TheilBase::Natural,
            BaseArg::Decimal => TheilBase::Decimal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Weyl,
    SeededRandom,
}

fn with_base(kind: TransformKind, base: Option<BaseArg>) -> TransformKind {
    match (kind, base) {
        (TransformKind::TheilMap(_), Some(b)) => TransformKind::TheilMap(b.into()),
        (k, _) => k,
    }
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        }),
        None => io::stdout().write_all(bytes).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => AuditConfig::load(path)?,
        None => {
            let input = args
                .input
                .input
                .clone()
                .ok_or_else(|| Error::Config("analyze needs --config or --input".into()))?;
            let out = args
                .out
                .clone()
                .ok_or_else(|| Error::Config("analyze needs --config or --out".into()))?;
            AuditConfig::new(input, out)
        }
    };
    if let Some(input) = args.input.input {
        config.input = input;
    }
    if args.config.is_none() || args.input.year_column != "year" {
        config.year_column = args.input.year_column;
    }
    if !args.input.columns.is_empty() {
        config.columns = args.input.columns;
    }
    if args.input.regimes.is_some() {
        config.regimes = args.input.regimes;
    }
    if !args.transforms.is_empty() {
        config.transforms = args.transforms;
    }
    config.transforms = config
        .transforms
        .iter()
        .map(|&t| with_base(t, args.theil_base))
        .collect();
    if let Some(out) = args.out {
        config.output_dir = out;
    }

    let outcome = run_audit(&config)?;
    for report in &outcome.reports {
        println!(
            "{} ({} points, {} missing years)",
            report.series, report.length, report.missing_years
        );
        for a in &report.analyses {
            println!("  {} (excluded {})", a.transform, a.excluded);
            for t in &a.tests {
                println!("    {}", t.result);
            }
            if let Some(fit) = &a.imperfect_fit {
                println!(
                    "    imperfect fit: N_s = {}, s = {:.6}, chi2 = {:.4}, S = {:.4}",
                    fit.n_s, fit.s, fit.chi2, fit.surface
                );
            }
        }
    }
    for path in &outcome.written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn transform(args: TransformArgs) -> Result<()> {
    let input = args
        .input
        .input
        .ok_or_else(|| Error::Config("transform needs --input".into()))?;
    let regimes = args
        .input
        .regimes
        .as_ref()
        .map(RegimeSpec::load)
        .transpose()?;
    let loaded = load_csv(&input, &args.input.year_column, &args.input.columns)?;
    let kind = with_base(args.transform, args.theil_base);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "year", "value", "status"])?;
    for series in &loaded.series {
        let mapped = transforms::apply(series, kind, regimes.as_ref())
            .map_err(|e| e.context(format!("series {:?}, transform {kind}", series.label)))?;
        let mut rows: Vec<(i32, String, &str)> = mapped
            .kept
            .iter()
            .map(|s| {
                let v = match &s.value {
                    SampleValue::Exact(d) => d.to_string(),
                    SampleValue::Real(x) => format!("{x:.17e}"),
                };
                (s.year, v, "kept")
            })
            .chain(
                mapped
                    .excluded
                    .iter()
                    .map(|e| (e.year, format!("{:.17e}", e.image), "excluded")),
            )
            .collect();
        rows.sort_by_key(|r| r.0);
        for (year, value, status) in rows {
            w.write_record([series.label.as_str(), &year.to_string(), &value, status])?;
        }
        if !mapped.excluded.is_empty() {
            log::warn!(
                "{}: {} point(s) with non-positive image under {kind}",
                series.label,
                mapped.excluded.len()
            );
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    emit(args.out.as_ref(), &bytes)
}

fn fit(args: FitArgs) -> Result<()> {
    let counts = read_first_digit_counts(&args.histogram)?;
    let hist = DigitHistogram::from_counts(1, &counts)?;
    let fit = fit_imperfect(&hist)?;
    let benford = chi2_benford(&hist)?;
    let mut text = format!(
        "# first-digit counts {:?}, total {}\n# Benford chi2 = {:.6}\n",
        counts, hist.total, benford.statistic
    );
    text.push_str(
        &toml::to_string(&fit).map_err(|e| Error::Config(format!("serializing fit: {e}")))?,
    );
    emit(args.out.as_ref(), text.as_bytes())
}

fn synth(args: SynthArgs) -> Result<()> {
    let generator = match args.generator {
        GeneratorArg::Weyl => Generator::Weyl,
        GeneratorArg::SeededRandom => Generator::SeededRandom { seed: args.seed },
    };
    let series = synth_benford(
        &args.label,
        args.count,
        generator,
        args.scale,
        args.decades,
        args.start_year,
    )?;
    let mut buf = Vec::new();
    series.write_csv(&mut buf)?;
    emit(args.out.as_ref(), &buf)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Transform(a) => transform(a),
        Command::Fit(a) => fit(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
