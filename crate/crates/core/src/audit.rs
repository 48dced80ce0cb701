//! Batch audit pipeline: load series, partition into regimes, apply
//! transforms, build digit histograms, run the chi-square grid and fit the
//! imperfect law, then write one TOML report per series plus plot-ready
//! histogram CSVs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gof_tests::{test_grid, DigitHistogram, GofResult};
use crate::imperfect_fit::{fit_imperfect, ImperfectFitResult};
use crate::ingest::{load_csv, partition, RegimeSpec, TimeSeries};
use crate::transforms::{self, TransformKind};

/// Header of histogram exports.
pub const HISTOGRAM_CSV_HEADER: [&str; 4] = ["digit", "regime", "position", "count"];

fn default_year_column() -> String {
    "year".into()
}

fn default_transforms() -> Vec<TransformKind> {
    vec![TransformKind::TheilMap(Default::default())]
}

fn default_positions() -> Vec<u32> {
    vec![1, 2, 3, 4]
}

/// Audit configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub input: PathBuf,
    #[serde(default = "default_year_column")]
    pub year_column: String,
    /// Value columns; empty means every non-year column.
    #[serde(default)]
    pub columns: Vec<String>,
    /// `name,start,end` CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regimes: Option<PathBuf>,
    /// Transforms analyzed next to the raw data.
    #[serde(default = "default_transforms")]
    pub transforms: Vec<TransformKind>,
    #[serde(default = "default_positions")]
    pub positions: Vec<u32>,
    pub output_dir: PathBuf,
}

impl AuditConfig {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        AuditConfig {
            input: input.into(),
            year_column: default_year_column(),
            columns: Vec::new(),
            regimes: None,
            transforms: default_transforms(),
            positions: default_positions(),
            output_dir: output_dir.into(),
        }
    }

    /// Reads a TOML config; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: AuditConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.input = base.join(&cfg.input);
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.regimes = cfg.regimes.map(|r| base.join(r));
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = self.positions.iter().find(|p| !(1..=9).contains(*p)) {
            return Err(Error::Config(format!(
                "histogram positions must be in 1..=9, got {p}"
            )));
        }
        if self.positions.is_empty() {
            return Err(Error::Config("no histogram positions configured".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub name: String,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRecord {
    pub position: u32,
    /// Over digits 1..=9 at position 1, 0..=9 past it.
    pub counts: Vec<u64>,
    pub total: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub regimes: Vec<RegimeRow>,
}

impl From<&DigitHistogram> for HistogramRecord {
    fn from(h: &DigitHistogram) -> Self {
        let lo = *h.digits().start() as usize;
        HistogramRecord {
            position: h.position,
            counts: h.domain_counts().to_vec(),
            total: h.total,
            regimes: h
                .regime_breakdown
                .iter()
                .flatten()
                .map(|(name, c)| RegimeRow {
                    name: name.clone(),
                    counts: c[lo..].to_vec(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRecord {
    pub name: String,
    #[serde(flatten)]
    pub result: GofResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformAnalysis {
    pub transform: TransformKind,
    pub excluded: usize,
    pub histogram_total: u64,
    pub histograms: Vec<HistogramRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tests: Vec<TestRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imperfect_fit: Option<ImperfectFitResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub name: String,
    pub start: i32,
    pub end: i32,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub input: String,
    pub year_column: String,
    pub regimes: String,
    pub transforms: Vec<TransformKind>,
    pub positions: Vec<u32>,
}

/// Everything computed for one series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub series: String,
    pub length: usize,
    pub first_year: Option<i32>,
    pub last_year: Option<i32>,
    pub missing_years: usize,
    pub skipped_empty_cells: usize,
    pub unassigned_points: usize,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub regimes: Vec<RegimeSummary>,
    pub analyses: Vec<TransformAnalysis>,
}

impl AuditReport {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("report serialization: {e}")))
    }
}

/// Files written by [`run_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditOutcome {
    pub reports: Vec<AuditReport>,
    pub written: Vec<PathBuf>,
}

/// Raw data first, then each configured transform once.
fn analysis_order(config: &AuditConfig) -> Vec<TransformKind> {
    let mut order = vec![TransformKind::Identity];
    for t in &config.transforms {
        if !order.contains(t) {
            order.push(*t);
        }
    }
    order
}

/// Analyzes one transform of one series.
pub fn analyze_transform(
    series: &TimeSeries,
    kind: TransformKind,
    positions: &[u32],
    regimes: Option<&RegimeSpec>,
) -> Result<TransformAnalysis> {
    let ctx = |e: Error, pos: Option<u32>| {
        let mut c = format!("series {:?}, transform {kind}", series.label);
        if let Some(p) = pos {
            c.push_str(&format!(", digit position {p}"));
        }
        e.context(c)
    };
    let mapped = transforms::apply(series, kind, regimes).map_err(|e| ctx(e, None))?;
    let mut notes = Vec::new();
    if !mapped.excluded.is_empty() {
        notes.push(format!(
            "{} of {} point(s) excluded: non-positive image under {kind}",
            mapped.excluded.len(),
            mapped.input_len()
        ));
    }
    let histograms = positions
        .iter()
        .map(|&p| {
            DigitHistogram::from_samples(p, &mapped.kept, regimes)
                .map(|h| HistogramRecord::from(&h))
                .map_err(|e| ctx(e, Some(p)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tests = Vec::new();
    let mut imperfect = None;
    if mapped.kept.is_empty() {
        notes.push("no points left; conformity tests and fit skipped".into());
    } else {
        tests = test_grid(&mapped.kept)
            .map_err(|e| ctx(e, None))?
            .into_iter()
            .map(|result| TestRecord {
                name: result.name(),
                result,
            })
            .collect();
        if tests.iter().any(|t| t.result.small_expected) {
            notes.push(
                "some expected counts are below 5; chi-square verdicts are small-sample".into(),
            );
        }
        let first =
            DigitHistogram::from_samples(1, &mapped.kept, None).map_err(|e| ctx(e, Some(1)))?;
        if first.total >= 9 {
            let fit = fit_imperfect(&first).map_err(|e| ctx(e, Some(1)))?;
            if fit.degenerate {
                notes.push("imperfect-law fit on a degenerate histogram".into());
            }
            imperfect = Some(fit);
        } else {
            notes.push("fewer than 9 points; imperfect-law fit skipped".into());
        }
    }
    Ok(TransformAnalysis {
        transform: kind,
        excluded: mapped.excluded.len(),
        histogram_total: mapped.kept.len() as u64,
        histograms,
        tests,
        imperfect_fit: imperfect,
        notes,
    })
}

/// Audits one already-loaded series.
pub fn audit_series(
    series: &TimeSeries,
    config: &AuditConfig,
    regimes: Option<&RegimeSpec>,
    skipped_empty_cells: usize,
) -> Result<AuditReport> {
    config.validate()?;
    let part = regimes.map(|spec| partition(series, spec));
    let analyses = analysis_order(config)
        .into_iter()
        .map(|kind| analyze_transform(series, kind, &config.positions, regimes))
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport {
        series: series.label.clone(),
        length: series.len(),
        first_year: series.points.first().map(|p| p.year),
        last_year: series.points.last().map(|p| p.year),
        missing_years: series.missing_years(),
        skipped_empty_cells,
        unassigned_points: part.as_ref().map_or(0, |p| p.unassigned),
        config: ConfigEcho {
            input: config.input.display().to_string(),
            year_column: config.year_column.clone(),
            regimes: config
                .regimes
                .as_ref()
                .map_or_else(|| "none".to_owned(), |p| p.display().to_string()),
            transforms: config.transforms.clone(),
            positions: config.positions.clone(),
        },
        regimes: match (regimes, &part) {
            (Some(spec), Some(part)) => spec
                .regimes()
                .iter()
                .zip(&part.counts)
                .map(|(r, (_, n))| RegimeSummary {
                    name: r.name.clone(),
                    start: r.start,
                    end: r.end,
                    points: *n,
                })
                .collect(),
            _ => Vec::new(),
        },
        analyses,
    })
}

/// Writes `digit,regime,position,count` rows. Without a regime breakdown
/// the regime column reads `all`.
pub fn write_histogram_csv<W: Write>(analysis: &TransformAnalysis, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTOGRAM_CSV_HEADER)?;
    for h in &analysis.histograms {
        let lo = if h.position == 1 { 1 } else { 0 };
        let rows: Vec<(&str, &[u64])> = if h.regimes.is_empty() {
            vec![("all", &h.counts)]
        } else {
            h.regimes
                .iter()
                .map(|r| (r.name.as_str(), r.counts.as_slice()))
                .collect()
        };
        for (regime, counts) in rows {
            for (i, c) in counts.iter().enumerate() {
                w.write_record([
                    (i + lo).to_string(),
                    regime.to_owned(),
                    h.position.to_string(),
                    c.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<histogram>", e))?;
    Ok(())
}

/// First-digit counts from a histogram CSV with `digit` and `count`
/// columns. A `position` column, when present, selects position-1 rows;
/// repeated digits (regime rows) are summed.
pub fn read_first_digit_counts(path: impl AsRef<Path>) -> Result<[u64; 9]> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Config(format!("{}: {other:?}", path.display())),
        })?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let digit_idx = col("digit")
        .ok_or_else(|| Error::Config(format!("{}: no `digit` column", path.display())))?;
    let count_idx = col("count")
        .ok_or_else(|| Error::Config(format!("{}: no `count` column", path.display())))?;
    let position_idx = col("position");
    let mut counts = [0u64; 9];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| Error::Row {
            path: path.to_owned(),
            line,
            message,
        };
        let field = |i: usize| record.get(i).unwrap_or("");
        if let Some(i) = position_idx {
            if field(i) != "1" {
                continue;
            }
        }
        let digit: usize = field(digit_idx)
            .parse()
            .ok()
            .filter(|d| (1..=9).contains(d))
            .ok_or_else(|| row_err(format!("bad first digit {:?}", field(digit_idx))))?;
        let count: u64 = field(count_idx)
            .parse()
            .map_err(|_| row_err(format!("bad count {:?}", field(count_idx))))?;
        counts[digit - 1] += count;
    }
    Ok(counts)
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads the configured input, audits every series and writes
/// `<series>.report.toml` and `<series>.<transform>.histogram.csv` into the
/// output directory. Output bytes depend only on the config and input.
pub fn run_audit(config: &AuditConfig) -> Result<AuditOutcome> {
    config.validate()?;
    let regimes = config.regimes.as_ref().map(RegimeSpec::load).transpose()?;
    let loaded = load_csv(&config.input, &config.year_column, &config.columns)?;

    // Series are independent; results are collected in input order.
    let reports: Vec<AuditReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = loaded
            .series
            .iter()
            .map(|s| {
                let skipped = loaded.skipped_empty.get(&s.label).copied().unwrap_or(0);
                let regimes = regimes.as_ref();
                scope.spawn(move || audit_series(s, config, regimes, skipped))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("audit worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let mut written = Vec::new();
    for report in &reports {
        let stem = file_stem(&report.series);
        let path = config.output_dir.join(format!("{stem}.report.toml"));
        write_file(&path, report.to_toml()?.as_bytes())?;
        written.push(path);
        for analysis in &report.analyses {
            let path = config
                .output_dir
                .join(format!("{stem}.{}.histogram.csv", analysis.transform));
            let mut buf = Vec::new();
            write_histogram_csv(analysis, &mut buf)?;
            write_file(&path, &buf)?;
            written.push(path);
        }
    }
    Ok(AuditOutcome { reports, written })
}
