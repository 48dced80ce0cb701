//! Nonlinear and normalizing transforms applied to a series before digit
//! analysis, plus the Theil inequality index.
//!
//! Only strictly positive outputs can enter a digit histogram. Transforms
//! that produce non-positive values (Theil map on `(0, 1]`, log-relative
//! below the mean) report those points as exclusions instead of dropping
//! them silently.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::digit_extract::Decimal;
use crate::digit_laws::compensated_sum;
use crate::error::{Error, Result};
use crate::ingest::{RegimeSpec, TimeSeries, UNASSIGNED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheilBase {
    /// `x ln x`
    #[default]
    Natural,
    /// `x log10 x`
    Decimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    #[default]
    WholeRange,
    /// Each regime is normalized by its own mean; points outside every
    /// regime form one extra group.
    PerRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Identity,
    TheilMap(TheilBase),
    Relative(Scope),
    LogRelative(Scope),
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TransformKind::Identity => "identity",
            TransformKind::TheilMap(TheilBase::Natural) => "theil-natural",
            TransformKind::TheilMap(TheilBase::Decimal) => "theil-decimal",
            TransformKind::Relative(Scope::WholeRange) => "relative",
            TransformKind::Relative(Scope::PerRegime) => "relative-per-regime",
            TransformKind::LogRelative(Scope::WholeRange) => "log-relative",
            TransformKind::LogRelative(Scope::PerRegime) => "log-relative-per-regime",
        };
        f.write_str(s)
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "identity" | "raw" => TransformKind::Identity,
            "theil" | "theil-natural" => TransformKind::TheilMap(TheilBase::Natural),
            "theil-decimal" => TransformKind::TheilMap(TheilBase::Decimal),
            "relative" => TransformKind::Relative(Scope::WholeRange),
            "relative-per-regime" => TransformKind::Relative(Scope::PerRegime),
            "log-relative" => TransformKind::LogRelative(Scope::WholeRange),
            "log-relative-per-regime" => TransformKind::LogRelative(Scope::PerRegime),
            other => {
                return Err(Error::Config(format!(
                    "unknown transform {other:?} (expected identity, theil-natural, theil-decimal, \
                     relative, relative-per-regime, log-relative, log-relative-per-regime)"
                )))
            }
        })
    }
}

impl Serialize for TransformKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TransformKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Theil map `x ln x` (or `x log10 x`).
///
/// Admits only `x > 1`: for `0 < x <= 1` the image is `<= 0` and the call
/// fails with [`Error::NonPositiveImage`]; `x <= 0` is a domain error.
pub fn theil_map(x: f64, base: TheilBase) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("Theil map needs x > 0, got {x}")));
    }
    if x <= 1.0 {
        return Err(Error::NonPositiveImage {
            transform: TransformKind::TheilMap(base).to_string(),
            count: 1,
        });
    }
    Ok(theil_image(x, base))
}

fn theil_image(x: f64, base: TheilBase) -> f64 {
    match base {
        TheilBase::Natural => x * x.ln(),
        TheilBase::Decimal => x * x.log10(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealPoint {
    pub year: i32,
    pub value: f64,
}

/// A series of computed reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealSeries {
    pub label: String,
    pub points: Vec<RealPoint>,
}

impl RealSeries {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }
}

/// Output of [`log_relative`]: values may be negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRelativeSeries {
    pub series: RealSeries,
    /// `positive[i]` is false when `series.points[i].value <= 0`.
    pub positive: Vec<bool>,
    pub non_positive: usize,
}

fn positive_values(series: &TimeSeries) -> Result<Vec<f64>> {
    if series.points.is_empty() {
        return Err(Error::EmptyScope(format!(
            "series {:?} has no points",
            series.label
        )));
    }
    Ok(series.points.iter().map(|p| p.value.to_f64()).collect())
}

fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Scope group of each point: all zero for whole-range, else one group per
/// regime (plus one for unassigned years).
fn scope_groups(
    series: &TimeSeries,
    scope: Scope,
    regimes: Option<&RegimeSpec>,
) -> Result<Vec<String>> {
    match scope {
        Scope::WholeRange => Ok(vec![String::new(); series.points.len()]),
        Scope::PerRegime => {
            let spec = regimes.ok_or_else(|| {
                Error::Config("per-regime scope needs a regime specification".into())
            })?;
            Ok(series
                .points
                .iter()
                .map(|p| spec.regime_of(p.year).unwrap_or(UNASSIGNED).to_owned())
                .collect())
        }
    }
}

/// Divides each value by the arithmetic mean of its scope.
pub fn relative(
    series: &TimeSeries,
    scope: Scope,
    regimes: Option<&RegimeSpec>,
) -> Result<RealSeries> {
    let values = positive_values(series)?;
    let groups = scope_groups(series, scope, regimes)?;
    let mut members: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (g, v) in groups.iter().zip(&values) {
        members.entry(g.as_str()).or_default().push(*v);
    }
    let means: BTreeMap<&str, f64> = members.iter().map(|(g, vs)| (*g, mean(vs))).collect();
    Ok(RealSeries {
        label: series.label.clone(),
        points: series
            .points
            .iter()
            .zip(&groups)
            .zip(&values)
            .map(|((p, g), v)| RealPoint {
                year: p.year,
                value: v / means[g.as_str()],
            })
            .collect(),
    })
}

/// `ln(x / <x>)` per scope. Values at or below the mean map to `<= 0` and
/// are flagged.
pub fn log_relative(
    series: &TimeSeries,
    scope: Scope,
    regimes: Option<&RegimeSpec>,
) -> Result<LogRelativeSeries> {
    let mut rel = relative(series, scope, regimes)?;
    for p in &mut rel.points {
        p.value = p.value.ln();
    }
    let positive: Vec<bool> = rel.values().map(|v| v > 0.0).collect();
    let non_positive = positive.iter().filter(|p| !**p).count();
    Ok(LogRelativeSeries {
        series: rel,
        positive,
        non_positive,
    })
}

/// Theil inequality index `(1/M) sum (x/<x>) ln(x/<x>)`.
pub fn theil_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyScope("Theil index of an empty series".into()));
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!(
            "Theil index needs positive values, got {bad}"
        )));
    }
    let m = mean(values);
    let t = compensated_sum(values.iter().map(|x| {
        let r = x / m;
        r * r.ln()
    })) / values.len() as f64;
    // Jensen: t >= 0; rounding can push a constant series to -1e-17.
    Ok(t.max(0.0))
}

pub fn theil_index_series(series: &TimeSeries) -> Result<f64> {
    theil_index(&positive_values(series)?)
}

/// A value ready for digit extraction.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleValue {
    Exact(Decimal),
    Real(f64),
}

impl SampleValue {
    pub fn digit(&self, k: usize) -> Result<u8> {
        match self {
            SampleValue::Exact(d) => d.digit(k),
            SampleValue::Real(x) => crate::digit_extract::extract_from_real(*x, k),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            SampleValue::Exact(d) => d.to_f64(),
            SampleValue::Real(x) => *x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub year: i32,
    pub value: SampleValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exclusion {
    pub year: i32,
    /// The transformed value that was refused.
    pub image: f64,
}

/// A transformed series split into digit-analyzable samples and refused
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub label: String,
    pub kind: TransformKind,
    pub kept: Vec<Sample>,
    pub excluded: Vec<Exclusion>,
}

impl Transformed {
    pub fn input_len(&self) -> usize {
        self.kept.len() + self.excluded.len()
    }
}

/// Applies `kind` to every point, keeping positive images and counting the
/// rest as exclusions.
pub fn apply(
    series: &TimeSeries,
    kind: TransformKind,
    regimes: Option<&RegimeSpec>,
) -> Result<Transformed> {
    let mut kept = Vec::with_capacity(series.points.len());
    let mut excluded = Vec::new();
    let mut push = |year: i32, value: f64| {
        if value.is_finite() && value > 0.0 {
            kept.push(Sample {
                year,
                value: SampleValue::Real(value),
            });
        } else {
            excluded.push(Exclusion { year, image: value });
        }
    };
    match kind {
        TransformKind::Identity => {
            kept.extend(series.points.iter().map(|p| Sample {
                year: p.year,
                value: SampleValue::Exact(p.value.clone()),
            }));
        }
        TransformKind::TheilMap(base) => {
            for p in &series.points {
                let x = p.value.to_f64();
                match theil_map(x, base) {
                    Ok(y) => push(p.year, y),
                    Err(Error::NonPositiveImage { .. }) => push(p.year, theil_image(x, base)),
                    Err(e) => return Err(e),
                }
            }
        }
        TransformKind::Relative(scope) => {
            for p in relative(series, scope, regimes)?.points {
                push(p.year, p.value);
            }
        }
        TransformKind::LogRelative(scope) => {
            for p in log_relative(series, scope, regimes)?.series.points {
                push(p.year, p.value);
            }
        }
    }
    Ok(Transformed {
        label: series.label.clone(),
        kind,
        kept,
        excluded,
    })
}
