//! Budget series ingestion, regime partitioning and synthetic
//! Benford-distributed series.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digit_extract::Decimal;
use crate::error::{Error, Result};

/// Group name for years outside every regime.
pub const UNASSIGNED: &str = "unassigned";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub year: i32,
    pub value: Decimal,
}

/// Yearly values of one column, years strictly increasing (gaps allowed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub points: Vec<Point>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, points: Vec<Point>) -> Result<Self> {
        if let Some(w) = points.windows(2).find(|w| w[0].year >= w[1].year) {
            return Err(Error::Domain(format!(
                "years must be strictly increasing ({} then {})",
                w[0].year, w[1].year
            )));
        }
        Ok(TimeSeries {
            label: label.into(),
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Years absent between the first and last point.
    pub fn missing_years(&self) -> usize {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => (b.year - a.year + 1) as usize - self.points.len(),
            _ => 0,
        }
    }

    /// Writes `year,<label>` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["year", self.label.as_str()])?;
        for p in &self.points {
            w.write_record([p.year.to_string(), p.value.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub name: String,
    /// Inclusive.
    pub start: i32,
    /// Inclusive.
    pub end: i32,
}

/// Ordered, disjoint year intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegimeSpec {
    regimes: Vec<Regime>,
}

impl RegimeSpec {
    pub fn new(mut regimes: Vec<Regime>) -> Result<Self> {
        for r in &regimes {
            if r.start > r.end {
                return Err(Error::Config(format!(
                    "regime {:?} starts after it ends ({} > {})",
                    r.name, r.start, r.end
                )));
            }
            if r.name.is_empty() || r.name == UNASSIGNED {
                return Err(Error::Config(format!("invalid regime name {:?}", r.name)));
            }
        }
        regimes.sort_by_key(|r| r.start);
        for w in regimes.windows(2) {
            if w[1].start <= w[0].end {
                return Err(Error::Config(format!(
                    "regimes {:?} ({}-{}) and {:?} ({}-{}) overlap",
                    w[0].name, w[0].start, w[0].end, w[1].name, w[1].start, w[1].end
                )));
            }
        }
        let mut names: Vec<&str> = regimes.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate regime name {:?}", w[0])));
        }
        Ok(RegimeSpec { regimes })
    }

    /// Regimes of the bundled example budget (`data/regimes.csv`):
    /// I 1922-1940, II 1941-1966, III 1967-2001.
    pub fn budget_example() -> Self {
        let r = |name: &str, start, end| Regime {
            name: name.into(),
            start,
            end,
        };
        RegimeSpec {
            regimes: vec![
                r("I", 1922, 1940),
                r("II", 1941, 1966),
                r("III", 1967, 2001),
            ],
        }
    }

    pub fn regimes(&self) -> &[Regime] {
        &self.regimes
    }

    pub fn is_empty(&self) -> bool {
        self.regimes.is_empty()
    }

    pub fn regime_of(&self, year: i32) -> Option<&str> {
        self.regimes
            .iter()
            .find(|r| (r.start..=r.end).contains(&year))
            .map(|r| r.name.as_str())
    }

    /// Reads `name,start,end` CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut regimes = Vec::new();
        for row in rdr.deserialize::<Regime>() {
            regimes.push(row.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?);
        }
        RegimeSpec::new(regimes)
    }
}

/// Regime label per point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    /// Parallel to the series points; `None` for unassigned years.
    pub labels: Vec<Option<String>>,
    /// Point count per regime, in regime order.
    pub counts: Vec<(String, usize)>,
    pub unassigned: usize,
}

pub fn partition(series: &TimeSeries, spec: &RegimeSpec) -> Partition {
    let labels: Vec<Option<String>> = series
        .points
        .iter()
        .map(|p| spec.regime_of(p.year).map(str::to_owned))
        .collect();
    let counts = spec
        .regimes
        .iter()
        .map(|r| {
            let n = labels
                .iter()
                .filter(|l| l.as_deref() == Some(r.name.as_str()))
                .count();
            (r.name.clone(), n)
        })
        .collect();
    let unassigned = labels.iter().filter(|l| l.is_none()).count();
    Partition {
        labels,
        counts,
        unassigned,
    }
}

/// Series read from one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    pub series: Vec<TimeSeries>,
    /// Rows skipped per column because the cell was empty.
    pub skipped_empty: BTreeMap<String, usize>,
}

/// Loads `(year, value)` series for `columns` (all non-year columns when
/// empty). Lines starting with `#` are comments. Values stay exact
/// decimals. Empty cells are skipped and counted; rows are ordered by year.
pub fn load_csv(
    path: impl AsRef<Path>,
    year_column: &str,
    columns: &[String],
) -> Result<LoadedCsv> {
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
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: no column named {name:?}", path.display())))
    };
    let year_idx = find(year_column)?;
    let selected: Vec<(String, usize)> = if columns.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != year_idx)
            .map(|(i, h)| (h.to_owned(), i))
            .collect()
    } else {
        columns
            .iter()
            .map(|c| find(c).map(|i| (c.clone(), i)))
            .collect::<Result<_>>()?
    };
    if selected.is_empty() {
        return Err(Error::Config(format!(
            "{}: no value columns",
            path.display()
        )));
    }

    let mut points: Vec<Vec<Point>> = vec![Vec::new(); selected.len()];
    let mut skipped_empty: BTreeMap<String, usize> =
        selected.iter().map(|(c, _)| (c.clone(), 0)).collect();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| Error::Row {
            path: path.to_owned(),
            line,
            message,
        };
        let year_cell = record.get(year_idx).unwrap_or("");
        let year: i32 = year_cell
            .parse()
            .map_err(|_| row_err(format!("bad year {year_cell:?}")))?;
        for (slot, (column, idx)) in points.iter_mut().zip(&selected) {
            let cell = record.get(*idx).unwrap_or("");
            if cell.is_empty() {
                *skipped_empty.get_mut(column).expect("column registered") += 1;
                continue;
            }
            let value: Decimal = cell
                .parse()
                .map_err(|e| row_err(format!("column {column:?}: {e}")))?;
            slot.push(Point { year, value });
        }
    }

    let mut series = Vec::with_capacity(selected.len());
    for ((column, _), mut pts) in selected.into_iter().zip(points) {
        pts.sort_by_key(|p| p.year);
        if let Some(w) = pts.windows(2).find(|w| w[0].year == w[1].year) {
            return Err(Error::DuplicateYear {
                path: path.to_owned(),
                column,
                year: w[0].year,
            });
        }
        let skipped = skipped_empty[&column];
        if skipped > 0 {
            log::info!(
                "{}: skipped {skipped} empty cell(s) in column {column:?}",
                path.display()
            );
        }
        series.push(TimeSeries::new(column, pts)?);
    }
    Ok(LoadedCsv {
        series,
        skipped_empty,
    })
}

/// Mantissa source for [`synth_benford`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Generator {
    /// Golden-ratio Weyl sequence `frac(j * phi)`, deterministic.
    Weyl,
    /// ChaCha8 stream seeded with `seed`.
    SeededRandom { seed: u64 },
}

/// Golden ratio.
pub const PHI: f64 = 1.618_033_988_749_895;

/// `count` values `scale * 10^(u_j * decades)` with `u_j` equidistributed on
/// `[0, 1)`, so mantissas are log-uniform and digits follow Benford's law.
/// Years run consecutively from `start_year`.
pub fn synth_benford(
    label: &str,
    count: usize,
    generator: Generator,
    scale: f64,
    decades: u32,
    start_year: i32,
) -> Result<TimeSeries> {
    if count == 0 {
        return Err(Error::Domain("synthetic series needs count >= 1".into()));
    }
    if decades == 0 {
        return Err(Error::Domain("synthetic series needs decades >= 1".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let exponents: Vec<f64> = match generator {
        Generator::Weyl => (1..=count).map(|j| (j as f64 * PHI).fract()).collect(),
        Generator::SeededRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| rng.gen::<f64>()).collect()
        }
    };
    let points = exponents
        .into_iter()
        .enumerate()
        .map(|(i, u)| {
            Ok(Point {
                year: start_year + i as i32,
                value: Decimal::from_real(scale * 10f64.powf(u * f64::from(decades)))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(label, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_with_gaps_and_empty_cells() {
        let f = csv_file(
            "# comment\nyear,income,expenses\n1922,7013,6900\n1923,,7100.5\n1925,8000,8100\n",
        );
        let loaded = load_csv(f.path(), "year", &[]).unwrap();
        assert_eq!(loaded.series.len(), 2);
        let income = &loaded.series[0];
        assert_eq!(income.label, "income");
        assert_eq!(income.len(), 2);
        assert_eq!(loaded.skipped_empty["income"], 1);
        let expenses = &loaded.series[1];
        assert_eq!(
            expenses.points.iter().map(|p| p.year).collect::<Vec<_>>(),
            [1922, 1923, 1925]
        );
        assert_eq!(expenses.missing_years(), 1);
        assert_eq!(expenses.points[1].value.to_string(), "7100.5");
    }

    #[test]
    fn selects_named_columns() {
        let f = csv_file("year,a,b\n2000,1,2\n");
        let loaded = load_csv(f.path(), "year", &["b".to_owned()]).unwrap();
        assert_eq!(loaded.series.len(), 1);
        assert_eq!(loaded.series[0].label, "b");
        assert!(matches!(
            load_csv(f.path(), "year", &["c".to_owned()]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            load_csv(f.path(), "yr", &[]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn row_errors_carry_line_numbers() {
        let f = csv_file("year,v\n2000,1\n2001,-5\n");
        match load_csv(f.path(), "year", &[]) {
            Err(Error::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = csv_file("year,v\n2000,1\n20x1,5\n");
        assert!(matches!(
            load_csv(f.path(), "year", &[]),
            Err(Error::Row { .. })
        ));
        let f = csv_file("year,v\n2000,1\n2000,5\n");
        assert!(matches!(
            load_csv(f.path(), "year", &[]),
            Err(Error::DuplicateYear { year: 2000, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv("/nonexistent/file.csv", "year", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn partition_with_table_regimes() {
        let spec = RegimeSpec::budget_example();
        assert_eq!(spec.regime_of(1940), Some("I"));
        assert_eq!(spec.regime_of(1941), Some("II"));
        assert_eq!(spec.regime_of(1967), Some("III"));
        assert_eq!(spec.regime_of(2003), None);
        let s = TimeSeries::new(
            "x",
            [1930, 1940, 1950, 2003]
                .iter()
                .map(|&year| Point {
                    year,
                    value: "5".parse().unwrap(),
                })
                .collect(),
        )
        .unwrap();
        let p = partition(&s, &spec);
        assert_eq!(p.labels[1].as_deref(), Some("I"));
        assert_eq!(p.unassigned, 1);
        assert_eq!(
            p.counts,
            vec![("I".into(), 2), ("II".into(), 1), ("III".into(), 0)]
        );
        let empty = partition(&s, &RegimeSpec::default());
        assert_eq!(empty.unassigned, 4);
    }

    #[test]
    fn rejects_bad_regimes() {
        let r = |name: &str, start, end| Regime {
            name: name.into(),
            start,
            end,
        };
        assert!(RegimeSpec::new(vec![r("a", 1, 5), r("b", 5, 9)]).is_err());
        assert!(RegimeSpec::new(vec![r("a", 6, 5)]).is_err());
        assert!(RegimeSpec::new(vec![r("a", 1, 2), r("a", 3, 4)]).is_err());
        assert!(RegimeSpec::new(vec![r(UNASSIGNED, 1, 2)]).is_err());
        let ok = RegimeSpec::new(vec![r("b", 10, 12), r("a", 1, 5)]).unwrap();
        assert_eq!(ok.regimes()[0].name, "a");
    }

    #[test]
    fn loads_regime_file() {
        let f = csv_file("name,start,end\nI,1922,1940\nII,1941,1966\nIII,1967,2001\n");
        assert_eq!(
            RegimeSpec::load(f.path()).unwrap(),
            RegimeSpec::budget_example()
        );
        let f = csv_file("name,start,end\nI,1922,1950\nII,1941,1966\n");
        assert!(matches!(RegimeSpec::load(f.path()), Err(Error::Config(_))));
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_benford("w", 9, Generator::Weyl, 1.0, 1, 2000).unwrap();
        let b = synth_benford("w", 9, Generator::Weyl, 1.0, 1, 2000).unwrap();
        assert_eq!(a.len(), 9);
        assert_eq!(a, b);
        let g = Generator::SeededRandom { seed: 7 };
        assert_eq!(
            synth_benford("r", 50, g, 3.0, 3, 0).unwrap(),
            synth_benford("r", 50, g, 3.0, 3, 0).unwrap()
        );
        assert_ne!(
            synth_benford("r", 50, g, 3.0, 3, 0).unwrap(),
            synth_benford("r", 50, Generator::SeededRandom { seed: 8 }, 3.0, 3, 0).unwrap()
        );
        let span = synth_benford("w", 1000, Generator::Weyl, 2.0, 3, 0).unwrap();
        assert!(span.points.iter().all(|p| {
            let v = p.value.to_f64();
            (2.0..=2000.0).contains(&v)
        }));
        assert!(synth_benford("w", 0, Generator::Weyl, 1.0, 1, 0).is_err());
        assert!(synth_benford("w", 5, Generator::Weyl, 1.0, 0, 0).is_err());
        assert!(synth_benford("w", 5, Generator::Weyl, -1.0, 1, 0).is_err());
    }

    #[test]
    fn series_csv_round_trip() {
        let s = synth_benford("expenses", 12, Generator::Weyl, 7000.0, 3, 1922).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let f = csv_file(std::str::from_utf8(&buf).unwrap());
        let back = load_csv(f.path(), "year", &[]).unwrap();
        assert_eq!(back.series, vec![s]);
    }
}
