//! Dated price ingestion, calendar partitioning and date alignment.

use std::io::Read;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeSeriesError {
    #[error("EmptyFile: no usable data rows")]
    EmptyFile,
    #[error("EmptySeries: a price series needs at least one point")]
    EmptySeries,
    #[error("MissingColumn: header has no column named {0:?}")]
    MissingColumn(String),
    #[error("UnparseableDate: line {line}: {text:?} is not an ISO date")]
    UnparseableDate { line: usize, text: String },
    #[error("UnparseableValue: line {line}: {text:?} is not a number")]
    UnparseableValue { line: usize, text: String },
    #[error("DuplicateDate: {0} appears more than once")]
    DuplicateDate(NaiveDate),
    #[error("OutOfOrder: {later} precedes {earlier}")]
    OutOfOrder {
        earlier: NaiveDate,
        later: NaiveDate,
    },
    #[error("NonPositiveValue: {date} has value {value}")]
    NonPositiveValue { date: NaiveDate, value: f64 },
    #[error("NonFiniteValue: {date}")]
    NonFiniteValue { date: NaiveDate },
    #[error("EmptyIntersection: the two series share no dates")]
    EmptyIntersection,
    #[error("Csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One dated observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub value: f64,
}

/// Strictly date-ordered, positive, non-empty series of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    points: Vec<PricePoint>,
    units: String,
}

impl PriceSeries {
    pub fn new(points: Vec<PricePoint>, units: impl Into<String>) -> Result<Self, TimeSeriesError> {
        if points.is_empty() {
            return Err(TimeSeriesError::EmptySeries);
        }
        for p in &points {
            if !p.value.is_finite() {
                return Err(TimeSeriesError::NonFiniteValue { date: p.date });
            }
            if p.value <= 0.0 {
                return Err(TimeSeriesError::NonPositiveValue {
                    date: p.date,
                    value: p.value,
                });
            }
        }
        for w in points.windows(2) {
            if w[1].date == w[0].date {
                return Err(TimeSeriesError::DuplicateDate(w[0].date));
            }
            if w[1].date < w[0].date {
                return Err(TimeSeriesError::OutOfOrder {
                    earlier: w[1].date,
                    later: w[0].date,
                });
            }
        }
        Ok(PriceSeries {
            points,
            units: units.into(),
        })
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.date).collect()
    }

    /// First `n` points as their own series.
    pub fn prefix(&self, n: usize) -> PriceSeries {
        assert!(
            n >= 1 && n <= self.points.len(),
            "prefix length out of range"
        );
        PriceSeries {
            points: self.points[..n].to_vec(),
            units: self.units.clone(),
        }
    }

    /// Normalized CSV rendering: header then one `date,value` row per
    /// point, shortest round-trip float formatting.
    pub fn to_csv(&self, schema: &ColumnSchema) -> String {
        let mut out = format!("{},{}\n", schema.date, schema.value);
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.date, p.value));
        }
        out
    }
}

/// Which columns to read. Defaults to the daily-opening convention
/// (`Date` + `Open`); reference indices usually want `Close`.
#[derive(Debug, Clone)]
pub struct ColumnSchema {
    pub date: String,
    pub value: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            date: "Date".into(),
            value: "Open".into(),
        }
    }
}

impl ColumnSchema {
    pub fn with_value_column(value: impl Into<String>) -> Self {
        ColumnSchema {
            value: value.into(),
            ..Default::default()
        }
    }
}

/// Parse outcome: the series plus the number of rows skipped over empty or
/// `null` sentinel values.
#[derive(Debug)]
pub struct ParsedCsv {
    pub series: PriceSeries,
    pub skipped: usize,
}

/// Reads a comma-separated stream with a header row. Rows arrive in any
/// order and are sorted by date; duplicate dates are an error.
pub fn parse_price_csv<R: Read>(
    reader: R,
    schema: &ColumnSchema,
) -> Result<ParsedCsv, TimeSeriesError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && h.iter().any(|c| !c.is_empty()) => h.clone(),
        _ => return Err(TimeSeriesError::EmptyFile),
    };
    let date_col = headers
        .iter()
        .position(|h| h == schema.date)
        .ok_or_else(|| TimeSeriesError::MissingColumn(schema.date.clone()))?;
    let value_col = headers
        .iter()
        .position(|h| h == schema.value)
        .ok_or_else(|| TimeSeriesError::MissingColumn(schema.value.clone()))?;

    let mut points = Vec::new();
    let mut skipped = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record?;
        let raw_value = record.get(value_col).unwrap_or("");
        if raw_value.is_empty() || raw_value.eq_ignore_ascii_case("null") {
            skipped += 1;
            continue;
        }
        let raw_date = record.get(date_col).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| {
            TimeSeriesError::UnparseableDate {
                line,
                text: raw_date.to_string(),
            }
        })?;
        let value: f64 = raw_value
            .parse()
            .map_err(|_| TimeSeriesError::UnparseableValue {
                line,
                text: raw_value.to_string(),
            })?;
        points.push(PricePoint { date, value });
    }
    if points.is_empty() {
        return Err(TimeSeriesError::EmptyFile);
    }
    points.sort_by_key(|p| p.date);
    let series = PriceSeries::new(points, schema.value.clone())?;
    Ok(ParsedCsv { series, skipped })
}

/// How a series is chopped into windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSpec {
    /// Group by calendar (year, month); labels like `2014-03`.
    CalendarMonth,
    /// Group by ISO-8601 week; labels like `2014-W12`. Robust to holidays,
    /// unlike chopping every five rows.
    TradingWeek,
    /// Consecutive runs of `k` points (the last may be shorter); labels are
    /// 1-based inclusive index ranges like `1-5`.
    FixedCount(usize),
}

impl std::fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WindowSpec::CalendarMonth => write!(f, "month"),
            WindowSpec::TradingWeek => write!(f, "week"),
            WindowSpec::FixedCount(k) => write!(f, "fixed:{k}"),
        }
    }
}

/// A labeled, non-empty, contiguous run of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub label: String,
    pub points: Vec<PricePoint>,
}

impl Window {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Chops a series into non-overlapping windows covering every point in
/// order. `FixedCount(0)` is a caller bug and panics.
pub fn partition(series: &PriceSeries, spec: &WindowSpec) -> Vec<Window> {
    let points = series.points();
    let mut windows: Vec<Window> = Vec::new();
    match *spec {
        WindowSpec::CalendarMonth => {
            for p in points {
                let label = format!("{:04}-{:02}", p.date.year(), p.date.month());
                push_grouped(&mut windows, label, *p);
            }
        }
        WindowSpec::TradingWeek => {
            for p in points {
                let iso = p.date.iso_week();
                let label = format!("{:04}-W{:02}", iso.year(), iso.week());
                push_grouped(&mut windows, label, *p);
            }
        }
        WindowSpec::FixedCount(k) => {
            assert!(k >= 1, "FixedCount windows need k >= 1");
            for (i, chunk) in points.chunks(k).enumerate() {
                let start = i * k + 1;
                let end = i * k + chunk.len();
                windows.push(Window {
                    label: format!("{start}-{end}"),
                    points: chunk.to_vec(),
                });
            }
        }
    }
    windows
}

fn push_grouped(windows: &mut Vec<Window>, label: String, p: PricePoint) {
    match windows.last_mut() {
        Some(w) if w.label == label => w.points.push(p),
        _ => windows.push(Window {
            label,
            points: vec![p],
        }),
    }
}

/// Inner join of two series on exact dates, in date order.
pub fn align(
    a: &PriceSeries,
    b: &PriceSeries,
) -> Result<Vec<(NaiveDate, f64, f64)>, TimeSeriesError> {
    let (pa, pb) = (a.points(), b.points());
    let mut out = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < pa.len() && j < pb.len() {
        match pa[i].date.cmp(&pb[j].date) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((pa[i].date, pa[i].value, pb[j].value));
                i += 1;
                j += 1;
            }
        }
    }
    if out.is_empty() {
        return Err(TimeSeriesError::EmptyIntersection);
    }
    Ok(out)
}

/// Reduction applied to a reference index inside each window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Last,
    First,
    Max,
}

/// One `(label, value)` pair per window of `spec`, reducing the window's
/// values with `agg`. Used to bring a daily reference index onto the same
/// footing as per-window indicators.
pub fn aggregate(series: &PriceSeries, spec: &WindowSpec, agg: Aggregation) -> Vec<(String, f64)> {
    partition(series, spec)
        .into_iter()
        .map(|w| {
            let vals = w.values();
            let v = match agg {
                Aggregation::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                Aggregation::Last => *vals.last().unwrap(),
                Aggregation::First => vals[0],
                Aggregation::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            (w.label, v)
        })
        .collect()
}
