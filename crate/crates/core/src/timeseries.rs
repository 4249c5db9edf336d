//! Level series ingestion, alignment and excess-return construction.
//!
//! Panel files are UTF-8 comma-separated text. The header is
//! `date,<name1>,<name2>,...`, dates are ISO-8601 (`YYYY-MM-DD`), every other
//! cell is a decimal literal and a blank cell marks a missing observation.
//! Loading keeps only the dates on which every selected column has a value.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// A named series of strictly positive index levels on strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    name: String,
    dates: Vec<NaiveDate>,
    levels: Vec<f64>,
}

impl PriceSeries {
    pub fn new(name: impl Into<String>, observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let (dates, levels) = observations.into_iter().unzip();
        Self::from_parts(name, dates, levels)
    }

    pub fn from_parts(
        name: impl Into<String>,
        dates: Vec<NaiveDate>,
        levels: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if dates.len() != levels.len() {
            return Err(Error::Validation(format!(
                "series {name}: {} dates but {} levels",
                dates.len(),
                levels.len()
            )));
        }
        check_increasing(&name, &dates)?;
        for (date, level) in dates.iter().zip(&levels) {
            if !(level.is_finite() && *level > 0.0) {
                return Err(Error::Validation(format!(
                    "series {name} has non-positive level {level} on {date}"
                )));
            }
        }
        Ok(Self {
            name,
            dates,
            levels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Daily arithmetic returns `X(t_k)/X(t_{k-1}) - 1`, dated at `t_k`.
    pub fn arithmetic_returns(&self) -> Result<ReturnSeries> {
        if self.len() < 2 {
            return Err(Error::InsufficientData {
                what: format!("returns of series {}", self.name),
                found: self.len(),
                needed: 2,
            });
        }
        let values = self.levels.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
        Ok(ReturnSeries {
            name: self.name.clone(),
            dates: self.dates[1..].to_vec(),
            values,
        })
    }
}

/// Daily arithmetic returns, each dated at the end of its period.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    name: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(name: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if dates.len() != values.len() {
            return Err(Error::Validation(format!(
                "return series {name}: {} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        check_increasing(&name, &dates)?;
        Ok(Self {
            name,
            dates,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Benchmark plus `n >= 1` related indices, all observed on the same dates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    dates: Vec<NaiveDate>,
    benchmark: PriceSeries,
    indices: Vec<PriceSeries>,
}

impl AlignedPanel {
    pub fn new(benchmark: PriceSeries, indices: Vec<PriceSeries>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Validation("panel needs at least one index".into()));
        }
        if benchmark.is_empty() {
            return Err(Error::Alignment("panel has no dates".into()));
        }
        let mut seen = HashSet::new();
        seen.insert(benchmark.name().to_owned());
        for series in &indices {
            if series.dates() != benchmark.dates() {
                return Err(Error::Alignment(format!(
                    "series {} is not observed on the benchmark's dates",
                    series.name()
                )));
            }
            if !seen.insert(series.name().to_owned()) {
                return Err(Error::Validation(format!(
                    "duplicate series name {}",
                    series.name()
                )));
            }
        }
        Ok(Self {
            dates: benchmark.dates().to_vec(),
            benchmark,
            indices,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn benchmark(&self) -> &PriceSeries {
        &self.benchmark
    }

    pub fn indices(&self) -> &[PriceSeries] {
        &self.indices
    }

    /// Number of indices, excluding the benchmark.
    pub fn n_indices(&self) -> usize {
        self.indices.len()
    }

    /// Series names, benchmark first.
    pub fn names(&self) -> Vec<String> {
        std::iter::once(&self.benchmark)
            .chain(&self.indices)
            .map(|s| s.name().to_owned())
            .collect()
    }

    /// All series, benchmark first.
    pub fn series(&self) -> impl Iterator<Item = &PriceSeries> {
        std::iter::once(&self.benchmark).chain(&self.indices)
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// The panel restricted to dates `<= last`.
    pub fn truncated(&self, last: NaiveDate) -> Result<Self> {
        let keep = self.dates.partition_point(|d| *d <= last);
        let cut = |s: &PriceSeries| {
            PriceSeries::from_parts(
                s.name(),
                s.dates[..keep].to_vec(),
                s.levels[..keep].to_vec(),
            )
        };
        let benchmark = cut(&self.benchmark)?;
        let indices = self.indices.iter().map(cut).collect::<Result<Vec<_>>>()?;
        Self::new(benchmark, indices)
    }
}

/// Loads a panel using every non-benchmark column as an index.
pub fn load_panel<R: Read>(source: R, benchmark_column: &str) -> Result<AlignedPanel> {
    load_panel_columns(source, benchmark_column, None)
}

/// Loads a panel, optionally restricted to `index_columns` (in that order).
pub fn load_panel_columns<R: Read>(
    source: R,
    benchmark_column: &str,
    index_columns: Option<&[String]>,
) -> Result<AlignedPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();

    let header = match records.next() {
        Some(record) => record.map_err(csv_error)?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty stream, expected a header row".into(),
            })
        }
    };
    if header.get(0) != Some("date") {
        return Err(Error::Parse {
            line: 1,
            message: "first header cell must be `date`".into(),
        });
    }
    let columns: Vec<&str> = header.iter().skip(1).collect();
    let mut distinct = HashSet::new();
    for c in &columns {
        if c.is_empty() || !distinct.insert(*c) {
            return Err(Error::Parse {
                line: 1,
                message: format!("empty or duplicate column name {c:?}"),
            });
        }
    }
    let find = |name: &str| columns.iter().position(|c| *c == name);

    let bench_col = find(benchmark_column).ok_or_else(|| {
        Error::Config(format!(
            "benchmark column {benchmark_column:?} not in header"
        ))
    })?;
    let index_cols: Vec<usize> = match index_columns {
        Some(names) => names
            .iter()
            .map(|n| {
                if n == benchmark_column {
                    return Err(Error::Config(format!(
                        "column {n:?} is both benchmark and index"
                    )));
                }
                find(n).ok_or_else(|| Error::Config(format!("index column {n:?} not in header")))
            })
            .collect::<Result<_>>()?,
        None => (0..columns.len()).filter(|&c| c != bench_col).collect(),
    };
    if index_cols.is_empty() {
        return Err(Error::Config(
            "panel needs at least one index column".into(),
        ));
    }
    let selected: Vec<usize> = std::iter::once(bench_col).chain(index_cols).collect();

    let mut dates = Vec::new();
    let mut levels: Vec<Vec<f64>> = vec![Vec::new(); selected.len()];
    let mut previous: Option<NaiveDate> = None;
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let raw_date = record.get(0).unwrap_or_default();
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date {raw_date:?}: {e}"),
        })?;
        if previous.is_some_and(|p| p >= date) {
            return Err(Error::Parse {
                line,
                message: format!("date {date} is not after the previous row"),
            });
        }
        previous = Some(date);

        let mut row = Vec::with_capacity(selected.len());
        for &col in &selected {
            let cell = record.get(col + 1).unwrap_or_default();
            if cell.is_empty() {
                row.push(None);
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number {cell:?} in column {}", columns[col]),
            })?;
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation(format!(
                    "series {} has non-positive level {value} on {date}",
                    columns[col]
                )));
            }
            row.push(Some(value));
        }
        if row.iter().all(Option::is_some) {
            dates.push(date);
            for (dst, v) in levels.iter_mut().zip(row) {
                dst.push(v.unwrap_or_default());
            }
        }
    }
    if dates.is_empty() {
        return Err(Error::Alignment(
            "no date has observations for every column".into(),
        ));
    }

    let mut series = selected
        .iter()
        .zip(levels)
        .map(|(&col, lv)| PriceSeries::from_parts(columns[col], dates.clone(), lv))
        .collect::<Result<Vec<_>>>()?;
    let benchmark = series.remove(0);
    AlignedPanel::new(benchmark, series)
}

/// Writes a panel in the ingestion format with shortest round-trip decimals.
pub fn write_panel<W: Write>(panel: &AlignedPanel, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["date".to_owned()];
    header.extend(panel.names());
    writer.write_record(&header).map_err(csv_error)?;
    for (k, date) in panel.dates().iter().enumerate() {
        let mut row = vec![date.format("%Y-%m-%d").to_string()];
        row.extend(panel.series().map(|s| s.levels()[k].to_string()));
        writer.write_record(&row).map_err(csv_error)?;
    }
    writer
        .flush()
        .map_err(|e| Error::Validation(format!("write failed: {e}")))
}

/// Pointwise ratio `X_i / X_0` of an index to its benchmark.
pub fn excess_ratio(series: &PriceSeries, benchmark: &PriceSeries) -> Result<PriceSeries> {
    if series.dates() != benchmark.dates() {
        return Err(Error::Alignment(format!(
            "{} and {} are not observed on identical dates",
            series.name(),
            benchmark.name()
        )));
    }
    let ratio = series
        .levels()
        .iter()
        .zip(benchmark.levels())
        .map(|(x, x0)| x / x0)
        .collect();
    PriceSeries::from_parts(series.name(), series.dates().to_vec(), ratio)
}

/// Daily excess returns `R(t_k)/R(t_{k-1}) - 1` of an excess-ratio series.
pub fn daily_excess_returns(ratio: &PriceSeries) -> Result<ReturnSeries> {
    ratio.arithmetic_returns()
}

fn check_increasing(name: &str, dates: &[NaiveDate]) -> Result<()> {
    if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Validation(format!(
            "series {name}: date {} does not follow {}",
            w[1], w[0]
        )));
    }
    Ok(())
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: err.to_string(),
    }
}
