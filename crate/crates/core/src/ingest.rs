//! Loading and validation of the CSV inputs: index series, multi-stock return
//! panels, sector maps and weekly search-volume series.
//!
//! Canonical schemas (headered, ISO-8601 dates, plain decimal numbers):
//!
//! ```text
//! index.csv    date,close,volume
//! panel.csv    date,TICKER1,...,TICKERn      (first column may also be an integer step)
//! sectors.csv  ticker,sector_id
//! search.csv   week_start,ticker,volume
//! returns.csv  date,return[,volume]          (first column may also be an integer step)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default correlating time in weeks; search series must cover two of them.
pub const DEFAULT_TAU_WEEKS: usize = 26;

pub type SectorId = u32;

/// Time labels of a series: calendar dates from market data, or integer
/// steps from simulation output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeAxis {
    Dates(Vec<NaiveDate>),
    Steps(Vec<u64>),
}

impl TimeAxis {
    pub fn len(&self) -> usize {
        match self {
            TimeAxis::Dates(d) => d.len(),
            TimeAxis::Steps(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, i: usize) -> String {
        match self {
            TimeAxis::Dates(d) => d[i].format("%Y-%m-%d").to_string(),
            TimeAxis::Steps(s) => s[i].to_string(),
        }
    }

    fn slice_from(&self, start: usize) -> TimeAxis {
        match self {
            TimeAxis::Dates(d) => TimeAxis::Dates(d[start..].to_vec()),
            TimeAxis::Steps(s) => TimeAxis::Steps(s[start..].to_vec()),
        }
    }

    fn strictly_increasing(&self) -> Option<usize> {
        fn first_violation<T: PartialOrd>(v: &[T]) -> Option<usize> {
            v.windows(2).position(|w| w[0] >= w[1]).map(|i| i + 1)
        }
        match self {
            TimeAxis::Dates(d) => first_violation(d),
            TimeAxis::Steps(s) => first_violation(s),
        }
    }

    fn parse(labels: &[String], source_name: &str) -> Result<TimeAxis> {
        if let Ok(dates) = labels
            .iter()
            .map(|l| parse_date(l))
            .collect::<std::result::Result<Vec<_>, _>>()
        {
            return Ok(TimeAxis::Dates(dates));
        }
        let mut steps = Vec::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            let step = l.parse::<u64>().map_err(|_| Error::Parse {
                source_name: source_name.to_string(),
                line: i + 2,
                message: format!("time label `{l}` is neither an ISO-8601 date nor a step index"),
            })?;
            steps.push(step);
        }
        Ok(TimeAxis::Steps(steps))
    }
}

/// Daily closes and volumes of one index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub dates: Vec<NaiveDate>,
    pub close: Vec<f64>,
    pub volume: Vec<f64>,
}

impl IndexSeries {
    /// Builds a series, sorting rows by date and validating every invariant.
    pub fn new(dates: Vec<NaiveDate>, close: Vec<f64>, volume: Vec<f64>) -> Result<Self> {
        if dates.len() != close.len() || dates.len() != volume.len() {
            return Err(Error::Validation("column lengths differ".into()));
        }
        let mut rows: Vec<(NaiveDate, f64, f64)> = dates
            .into_iter()
            .zip(close)
            .zip(volume)
            .map(|((d, c), v)| (d, c, v))
            .collect();
        rows.sort_by_key(|r| r.0);
        for (i, (d, c, v)) in rows.iter().enumerate() {
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::Validation(format!(
                    "row {} ({d}): close must be positive, got {c}",
                    i + 1
                )));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Validation(format!(
                    "row {} ({d}): volume must be non-negative, got {v}",
                    i + 1
                )));
            }
        }
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!("duplicate date {}", w[0].0)));
        }
        if rows.len() < 2 {
            return Err(Error::Validation(
                "index series needs at least 2 rows".into(),
            ));
        }
        Ok(IndexSeries {
            dates: rows.iter().map(|r| r.0).collect(),
            close: rows.iter().map(|r| r.1).collect(),
            volume: rows.iter().map(|r| r.2).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Logarithmic returns with optional per-day volumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub time: TimeAxis,
    pub returns: Vec<f64>,
    pub volume: Option<Vec<f64>>,
}

impl ReturnSeries {
    pub fn new(time: TimeAxis, returns: Vec<f64>, volume: Option<Vec<f64>>) -> Result<Self> {
        if time.len() != returns.len() {
            return Err(Error::Validation(
                "time axis and returns differ in length".into(),
            ));
        }
        if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::Validation(format!("non-finite return at row {}", i + 1)));
        }
        if let Some(v) = &volume {
            if v.len() != returns.len() {
                return Err(Error::Validation(
                    "volume and returns differ in length".into(),
                ));
            }
            if let Some(i) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Validation(format!(
                    "volume must be non-negative at row {}",
                    i + 1
                )));
            }
        }
        if let Some(i) = time.strictly_increasing() {
            return Err(Error::Validation(format!(
                "time labels not strictly increasing at row {}",
                i + 1
            )));
        }
        Ok(ReturnSeries {
            time,
            returns,
            volume,
        })
    }

    /// Wraps a bare sequence of returns, labelled by step 0, 1, ...
    pub fn from_values(returns: Vec<f64>) -> Result<Self> {
        let steps = (0..returns.len() as u64).collect();
        ReturnSeries::new(TimeAxis::Steps(steps), returns, None)
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// `returns[t] = ln(close[t] / close[t-1])`, carrying the volume of day `t`.
pub fn log_returns(series: &IndexSeries) -> ReturnSeries {
    let returns = series
        .close
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    ReturnSeries {
        time: TimeAxis::Dates(series.dates[1..].to_vec()),
        returns,
        volume: Some(series.volume[1..].to_vec()),
    }
}

/// Multi-stock return matrix, stored column-major (one vector per ticker).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsPanel {
    pub time: TimeAxis,
    pub tickers: Vec<String>,
    pub sectors: Vec<SectorId>,
    pub columns: Vec<Vec<f64>>,
}

impl ReturnsPanel {
    pub fn new(
        time: TimeAxis,
        tickers: Vec<String>,
        sectors: Vec<SectorId>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if tickers.len() != columns.len() || tickers.len() != sectors.len() {
            return Err(Error::Validation(
                "tickers, sectors and columns differ in count".into(),
            ));
        }
        if tickers.is_empty() {
            return Err(Error::Validation("panel has no tickers".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &tickers {
            if !seen.insert(t) {
                return Err(Error::Validation(format!("duplicate ticker {t}")));
            }
        }
        if time.len() < 2 {
            return Err(Error::Validation("panel needs at least 2 dates".into()));
        }
        for (t, col) in tickers.iter().zip(&columns) {
            if col.len() != time.len() {
                return Err(Error::Validation(format!(
                    "column {t} has {} rows, expected {}",
                    col.len(),
                    time.len()
                )));
            }
            if let Some(i) = col.iter().position(|x| !x.is_finite()) {
                return Err(Error::Validation(format!(
                    "column {t}: non-finite value at row {}",
                    i + 1
                )));
            }
        }
        if let Some(i) = time.strictly_increasing() {
            return Err(Error::Validation(format!(
                "time labels not strictly increasing at row {}",
                i + 1
            )));
        }
        Ok(ReturnsPanel {
            time,
            tickers,
            sectors,
            columns,
        })
    }

    pub fn n_dates(&self) -> usize {
        self.time.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn distinct_sectors(&self) -> BTreeSet<SectorId> {
        self.sectors.iter().copied().collect()
    }

    /// Content keyed by ticker, independent of column order.
    pub fn by_ticker(&self) -> BTreeMap<&str, (SectorId, &[f64])> {
        self.tickers
            .iter()
            .zip(&self.sectors)
            .zip(&self.columns)
            .map(|((t, s), c)| (t.as_str(), (*s, c.as_slice())))
            .collect()
    }

    pub fn sector_map(&self) -> BTreeMap<String, SectorId> {
        self.tickers
            .iter()
            .cloned()
            .zip(self.sectors.iter().copied())
            .collect()
    }

    /// Drops the first `start` rows.
    pub fn slice_from(&self, start: usize) -> Result<ReturnsPanel> {
        ReturnsPanel::new(
            self.time.slice_from(start),
            self.tickers.clone(),
            self.sectors.clone(),
            self.columns.iter().map(|c| c[start..].to_vec()).collect(),
        )
    }
}

/// Weekly search volume of one ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSeries {
    pub ticker: String,
    pub weeks: Vec<NaiveDate>,
    pub volume: Vec<f64>,
}

impl SearchSeries {
    pub fn new(ticker: impl Into<String>, weeks: Vec<NaiveDate>, volume: Vec<f64>) -> Result<Self> {
        let ticker = ticker.into();
        if weeks.len() != volume.len() {
            return Err(Error::Validation(format!(
                "{ticker}: weeks and volumes differ in length"
            )));
        }
        if let Some(i) = volume.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation(format!(
                "{ticker}: negative or non-finite search volume {} at week {}",
                volume[i],
                i + 1
            )));
        }
        if let Some(i) = weeks.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "{ticker}: weeks not strictly increasing at week {}",
                i + 2
            )));
        }
        Ok(SearchSeries {
            ticker,
            weeks,
            volume,
        })
    }

    pub fn len(&self) -> usize {
        self.weeks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchLoadOptions {
    /// Restrict every ticker to the weeks present for all tickers.
    pub align: bool,
    pub min_weeks: usize,
}

impl Default for SearchLoadOptions {
    fn default() -> Self {
        SearchLoadOptions {
            align: true,
            min_weeks: 2 * DEFAULT_TAU_WEEKS,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PanelLoadOptions {
    /// Fill runs of at most two missing cells with zero returns instead of rejecting them.
    pub forward_fill: bool,
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, chrono::ParseError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn csv_error(source: &str, line: usize, e: csv::Error) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: e.to_string(),
    }
}

fn parse_f64(field: &str, what: &str, source: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        source_name: source.to_string(),
        line,
        message: format!("{what}: `{field}` is not a number"),
    })
}

fn expect_header(
    headers: &csv::StringRecord,
    expected: &[&str],
    source: &str,
) -> Result<()> {
    let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got.len() < expected.len() || got.iter().zip(expected).any(|(g, e)| g != e) {
        return Err(Error::Parse {
            source_name: source.to_string(),
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    Ok(())
}

pub fn load_index_series(path: impl AsRef<Path>) -> Result<IndexSeries> {
    let path = path.as_ref();
    read_index_series(open(path)?, &source_name(path))
}

pub fn read_index_series<R: Read>(reader: R, source: &str) -> Result<IndexSeries> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(source, 1, e))?.clone();
    expect_header(&headers, &["date", "close", "volume"], source)?;
    let (mut dates, mut close, mut volume) = (Vec::new(), Vec::new(), Vec::new());
    let mut lines = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(source, line, e))?;
        if rec.len() != 3 {
            return Err(Error::Parse {
                source_name: source.into(),
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let d = parse_date(&rec[0]).map_err(|e| Error::Parse {
            source_name: source.into(),
            line,
            message: format!("date `{}`: {e}", &rec[0]),
        })?;
        let c = parse_f64(&rec[1], "close", source, line)?;
        let v = parse_f64(&rec[2], "volume", source, line)?;
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Validation(format!(
                "{source}:{line}: close must be positive, got {c}"
            )));
        }
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Validation(format!(
                "{source}:{line}: volume must be non-negative, got {v}"
            )));
        }
        dates.push(d);
        close.push(c);
        volume.push(v);
        lines.push(line);
    }
    let mut by_date: HashMap<NaiveDate, usize> = HashMap::new();
    for (d, line) in dates.iter().zip(&lines) {
        if let Some(prev) = by_date.insert(*d, *line) {
            return Err(Error::Validation(format!(
                "{source}:{line}: duplicate date {d} (first seen on line {prev})"
            )));
        }
    }
    IndexSeries::new(dates, close, volume)
}

pub fn write_index_series<W: Write>(series: &IndexSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(["date", "close", "volume"]).map_err(ser)?;
    for i in 0..series.len() {
        w.write_record([
            series.dates[i].format("%Y-%m-%d").to_string(),
            fmt_f64(series.close[i]),
            fmt_f64(series.volume[i]),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn load_sector_map(path: impl AsRef<Path>) -> Result<BTreeMap<String, SectorId>> {
    let path = path.as_ref();
    read_sector_map(open(path)?, &source_name(path))
}

pub fn read_sector_map<R: Read>(reader: R, source: &str) -> Result<BTreeMap<String, SectorId>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(source, 1, e))?.clone();
    expect_header(&headers, &["ticker", "sector_id"], source)?;
    let mut map = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(source, line, e))?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                source_name: source.into(),
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let sector = rec[1].parse::<SectorId>().map_err(|_| Error::Parse {
            source_name: source.into(),
            line,
            message: format!("sector_id `{}` is not a non-negative integer", &rec[1]),
        })?;
        if map.insert(rec[0].to_string(), sector).is_some() {
            return Err(Error::Validation(format!(
                "{source}:{line}: ticker {} listed twice",
                &rec[0]
            )));
        }
    }
    Ok(map)
}

pub fn write_sector_map<W: Write>(map: &BTreeMap<String, SectorId>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(["ticker", "sector_id"]).map_err(ser)?;
    for (t, s) in map {
        w.write_record([t.as_str(), &s.to_string()]).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

pub fn load_returns_panel(
    path: impl AsRef<Path>,
    sector_map_path: impl AsRef<Path>,
    options: PanelLoadOptions,
) -> Result<ReturnsPanel> {
    let path = path.as_ref();
    let sectors = load_sector_map(sector_map_path)?;
    read_returns_panel(open(path)?, &source_name(path), &sectors, options)
}

pub fn read_returns_panel<R: Read>(
    reader: R,
    source: &str,
    sector_map: &BTreeMap<String, SectorId>,
    options: PanelLoadOptions,
) -> Result<ReturnsPanel> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(source, 1, e))?.clone();
    if headers.len() < 2 {
        return Err(Error::Parse {
            source_name: source.into(),
            line: 1,
            message: "panel needs a time column and at least one ticker".into(),
        });
    }
    let tickers: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut sectors = Vec::with_capacity(tickers.len());
    for t in &tickers {
        match sector_map.get(t) {
            Some(s) => sectors.push(*s),
            None => {
                return Err(Error::Validation(format!(
                    "ticker {t} has no sector in the sector map"
                )))
            }
        }
    }
    let mut labels = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); tickers.len()];
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(source, line, e))?;
        if rec.len() != tickers.len() + 1 {
            return Err(Error::Parse {
                source_name: source.into(),
                line,
                message: format!(
                    "ragged row: expected {} fields, found {}",
                    tickers.len() + 1,
                    rec.len()
                ),
            });
        }
        labels.push(rec[0].to_string());
        for (j, field) in rec.iter().skip(1).enumerate() {
            let cell = if field.is_empty() || field.eq_ignore_ascii_case("na") {
                None
            } else {
                Some(parse_f64(field, &tickers[j], source, line)?)
            };
            cells[j].push(cell);
        }
    }
    let time = TimeAxis::parse(&labels, source)?;
    let columns = cells
        .into_iter()
        .zip(&tickers)
        .map(|(col, t)| fill_gaps(col, t, options.forward_fill))
        .collect::<Result<Vec<_>>>()?;
    ReturnsPanel::new(time, tickers, sectors, columns)
}

const MAX_FILLED_GAP: usize = 2;

fn fill_gaps(col: Vec<Option<f64>>, ticker: &str, forward_fill: bool) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(col.len());
    let mut run = 0usize;
    for (i, cell) in col.iter().enumerate() {
        match cell {
            Some(x) => {
                run = 0;
                out.push(*x);
            }
            None if !forward_fill => {
                return Err(Error::Validation(format!(
                    "{ticker}: missing value at row {} (use forward fill to fill short gaps)",
                    i + 1
                )))
            }
            None => {
                run += 1;
                if run > MAX_FILLED_GAP {
                    return Err(Error::Validation(format!(
                        "{ticker}: gap longer than {MAX_FILLED_GAP} rows ending at row {}",
                        i + 1
                    )));
                }
                out.push(0.0);
            }
        }
    }
    Ok(out)
}

pub fn write_returns_panel<W: Write>(panel: &ReturnsPanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    let first = match panel.time {
        TimeAxis::Dates(_) => "date",
        TimeAxis::Steps(_) => "day",
    };
    let mut header = vec![first.to_string()];
    header.extend(panel.tickers.iter().cloned());
    w.write_record(&header).map_err(ser)?;
    for i in 0..panel.n_dates() {
        let mut row = vec![panel.time.label(i)];
        row.extend(panel.columns.iter().map(|c| fmt_f64(c[i])));
        w.write_record(&row).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

pub fn load_search_series(
    path: impl AsRef<Path>,
    options: SearchLoadOptions,
) -> Result<Vec<SearchSeries>> {
    let path = path.as_ref();
    read_search_series(open(path)?, &source_name(path), options)
}

pub fn read_search_series<R: Read>(
    reader: R,
    source: &str,
    options: SearchLoadOptions,
) -> Result<Vec<SearchSeries>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(source, 1, e))?.clone();
    expect_header(&headers, &["week_start", "ticker", "volume"], source)?;
    let mut grouped: BTreeMap<String, Vec<(NaiveDate, f64, usize)>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(source, line, e))?;
        if rec.len() != 3 {
            return Err(Error::Parse {
                source_name: source.into(),
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let week = parse_date(&rec[0]).map_err(|e| Error::Parse {
            source_name: source.into(),
            line,
            message: format!("week_start `{}`: {e}", &rec[0]),
        })?;
        let vol = parse_f64(&rec[2], "volume", source, line)?;
        if !(vol.is_finite() && vol >= 0.0) {
            return Err(Error::Validation(format!(
                "{source}:{line}: negative search volume {vol} for {}",
                &rec[1]
            )));
        }
        grouped
            .entry(rec[1].to_string())
            .or_default()
            .push((week, vol, line));
    }
    let mut out = Vec::with_capacity(grouped.len());
    for (ticker, mut rows) in grouped {
        rows.sort_by_key(|r| r.0);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!(
                "{source}:{}: duplicate week {} for {ticker}",
                w[1].2, w[1].0
            )));
        }
        let weeks = rows.iter().map(|r| r.0).collect();
        let volume = rows.iter().map(|r| r.1).collect();
        out.push(SearchSeries::new(ticker, weeks, volume)?);
    }
    if options.align && out.len() > 1 {
        out = align_to_common_weeks(&out);
    }
    for s in &out {
        if s.len() < options.min_weeks {
            return Err(Error::Validation(format!(
                "{}: {} weeks available, at least {} required",
                s.ticker,
                s.len(),
                options.min_weeks
            )));
        }
    }
    Ok(out)
}

/// Restricts every series to the weeks shared by all of them.
pub fn align_to_common_weeks(series: &[SearchSeries]) -> Vec<SearchSeries> {
    let Some(first) = series.first() else {
        return Vec::new();
    };
    let mut common: BTreeSet<NaiveDate> = first.weeks.iter().copied().collect();
    for s in &series[1..] {
        let weeks: BTreeSet<NaiveDate> = s.weeks.iter().copied().collect();
        common = common.intersection(&weeks).copied().collect();
    }
    series
        .iter()
        .map(|s| {
            let (weeks, volume) = s
                .weeks
                .iter()
                .zip(&s.volume)
                .filter(|(w, _)| common.contains(w))
                .map(|(w, v)| (*w, *v))
                .unzip();
            SearchSeries {
                ticker: s.ticker.clone(),
                weeks,
                volume,
            }
        })
        .collect()
}

pub fn write_search_series<W: Write>(series: &[SearchSeries], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(["week_start", "ticker", "volume"]).map_err(ser)?;
    for s in series {
        for (week, v) in s.weeks.iter().zip(&s.volume) {
            w.write_record([
                week.format("%Y-%m-%d").to_string(),
                s.ticker.clone(),
                fmt_f64(*v),
            ])
            .map_err(ser)?;
        }
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

/// Reads a single return series: a time column, a return column, and an
/// optional column named `volume`.
pub fn load_return_series(path: impl AsRef<Path>) -> Result<ReturnSeries> {
    let path = path.as_ref();
    read_return_series(open(path)?, &source_name(path))
}

pub fn read_return_series<R: Read>(reader: R, source: &str) -> Result<ReturnSeries> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(source, 1, e))?.clone();
    if headers.len() < 2 {
        return Err(Error::Parse {
            source_name: source.into(),
            line: 1,
            message: "expected a time column followed by a return column".into(),
        });
    }
    let volume_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("volume"))
        .filter(|&i| i >= 2);
    let mut labels = Vec::new();
    let mut returns = Vec::new();
    let mut volume = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(source, line, e))?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                source_name: source.into(),
                line,
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        labels.push(rec[0].to_string());
        returns.push(parse_f64(&rec[1], "return", source, line)?);
        if let Some(vc) = volume_col {
            volume.push(parse_f64(&rec[vc], "volume", source, line)?);
        }
    }
    let time = TimeAxis::parse(&labels, source)?;
    ReturnSeries::new(time, returns, volume_col.map(|_| volume))
}

pub fn write_return_series<W: Write>(series: &ReturnSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    let first = match series.time {
        TimeAxis::Dates(_) => "date",
        TimeAxis::Steps(_) => "day",
    };
    let mut header = vec![first, "return"];
    if series.volume.is_some() {
        header.push("volume");
    }
    w.write_record(&header).map_err(ser)?;
    for i in 0..series.len() {
        let mut row = vec![series.time.label(i), fmt_f64(series.returns[i])];
        if let Some(v) = &series.volume {
            row.push(fmt_f64(v[i]));
        }
        w.write_record(&row).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}
