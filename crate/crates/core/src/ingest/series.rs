//! Meter samples, per-load series and the long-format meter CSV.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::IngestError;

/// Header every meter CSV must start with.
pub const METER_CSV_HEADER: [&str; 3] = ["load_id", "timestamp", "power_kw"];

/// One instantaneous power reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterSample {
    pub timestamp: DateTime<Utc>,
    pub power_kw: f64,
}

impl MeterSample {
    pub fn new(timestamp: DateTime<Utc>, power_kw: f64) -> Self {
        Self { timestamp, power_kw }
    }
}

/// Time-ordered power samples recorded by the meter of a single load.
///
/// Construction goes through [`MeterSeries::new`], which enforces that the
/// series is non-empty, strictly increasing in time and carries only finite,
/// non-negative power values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeterSeries {
    load_id: String,
    samples: Vec<MeterSample>,
}

impl MeterSeries {
    pub fn new(load_id: impl Into<String>, samples: Vec<MeterSample>) -> Result<Self, IngestError> {
        let load_id = load_id.into();
        if samples.is_empty() {
            return Err(IngestError::EmptySeries(load_id));
        }
        for s in &samples {
            if !s.power_kw.is_finite() || s.power_kw < 0.0 {
                return Err(IngestError::InvalidPower { load_id, timestamp: s.timestamp, power_kw: s.power_kw });
            }
        }
        for w in samples.windows(2) {
            if w[1].timestamp == w[0].timestamp {
                return Err(IngestError::DuplicateTimestamp { load_id, timestamp: w[0].timestamp });
            }
            if w[1].timestamp < w[0].timestamp {
                return Err(IngestError::Unordered { load_id, timestamp: w[1].timestamp });
            }
        }
        Ok(Self { load_id, samples })
    }

    pub fn load_id(&self) -> &str {
        &self.load_id
    }

    pub fn samples(&self) -> &[MeterSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first_timestamp(&self) -> DateTime<Utc> {
        self.samples[0].timestamp
    }

    pub fn last_timestamp(&self) -> DateTime<Utc> {
        self.samples[self.samples.len() - 1].timestamp
    }
}

/// Seconds from `from` to `to` as a float, at nanosecond resolution.
pub(crate) fn secs_between(from: DateTime<Utc>, to: DateTime<Utc>) -> f64 {
    let d = to - from;
    match d.num_nanoseconds() {
        Some(ns) => ns as f64 * 1e-9,
        None => d.num_milliseconds() as f64 * 1e-3,
    }
}

/// `origin + secs`, rounded to the nearest nanosecond.
pub(crate) fn offset_by_secs(origin: DateTime<Utc>, secs: f64) -> DateTime<Utc> {
    origin + chrono::Duration::nanoseconds((secs * 1e9).round() as i64)
}

pub(crate) fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_timestamp(field: &str) -> Option<DateTime<Utc>> {
    // RFC 3339 requires an explicit offset, so naive local times are refused here.
    DateTime::parse_from_rfc3339(field.trim()).ok().map(|t| t.with_timezone(&Utc))
}

fn parse_power(field: &str) -> Option<f64> {
    let p: f64 = field.trim().parse().ok()?;
    (p.is_finite() && p >= 0.0).then_some(p)
}

/// Parse a long-format meter CSV (`load_id,timestamp,power_kw`) into one
/// series per load, ordered by load id. Rows may arrive in any order; each
/// series comes out sorted by timestamp.
pub fn parse_meter_csv(text: &str) -> Result<Vec<MeterSeries>, IngestError> {
    if text.trim().is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());

    let headers = reader.headers().map_err(|_| IngestError::MalformedRow(1))?;
    if headers.iter().ne(METER_CSV_HEADER.iter().copied()) {
        return Err(IngestError::BadHeader(headers.iter().collect::<Vec<_>>().join(",")));
    }

    let mut by_load: BTreeMap<String, Vec<MeterSample>> = BTreeMap::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| IngestError::MalformedRow(e.position().map(|p| p.line() as usize).unwrap_or(0)))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 3 {
            return Err(IngestError::MalformedRow(line));
        }
        let load_id = record[0].to_string();
        if load_id.is_empty() {
            return Err(IngestError::MalformedRow(line));
        }
        let timestamp = parse_timestamp(&record[1]).ok_or(IngestError::MalformedRow(line))?;
        let power_kw = parse_power(&record[2]).ok_or(IngestError::MalformedRow(line))?;
        by_load.entry(load_id).or_default().push(MeterSample { timestamp, power_kw });
    }
    if by_load.is_empty() {
        return Err(IngestError::EmptyInput);
    }

    by_load
        .into_iter()
        .map(|(load_id, mut samples)| {
            samples.sort_by_key(|s| s.timestamp);
            MeterSeries::new(load_id, samples)
        })
        .collect()
}

/// Write series in the same long format [`parse_meter_csv`] reads.
pub fn write_meter_csv<W: Write>(out: W, series: &[MeterSeries]) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(METER_CSV_HEADER)?;
    for s in series {
        for sample in s.samples() {
            writer.write_record([s.load_id(), &format_timestamp(sample.timestamp), &sample.power_kw.to_string()])?;
        }
    }
    writer.flush().map_err(|e| IngestError::Io(e.to_string()))?;
    Ok(())
}

pub fn meter_csv_string(series: &[MeterSeries]) -> Result<String, IngestError> {
    let mut buf = Vec::new();
    write_meter_csv(&mut buf, series)?;
    Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
}
