//! Meter data and plant configuration input.

mod config;
mod series;
mod validate;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use config::{
    case_study_plant_config, parse_plant_config, LoadSpec, PlantConfig, ToleranceBand, CASE_STUDY_PLANT_CONFIG,
};
pub use series::{meter_csv_string, parse_meter_csv, write_meter_csv, MeterSample, MeterSeries, METER_CSV_HEADER};
pub use validate::{validate_series, ValidationFlag, ValidationPolicy, ValidationReport};

pub(crate) use series::{format_timestamp, offset_by_secs, secs_between};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("input contains no meter rows")]
    EmptyInput,
    #[error("unexpected header `{0}`, want `load_id,timestamp,power_kw`")]
    BadHeader(String),
    #[error("malformed row at line {0}")]
    MalformedRow(usize),
    #[error("load `{load_id}` has two samples at {timestamp}")]
    DuplicateTimestamp { load_id: String, timestamp: DateTime<Utc> },
    #[error("load `{load_id}` has a sample at {timestamp} out of time order")]
    Unordered { load_id: String, timestamp: DateTime<Utc> },
    #[error("load `{load_id}` has invalid power {power_kw} kW at {timestamp}")]
    InvalidPower { load_id: String, timestamp: DateTime<Utc>, power_kw: f64 },
    #[error("series for load `{0}` has no samples")]
    EmptySeries(String),
    #[error("no configured load matches series `{0}`")]
    UnknownLoad(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<csv::Error> for IngestError {
    fn from(e: csv::Error) -> Self {
        IngestError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("duplicate load id `{0}`")]
    DuplicateLoadId(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("invalid tolerance band [{lower}, {upper}]")]
    InvalidBand { lower: f64, upper: f64 },
    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },
}
