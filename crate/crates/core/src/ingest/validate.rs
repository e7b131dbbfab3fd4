use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::config::LoadSpec;
use super::series::{secs_between, MeterSeries};
use super::IngestError;

/// Thresholds for the non-fatal data-quality checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationPolicy {
    /// Spacing between consecutive samples above this is reported as a gap.
    pub gap_threshold_min: f64,
    /// Samples above `over_rating_factor * rated_power_kw` are reported.
    pub over_rating_factor: f64,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        Self { gap_threshold_min: 10.0, over_rating_factor: 1.5 }
    }
}

impl ValidationPolicy {
    pub(crate) fn check(&self) -> Result<(), String> {
        if !(self.gap_threshold_min.is_finite() && self.gap_threshold_min > 0.0) {
            return Err("gap_threshold_min must be > 0".into());
        }
        if !(self.over_rating_factor.is_finite() && self.over_rating_factor > 0.0) {
            return Err("over_rating_factor must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationFlag {
    Gap { from: DateTime<Utc>, to: DateTime<Utc>, gap_min: f64 },
    OverRating { timestamp: DateTime<Utc>, power_kw: f64, limit_kw: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub flags: Vec<ValidationFlag>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn gaps(&self) -> usize {
        self.flags.iter().filter(|f| matches!(f, ValidationFlag::Gap { .. })).count()
    }

    pub fn over_ratings(&self) -> usize {
        self.flags.iter().filter(|f| matches!(f, ValidationFlag::OverRating { .. })).count()
    }
}

/// Flag sampling holes and implausibly high readings. Nothing here rejects
/// data: real meters drop samples, and the piecewise-linear model bridges
/// the holes.
pub fn validate_series(
    series: &MeterSeries,
    spec: &LoadSpec,
    policy: &ValidationPolicy,
) -> Result<ValidationReport, IngestError> {
    if series.load_id() != spec.load_id {
        return Err(IngestError::UnknownLoad(series.load_id().to_string()));
    }
    let mut flags = Vec::new();
    let gap_secs = policy.gap_threshold_min * 60.0;
    for w in series.samples().windows(2) {
        let dt = secs_between(w[0].timestamp, w[1].timestamp);
        if dt > gap_secs {
            flags.push(ValidationFlag::Gap { from: w[0].timestamp, to: w[1].timestamp, gap_min: dt / 60.0 });
        }
    }
    if let Some(rated) = spec.rated_power_kw {
        let limit_kw = rated * policy.over_rating_factor;
        flags.extend(series.samples().iter().filter(|s| s.power_kw > limit_kw).map(|s| ValidationFlag::OverRating {
            timestamp: s.timestamp,
            power_kw: s.power_kw,
            limit_kw,
        }));
    }
    Ok(ValidationReport { flags })
}
