//! Plant configuration: the load roster plus default analysis policies.
//!
//! The on-disk form is TOML:
//!
//! ```toml
//! [segmentation]
//! on_threshold_fraction = 0.1
//! min_on_min = 1.0
//! merge_gap_min = 1.0
//!
//! [[loads]]
//! load_id = "cleaning"
//! name = "Cascade camplate cleaning"
//! rated_power_kw = 16.0
//! ideal_ton_min = 15.0
//! band_min = [13.0, 18.0]
//! role = "washes finished camplates"
//! ```
//!
//! `[segmentation]`, `[classification]` and `[validation]` are optional and
//! fall back to their defaults key by key.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::validate::ValidationPolicy;
use super::ConfigError;
use crate::classify::ClassificationPolicy;
use crate::segment::{OnThreshold, SegmentationPolicy};

/// Durations (minutes) counted as comparable to the ideal process time.
/// Membership is inclusive at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct ToleranceBand {
    lower: f64,
    upper: f64,
}

impl ToleranceBand {
    pub fn new(lower: f64, upper: f64) -> Result<Self, ConfigError> {
        if !(lower.is_finite() && upper.is_finite()) || lower < 0.0 || lower > upper {
            return Err(ConfigError::InvalidBand { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, duration_min: f64) -> bool {
        self.lower <= duration_min && duration_min <= self.upper
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { lower: self.lower * factor, upper: self.upper * factor }
    }
}

impl TryFrom<[f64; 2]> for ToleranceBand {
    type Error = ConfigError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Self::new(v[0], v[1])
    }
}

impl From<ToleranceBand> for [f64; 2] {
    fn from(b: ToleranceBand) -> Self {
        [b.lower, b.upper]
    }
}

/// One process load of the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub load_id: String,
    pub name: String,
    /// Nameplate rating; optional because ratings are site data. Fractional ON
    /// thresholds and over-rating checks need it.
    pub rated_power_kw: Option<f64>,
    /// Rated process time of one batch.
    pub ideal_ton_min: f64,
    #[serde(rename = "band_min")]
    pub band: ToleranceBand,
    pub role: String,
}

impl LoadSpec {
    fn check(&self) -> Result<(), ConfigError> {
        if self.load_id.trim().is_empty() {
            return Err(ConfigError::InvalidValue { field: "load_id".into(), reason: "must not be empty".into() });
        }
        if !(self.ideal_ton_min.is_finite() && self.ideal_ton_min > 0.0) {
            return Err(ConfigError::InvalidValue {
                field: format!("{}.ideal_ton_min", self.load_id),
                reason: "must be > 0".into(),
            });
        }
        if let Some(p) = self.rated_power_kw {
            if !(p.is_finite() && p > 0.0) {
                return Err(ConfigError::InvalidValue {
                    field: format!("{}.rated_power_kw", self.load_id),
                    reason: "must be > 0".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub loads: Vec<LoadSpec>,
    pub segmentation: SegmentationPolicy,
    pub classification: ClassificationPolicy,
    pub validation: ValidationPolicy,
}

impl PlantConfig {
    pub fn new(
        loads: Vec<LoadSpec>,
        segmentation: SegmentationPolicy,
        classification: ClassificationPolicy,
        validation: ValidationPolicy,
    ) -> Result<Self, ConfigError> {
        let mut seen = HashSet::new();
        for load in &loads {
            load.check()?;
            if !seen.insert(load.load_id.as_str()) {
                return Err(ConfigError::DuplicateLoadId(load.load_id.clone()));
            }
        }
        segmentation.check().map_err(invalid("segmentation"))?;
        classification.check().map_err(invalid("classification"))?;
        validation.check().map_err(invalid("validation"))?;
        Ok(Self { loads, segmentation, classification, validation })
    }

    pub fn load(&self, load_id: &str) -> Option<&LoadSpec> {
        self.loads.iter().find(|l| l.load_id == load_id)
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

fn invalid(section: &'static str) -> impl Fn(String) -> ConfigError {
    move |reason| ConfigError::InvalidValue { field: section.into(), reason }
}

// Raw document shape; everything optional so missing keys can be named.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    loads: Option<Vec<RawLoad>>,
    segmentation: Option<RawSegmentation>,
    classification: Option<RawClassification>,
    validation: Option<RawValidation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoad {
    load_id: Option<String>,
    name: Option<String>,
    rated_power_kw: Option<f64>,
    ideal_ton_min: Option<f64>,
    band_min: Option<Vec<f64>>,
    role: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegmentation {
    on_threshold_kw: Option<f64>,
    on_threshold_fraction: Option<f64>,
    min_on_min: Option<f64>,
    merge_gap_min: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassification {
    min_band_fraction: Option<f64>,
    underrun_margin: Option<f64>,
    overrun_margin: Option<f64>,
    min_cycles: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidation {
    gap_threshold_min: Option<f64>,
    over_rating_factor: Option<f64>,
}

fn required<T>(value: Option<T>, field: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::MissingField(field.to_string()))
}

/// Parse a TOML plant configuration.
pub fn parse_plant_config(text: &str) -> Result<PlantConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;

    let mut loads = Vec::new();
    for raw_load in required(raw.loads, "loads")? {
        let load_id = required(raw_load.load_id, "load_id")?;
        let field = |name: &str| format!("{load_id}.{name}");
        let band = required(raw_load.band_min, &field("band_min"))?;
        if band.len() != 2 {
            return Err(ConfigError::InvalidValue {
                field: field("band_min"),
                reason: format!("expected [lower, upper], got {} values", band.len()),
            });
        }
        loads.push(LoadSpec {
            name: required(raw_load.name, &field("name"))?,
            rated_power_kw: raw_load.rated_power_kw,
            ideal_ton_min: required(raw_load.ideal_ton_min, &field("ideal_ton_min"))?,
            band: ToleranceBand::new(band[0], band[1])?,
            role: raw_load.role.unwrap_or_default(),
            load_id,
        });
    }

    let mut segmentation = SegmentationPolicy::default();
    if let Some(s) = raw.segmentation {
        match (s.on_threshold_kw, s.on_threshold_fraction) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::InvalidValue {
                    field: "segmentation".into(),
                    reason: "give on_threshold_kw or on_threshold_fraction, not both".into(),
                })
            }
            (Some(kw), None) => segmentation.on_threshold = OnThreshold::Kilowatts(kw),
            (None, Some(f)) => segmentation.on_threshold = OnThreshold::FractionOfRated(f),
            (None, None) => {}
        }
        if let Some(v) = s.min_on_min {
            segmentation.min_on_min = v;
        }
        if let Some(v) = s.merge_gap_min {
            segmentation.merge_gap_min = v;
        }
    }

    let mut classification = ClassificationPolicy::default();
    if let Some(c) = raw.classification {
        if let Some(v) = c.min_band_fraction {
            classification.min_band_fraction = v;
        }
        if let Some(v) = c.underrun_margin {
            classification.underrun_margin = v;
        }
        if let Some(v) = c.overrun_margin {
            classification.overrun_margin = v;
        }
        if let Some(v) = c.min_cycles {
            classification.min_cycles = v;
        }
    }

    let mut validation = ValidationPolicy::default();
    if let Some(v) = raw.validation {
        if let Some(g) = v.gap_threshold_min {
            validation.gap_threshold_min = g;
        }
        if let Some(f) = v.over_rating_factor {
            validation.over_rating_factor = f;
        }
    }

    PlantConfig::new(loads, segmentation, classification, validation)
}

/// Configuration for the four case-study loads of the camplate line.
pub const CASE_STUDY_PLANT_CONFIG: &str = include_str!("../../assets/case_study_plant.toml");

pub fn case_study_plant_config() -> PlantConfig {
    parse_plant_config(CASE_STUDY_PLANT_CONFIG).expect("bundled plant config is valid")
}
