//! ON-cycle extraction from a power series.
//!
//! The series is treated as a piecewise-linear signal through its samples.
//! A load is ON wherever that signal is at or above the ON threshold; cycle
//! boundaries are the exact threshold crossings of the interpolant, so adding
//! samples that lie on the interpolant never moves a boundary.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{offset_by_secs, secs_between, LoadSpec, MeterSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegmentError {
    #[error("load `{0}` has a fractional ON threshold but no rated power")]
    UnresolvedThreshold(String),
    #[error("ON threshold must be a positive power, got {0} kW")]
    InvalidThreshold(f64),
    #[error("interval [{start}, {end}] lies outside the series span")]
    OutOfRange { start: DateTime<Utc>, end: DateTime<Utc> },
    #[error("interval start {start} is not before end {end}")]
    EmptyInterval { start: DateTime<Utc>, end: DateTime<Utc> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnThreshold {
    Kilowatts(f64),
    FractionOfRated(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationPolicy {
    pub on_threshold: OnThreshold,
    /// ON episodes shorter than this (after merging) are dropped.
    pub min_on_min: f64,
    /// OFF stretches shorter than this inside an episode are bridged.
    pub merge_gap_min: f64,
}

impl Default for SegmentationPolicy {
    fn default() -> Self {
        Self { on_threshold: OnThreshold::FractionOfRated(0.1), min_on_min: 1.0, merge_gap_min: 1.0 }
    }
}

impl SegmentationPolicy {
    pub fn with_threshold_kw(kw: f64) -> Self {
        Self { on_threshold: OnThreshold::Kilowatts(kw), ..Self::default() }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        let t = match self.on_threshold {
            OnThreshold::Kilowatts(v) | OnThreshold::FractionOfRated(v) => v,
        };
        if !(t.is_finite() && t > 0.0) {
            return Err(format!("ON threshold must be > 0, got {t}"));
        }
        if !(self.min_on_min.is_finite() && self.min_on_min >= 0.0) {
            return Err("min_on_min must be >= 0".into());
        }
        if !(self.merge_gap_min.is_finite() && self.merge_gap_min >= 0.0) {
            return Err("merge_gap_min must be >= 0".into());
        }
        Ok(())
    }

    /// Absolute threshold in kW for `spec`.
    pub fn resolve_threshold(&self, spec: &LoadSpec) -> Result<f64, SegmentError> {
        let kw = match self.on_threshold {
            OnThreshold::Kilowatts(kw) => kw,
            OnThreshold::FractionOfRated(f) => {
                let rated =
                    spec.rated_power_kw.ok_or_else(|| SegmentError::UnresolvedThreshold(spec.load_id.clone()))?;
                f * rated
            }
        };
        if !(kw.is_finite() && kw > 0.0) {
            return Err(SegmentError::InvalidThreshold(kw));
        }
        Ok(kw)
    }
}

/// One ON episode of a load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnCycle {
    pub load_id: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub duration_min: f64,
    pub energy_kwh: f64,
}

impl OnCycle {
    /// Builds a cycle whose duration is derived from its instants.
    pub fn new(load_id: impl Into<String>, start: DateTime<Utc>, end: DateTime<Utc>, energy_kwh: f64) -> Self {
        Self { load_id: load_id.into(), start, end, duration_min: secs_between(start, end) / 60.0, energy_kwh }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Detection {
    pub cycles: Vec<OnCycle>,
    /// Episodes cut off by the start or end of the data window.
    pub truncated: usize,
}

/// Sample times as seconds from the first sample, alongside powers.
pub(crate) struct Signal {
    origin: DateTime<Utc>,
    secs: Vec<f64>,
    power: Vec<f64>,
}

impl Signal {
    pub(crate) fn new(series: &MeterSeries) -> Self {
        let origin = series.first_timestamp();
        let (secs, power) = series.samples().iter().map(|s| (secs_between(origin, s.timestamp), s.power_kw)).unzip();
        Self { origin, secs, power }
    }

    fn last(&self) -> f64 {
        self.secs[self.secs.len() - 1]
    }

    /// Index `i` of the segment `[secs[i], secs[i+1]]` holding `x`.
    fn segment_of(&self, x: f64) -> usize {
        let n = self.secs.len();
        self.secs.partition_point(|&s| s <= x).saturating_sub(1).min(n.saturating_sub(2))
    }

    fn power_at(&self, i: usize, x: f64) -> f64 {
        if self.secs.len() == 1 {
            return self.power[0];
        }
        let (x0, x1) = (self.secs[i], self.secs[i + 1]);
        let (p0, p1) = (self.power[i], self.power[i + 1]);
        p0 + (p1 - p0) * ((x - x0) / (x1 - x0))
    }

    /// Trapezoidal area (kW·s) over `[a, b]` of the interpolant; `a <= b`,
    /// both inside the sampled span.
    pub(crate) fn area(&self, a: f64, b: f64) -> f64 {
        if b <= a || self.secs.len() < 2 {
            return 0.0;
        }
        let i = self.segment_of(a);
        let j = self.segment_of(b);
        let pa = self.power_at(i, a);
        let pb = self.power_at(j, b);
        if i == j {
            return 0.5 * (pa + pb) * (b - a);
        }
        let mut total = 0.5 * (pa + self.power[i + 1]) * (self.secs[i + 1] - a);
        for k in i + 1..j {
            total += 0.5 * (self.power[k] + self.power[k + 1]) * (self.secs[k + 1] - self.secs[k]);
        }
        total + 0.5 * (self.power[j] + pb) * (b - self.secs[j])
    }

    fn energy_kwh(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> f64 {
        let a = secs_between(self.origin, start).max(0.0);
        let b = secs_between(self.origin, end).min(self.last());
        (self.area(a, b) / 3600.0).max(0.0)
    }
}

/// Energy (kWh) drawn over `[start, end]`: the trapezoidal integral of the
/// piecewise-linear power signal, with the endpoint powers interpolated.
pub fn integrate_energy(series: &MeterSeries, start: DateTime<Utc>, end: DateTime<Utc>) -> Result<f64, SegmentError> {
    if start >= end {
        return Err(SegmentError::EmptyInterval { start, end });
    }
    if start < series.first_timestamp() || end > series.last_timestamp() {
        return Err(SegmentError::OutOfRange { start, end });
    }
    Ok(Signal::new(series).energy_kwh(start, end))
}

#[derive(Debug, Clone, Copy)]
struct Episode {
    start: f64,
    end: f64,
    open_start: bool,
    open_end: bool,
}

/// Maximal intervals where the interpolant is at or above `threshold`.
fn raw_episodes(signal: &Signal, threshold: f64) -> Vec<Episode> {
    let (xs, ps) = (&signal.secs, &signal.power);
    let mut out = Vec::new();
    let mut current = (ps[0] >= threshold).then_some((xs[0], true));
    for i in 0..xs.len() - 1 {
        let (x0, x1, p0, p1) = (xs[i], xs[i + 1], ps[i], ps[i + 1]);
        match current {
            None if p1 >= threshold => {
                let at = x0 + (threshold - p0) / (p1 - p0) * (x1 - x0);
                current = Some((at, false));
            }
            Some((start, open_start)) if p1 < threshold => {
                let at = x0 + (p0 - threshold) / (p0 - p1) * (x1 - x0);
                if at > start {
                    out.push(Episode { start, end: at, open_start, open_end: false });
                }
                current = None;
            }
            _ => {}
        }
    }
    if let Some((start, open_start)) = current {
        let end = signal.last();
        if end > start || open_start {
            out.push(Episode { start, end, open_start, open_end: true });
        }
    }
    out
}

fn bridge_gaps(episodes: Vec<Episode>, merge_gap_secs: f64) -> Vec<Episode> {
    let mut merged: Vec<Episode> = Vec::with_capacity(episodes.len());
    for ep in episodes {
        match merged.last_mut() {
            Some(prev) if ep.start - prev.end < merge_gap_secs => {
                prev.end = ep.end;
                prev.open_end = ep.open_end;
            }
            _ => merged.push(ep),
        }
    }
    merged
}

/// Extract ON cycles along with the count of window-truncated episodes.
///
/// Steps: threshold crossings, bridging of OFF gaps shorter than
/// `merge_gap_min`, removal of episodes touching the data window edges,
/// removal of episodes shorter than `min_on_min`, then energy integration.
pub fn detect_cycles_with_diagnostics(
    series: &MeterSeries,
    spec: &LoadSpec,
    policy: &SegmentationPolicy,
) -> Result<Detection, SegmentError> {
    let threshold = policy.resolve_threshold(spec)?;
    let signal = Signal::new(series);
    let episodes = bridge_gaps(raw_episodes(&signal, threshold), policy.merge_gap_min * 60.0);

    let mut detection = Detection::default();
    let min_on_secs = policy.min_on_min * 60.0;
    for ep in episodes {
        if ep.open_start || ep.open_end {
            detection.truncated += 1;
            continue;
        }
        if ep.end - ep.start < min_on_secs {
            continue;
        }
        let start = offset_by_secs(signal.origin, ep.start);
        let end = offset_by_secs(signal.origin, ep.end);
        if start >= end {
            continue;
        }
        let energy = signal.energy_kwh(start, end);
        detection.cycles.push(OnCycle::new(series.load_id(), start, end, energy));
    }
    Ok(detection)
}

/// ON cycles of `series`, sorted by start and pairwise disjoint.
pub fn detect_cycles(
    series: &MeterSeries,
    spec: &LoadSpec,
    policy: &SegmentationPolicy,
) -> Result<Vec<OnCycle>, SegmentError> {
    detect_cycles_with_diagnostics(series, spec, policy).map(|d| d.cycles)
}
