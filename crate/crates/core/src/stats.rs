//! Duration histograms, duration/energy moments and scatter data per load.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ToleranceBand;
use crate::segment::OnCycle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no cycles to summarize")]
    EmptyCycleList,
    #[error("bin width must be > 0, got {0}")]
    InvalidBinWidth(f64),
    #[error("bin origin must be >= 0, got {0}")]
    InvalidOrigin(f64),
}

/// Counts of cycle durations in contiguous half-open bins `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationHistogram {
    pub bin_width_min: f64,
    pub bins: Vec<(f64, f64)>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl DurationHistogram {
    /// Sum of counts over bins lying entirely within `band`.
    pub fn count_within(&self, band: &ToleranceBand) -> u64 {
        self.bins
            .iter()
            .zip(&self.counts)
            .filter(|((lo, hi), _)| *lo >= band.lower() && *hi <= band.upper())
            .map(|(_, c)| c)
            .sum()
    }
}

/// Bin durations into `[origin + k*width, origin + (k+1)*width)` covering the
/// shortest through the longest cycle.
pub fn build_histogram(
    cycles: &[OnCycle],
    bin_width_min: f64,
    origin_min: f64,
) -> Result<DurationHistogram, StatsError> {
    if !(bin_width_min.is_finite() && bin_width_min > 0.0) {
        return Err(StatsError::InvalidBinWidth(bin_width_min));
    }
    if !(origin_min.is_finite() && origin_min >= 0.0) {
        return Err(StatsError::InvalidOrigin(origin_min));
    }
    if cycles.is_empty() {
        return Err(StatsError::EmptyCycleList);
    }
    let bin_of = |d: f64| ((d - origin_min) / bin_width_min).floor() as i64;
    let (lo_k, hi_k) = cycles.iter().fold((i64::MAX, i64::MIN), |(lo, hi), c| {
        let k = bin_of(c.duration_min);
        (lo.min(k), hi.max(k))
    });
    let n_bins = (hi_k - lo_k + 1) as usize;
    let mut counts = vec![0u64; n_bins];
    for c in cycles {
        counts[(bin_of(c.duration_min) - lo_k) as usize] += 1;
    }
    let bins = (lo_k..=hi_k)
        .map(|k| (origin_min + k as f64 * bin_width_min, origin_min + (k + 1) as f64 * bin_width_min))
        .collect();
    Ok(DurationHistogram { bin_width_min, bins, counts, total: cycles.len() as u64 })
}

/// Population moments of cycle duration and energy for one load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadStats {
    pub n_cycles: usize,
    pub mean_duration_min: f64,
    pub std_duration_min: f64,
    pub mean_energy_kwh: f64,
    pub std_energy_kwh: f64,
    pub max_energy_kwh: f64,
    pub n_within_band: usize,
}

impl LoadStats {
    /// Placeholder for a load that produced no cycles.
    pub fn empty() -> Self {
        Self {
            n_cycles: 0,
            mean_duration_min: 0.0,
            std_duration_min: 0.0,
            mean_energy_kwh: 0.0,
            std_energy_kwh: 0.0,
            max_energy_kwh: 0.0,
            n_within_band: 0,
        }
    }
}

/// Mean and population standard deviation (divisor n), two-pass.
pub(crate) fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / n as f64).sqrt())
}

pub fn compute_load_stats(cycles: &[OnCycle], band: &ToleranceBand) -> Result<LoadStats, StatsError> {
    if cycles.is_empty() {
        return Err(StatsError::EmptyCycleList);
    }
    let (mean_duration_min, std_duration_min) = mean_std(cycles.iter().map(|c| c.duration_min));
    let (mean_energy_kwh, std_energy_kwh) = mean_std(cycles.iter().map(|c| c.energy_kwh));
    Ok(LoadStats {
        n_cycles: cycles.len(),
        mean_duration_min,
        std_duration_min,
        mean_energy_kwh,
        std_energy_kwh,
        max_energy_kwh: cycles.iter().map(|c| c.energy_kwh).fold(f64::NEG_INFINITY, f64::max),
        n_within_band: cycles.iter().filter(|c| band.contains(c.duration_min)).count(),
    })
}

/// `(duration_min, energy_kwh)` per cycle, in input order.
pub fn scatter_points(cycles: &[OnCycle]) -> Vec<(f64, f64)> {
    cycles.iter().map(|c| (c.duration_min, c.energy_kwh)).collect()
}
