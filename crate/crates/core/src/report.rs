//! End-to-end analysis of a plant and the report artifacts built from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{attach_recommendations, classify_load, AnomalyFinding, CauseCatalog, ClassifyError, Verdict};
use crate::ingest::{
    format_timestamp, validate_series, IngestError, MeterSeries, PlantConfig, ToleranceBand, ValidationFlag,
};
use crate::segment::{detect_cycles_with_diagnostics, SegmentError};
use crate::stats::{build_histogram, compute_load_stats, scatter_points, DurationHistogram, LoadStats, StatsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("none of the meter series match a configured load")]
    NoMatchingLoads,
    #[error("more than one series supplied for load `{0}`")]
    DuplicateSeries(String),
    #[error("load `{0}` is not in the report")]
    UnknownLoad(String),
    #[error("report document: {0}")]
    Parse(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub bin_width_min: f64,
    pub bin_origin_min: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self { bin_width_min: 5.0, bin_origin_min: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub has_data: bool,
    pub threshold_kw: Option<f64>,
    pub truncated_cycles: usize,
    pub validation_flags: Vec<ValidationFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub load_id: String,
    pub name: String,
    pub ideal_ton_min: f64,
    pub band_min: ToleranceBand,
    pub stats: LoadStats,
    pub histogram: Option<DurationHistogram>,
    /// `(duration_min, energy_kwh)` per detected cycle.
    pub scatter: Vec<(f64, f64)>,
    pub finding: AnomalyFinding,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub normal: usize,
    pub anomalous: usize,
    pub indeterminate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub generated_at: DateTime<Utc>,
    pub config_digest: String,
    pub loads: Vec<LoadReport>,
    pub summary: Summary,
}

impl Report {
    pub fn load(&self, load_id: &str) -> Option<&LoadReport> {
        self.loads.iter().find(|l| l.load_id == load_id)
    }

    /// 0 when nothing is anomalous, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.anomalous > 0 {
            2
        } else {
            0
        }
    }
}

fn summarize(loads: &[LoadReport]) -> Summary {
    loads.iter().fold(Summary::default(), |mut s, l| {
        match l.finding.verdict {
            Verdict::Normal => s.normal += 1,
            Verdict::Anomalous => s.anomalous += 1,
            Verdict::Indeterminate => s.indeterminate += 1,
        }
        s
    })
}

fn analyze_load(
    config: &PlantConfig,
    spec: &crate::ingest::LoadSpec,
    series: Option<&MeterSeries>,
    options: &AnalyzeOptions,
    catalog: &CauseCatalog,
) -> Result<LoadReport, ReportError> {
    let mut report = LoadReport {
        load_id: spec.load_id.clone(),
        name: spec.name.clone(),
        ideal_ton_min: spec.ideal_ton_min,
        band_min: spec.band,
        stats: LoadStats::empty(),
        histogram: None,
        scatter: Vec::new(),
        finding: AnomalyFinding::no_data(spec),
        diagnostics: Diagnostics::default(),
    };
    let Some(series) = series else {
        return Ok(report);
    };

    report.diagnostics.has_data = true;
    report.diagnostics.validation_flags = validate_series(series, spec, &config.validation)?.flags;
    report.diagnostics.threshold_kw = Some(config.segmentation.resolve_threshold(spec)?);
    let detection = detect_cycles_with_diagnostics(series, spec, &config.segmentation)?;
    report.diagnostics.truncated_cycles = detection.truncated;

    let cycles = detection.cycles;
    if cycles.is_empty() {
        return Ok(report);
    }
    report.stats = compute_load_stats(&cycles, &spec.band)?;
    report.histogram = Some(build_histogram(&cycles, options.bin_width_min, options.bin_origin_min)?);
    report.scatter = scatter_points(&cycles);
    let finding = classify_load(&report.stats, spec, &config.classification)?;
    report.finding = attach_recommendations(finding, catalog);
    Ok(report)
}

/// Run segmentation, statistics and classification for every configured
/// load. Configured loads without a series are reported Indeterminate;
/// series for loads outside the configuration are ignored.
pub fn run_analyze(
    config: &PlantConfig,
    meter_data: &[MeterSeries],
    options: &AnalyzeOptions,
    generated_at: DateTime<Utc>,
) -> Result<Report, ReportError> {
    let mut by_load: BTreeMap<&str, &MeterSeries> = BTreeMap::new();
    for s in meter_data {
        if by_load.insert(s.load_id(), s).is_some() {
            return Err(ReportError::DuplicateSeries(s.load_id().to_string()));
        }
    }
    if !config.loads.iter().any(|l| by_load.contains_key(l.load_id.as_str())) {
        return Err(ReportError::NoMatchingLoads);
    }

    let catalog = CauseCatalog::standard();
    let mut specs: Vec<_> = config.loads.iter().collect();
    specs.sort_by(|a, b| a.load_id.cmp(&b.load_id));

    // Loads are independent; results are merged in load-id order.
    let loads = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| {
                let series = by_load.get(spec.load_id.as_str()).copied();
                let catalog = &catalog;
                scope.spawn(move || analyze_load(config, spec, series, options, catalog))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("load analysis panicked")).collect::<Result<Vec<_>, _>>()
    })?;

    Ok(Report { generated_at, config_digest: config.digest(), summary: summarize(&loads), loads })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Structured,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Histogram,
    Scatter,
}

pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => text_report(report),
    }
}

pub fn parse_report(text: &str) -> Result<Report, ReportError> {
    serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))
}

fn text_report(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ON-cycle run-time report");
    let _ = writeln!(out, "generated_at:  {}", format_timestamp(report.generated_at));
    let _ = writeln!(out, "config_digest: {}", report.config_digest);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<18} {:>7} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9}  {:<13} direction",
        "load", "cycles", "in_band", "ideal_min", "mu_t_min", "sd_t_min", "mu_E_kWh", "sd_E_kWh", "verdict"
    );
    for l in &report.loads {
        let s = &l.stats;
        let _ = writeln!(
            out,
            "{:<18} {:>7} {:>7} {:>9.1} {:>9.2} {:>9.2} {:>9.3} {:>9.3}  {:<13} {}",
            l.load_id,
            s.n_cycles,
            s.n_within_band,
            l.ideal_ton_min,
            s.mean_duration_min,
            s.std_duration_min,
            s.mean_energy_kwh,
            s.std_energy_kwh,
            l.finding.verdict.label(),
            l.finding.direction.label()
        );
    }
    let _ = writeln!(out);
    let sm = report.summary;
    let _ =
        writeln!(out, "summary: {} normal, {} anomalous, {} indeterminate", sm.normal, sm.anomalous, sm.indeterminate);

    for l in report.loads.iter().filter(|l| l.finding.verdict == Verdict::Anomalous) {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{} ({}): {:.1}% of cycles within [{}, {}] min",
            l.load_id,
            l.name,
            100.0 * l.finding.band_fraction,
            l.band_min.lower(),
            l.band_min.upper()
        );
        let _ = writeln!(out, "  probable causes:");
        for c in &l.finding.causes {
            let _ = writeln!(out, "    - {c}");
        }
        let _ = writeln!(out, "  remedies:");
        for r in &l.finding.remedies {
            let _ = writeln!(out, "    - {r}");
        }
    }
    let notes: Vec<_> = report
        .loads
        .iter()
        .filter(|l| {
            !l.diagnostics.has_data || l.diagnostics.truncated_cycles > 0 || !l.diagnostics.validation_flags.is_empty()
        })
        .collect();
    if !notes.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "data notes:");
        for l in notes {
            if !l.diagnostics.has_data {
                let _ = writeln!(out, "  {}: no meter data", l.load_id);
                continue;
            }
            let _ = writeln!(
                out,
                "  {}: {} truncated cycle(s), {} validation flag(s)",
                l.load_id,
                l.diagnostics.truncated_cycles,
                l.diagnostics.validation_flags.len()
            );
        }
    }
    out
}

/// CSV plot data for one load: `bin_lo_min,bin_hi_min,count` or
/// `duration_min,energy_kwh`.
pub fn emit_plot_data(report: &Report, kind: PlotKind, load_id: &str) -> Result<String, ReportError> {
    let load = report.load(load_id).ok_or_else(|| ReportError::UnknownLoad(load_id.to_string()))?;
    let mut out = String::new();
    match kind {
        PlotKind::Histogram => {
            out.push_str("bin_lo_min,bin_hi_min,count\n");
            if let Some(h) = &load.histogram {
                for ((lo, hi), count) in h.bins.iter().zip(&h.counts) {
                    let _ = writeln!(out, "{lo},{hi},{count}");
                }
            }
        }
        PlotKind::Scatter => {
            out.push_str("duration_min,energy_kwh\n");
            for (d, e) in &load.scatter {
                let _ = writeln!(out, "{d},{e}");
            }
        }
    }
    Ok(out)
}
