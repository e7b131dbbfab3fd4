//! Run-time analytics for batch process loads.
//!
//! Power readings from per-load meters are cut into ON cycles, each with its
//! duration and energy. Per load, the cycle population is summarized
//! (duration histogram, mean and standard deviation of run time and energy)
//! and compared against the rated process time to decide whether the load
//! runs normally. Anomalous loads are reported with a fixed catalog of
//! probable causes and remedies.
//!
//! Pipeline: [`ingest`] → [`segment`] → [`stats`] → [`classify`] →
//! [`report`]. [`synth`] produces seeded meter data with known cycles.

pub mod classify;
pub mod ingest;
pub mod report;
pub mod segment;
pub mod stats;
pub mod synth;

pub use classify::{
    attach_recommendations, classify_load, AnomalyFinding, CauseCatalog, ClassificationPolicy, Direction, Verdict,
};
pub use ingest::{
    case_study_plant_config, parse_meter_csv, parse_plant_config, validate_series, LoadSpec, MeterSample, MeterSeries,
    PlantConfig, ToleranceBand,
};
pub use report::{
    emit_plot_data, emit_report, parse_report, run_analyze, AnalyzeOptions, PlotKind, Report, ReportFormat,
};
pub use segment::{detect_cycles, integrate_energy, OnCycle, OnThreshold, SegmentationPolicy};
pub use stats::{build_histogram, compute_load_stats, scatter_points, DurationHistogram, LoadStats};
pub use synth::{case_study_profiles, generate_series, CycleProfile, Law, SynthGroundTruth};
