//! Python bindings for `ton_analytics`.
//!
//! Wrapped values are immutable snapshots of the Rust types. Timestamps
//! cross the boundary as timezone-aware `datetime` objects (UTC on the way
//! out; any offset accepted on the way in).

use chrono::{DateTime, FixedOffset, Utc};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ton_analytics::classify::{self, AnomalyFinding, CauseCatalog, ClassificationPolicy};
use ton_analytics::ingest::{self, LoadSpec, MeterSample, MeterSeries, PlantConfig, ToleranceBand};
use ton_analytics::report::{self, AnalyzeOptions, PlotKind, Report, ReportFormat};
use ton_analytics::segment::{self, OnCycle, SegmentationPolicy};
use ton_analytics::stats::{self, DurationHistogram, LoadStats};
use ton_analytics::synth::{self, CycleProfile};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn utc(t: DateTime<FixedOffset>) -> DateTime<Utc> {
    t.with_timezone(&Utc)
}

#[pyclass(frozen, skip_from_py_object, name = "MeterSeries", module = "ton_analytics")]
#[derive(Clone)]
struct PyMeterSeries {
    inner: MeterSeries,
}

#[pymethods]
impl PyMeterSeries {
    /// `samples` is a list of `(datetime, power_kw)` pairs in time order.
    #[new]
    fn new(load_id: String, samples: Vec<(DateTime<FixedOffset>, f64)>) -> PyResult<Self> {
        let samples = samples.into_iter().map(|(t, p)| MeterSample::new(utc(t), p)).collect();
        MeterSeries::new(load_id, samples).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn load_id(&self) -> &str {
        self.inner.load_id()
    }

    fn samples(&self) -> Vec<(DateTime<Utc>, f64)> {
        self.inner.samples().iter().map(|s| (s.timestamp, s.power_kw)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("MeterSeries({:?}, {} samples)", self.inner.load_id(), self.inner.len())
    }
}

#[pyclass(frozen, skip_from_py_object, name = "LoadSpec", module = "ton_analytics")]
#[derive(Clone)]
struct PyLoadSpec {
    inner: LoadSpec,
}

#[pymethods]
impl PyLoadSpec {
    #[new]
    #[pyo3(signature = (load_id, ideal_ton_min, band_min, rated_power_kw=None, name=None))]
    fn new(
        load_id: String,
        ideal_ton_min: f64,
        band_min: (f64, f64),
        rated_power_kw: Option<f64>,
        name: Option<String>,
    ) -> PyResult<Self> {
        let band = ToleranceBand::new(band_min.0, band_min.1).map_err(value_err)?;
        Ok(Self {
            inner: LoadSpec {
                name: name.unwrap_or_else(|| load_id.clone()),
                load_id,
                rated_power_kw,
                ideal_ton_min,
                band,
                role: String::new(),
            },
        })
    }

    #[getter]
    fn load_id(&self) -> &str {
        &self.inner.load_id
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn rated_power_kw(&self) -> Option<f64> {
        self.inner.rated_power_kw
    }

    #[getter]
    fn ideal_ton_min(&self) -> f64 {
        self.inner.ideal_ton_min
    }

    #[getter]
    fn band_min(&self) -> (f64, f64) {
        (self.inner.band.lower(), self.inner.band.upper())
    }

    fn __repr__(&self) -> String {
        format!("LoadSpec({:?}, ideal {} min)", self.inner.load_id, self.inner.ideal_ton_min)
    }
}

#[pyclass(frozen, skip_from_py_object, name = "PlantConfig", module = "ton_analytics")]
#[derive(Clone)]
struct PyPlantConfig {
    inner: PlantConfig,
}

#[pymethods]
impl PyPlantConfig {
    #[getter]
    fn load_ids(&self) -> Vec<String> {
        self.inner.loads.iter().map(|l| l.load_id.clone()).collect()
    }

    fn load(&self, load_id: &str) -> PyResult<PyLoadSpec> {
        self.inner
            .load(load_id)
            .map(|l| PyLoadSpec { inner: l.clone() })
            .ok_or_else(|| value_err(format!("no load `{load_id}` in config")))
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }
}

#[pyclass(frozen, skip_from_py_object, name = "OnCycle", module = "ton_analytics")]
#[derive(Clone)]
struct PyOnCycle {
    inner: OnCycle,
}

#[pymethods]
impl PyOnCycle {
    #[getter]
    fn load_id(&self) -> &str {
        &self.inner.load_id
    }

    #[getter]
    fn start(&self) -> DateTime<Utc> {
        self.inner.start
    }

    #[getter]
    fn end(&self) -> DateTime<Utc> {
        self.inner.end
    }

    #[getter]
    fn duration_min(&self) -> f64 {
        self.inner.duration_min
    }

    #[getter]
    fn energy_kwh(&self) -> f64 {
        self.inner.energy_kwh
    }

    fn __repr__(&self) -> String {
        format!("OnCycle({:.3} min, {:.4} kWh)", self.inner.duration_min, self.inner.energy_kwh)
    }
}

#[pyclass(frozen, skip_from_py_object, name = "LoadStats", module = "ton_analytics")]
#[derive(Clone)]
struct PyLoadStats {
    inner: LoadStats,
}

#[pymethods]
impl PyLoadStats {
    #[getter]
    fn n_cycles(&self) -> usize {
        self.inner.n_cycles
    }

    #[getter]
    fn mean_duration_min(&self) -> f64 {
        self.inner.mean_duration_min
    }

    #[getter]
    fn std_duration_min(&self) -> f64 {
        self.inner.std_duration_min
    }

    #[getter]
    fn mean_energy_kwh(&self) -> f64 {
        self.inner.mean_energy_kwh
    }

    #[getter]
    fn std_energy_kwh(&self) -> f64 {
        self.inner.std_energy_kwh
    }

    #[getter]
    fn max_energy_kwh(&self) -> f64 {
        self.inner.max_energy_kwh
    }

    #[getter]
    fn n_within_band(&self) -> usize {
        self.inner.n_within_band
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "LoadStats(n={}, mu_t={:.3}, sigma_t={:.3}, mu_E={:.4}, sigma_E={:.4})",
            s.n_cycles, s.mean_duration_min, s.std_duration_min, s.mean_energy_kwh, s.std_energy_kwh
        )
    }
}

#[pyclass(frozen, skip_from_py_object, name = "DurationHistogram", module = "ton_analytics")]
#[derive(Clone)]
struct PyDurationHistogram {
    inner: DurationHistogram,
}

#[pymethods]
impl PyDurationHistogram {
    #[getter]
    fn bin_width_min(&self) -> f64 {
        self.inner.bin_width_min
    }

    #[getter]
    fn bins(&self) -> Vec<(f64, f64)> {
        self.inner.bins.clone()
    }

    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.inner.counts.clone()
    }

    #[getter]
    fn total(&self) -> u64 {
        self.inner.total
    }
}

#[pyclass(frozen, skip_from_py_object, name = "AnomalyFinding", module = "ton_analytics")]
#[derive(Clone)]
struct PyAnomalyFinding {
    inner: AnomalyFinding,
}

#[pymethods]
impl PyAnomalyFinding {
    #[getter]
    fn load_id(&self) -> &str {
        &self.inner.load_id
    }

    /// "NORMAL", "ANOMALOUS" or "INDETERMINATE".
    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict.label()
    }

    /// "under-run", "over-run", "mixed" or "-".
    #[getter]
    fn direction(&self) -> &'static str {
        self.inner.direction.label()
    }

    #[getter]
    fn band_fraction(&self) -> f64 {
        self.inner.band_fraction
    }

    #[getter]
    fn stats(&self) -> PyLoadStats {
        PyLoadStats { inner: self.inner.evidence.stats }
    }

    #[getter]
    fn causes(&self) -> Vec<String> {
        self.inner.causes.clone()
    }

    #[getter]
    fn remedies(&self) -> Vec<String> {
        self.inner.remedies.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "AnomalyFinding({:?}, {}, {})",
            self.inner.load_id,
            self.inner.verdict.label(),
            self.inner.direction.label()
        )
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Report", module = "ton_analytics")]
struct PyReport {
    inner: Report,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn load_ids(&self) -> Vec<String> {
        self.inner.loads.iter().map(|l| l.load_id.clone()).collect()
    }

    #[getter]
    fn config_digest(&self) -> &str {
        &self.inner.config_digest
    }

    #[getter]
    fn generated_at(&self) -> DateTime<Utc> {
        self.inner.generated_at
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.exit_code()
    }

    fn finding(&self, load_id: &str) -> PyResult<PyAnomalyFinding> {
        self.inner
            .load(load_id)
            .map(|l| PyAnomalyFinding { inner: l.finding.clone() })
            .ok_or_else(|| value_err(format!("no load `{load_id}` in report")))
    }

    fn stats(&self, load_id: &str) -> PyResult<PyLoadStats> {
        self.finding(load_id).map(|f| PyLoadStats { inner: f.inner.evidence.stats })
    }

    fn to_json(&self) -> String {
        report::emit_report(&self.inner, ReportFormat::Structured)
    }

    fn to_text(&self) -> String {
        report::emit_report(&self.inner, ReportFormat::Text)
    }

    /// CSV plot data; `kind` is "histogram" or "scatter".
    fn plot_data(&self, kind: &str, load_id: &str) -> PyResult<String> {
        let kind = match kind {
            "histogram" => PlotKind::Histogram,
            "scatter" => PlotKind::Scatter,
            other => return Err(value_err(format!("unknown plot kind `{other}`"))),
        };
        report::emit_plot_data(&self.inner, kind, load_id).map_err(value_err)
    }
}

fn unwrap_cycles(cycles: &[PyRef<'_, PyOnCycle>]) -> Vec<OnCycle> {
    cycles.iter().map(|c| c.inner.clone()).collect()
}

#[pyfunction]
fn parse_meter_csv(text: &str) -> PyResult<Vec<PyMeterSeries>> {
    let series = ingest::parse_meter_csv(text).map_err(value_err)?;
    Ok(series.into_iter().map(|inner| PyMeterSeries { inner }).collect())
}

#[pyfunction]
fn meter_csv_string(series: Vec<PyRef<'_, PyMeterSeries>>) -> PyResult<String> {
    let series: Vec<MeterSeries> = series.iter().map(|s| s.inner.clone()).collect();
    ingest::meter_csv_string(&series).map_err(value_err)
}

#[pyfunction]
fn parse_plant_config(text: &str) -> PyResult<PyPlantConfig> {
    ingest::parse_plant_config(text).map(|inner| PyPlantConfig { inner }).map_err(value_err)
}

#[pyfunction]
fn case_study_plant_config() -> PyPlantConfig {
    PyPlantConfig { inner: ingest::case_study_plant_config() }
}

/// Without `threshold_kw` the threshold is 10 % of the spec's rating.
#[pyfunction]
#[pyo3(signature = (series, spec, threshold_kw=None, min_on_min=1.0, merge_gap_min=1.0))]
fn detect_cycles(
    series: &PyMeterSeries,
    spec: &PyLoadSpec,
    threshold_kw: Option<f64>,
    min_on_min: f64,
    merge_gap_min: f64,
) -> PyResult<Vec<PyOnCycle>> {
    let base = match threshold_kw {
        Some(kw) => SegmentationPolicy::with_threshold_kw(kw),
        None => SegmentationPolicy::default(),
    };
    let policy = SegmentationPolicy { min_on_min, merge_gap_min, ..base };
    let cycles = segment::detect_cycles(&series.inner, &spec.inner, &policy).map_err(value_err)?;
    Ok(cycles.into_iter().map(|inner| PyOnCycle { inner }).collect())
}

#[pyfunction]
fn integrate_energy(series: &PyMeterSeries, start: DateTime<FixedOffset>, end: DateTime<FixedOffset>) -> PyResult<f64> {
    segment::integrate_energy(&series.inner, utc(start), utc(end)).map_err(value_err)
}

#[pyfunction]
fn compute_load_stats(cycles: Vec<PyRef<'_, PyOnCycle>>, band_min: (f64, f64)) -> PyResult<PyLoadStats> {
    let band = ToleranceBand::new(band_min.0, band_min.1).map_err(value_err)?;
    let inner = stats::compute_load_stats(&unwrap_cycles(&cycles), &band).map_err(value_err)?;
    Ok(PyLoadStats { inner })
}

#[pyfunction]
#[pyo3(signature = (cycles, bin_width_min=5.0, origin_min=0.0))]
fn build_histogram(
    cycles: Vec<PyRef<'_, PyOnCycle>>,
    bin_width_min: f64,
    origin_min: f64,
) -> PyResult<PyDurationHistogram> {
    let inner = stats::build_histogram(&unwrap_cycles(&cycles), bin_width_min, origin_min).map_err(value_err)?;
    Ok(PyDurationHistogram { inner })
}

/// Classify with the default policy and attach the standard causes and
/// remedies when the load is anomalous.
#[pyfunction]
fn classify_load(stats: &PyLoadStats, spec: &PyLoadSpec) -> PyResult<PyAnomalyFinding> {
    let finding =
        classify::classify_load(&stats.inner, &spec.inner, &ClassificationPolicy::default()).map_err(value_err)?;
    Ok(PyAnomalyFinding { inner: classify::attach_recommendations(finding, &CauseCatalog::standard()) })
}

#[pyfunction]
fn case_study_profile_names() -> Vec<&'static str> {
    synth::CASE_STUDY_PROFILE_NAMES.to_vec()
}

/// `profile` is a built-in profile name or the text of a TOML profile.
/// Returns the series and its ground-truth cycles.
#[pyfunction]
fn generate_series(profile: &str, seed: u64) -> PyResult<(PyMeterSeries, Vec<PyOnCycle>)> {
    let profile = if synth::CASE_STUDY_PROFILE_NAMES.contains(&profile) {
        synth::case_study_profile(profile).map_err(value_err)?
    } else {
        CycleProfile::from_toml(profile).map_err(value_err)?
    };
    let (series, truth) = synth::generate_series(&profile, seed).map_err(value_err)?;
    let cycles = truth.cycles.into_iter().map(|inner| PyOnCycle { inner }).collect();
    Ok((PyMeterSeries { inner: series }, cycles))
}

/// `generated_at` defaults to now; pass a fixed time for reproducible output.
#[pyfunction]
#[pyo3(signature = (config, series, bin_width_min=5.0, generated_at=None))]
fn run_analyze(
    py: Python<'_>,
    config: &PyPlantConfig,
    series: Vec<PyRef<'_, PyMeterSeries>>,
    bin_width_min: f64,
    generated_at: Option<DateTime<FixedOffset>>,
) -> PyResult<PyReport> {
    let series: Vec<MeterSeries> = series.iter().map(|s| s.inner.clone()).collect();
    let options = AnalyzeOptions { bin_width_min, ..AnalyzeOptions::default() };
    let at = generated_at.map(utc).unwrap_or_else(Utc::now);
    let config = &config.inner;
    let report = py.detach(|| report::run_analyze(config, &series, &options, at)).map_err(value_err)?;
    Ok(PyReport { inner: report })
}

#[pyfunction]
fn parse_report(text: &str) -> PyResult<PyReport> {
    report::parse_report(text).map(|inner| PyReport { inner }).map_err(value_err)
}

#[pymodule]
#[pyo3(name = "ton_analytics")]
fn ton_analytics_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeterSeries>()?;
    m.add_class::<PyLoadSpec>()?;
    m.add_class::<PyPlantConfig>()?;
    m.add_class::<PyOnCycle>()?;
    m.add_class::<PyLoadStats>()?;
    m.add_class::<PyDurationHistogram>()?;
    m.add_class::<PyAnomalyFinding>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(parse_meter_csv, m)?)?;
    m.add_function(wrap_pyfunction!(meter_csv_string, m)?)?;
    m.add_function(wrap_pyfunction!(parse_plant_config, m)?)?;
    m.add_function(wrap_pyfunction!(case_study_plant_config, m)?)?;
    m.add_function(wrap_pyfunction!(detect_cycles, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_energy, m)?)?;
    m.add_function(wrap_pyfunction!(compute_load_stats, m)?)?;
    m.add_function(wrap_pyfunction!(build_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(classify_load, m)?)?;
    m.add_function(wrap_pyfunction!(case_study_profile_names, m)?)?;
    m.add_function(wrap_pyfunction!(generate_series, m)?)?;
    m.add_function(wrap_pyfunction!(run_analyze, m)?)?;
    m.add_function(wrap_pyfunction!(parse_report, m)?)?;
    m.add("STANDARD_CAUSES", classify::STANDARD_CAUSES.to_vec())?;
    m.add("STANDARD_REMEDIES", classify::STANDARD_REMEDIES.to_vec())?;
    Ok(())
}
