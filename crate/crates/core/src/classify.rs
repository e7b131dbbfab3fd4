//! Normal/anomalous verdicts against the rated process time, plus the
//! cause and remedy catalog reported for anomalous loads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::LoadSpec;
use crate::stats::LoadStats;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("load `{0}` has no cycles to classify")]
    ZeroCycles(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationPolicy {
    /// Share of cycles inside the tolerance band needed for a Normal verdict.
    pub min_band_fraction: f64,
    /// Mean duration below `ideal * (1 - underrun_margin)` reads as under-run.
    pub underrun_margin: f64,
    /// Mean duration above `ideal * (1 + overrun_margin)` reads as over-run.
    pub overrun_margin: f64,
    /// Fewer cycles than this give an Indeterminate verdict.
    pub min_cycles: usize,
}

impl Default for ClassificationPolicy {
    fn default() -> Self {
        Self { min_band_fraction: 0.5, underrun_margin: 0.1, overrun_margin: 0.1, min_cycles: 10 }
    }
}

impl ClassificationPolicy {
    pub(crate) fn check(&self) -> Result<(), String> {
        for (name, v) in [
            ("min_band_fraction", self.min_band_fraction),
            ("underrun_margin", self.underrun_margin),
            ("overrun_margin", self.overrun_margin),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Normal,
    Anomalous,
    Indeterminate,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Normal => "NORMAL",
            Verdict::Anomalous => "ANOMALOUS",
            Verdict::Indeterminate => "INDETERMINATE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    UnderRun,
    OverRun,
    Mixed,
    None,
}

impl Direction {
    pub fn label(&self) -> &'static str {
        match self {
            Direction::UnderRun => "under-run",
            Direction::OverRun => "over-run",
            Direction::Mixed => "mixed",
            Direction::None => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub stats: LoadStats,
    pub ideal_ton_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyFinding {
    pub load_id: String,
    pub verdict: Verdict,
    pub direction: Direction,
    pub band_fraction: f64,
    pub evidence: Evidence,
    pub causes: Vec<String>,
    pub remedies: Vec<String>,
}

impl AnomalyFinding {
    /// Finding for a configured load that yielded no cycles at all.
    pub fn no_data(spec: &LoadSpec) -> Self {
        Self {
            load_id: spec.load_id.clone(),
            verdict: Verdict::Indeterminate,
            direction: Direction::None,
            band_fraction: 0.0,
            evidence: Evidence { stats: LoadStats::empty(), ideal_ton_min: spec.ideal_ton_min },
            causes: Vec::new(),
            remedies: Vec::new(),
        }
    }
}

/// Probable sources of abnormal run times and the matching remedies, as
/// reported to the facility manager.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseCatalog {
    pub causes: Vec<String>,
    pub remedies: Vec<String>,
}

pub const STANDARD_CAUSES: [&str; 6] = [
    "the process being operated in under load or over load",
    "enhanced machine down time during process cycle",
    "human error during manual operations of the load",
    "machine exceeding thermal limits",
    "supply problems",
    "sudden change in batch size",
];

pub const STANDARD_REMEDIES: [&str; 4] = [
    "routine maintenance checks",
    "Keep suggested batch size",
    "aversion of sudden changes in batch size (in case to meet production target)",
    "standardization of work: fool proofing, bench marking",
];

impl CauseCatalog {
    pub fn standard() -> Self {
        Self {
            causes: STANDARD_CAUSES.iter().map(|s| s.to_string()).collect(),
            remedies: STANDARD_REMEDIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Default for CauseCatalog {
    fn default() -> Self {
        Self::standard()
    }
}

fn direction_of(mean_duration: f64, ideal: f64, policy: &ClassificationPolicy) -> Direction {
    if mean_duration < ideal * (1.0 - policy.underrun_margin) {
        Direction::UnderRun
    } else if mean_duration > ideal * (1.0 + policy.overrun_margin) {
        Direction::OverRun
    } else {
        Direction::Mixed
    }
}

/// Verdict from the in-band share of cycles; direction from the mean run
/// time relative to the rated one. The two are independent: a Normal load
/// may run short on average and still count as normal.
///
/// The returned finding carries no recommendations; see
/// [`attach_recommendations`].
pub fn classify_load(
    stats: &LoadStats,
    spec: &LoadSpec,
    policy: &ClassificationPolicy,
) -> Result<AnomalyFinding, ClassifyError> {
    if stats.n_cycles == 0 {
        return Err(ClassifyError::ZeroCycles(spec.load_id.clone()));
    }
    let band_fraction = stats.n_within_band as f64 / stats.n_cycles as f64;
    let (verdict, direction) = if stats.n_cycles < policy.min_cycles {
        (Verdict::Indeterminate, Direction::None)
    } else if band_fraction >= policy.min_band_fraction {
        (Verdict::Normal, Direction::None)
    } else {
        (Verdict::Anomalous, direction_of(stats.mean_duration_min, spec.ideal_ton_min, policy))
    };
    Ok(AnomalyFinding {
        load_id: spec.load_id.clone(),
        verdict,
        direction,
        band_fraction,
        evidence: Evidence { stats: *stats, ideal_ton_min: spec.ideal_ton_min },
        causes: Vec::new(),
        remedies: Vec::new(),
    })
}

/// Anomalous findings get the whole catalog; others get none. The catalog
/// does not map causes to directions, so neither does this.
pub fn attach_recommendations(mut finding: AnomalyFinding, catalog: &CauseCatalog) -> AnomalyFinding {
    if finding.verdict == Verdict::Anomalous {
        finding.causes = catalog.causes.clone();
        finding.remedies = catalog.remedies.clone();
    } else {
        finding.causes.clear();
        finding.remedies.clear();
    }
    finding
}
