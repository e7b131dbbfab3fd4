//! Test-only oracles and generators shared by the integration suites.
//!
//! The oracles here deliberately avoid the library's own interpolation and
//! crossing code: they evaluate the signal pointwise by linear scan.

#![allow(dead_code)]

use chrono::{DateTime, TimeZone, Utc};
use rand::Rng;
use ton_analytics::ingest::{LoadSpec, MeterSample, MeterSeries, ToleranceBand};
use ton_analytics::synth::{CycleProfile, Law};

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 6, 1, 0, 0, 0).unwrap()
}

pub fn at_secs(s: f64) -> DateTime<Utc> {
    t0() + chrono::Duration::nanoseconds((s * 1e9).round() as i64)
}

pub fn secs_of(t: DateTime<Utc>) -> f64 {
    (t - t0()).num_nanoseconds().unwrap() as f64 * 1e-9
}

pub fn series(load_id: &str, points: &[(f64, f64)]) -> MeterSeries {
    MeterSeries::new(load_id, points.iter().map(|&(s, p)| MeterSample::new(at_secs(s), p)).collect()).unwrap()
}

pub fn points_of(series: &MeterSeries) -> Vec<(f64, f64)> {
    series.samples().iter().map(|s| (secs_of(s.timestamp), s.power_kw)).collect()
}

pub fn spec(load_id: &str, rated: Option<f64>) -> LoadSpec {
    LoadSpec {
        load_id: load_id.into(),
        name: load_id.into(),
        rated_power_kw: rated,
        ideal_ton_min: 15.0,
        band: ToleranceBand::new(13.0, 18.0).unwrap(),
        role: String::new(),
    }
}

/// Power of the piecewise-linear signal at `x`, by linear scan.
pub fn eval(points: &[(f64, f64)], x: f64) -> f64 {
    for w in points.windows(2) {
        let ((x0, p0), (x1, p1)) = (w[0], w[1]);
        if x0 <= x && x <= x1 {
            return p0 + (p1 - p0) * (x - x0) / (x1 - x0);
        }
    }
    points.last().unwrap().1
}

/// Midpoint Riemann sum (kWh) over `[a, b]`, with every piece of the signal
/// inside the interval cut into `refine` equal cells.
pub fn riemann_energy(points: &[(f64, f64)], a: f64, b: f64, refine: usize) -> f64 {
    let mut knots = vec![a];
    knots.extend(points.iter().map(|p| p.0).filter(|&x| x > a && x < b));
    knots.push(b);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let h = (w[1] - w[0]) / refine as f64;
        for k in 0..refine {
            total += eval(points, w[0] + (k as f64 + 0.5) * h) * h;
        }
    }
    total / 3600.0
}

/// Random irregularly sampled signal: `n` samples, spacing 1..600 s,
/// power 0..20 kW.
pub fn random_signal<R: Rng>(rng: &mut R, n: usize) -> Vec<(f64, f64)> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            let p = (x, rng.random_range(0.0..20.0));
            x += rng.random_range(1.0..600.0_f64).round();
            p
        })
        .collect()
}

/// Signal alternating between OFF (0 kW) and ON stretches at random levels,
/// sampled every `period` seconds; exercises crossings, gaps and short bursts.
pub fn random_duty_signal<R: Rng>(rng: &mut R, period: f64, len: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(len);
    let mut on = rng.random_bool(0.5);
    let mut left = 0usize;
    let mut level = 0.0;
    for k in 0..len {
        if left == 0 {
            on = !on;
            left = rng.random_range(1..12);
            level = rng.random_range(2.0..10.0);
        }
        left -= 1;
        let p = if on { level + rng.random_range(-0.5..0.5) } else { rng.random_range(0.0..0.4) };
        out.push((k as f64 * period, p));
    }
    out
}

pub struct BruteForce {
    /// `(start_s, end_s)` per cycle, accurate to the grid step.
    pub cycles: Vec<(f64, f64)>,
    /// Some gap or duration sits within two grid steps of `merge_gap` or
    /// `min_on`, so the grid cannot decide it.
    pub ambiguous: bool,
}

/// Fine-grid segmentation oracle: ON where the signal is >= threshold at a
/// grid point, then gap bridging, edge truncation and debounce.
pub fn brute_force_cycles(
    points: &[(f64, f64)],
    threshold: f64,
    min_on_s: f64,
    merge_gap_s: f64,
    step: f64,
) -> BruteForce {
    let (first, last) = (points[0].0, points.last().unwrap().0);
    let n = ((last - first) / step).floor() as usize;
    let mut runs: Vec<(f64, f64, bool, bool)> = Vec::new();
    let mut open: Option<(f64, bool)> = None;
    let mut prev = first;
    let mut seg = 0usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| first + k as f64 * step).collect();
    if *grid.last().unwrap() < last {
        grid.push(last);
    }
    let tail = grid.len() - 1;
    for (k, &x) in grid.iter().enumerate() {
        while seg + 2 < points.len() && points[seg + 1].0 < x {
            seg += 1;
        }
        let p = if points.len() == 1 {
            points[0].1
        } else {
            let ((x0, p0), (x1, p1)) = (points[seg], points[seg + 1]);
            p0 + (p1 - p0) * (x - x0) / (x1 - x0)
        };
        let on = p >= threshold;
        match (on, open) {
            (true, None) => open = Some((x, k == 0)),
            (false, Some((s, edge))) => {
                runs.push((s, prev, edge, false));
                open = None;
            }
            _ => {}
        }
        if k == tail {
            if let Some((s, edge)) = open {
                runs.push((s, x, edge, true));
            }
        }
        prev = x;
    }
    let near = |a: f64, b: f64| (a - b).abs() <= 2.0 * step;
    let mut ambiguous = false;
    let mut merged: Vec<(f64, f64, bool, bool)> = Vec::new();
    for r in runs {
        match merged.last_mut() {
            Some(m) => {
                let gap = r.0 - m.1;
                ambiguous |= near(gap, merge_gap_s);
                if gap < merge_gap_s {
                    m.1 = r.1;
                    m.3 = r.3;
                } else {
                    merged.push(r);
                }
            }
            None => merged.push(r),
        }
    }
    let cycles = merged
        .into_iter()
        .filter(|r| !r.2 && !r.3)
        .filter(|r| {
            ambiguous |= near(r.1 - r.0, min_on_s);
            r.1 - r.0 >= min_on_s
        })
        .map(|r| (r.0, r.1))
        .collect();
    BruteForce { cycles, ambiguous }
}

/// Random profile for the segmentation oracle: durations within 5..200 min,
/// gaps clear of the merge window.
pub fn random_profile<R: Rng>(rng: &mut R, id: usize) -> CycleProfile {
    let sample_period_s = [5.0, 10.0, 15.0, 30.0, 60.0][rng.random_range(0..5)];
    let span = |rng: &mut R| {
        let lo = rng.random_range(5.0..200.0);
        let hi = rng.random_range(lo..=200.0);
        Law::uniform(lo, hi)
    };
    let duration_law = match rng.random_range(0..3) {
        0 => Law::constant(rng.random_range(5.0..200.0)),
        1 => span(rng),
        _ => {
            let w = rng.random_range(0.1..0.9);
            Law::mixture([(w, span(rng)), (1.0 - w, span(rng))])
        }
    };
    let gap_floor = 1.0 + 2.0 * sample_period_s / 60.0;
    let gap_lo = gap_floor + rng.random_range(0.01..10.0);
    let p_lo = rng.random_range(1.0..40.0);
    CycleProfile {
        load_id: format!("load_{id}"),
        n_cycles: rng.random_range(5..30),
        duration_law,
        power_law: Law::uniform(p_lo, p_lo * rng.random_range(1.0..1.5)),
        off_gap_law: Law::uniform(gap_lo, gap_lo + rng.random_range(0.0..30.0)),
        sample_period_s,
        min_on_min: 1.0,
        merge_gap_min: 1.0,
    }
}

/// A rating for which the default 10 % threshold sits below every pulse.
pub fn rating_for(profile: &CycleProfile) -> f64 {
    profile.power_law.support_min()
}
