mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use ton_analytics::classify::{
    attach_recommendations, classify_load, CauseCatalog, ClassificationPolicy, Direction, Verdict,
};
use ton_analytics::ingest::{meter_csv_string, parse_meter_csv, MeterSample, MeterSeries, ToleranceBand};
use ton_analytics::segment::{detect_cycles, integrate_energy, OnCycle, SegmentationPolicy};
use ton_analytics::stats::{build_histogram, compute_load_stats};

fn policy(threshold: f64, min_on_min: f64, merge_gap_min: f64) -> SegmentationPolicy {
    SegmentationPolicy { min_on_min, merge_gap_min, ..SegmentationPolicy::with_threshold_kw(threshold) }
}

fn duty(seed: u64, period: f64, len: usize) -> Vec<(f64, f64)> {
    random_duty_signal(&mut ChaCha8Rng::seed_from_u64(seed), period, len)
}

fn cycles_from(durations: &[f64], energies: &[f64]) -> Vec<OnCycle> {
    durations
        .iter()
        .zip(energies)
        .enumerate()
        .map(|(k, (&d, &e))| {
            let start = at_secs(k as f64 * 100_000.0);
            OnCycle::new("load", start, start + chrono::Duration::milliseconds((d * 60_000.0).round() as i64), e)
        })
        .collect()
}

fn spans(cycles: &[OnCycle]) -> Vec<(f64, f64)> {
    cycles.iter().map(|c| (secs_of(c.start), secs_of(c.end))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_preserves_every_sample(seed in any::<u64>(), loads in 1usize..4, len in 1usize..80) {
        let all: Vec<MeterSeries> = (0..loads)
            .map(|k| series(&format!("load_{k}"), &duty(seed.wrapping_add(k as u64), 7.5, len)))
            .collect();
        let parsed = parse_meter_csv(&meter_csv_string(&all).unwrap()).unwrap();
        prop_assert_eq!(parsed, all);
    }

    #[test]
    fn detection_agrees_with_fine_grid(seed in any::<u64>(), len in 2usize..120, thr in 1.0f64..8.0) {
        let points = duty(seed, 30.0, len);
        let s = series("load", &points);
        let got = detect_cycles(&s, &spec("load", None), &policy(thr, 1.0, 1.0)).unwrap();
        let oracle = brute_force_cycles(&points, thr, 60.0, 60.0, 0.05);
        prop_assume!(!oracle.ambiguous);
        prop_assert_eq!(got.len(), oracle.cycles.len());
        for ((a, b), (oa, ob)) in spans(&got).into_iter().zip(oracle.cycles) {
            prop_assert!((a - oa).abs() <= 0.1 && (b - ob).abs() <= 0.1, "{a}..{b} vs {oa}..{ob}");
        }
    }

    #[test]
    fn cycles_are_disjoint_ordered_and_debounced(seed in any::<u64>(), len in 2usize..200, min_on in 0.0f64..5.0, merge in 0.0f64..5.0) {
        let s = series("load", &duty(seed, 15.0, len));
        let cycles = detect_cycles(&s, &spec("load", None), &policy(1.5, min_on, merge)).unwrap();
        for c in &cycles {
            prop_assert!(c.start < c.end);
            prop_assert!(c.duration_min >= min_on - 1e-9);
            prop_assert!(c.start > s.first_timestamp() && c.end < s.last_timestamp());
        }
        for w in cycles.windows(2) {
            let gap = secs_of(w[1].start) - secs_of(w[0].end);
            prop_assert!(gap >= merge * 60.0 - 1e-6, "gap {gap} s below merge window");
        }
    }

    #[test]
    fn raising_min_on_never_adds_cycles(seed in any::<u64>(), len in 2usize..200, a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let s = series("load", &duty(seed, 15.0, len));
        let (lo, hi) = (a.min(b), a.max(b));
        let run = |m: f64| detect_cycles(&s, &spec("load", None), &policy(1.5, m, 1.0)).unwrap();
        let (loose, strict) = (run(lo), run(hi));
        prop_assert!(strict.len() <= loose.len());
        // Every surviving cycle is one of the looser run's cycles.
        for c in &strict {
            prop_assert!(loose.contains(c));
        }
    }

    #[test]
    fn widening_merge_gap_never_adds_cycles_without_debounce(seed in any::<u64>(), len in 2usize..200, a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let s = series("load", &duty(seed, 15.0, len));
        let (lo, hi) = (a.min(b), a.max(b));
        let run = |g: f64| detect_cycles(&s, &spec("load", None), &policy(1.5, 0.0, g)).unwrap();
        prop_assert!(run(hi).len() <= run(lo).len());
    }

    #[test]
    fn refining_with_interpolant_samples_changes_nothing(seed in any::<u64>(), len in 2usize..120, k in 2usize..5) {
        let points = duty(seed, 30.0, len);
        let mut fine = Vec::new();
        for w in points.windows(2) {
            for j in 0..k {
                let x = w[0].0 + (w[1].0 - w[0].0) * j as f64 / k as f64;
                fine.push((x, eval(&points, x)));
            }
        }
        fine.push(*points.last().unwrap());
        let p = policy(1.5, 1.0, 1.0);
        let coarse = detect_cycles(&series("load", &points), &spec("load", None), &p).unwrap();
        let refined = detect_cycles(&series("load", &fine), &spec("load", None), &p).unwrap();
        prop_assert_eq!(coarse.len(), refined.len());
        for (c, r) in coarse.iter().zip(&refined) {
            prop_assert!((secs_of(c.start) - secs_of(r.start)).abs() < 1e-6);
            prop_assert!((secs_of(c.end) - secs_of(r.end)).abs() < 1e-6);
            prop_assert!((c.energy_kwh - r.energy_kwh).abs() <= 1e-9 * c.energy_kwh.max(1.0));
        }
    }

    #[test]
    fn scaling_power_and_threshold_keeps_boundaries_and_scales_energy(seed in any::<u64>(), len in 2usize..120, f in 0.1f64..50.0) {
        let points = duty(seed, 30.0, len);
        let scaled: Vec<_> = points.iter().map(|&(x, p)| (x, p * f)).collect();
        let base = detect_cycles(&series("load", &points), &spec("load", None), &policy(1.5, 1.0, 1.0)).unwrap();
        let big = detect_cycles(&series("load", &scaled), &spec("load", None), &policy(1.5 * f, 1.0, 1.0)).unwrap();
        prop_assert_eq!(base.len(), big.len());
        for (b, s) in base.iter().zip(&big) {
            prop_assert!((secs_of(b.start) - secs_of(s.start)).abs() < 1e-6);
            prop_assert!((s.energy_kwh - f * b.energy_kwh).abs() <= 1e-9 * s.energy_kwh.max(1.0));
        }
    }

    #[test]
    fn energy_matches_riemann_oracle_and_is_additive(seed in any::<u64>(), n in 2usize..40, u in 0.0f64..1.0, v in 0.0f64..1.0, w in 0.0f64..1.0) {
        let points = random_signal(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let s = series("load", &points);
        let span = points.last().unwrap().0;
        let mut cuts = [u * span, v * span, w * span];
        cuts.sort_by(f64::total_cmp);
        let [a, m, b] = cuts.map(|x| secs_of(at_secs(x)));
        prop_assume!(a < m && m < b);
        let e = |x: f64, y: f64| integrate_energy(&s, at_secs(x), at_secs(y)).unwrap();
        let whole = e(a, b);
        assert_relative_eq!(whole, riemann_energy(&points, a, b, 200), max_relative = 1e-9, epsilon = 1e-12);
        assert_relative_eq!(whole, e(a, m) + e(m, b), max_relative = 1e-12, epsilon = 1e-12);
    }

    #[test]
    fn histogram_conserves_and_ignores_order(durs in prop::collection::vec(0.1f64..300.0, 1..200), width in 0.5f64..20.0, origin in 0.0f64..5.0, rot in 0usize..200) {
        let energies = vec![1.0; durs.len()];
        let cycles = cycles_from(&durs, &energies);
        let h = build_histogram(&cycles, width, origin).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>(), cycles.len() as u64);
        prop_assert_eq!(h.total, cycles.len() as u64);
        for c in &cycles {
            let hit = h.bins.iter().zip(&h.counts).any(|((lo, hi), &n)| n > 0 && *lo <= c.duration_min && c.duration_min < *hi);
            prop_assert!(hit);
        }
        let mut rotated = cycles.clone();
        rotated.rotate_left(rot % cycles.len());
        prop_assert_eq!(build_histogram(&rotated, width, origin).unwrap(), h);
    }

    #[test]
    fn aligned_histogram_band_count_matches_stats(durs in prop::collection::vec(1.0f64..60.0, 1..200), lo_k in 0u32..10, len_k in 1u32..6) {
        let cycles = cycles_from(&durs, &vec![1.0; durs.len()]);
        // Bins of 1 min with integer edges; the band's upper edge is
        // half-open in the histogram but closed in the stats, so only
        // durations exactly on it could differ.
        let band = ToleranceBand::new(lo_k as f64, (lo_k + len_k) as f64).unwrap();
        prop_assume!(cycles.iter().all(|c| c.duration_min != band.upper()));
        let h = build_histogram(&cycles, 1.0, 0.0).unwrap();
        let stats = compute_load_stats(&cycles, &band).unwrap();
        prop_assert_eq!(h.count_within(&band), stats.n_within_band as u64);
    }

    #[test]
    fn stats_follow_affine_changes(durs in prop::collection::vec(1.0f64..300.0, 1..100), energies in prop::collection::vec(0.01f64..50.0, 100), k in 0.01f64..100.0) {
        let energies = &energies[..durs.len()];
        let band = ToleranceBand::new(13.0, 18.0).unwrap();
        let base = compute_load_stats(&cycles_from(&durs, energies), &band).unwrap();
        let scaled: Vec<f64> = energies.iter().map(|e| e * k).collect();
        let s = compute_load_stats(&cycles_from(&durs, &scaled), &band).unwrap();
        assert_relative_eq!(s.mean_energy_kwh, k * base.mean_energy_kwh, max_relative = 1e-12);
        assert_relative_eq!(s.std_energy_kwh, k * base.std_energy_kwh, max_relative = 1e-9, epsilon = 1e-12);
        prop_assert_eq!(s.mean_duration_min, base.mean_duration_min);

        // Shifting every cycle in time changes nothing.
        let shifted: Vec<OnCycle> = cycles_from(&durs, energies)
            .into_iter()
            .map(|c| OnCycle::new("load", c.start + chrono::Duration::days(3), c.end + chrono::Duration::days(3), c.energy_kwh))
            .collect();
        prop_assert_eq!(compute_load_stats(&shifted, &band).unwrap(), base);
    }

    #[test]
    fn std_agrees_with_shifted_single_pass(energies in prop::collection::vec(0.01f64..50.0, 1..300)) {
        let durs = vec![10.0; energies.len()];
        let stats = compute_load_stats(&cycles_from(&durs, &energies), &ToleranceBand::new(1.0, 2.0).unwrap()).unwrap();
        let k = energies[0];
        let n = energies.len() as f64;
        let (s1, s2) = energies.iter().fold((0.0, 0.0), |(a, b), e| (a + (e - k), b + (e - k) * (e - k)));
        let var = (s2 / n - (s1 / n) * (s1 / n)).max(0.0);
        prop_assert!((stats.std_energy_kwh - var.sqrt()).abs() <= 1e-9 * stats.std_energy_kwh.max(1.0));
    }

    #[test]
    fn classification_is_monotone_in_band_count(n in 10usize..500, a in 0.0f64..1.0, b in 0.0f64..1.0, mean in 1.0f64..40.0) {
        let spec = spec("load", None);
        let pol = ClassificationPolicy::default();
        let mk = |frac: f64| {
            let mut s = ton_analytics::stats::LoadStats::empty();
            s.n_cycles = n;
            s.n_within_band = (frac * n as f64).floor() as usize;
            s.mean_duration_min = mean;
            classify_load(&s, &spec, &pol).unwrap()
        };
        let (lo, hi) = (mk(a.min(b)), mk(a.max(b)));
        if lo.verdict == Verdict::Normal {
            prop_assert_eq!(hi.verdict, Verdict::Normal);
        }
        if hi.verdict == Verdict::Anomalous {
            prop_assert_eq!(lo.verdict, Verdict::Anomalous);
        }
        for f in [&lo, &hi] {
            prop_assert_eq!(f.verdict == Verdict::Normal, f.band_fraction >= 0.5);
            let want = if f.verdict != Verdict::Anomalous {
                Direction::None
            } else if mean < 15.0 * 0.9 {
                Direction::UnderRun
            } else if mean > 15.0 * 1.1 {
                Direction::OverRun
            } else {
                Direction::Mixed
            };
            prop_assert_eq!(f.direction, want);
        }
    }

    #[test]
    fn classification_ignores_time_unit(n in 10usize..500, within in 0usize..500, mean in 1.0f64..40.0, k in 0.01f64..100.0) {
        let within = within.min(n);
        let mut s = ton_analytics::stats::LoadStats::empty();
        s.n_cycles = n;
        s.n_within_band = within;
        s.mean_duration_min = mean;
        let base_spec = spec("load", None);
        let base = classify_load(&s, &base_spec, &ClassificationPolicy::default()).unwrap();

        // Rescale every duration-like quantity by k; the count of in-band
        // cycles is unit-free and stays put.
        let mut spec_k = base_spec.clone();
        spec_k.ideal_ton_min *= k;
        spec_k.band = base_spec.band.scaled(k);
        s.mean_duration_min *= k;
        let scaled = classify_load(&s, &spec_k, &ClassificationPolicy::default()).unwrap();
        prop_assert_eq!(scaled.verdict, base.verdict);
        prop_assert_eq!(scaled.direction, base.direction);
    }

    #[test]
    fn recommendations_track_the_verdict(n in 1usize..50, within in 0usize..50, mean in 1.0f64..40.0) {
        let mut s = ton_analytics::stats::LoadStats::empty();
        s.n_cycles = n;
        s.n_within_band = within.min(n);
        s.mean_duration_min = mean;
        let catalog = CauseCatalog::standard();
        let once = attach_recommendations(classify_load(&s, &spec("load", None), &ClassificationPolicy::default()).unwrap(), &catalog);
        let twice = attach_recommendations(once.clone(), &catalog);
        prop_assert_eq!(&once, &twice);
        let anomalous = once.verdict == Verdict::Anomalous;
        prop_assert_eq!(!once.causes.is_empty(), anomalous);
        prop_assert_eq!(!once.remedies.is_empty(), anomalous);
    }
}

/// With debouncing in force, widening the merge window can *add* a cycle:
/// two bursts each shorter than `min_on` are dropped on their own but
/// survive once bridged into one longer episode.
#[test]
fn merging_can_rescue_short_bursts() {
    // 0.75 min ON, 0.5 min OFF, 0.75 min ON, padded with OFF on both sides.
    let points = [
        (0.0, 0.0),
        (60.0, 0.0),
        (60.0001, 5.0),
        (105.0, 5.0),
        (105.0001, 0.0),
        (135.0, 0.0),
        (135.0001, 5.0),
        (180.0, 5.0),
        (180.0001, 0.0),
        (300.0, 0.0),
    ];
    let s = series("load", &points);
    let run = |gap: f64| detect_cycles(&s, &spec("load", None), &policy(2.5, 1.0, gap)).unwrap();
    assert_eq!(run(0.25).len(), 0);
    assert_eq!(run(1.0).len(), 1);
}

#[test]
fn shuffled_rows_parse_to_the_same_series() {
    let a = series("a", &duty(1, 10.0, 30));
    let b = series("b", &duty(2, 10.0, 30));
    let csv = meter_csv_string(&[a.clone(), b.clone()]).unwrap();
    let mut lines: Vec<&str> = csv.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    let reordered = format!("{header}\n{}\n", lines.join("\n"));
    // Row order is irrelevant: each series comes back sorted by time.
    assert_eq!(parse_meter_csv(&reordered).unwrap(), vec![a.clone(), b.clone()]);

    let mut rows: Vec<(usize, &str)> = csv.lines().skip(1).enumerate().collect();
    rows.sort_by_key(|(i, _)| (i % 30, *i));
    let interleaved = format!("{header}\n{}\n", rows.iter().map(|r| r.1).collect::<Vec<_>>().join("\n"));
    assert_eq!(parse_meter_csv(&interleaved).unwrap(), vec![a, b]);
}

#[test]
fn single_sample_series_has_no_cycles() {
    let s = MeterSeries::new("load", vec![MeterSample::new(t0(), 9.0)]).unwrap();
    assert!(detect_cycles(&s, &spec("load", None), &policy(1.0, 0.0, 0.0)).unwrap().is_empty());
}
