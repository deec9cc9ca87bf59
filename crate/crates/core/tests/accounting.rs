//! Memory accounting: instrumented entry counts from real runs must equal
//! the closed-form predictions exactly, and the pinned comparison values
//! must come out of the formulas.

use bnsl_core::dataset::generate_synthetic;
use bnsl_core::dp_levelwise::RunOptions;
use bnsl_core::{baseline_peak_entries, binom, estimate_peak_entries, run, run_baseline};

#[test]
fn measured_peaks_equal_closed_form_predictions() {
    for p in [4usize, 8, 10] {
        let (d, _) = generate_synthetic(p as u64, p, 60, 2, 0.4).unwrap();

        let est = estimate_peak_entries(p).unwrap();
        let (_, stats) = run(&d, &RunOptions::default()).unwrap();
        assert_eq!(stats.peak_tracked_entries, est.peak_entries, "levelwise p={p}");
        assert_eq!(stats.peak_tracked_bytes, est.peak_bytes, "levelwise p={p}");
        assert_eq!(
            stats
                .per_level_sizes
                .iter()
                .map(|l| (l.k, l.subsets, l.live_entries))
                .collect::<Vec<_>>(),
            est.per_level
                .iter()
                .map(|l| (l.k, l.subsets, l.live_entries))
                .collect::<Vec<_>>(),
        );

        let est_b = baseline_peak_entries(p).unwrap();
        let (_, stats_b) = run_baseline(&d, &RunOptions::default()).unwrap();
        assert_eq!(stats_b.peak_tracked_entries, est_b.peak_entries, "baseline p={p}");
        assert_eq!(stats_b.peak_tracked_bytes, est_b.peak_bytes, "baseline p={p}");
    }
}

#[test]
fn pinned_bps_entry_counts_at_twenty_variables() {
    // Adjacent-level parent-score entries peak at levels 10 and 11:
    // 10 C(20,10) + 11 C(20,11), and the two terms coincide numerically.
    assert_eq!(10 * binom(20, 10).unwrap(), 1_847_560);
    assert_eq!(11 * binom(20, 11).unwrap(), 1_847_560);
    let est = estimate_peak_entries(20).unwrap();
    assert_eq!(est.peak_bps_score_entries, 3_695_120);

    // The full-table comparator keeps one parent-score entry per (variable,
    // subset-of-the-rest) pair.
    let est_b = baseline_peak_entries(20).unwrap();
    assert_eq!(est_b.peak_bps_score_entries, 20 * (1 << 19));
    assert_eq!(est_b.peak_bps_score_entries, 10_485_760);
}

#[test]
fn baseline_report_edges() {
    let one = baseline_peak_entries(1).unwrap();
    assert_eq!(one.peak_bps_score_entries, 1);

    // Dominated by 2^p growth: strictly more than doubling per variable.
    for p in 1..=24usize {
        let a = baseline_peak_entries(p).unwrap();
        let b = baseline_peak_entries(p + 1).unwrap();
        assert!(b.peak_entries > 2 * a.peak_entries);
        assert!(b.peak_bytes > 2 * a.peak_bytes);
        assert!(b.peak_bps_score_entries > 2 * a.peak_bps_score_entries);
    }
}

#[test]
fn levelwise_report_edges() {
    let one = estimate_peak_entries(1).unwrap();
    // Two levels' worth of entries (the empty level plus the single
    // singleton) and the two global per-subset tables.
    assert_eq!(one.peak_entries, 2 + 4 + 2 * 2);
    assert!(estimate_peak_entries(0).is_err());
    assert!(estimate_peak_entries(31).is_err());

    // Accounting stays pure arithmetic out to the cap of the binomial table.
    let profile = estimate_peak_entries(29).unwrap();
    assert_eq!(profile.per_level.len(), 29);
}

#[test]
fn peak_entry_ratio_grows_with_p() {
    let mut prev_ratio = 0.0;
    for p in 10..=24usize {
        let lw = estimate_peak_entries(p).unwrap().peak_entries as f64;
        let bl = baseline_peak_entries(p).unwrap().peak_entries as f64;
        let ratio = bl / lw;
        assert!(
            ratio > prev_ratio,
            "ratio must grow with p: p={p} ratio={ratio} prev={prev_ratio}"
        );
        prev_ratio = ratio;
    }
}

#[test]
fn mid_level_vector_accounting_reproduces_the_large_run_figure()
{
    // C(28,14) parent-set doubles for 29 variables: 8.6679 GiB.
    let bytes = binom(28, 14).unwrap() * 29 * 8;
    assert_eq!(bytes, 9_307_051_200);
    let gib = bytes as f64 / (1u64 << 30) as f64;
    assert!((gib - 8.6679).abs() < 5e-5, "got {gib}");
}
