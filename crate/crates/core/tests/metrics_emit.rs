use std::fs;

use rand::Rng;

use sococ::engine::{CoreServerState, Fleet, Ledger, ServerMode};
use sococ::harness::{preset, run_experiment, RunSettings};
use sococ::metrics::{coalition_histogram, emit, load, subset_stddev, MetricsCollector, MetricsConfig, ReportMeta, RunReport};
use sococ::rng::rng_from_seed;
use sococ::topology::CoreId;
use sococ::workload::Mode;

fn meta() -> ReportMeta {
    ReportMeta {
        preset: "test".into(),
        seed: 0,
        scale_note: String::new(),
        config: serde_json::json!({}),
    }
}

#[test]
fn subset_spread_of_bernoulli_outcomes() {
    // population variance over k subsets of size s has mean (k-1)/k · p(1-p)/s
    let (p, k, s) = (0.7, 10usize, 1_000usize);
    let trials = 400;
    let mut rng = rng_from_seed(31);
    let vars: Vec<f64> = (0..trials)
        .map(|_| {
            let outcomes: Vec<bool> = (0..k * s).map(|_| rng.gen_bool(p)).collect();
            subset_stddev(&outcomes, k).unwrap().stddev.powi(2)
        })
        .collect();
    let sigma2 = p * (1.0 - p) / s as f64;
    let expect = (k as f64 - 1.0) / k as f64 * sigma2;
    let mean = vars.iter().sum::<f64>() / trials as f64;
    let se = (2.0 * (k as f64 - 1.0) / (k * k) as f64).sqrt() * sigma2 / (trials as f64).sqrt();
    assert!((mean - expect).abs() < 3.0 * se, "mean var {mean}, expected {expect} ± {se}");
    assert!((sigma2.sqrt() - 0.0145).abs() < 1e-4);
}

#[test]
fn subset_spread_edges() {
    let s = subset_stddev(&[true; 7], 10).unwrap();
    assert_eq!((s.stddev, s.dropped), (0.0, 7));
    let s = subset_stddev(&[true, false, true, false, true], 2).unwrap();
    assert_eq!(s.dropped, 1);
    assert_eq!(s.stddev, 0.0);
    let s = subset_stddev(&[true, true, false, false], 2).unwrap();
    assert!((s.stddev - 0.5).abs() < 1e-12);
    assert!(subset_stddev(&[true], 0).is_err());
}

#[test]
fn bins_partition_the_stream() {
    let cfg = MetricsConfig {
        bin_size: 100,
        n_subsets: 4,
        request_share: true,
    };
    let mut c = MetricsCollector::new(cfg).unwrap();
    let mut rng = rng_from_seed(2);
    let mut per_mode = [0u64; 3];
    for _ in 0..1_234 {
        let mode = Mode::ALL[rng.gen_range(0..3)];
        per_mode[mode.index()] += 1;
        c.record_win(rng.gen_bool(0.6), mode);
    }
    let report = c.finish(&Fleet::from_servers(Vec::new()), Ledger::default(), meta());
    for mode in Mode::ALL {
        let bins: Vec<_> = report.bins_for(mode).collect();
        let n: u64 = bins.iter().map(|b| b.n_requests).sum();
        let f: u64 = bins.iter().map(|b| b.n_failed).sum();
        assert_eq!(n, per_mode[mode.index()]);
        assert_eq!(n, report.totals_for(mode).requests);
        assert_eq!(f, report.totals_for(mode).failed);
        for (i, b) in bins.iter().enumerate() {
            assert_eq!(b.bin_index, i as u64);
            assert_eq!(b.partial, i + 1 == bins.len() && b.n_requests < 100);
            assert!(b.request_share > 0.0 && b.request_share <= 1.0);
        }
    }
    assert_eq!(report.overall().requests, 1_234);
}

fn fleet_with_counts(counts: &[u64]) -> Fleet {
    Fleet::from_servers(
        counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut s = CoreServerState::new(CoreId(i as u32), ServerMode::Sleep, 10.0, 0.0, 1.0);
                s.coalition_count = c;
                s
            })
            .collect(),
    )
}

#[test]
fn coalition_histogram_counts_every_server() {
    let counts: Vec<u64> = (0..1_000u64).map(|i| (i * 7919) % 37).collect();
    let stats = coalition_histogram(&fleet_with_counts(&counts));
    assert_eq!(stats.histogram.total(), 1_000);
    assert_eq!(stats.servers, 1_000);
    let mean = counts.iter().sum::<u64>() as f64 / 1_000.0;
    assert!((stats.mean - mean).abs() < 1e-12);

    let wide: Vec<u64> = (0..500u64).map(|i| i * i).collect();
    let stats = coalition_histogram(&fleet_with_counts(&wide));
    assert_eq!(stats.histogram.total(), 500);
    assert!(stats.histogram.buckets.len() <= 200);
}

fn small_report(seed: u64) -> RunReport {
    let settings = RunSettings {
        seed,
        ..RunSettings::default()
    };
    run_experiment(&preset("exp5").unwrap(), &settings).unwrap().report
}

#[test]
fn empty_run_writes_headers() {
    let dir = tempfile::tempdir().unwrap();
    let c = MetricsCollector::new(MetricsConfig::default()).unwrap();
    let report = c.finish(&Fleet::from_servers(Vec::new()), Ledger::default(), meta());
    emit(&report, dir.path()).unwrap();
    let bins = fs::read_to_string(dir.path().join("bins.csv")).unwrap();
    assert_eq!(bins.lines().count(), 1);
    assert!(bins.starts_with("mode,bin_index,n_requests,n_failed,success_rate,subset_stddev,partial"));
    let coal = fs::read_to_string(dir.path().join("coalitions.csv")).unwrap();
    assert_eq!(coal.trim_end(), "bucket_lo,bucket_hi,count");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    let back = load(dir.path()).unwrap();
    assert!(back.bins.is_empty());
}

#[test]
fn emitted_files_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit(&small_report(3), a.path()).unwrap();
    emit(&small_report(3), b.path()).unwrap();
    for f in ["bins.csv", "coalitions.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn load_round_trips_emit() {
    let report = small_report(4);
    let dir = tempfile::tempdir().unwrap();
    emit(&report, dir.path()).unwrap();
    let back = load(dir.path()).unwrap();
    assert_eq!(back.meta, report.meta);
    assert_eq!(back.ledger, report.ledger);
    assert_eq!(back.bins.len(), report.bins.len());
    for (x, y) in back.bins.iter().zip(&report.bins) {
        assert_eq!((x.mode, x.bin_index, x.n_requests, x.n_failed, x.partial), (y.mode, y.bin_index, y.n_requests, y.n_failed, y.partial));
        assert!((x.success_rate - y.success_rate).abs() <= 1e-8 * y.success_rate.abs().max(1.0));
        assert!((x.subset_stddev - y.subset_stddev).abs() <= 1e-8 * y.subset_stddev.abs().max(1.0));
    }
    for m in Mode::ALL {
        assert_eq!(back.totals_for(m).requests, report.totals_for(m).requests);
        assert_eq!(back.totals_for(m).failed, report.totals_for(m).failed);
    }
    assert_eq!(back.coalitions.histogram.buckets.len(), report.coalitions.histogram.buckets.len());
    assert_eq!(back.coalitions.histogram.total(), report.coalitions.histogram.total());
    assert!((back.coalitions.mean - report.coalitions.mean).abs() < 1e-8 * report.coalitions.mean.max(1.0));
}

#[test]
fn bin_sums_match_totals_in_a_real_run() {
    let report = small_report(5);
    for m in Mode::ALL {
        let n: u64 = report.bins_for(m).map(|b| b.n_requests).sum();
        assert_eq!(n, report.totals_for(m).requests);
    }
    assert_eq!(report.overall().requests, 1_000);
    assert_eq!(report.overall().failed, report.ledger.unsatisfied);
    assert_eq!(report.coalitions.histogram.total(), 100);
}
