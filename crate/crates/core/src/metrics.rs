//! Success-rate bins, coalition-membership histograms and report files.
//!
//! Outcomes are grouped per request mode into bins of `bin_size` requests
//! in arrival order. Each closed bin also carries the population standard
//! deviation of the success rates of `n_subsets` equal consecutive subsets.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Fleet, Ledger, OutcomeSink};
use crate::error::{Error, Result};
use crate::histogram::{Bucket, Histogram};
use crate::market::AuctionOutcome;
use crate::workload::{Mode, ServiceRequest};

pub const SCHEMA_VERSION: u32 = 1;
const COALITION_BUCKETS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub bin_size: u64,
    pub n_subsets: u64,
    /// Adds a `request_share` column to `bins.csv`.
    #[serde(default)]
    pub request_share: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            bin_size: 1_000_000,
            n_subsets: 1_000,
            request_share: false,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_size == 0 {
            return Err(Error::config("metrics.bin_size", "must be at least 1"));
        }
        if self.n_subsets == 0 {
            return Err(Error::config("metrics.n_subsets", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub mode: Mode,
    pub bin_index: u64,
    pub n_requests: u64,
    pub n_failed: u64,
    pub success_rate: f64,
    pub subset_stddev: f64,
    /// Final bin with fewer than `bin_size` requests.
    pub partial: bool,
    /// This bin's requests as a fraction of all requests (any mode) that
    /// arrived while it was open.
    pub request_share: f64,
}

/// Population standard deviation of per-subset success rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetSpread {
    pub stddev: f64,
    /// Trailing outcomes that did not fill a whole subset.
    pub dropped: usize,
}

/// Splits `outcomes` (true = success) in order into `n_subsets` equal
/// subsets, dropping the remainder, and returns the population standard
/// deviation of their success rates. Fewer outcomes than subsets gives 0.
pub fn subset_stddev(outcomes: &[bool], n_subsets: usize) -> Result<SubsetSpread> {
    if n_subsets == 0 {
        return Err(Error::config("n_subsets", "must be at least 1"));
    }
    let per = outcomes.len() / n_subsets;
    if per == 0 {
        return Ok(SubsetSpread {
            stddev: 0.0,
            dropped: outcomes.len(),
        });
    }
    let rates: Vec<f64> = outcomes[..per * n_subsets]
        .chunks_exact(per)
        .map(|c| c.iter().filter(|&&w| w).count() as f64 / per as f64)
        .collect();
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rates.len() as f64;
    Ok(SubsetSpread {
        stddev: var.sqrt(),
        dropped: outcomes.len() - per * n_subsets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionStats {
    pub histogram: Histogram,
    pub mean: f64,
    pub stddev: f64,
    pub servers: u64,
}

/// Distribution of `coalition_count` over every core server.
pub fn coalition_histogram(fleet: &Fleet) -> CoalitionStats {
    let counts: Vec<u64> = fleet.servers().iter().map(|s| s.coalition_count).collect();
    let n = counts.len() as f64;
    let (mean, stddev) = if counts.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = counts.iter().sum::<u64>() as f64 / n;
        let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    CoalitionStats {
        histogram: Histogram::integer(&counts, COALITION_BUCKETS),
        mean,
        stddev,
        servers: counts.len() as u64,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeTotals {
    pub requests: u64,
    pub failed: u64,
    pub success_rate: f64,
}

impl ModeTotals {
    fn from_counts(requests: u64, failed: u64) -> Self {
        Self {
            requests,
            failed,
            success_rate: rate(requests, failed),
        }
    }
}

/// Success fraction; an empty set counts as fully successful.
pub fn rate(requests: u64, failed: u64) -> f64 {
    if requests == 0 {
        1.0
    } else {
        (requests - failed) as f64 / requests as f64
    }
}

#[derive(Debug, Default, Clone)]
struct OpenBin {
    outcomes: Vec<bool>,
    first_global: u64,
}

/// Single-writer sink that bins outcomes as they arrive.
#[derive(Debug, Clone)]
pub struct MetricsCollector {
    config: MetricsConfig,
    open: [OpenBin; 3],
    closed: [Vec<BinStats>; 3],
    totals: [(u64, u64); 3],
    seen: u64,
}

impl MetricsCollector {
    pub fn new(config: MetricsConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            open: Default::default(),
            closed: Default::default(),
            totals: [(0, 0); 3],
            seen: 0,
        })
    }

    pub fn record_outcome(&mut self, outcome: &AuctionOutcome, mode: Mode) {
        self.record_win(outcome.is_won(), mode);
    }

    pub fn record_win(&mut self, won: bool, mode: Mode) {
        let i = mode.index();
        self.seen += 1;
        let bin = &mut self.open[i];
        if bin.outcomes.is_empty() {
            bin.first_global = self.seen;
        }
        bin.outcomes.push(won);
        self.totals[i].0 += 1;
        if !won {
            self.totals[i].1 += 1;
        }
        if bin.outcomes.len() as u64 == self.config.bin_size {
            self.close(mode, false);
        }
    }

    fn close(&mut self, mode: Mode, partial: bool) {
        let i = mode.index();
        let bin = std::mem::take(&mut self.open[i]);
        let n = bin.outcomes.len() as u64;
        let failed = bin.outcomes.iter().filter(|&&w| !w).count() as u64;
        let spread = subset_stddev(&bin.outcomes, self.config.n_subsets as usize)
            .expect("n_subsets validated");
        let span = self.seen - bin.first_global + 1;
        self.closed[i].push(BinStats {
            mode,
            bin_index: self.closed[i].len() as u64,
            n_requests: n,
            n_failed: failed,
            success_rate: rate(n, failed),
            subset_stddev: spread.stddev,
            partial,
            request_share: n as f64 / span as f64,
        });
    }

    /// Current (open or last closed) bin rate for `mode`.
    pub fn current_rate(&self, mode: Mode) -> Option<f64> {
        let bin = &self.open[mode.index()];
        if bin.outcomes.is_empty() {
            self.closed[mode.index()].last().map(|b| b.success_rate)
        } else {
            let failed = bin.outcomes.iter().filter(|&&w| !w).count() as u64;
            Some(rate(bin.outcomes.len() as u64, failed))
        }
    }

    pub fn closed_bins(&self, mode: Mode) -> &[BinStats] {
        &self.closed[mode.index()]
    }

    /// Closes partial bins and assembles the report.
    pub fn finish(mut self, fleet: &Fleet, ledger: Ledger, meta: ReportMeta) -> RunReport {
        for mode in Mode::ALL {
            if !self.open[mode.index()].outcomes.is_empty() {
                self.close(mode, true);
            }
        }
        let bins: Vec<BinStats> = self.closed.into_iter().flatten().collect();
        let totals = Mode::ALL.map(|m| {
            let (r, f) = self.totals[m.index()];
            ModeTotals::from_counts(r, f)
        });
        RunReport {
            meta,
            bin_size: self.config.bin_size,
            n_subsets: self.config.n_subsets,
            request_share: self.config.request_share,
            bins,
            totals,
            coalitions: coalition_histogram(fleet),
            ledger,
        }
    }
}

impl OutcomeSink for MetricsCollector {
    fn record(&mut self, request: &ServiceRequest, outcome: &AuctionOutcome) {
        self.record_outcome(outcome, request.mode);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub preset: String,
    pub seed: u64,
    pub scale_note: String,
    /// Echo of the experiment configuration.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub meta: ReportMeta,
    pub bin_size: u64,
    pub n_subsets: u64,
    pub request_share: bool,
    /// Ordered by mode, then bin index.
    pub bins: Vec<BinStats>,
    pub totals: [ModeTotals; 3],
    pub coalitions: CoalitionStats,
    pub ledger: Ledger,
}

impl RunReport {
    pub fn overall(&self) -> ModeTotals {
        let r = self.totals.iter().map(|t| t.requests).sum();
        let f = self.totals.iter().map(|t| t.failed).sum();
        ModeTotals::from_counts(r, f)
    }

    pub fn totals_for(&self, mode: Mode) -> &ModeTotals {
        &self.totals[mode.index()]
    }

    pub fn bins_for(&self, mode: Mode) -> impl Iterator<Item = &BinStats> {
        self.bins.iter().filter(move |b| b.mode == mode)
    }
}

/// Rounds to 9 significant decimal digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn num(x: f64) -> String {
    format!("{}", round_sig(x))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Summary {
    schema_version: u32,
    preset: String,
    seed: u64,
    scale_note: String,
    bin_size: u64,
    n_subsets: u64,
    request_share: bool,
    totals: ModeMap,
    overall: ModeTotals,
    unsatisfied: u64,
    ledger: Ledger,
    coalitions: CoalitionSummary,
    config: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeMap {
    #[serde(rename = "M1")]
    m1: ModeTotals,
    #[serde(rename = "M2")]
    m2: ModeTotals,
    #[serde(rename = "M3")]
    m3: ModeTotals,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoalitionSummary {
    mean: f64,
    stddev: f64,
    servers: u64,
}

fn rounded(t: &ModeTotals) -> ModeTotals {
    ModeTotals {
        success_rate: round_sig(t.success_rate),
        ..*t
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `bins.csv`, `coalitions.csv` and `summary.json` into `out_dir`.
pub fn emit(report: &RunReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut bins = String::from("mode,bin_index,n_requests,n_failed,success_rate,subset_stddev,partial");
    if report.request_share {
        bins.push_str(",request_share");
    }
    bins.push('\n');
    for b in &report.bins {
        write!(
            bins,
            "{},{},{},{},{},{},{}",
            b.mode,
            b.bin_index,
            b.n_requests,
            b.n_failed,
            num(b.success_rate),
            num(b.subset_stddev),
            b.partial
        )
        .unwrap();
        if report.request_share {
            write!(bins, ",{}", num(b.request_share)).unwrap();
        }
        bins.push('\n');
    }
    write_file(&out_dir.join("bins.csv"), &bins)?;

    let mut coalitions = String::from("bucket_lo,bucket_hi,count\n");
    for b in &report.coalitions.histogram.buckets {
        writeln!(coalitions, "{},{},{}", num(b.lo), num(b.hi), b.count).unwrap();
    }
    write_file(&out_dir.join("coalitions.csv"), &coalitions)?;

    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        preset: report.meta.preset.clone(),
        seed: report.meta.seed,
        scale_note: report.meta.scale_note.clone(),
        bin_size: report.bin_size,
        n_subsets: report.n_subsets,
        request_share: report.request_share,
        totals: ModeMap {
            m1: rounded(&report.totals[0]),
            m2: rounded(&report.totals[1]),
            m3: rounded(&report.totals[2]),
        },
        overall: rounded(&report.overall()),
        unsatisfied: report.ledger.unsatisfied,
        ledger: report.ledger,
        coalitions: CoalitionSummary {
            mean: round_sig(report.coalitions.mean),
            stddev: round_sig(report.coalitions.stddev),
            servers: report.coalitions.servers,
        },
        config: report.meta.config.clone(),
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_file(&out_dir.join("summary.json"), &json)
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, raw: Option<&str>) -> Result<T> {
    raw.and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(path, format!("line {line}: bad or missing field")))
}

/// Reads back a report written by [`emit`].
pub fn load(out_dir: &Path) -> Result<RunReport> {
    let summary_path = out_dir.join("summary.json");
    let summary: Summary = serde_json::from_str(&read_file(&summary_path)?)
        .map_err(|e| parse_err(&summary_path, e.to_string()))?;

    let bins_path = out_dir.join("bins.csv");
    let mut bins = Vec::new();
    for (n, line) in read_file(&bins_path)?.lines().enumerate().skip(1) {
        let mut f = line.split(',');
        let mode: Mode = f
            .next()
            .and_then(|m| m.parse().ok())
            .ok_or_else(|| parse_err(&bins_path, format!("line {n}: bad mode")))?;
        let bin_index = field(&bins_path, n, f.next())?;
        let n_requests = field(&bins_path, n, f.next())?;
        let n_failed = field(&bins_path, n, f.next())?;
        let success_rate = field(&bins_path, n, f.next())?;
        let subset_stddev = field(&bins_path, n, f.next())?;
        let partial = field(&bins_path, n, f.next())?;
        let request_share = if summary.request_share {
            field(&bins_path, n, f.next())?
        } else {
            0.0
        };
        bins.push(BinStats {
            mode,
            bin_index,
            n_requests,
            n_failed,
            success_rate,
            subset_stddev,
            partial,
            request_share,
        });
    }

    let coal_path = out_dir.join("coalitions.csv");
    let mut buckets = Vec::new();
    for (n, line) in read_file(&coal_path)?.lines().enumerate().skip(1) {
        let mut f = line.split(',');
        buckets.push(Bucket {
            lo: field(&coal_path, n, f.next())?,
            hi: field(&coal_path, n, f.next())?,
            count: field(&coal_path, n, f.next())?,
        });
    }

    Ok(RunReport {
        meta: ReportMeta {
            preset: summary.preset,
            seed: summary.seed,
            scale_note: summary.scale_note,
            config: summary.config,
        },
        bin_size: summary.bin_size,
        n_subsets: summary.n_subsets,
        request_share: summary.request_share,
        bins,
        totals: [summary.totals.m1, summary.totals.m2, summary.totals.m3],
        coalitions: CoalitionStats {
            histogram: Histogram { buckets },
            mean: summary.coalitions.mean,
            stddev: summary.coalitions.stddev,
            servers: summary.coalitions.servers,
        },
        ledger: summary.ledger,
    })
}
