//! Bootstrap of the core/periphery contact structure.
//!
//! Periphery servers announce themselves, each core server picks `m` of
//! them uniformly without replacement and registers with each pick, and
//! each core server also picks `n` primary contacts among the other cores.
//! The periphery-side lists (`pcs`) are the inverse of the core-side
//! periphery lists.

use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::rng::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoreId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PeripheryId(pub u32);

impl CoreId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PeripheryId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CoreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cs{}", self.0)
    }
}

impl fmt::Display for PeripheryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ps{}", self.0)
    }
}

/// Cores above which secondary-contact counts are estimated on a sample.
pub const EXACT_STATS_THRESHOLD: usize = 100_000;
/// Sample size used above [`EXACT_STATS_THRESHOLD`].
pub const DEFAULT_STATS_SAMPLE: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub n_core: usize,
    pub n_periphery: usize,
    #[serde(default)]
    pub n_aux: usize,
    pub primary_contacts_per_core: usize,
    pub periphery_per_core: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_core == 0 {
            return Err(Error::config("topology.n_core", "must be at least 1"));
        }
        if self.n_core > u32::MAX as usize {
            return Err(Error::config("topology.n_core", "exceeds the 32-bit id space"));
        }
        if self.n_periphery == 0 {
            return Err(Error::config("topology.n_periphery", "must be at least 1"));
        }
        if self.periphery_per_core == 0 || self.periphery_per_core > self.n_periphery {
            return Err(Error::config(
                "topology.periphery_per_core",
                format!(
                    "must be in 1..={} (n_periphery), got {}",
                    self.n_periphery, self.periphery_per_core
                ),
            ));
        }
        if self.primary_contacts_per_core >= self.n_core && self.primary_contacts_per_core > 0 {
            return Err(Error::config(
                "topology.primary_contacts_per_core",
                format!(
                    "must be at most n_core - 1 = {}, got {}",
                    self.n_core - 1,
                    self.primary_contacts_per_core
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactTopology {
    /// Per core: the periphery servers it registered with (length `m`).
    pub core_known_periphery: Vec<Vec<PeripheryId>>,
    /// Per core: its primary contacts (length `n`, never the owner).
    pub core_primary_contacts: Vec<Vec<CoreId>>,
    /// Per periphery server: the cores that registered with it, ascending.
    pub periphery_known_cores: Vec<Vec<CoreId>>,
    pub aux_roster: Vec<u32>,
}

/// Builds the initial contact structure. Deterministic in `(config, rng)`.
pub fn organize(config: &TopologyConfig, rng: &mut SimRng) -> Result<ContactTopology> {
    config.validate()?;
    let n_core = config.n_core;
    let m = config.periphery_per_core;
    let n = config.primary_contacts_per_core;

    let mut core_known_periphery = Vec::with_capacity(n_core);
    let mut core_primary_contacts = Vec::with_capacity(n_core);
    for c in 0..n_core {
        let periphery: Vec<PeripheryId> = index::sample(rng, config.n_periphery, m)
            .into_iter()
            .map(|p| PeripheryId(p as u32))
            .collect();
        core_known_periphery.push(periphery);

        // draw from the n_core - 1 other cores, shifting past the owner
        let contacts: Vec<CoreId> = if n == 0 {
            Vec::new()
        } else {
            index::sample(rng, n_core - 1, n)
                .into_iter()
                .map(|i| CoreId(if i >= c { i + 1 } else { i } as u32))
                .collect()
        };
        core_primary_contacts.push(contacts);
    }

    let periphery_known_cores = invert(&core_known_periphery, config.n_periphery);
    Ok(ContactTopology {
        core_known_periphery,
        core_primary_contacts,
        periphery_known_cores,
        aux_roster: (0..config.n_aux as u32).collect(),
    })
}

/// Rebuilds `pcs` lists from core-side periphery lists. Cores appear in
/// ascending id order.
pub fn invert(core_known_periphery: &[Vec<PeripheryId>], n_periphery: usize) -> Vec<Vec<CoreId>> {
    let mut pcs = vec![Vec::new(); n_periphery];
    for (c, list) in core_known_periphery.iter().enumerate() {
        for p in list {
            pcs[p.index()].push(CoreId(c as u32));
        }
    }
    pcs
}

impl ContactTopology {
    pub fn n_core(&self) -> usize {
        self.core_known_periphery.len()
    }

    pub fn n_periphery(&self) -> usize {
        self.periphery_known_cores.len()
    }

    pub fn pcs(&self, p: PeripheryId) -> &[CoreId] {
        &self.periphery_known_cores[p.index()]
    }

    pub fn primary_contacts(&self, c: CoreId) -> &[CoreId] {
        &self.core_primary_contacts[c.index()]
    }

    /// Cores sharing at least one periphery server with `c`, excluding `c`,
    /// ascending and without duplicates.
    pub fn secondary_contacts(&self, c: CoreId) -> Vec<CoreId> {
        let mut out: Vec<CoreId> = self.core_known_periphery[c.index()]
            .iter()
            .flat_map(|&p| self.pcs(p).iter().copied())
            .filter(|&o| o != c)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Checks every structural invariant; returns the first violation.
    pub fn validate(&self) -> Result<()> {
        let n_core = self.n_core();
        let n_periphery = self.n_periphery();
        if self.core_primary_contacts.len() != n_core {
            return Err(Error::Internal("primary-contact table length differs from core count".into()));
        }
        let m = self.core_known_periphery.first().map_or(0, Vec::len);
        let n = self.core_primary_contacts.first().map_or(0, Vec::len);
        for (c, list) in self.core_known_periphery.iter().enumerate() {
            if list.len() != m {
                return Err(Error::Internal(format!("core {c} knows {} periphery servers, expected {m}", list.len())));
            }
            let mut seen = list.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != m || seen.iter().any(|p| p.index() >= n_periphery) {
                return Err(Error::Internal(format!("core {c} has duplicate or out-of-range periphery entries")));
            }
        }
        for (c, list) in self.core_primary_contacts.iter().enumerate() {
            if list.len() != n {
                return Err(Error::Internal(format!("core {c} has {} primary contacts, expected {n}", list.len())));
            }
            let mut seen = list.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != n || seen.iter().any(|o| o.index() == c || o.index() >= n_core) {
                return Err(Error::Internal(format!("core {c} has invalid primary contacts")));
            }
        }
        if invert(&self.core_known_periphery, n_periphery) != self.periphery_known_cores {
            return Err(Error::Internal("pcs lists are not the inverse of core periphery lists".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyStats {
    pub n_core: usize,
    pub n_periphery: usize,
    pub pcs_sizes: Vec<u64>,
    pub pcs_mean: f64,
    /// `(core, S)` for every sampled core, ascending by core id.
    pub secondary_counts: Vec<(CoreId, u64)>,
    pub secondary_min: u64,
    pub secondary_max: u64,
    pub secondary_mean: f64,
    /// Sample standard deviation of `S` over sampled cores.
    pub secondary_stddev: f64,
    /// True when every core was counted.
    pub exact: bool,
    pub secondary_histogram: Histogram,
}

pub const DEFAULT_HISTOGRAM_BUCKETS: usize = 50;

/// Sample size following the exact/estimated threshold rule.
pub fn default_sample_size(n_core: usize) -> usize {
    if n_core > EXACT_STATS_THRESHOLD {
        DEFAULT_STATS_SAMPLE
    } else {
        n_core
    }
}

/// Periphery-list and secondary-contact statistics. `sample_size == N`
/// counts every core; smaller values draw a uniform sample of cores.
pub fn compute_stats(topology: &ContactTopology, sample_size: usize, rng: &mut SimRng) -> Result<TopologyStats> {
    let n_core = topology.n_core();
    let n_periphery = topology.n_periphery();
    if n_core == 0 || n_periphery == 0 {
        return Err(Error::config("topology", "empty topology"));
    }
    if sample_size == 0 || sample_size > n_core {
        return Err(Error::config(
            "stats_sample",
            format!("must be in 1..={n_core}, got {sample_size}"),
        ));
    }

    let pcs_sizes: Vec<u64> = topology.periphery_known_cores.iter().map(|l| l.len() as u64).collect();
    let pcs_mean = pcs_sizes.iter().sum::<u64>() as f64 / n_periphery as f64;

    let exact = sample_size == n_core;
    let sampled: Vec<usize> = if exact {
        (0..n_core).collect()
    } else {
        let mut s = index::sample(rng, n_core, sample_size).into_vec();
        s.sort_unstable();
        s
    };

    // stamp[o] == c + 1 marks o as already counted for core c
    let mut stamp = vec![0u32; n_core];
    let mut secondary_counts = Vec::with_capacity(sampled.len());
    for &c in &sampled {
        let mark = c as u32 + 1;
        stamp[c] = mark;
        let mut s = 0u64;
        for p in &topology.core_known_periphery[c] {
            for o in topology.pcs(*p) {
                let slot = &mut stamp[o.index()];
                if *slot != mark {
                    *slot = mark;
                    s += 1;
                }
            }
        }
        secondary_counts.push((CoreId(c as u32), s));
    }

    let values: Vec<f64> = secondary_counts.iter().map(|&(_, s)| s as f64).collect();
    let k = values.len() as f64;
    let secondary_mean = values.iter().sum::<f64>() / k;
    let secondary_stddev = if values.len() > 1 {
        (values.iter().map(|v| (v - secondary_mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    let secondary_min = secondary_counts.iter().map(|&(_, s)| s).min().unwrap_or(0);
    let secondary_max = secondary_counts.iter().map(|&(_, s)| s).max().unwrap_or(0);
    let secondary_histogram = Histogram::equal_width(&values, DEFAULT_HISTOGRAM_BUCKETS)?;

    Ok(TopologyStats {
        n_core,
        n_periphery,
        pcs_sizes,
        pcs_mean,
        secondary_counts,
        secondary_min,
        secondary_max,
        secondary_mean,
        secondary_stddev,
        exact,
        secondary_histogram,
    })
}

/// Re-buckets the sampled secondary counts.
pub fn secondary_histogram(stats: &TopologyStats, bucket_count: usize) -> Result<Histogram> {
    let values: Vec<f64> = stats.secondary_counts.iter().map(|&(_, s)| s as f64).collect();
    Histogram::equal_width(&values, bucket_count)
}

/// Expected `pcs` size: `N·m/M`.
pub fn expected_pcs_size(n_core: usize, m: usize, n_periphery: usize) -> f64 {
    n_core as f64 * m as f64 / n_periphery as f64
}

/// Probability that two independent uniform `m`-of-`M` draws share at least
/// one element, i.e. the expected fraction of other cores that are
/// secondary contacts.
pub fn expected_secondary_fraction(n_periphery: usize, m: usize) -> Result<f64> {
    if m == 0 || m > n_periphery {
        return Err(Error::config(
            "m",
            format!("must be in 1..={n_periphery}, got {m}"),
        ));
    }
    let big_m = n_periphery as f64;
    let m_f = m as f64;
    let mut no_overlap = 1.0;
    for i in 0..m {
        let num = big_m - m_f - i as f64;
        if num <= 0.0 {
            return Ok(1.0);
        }
        no_overlap *= num / (big_m - i as f64);
    }
    Ok(1.0 - no_overlap)
}

/// Convenience: organize with a fresh stream seeded from `config.seed`.
pub fn organize_seeded(config: &TopologyConfig) -> Result<ContactTopology> {
    let mut rng = rng_from_seed(config.seed);
    organize(config, &mut rng)
}
