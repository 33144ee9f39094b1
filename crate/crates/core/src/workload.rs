//! Service-request streams.
//!
//! Each request consumes draws in a fixed order: inter-arrival time, mode,
//! workload, duration, entry periphery. Streams are lazy iterators, so a
//! full-scale run never materializes its requests.

use std::fmt;

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::topology::PeripheryId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    M1,
    M2,
    M3,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::M1, Mode::M2, Mode::M3];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::M1 => "M1",
            Mode::M2 => "M2",
            Mode::M3 => "M3",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "M1" => Ok(Mode::M1),
            "M2" => Ok(Mode::M2),
            "M3" => Ok(Mode::M3),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    Exponential { mean: f64 },
    Pareto { alpha: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl DistributionSpec {
    pub fn validate(&self, path: &str) -> Result<()> {
        match *self {
            DistributionSpec::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => {
                Err(Error::config(format!("{path}.mean"), format!("must be > 0, got {mean}")))
            }
            DistributionSpec::Pareto { alpha, .. } if !(alpha > 1.0 && alpha.is_finite()) => Err(Error::config(
                format!("{path}.alpha"),
                format!("must be > 1 (finite mean), got {alpha}"),
            )),
            DistributionSpec::Pareto { scale, .. } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::config(format!("{path}.scale"), format!("must be > 0, got {scale}")))
            }
            DistributionSpec::Uniform { lo, hi } if !(lo <= hi && lo.is_finite() && hi.is_finite()) => {
                Err(Error::config(format!("{path}.hi"), format!("must satisfy lo <= hi, got [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }

    /// Analytic mean of the distribution.
    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Exponential { mean } => mean,
            DistributionSpec::Pareto { alpha, scale } => alpha * scale / (alpha - 1.0),
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// Analytic CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-x / mean).exp()
                }
            }
            DistributionSpec::Pareto { alpha, scale } => {
                if x <= scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(alpha)
                }
            }
            DistributionSpec::Uniform { lo, hi } => {
                if x < lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
        }
    }
}

/// Inverse-transform draw from `dist`, with `u` uniform on the open
/// interval (0, 1).
pub fn sample(dist: &DistributionSpec, rng: &mut SimRng) -> Result<f64> {
    dist.validate("dist")?;
    Ok(sample_unchecked(dist, rng))
}

fn sample_unchecked(dist: &DistributionSpec, rng: &mut SimRng) -> f64 {
    let u: f64 = rng.sample(Open01);
    match *dist {
        DistributionSpec::Exponential { mean } => -mean * u.ln(),
        DistributionSpec::Pareto { alpha, scale } => scale * u.powf(-1.0 / alpha),
        DistributionSpec::Uniform { lo, hi } => lo + u * (hi - lo),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub id: u64,
    pub arrival_time: f64,
    pub mode: Mode,
    /// Workload in server compute units.
    pub workload: f64,
    pub duration: f64,
    pub entry_periphery: PeripheryId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub interarrival: DistributionSpec,
    pub service: DistributionSpec,
    #[serde(rename = "workload_scu")]
    pub workload_range: (f64, f64),
    #[serde(rename = "mode_probs")]
    pub mode_probabilities: [f64; 3],
    pub n_requests: u64,
    #[serde(skip)]
    pub seed: u64,
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        self.interarrival.validate("workload.interarrival")?;
        self.service.validate("workload.service")?;
        let (lo, hi) = self.workload_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::config(
                "workload.workload_scu",
                format!("must satisfy 0 < lo <= hi, got [{lo}, {hi}]"),
            ));
        }
        if self.mode_probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::config("workload.mode_probs", "probabilities must be nonnegative"));
        }
        let sum: f64 = self.mode_probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::config("workload.mode_probs", format!("must sum to 1, got {sum}")));
        }
        if self.n_requests == 0 {
            return Err(Error::config("workload.n_requests", "must be at least 1"));
        }
        Ok(())
    }
}

/// Lazy, deterministic request stream.
#[derive(Debug, Clone)]
pub struct RequestStream {
    config: WorkloadConfig,
    n_periphery: usize,
    rng: SimRng,
    next_id: u64,
    clock: f64,
}

impl Iterator for RequestStream {
    type Item = ServiceRequest;

    fn next(&mut self) -> Option<ServiceRequest> {
        if self.next_id >= self.config.n_requests {
            return None;
        }
        let rng = &mut self.rng;
        self.clock += sample_unchecked(&self.config.interarrival, rng);

        let u: f64 = rng.sample(Open01);
        let [p1, p2, _] = self.config.mode_probabilities;
        let mode = if u < p1 {
            Mode::M1
        } else if u < p1 + p2 {
            Mode::M2
        } else {
            Mode::M3
        };

        let (lo, hi) = self.config.workload_range;
        let workload = sample_unchecked(&DistributionSpec::Uniform { lo, hi }, rng);
        let duration = sample_unchecked(&self.config.service, rng);
        let entry_periphery = PeripheryId(rng.gen_range(0..self.n_periphery) as u32);

        let req = ServiceRequest {
            id: self.next_id,
            arrival_time: self.clock,
            mode,
            workload,
            duration,
            entry_periphery,
        };
        self.next_id += 1;
        Some(req)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.config.n_requests - self.next_id) as usize;
        (left, Some(left))
    }
}

pub fn generate_stream(config: &WorkloadConfig, n_periphery: usize, rng: SimRng) -> Result<RequestStream> {
    config.validate()?;
    if n_periphery == 0 {
        return Err(Error::config("topology.n_periphery", "must be at least 1"));
    }
    Ok(RequestStream {
        config: config.clone(),
        n_periphery,
        rng,
        next_id: 0,
        clock: 0.0,
    })
}
