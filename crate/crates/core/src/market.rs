//! Auctions and coalition formation.
//!
//! Two initiation protocols are supported:
//!
//! * **C2 (core-initiated):** the entry periphery server invites a random
//!   fraction of its `pcs` list to stand as leader, one leader is elected
//!   (cheapest eligible candidate), and the leader fills a coalition from
//!   its primary contacts and optionally its secondary contacts.
//! * **C1 (periphery-initiated):** the periphery server draws a random
//!   fraction of its `pcs` list and fills one coalition from that pool
//!   alone.
//!
//! Everything here is pure with respect to the fleet: outcomes are computed
//! against a snapshot and the engine commits the winning allocations.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::engine::{CoreServerState, Fleet, ServerMode};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::topology::{ContactTopology, CoreId, PeripheryId};
use crate::workload::ServiceRequest;

/// Smallest free capacity (SCU) that makes a server recruitable.
pub const MIN_ALLOCATION: f64 = 0.01;

const FILL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Initiation {
    C1,
    C2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub initiation: Initiation,
    pub leader_candidate_fraction: f64,
    pub use_secondary_contacts: bool,
    pub invited_fraction_c1: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            initiation: Initiation::C2,
            leader_candidate_fraction: 0.001,
            use_secondary_contacts: false,
            invited_fraction_c1: 0.001,
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        for (path, v) in [
            ("market.leader_candidate_fraction", self.leader_candidate_fraction),
            ("market.invited_fraction_c1", self.invited_fraction_c1),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(path, format!("must be in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coalition {
    pub leader: CoreId,
    pub members: Vec<(CoreId, f64)>,
    pub request_id: u64,
    pub total_allocated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub coalition: Coalition,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AuctionResult {
    Won(Bid),
    Unsatisfied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub request_id: u64,
    pub result: AuctionResult,
    pub candidates_contacted: usize,
    pub bids_received: usize,
}

impl AuctionOutcome {
    pub fn is_won(&self) -> bool {
        matches!(self.result, AuctionResult::Won(_))
    }

    pub fn winning_bid(&self) -> Option<&Bid> {
        match &self.result {
            AuctionResult::Won(bid) => Some(bid),
            AuctionResult::Unsatisfied => None,
        }
    }
}

/// A server may join a coalition for `request` if it is asleep or already
/// running in the request's mode, and has at least [`MIN_ALLOCATION`] free.
pub fn eligible(server: &CoreServerState, request: &ServiceRequest) -> bool {
    let mode_ok = match server.mode {
        ServerMode::Sleep => true,
        ServerMode::Running(m) => m == request.mode,
    };
    mode_ok && server.free() >= MIN_ALLOCATION
}

/// `⌈fraction · len⌉`, clamped to `len`.
fn invite_count(fraction: f64, len: usize) -> usize {
    if len == 0 {
        return 0;
    }
    // absorb representation error in products like 0.001 * 2000
    let k = (fraction * len as f64 - 1e-9).ceil().max(1.0) as usize;
    k.min(len)
}

fn draw_from_pcs(pcs: &[CoreId], fraction: f64, rng: &mut SimRng) -> Vec<CoreId> {
    let k = invite_count(fraction, pcs.len());
    if k == 0 {
        return Vec::new();
    }
    index::sample(rng, pcs.len(), k).into_iter().map(|i| pcs[i]).collect()
}

/// Uniform random leader candidates from the periphery server's `pcs`
/// list, in draw order.
pub fn invite_leader_candidates(
    periphery: PeripheryId,
    topology: &ContactTopology,
    config: &MarketConfig,
    rng: &mut SimRng,
) -> Vec<CoreId> {
    draw_from_pcs(topology.pcs(periphery), config.leader_candidate_fraction, rng)
}

/// Cheapest eligible candidate; ties go to the lowest id.
pub fn elect_leader(candidates: &[CoreId], fleet: &Fleet, request: &ServiceRequest) -> Option<CoreId> {
    candidates
        .iter()
        .copied()
        .filter(|&c| eligible(fleet.get(c), request))
        .min_by(|&a, &b| cost_order(fleet, a, b))
}

fn cost_order(fleet: &Fleet, a: CoreId, b: CoreId) -> std::cmp::Ordering {
    fleet
        .get(a)
        .unit_cost
        .total_cmp(&fleet.get(b).unit_cost)
        .then(a.cmp(&b))
}

fn sort_by_cost(ids: &mut [CoreId], fleet: &Fleet) {
    ids.sort_unstable_by(|&a, &b| cost_order(fleet, a, b));
}

/// Greedy coalition under construction.
struct Fill<'a> {
    fleet: &'a Fleet,
    request: &'a ServiceRequest,
    members: Vec<(CoreId, f64)>,
    total: f64,
}

impl<'a> Fill<'a> {
    fn new(fleet: &'a Fleet, request: &'a ServiceRequest) -> Self {
        Self {
            fleet,
            request,
            members: Vec::new(),
            total: 0.0,
        }
    }

    fn done(&self) -> bool {
        self.request.workload - self.total <= FILL_EPS
    }

    /// Adds `id` if eligible and not already a member; returns `done()`.
    fn offer(&mut self, id: CoreId) -> bool {
        if self.done() {
            return true;
        }
        let server = self.fleet.get(id);
        if !eligible(server, self.request) || self.members.iter().any(|&(m, _)| m == id) {
            return false;
        }
        let remaining = self.request.workload - self.total;
        let take = server.free().min(remaining);
        self.members.push((id, take));
        self.total = if take == remaining {
            self.request.workload
        } else {
            self.total + take
        };
        self.done()
    }

    fn finish(self, leader: CoreId) -> Option<Coalition> {
        if !self.done() {
            return None;
        }
        Some(Coalition {
            leader,
            members: self.members,
            request_id: self.request.id,
            total_allocated: self.total,
        })
    }
}

/// Greedy assembly led by `leader`: the leader contributes its free
/// capacity, then primary contacts in ascending (unit cost, id) order, then
/// (if enabled) secondary contacts in the same order, until the workload is
/// covered. The last member's allocation is trimmed to the remainder.
pub fn assemble_coalition(
    leader: CoreId,
    request: &ServiceRequest,
    topology: &ContactTopology,
    fleet: &Fleet,
    use_secondary: bool,
) -> Option<Coalition> {
    if !eligible(fleet.get(leader), request) {
        return None;
    }
    let mut fill = Fill::new(fleet, request);
    if fill.offer(leader) {
        return fill.finish(leader);
    }

    let mut primary = topology.primary_contacts(leader).to_vec();
    sort_by_cost(&mut primary, fleet);
    for id in primary {
        if fill.offer(id) {
            return fill.finish(leader);
        }
    }

    if use_secondary {
        let mut secondary = topology.secondary_contacts(leader);
        secondary.retain(|&id| eligible(fleet.get(id), request));
        sort_by_cost(&mut secondary, fleet);
        for id in secondary {
            if fill.offer(id) {
                return fill.finish(leader);
            }
        }
    }
    None
}

/// Prices a coalition at Σ allocation × member unit cost.
pub fn price_bid(coalition: &Coalition, fleet: &Fleet) -> Result<Bid> {
    let mut price = 0.0;
    for &(id, alloc) in &coalition.members {
        let server = fleet
            .try_get(id)
            .ok_or_else(|| Error::Internal(format!("coalition member {id} is not in the fleet")))?;
        price += alloc * server.unit_cost;
    }
    Ok(Bid {
        coalition: coalition.clone(),
        price,
    })
}

/// Lowest price wins; ties go to the lowest leader id.
pub fn select_winner(bids: Vec<Bid>) -> Option<Bid> {
    bids.into_iter().min_by(|a, b| {
        a.price
            .total_cmp(&b.price)
            .then(a.coalition.leader.cmp(&b.coalition.leader))
    })
}

/// Runs one auction against the current fleet snapshot. Allocations are
/// not applied.
pub fn run_auction(
    request: &ServiceRequest,
    topology: &ContactTopology,
    fleet: &Fleet,
    config: &MarketConfig,
    rng: &mut SimRng,
) -> AuctionOutcome {
    let pcs = topology.pcs(request.entry_periphery);
    let (contacted, bids) = match config.initiation {
        Initiation::C2 => {
            let candidates = invite_leader_candidates(request.entry_periphery, topology, config, rng);
            let bids: Vec<Bid> = elect_leader(&candidates, fleet, request)
                .and_then(|leader| {
                    assemble_coalition(leader, request, topology, fleet, config.use_secondary_contacts)
                })
                .map(|c| price_bid(&c, fleet).expect("members come from the fleet"))
                .into_iter()
                .collect();
            (candidates.len(), bids)
        }
        Initiation::C1 => {
            let invited = draw_from_pcs(pcs, config.invited_fraction_c1, rng);
            let mut pool: Vec<CoreId> = invited
                .iter()
                .copied()
                .filter(|&c| eligible(fleet.get(c), request))
                .collect();
            sort_by_cost(&mut pool, fleet);
            let bids: Vec<Bid> = pool
                .first()
                .copied()
                .and_then(|leader| {
                    let mut fill = Fill::new(fleet, request);
                    for &id in &pool {
                        if fill.offer(id) {
                            break;
                        }
                    }
                    fill.finish(leader)
                })
                .map(|c| price_bid(&c, fleet).expect("members come from the fleet"))
                .into_iter()
                .collect();
            (invited.len(), bids)
        }
    };

    let bids_received = bids.len();
    let result = match select_winner(bids) {
        Some(bid) => AuctionResult::Won(bid),
        None => AuctionResult::Unsatisfied,
    };
    AuctionOutcome {
        request_id: request.id,
        result,
        candidates_contacted: contacted,
        bids_received,
    }
}
