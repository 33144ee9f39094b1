//! Fleet state and the discrete-event loop.
//!
//! Arrivals come lazily from the request stream; completions wait in a
//! min-heap. Before each arrival every completion due at or before its
//! time is processed, so ties resolve completion-first and then by request
//! id.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{run_auction, AuctionOutcome, AuctionResult, MarketConfig, MIN_ALLOCATION};
use crate::rng::SimRng;
use crate::topology::{ContactTopology, CoreId};
use crate::workload::{Mode, ServiceRequest};

const CAPACITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServerMode {
    Sleep,
    Running(Mode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreServerState {
    pub id: CoreId,
    pub mode: ServerMode,
    pub capacity: f64,
    /// Static load present from initialization.
    pub background: f64,
    /// `background + Σ live_allocations`.
    pub committed: f64,
    pub unit_cost: f64,
    pub coalition_count: u64,
    pub live_allocations: BTreeMap<u64, f64>,
    /// Woken from sleep by a coalition; returns to sleep once drained.
    pub recruited_from_sleep: bool,
}

impl CoreServerState {
    pub fn new(id: CoreId, mode: ServerMode, capacity: f64, background: f64, unit_cost: f64) -> Self {
        Self {
            id,
            mode,
            capacity,
            background,
            committed: background,
            unit_cost,
            coalition_count: 0,
            live_allocations: BTreeMap::new(),
            recruited_from_sleep: false,
        }
    }

    pub fn free(&self) -> f64 {
        self.capacity - self.committed
    }

    fn recompute_committed(&mut self) {
        self.committed = self.background + self.live_allocations.values().sum::<f64>();
    }

    fn check(&self) -> Result<()> {
        if self.committed > self.capacity + CAPACITY_EPS || self.committed < -CAPACITY_EPS {
            return Err(Error::Invariant(format!(
                "server {} committed {} outside [0, {}]",
                self.id, self.committed, self.capacity
            )));
        }
        let expect = self.background + self.live_allocations.values().sum::<f64>();
        if (self.committed - expect).abs() > CAPACITY_EPS {
            return Err(Error::Invariant(format!(
                "server {} committed {} != background + live allocations {}",
                self.id, self.committed, expect
            )));
        }
        if self.mode == ServerMode::Sleep && !self.live_allocations.is_empty() {
            return Err(Error::Invariant(format!("server {} asleep with live allocations", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    servers: Vec<CoreServerState>,
}

impl Fleet {
    /// Wraps servers whose ids equal their positions.
    pub fn from_servers(servers: Vec<CoreServerState>) -> Self {
        debug_assert!(servers.iter().enumerate().all(|(i, s)| s.id.index() == i));
        Self { servers }
    }

    pub fn get(&self, id: CoreId) -> &CoreServerState {
        &self.servers[id.index()]
    }

    pub fn try_get(&self, id: CoreId) -> Option<&CoreServerState> {
        self.servers.get(id.index())
    }

    pub fn servers(&self) -> &[CoreServerState] {
        &self.servers
    }

    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    pub fn total_committed(&self) -> f64 {
        self.servers.iter().map(|s| s.committed).sum()
    }

    pub fn total_background(&self) -> f64 {
        self.servers.iter().map(|s| s.background).sum()
    }

    pub fn check_all(&self) -> Result<()> {
        self.servers.iter().try_for_each(CoreServerState::check)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub capacity_scu: f64,
    /// Fractions over (sleep, M1, M2, M3).
    pub initial_state_mix: [f64; 4],
    pub initial_load_range: (f64, f64),
    pub cost_range: (f64, f64),
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            capacity_scu: 10.0,
            initial_state_mix: [0.2, 0.4, 0.15, 0.25],
            initial_load_range: (0.3, 0.8),
            cost_range: (1.0, 10.0),
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_scu > 0.0 && self.capacity_scu.is_finite()) {
            return Err(Error::config("engine.capacity_scu", "must be > 0"));
        }
        if self.initial_state_mix.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::config("engine.initial_state_mix", "fractions must be nonnegative"));
        }
        let sum: f64 = self.initial_state_mix.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::config("engine.initial_state_mix", format!("must sum to 1, got {sum}")));
        }
        let (lo, hi) = self.initial_load_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::config(
                "engine.initial_load_range",
                format!("must satisfy 0 <= lo <= hi <= 1, got [{lo}, {hi}]"),
            ));
        }
        let (clo, chi) = self.cost_range;
        if !(0.0 <= clo && clo <= chi && chi.is_finite()) {
            return Err(Error::config(
                "market.cost_range",
                format!("must satisfy 0 <= lo <= hi, got [{clo}, {chi}]"),
            ));
        }
        Ok(())
    }
}

/// Draws mode, background load and unit cost for every core server, in
/// that order per server.
pub fn init_servers(topology: &ContactTopology, config: &EngineConfig, rng: &mut SimRng) -> Result<Fleet> {
    config.validate()?;
    let [sleep, m1, m2, _] = config.initial_state_mix;
    let (load_lo, load_hi) = config.initial_load_range;
    let (cost_lo, cost_hi) = config.cost_range;
    let servers = (0..topology.n_core())
        .map(|i| {
            let u: f64 = rng.sample(Open01);
            let mode = if u < sleep {
                ServerMode::Sleep
            } else if u < sleep + m1 {
                ServerMode::Running(Mode::M1)
            } else if u < sleep + m1 + m2 {
                ServerMode::Running(Mode::M2)
            } else {
                ServerMode::Running(Mode::M3)
            };
            let u_load: f64 = rng.sample(Open01);
            let u_cost: f64 = rng.sample(Open01);
            let background = match mode {
                ServerMode::Sleep => 0.0,
                ServerMode::Running(_) => (load_lo + u_load * (load_hi - load_lo)) * config.capacity_scu,
            };
            let cost = cost_lo + u_cost * (cost_hi - cost_lo);
            CoreServerState::new(CoreId(i as u32), mode, config.capacity_scu, background, cost)
        })
        .collect();
    Ok(Fleet::from_servers(servers))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Arrival(ServiceRequest),
    Completion(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEvent {
    pub time: f64,
    pub kind: EventKind,
}

/// Compact record of a processed event, used for determinism checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub completion: bool,
    pub request_id: u64,
    pub won: bool,
}

/// Receives every auction outcome in arrival order.
pub trait OutcomeSink {
    fn record(&mut self, request: &ServiceRequest, outcome: &AuctionOutcome);
}

impl OutcomeSink for () {
    fn record(&mut self, _: &ServiceRequest, _: &AuctionOutcome) {}
}

impl OutcomeSink for Vec<AuctionOutcome> {
    fn record(&mut self, _: &ServiceRequest, outcome: &AuctionOutcome) {
        self.push(outcome.clone());
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Per-event conservation sweeps; violations abort the run.
    pub check_invariants: bool,
    pub record_events: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnsatisfiedRequest {
    pub request_id: u64,
    pub mode: Mode,
    pub workload: f64,
    pub arrival_time: f64,
}

/// Request accounting at the moment the stream ran dry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub n_requests: u64,
    pub won: u64,
    pub unsatisfied: u64,
    pub completed_at_stream_end: u64,
    pub in_flight_at_stream_end: u64,
}

impl Ledger {
    pub fn balanced(&self) -> bool {
        self.n_requests == self.completed_at_stream_end + self.unsatisfied + self.in_flight_at_stream_end
            && self.won == self.completed_at_stream_end + self.in_flight_at_stream_end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub fleet: Fleet,
    pub ledger: Ledger,
    pub unsatisfied: Vec<UnsatisfiedRequest>,
    pub final_time: f64,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PendingCompletion {
    time: f64,
    request_id: u64,
}

impl Eq for PendingCompletion {}

impl Ord for PendingCompletion {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.request_id.cmp(&other.request_id))
    }
}

impl PartialOrd for PendingCompletion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Event loop over a fleet. Owns the completion queue and live coalitions.
pub struct Simulation<'a> {
    topology: &'a ContactTopology,
    market: &'a MarketConfig,
    fleet: Fleet,
    options: RunOptions,
    completions: BinaryHeap<Reverse<PendingCompletion>>,
    live: HashMap<u64, Vec<(CoreId, f64)>>,
    ledger: Ledger,
    unsatisfied: Vec<UnsatisfiedRequest>,
    events: Vec<EventRecord>,
    clock: f64,
}

impl<'a> Simulation<'a> {
    pub fn new(topology: &'a ContactTopology, fleet: Fleet, market: &'a MarketConfig, options: RunOptions) -> Self {
        Self {
            topology,
            market,
            fleet,
            options,
            completions: BinaryHeap::new(),
            live: HashMap::new(),
            ledger: Ledger::default(),
            unsatisfied: Vec::new(),
            events: Vec::new(),
            clock: 0.0,
        }
    }

    pub fn fleet(&self) -> &Fleet {
        &self.fleet
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn in_flight(&self) -> usize {
        self.live.len()
    }

    /// Processes completions due at or before `until`.
    pub fn advance_to(&mut self, until: f64) -> Result<()> {
        while let Some(Reverse(next)) = self.completions.peek().copied() {
            if next.time > until {
                break;
            }
            self.completions.pop();
            self.complete(next)?;
        }
        Ok(())
    }

    fn complete(&mut self, event: PendingCompletion) -> Result<()> {
        self.clock = event.time;
        let members = self.live.remove(&event.request_id).ok_or_else(|| {
            Error::Internal(format!("completion for unknown request {}", event.request_id))
        })?;
        for &(id, _) in &members {
            let server = &mut self.fleet.servers[id.index()];
            if server.live_allocations.remove(&event.request_id).is_none() {
                return Err(Error::Internal(format!(
                    "server {id} holds no allocation for request {}",
                    event.request_id
                )));
            }
            server.recompute_committed();
            if server.live_allocations.is_empty() && server.recruited_from_sleep {
                server.mode = ServerMode::Sleep;
                server.recruited_from_sleep = false;
            }
            if self.options.check_invariants {
                server.check()?;
            }
        }
        self.ledger.completed_at_stream_end += 1;
        if self.options.record_events {
            self.events.push(EventRecord {
                time: event.time,
                completion: true,
                request_id: event.request_id,
                won: true,
            });
        }
        Ok(())
    }

    /// Auctions one arrival and commits the winning coalition.
    pub fn arrive(
        &mut self,
        request: &ServiceRequest,
        rng: &mut SimRng,
        sink: &mut dyn OutcomeSink,
    ) -> Result<AuctionOutcome> {
        if request.arrival_time < self.clock {
            return Err(Error::Internal(format!(
                "request {} arrives at {} before clock {}",
                request.id, request.arrival_time, self.clock
            )));
        }
        self.advance_to(request.arrival_time)?;
        self.clock = request.arrival_time;
        self.ledger.n_requests += 1;

        let outcome = run_auction(request, self.topology, &self.fleet, self.market, rng);
        match &outcome.result {
            AuctionResult::Won(bid) => {
                if self.options.check_invariants {
                    self.check_allocation(request, &bid.coalition.members, bid.coalition.total_allocated)?;
                }
                self.commit(request, &bid.coalition.members)?;
                self.ledger.won += 1;
            }
            AuctionResult::Unsatisfied => {
                self.ledger.unsatisfied += 1;
                self.unsatisfied.push(UnsatisfiedRequest {
                    request_id: request.id,
                    mode: request.mode,
                    workload: request.workload,
                    arrival_time: request.arrival_time,
                });
            }
        }
        if self.options.record_events {
            self.events.push(EventRecord {
                time: request.arrival_time,
                completion: false,
                request_id: request.id,
                won: outcome.is_won(),
            });
        }
        sink.record(request, &outcome);
        Ok(outcome)
    }

    fn check_allocation(&self, request: &ServiceRequest, members: &[(CoreId, f64)], total: f64) -> Result<()> {
        let sum: f64 = members.iter().map(|&(_, a)| a).sum();
        if (sum - request.workload).abs() > CAPACITY_EPS || (total - request.workload).abs() > CAPACITY_EPS {
            return Err(Error::Invariant(format!(
                "request {} allocated {sum} (recorded {total}) for workload {}",
                request.id, request.workload
            )));
        }
        for (i, &(id, alloc)) in members.iter().enumerate() {
            let server = self.fleet.get(id);
            if !(alloc > 0.0) || alloc > server.free() + CAPACITY_EPS {
                return Err(Error::Invariant(format!(
                    "request {} allocates {alloc} on server {id} with free {}",
                    request.id,
                    server.free()
                )));
            }
            if server.free() < MIN_ALLOCATION {
                return Err(Error::Invariant(format!("server {id} recruited below the allocation quantum")));
            }
            if members[..i].iter().any(|&(o, _)| o == id) {
                return Err(Error::Invariant(format!("server {id} appears twice in request {}", request.id)));
            }
        }
        Ok(())
    }

    fn commit(&mut self, request: &ServiceRequest, members: &[(CoreId, f64)]) -> Result<()> {
        for &(id, alloc) in members {
            let server = &mut self.fleet.servers[id.index()];
            if server.mode == ServerMode::Sleep {
                server.mode = ServerMode::Running(request.mode);
                server.recruited_from_sleep = true;
            }
            server.live_allocations.insert(request.id, alloc);
            server.recompute_committed();
            server.coalition_count += 1;
            if self.options.check_invariants {
                server.check()?;
            }
        }
        self.live.insert(request.id, members.to_vec());
        self.completions.push(Reverse(PendingCompletion {
            time: request.arrival_time + request.duration,
            request_id: request.id,
        }));
        Ok(())
    }

    /// Records the stream-end ledger, drains every outstanding completion
    /// and returns the final state.
    pub fn finish(mut self) -> Result<RunOutcome> {
        self.ledger.in_flight_at_stream_end = self.live.len() as u64;
        let ledger = self.ledger;
        if self.options.check_invariants && !ledger.balanced() {
            return Err(Error::Invariant(format!("ledger does not balance: {ledger:?}")));
        }
        self.advance_to(f64::INFINITY)?;
        if !self.live.is_empty() {
            return Err(Error::Internal("live coalitions remain after draining".into()));
        }
        if self.options.check_invariants {
            self.fleet.check_all()?;
            let drift = (self.fleet.total_committed() - self.fleet.total_background()).abs();
            if drift > 1e-6 {
                return Err(Error::Invariant(format!("fleet load drifted by {drift} SCU after drain")));
            }
        }
        Ok(RunOutcome {
            fleet: self.fleet,
            ledger,
            unsatisfied: self.unsatisfied,
            final_time: self.clock,
            events: self.events,
        })
    }
}

/// Feeds `requests` through the market in arrival order.
pub fn run<I>(
    topology: &ContactTopology,
    fleet: Fleet,
    requests: I,
    market: &MarketConfig,
    sink: &mut dyn OutcomeSink,
    rng: &mut SimRng,
    options: RunOptions,
) -> Result<RunOutcome>
where
    I: IntoIterator<Item = ServiceRequest>,
{
    market.validate()?;
    if options.check_invariants {
        fleet.check_all()?;
    }
    let mut sim = Simulation::new(topology, fleet, market, options);
    for request in requests {
        sim.arrive(&request, rng, sink)?;
    }
    sim.finish()
}
