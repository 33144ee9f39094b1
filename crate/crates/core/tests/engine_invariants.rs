use sococ::engine::{init_servers, run, EngineConfig, RunOptions, ServerMode, Simulation};
use sococ::market::{AuctionOutcome, Initiation, MarketConfig};
use sococ::rng::rng_from_seed;
use sococ::topology::{organize_seeded, ContactTopology, TopologyConfig};
use sococ::workload::{generate_stream, DistributionSpec, ServiceRequest, WorkloadConfig};

fn topology(n_core: usize, n_periphery: usize, m: usize, n: usize) -> ContactTopology {
    organize_seeded(&TopologyConfig {
        n_core,
        n_periphery,
        n_aux: 0,
        primary_contacts_per_core: n,
        periphery_per_core: m,
        seed: 11,
    })
    .unwrap()
}

fn workload(n_requests: u64, hi: f64) -> WorkloadConfig {
    WorkloadConfig {
        interarrival: DistributionSpec::Exponential { mean: 0.05 },
        service: DistributionSpec::Exponential { mean: 1.2 },
        workload_range: (0.1, hi),
        mode_probabilities: [1.0 / 3.0; 3],
        n_requests,
        seed: 0,
    }
}

fn requests(n_requests: u64, hi: f64, n_periphery: usize, seed: u64) -> Vec<ServiceRequest> {
    generate_stream(&workload(n_requests, hi), n_periphery, rng_from_seed(seed))
        .unwrap()
        .collect()
}

#[test]
fn initial_mix_matches_fractions() {
    let n = 1_000_000;
    let t = topology(n, 1, 1, 0);
    let fleet = init_servers(&t, &EngineConfig::default(), &mut rng_from_seed(3)).unwrap();
    let mut counts = [0u64; 4];
    for s in fleet.servers() {
        let k = match s.mode {
            ServerMode::Sleep => 0,
            ServerMode::Running(m) => 1 + m.index(),
        };
        counts[k] += 1;
        match s.mode {
            ServerMode::Sleep => assert_eq!(s.background, 0.0),
            ServerMode::Running(_) => assert!(s.background >= 3.0 && s.background <= 8.0),
        }
        assert!(s.unit_cost >= 1.0 && s.unit_cost <= 10.0);
    }
    for (k, p) in [0.2, 0.4, 0.15, 0.25].into_iter().enumerate() {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((counts[k] as f64 - n as f64 * p).abs() < 3.0 * sigma, "state {k}: {}", counts[k]);
    }
}

#[test]
fn no_sleepers_when_sleep_fraction_is_zero() {
    let t = topology(20_000, 1, 1, 0);
    let cfg = EngineConfig {
        initial_state_mix: [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        initial_load_range: (0.5, 0.8),
        ..EngineConfig::default()
    };
    let fleet = init_servers(&t, &cfg, &mut rng_from_seed(4)).unwrap();
    assert!(fleet.servers().iter().all(|s| s.mode != ServerMode::Sleep));
    assert!(fleet.servers().iter().all(|s| s.free() <= 5.0 + 1e-12));
}

fn run_once(seed: u64, market: &MarketConfig) -> sococ::engine::RunOutcome {
    let t = topology(500, 5, 2, 10);
    let fleet = init_servers(&t, &EngineConfig::default(), &mut rng_from_seed(seed)).unwrap();
    let reqs = requests(5_000, 8.0, 5, seed);
    let mut sink: Vec<AuctionOutcome> = Vec::new();
    let options = RunOptions {
        check_invariants: true,
        record_events: true,
    };
    run(&t, fleet, reqs, market, &mut sink, &mut rng_from_seed(seed + 100), options).unwrap()
}

#[test]
fn event_log_is_deterministic() {
    for initiation in [Initiation::C1, Initiation::C2] {
        let market = MarketConfig {
            initiation,
            leader_candidate_fraction: 0.05,
            invited_fraction_c1: 0.05,
            use_secondary_contacts: true,
        };
        let a = run_once(1, &market);
        let b = run_once(1, &market);
        assert_eq!(a.events, b.events);
        assert_eq!(a.fleet, b.fleet);
        assert_eq!(a.ledger, b.ledger);
        let c = run_once(2, &market);
        assert_ne!(a.events, c.events);
    }
}

#[test]
fn event_times_never_go_backwards() {
    let out = run_once(5, &MarketConfig::default());
    assert!(out.events.windows(2).all(|w| w[0].time <= w[1].time));
    let arrivals = out.events.iter().filter(|e| !e.completion).count();
    let completions = out.events.iter().filter(|e| e.completion).count();
    assert_eq!(arrivals as u64, out.ledger.n_requests);
    assert_eq!(completions as u64, out.ledger.won);
}

#[test]
fn ledger_balances_and_fleet_drains() {
    let out = run_once(7, &MarketConfig::default());
    let l = out.ledger;
    assert!(l.balanced(), "{l:?}");
    assert_eq!(l.n_requests, 5_000);
    assert_eq!(l.unsatisfied as usize, out.unsatisfied.len());
    for s in out.fleet.servers() {
        assert!(s.live_allocations.is_empty());
        assert!((s.committed - s.background).abs() < 1e-9);
        if s.background == 0.0 {
            assert_eq!(s.mode, ServerMode::Sleep, "drained recruit {} stayed awake", s.id);
        }
    }
    assert!((out.fleet.total_committed() - out.fleet.total_background()).abs() < 1e-6);
}

#[test]
fn stepwise_simulation_conserves_load() {
    let t = topology(300, 3, 1, 8);
    let fleet = init_servers(&t, &EngineConfig::default(), &mut rng_from_seed(9)).unwrap();
    let background = fleet.total_background();
    let market = MarketConfig {
        use_secondary_contacts: true,
        leader_candidate_fraction: 0.02,
        ..MarketConfig::default()
    };
    let options = RunOptions {
        check_invariants: true,
        record_events: false,
    };
    let mut sim = Simulation::new(&t, fleet, &market, options);
    let mut rng = rng_from_seed(10);
    let mut sink: Vec<AuctionOutcome> = Vec::new();
    let mut outstanding: Vec<(f64, f64)> = Vec::new();
    for req in requests(2_000, 8.0, 3, 12) {
        if sim.arrive(&req, &mut rng, &mut sink).unwrap().is_won() {
            outstanding.push((req.arrival_time + req.duration, req.workload));
        }
        outstanding.retain(|&(end, _)| end > req.arrival_time);
        let live: f64 = outstanding.iter().map(|&(_, w)| w).sum();
        let committed = sim.fleet().total_committed();
        assert!(
            (committed - background - live).abs() < 1e-6,
            "at t={}: committed {committed}, expected {}",
            req.arrival_time,
            background + live
        );
        assert_eq!(sim.in_flight(), outstanding.len());
        assert!(sim.fleet().servers().iter().all(|s| s.committed <= s.capacity + 1e-9));
    }
    let out = sim.finish().unwrap();
    assert!((out.fleet.total_committed() - background).abs() < 1e-6);
}

#[test]
fn coalition_members_share_request_mode() {
    let t = topology(400, 4, 2, 10);
    let fleet = init_servers(&t, &EngineConfig::default(), &mut rng_from_seed(21)).unwrap();
    let market = MarketConfig {
        use_secondary_contacts: true,
        leader_candidate_fraction: 0.05,
        ..MarketConfig::default()
    };
    let mut sim = Simulation::new(&t, fleet, &market, RunOptions::default());
    let mut rng = rng_from_seed(22);
    for req in requests(1_000, 20.0, 4, 23) {
        let outcome = sim.arrive(&req, &mut rng, &mut ()).unwrap();
        if let Some(bid) = outcome.winning_bid() {
            for &(id, _) in &bid.coalition.members {
                assert_eq!(sim.fleet().get(id).mode, ServerMode::Running(req.mode));
            }
        }
    }
    sim.finish().unwrap();
}
