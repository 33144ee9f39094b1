use proptest::prelude::*;
use rand::Rng;

use sococ::engine::{CoreServerState, Fleet, ServerMode};
use sococ::market::{
    assemble_coalition, invite_leader_candidates, price_bid, run_auction, AuctionResult, Coalition, Initiation,
    MarketConfig,
};
use sococ::rng::rng_from_seed;
use sococ::topology::{invert, ContactTopology, CoreId, PeripheryId};
use sococ::workload::{Mode, ServiceRequest};

/// One periphery server that knows every core; primary contacts given
/// explicitly.
fn star_topology(n_core: usize, primary: Vec<Vec<u32>>) -> ContactTopology {
    let core_known_periphery = vec![vec![PeripheryId(0)]; n_core];
    ContactTopology {
        periphery_known_cores: invert(&core_known_periphery, 1),
        core_known_periphery,
        core_primary_contacts: primary
            .into_iter()
            .map(|l| l.into_iter().map(CoreId).collect())
            .collect(),
        aux_roster: Vec::new(),
    }
}

fn running(id: u32, free: f64, cost: f64) -> CoreServerState {
    CoreServerState::new(CoreId(id), ServerMode::Running(Mode::M1), 10.0, 10.0 - free, cost)
}

fn request(workload: f64) -> ServiceRequest {
    ServiceRequest {
        id: 42,
        arrival_time: 0.0,
        mode: Mode::M1,
        workload,
        duration: 1.0,
        entry_periphery: PeripheryId(0),
    }
}

#[test]
fn singleton_when_leader_suffices() {
    let t = star_topology(3, vec![vec![1, 2], vec![0], vec![0]]);
    let fleet = Fleet::from_servers(vec![running(0, 5.0, 1.0), running(1, 5.0, 1.0), running(2, 5.0, 1.0)]);
    let c = assemble_coalition(CoreId(0), &request(4.0), &t, &fleet, false).unwrap();
    assert_eq!(c.members, vec![(CoreId(0), 4.0)]);
    assert_eq!(c.total_allocated, 4.0);
}

#[test]
fn greedy_fill_of_forty() {
    let n = 12;
    let primary: Vec<Vec<u32>> = (0..n as u32)
        .map(|c| (0..n as u32).filter(|&o| o != c).collect())
        .collect();
    let t = star_topology(n, primary);
    let fleet = Fleet::from_servers((0..n as u32).map(|i| running(i, 5.0, 1.0 + i as f64)).collect());
    let c = assemble_coalition(CoreId(0), &request(40.0), &t, &fleet, false).unwrap();
    assert_eq!(c.members.len(), 8);
    assert!(c.members.iter().all(|&(_, a)| a == 5.0));
    assert_eq!(c.total_allocated, 40.0);
    let ids: Vec<u32> = c.members.iter().map(|(id, _)| id.0).collect();
    assert_eq!(ids, vec![0, 1, 2, 3, 4, 5, 6, 7]);
}

#[test]
fn infeasible_returns_none() {
    let primary: Vec<Vec<u32>> = (0..6u32).map(|c| (0..6).filter(|&o| o != c).collect()).collect();
    let t = star_topology(6, primary);
    let fleet = Fleet::from_servers((0..6).map(|i| running(i, 5.0, 1.0)).collect());
    assert!(assemble_coalition(CoreId(0), &request(40.0), &t, &fleet, false).is_none());
    // secondary contacts in a 6-core star reach the same 30 SCU
    assert!(assemble_coalition(CoreId(0), &request(40.0), &t, &fleet, true).is_none());
}

#[test]
fn secondary_contacts_extend_reach() {
    // leader 0 knows only core 1 as a primary contact
    let mut primary = vec![vec![1u32]];
    primary.extend((1..6u32).map(|c| vec![if c == 1 { 0 } else { 1 }]));
    let t = star_topology(6, primary);
    let fleet = Fleet::from_servers((0..6).map(|i| running(i, 5.0, 1.0)).collect());
    assert!(assemble_coalition(CoreId(0), &request(20.0), &t, &fleet, false).is_none());
    let c = assemble_coalition(CoreId(0), &request(20.0), &t, &fleet, true).unwrap();
    assert_eq!(c.members.len(), 4);
}

/// Cheapest way to cover `workload` with fractional allocations, found by
/// enumerating which servers are used fully and which single server takes
/// the remainder.
fn brute_force_min_cost(servers: &[(f64, f64)], workload: f64) -> Option<f64> {
    let n = servers.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let (mut cap, mut cost) = (0.0, 0.0);
        for (i, &(free, c)) in servers.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cap += free;
                cost += free * c;
            }
        }
        if cap > workload + 1e-12 {
            continue;
        }
        let rest = workload - cap;
        if rest <= 1e-12 {
            best = Some(best.map_or(cost, |b: f64| b.min(cost)));
            continue;
        }
        for (j, &(free, c)) in servers.iter().enumerate() {
            if mask & (1 << j) == 0 && free >= rest {
                let total = cost + rest * c;
                best = Some(best.map_or(total, |b: f64| b.min(total)));
            }
        }
    }
    best
}

#[test]
fn c1_auction_is_cost_minimal_on_twenty_servers() {
    let mut rng = rng_from_seed(77);
    for trial in 0..3 {
        let n = 20u32;
        let servers: Vec<CoreServerState> = (0..n)
            .map(|i| running(i, rng.gen_range(0.2..3.0), rng.gen_range(1.0..10.0)))
            .collect();
        let fleet = Fleet::from_servers(servers);
        let t = star_topology(n as usize, vec![Vec::new(); n as usize]);
        let market = MarketConfig {
            initiation: Initiation::C1,
            invited_fraction_c1: 1.0,
            ..MarketConfig::default()
        };
        let req = request(12.0);
        let outcome = run_auction(&req, &t, &fleet, &market, &mut rng_from_seed(trial));
        let pool: Vec<(f64, f64)> = fleet.servers().iter().map(|s| (s.free(), s.unit_cost)).collect();
        let oracle = brute_force_min_cost(&pool, 12.0);
        match (&outcome.result, oracle) {
            (AuctionResult::Won(bid), Some(best)) => {
                assert!((bid.price - best).abs() < 1e-9, "trial {trial}: {} vs {best}", bid.price);
                assert!((bid.coalition.total_allocated - 12.0).abs() < 1e-9);
                let cheapest = bid
                    .coalition
                    .members
                    .iter()
                    .map(|&(id, _)| fleet.get(id).unit_cost)
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(fleet.get(bid.coalition.leader).unit_cost, cheapest);
            }
            (AuctionResult::Unsatisfied, None) => {}
            (r, o) => panic!("trial {trial}: auction {r:?} vs oracle {o:?}"),
        }
        assert_eq!(outcome.candidates_contacted, 20);
    }
}

#[test]
fn unsatisfied_when_nobody_eligible() {
    let t = star_topology(4, vec![vec![1], vec![0], vec![0], vec![0]]);
    let fleet = Fleet::from_servers(
        (0..4)
            .map(|i| CoreServerState::new(CoreId(i), ServerMode::Running(Mode::M2), 10.0, 2.0, 1.0))
            .collect(),
    );
    for initiation in [Initiation::C1, Initiation::C2] {
        let market = MarketConfig {
            initiation,
            leader_candidate_fraction: 1.0,
            invited_fraction_c1: 1.0,
            use_secondary_contacts: true,
        };
        let o = run_auction(&request(1.0), &t, &fleet, &market, &mut rng_from_seed(0));
        assert_eq!(o.result, AuctionResult::Unsatisfied);
        assert_eq!(o.bids_received, 0);
        assert_eq!(o.candidates_contacted, 4);
    }
}

#[test]
fn invitations_are_reproducible() {
    let n = 2000;
    let t = star_topology(n, vec![Vec::new(); n]);
    let market = MarketConfig::default();
    let a = invite_leader_candidates(PeripheryId(0), &t, &market, &mut rng_from_seed(5));
    let b = invite_leader_candidates(PeripheryId(0), &t, &market, &mut rng_from_seed(5));
    assert_eq!(a.len(), 2);
    assert_eq!(a, b);
    assert_ne!(a[0], a[1]);

    let one = star_topology(1, vec![Vec::new()]);
    assert_eq!(invite_leader_candidates(PeripheryId(0), &one, &market, &mut rng_from_seed(5)), vec![CoreId(0)]);
}

fn random_fleet(n: u32, seed: u64) -> (Fleet, ContactTopology) {
    let mut rng = rng_from_seed(seed);
    let servers: Vec<CoreServerState> = (0..n)
        .map(|i| {
            let mode = match rng.gen_range(0..4) {
                0 => ServerMode::Sleep,
                1 => ServerMode::Running(Mode::M1),
                2 => ServerMode::Running(Mode::M2),
                _ => ServerMode::Running(Mode::M3),
            };
            let bg = if mode == ServerMode::Sleep { 0.0 } else { rng.gen_range(3.0..9.0) };
            CoreServerState::new(CoreId(i), mode, 10.0, bg, rng.gen_range(1.0..10.0))
        })
        .collect();
    let core_known_periphery: Vec<Vec<PeripheryId>> =
        (0..n).map(|_| vec![PeripheryId(rng.gen_range(0..4))]).collect();
    let primary: Vec<Vec<CoreId>> = (0..n)
        .map(|c| {
            let mut l: Vec<CoreId> = (0..4).map(|_| CoreId(rng.gen_range(0..n))).filter(|&o| o.0 != c).collect();
            l.sort();
            l.dedup();
            l
        })
        .collect();
    let t = ContactTopology {
        periphery_known_cores: invert(&core_known_periphery, 4),
        core_known_periphery,
        core_primary_contacts: primary,
        aux_roster: Vec::new(),
    };
    (Fleet::from_servers(servers), t)
}

fn scale_costs(fleet: &Fleet, k: f64) -> Fleet {
    Fleet::from_servers(
        fleet
            .servers()
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.unit_cost *= k;
                s
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn price_is_dot_product(allocs in prop::collection::vec((0.01f64..10.0, 0.0f64..10.0), 1..=5)) {
        let servers: Vec<CoreServerState> = allocs
            .iter()
            .enumerate()
            .map(|(i, &(_, cost))| CoreServerState::new(CoreId(i as u32), ServerMode::Sleep, 10.0, 0.0, cost))
            .collect();
        let fleet = Fleet::from_servers(servers);
        let members: Vec<(CoreId, f64)> = allocs.iter().enumerate().map(|(i, &(a, _))| (CoreId(i as u32), a)).collect();
        let total: f64 = members.iter().map(|m| m.1).sum();
        let coalition = Coalition { leader: CoreId(0), members, request_id: 0, total_allocated: total };
        let bid = price_bid(&coalition, &fleet).unwrap();
        let mut expect = 0.0;
        for &(a, c) in &allocs {
            expect += a * c;
        }
        prop_assert!((bid.price - expect).abs() < 1e-9);
    }

    #[test]
    fn auction_invariants(seed in any::<u64>(), workload in 0.1f64..40.0, k in 0.1f64..100.0, c1 in any::<bool>(), secondary in any::<bool>()) {
        let (fleet, t) = random_fleet(60, seed);
        let market = MarketConfig {
            initiation: if c1 { Initiation::C1 } else { Initiation::C2 },
            leader_candidate_fraction: 0.3,
            invited_fraction_c1: 0.5,
            use_secondary_contacts: secondary,
        };
        let mut req = request(workload);
        req.mode = Mode::ALL[(seed % 3) as usize];
        req.entry_periphery = PeripheryId((seed % 4) as u32);
        if t.pcs(req.entry_periphery).is_empty() {
            return Ok(());
        }

        let a = run_auction(&req, &t, &fleet, &market, &mut rng_from_seed(seed));
        let b = run_auction(&req, &t, &fleet, &market, &mut rng_from_seed(seed));
        prop_assert_eq!(&a, &b);

        let scaled = run_auction(&req, &t, &scale_costs(&fleet, k), &market, &mut rng_from_seed(seed));
        match (&a.result, &scaled.result) {
            (AuctionResult::Won(x), AuctionResult::Won(y)) => {
                prop_assert_eq!(&x.coalition.members, &y.coalition.members);
                prop_assert!((y.price - k * x.price).abs() <= 1e-9 * y.price.max(1.0));
            }
            (AuctionResult::Unsatisfied, AuctionResult::Unsatisfied) => {}
            _ => prop_assert!(false, "cost scaling changed feasibility"),
        }

        if let AuctionResult::Won(bid) = &a.result {
            prop_assert!(a.bids_received >= 1);
            prop_assert!((bid.coalition.total_allocated - workload).abs() < 1e-9);
            let sum: f64 = bid.coalition.members.iter().map(|m| m.1).sum();
            prop_assert!((sum - workload).abs() < 1e-9);
            prop_assert!(bid.coalition.members.iter().any(|m| m.0 == bid.coalition.leader));
            let mut ids: Vec<CoreId> = bid.coalition.members.iter().map(|m| m.0).collect();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), bid.coalition.members.len());
            for &(id, alloc) in &bid.coalition.members {
                prop_assert!(alloc > 0.0);
                prop_assert!(alloc <= fleet.get(id).free() + 1e-9);
            }
        }
    }

    #[test]
    fn secondary_never_loses_feasibility(seed in any::<u64>(), workload in 0.1f64..40.0) {
        let (fleet, t) = random_fleet(60, seed);
        let mut req = request(workload);
        req.mode = Mode::ALL[(seed % 3) as usize];
        for leader in 0..60u32 {
            let leader = CoreId(leader);
            if !sococ::market::eligible(fleet.get(leader), &req) {
                continue;
            }
            let primary = assemble_coalition(leader, &req, &t, &fleet, false).is_some();
            let with_secondary = assemble_coalition(leader, &req, &t, &fleet, true).is_some();
            prop_assert!(with_secondary >= primary);
        }
    }
}
