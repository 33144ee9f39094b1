//! One C2 auction on a hand-built fleet, printing every coalition member.

use sococ::engine::{CoreServerState, Fleet, ServerMode};
use sococ::market::{run_auction, AuctionResult, Initiation, MarketConfig};
use sococ::rng::rng_from_seed;
use sococ::topology::{invert, ContactTopology, CoreId, PeripheryId};
use sococ::workload::{Mode, ServiceRequest};

fn main() {
    let n = 16u32;
    // everyone registers with the one periphery server and knows the next four cores
    let core_known_periphery = vec![vec![PeripheryId(0)]; n as usize];
    let topology = ContactTopology {
        periphery_known_cores: invert(&core_known_periphery, 1),
        core_known_periphery,
        core_primary_contacts: (0..n).map(|c| (1..=4).map(|k| CoreId((c + k) % n)).collect()).collect(),
        aux_roster: Vec::new(),
    };
    let fleet = Fleet::from_servers(
        (0..n)
            .map(|i| {
                let mode = if i % 3 == 0 { ServerMode::Sleep } else { ServerMode::Running(Mode::M2) };
                let background = if mode == ServerMode::Sleep { 0.0 } else { 4.0 + (i % 4) as f64 };
                CoreServerState::new(CoreId(i), mode, 10.0, background, 1.0 + ((i * 7) % 10) as f64)
            })
            .collect(),
    );
    let request = ServiceRequest {
        id: 1,
        arrival_time: 0.0,
        mode: Mode::M2,
        workload: 17.5,
        duration: 3.0,
        entry_periphery: PeripheryId(0),
    };
    let market = MarketConfig {
        initiation: Initiation::C2,
        leader_candidate_fraction: 0.25,
        use_secondary_contacts: false,
        ..MarketConfig::default()
    };

    let outcome = run_auction(&request, &topology, &fleet, &market, &mut rng_from_seed(1));
    println!("{} candidates invited, {} bids", outcome.candidates_contacted, outcome.bids_received);
    match outcome.result {
        AuctionResult::Won(bid) => {
            println!("leader {} wins at price {:.2}", bid.coalition.leader, bid.price);
            for (id, alloc) in &bid.coalition.members {
                let s = fleet.get(*id);
                println!("  {id}: {alloc:.2} SCU at {:.0}/SCU ({:?})", s.unit_cost, s.mode);
            }
        }
        AuctionResult::Unsatisfied => println!("no coalition could cover {} SCU", request.workload),
    }
}
