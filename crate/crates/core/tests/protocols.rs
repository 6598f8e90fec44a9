mod common;

use std::collections::BTreeMap;

use common::*;
use manetsim_core::engine::NodeId;
use manetsim_core::harness::{run as run_scenario, ProtocolKind};
use manetsim_core::metrics::throughput;
use manetsim_core::mobility::Position;

fn rx_nodes(evs: &[Ev], kind: &str) -> Vec<u32> {
    let mut v: Vec<u32> = evs
        .iter()
        .filter(|e| e.event == "rx" && e.kind == kind)
        .map(|e| e.node)
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Mean delay of packets delivered in `[from, to)` seconds, from the event log.
fn mean_delay(evs: &[Ev], from: f64, to: f64) -> f64 {
    let born: BTreeMap<u64, u64> = evs
        .iter()
        .filter(|e| e.event == "originate")
        .map(|e| (e.uid.unwrap(), e.t_us))
        .collect();
    let d: Vec<u64> = evs
        .iter()
        .filter(|e| e.event == "deliver" && (from * 1e6) as u64 <= e.t_us && e.t_us < (to * 1e6) as u64)
        .map(|e| e.t_us - born[&e.uid.unwrap()])
        .collect();
    assert!(!d.is_empty());
    d.iter().sum::<u64>() as f64 / d.len() as f64
}

#[test]
fn rerr_walks_back_along_the_chain() {
    // 0 -> 1 -> 2 -> 3; 3 disappears, 2's repair finds nothing.
    let m = with_jump(&line(4, 200.0), 3, 10.5, Position::new(600.0, 3000.0));
    let (out, log) = run_logged(m, vec![flow(0, 3, 1.0, 4.0)], 12.5, aodv_ll);
    let s = &out.stats;
    assert_eq!(s.repairs_failed, 1);
    assert_eq!(s.rerr_receivers, 2);
    assert_eq!(rx_nodes(&events(&log), "RERR"), vec![0, 1]);
}

#[test]
fn rerr_reaches_every_source_sharing_the_link() {
    // S1 and S2 both route through A -> B -> D.
    let pos = vec![
        Position::new(0.0, 100.0),
        Position::new(0.0, -100.0),
        Position::new(200.0, 0.0),
        Position::new(400.0, 0.0),
        Position::new(600.0, 0.0),
    ];
    let m = with_jump(&pos, 4, 10.5, Position::new(600.0, 3000.0));
    let flows = vec![flow(0, 4, 1.0, 4.0), flow(1, 4, 1.2, 4.0)];
    let (out, log) = run_logged(m, flows, 12.5, aodv_ll);
    let got = rx_nodes(&events(&log), "RERR");
    assert!(got.contains(&0) && got.contains(&1), "{got:?}");
    assert!(out.stats.rerr_receivers >= 3);
}

#[test]
fn no_precursors_no_rerr() {
    let m = with_jump(&line(2, 200.0), 1, 5.5, Position::new(0.0, 3000.0));
    let out = run(m, vec![flow(0, 1, 1.0, 2.0)], 10.0, aodv_ll);
    assert!(out.stats.link_breaks_detected >= 1);
    assert_eq!(out.stats.ctrl_counts.rerr, 0);
}

#[test]
fn longer_repaired_path_costs_delay() {
    let mut pos = line(4, 200.0);
    pos.push(Position::new(500.0, 150.0));
    let m = with_jump(&pos, 3, 10.5, Position::new(700.0, 100.0));
    let (out, log) = run_logged(m, vec![flow(0, 3, 1.0, 0.5)], 30.0, aodv_ll);
    assert!(out.stats.repairs_succeeded >= 1);
    let evs = events(&log);
    let before = mean_delay(&evs, 2.0, 10.0);
    let after = mean_delay(&evs, 15.0, 30.0);
    assert!(after > before, "{before} -> {after} us");
}

#[test]
fn warm_dsr_cache_needs_no_more_requests() {
    let short = run(fixed(&line(4, 200.0)), vec![flow(0, 3, 1.0, 0.5)], 5.0, dsr);
    let long = run(fixed(&line(4, 200.0)), vec![flow(0, 3, 1.0, 0.5)], 120.0, dsr);
    assert_eq!(short.stats.ctrl_counts.rreq, long.stats.ctrl_counts.rreq);
    assert_eq!(long.stats.discoveries_started, 1);
    assert_eq!(
        long.stats.data_delivered + long.stats.data_in_flight,
        long.stats.data_originated
    );
}

#[test]
fn dsr_reply_returns_full_path_and_shorter_route_wins() {
    let mut s = sim(fixed(&line(4, 200.0)), vec![flow(0, 3, 1.0, 10.0)], 3.0, dsr);
    s.run_until(secs(3.0));
    let want: Vec<NodeId> = (0..4).map(NodeId).collect();
    assert_eq!(s.router(NodeId(0)).cache().lookup(NodeId(3)), Some(want.clone()));
    assert!(s.router(NodeId(0)).cache().paths().any(|p| p.nodes == want));

    // S=0, a=1, D=2 direct; b1=3, b2=4 form a longer detour below.
    let pos = vec![
        Position::new(0.0, 0.0),
        Position::new(200.0, 0.0),
        Position::new(400.0, 0.0),
        Position::new(80.0, -225.0),
        Position::new(320.0, -225.0),
    ];
    let mut s = sim(fixed(&pos), vec![flow(0, 2, 1.0, 10.0)], 3.0, dsr);
    s.run_until(secs(3.0));
    let cache = s.router(NodeId(0)).cache();
    let to_d = cache.paths().filter(|p| p.nodes.contains(&NodeId(2))).count();
    assert!(to_d >= 2, "{:?}", cache.paths().collect::<Vec<_>>());
    assert_eq!(cache.lookup(NodeId(2)), Some(vec![NodeId(0), NodeId(1), NodeId(2)]));
}

#[test]
fn dymo_floods_at_least_as_much_as_aodv() {
    for seed in 1..=5 {
        let sc = small(ProtocolKind::Aodv, 20, 0.0, 0.0, 4.0, seed);
        let a = run_scenario(&sc).unwrap();
        let d = run_scenario(&manetsim_core::harness::Scenario {
            protocol: ProtocolKind::Dymo,
            ..sc
        })
        .unwrap();
        assert!(d.stats.ctrl_counts.rreq >= a.stats.ctrl_counts.rreq, "seed {seed}");
        assert_eq!(a.stats.link_breaks, 0);
    }
}

#[test]
fn smaller_cache_turns_over_faster() {
    let evictions = |p: ProtocolKind| -> u64 {
        (1..=5)
            .map(|seed| {
                let mut sc = small(p, 25, 30.0, 0.0, 8.0, seed);
                sc.flows = 10;
                sc.duration_s = 150.0;
                run_scenario(&sc).unwrap().stats.cache_evictions
            })
            .sum()
    };
    let (full, small_cache) = (evictions(ProtocolKind::Dsr), evictions(ProtocolKind::DsrM));
    assert!(small_cache > full, "dsr {full}, dsr-m {small_cache}");
}

#[test]
fn static_pair_throughput_matches_offered_load() {
    for p in ProtocolKind::ALL {
        let sc = manetsim_core::harness::Scenario {
            protocol: p,
            nodes: 2,
            area: manetsim_core::mobility::Area::new(150.0, 150.0),
            speed_mps: 0.0,
            traffic_pps: 2.0,
            flows: 1,
            duration_s: 300.0,
            ..Default::default()
        };
        let r = run_scenario(&sc).unwrap();
        let offered = 2.0 * 512.0 * 8.0;
        let got = throughput(&r.stats, sc.duration_s);
        assert!((got - offered).abs() <= 0.01 * offered, "{p}: {got}");
        assert_eq!(r.stats.link_breaks, 0);
    }
}

#[test]
fn dymo_overhead_bins_exceed_dsr_under_load() {
    use manetsim_core::analytics::ConstraintId;
    let mut sc = small(ProtocolKind::Dymo, 50, 30.0, 0.0, 32.0, 1);
    sc.flows = 10;
    sc.duration_s = 60.0;
    let d = run_scenario(&sc).unwrap();
    let s = run_scenario(&manetsim_core::harness::Scenario {
        protocol: ProtocolKind::Dsr,
        ..sc
    })
    .unwrap();
    assert!(d.report.count(ConstraintId::C3a) >= s.report.count(ConstraintId::C3a));
    assert!(d.stats.ctrl_counts.total() > s.stats.ctrl_counts.total());
}
