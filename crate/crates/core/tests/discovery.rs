mod common;

use common::*;
use manetsim_core::engine::RunOutput;
use manetsim_core::mobility::Position;
use manetsim_core::routing::ErsSchedule;

/// One packet from node 0 to the far end of a line `depth` hops long.
fn line_run(depth: usize, proto: &str) -> RunOutput {
    let m = fixed(&line(depth + 1, 200.0));
    let flows = vec![flow(0, depth as u32, 1.0, 1000.0)];
    match proto {
        "aodv" => run(m, flows, 40.0, aodv),
        "aodv-ll" => run(m, flows, 40.0, aodv_ll),
        "dsr" => run(m, flows, 40.0, dsr),
        "dymo" => run(m, flows, 40.0, dymo),
        _ => unreachable!(),
    }
}

const PROTOS: [&str; 4] = ["aodv", "aodv-ll", "dsr", "dymo"];

#[test]
fn ring_sequence_stops_at_first_ring_reaching_target() {
    // Expected reach per ring follows from the line geometry: ring k covers min(ttl_k, depth) nodes.
    for proto in PROTOS {
        for (depth, rings) in [
            (1, vec![1]),
            (3, vec![1, 3]),
            (5, vec![1, 3, 5]),
            (6, vec![1, 3, 5, 6]),
            (7, vec![1, 3, 5, 7]),
            (10, vec![1, 3, 5, 7, 10]),
        ] {
            let out = line_run(depth, proto);
            let s = &out.stats;
            assert_eq!(s.ring_sizes, rings, "{proto} depth {depth}");
            assert_eq!(
                (s.discoveries_started, s.discoveries_succeeded),
                (1, 1),
                "{proto} depth {depth}"
            );
            assert_eq!(s.data_delivered, 1, "{proto} depth {depth}");
        }
    }
}

#[test]
fn discovery_time_covers_failed_ring_waits() {
    let ers = ErsSchedule::default();
    for proto in PROTOS {
        let out = line_run(6, proto);
        // Rings ttl 1, 3 and 5 time out before the ttl-7 ring gets an answer.
        let waited: u64 = (0..3).map(|a| ers.next(a).unwrap().1.as_micros() as u64).sum();
        let d = out.stats.discovery_durations_us[0];
        assert!(d >= waited, "{proto}: {d} < {waited}");
        assert!(d < waited + ers.next(3).unwrap().1.as_micros() as u64, "{proto}: {d}");
    }
}

#[test]
fn unreachable_target_exhausts_every_ring() {
    // Ten connected nodes and a target far out of range.
    let mut pos = line(10, 200.0);
    pos.push(Position::new(4000.0, 4000.0));
    let ers = ErsSchedule::default();
    for proto in ["aodv", "dsr", "dymo"] {
        let m = fixed(&pos);
        let flows = vec![flow(0, 10, 1.0, 1000.0)];
        let out = match proto {
            "aodv" => run(m, flows, 40.0, aodv),
            "dsr" => run(m, flows, 40.0, dsr),
            _ => run(m, flows, 40.0, dymo),
        };
        let s = &out.stats;
        assert_eq!(s.ring_sizes, vec![1, 3, 5, 7, 9, 9, 9], "{proto}");
        assert_eq!(s.ring_sizes.len() as u32, ers.max_rings());
        assert_eq!(s.no_route_events, 1, "{proto}");
        assert_eq!(s.p_nr(), 1.0);
        assert_eq!(s.data_dropped, 1, "{proto}");
        // A ttl-t ring on a line costs min(t, 10) transmissions: the origin plus each node
        // that still holds ttl > 1.
        let expected: u64 = [1, 3, 5, 7, 35, 35, 35].iter().map(|&t: &u64| t.min(10)).sum();
        assert_eq!(s.ctrl_counts.rreq, expected, "{proto}");
    }
}

#[test]
fn rreq_never_received_beyond_its_ring() {
    let mut pos = line(10, 200.0);
    pos.push(Position::new(4000.0, 4000.0));
    let (_, log) = run_logged(fixed(&pos), vec![flow(0, 10, 1.0, 1000.0)], 40.0, aodv);
    let evs = events(&log);
    // Per origin transmission: uid → ttl stamped at node 0.
    let mut origin_ttl = std::collections::HashMap::new();
    for e in evs
        .iter()
        .filter(|e| e.event == "tx" && e.kind == "RREQ" && e.node == 0)
    {
        let ttl: u32 = e.detail.rsplit("ttl=").next().unwrap().parse().unwrap();
        origin_ttl.insert(e.uid.unwrap(), ttl);
    }
    for e in evs.iter().filter(|e| e.event == "rx" && e.kind == "RREQ") {
        // Rebroadcasts keep the uid of the request they forward.
        if let Some(&ttl) = origin_ttl.get(&e.uid.unwrap()) {
            assert!(e.node <= ttl, "node {} got a ttl-{ttl} request", e.node);
        }
    }
    assert!(!origin_ttl.is_empty());
}
