#![allow(dead_code)]

use std::time::Duration;

use manetsim_core::aodv::{Aodv, AodvConfig, AodvVariant};
use manetsim_core::dsr::{Dsr, DsrConfig, DsrVariant};
use manetsim_core::dymo::{Dymo, DymoConfig};
use manetsim_core::engine::{Flow, MemoryLog, NodeId, RadioConfig, RunOutput, SimTime, Simulation};
use manetsim_core::harness::run::{flows_for, horizon, mobility_for, radio_for};
use manetsim_core::harness::{ProtocolKind, Scenario};
use manetsim_core::mobility::{Area, Mobility, Position, Trajectory};
use manetsim_core::routing::Protocol;

pub fn secs(s: f64) -> SimTime {
    SimTime::from_secs_f64(s)
}

/// `n` nodes on the x axis, `spacing` metres apart.
pub fn line(n: usize, spacing: f64) -> Vec<Position> {
    (0..n).map(|i| Position::new(i as f64 * spacing, 0.0)).collect()
}

pub fn fixed(positions: &[Position]) -> Mobility {
    Mobility::fixed(Area::new(5000.0, 5000.0), positions)
}

/// CBR flow of 512-byte packets.
pub fn flow(src: u32, dst: u32, start: f64, interval_s: f64) -> Flow {
    Flow {
        src: NodeId(src),
        dst: NodeId(dst),
        start: secs(start),
        interval: Duration::from_secs_f64(interval_s),
        payload_bits: 4096,
    }
}

pub fn aodv(id: NodeId) -> Aodv {
    Aodv::new(id, AodvVariant::Hello, AodvConfig::default())
}

pub fn aodv_ll(id: NodeId) -> Aodv {
    Aodv::new(id, AodvVariant::LinkLayer, AodvConfig::default())
}

pub fn dsr(id: NodeId) -> Dsr {
    Dsr::new(id, DsrVariant::Standard, DsrConfig::for_variant(DsrVariant::Standard))
}

pub fn dsr_m(id: NodeId) -> Dsr {
    Dsr::new(
        id,
        DsrVariant::SmallCache,
        DsrConfig::for_variant(DsrVariant::SmallCache),
    )
}

pub fn dymo(id: NodeId) -> Dymo {
    Dymo::new(id, DymoConfig::default())
}

pub fn sim<P: Protocol>(
    mobility: Mobility,
    flows: Vec<Flow>,
    horizon_s: f64,
    make: impl FnMut(NodeId) -> P,
) -> Simulation<P> {
    Simulation::new(RadioConfig::default(), mobility, flows, secs(horizon_s), 7, make)
}

pub fn run<P: Protocol>(
    mobility: Mobility,
    flows: Vec<Flow>,
    horizon_s: f64,
    make: impl FnMut(NodeId) -> P,
) -> RunOutput {
    sim(mobility, flows, horizon_s, make).finish().expect("in-memory run")
}

/// Runs with an in-memory event log and returns both.
pub fn run_logged<P: Protocol>(
    mobility: Mobility,
    flows: Vec<Flow>,
    horizon_s: f64,
    make: impl FnMut(NodeId) -> P,
) -> (RunOutput, String) {
    let log = MemoryLog::default();
    let out = sim(mobility, flows, horizon_s, make)
        .with_event_log(Box::new(log.clone()))
        .finish()
        .expect("in-memory run");
    (out, log.text())
}

/// Parsed event-log line.
#[derive(Debug, Clone)]
pub struct Ev {
    pub t_us: u64,
    pub node: u32,
    pub event: String,
    pub uid: Option<u64>,
    pub kind: String,
    pub detail: String,
}

pub fn events(text: &str) -> Vec<Ev> {
    text.lines()
        .map(|l| {
            let f: Vec<&str> = l.splitn(6, '\t').collect();
            Ev {
                t_us: f[0].parse().unwrap(),
                node: f[1].trim_start_matches('n').parse().unwrap(),
                event: f[2].to_string(),
                uid: f[3].parse().ok(),
                kind: f[4].to_string(),
                detail: f.get(5).unwrap_or(&"").to_string(),
            }
        })
        .collect()
}

/// Fixed nodes except `mover`, which jumps (at 100 km/s) to `to` at `at_s`.
pub fn with_jump(positions: &[Position], mover: usize, at_s: f64, to: Position) -> Mobility {
    let trajectories = positions
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if i == mover {
                Trajectory::starting_at(p).move_to(secs(at_s), to, 100_000.0)
            } else {
                Trajectory::stationary(p)
            }
        })
        .collect();
    Mobility::scripted(Area::new(5000.0, 5000.0), trajectories)
}

/// First time the two nodes are out of range (at or after `from`), in microseconds.
pub fn first_out_of_range(m: &Mobility, a: u32, b: u32, from: SimTime, range_m: f64) -> u64 {
    let mut t = from.as_micros();
    loop {
        let at = SimTime::from_micros(t);
        if m.position_at(NodeId(a), at).distance(m.position_at(NodeId(b), at)) > range_m {
            return t;
        }
        t += 1;
    }
}

pub fn count(evs: &[Ev], event: &str) -> usize {
    evs.iter().filter(|e| e.event == event).count()
}

pub fn delivered_after(evs: &[Ev], t_us: u64) -> usize {
    evs.iter().filter(|e| e.event == "deliver" && e.t_us > t_us).count()
}

/// Engine-level output of a harness scenario, with an optional event log.
pub fn scenario_output(sc: &Scenario, logged: bool) -> (RunOutput, String) {
    fn go<P: Protocol>(sc: &Scenario, logged: bool, make: impl FnMut(NodeId) -> P) -> (RunOutput, String) {
        let mut sim = Simulation::new(
            radio_for(sc),
            mobility_for(sc),
            flows_for(sc),
            horizon(sc),
            sc.seed,
            make,
        );
        let log = MemoryLog::default();
        if logged {
            sim = sim.with_event_log(Box::new(log.clone()));
        }
        (sim.finish().expect("in-memory run"), log.text())
    }
    match sc.protocol {
        ProtocolKind::Aodv => go(sc, logged, aodv),
        ProtocolKind::AodvLl => go(sc, logged, aodv_ll),
        ProtocolKind::Dsr => go(sc, logged, dsr),
        ProtocolKind::DsrM => go(sc, logged, dsr_m),
        ProtocolKind::Dymo => go(sc, logged, dymo),
    }
}

/// Small desk scenario: `nodes` at the reference density.
pub fn small(protocol: ProtocolKind, nodes: usize, speed: f64, pause: f64, pps: f64, seed: u64) -> Scenario {
    let side = ((nodes as f64 / 50.0).sqrt() * 1000.0).round();
    Scenario {
        protocol,
        nodes,
        area: Area::new(side, side),
        speed_mps: speed,
        pause_s: pause,
        traffic_pps: pps,
        flows: (nodes / 2).min(4),
        duration_s: 60.0,
        seed,
        ..Scenario::default()
    }
}
