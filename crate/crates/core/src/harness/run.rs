use std::io::{self, Write};
use std::time::Duration;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{ProtocolKind, Scenario};
use crate::analytics::{check_constraints, validate_trace, ConstraintId, CostModel, LpParams, LpReport, Validation};
use crate::aodv::{Aodv, AodvConfig, AodvVariant};
use crate::dsr::{Dsr, DsrConfig, DsrVariant};
use crate::dymo::{Dymo, DymoConfig};
use crate::engine::radio::verify_bandwidth;
use crate::engine::{Flow, NodeId, RadioConfig, RunOutput, SimTime, Simulation};
use crate::metrics::{self, TraceStats};
use crate::mobility::Mobility;
use crate::routing::{HelloConfig, Protocol};

/// One line of the per-run CSV. Field order is the file's column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scenario_id: String,
    pub protocol: String,
    pub nodes: usize,
    pub speed_mps: f64,
    pub pause_s: f64,
    pub traffic_pps: f64,
    pub seed: u64,
    pub throughput_bps: f64,
    pub avg_e2ed_s: Option<f64>,
    pub nrl: Option<f64>,
    pub ctrl_rreq: u64,
    pub ctrl_rrep: u64,
    pub ctrl_grat_rrep: u64,
    pub ctrl_rerr: u64,
    pub ctrl_hello: u64,
    pub data_sent: u64,
    pub data_recv: u64,
    pub data_dropped: u64,
    pub link_breaks: u64,
    pub repairs_ok: u64,
    pub repairs_fail: u64,
    pub salvages: u64,
    pub no_route_events: u64,
    pub lp_violations_1a: u64,
    pub lp_violations_2a: u64,
    pub lp_violations_3a: u64,
}

impl CsvRow {
    pub fn from_run(sc: &Scenario, ts: &TraceStats, report: &LpReport) -> Self {
        let c = &ts.ctrl_counts;
        CsvRow {
            scenario_id: sc.id(),
            protocol: sc.protocol.to_string(),
            nodes: sc.nodes,
            speed_mps: sc.speed_mps,
            pause_s: sc.pause_s,
            traffic_pps: sc.traffic_pps,
            seed: sc.seed,
            throughput_bps: metrics::throughput(ts, sc.duration_s),
            avg_e2ed_s: metrics::avg_e2ed(ts),
            nrl: metrics::nrl(ts),
            ctrl_rreq: c.rreq,
            ctrl_rrep: c.rrep,
            ctrl_grat_rrep: c.grat_rrep,
            ctrl_rerr: c.rerr,
            ctrl_hello: c.hello,
            data_sent: ts.data_originated,
            data_recv: ts.data_delivered,
            data_dropped: ts.data_dropped,
            link_breaks: ts.link_breaks,
            repairs_ok: ts.repairs_succeeded,
            repairs_fail: ts.repairs_failed,
            salvages: ts.salvages,
            no_route_events: ts.no_route_events,
            lp_violations_1a: report.count(ConstraintId::C1a),
            lp_violations_2a: report.count(ConstraintId::C2a),
            lp_violations_3a: report.count(ConstraintId::C3a),
        }
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[CsvRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: io::Read>(input: R) -> Result<Vec<CsvRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[derive(Debug)]
pub struct RunResult {
    pub scenario: Scenario,
    pub stats: TraceStats,
    pub report: LpReport,
    pub row: CsvRow,
    /// Mean node degree, sampled once per second.
    pub d_avg: f64,
    pub validation: Validation,
    /// Sliding-window audit of the MAC log against the link bandwidth.
    pub bandwidth_violations: usize,
    pub live_data: u64,
}

pub fn horizon(sc: &Scenario) -> SimTime {
    SimTime::from_micros((sc.duration_s * 1e6).round() as u64)
}

pub fn mobility_for(sc: &Scenario) -> Mobility {
    Mobility::random_waypoint(
        sc.nodes,
        sc.area,
        sc.speed_mps,
        Duration::from_secs_f64(sc.pause_s),
        horizon(sc),
        sc.seed,
    )
}

/// CBR pairs over distinct nodes, each starting at a random offset within one interval.
pub fn flows_for(sc: &Scenario) -> Vec<Flow> {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(u64::MAX);
    let picked = sample(&mut rng, sc.nodes, 2 * sc.flows).into_vec();
    let interval = Duration::from_secs_f64(1.0 / sc.traffic_pps);
    picked
        .chunks(2)
        .map(|pair| Flow {
            src: NodeId(pair[0] as u32),
            dst: NodeId(pair[1] as u32),
            start: SimTime::from_micros(rng.random_range(0..interval.as_micros().max(1) as u64)),
            interval,
            payload_bits: sc.packet_bytes * 8,
        })
        .collect()
}

pub fn radio_for(sc: &Scenario) -> RadioConfig {
    RadioConfig {
        bandwidth_bps: sc.bandwidth_bps,
        ..RadioConfig::default()
    }
}

pub fn mean_degree(mobility: &Mobility, range_m: f64, horizon: SimTime) -> f64 {
    let n = mobility.node_count();
    let mut samples = 0u64;
    let mut total = 0.0;
    let mut t = SimTime::ZERO;
    while t <= horizon {
        let pos = mobility.positions_at(t);
        let mut links = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                if pos[i].distance(pos[j]) <= range_m {
                    links += 1;
                }
            }
        }
        total += 2.0 * links as f64 / n as f64;
        samples += 1;
        t = t + Duration::from_secs(1);
    }
    total / samples as f64
}

fn drive<P: Protocol>(
    sc: &Scenario,
    mobility: Mobility,
    log: Option<Box<dyn Write>>,
    make: impl FnMut(NodeId) -> P,
) -> io::Result<RunOutput> {
    let mut sim = Simulation::new(radio_for(sc), mobility, flows_for(sc), horizon(sc), sc.seed, make);
    if let Some(out) = log {
        sim = sim.with_event_log(out);
    }
    sim.finish()
}

pub fn run(sc: &Scenario) -> io::Result<RunResult> {
    run_with_log(sc, None)
}

pub fn run_with_log(sc: &Scenario, log: Option<Box<dyn Write>>) -> io::Result<RunResult> {
    let mobility = mobility_for(sc);
    let range = radio_for(sc).range_m;
    let d_avg = mean_degree(&mobility, range, horizon(sc));
    let out = match sc.protocol {
        ProtocolKind::Aodv => drive(sc, mobility, log, |id| {
            Aodv::new(id, AodvVariant::Hello, AodvConfig::default())
        })?,
        ProtocolKind::AodvLl => drive(sc, mobility, log, |id| {
            Aodv::new(id, AodvVariant::LinkLayer, AodvConfig::default())
        })?,
        ProtocolKind::Dsr => drive(sc, mobility, log, |id| {
            Dsr::new(id, DsrVariant::Standard, DsrConfig::for_variant(DsrVariant::Standard))
        })?,
        ProtocolKind::DsrM => drive(sc, mobility, log, |id| {
            Dsr::new(
                id,
                DsrVariant::SmallCache,
                DsrConfig::for_variant(DsrVariant::SmallCache),
            )
        })?,
        ProtocolKind::Dymo => drive(sc, mobility, log, |id| Dymo::new(id, DymoConfig::default()))?,
    };
    let report = check_constraints(&out.stats, &LpParams::for_bandwidth(sc.bandwidth_bps));
    let model = match sc.protocol {
        ProtocolKind::Aodv => CostModel::Aodv,
        ProtocolKind::AodvLl => CostModel::AodvLl,
        ProtocolKind::Dsr | ProtocolKind::DsrM => CostModel::Dsr,
        ProtocolKind::Dymo => CostModel::Dymo,
    };
    let validation = validate_trace(&out.stats, model, d_avg, &HelloConfig::default())
        .map_err(|e| io::Error::other(e.to_string()))?;
    let row = CsvRow::from_run(sc, &out.stats, &report);
    Ok(RunResult {
        scenario: sc.clone(),
        bandwidth_violations: verify_bandwidth(&out.transmissions, sc.bandwidth_bps).len(),
        live_data: out.live_data,
        stats: out.stats,
        report,
        row,
        d_avg,
        validation,
    })
}
