//! Per-run trace counters and the three headline metrics: throughput,
//! average end-to-end delay and normalized routing load.

use std::time::Duration;

use crate::engine::packet::PacketKind;
use crate::engine::radio::spread_over_seconds;
use crate::engine::{NodeId, SimTime};

/// Control transmissions by category. Every hop-wise send counts once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CtrlCounts {
    pub rreq: u64,
    pub rrep: u64,
    pub grat_rrep: u64,
    pub rerr: u64,
    pub hello: u64,
}

impl CtrlCounts {
    pub fn total(&self) -> u64 {
        self.rreq + self.rrep + self.grat_rrep + self.rerr + self.hello
    }

    pub fn record(&mut self, kind: PacketKind, gratuitous: bool) {
        match kind {
            PacketKind::Rreq => self.rreq += 1,
            PacketKind::Rrep if gratuitous => self.grat_rrep += 1,
            PacketKind::Rrep => self.rrep += 1,
            PacketKind::Rerr => self.rerr += 1,
            PacketKind::Hello => self.hello += 1,
            PacketKind::Data => {}
        }
    }

    /// Discovery-phase transmissions (requests and replies).
    pub fn discovery(&self) -> u64 {
        self.rreq + self.rrep + self.grat_rrep
    }

    /// Maintenance-phase transmissions (errors and hellos).
    pub fn maintenance(&self) -> u64 {
        self.rerr + self.hello
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    BufferTimeout,
    BufferOverflow,
    NoRoute,
    LinkFailure,
    RepairFailed,
    SalvageFailed,
    TtlExpired,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::BufferTimeout => "buffer_timeout",
            DropReason::BufferOverflow => "buffer_overflow",
            DropReason::NoRoute => "no_route",
            DropReason::LinkFailure => "link_failure",
            DropReason::RepairFailed => "repair_failed",
            DropReason::SalvageFailed => "salvage_failed",
            DropReason::TtlExpired => "ttl_expired",
        }
    }
}

/// Aggregated counters for one simulation run.
#[derive(Clone, Debug, Default)]
pub struct TraceStats {
    pub node_count: usize,
    pub duration: Duration,

    pub data_originated: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
    /// DATA packets still queued, buffered or on air when the run ended.
    pub data_in_flight: u64,
    pub delivered_bits: u64,
    pub delivery_delays_us: Vec<u64>,
    pub drops_by_reason: std::collections::BTreeMap<DropReason, u64>,
    /// Delivered packets per flow (one flow = one data request stream).
    pub flow_delivered: Vec<u64>,
    pub data_transmissions: u64,

    pub ctrl_counts: CtrlCounts,

    /// Physical link breaks observed by the periodic range scan.
    pub link_breaks: u64,
    pub link_changes_per_second: Vec<u64>,
    /// Breaks noticed by protocols (HELLO loss, beacon loss, unicast failure).
    pub link_breaks_detected: u64,

    pub discoveries_started: u64,
    pub discoveries_succeeded: u64,
    pub discovery_durations_us: Vec<u64>,
    /// Nodes within TTL range of the originator, one entry per ring started.
    pub ring_sizes: Vec<u64>,
    pub no_route_events: u64,

    pub repairs_attempted: u64,
    pub repairs_succeeded: u64,
    pub repairs_failed: u64,
    pub repair_durations_us: Vec<u64>,
    pub repairs_per_second: Vec<u64>,

    pub salvages: u64,
    pub salvage_failures: u64,
    pub grat_replies: u64,
    /// Node-level RERR receptions (a node counted once per RERR it processes).
    pub rerr_receivers: u64,
    pub cache_evictions: u64,

    /// HELLO rounds in which the node was on an active route (one HELLO issued each).
    pub hello_active_ticks: u64,
    /// Distinct nodes that were ever on an active route at a HELLO round.
    pub hello_nodes: std::collections::BTreeSet<NodeId>,

    /// Radio airtime-weighted bits per node per one-second bin (control + data).
    pub per_node_per_second_bits: Vec<Vec<u64>>,
    pub rd_ctrl_bits_per_second: Vec<u64>,
    pub rm_ctrl_bits_per_second: Vec<u64>,
}

impl TraceStats {
    pub fn new(node_count: usize, duration: Duration, flows: usize) -> Self {
        TraceStats {
            node_count,
            duration,
            flow_delivered: vec![0; flows],
            per_node_per_second_bits: vec![Vec::new(); node_count],
            ..Default::default()
        }
    }

    pub(crate) fn record_transmission(
        &mut self,
        node: NodeId,
        start: SimTime,
        end: SimTime,
        bits: u32,
        kind: PacketKind,
        gratuitous: bool,
    ) {
        self.ctrl_counts.record(kind, gratuitous);
        let bits = u64::from(bits);
        spread_over_seconds(&mut self.per_node_per_second_bits[node.index()], start, end, bits);
        match kind {
            PacketKind::Data => self.data_transmissions += 1,
            PacketKind::Rreq | PacketKind::Rrep => {
                spread_over_seconds(&mut self.rd_ctrl_bits_per_second, start, end, bits)
            }
            PacketKind::Rerr | PacketKind::Hello => {
                spread_over_seconds(&mut self.rm_ctrl_bits_per_second, start, end, bits)
            }
        }
    }

    pub(crate) fn record_delivery(&mut self, flow: u32, delay: Duration, payload_bits: u32) {
        self.data_delivered += 1;
        self.delivered_bits += u64::from(payload_bits);
        self.delivery_delays_us.push(delay.as_micros() as u64);
        if let Some(c) = self.flow_delivered.get_mut(flow as usize) {
            *c += 1;
        }
    }

    pub(crate) fn record_drop(&mut self, reason: DropReason) {
        self.data_dropped += 1;
        *self.drops_by_reason.entry(reason).or_default() += 1;
    }

    pub fn record_repair_attempt(&mut self, at: SimTime) {
        self.repairs_attempted += 1;
        bump(&mut self.repairs_per_second, at.second());
    }

    pub(crate) fn record_link_change(&mut self, at: SimTime, broken: bool) {
        if broken {
            self.link_breaks += 1;
        }
        bump(&mut self.link_changes_per_second, at.second());
    }

    pub fn duration_secs(&self) -> f64 {
        self.duration.as_secs_f64()
    }

    /// Fraction of source discoveries that exhausted every ring.
    pub fn p_nr(&self) -> f64 {
        if self.discoveries_started == 0 {
            0.0
        } else {
            self.no_route_events as f64 / self.discoveries_started as f64
        }
    }
}

fn bump(bins: &mut Vec<u64>, idx: usize) {
    if bins.len() <= idx {
        bins.resize(idx + 1, 0);
    }
    bins[idx] += 1;
}

/// Delivered payload bits per second of simulated time.
pub fn throughput(ts: &TraceStats, duration_s: f64) -> f64 {
    if duration_s <= 0.0 {
        return 0.0;
    }
    ts.delivered_bits as f64 / duration_s
}

/// Mean origination-to-delivery delay in seconds; `None` with no deliveries.
pub fn avg_e2ed(ts: &TraceStats) -> Option<f64> {
    if ts.delivery_delays_us.is_empty() {
        return None;
    }
    let sum: u64 = ts.delivery_delays_us.iter().sum();
    Some(sum as f64 / ts.delivery_delays_us.len() as f64 / 1e6)
}

/// Control transmissions per delivered data packet; `None` with no deliveries.
pub fn nrl(ts: &TraceStats) -> Option<f64> {
    (ts.data_delivered > 0).then(|| ts.ctrl_counts.total() as f64 / ts.data_delivered as f64)
}
