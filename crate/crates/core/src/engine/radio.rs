use std::collections::VecDeque;
use std::time::Duration;

use super::packet::{NodeId, Packet, PacketKind};
use super::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkDest {
    Broadcast,
    Unicast(NodeId),
}

/// Idealized half-duplex transceiver: FIFO queue, one packet on air at a time.
#[derive(Debug)]
pub struct NodeRadio {
    pub node: NodeId,
    pub bandwidth_bps: u64,
    pub range_m: f64,
    pub busy_until: SimTime,
    tx_queue: VecDeque<(Packet, LinkDest)>,
    on_air: Option<(Packet, LinkDest)>,
}

impl NodeRadio {
    pub fn new(node: NodeId, bandwidth_bps: u64, range_m: f64) -> Self {
        NodeRadio {
            node,
            bandwidth_bps,
            range_m,
            busy_until: SimTime::ZERO,
            tx_queue: VecDeque::new(),
            on_air: None,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.on_air.is_none()
    }

    pub(crate) fn push(&mut self, packet: Packet, dest: LinkDest) {
        self.tx_queue.push_back((packet, dest));
    }

    /// Puts the head of the queue on air; returns its airtime.
    pub(crate) fn begin_next(&mut self, now: SimTime) -> Option<(&Packet, LinkDest, Duration)> {
        debug_assert!(self.on_air.is_none(), "radio already transmitting");
        let (mut packet, dest) = self.tx_queue.pop_front()?;
        packet.prev_hop = self.node;
        let air = airtime(packet.size_bits, self.bandwidth_bps);
        self.busy_until = now + air;
        self.on_air = Some((packet, dest));
        let (p, d) = self.on_air.as_ref().expect("just set");
        Some((p, *d, air))
    }

    pub(crate) fn finish(&mut self) -> (Packet, LinkDest) {
        self.on_air.take().expect("finish without transmission")
    }

    pub fn queued(&self) -> impl Iterator<Item = &Packet> {
        self.on_air
            .iter()
            .map(|(p, _)| p)
            .chain(self.tx_queue.iter().map(|(p, _)| p))
    }
}

/// Time on air for `bits` at `bandwidth_bps`, rounded up to whole microseconds.
pub fn airtime(bits: u32, bandwidth_bps: u64) -> Duration {
    assert!(bits > 0, "zero-length packet");
    assert!(bandwidth_bps > 0);
    let us = (u64::from(bits) * 1_000_000).div_ceil(bandwidth_bps);
    Duration::from_micros(us)
}

/// One completed or started transmission, as logged by the MAC.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TxRecord {
    pub node: NodeId,
    pub start: SimTime,
    pub end: SimTime,
    pub bits: u32,
    pub kind: PacketKind,
    pub gratuitous: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BandwidthViolation {
    pub node: NodeId,
    pub window_start: SimTime,
    pub bits: u64,
}

/// Sliding-window audit of the transmission log.
///
/// For each node and each 1 s window beginning at one of its transmissions,
/// sums bits of transmissions lying entirely inside the window. Windows
/// anchored at transmission starts dominate every other placement.
pub fn verify_bandwidth(records: &[TxRecord], bandwidth_bps: u64) -> Vec<BandwidthViolation> {
    let mut by_node: std::collections::BTreeMap<NodeId, Vec<&TxRecord>> = Default::default();
    for r in records {
        by_node.entry(r.node).or_default().push(r);
    }
    let window = Duration::from_secs(1);
    let mut out = Vec::new();
    for (node, mut txs) in by_node {
        txs.sort_by_key(|r| r.start);
        let mut hi = 0;
        let mut sum: u64 = 0;
        // Transmissions never overlap on one radio, so ends are sorted too.
        for lo in 0..txs.len() {
            let limit = txs[lo].start + window;
            if hi < lo {
                hi = lo;
                sum = 0;
            }
            while hi < txs.len() && txs[hi].end <= limit {
                sum += u64::from(txs[hi].bits);
                hi += 1;
            }
            if sum > bandwidth_bps {
                out.push(BandwidthViolation {
                    node,
                    window_start: txs[lo].start,
                    bits: sum,
                });
            }
            if hi > lo {
                sum -= u64::from(txs[lo].bits);
            }
        }
    }
    out
}

/// Adds `bits` to one-second bins in proportion to the airtime falling in each.
pub fn spread_over_seconds(bins: &mut Vec<u64>, start: SimTime, end: SimTime, bits: u64) {
    let (s, e) = (start.as_micros(), end.as_micros());
    if e <= s {
        let b = start.second();
        grow(bins, b + 1);
        bins[b] += bits;
        return;
    }
    let dur = e - s;
    let last = ((e - 1) / 1_000_000) as usize;
    grow(bins, last + 1);
    let mut assigned = 0u64;
    let first = start.second();
    for (bin, slot) in bins.iter_mut().enumerate().take(last + 1).skip(first) {
        let lo = s.max(bin as u64 * 1_000_000);
        let hi = e.min((bin as u64 + 1) * 1_000_000);
        let share = if bin == last {
            bits - assigned
        } else {
            bits * (hi - lo) / dur
        };
        *slot += share;
        assigned += share;
    }
}

fn grow(bins: &mut Vec<u64>, len: usize) {
    if bins.len() < len {
        bins.resize(len, 0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_airtime_at_two_mbps() {
        assert_eq!(airtime(4096, 2_000_000), Duration::from_micros(2048));
        assert_eq!(airtime(1, 2_000_000), Duration::from_micros(1));
    }

    fn rec(start_us: u64, bits: u32, bw: u64) -> TxRecord {
        let start = SimTime::from_micros(start_us);
        TxRecord {
            node: NodeId(0),
            start,
            end: start + airtime(bits, bw),
            bits,
            kind: PacketKind::Data,
            gratuitous: false,
        }
    }

    #[test]
    fn back_to_back_log_never_violates() {
        let bw = 2_000_000;
        let recs: Vec<_> = (0..2000).map(|i| rec(i * 2048, 4096, bw)).collect();
        assert!(verify_bandwidth(&recs, bw).is_empty());
    }

    #[test]
    fn overlapping_log_is_caught() {
        // A log the MAC could never produce: 600 packets in one second.
        let bw = 2_000_000;
        let recs: Vec<_> = (0..600).map(|i| rec(i * 1000, 4096, bw)).collect();
        assert!(!verify_bandwidth(&recs, bw).is_empty());
    }

    #[test]
    fn spread_splits_across_boundary() {
        let mut bins = Vec::new();
        spread_over_seconds(
            &mut bins,
            SimTime::from_micros(999_000),
            SimTime::from_micros(1_001_000),
            4000,
        );
        assert_eq!(bins, vec![2000, 2000]);
        spread_over_seconds(&mut bins, SimTime::from_secs(3), SimTime::from_micros(3_000_500), 1000);
        assert_eq!(bins, vec![2000, 2000, 0, 1000]);
    }
}
