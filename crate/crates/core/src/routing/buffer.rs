use std::collections::VecDeque;
use std::time::Duration;

use crate::engine::{NodeId, Packet, SimTime};

/// FIFO of DATA packets waiting for a route.
#[derive(Debug)]
pub struct SendBuffer {
    entries: VecDeque<(Packet, SimTime)>,
    capacity: usize,
    timeout: Duration,
}

impl SendBuffer {
    pub fn new(capacity: usize, timeout: Duration) -> Self {
        assert!(capacity > 0);
        SendBuffer {
            entries: VecDeque::new(),
            capacity,
            timeout,
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts; returns the oldest packet if the buffer overflowed.
    pub fn push(&mut self, packet: Packet, now: SimTime) -> Option<Packet> {
        self.entries.push_back((packet, now));
        if self.entries.len() > self.capacity {
            self.entries.pop_front().map(|(p, _)| p)
        } else {
            None
        }
    }

    pub fn remove_uid(&mut self, uid: u64) -> Option<Packet> {
        let idx = self.entries.iter().position(|(p, _)| p.uid == uid)?;
        self.entries.remove(idx).map(|(p, _)| p)
    }

    pub fn has_packets_for(&self, dst: NodeId) -> bool {
        self.entries.iter().any(|(p, _)| p.dst == dst)
    }

    /// Removes all packets for `dst` in FIFO order: `(fresh, timed_out)`.
    pub fn take_for(&mut self, dst: NodeId, now: SimTime) -> (Vec<Packet>, Vec<Packet>) {
        let mut fresh = Vec::new();
        let mut expired = Vec::new();
        let mut keep = VecDeque::with_capacity(self.entries.len());
        for (p, at) in self.entries.drain(..) {
            if p.dst != dst {
                keep.push_back((p, at));
            } else if now.since(at) >= self.timeout {
                expired.push(p);
            } else {
                fresh.push(p);
            }
        }
        self.entries = keep;
        (fresh, expired)
    }

    pub fn destinations(&self) -> Vec<NodeId> {
        let mut d: Vec<NodeId> = self.entries.iter().map(|(p, _)| p.dst).collect();
        d.sort();
        d.dedup();
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{DataBody, Payload};

    fn data(uid: u64, dst: u32) -> Packet {
        Packet {
            uid,
            src: NodeId(0),
            dst: NodeId(dst),
            prev_hop: NodeId(0),
            ttl: 64,
            size_bits: 4352,
            payload: Payload::Data(DataBody {
                flow: 0,
                seq: uid,
                created_at: SimTime::ZERO,
                payload_bits: 4096,
                route: None,
                salvaged: 0,
            }),
        }
    }

    #[test]
    fn insert_into_empty_is_accepted() {
        let mut b = SendBuffer::new(64, Duration::from_secs(30));
        assert!(b.push(data(1, 1), SimTime::ZERO).is_none());
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn overflow_evicts_oldest() {
        let mut b = SendBuffer::new(64, Duration::from_secs(30));
        for i in 0..64 {
            assert!(b.push(data(i, 1), SimTime::ZERO).is_none());
        }
        let evicted = b.push(data(64, 1), SimTime::ZERO).unwrap();
        assert_eq!(evicted.uid, 0);
        assert_eq!(b.len(), 64);
    }

    #[test]
    fn timeout_boundary() {
        let mut b = SendBuffer::new(64, Duration::from_secs(30));
        b.push(data(1, 1), SimTime::ZERO);
        b.push(data(2, 1), SimTime::from_millis(5));
        b.push(data(3, 2), SimTime::ZERO);
        let (fresh, expired) = b.take_for(NodeId(1), SimTime::from_millis(30_001));
        assert_eq!(expired.iter().map(|p| p.uid).collect::<Vec<_>>(), vec![1]);
        assert_eq!(fresh.iter().map(|p| p.uid).collect::<Vec<_>>(), vec![2]);
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn drains_in_fifo_order() {
        let mut b = SendBuffer::new(8, Duration::from_secs(30));
        for i in [5, 3, 9] {
            b.push(data(i, 1), SimTime::ZERO);
        }
        let (fresh, _) = b.take_for(NodeId(1), SimTime::ZERO);
        assert_eq!(fresh.iter().map(|p| p.uid).collect::<Vec<_>>(), vec![5, 3, 9]);
    }
}
