use std::collections::BTreeMap;

use crate::engine::{NodeId, SimTime};

/// An in-progress source route discovery.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Discovery {
    pub attempt: u32,
    pub started: SimTime,
    pub rreq_id: u32,
    pub ttl: u32,
}

#[derive(Debug, Default)]
pub struct Discoveries {
    pending: BTreeMap<NodeId, Discovery>,
}

impl Discoveries {
    pub fn is_pending(&self, dst: NodeId) -> bool {
        self.pending.contains_key(&dst)
    }

    pub fn get(&self, dst: NodeId) -> Option<&Discovery> {
        self.pending.get(&dst)
    }

    pub fn begin(&mut self, dst: NodeId, now: SimTime, rreq_id: u32, ttl: u32) {
        let prev = self.pending.insert(
            dst,
            Discovery {
                attempt: 0,
                started: now,
                rreq_id,
                ttl,
            },
        );
        debug_assert!(prev.is_none(), "discovery for {dst} already running");
    }

    /// Records the next ring; returns the new attempt number.
    pub fn advance(&mut self, dst: NodeId, rreq_id: u32, ttl: u32) -> u32 {
        let d = self.pending.get_mut(&dst).expect("advance unknown discovery");
        d.attempt += 1;
        d.rreq_id = rreq_id;
        d.ttl = ttl;
        d.attempt
    }

    pub fn finish(&mut self, dst: NodeId) -> Option<Discovery> {
        self.pending.remove(&dst)
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}
