//! Next-hop routing table with destination sequence numbers (AODV, DYMO).

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{NodeId, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteState {
    Valid,
    Invalid,
    UnderRepair,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub dest_seq: u64,
    /// False for neighbor routes installed without sequence information.
    pub seq_known: bool,
    pub hop_count: u32,
    pub next_hop: NodeId,
    pub lifetime: SimTime,
    pub precursors: BTreeSet<NodeId>,
    pub state: RouteState,
    /// The entry counts as active (it carried data recently) until this instant.
    pub active_until: SimTime,
    /// Originator of the last data packet forwarded on this entry.
    pub last_src: Option<NodeId>,
}

impl RouteEntry {
    pub fn usable(&self, now: SimTime) -> bool {
        self.state == RouteState::Valid && self.lifetime >= now
    }

    pub fn is_active(&self, now: SimTime) -> bool {
        now < self.active_until && self.usable(now)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Offer {
    Installed,
    /// Same route as before; lifetime extended.
    Refreshed,
    Rejected,
}

impl Offer {
    pub fn accepted(self) -> bool {
        self != Offer::Rejected
    }
}

#[derive(Debug, Default)]
pub struct RouteTable {
    entries: BTreeMap<NodeId, RouteEntry>,
}

impl RouteTable {
    pub fn get(&self, dest: NodeId) -> Option<&RouteEntry> {
        self.entries.get(&dest)
    }

    pub fn get_mut(&mut self, dest: NodeId) -> Option<&mut RouteEntry> {
        self.entries.get_mut(&dest)
    }

    /// Valid, unexpired entry for `dest`.
    pub fn route(&self, dest: NodeId, now: SimTime) -> Option<&RouteEntry> {
        self.entries.get(&dest).filter(|e| e.usable(now))
    }

    pub fn iter(&self) -> impl Iterator<Item = &RouteEntry> {
        self.entries.values()
    }

    /// Applies the freshness rule: a usable entry is replaced only by a greater
    /// sequence number, or an equal one with fewer hops. A route without
    /// sequence information never replaces a usable entry.
    pub fn offer(
        &mut self,
        dest: NodeId,
        seq: Option<u64>,
        hop_count: u32,
        next_hop: NodeId,
        lifetime: SimTime,
        now: SimTime,
    ) -> Offer {
        let fresh = |e: &mut RouteEntry| {
            e.hop_count = hop_count;
            e.next_hop = next_hop;
            e.lifetime = lifetime;
            e.state = RouteState::Valid;
            if let Some(s) = seq {
                e.dest_seq = e.dest_seq.max(s);
                e.seq_known = true;
            }
        };
        let Some(e) = self.entries.get_mut(&dest) else {
            self.entries.insert(
                dest,
                RouteEntry {
                    dest,
                    dest_seq: seq.unwrap_or(0),
                    seq_known: seq.is_some(),
                    hop_count,
                    next_hop,
                    lifetime,
                    precursors: BTreeSet::new(),
                    state: RouteState::Valid,
                    active_until: SimTime::ZERO,
                    last_src: None,
                },
            );
            return Offer::Installed;
        };
        let same_path = e.next_hop == next_hop && e.hop_count == hop_count;
        if e.state == RouteState::UnderRepair {
            // Only a fresher answer than the one the repair asked for will do.
            return match seq {
                Some(s) if s >= e.dest_seq => {
                    fresh(e);
                    Offer::Installed
                }
                _ => Offer::Rejected,
            };
        }
        if !e.usable(now) {
            return match seq {
                Some(s) if s < e.dest_seq && e.seq_known => Offer::Rejected,
                _ => {
                    e.active_until = SimTime::ZERO;
                    fresh(e);
                    Offer::Installed
                }
            };
        }
        match seq {
            None => {
                if same_path {
                    e.lifetime = e.lifetime.max(lifetime);
                    Offer::Refreshed
                } else {
                    Offer::Rejected
                }
            }
            Some(s) => {
                if !e.seq_known || s > e.dest_seq || (s == e.dest_seq && hop_count < e.hop_count) {
                    fresh(e);
                    Offer::Installed
                } else if s == e.dest_seq && same_path {
                    e.lifetime = e.lifetime.max(lifetime);
                    Offer::Refreshed
                } else {
                    Offer::Rejected
                }
            }
        }
    }

    pub fn refresh(&mut self, dest: NodeId, until: SimTime) {
        if let Some(e) = self.entries.get_mut(&dest) {
            if e.state == RouteState::Valid {
                e.lifetime = e.lifetime.max(until);
            }
        }
    }

    /// Marks `dest` unreachable and bumps its sequence number. Returns the new
    /// sequence number and the precursors that relied on it.
    pub fn invalidate(&mut self, dest: NodeId) -> Option<(u64, BTreeSet<NodeId>)> {
        let e = self.entries.get_mut(&dest)?;
        if e.state == RouteState::Invalid {
            return None;
        }
        e.state = RouteState::Invalid;
        e.dest_seq += 1;
        e.seq_known = true;
        e.active_until = SimTime::ZERO;
        Some((e.dest_seq, std::mem::take(&mut e.precursors)))
    }

    /// Destinations of valid (or under-repair, if asked) entries routed via `next_hop`.
    pub fn via(&self, next_hop: NodeId, include_repair: bool) -> Vec<NodeId> {
        self.entries
            .values()
            .filter(|e| e.next_hop == next_hop)
            .filter(|e| e.state == RouteState::Valid || (include_repair && e.state == RouteState::UnderRepair))
            .map(|e| e.dest)
            .collect()
    }

    pub fn has_active_route(&self, now: SimTime) -> bool {
        self.entries.values().any(|e| e.is_active(now))
    }

    /// Next hops of active routes.
    pub fn active_next_hops(&self, now: SimTime) -> BTreeSet<NodeId> {
        self.entries
            .values()
            .filter(|e| e.is_active(now))
            .map(|e| e.next_hop)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: SimTime = SimTime::ZERO;

    fn until() -> SimTime {
        SimTime::from_secs(10)
    }

    #[test]
    fn freshness_rule() {
        let mut t = RouteTable::default();
        let d = NodeId(9);
        assert_eq!(t.offer(d, Some(5), 4, NodeId(1), until(), T), Offer::Installed);
        assert_eq!(t.offer(d, Some(4), 1, NodeId(2), until(), T), Offer::Rejected);
        assert_eq!(t.offer(d, Some(5), 4, NodeId(2), until(), T), Offer::Rejected);
        assert_eq!(t.offer(d, Some(5), 3, NodeId(2), until(), T), Offer::Installed);
        assert_eq!(t.get(d).unwrap().next_hop, NodeId(2));
        assert_eq!(t.offer(d, None, 1, NodeId(3), until(), T), Offer::Rejected);
        assert_eq!(t.offer(d, Some(6), 7, NodeId(4), until(), T), Offer::Installed);
        assert_eq!(t.get(d).unwrap().dest_seq, 6);
    }

    #[test]
    fn invalidation_bumps_seq_and_returns_precursors() {
        let mut t = RouteTable::default();
        let d = NodeId(9);
        t.offer(d, Some(5), 2, NodeId(1), until(), T);
        t.get_mut(d).unwrap().precursors.insert(NodeId(4));
        let (seq, pre) = t.invalidate(d).unwrap();
        assert_eq!(seq, 6);
        assert_eq!(pre.into_iter().collect::<Vec<_>>(), vec![NodeId(4)]);
        assert!(t.route(d, T).is_none());
        assert!(t.invalidate(d).is_none());
        // Stale news is ignored, fresh news revives the entry.
        assert_eq!(t.offer(d, Some(5), 1, NodeId(2), until(), T), Offer::Rejected);
        assert_eq!(t.offer(d, Some(6), 3, NodeId(2), until(), T), Offer::Installed);
    }

    #[test]
    fn expired_entries_are_unusable() {
        let mut t = RouteTable::default();
        t.offer(NodeId(2), Some(1), 1, NodeId(2), SimTime::from_secs(1), T);
        assert!(t.route(NodeId(2), SimTime::from_secs(1)).is_some());
        assert!(t.route(NodeId(2), SimTime::from_millis(1_001)).is_none());
    }
}
