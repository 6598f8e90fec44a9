use std::collections::VecDeque;

use rustc_hash::FxHashSet;

use crate::engine::packet::has_repeats;
use crate::engine::{Link, NodeId, SimTime};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CachedPath {
    pub nodes: Vec<NodeId>,
    pub added_at: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Added {
    /// Not owner-anchored, too short, or looping.
    Rejected,
    Duplicate,
    Inserted,
    /// Inserted after evicting the oldest path.
    Evicted,
}

/// Capacity-bounded path cache. Paths start at the owner; there is no expiry,
/// only FIFO eviction and link pruning.
#[derive(Debug)]
pub struct RouteCache {
    owner: NodeId,
    capacity: usize,
    paths: VecDeque<CachedPath>,
    index: FxHashSet<Vec<NodeId>>,
}

impl RouteCache {
    pub fn new(owner: NodeId, capacity: usize) -> Self {
        assert!(capacity > 0, "cache capacity must be positive");
        RouteCache {
            owner,
            capacity,
            paths: VecDeque::new(),
            index: FxHashSet::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn paths(&self) -> impl Iterator<Item = &CachedPath> {
        self.paths.iter()
    }

    /// Stores `nodes` (which must start at the owner and be loop-free).
    /// An already cached path keeps its original position.
    pub fn add(&mut self, nodes: &[NodeId], now: SimTime) -> Added {
        if nodes.len() < 2 || nodes[0] != self.owner || has_repeats(nodes) {
            return Added::Rejected;
        }
        if self.index.contains(nodes) {
            return Added::Duplicate;
        }
        let nodes = nodes.to_vec();
        let mut result = Added::Inserted;
        if self.paths.len() >= self.capacity {
            if let Some(old) = self.paths.pop_front() {
                self.index.remove(&old.nodes);
                result = Added::Evicted;
            }
        }
        self.index.insert(nodes.clone());
        self.paths.push_back(CachedPath { nodes, added_at: now });
        result
    }

    /// Shortest cached route to `target`; among equals the newest wins.
    pub fn lookup(&self, target: NodeId) -> Option<Vec<NodeId>> {
        self.lookup_avoiding(target, &[])
    }

    /// As [`lookup`](Self::lookup) but skipping routes through any node in `avoid`.
    pub fn lookup_avoiding(&self, target: NodeId, avoid: &[NodeId]) -> Option<Vec<NodeId>> {
        if target == self.owner {
            return None;
        }
        let mut best: Option<&[NodeId]> = None;
        for p in self.paths.iter().rev() {
            let Some(k) = p.nodes.iter().position(|&n| n == target) else {
                continue;
            };
            let candidate = &p.nodes[..=k];
            if candidate[1..].iter().any(|n| avoid.contains(n)) {
                continue;
            }
            if best.is_none_or(|b| candidate.len() < b.len()) {
                best = Some(candidate);
            }
        }
        best.map(<[NodeId]>::to_vec)
    }

    /// Truncates every path at the first use of `link` (either direction).
    /// Returns the number of paths affected.
    pub fn remove_link(&mut self, link: Link) -> usize {
        let uses = |nodes: &[NodeId]| {
            nodes
                .windows(2)
                .position(|w| (w[0] == link.from && w[1] == link.to) || (w[0] == link.to && w[1] == link.from))
        };
        let cuts: Vec<(usize, usize)> = self
            .paths
            .iter()
            .enumerate()
            .filter_map(|(k, p)| uses(&p.nodes).map(|i| (k, i)))
            .collect();
        for &(k, _) in &cuts {
            self.index.remove(&self.paths[k].nodes);
        }
        let mut dead = vec![false; self.paths.len()];
        for &(k, i) in &cuts {
            let p = &mut self.paths[k].nodes;
            p.truncate(i + 1);
            // A prefix already cached elsewhere keeps that entry.
            dead[k] = p.len() < 2 || !self.index.insert(p.clone());
        }
        if cuts.iter().any(|&(k, _)| dead[k]) {
            let mut k = 0;
            self.paths.retain(|_| {
                k += 1;
                !dead[k - 1]
            });
        }
        cuts.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(ids: &[u32]) -> Vec<NodeId> {
        ids.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn shortest_prefix_wins() {
        let mut c = RouteCache::new(NodeId(0), 8);
        c.add(&n(&[0, 1, 2, 3, 4]), SimTime::ZERO);
        c.add(&n(&[0, 5, 4]), SimTime::ZERO);
        assert_eq!(c.lookup(NodeId(4)), Some(n(&[0, 5, 4])));
        assert_eq!(c.lookup(NodeId(2)), Some(n(&[0, 1, 2])));
        assert_eq!(c.lookup(NodeId(9)), None);
        assert_eq!(c.lookup_avoiding(NodeId(4), &[NodeId(5)]), Some(n(&[0, 1, 2, 3, 4])));
    }

    #[test]
    fn fifo_eviction_without_refresh() {
        let mut c = RouteCache::new(NodeId(0), 2);
        assert_eq!(c.add(&n(&[0, 1]), SimTime::ZERO), Added::Inserted);
        assert_eq!(c.add(&n(&[0, 2]), SimTime::ZERO), Added::Inserted);
        assert_eq!(c.add(&n(&[0, 1]), SimTime::ZERO), Added::Duplicate);
        assert_eq!(c.add(&n(&[0, 3]), SimTime::ZERO), Added::Evicted);
        assert_eq!(c.lookup(NodeId(1)), None);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn link_pruning_truncates_both_directions() {
        let mut c = RouteCache::new(NodeId(0), 8);
        c.add(&n(&[0, 1, 2, 3]), SimTime::ZERO);
        c.add(&n(&[0, 2, 1]), SimTime::ZERO);
        assert_eq!(c.remove_link(Link::new(NodeId(2), NodeId(1))), 2);
        assert_eq!(c.lookup(NodeId(3)), None);
        assert_eq!(c.lookup(NodeId(1)), Some(n(&[0, 1])));
        assert_eq!(c.lookup(NodeId(2)), Some(n(&[0, 2])));
    }

    #[test]
    fn rejects_foreign_and_looping_paths() {
        let mut c = RouteCache::new(NodeId(0), 8);
        assert_eq!(c.add(&n(&[1, 2]), SimTime::ZERO), Added::Rejected);
        assert_eq!(c.add(&n(&[0, 2, 0]), SimTime::ZERO), Added::Rejected);
        assert!(c.is_empty());
    }
}
