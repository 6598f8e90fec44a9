use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use crate::engine::{NodeId, SimTime};

/// Flood suppression: remembers `(originator, id)` pairs for `horizon`.
#[derive(Debug)]
pub struct RreqSeen {
    horizon: Duration,
    first_seen: BTreeMap<(NodeId, u32), SimTime>,
    order: VecDeque<(SimTime, (NodeId, u32))>,
}

impl RreqSeen {
    pub fn new(horizon: Duration) -> Self {
        RreqSeen {
            horizon,
            first_seen: BTreeMap::new(),
            order: VecDeque::new(),
        }
    }

    /// True the first time a pair is seen within the horizon; records it.
    pub fn insert(&mut self, orig: NodeId, id: u32, now: SimTime) -> bool {
        self.prune(now);
        let key = (orig, id);
        if self.first_seen.contains_key(&key) {
            return false;
        }
        self.first_seen.insert(key, now);
        self.order.push_back((now, key));
        true
    }

    pub fn contains(&self, orig: NodeId, id: u32) -> bool {
        self.first_seen.contains_key(&(orig, id))
    }

    fn prune(&mut self, now: SimTime) {
        while let Some(&(at, key)) = self.order.front() {
            if now.since(at) < self.horizon {
                break;
            }
            self.order.pop_front();
            self.first_seen.remove(&key);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_within_horizon() {
        let mut s = RreqSeen::new(Duration::from_secs(10));
        assert!(s.insert(NodeId(1), 7, SimTime::ZERO));
        assert!(!s.insert(NodeId(1), 7, SimTime::from_secs(9)));
        assert!(s.insert(NodeId(2), 7, SimTime::from_secs(9)));
        assert!(s.insert(NodeId(1), 7, SimTime::from_secs(10)));
    }
}
