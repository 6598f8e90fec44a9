use std::collections::BTreeMap;
use std::time::Duration;

use crate::engine::{NodeId, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HelloConfig {
    pub interval: Duration,
    pub allowed_loss: u32,
}

impl Default for HelloConfig {
    fn default() -> Self {
        HelloConfig {
            interval: Duration::from_secs(1),
            allowed_loss: 2,
        }
    }
}

impl HelloConfig {
    pub fn loss_window(&self) -> Duration {
        self.interval * self.allowed_loss
    }
}

/// Last reception time per neighbor. Any packet counts as a sign of life.
#[derive(Debug, Default)]
pub struct HelloState {
    last_heard: BTreeMap<NodeId, SimTime>,
}

impl HelloState {
    pub fn heard(&mut self, from: NodeId, now: SimTime) {
        self.last_heard.insert(from, now);
    }

    pub fn last_heard(&self, n: NodeId) -> Option<SimTime> {
        self.last_heard.get(&n).copied()
    }

    /// Silent for longer than `allowed_loss × interval`. Never-heard neighbors count as lost.
    pub fn is_lost(&self, n: NodeId, now: SimTime, cfg: &HelloConfig) -> bool {
        match self.last_heard(n) {
            Some(t) => now.since(t) > cfg.loss_window(),
            None => true,
        }
    }

    pub fn forget(&mut self, n: NodeId) {
        self.last_heard.remove(&n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_beyond_two_intervals_is_loss() {
        let cfg = HelloConfig::default();
        let mut h = HelloState::default();
        h.heard(NodeId(3), SimTime::from_secs(10));
        assert!(!h.is_lost(NodeId(3), SimTime::from_secs(12), &cfg));
        assert!(h.is_lost(NodeId(3), SimTime::from_millis(12_500), &cfg));
    }
}
