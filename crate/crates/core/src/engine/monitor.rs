use std::collections::BTreeMap;
use std::time::Duration;

use super::packet::NodeId;
use super::time::SimTime;

/// Link-layer beacon monitoring used by the link-layer-feedback AODV variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BeaconConfig {
    /// 100 checks per second.
    pub period: Duration,
    /// Consecutive failed checks before the link is declared broken.
    pub failure_limit: u32,
}

impl Default for BeaconConfig {
    fn default() -> Self {
        BeaconConfig {
            period: Duration::from_millis(10),
            failure_limit: 8,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Watch {
    until: SimTime,
    failures: u32,
}

/// Per-node set of watched neighbors with consecutive-failure counters.
#[derive(Debug, Default)]
pub struct LinkMonitor {
    watches: BTreeMap<NodeId, Watch>,
    pub(crate) armed: bool,
}

impl LinkMonitor {
    /// Starts or extends watching `neighbor` until `until`.
    pub fn watch(&mut self, neighbor: NodeId, until: SimTime) {
        self.watches
            .entry(neighbor)
            .and_modify(|w| w.until = w.until.max(until))
            .or_insert(Watch { until, failures: 0 });
    }

    pub fn is_watching(&self, neighbor: NodeId) -> bool {
        self.watches.contains_key(&neighbor)
    }

    pub fn is_empty(&self) -> bool {
        self.watches.is_empty()
    }

    /// One beacon round. Returns neighbors whose failure count reached the limit;
    /// those are no longer watched.
    pub fn tick(&mut self, now: SimTime, cfg: &BeaconConfig, mut reachable: impl FnMut(NodeId) -> bool) -> Vec<NodeId> {
        let mut broken = Vec::new();
        self.watches.retain(|&n, w| {
            if w.until < now {
                return false;
            }
            if reachable(n) {
                w.failures = 0;
                true
            } else {
                w.failures += 1;
                if w.failures >= cfg.failure_limit {
                    broken.push(n);
                    false
                } else {
                    true
                }
            }
        });
        broken
    }
}

/// First beacon slot strictly after `now` on the global period grid.
pub fn next_beacon_slot(now: SimTime, period: Duration) -> SimTime {
    let p = period.as_micros() as u64;
    SimTime::from_micros((now.as_micros() / p + 1) * p)
}
