use std::time::Duration;

/// Expanding ring search: TTL-bounded rings up to a threshold, then
/// network-wide retries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ErsSchedule {
    pub ttl_start: u32,
    pub ttl_increment: u32,
    pub ttl_threshold: u32,
    pub net_diameter: u32,
    /// Network-wide attempts after the local rings.
    pub max_attempts: u32,
    pub ring_wait_per_ttl: Duration,
}

impl Default for ErsSchedule {
    fn default() -> Self {
        ErsSchedule {
            ttl_start: 1,
            ttl_increment: 2,
            ttl_threshold: 7,
            net_diameter: 35,
            max_attempts: 3,
            ring_wait_per_ttl: Duration::from_millis(50),
        }
    }
}

impl ErsSchedule {
    /// Number of rings below or at the threshold.
    pub fn local_rings(&self) -> u32 {
        if self.ttl_start > self.ttl_threshold {
            return 0;
        }
        (self.ttl_threshold - self.ttl_start).div_ceil(self.ttl_increment.max(1)) + 1
    }

    /// Total rings tried before giving up.
    pub fn max_rings(&self) -> u32 {
        self.local_rings() + self.max_attempts
    }

    /// TTL and wait for `attempt` (0-based), or `None` once exhausted.
    pub fn next(&self, attempt: u32) -> Option<(u32, Duration)> {
        let ttl = if attempt < self.local_rings() {
            (self.ttl_start + attempt * self.ttl_increment).min(self.ttl_threshold)
        } else if attempt < self.max_rings() {
            self.net_diameter
        } else {
            return None;
        };
        Some((ttl, self.wait_for(ttl)))
    }

    pub fn wait_for(&self, ttl: u32) -> Duration {
        2 * self.ring_wait_per_ttl * ttl
    }
}
