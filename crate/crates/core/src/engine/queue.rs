use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::time::SimTime;

/// A scheduled occurrence. Events with equal `fire_at` pop in ascending `seq`.
#[derive(Debug)]
pub struct Event<K> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub kind: K,
}

impl<K> PartialEq for Event<K> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<K> Eq for Event<K> {}

impl<K> Ord for Event<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the earliest (fire_at, seq) wins.
        (other.fire_at, other.seq).cmp(&(self.fire_at, self.seq))
    }
}

impl<K> PartialOrd for Event<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-ordered event queue that also owns the simulation clock.
#[derive(Debug)]
pub struct EventQueue<K> {
    heap: BinaryHeap<Event<K>>,
    next_seq: u64,
    now: SimTime,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Enqueues `kind` at `fire_at` and returns its tie-break sequence number.
    ///
    /// Panics when `fire_at` lies before the current clock.
    pub fn schedule(&mut self, fire_at: SimTime, kind: K) -> u64 {
        assert!(
            fire_at >= self.now,
            "event scheduled in the past: {fire_at} < {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { fire_at, seq, kind });
        seq
    }

    /// Pops the next event if it fires no later than `horizon`, advancing the clock.
    pub fn pop_until(&mut self, horizon: SimTime) -> Option<Event<K>> {
        if self.heap.peek()?.fire_at > horizon {
            return None;
        }
        let ev = self.heap.pop()?;
        self.now = ev.fire_at;
        Some(ev)
    }

    pub fn pop(&mut self) -> Option<Event<K>> {
        self.pop_until(SimTime::MAX)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Pending events in unspecified order.
    pub fn pending(&self) -> impl Iterator<Item = &Event<K>> {
        self.heap.iter()
    }

    /// Moves the clock forward without popping (used to close a run at its horizon).
    pub(crate) fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_times_pop_in_seq_order() {
        let mut q = EventQueue::new();
        let t = SimTime::from_secs(5);
        for label in 0..7 {
            q.schedule(SimTime::from_secs(9), 100 + label);
        }
        let a = q.schedule(t, 7);
        let b = q.schedule(t, 9);
        assert!(a < b);
        assert_eq!(q.pop().unwrap().kind, 7);
        assert_eq!(q.pop().unwrap().kind, 9);
        let rest: Vec<_> = std::iter::from_fn(|| q.pop().map(|e| e.kind)).collect();
        assert_eq!(rest, (100..107).collect::<Vec<_>>());
    }

    #[test]
    fn zero_time_event_fires_first() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_secs(1), "late");
        q.schedule(SimTime::ZERO, "first");
        assert_eq!(q.pop().unwrap().kind, "first");
    }

    #[test]
    fn horizon_clamps_dequeue() {
        let horizon = SimTime::from_secs(10);
        let mut q = EventQueue::new();
        q.schedule(horizon, "at-horizon");
        q.schedule(SimTime::from_secs(11), "beyond");
        assert_eq!(q.pop_until(horizon).unwrap().kind, "at-horizon");
        assert!(q.pop_until(horizon).is_none());
        assert_eq!(q.now(), horizon);
        assert_eq!(q.len(), 1);
    }

    #[test]
    #[should_panic(expected = "in the past")]
    fn scheduling_in_the_past_panics() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_secs(2), ());
        q.pop();
        q.schedule(SimTime::from_secs(1), ());
    }
}
