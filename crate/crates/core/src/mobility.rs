//! Random waypoint mobility and physical link-change detection.
//!
//! Every trajectory is generated up front as a list of legs, so a position
//! query is a binary search plus one interpolation and never depends on the
//! order of earlier queries.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{NodeId, SimTime};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(width: f64, height: f64) -> Self {
        Area { width, height }
    }

    pub fn contains(&self, p: Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(self, to: Position, f: f64) -> Position {
        Position {
            x: self.x + (to.x - self.x) * f,
            y: self.y + (to.y - self.y) * f,
        }
    }
}

/// One leg: hold at `origin` until `leg_start`, then travel to `target` at `speed`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaypointState {
    pub origin: Position,
    pub target: Position,
    pub leg_start: SimTime,
    pub speed: f64,
}

impl WaypointState {
    pub fn travel_time(&self) -> Duration {
        if self.speed <= 0.0 {
            return Duration::ZERO;
        }
        Duration::from_secs_f64(self.origin.distance(self.target) / self.speed)
    }

    pub fn arrival(&self) -> SimTime {
        self.leg_start + self.travel_time()
    }

    fn position_at(&self, t: SimTime) -> Position {
        if t <= self.leg_start || self.speed <= 0.0 {
            return self.origin;
        }
        let len = self.origin.distance(self.target);
        if len == 0.0 {
            return self.target;
        }
        let travelled = self.speed * (t - self.leg_start).as_secs_f64();
        if travelled >= len {
            self.target
        } else {
            self.origin.lerp(self.target, travelled / len)
        }
    }
}

/// Piecewise-linear path of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    legs: Vec<WaypointState>,
}

impl Trajectory {
    pub fn stationary(at: Position) -> Self {
        Trajectory {
            legs: vec![WaypointState {
                origin: at,
                target: at,
                leg_start: SimTime::MAX,
                speed: 0.0,
            }],
        }
    }

    /// Starts a scripted trajectory at `at`; extend it with [`Trajectory::move_to`].
    pub fn starting_at(at: Position) -> Self {
        Self::stationary(at)
    }

    /// Appends a leg that departs at `depart` (or on arrival of the previous leg,
    /// whichever is later) towards `target` at `speed`.
    pub fn move_to(mut self, depart: SimTime, target: Position, speed: f64) -> Self {
        assert!(speed > 0.0, "scripted legs need positive speed");
        let last = *self.legs.last().expect("non-empty");
        let (origin, ready) = if last.leg_start == SimTime::MAX {
            self.legs.pop();
            (last.origin, SimTime::ZERO)
        } else {
            (last.target, last.arrival())
        };
        self.legs.push(WaypointState {
            origin,
            target,
            leg_start: depart.max(ready),
            speed,
        });
        self
    }

    pub fn legs(&self) -> &[WaypointState] {
        &self.legs
    }

    pub fn position_at(&self, t: SimTime) -> Position {
        let idx = self.legs.partition_point(|l| l.leg_start <= t);
        if idx == 0 {
            self.legs[0].origin
        } else {
            self.legs[idx - 1].position_at(t)
        }
    }

    fn random_waypoint(area: Area, speed: f64, pause: Duration, horizon: SimTime, rng: &mut ChaCha8Rng) -> Self {
        let mut at = random_point(area, rng);
        if speed <= 0.0 {
            return Self::stationary(at);
        }
        let mut depart = SimTime::ZERO + pause;
        let mut legs = Vec::new();
        // Each node pauses first, then alternates legs and pauses.
        while depart < horizon {
            let target = random_point(area, rng);
            let leg = WaypointState {
                origin: at,
                target,
                leg_start: depart,
                speed,
            };
            depart = leg.arrival() + pause;
            at = target;
            legs.push(leg);
        }
        if legs.is_empty() {
            return Self::stationary(at);
        }
        Trajectory { legs }
    }
}

fn random_point(area: Area, rng: &mut ChaCha8Rng) -> Position {
    Position::new(rng.random_range(0.0..=area.width), rng.random_range(0.0..=area.height))
}

/// Positions of every node over time.
#[derive(Clone, Debug)]
pub struct Mobility {
    area: Area,
    trajectories: Vec<Trajectory>,
}

impl Mobility {
    /// Random waypoint with fixed `speed` (m/s) and `pause` between legs.
    pub fn random_waypoint(nodes: usize, area: Area, speed: f64, pause: Duration, horizon: SimTime, seed: u64) -> Self {
        let trajectories = (0..nodes)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1 + i as u64);
                Trajectory::random_waypoint(area, speed, pause, horizon, &mut rng)
            })
            .collect();
        Mobility { area, trajectories }
    }

    pub fn fixed(area: Area, positions: &[Position]) -> Self {
        Mobility {
            area,
            trajectories: positions.iter().copied().map(Trajectory::stationary).collect(),
        }
    }

    pub fn scripted(area: Area, trajectories: Vec<Trajectory>) -> Self {
        Mobility { area, trajectories }
    }

    pub fn area(&self) -> Area {
        self.area
    }

    pub fn node_count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn trajectory(&self, node: NodeId) -> &Trajectory {
        &self.trajectories[node.index()]
    }

    pub fn position_at(&self, node: NodeId, t: SimTime) -> Position {
        self.trajectories[node.index()].position_at(t)
    }

    pub fn positions_at(&self, t: SimTime) -> Vec<Position> {
        self.trajectories.iter().map(|tr| tr.position_at(t)).collect()
    }

    /// True when no node ever moves.
    pub fn is_static(&self) -> bool {
        self.trajectories.iter().all(|t| {
            t.legs
                .iter()
                .all(|l| l.leg_start == SimTime::MAX || l.origin == l.target)
        })
    }

    /// Samples every `dt` up to `horizon` and returns all range-threshold crossings.
    pub fn link_change_scan(&self, range_m: f64, dt: Duration, horizon: SimTime) -> Vec<LinkChange> {
        assert!(!dt.is_zero(), "scan interval must be positive");
        let mut scanner = LinkScanner::new(self.node_count(), range_m);
        let mut out = Vec::new();
        let mut t = SimTime::ZERO;
        while t <= horizon {
            out.extend(scanner.scan(t, &self.positions_at(t)));
            t = t + dt;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkChangeKind {
    Formed,
    Broken,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkChange {
    pub at: SimTime,
    pub a: NodeId,
    pub b: NodeId,
    pub kind: LinkChangeKind,
}

/// Tracks the in-range relation between scans. The first scan only sets the baseline.
#[derive(Clone, Debug)]
pub struct LinkScanner {
    nodes: usize,
    range_m: f64,
    up: Vec<bool>,
    primed: bool,
}

impl LinkScanner {
    pub fn new(nodes: usize, range_m: f64) -> Self {
        LinkScanner {
            nodes,
            range_m,
            up: vec![false; nodes * nodes.saturating_sub(1) / 2],
            primed: false,
        }
    }

    pub fn scan(&mut self, at: SimTime, positions: &[Position]) -> Vec<LinkChange> {
        debug_assert_eq!(positions.len(), self.nodes);
        let mut changes = Vec::new();
        let mut k = 0;
        for i in 0..self.nodes {
            for j in i + 1..self.nodes {
                let now_up = positions[i].distance(positions[j]) <= self.range_m;
                if self.primed && now_up != self.up[k] {
                    changes.push(LinkChange {
                        at,
                        a: NodeId(i as u32),
                        b: NodeId(j as u32),
                        kind: if now_up {
                            LinkChangeKind::Formed
                        } else {
                            LinkChangeKind::Broken
                        },
                    });
                }
                self.up[k] = now_up;
                k += 1;
            }
        }
        self.primed = true;
        changes
    }
}
