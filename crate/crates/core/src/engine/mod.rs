//! Deterministic discrete-event core.
//!
//! A [`Simulation`] owns the clock, the event queue, one radio per node, the
//! mobility model and one protocol instance per node. Protocol code sees the
//! world only through [`NodeCtx`].

pub mod log;
pub mod monitor;
pub mod packet;
pub mod queue;
pub mod radio;
pub mod time;

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metrics::{DropReason, TraceStats};
use crate::mobility::{LinkChangeKind, LinkScanner, Mobility};
use crate::routing::Protocol;

pub use self::log::{EventLog, MemoryLog};
pub use self::monitor::{BeaconConfig, LinkMonitor};
pub use self::packet::{DataBody, Link, NodeId, Packet, PacketKind, PacketSizes, Payload};
pub use self::queue::{Event, EventQueue};
pub use self::radio::{LinkDest, NodeRadio, TxRecord};
pub use self::time::SimTime;

/// TTL stamped on freshly generated DATA packets.
pub const DATA_TTL: u32 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct RadioConfig {
    pub bandwidth_bps: u64,
    pub range_m: f64,
    /// Upper bound of the uniform jitter added before queueing a broadcast.
    pub broadcast_jitter: Duration,
    pub sizes: PacketSizes,
    /// Sampling interval of the physical link-change scan.
    pub link_scan_interval: Duration,
    pub beacon: BeaconConfig,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            bandwidth_bps: 2_000_000,
            range_m: 250.0,
            broadcast_jitter: Duration::from_millis(10),
            sizes: PacketSizes::default(),
            link_scan_interval: Duration::from_millis(100),
            beacon: BeaconConfig::default(),
        }
    }
}

/// Constant-bit-rate source → destination stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Flow {
    pub src: NodeId,
    pub dst: NodeId,
    pub start: SimTime,
    pub interval: Duration,
    pub payload_bits: u32,
}

#[derive(Debug)]
pub enum EventKind<T> {
    Traffic {
        flow: u32,
    },
    Enqueue {
        node: NodeId,
        packet: Packet,
        dest: LinkDest,
    },
    TxDone {
        node: NodeId,
    },
    Arrival {
        node: NodeId,
        packet: Packet,
        overheard: bool,
    },
    TxFailed {
        node: NodeId,
        packet: Packet,
        to: NodeId,
    },
    Timer {
        node: NodeId,
        timer: T,
    },
    Beacon {
        node: NodeId,
    },
    LinkScan,
}

impl<T> EventKind<T> {
    /// The DATA packet this event carries, if it is a live copy (not an overheard one).
    fn live_data(&self) -> Option<&Packet> {
        match self {
            EventKind::Enqueue { packet, .. }
            | EventKind::TxFailed { packet, .. }
            | EventKind::Arrival {
                packet,
                overheard: false,
                ..
            } if packet.kind() == PacketKind::Data => Some(packet),
            _ => None,
        }
    }
}

/// Everything except the protocol instances.
pub struct World<T> {
    queue: EventQueue<EventKind<T>>,
    horizon: SimTime,
    config: RadioConfig,
    mobility: Mobility,
    radios: Vec<NodeRadio>,
    monitors: Vec<LinkMonitor>,
    scanner: LinkScanner,
    stats: TraceStats,
    transmissions: Vec<TxRecord>,
    rng: ChaCha8Rng,
    next_uid: u64,
    live_data: HashSet<u64>,
    flows: Vec<Flow>,
    flow_seq: Vec<u64>,
    promiscuous: bool,
    log: Option<EventLog>,
}

impl<T> fmt::Debug for World<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World")
            .field("now", &self.queue.now())
            .field("pending", &self.queue.len())
            .finish_non_exhaustive()
    }
}

impl<T> World<T> {
    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn config(&self) -> &RadioConfig {
        &self.config
    }

    pub fn node_count(&self) -> usize {
        self.radios.len()
    }

    pub fn stats(&self) -> &TraceStats {
        &self.stats
    }

    pub fn in_range(&self, a: NodeId, b: NodeId, at: SimTime) -> bool {
        a != b
            && self
                .mobility
                .position_at(a, at)
                .distance(self.mobility.position_at(b, at))
                <= self.config.range_m
    }

    /// Unit-disk neighbors of `node` at `at` (boundary inclusive).
    pub fn neighbors(&self, node: NodeId, at: SimTime) -> Vec<NodeId> {
        let here = self.mobility.position_at(node, at);
        (0..self.radios.len() as u32)
            .map(NodeId)
            .filter(|&j| j != node && self.mobility.position_at(j, at).distance(here) <= self.config.range_m)
            .collect()
    }

    /// Nodes other than `node` reachable in at most `hops` hops at `at`.
    pub fn nodes_within(&self, node: NodeId, hops: u32, at: SimTime) -> u64 {
        let n = self.radios.len();
        let mut depth = vec![u32::MAX; n];
        depth[node.index()] = 0;
        let mut frontier = vec![node];
        let mut count = 0;
        for d in 1..=hops {
            let mut next = Vec::new();
            for &u in &frontier {
                for v in self.neighbors(u, at) {
                    if depth[v.index()] == u32::MAX {
                        depth[v.index()] = d;
                        count += 1;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        count
    }

    fn log(&mut self, node: NodeId, event: &str, packet: Option<&Packet>, detail: fmt::Arguments<'_>) {
        if let Some(log) = self.log.as_mut() {
            log.record(self.queue.now(), node, event, packet, detail);
        }
    }

    fn enqueue(&mut self, node: NodeId, packet: Packet, dest: LinkDest) {
        assert!(packet.size_bits > 0, "packet without size");
        assert!(packet.ttl > 0, "packet forwarded with spent TTL");
        let radio = &mut self.radios[node.index()];
        radio.push(packet, dest);
        if radio.is_idle() {
            self.start_next(node);
        }
    }

    fn start_next(&mut self, node: NodeId) {
        let now = self.queue.now();
        let Some((packet, dest, air)) = self.radios[node.index()].begin_next(now) else {
            return;
        };
        let end = now + air;
        let (uid_kind, bits, grat) = (packet.kind(), packet.size_bits, packet.is_gratuitous_reply());
        let logged = self.log.is_some().then(|| packet.clone());
        self.stats.record_transmission(node, now, end, bits, uid_kind, grat);
        self.transmissions.push(TxRecord {
            node,
            start: now,
            end,
            bits,
            kind: uid_kind,
            gratuitous: grat,
        });
        if let Some(p) = logged {
            let to = match dest {
                LinkDest::Broadcast => NodeId::BROADCAST,
                LinkDest::Unicast(n) => n,
            };
            self.log(node, "tx", Some(&p), format_args!("to={to} ttl={}", p.ttl));
        }
        self.queue.schedule(end, EventKind::TxDone { node });
    }

    fn finish_tx(&mut self, node: NodeId) {
        let now = self.queue.now();
        let (packet, dest) = self.radios[node.index()].finish();
        let receivers = self.neighbors(node, now);
        match dest {
            LinkDest::Broadcast => {
                for r in receivers {
                    self.queue.schedule(
                        now,
                        EventKind::Arrival {
                            node: r,
                            packet: packet.clone(),
                            overheard: false,
                        },
                    );
                }
            }
            LinkDest::Unicast(to) => {
                if receivers.contains(&to) {
                    if self.promiscuous {
                        for &r in receivers.iter().filter(|&&r| r != to) {
                            self.queue.schedule(
                                now,
                                EventKind::Arrival {
                                    node: r,
                                    packet: packet.clone(),
                                    overheard: true,
                                },
                            );
                        }
                    }
                    self.queue.schedule(
                        now,
                        EventKind::Arrival {
                            node: to,
                            packet,
                            overheard: false,
                        },
                    );
                } else {
                    self.queue.schedule(now, EventKind::TxFailed { node, packet, to });
                }
            }
        }
        self.start_next(node);
    }

    fn scan_links(&mut self) {
        let now = self.queue.now();
        let positions = self.mobility.positions_at(now);
        for change in self.scanner.scan(now, &positions) {
            let broken = change.kind == LinkChangeKind::Broken;
            self.stats.record_link_change(now, broken);
            if self.log.is_some() {
                let ev = if broken { "link_down" } else { "link_up" };
                self.log(change.a, ev, None, format_args!("peer={}", change.b));
            }
        }
        let next = now + self.config.link_scan_interval;
        if next <= self.horizon {
            self.queue.schedule(next, EventKind::LinkScan);
        }
    }

    fn beacon_round(&mut self, node: NodeId) -> Vec<NodeId> {
        let now = self.queue.now();
        let cfg = self.config.beacon;
        let mut monitor = std::mem::take(&mut self.monitors[node.index()]);
        let broken = monitor.tick(now, &cfg, |n| self.in_range(node, n, now));
        if monitor.is_empty() {
            monitor.armed = false;
        } else {
            self.queue.schedule(now + cfg.period, EventKind::Beacon { node });
        }
        self.monitors[node.index()] = monitor;
        broken
    }

    fn resolve_data(&mut self, uid: u64) {
        assert!(
            self.live_data.remove(&uid),
            "data packet {uid} resolved twice or never originated"
        );
    }
}

/// A node's handle on the world while one of its protocol callbacks runs.
pub struct NodeCtx<'a, T> {
    world: &'a mut World<T>,
    node: NodeId,
}

impl<T> NodeCtx<'_, T> {
    pub fn id(&self) -> NodeId {
        self.node
    }

    pub fn now(&self) -> SimTime {
        self.world.queue.now()
    }

    pub fn node_count(&self) -> usize {
        self.world.node_count()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.world.rng
    }

    pub fn stats(&mut self) -> &mut TraceStats {
        &mut self.world.stats
    }

    /// Builds a packet with a fresh uid and size taken from the radio configuration.
    pub fn packet(&mut self, src: NodeId, dst: NodeId, ttl: u32, payload: Payload) -> Packet {
        let uid = self.world.next_uid;
        self.world.next_uid += 1;
        Packet {
            uid,
            src,
            dst,
            prev_hop: self.node,
            ttl,
            size_bits: self.world.config.sizes.bits_for(&payload),
            payload,
        }
    }

    /// Queues a broadcast after uniform jitter.
    pub fn broadcast(&mut self, packet: Packet) {
        if let Payload::Rreq(r) = &packet.payload {
            if packet.src == self.node && r.hop_count == 0 {
                let reach = self.world.nodes_within(self.node, packet.ttl, self.now());
                self.world.stats.ring_sizes.push(reach);
            }
        }
        let max = self.world.config.broadcast_jitter.as_micros() as u64;
        let jitter = Duration::from_micros(self.world.rng.random_range(0..=max));
        let at = self.now() + jitter;
        let node = self.node;
        self.world.queue.schedule(
            at,
            EventKind::Enqueue {
                node,
                packet,
                dest: LinkDest::Broadcast,
            },
        );
    }

    pub fn unicast(&mut self, packet: Packet, to: NodeId) {
        debug_assert_ne!(to, self.node, "unicast to self");
        self.world.enqueue(self.node, packet, LinkDest::Unicast(to));
    }

    pub fn set_timer(&mut self, after: Duration, timer: T) {
        let at = self.now() + after;
        let node = self.node;
        self.world.queue.schedule(at, EventKind::Timer { node, timer });
    }

    /// Hands a DATA packet to the local application.
    pub fn deliver(&mut self, packet: Packet) {
        let data = packet.data().expect("deliver non-data packet");
        let delay = self.now() - data.created_at;
        self.world.resolve_data(packet.uid);
        self.world.stats.record_delivery(data.flow, delay, data.payload_bits);
        let node = self.node;
        self.world.log(
            node,
            "deliver",
            Some(&packet),
            format_args!("delay_us={}", delay.as_micros()),
        );
    }

    pub fn drop_data(&mut self, packet: Packet, reason: DropReason) {
        debug_assert_eq!(packet.kind(), PacketKind::Data);
        self.world.resolve_data(packet.uid);
        self.world.stats.record_drop(reason);
        let node = self.node;
        self.world
            .log(node, "drop", Some(&packet), format_args!("{}", reason.as_str()));
    }

    /// Link-layer beacon watch on `neighbor` until `until`.
    pub fn watch_link(&mut self, neighbor: NodeId, until: SimTime) {
        let now = self.now();
        let period = self.world.config.beacon.period;
        let monitor = &mut self.world.monitors[self.node.index()];
        monitor.watch(neighbor, until);
        if !monitor.armed {
            monitor.armed = true;
            let node = self.node;
            self.world
                .queue
                .schedule(monitor::next_beacon_slot(now, period), EventKind::Beacon { node });
        }
    }

    pub fn log_event(&mut self, event: &str, packet: Option<&Packet>, detail: fmt::Arguments<'_>) {
        let node = self.node;
        self.world.log(node, event, packet, detail);
    }
}

/// Result of a finished run.
#[derive(Debug)]
pub struct RunOutput {
    pub stats: TraceStats,
    pub transmissions: Vec<TxRecord>,
    /// Count of DATA packets the engine still tracked as live at the horizon.
    pub live_data: u64,
}

pub struct Simulation<P: Protocol> {
    world: World<P::Timer>,
    routers: Vec<P>,
    started: bool,
}

impl<P: Protocol> fmt::Debug for Simulation<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("world", &self.world)
            .field("nodes", &self.routers.len())
            .finish()
    }
}

impl<P: Protocol> Simulation<P> {
    pub fn new(
        config: RadioConfig,
        mobility: Mobility,
        flows: Vec<Flow>,
        horizon: SimTime,
        seed: u64,
        mut make: impl FnMut(NodeId) -> P,
    ) -> Self {
        let n = mobility.node_count();
        let radios = (0..n as u32)
            .map(|i| NodeRadio::new(NodeId(i), config.bandwidth_bps, config.range_m))
            .collect();
        let routers = (0..n as u32).map(|i| make(NodeId(i))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let stats = TraceStats::new(n, Duration::from_micros(horizon.as_micros()), flows.len());
        let world = World {
            queue: EventQueue::new(),
            horizon,
            scanner: LinkScanner::new(n, config.range_m),
            config,
            mobility,
            radios,
            monitors: (0..n).map(|_| LinkMonitor::default()).collect(),
            stats,
            transmissions: Vec::new(),
            rng,
            next_uid: 0,
            live_data: HashSet::new(),
            flow_seq: vec![0; flows.len()],
            flows,
            promiscuous: P::PROMISCUOUS,
            log: None,
        };
        Simulation {
            world,
            routers,
            started: false,
        }
    }

    pub fn with_event_log(mut self, out: Box<dyn Write>) -> Self {
        self.world.log = Some(EventLog::new(out));
        self
    }

    pub fn world(&self) -> &World<P::Timer> {
        &self.world
    }

    pub fn routers(&self) -> &[P] {
        &self.routers
    }

    pub fn router(&self, node: NodeId) -> &P {
        &self.routers[node.index()]
    }

    fn start(&mut self) {
        self.started = true;
        let w = &mut self.world;
        w.queue.schedule(SimTime::ZERO, EventKind::LinkScan);
        for (i, f) in w.flows.iter().enumerate() {
            if f.start <= w.horizon {
                w.queue.schedule(f.start, EventKind::Traffic { flow: i as u32 });
            }
        }
        for (i, r) in self.routers.iter_mut().enumerate() {
            let mut cx = NodeCtx {
                world: &mut self.world,
                node: NodeId(i as u32),
            };
            r.start(&mut cx);
        }
    }

    /// Processes events up to and including `until` (clamped to the horizon).
    pub fn run_until(&mut self, until: SimTime) {
        if !self.started {
            self.start();
        }
        let limit = until.min(self.world.horizon);
        while let Some(ev) = self.world.queue.pop_until(limit) {
            self.dispatch(ev.kind);
        }
        self.world.queue.advance_to(limit);
    }

    pub fn run(&mut self) {
        self.run_until(self.world.horizon);
    }

    fn ctx(&mut self, node: NodeId) -> (&mut P, NodeCtx<'_, P::Timer>) {
        (
            &mut self.routers[node.index()],
            NodeCtx {
                world: &mut self.world,
                node,
            },
        )
    }

    fn dispatch(&mut self, kind: EventKind<P::Timer>) {
        match kind {
            EventKind::Traffic { flow } => self.originate(flow),
            EventKind::Enqueue { node, packet, dest } => self.world.enqueue(node, packet, dest),
            EventKind::TxDone { node } => self.world.finish_tx(node),
            EventKind::Arrival {
                node,
                packet,
                overheard,
            } => {
                if self.world.log.is_some() {
                    let ev = if overheard { "overhear" } else { "rx" };
                    self.world
                        .log(node, ev, Some(&packet), format_args!("from={}", packet.prev_hop));
                }
                let (r, mut cx) = self.ctx(node);
                if overheard {
                    r.on_overhear(&mut cx, &packet);
                } else {
                    r.on_receive(&mut cx, packet);
                }
            }
            EventKind::TxFailed { node, packet, to } => {
                self.world.log(node, "tx_fail", Some(&packet), format_args!("to={to}"));
                let (r, mut cx) = self.ctx(node);
                r.on_tx_failed(&mut cx, packet, to);
            }
            EventKind::Timer { node, timer } => {
                let (r, mut cx) = self.ctx(node);
                r.on_timer(&mut cx, timer);
            }
            EventKind::Beacon { node } => {
                for n in self.world.beacon_round(node) {
                    self.world
                        .log(node, "link_broken", None, format_args!("peer={n} via=beacon"));
                    let (r, mut cx) = self.ctx(node);
                    r.on_link_broken(&mut cx, n);
                }
            }
            EventKind::LinkScan => self.world.scan_links(),
        }
    }

    fn originate(&mut self, flow: u32) {
        let f = self.world.flows[flow as usize].clone();
        let seq = self.world.flow_seq[flow as usize];
        self.world.flow_seq[flow as usize] += 1;
        let now = self.world.now();
        let body = DataBody {
            flow,
            seq,
            created_at: now,
            payload_bits: f.payload_bits,
            route: None,
            salvaged: 0,
        };
        let (r, mut cx) = self.ctx(f.src);
        let packet = cx.packet(f.src, f.dst, DATA_TTL, Payload::Data(body));
        cx.world.live_data.insert(packet.uid);
        cx.world.stats.data_originated += 1;
        cx.log_event("originate", Some(&packet), format_args!("flow={flow} dst={}", f.dst));
        r.on_data(&mut cx, packet);
        let next = now + f.interval;
        if next <= self.world.horizon {
            self.world.queue.schedule(next, EventKind::Traffic { flow });
        }
    }

    /// DATA packets sitting in radios, pending events and protocol buffers.
    pub fn data_in_flight(&self) -> u64 {
        let in_radios: usize = self
            .world
            .radios
            .iter()
            .map(|r| r.queued().filter(|p| p.kind() == PacketKind::Data).count())
            .sum();
        let in_events = self
            .world
            .queue
            .pending()
            .filter(|e| e.kind.live_data().is_some())
            .count();
        let in_buffers: usize = self.routers.iter().map(|r| r.buffered_data()).sum();
        (in_radios + in_events + in_buffers) as u64
    }

    /// Runs to the horizon (if not done yet) and returns the trace.
    pub fn finish(mut self) -> std::io::Result<RunOutput> {
        self.run();
        let in_flight = self.data_in_flight();
        let mut stats = std::mem::take(&mut self.world.stats);
        stats.data_in_flight = in_flight;
        if let Some(log) = self.world.log.take() {
            log.finish()?;
        }
        Ok(RunOutput {
            stats,
            transmissions: std::mem::take(&mut self.world.transmissions),
            live_data: self.world.live_data.len() as u64,
        })
    }
}
