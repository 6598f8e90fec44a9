//! DSR: source routing over a path cache with cache-first discovery,
//! gratuitous replies, packet salvaging, piggybacked route errors and
//! promiscuous learning. DSR-M is the same protocol with a smaller cache.

pub mod cache;

use std::collections::{BTreeMap, VecDeque};

use crate::engine::packet::{has_repeats, RouteError, RouteReply, RouteRequest, SourceRouteHeader};
use crate::engine::{Link, NodeId, Packet, Payload};
use crate::metrics::DropReason;
use crate::routing::{self, Ctx, Discoveries, Protocol, RoutingConfig, RreqSeen, SendBuffer, Timer};

pub use self::cache::{Added, CachedPath, RouteCache};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsrVariant {
    Standard,
    SmallCache,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DsrConfig {
    pub routing: RoutingConfig,
    pub cache_capacity: usize,
    pub salvage_limit: u8,
    /// Replies the target sends per request (first copy plus disjoint later copies).
    pub max_target_replies: usize,
}

impl DsrConfig {
    pub fn for_variant(variant: DsrVariant) -> Self {
        DsrConfig {
            routing: RoutingConfig::default(),
            cache_capacity: match variant {
                DsrVariant::Standard => 1024,
                DsrVariant::SmallCache => 256,
            },
            salvage_limit: 1,
            max_target_replies: 3,
        }
    }
}

const REPLY_MEMORY: usize = 256;

#[derive(Debug)]
pub struct Dsr {
    id: NodeId,
    variant: DsrVariant,
    cfg: DsrConfig,
    rreq_id: u32,
    rerr_id: u32,
    cache: RouteCache,
    seen: RreqSeen,
    buffer: SendBuffer,
    discoveries: Discoveries,
    /// Broken links to announce on the next route request.
    piggyback: Vec<Link>,
    replied: BTreeMap<(NodeId, u32), Vec<Vec<NodeId>>>,
    replied_order: VecDeque<(NodeId, u32)>,
}

impl Dsr {
    pub fn new(id: NodeId, variant: DsrVariant, cfg: DsrConfig) -> Self {
        Dsr {
            id,
            variant,
            rreq_id: 0,
            rerr_id: 0,
            cache: RouteCache::new(id, cfg.cache_capacity),
            seen: RreqSeen::new(cfg.routing.rreq_seen_horizon),
            buffer: SendBuffer::new(cfg.routing.buffer_capacity, cfg.routing.buffer_timeout),
            discoveries: Discoveries::default(),
            piggyback: Vec::new(),
            replied: BTreeMap::new(),
            replied_order: VecDeque::new(),
            cfg,
        }
    }

    pub fn variant(&self) -> DsrVariant {
        self.variant
    }

    pub fn cache(&self) -> &RouteCache {
        &self.cache
    }

    pub fn pending_piggyback(&self) -> &[Link] {
        &self.piggyback
    }

    fn learn(&mut self, cx: &mut Ctx<'_>, path: &[NodeId]) {
        if self.cache.add(path, cx.now()) == Added::Evicted {
            cx.stats().cache_evictions += 1;
        }
    }

    /// Learns both directions of `hops` as seen from this node's position on it.
    fn learn_route(&mut self, cx: &mut Ctx<'_>, hops: &[NodeId]) {
        let Some(i) = hops.iter().position(|&n| n == self.id) else {
            return;
        };
        if i + 1 < hops.len() {
            self.learn(cx, &hops[i..]);
        }
        if i > 0 {
            let back: Vec<NodeId> = hops[..=i].iter().rev().copied().collect();
            self.learn(cx, &back);
        }
    }

    /// Promiscuous learning: this node is a neighbor of `transmitter`.
    fn learn_overheard(&mut self, cx: &mut Ctx<'_>, hops: &[NodeId], transmitter: NodeId) {
        if hops.contains(&self.id) {
            self.learn_route(cx, hops);
            return;
        }
        let Some(j) = hops.iter().position(|&n| n == transmitter) else {
            return;
        };
        let mut fwd = vec![self.id];
        fwd.extend_from_slice(&hops[j..]);
        self.learn(cx, &fwd);
        let mut back = vec![self.id];
        back.extend(hops[..=j].iter().rev());
        self.learn(cx, &back);
    }

    fn add_piggyback(&mut self, link: Link) {
        if !self.piggyback.contains(&link) {
            self.piggyback.push(link);
        }
    }

    fn route_data(&mut self, cx: &mut Ctx<'_>, mut packet: Packet) {
        let dst = packet.dst;
        match self.cache.lookup(dst) {
            Some(path) => {
                packet.data_mut().expect("data").route = Some(SourceRouteHeader::new(path));
                self.forward_routed(cx, packet);
            }
            None => {
                routing::buffer_data(&mut self.buffer, cx, packet);
                if !self.discoveries.is_pending(dst) {
                    self.start_discovery(cx, dst);
                }
            }
        }
    }

    /// Sends a source-routed packet to the hop after this node.
    fn forward_routed(&mut self, cx: &mut Ctx<'_>, mut packet: Packet) {
        let header = route_mut(&mut packet).expect("source-routed packet");
        debug_assert_eq!(header.current(), self.id, "packet held off its route");
        let next = header.advance().expect("forwarding past route end");
        cx.unicast(packet, next);
    }

    fn start_discovery(&mut self, cx: &mut Ctx<'_>, dst: NodeId) {
        cx.stats().discoveries_started += 1;
        let (ttl, wait) = self.cfg.routing.ers.next(0).expect("schedule has at least one ring");
        let id = self.send_rreq(cx, dst, ttl);
        self.discoveries.begin(dst, cx.now(), id, ttl);
        cx.set_timer(wait, Timer::Ring { dst, attempt: 0 });
    }

    fn send_rreq(&mut self, cx: &mut Ctx<'_>, dst: NodeId, ttl: u32) -> u32 {
        self.rreq_id += 1;
        let id = self.rreq_id;
        self.seen.insert(self.id, id, cx.now());
        let rreq = RouteRequest {
            id,
            orig_seq: 0,
            target_seq: None,
            hop_count: 0,
            record: vec![self.id],
            piggyback: std::mem::take(&mut self.piggyback),
            repair: false,
        };
        let p = cx.packet(self.id, dst, ttl, Payload::Rreq(rreq));
        cx.broadcast(p);
        id
    }

    fn ring_expired(&mut self, cx: &mut Ctx<'_>, dst: NodeId, attempt: u32) {
        match self.discoveries.get(dst) {
            Some(d) if d.attempt == attempt => {}
            _ => return,
        }
        if self.cache.lookup(dst).is_some() {
            self.route_found(cx, dst);
            return;
        }
        match self.cfg.routing.ers.next(attempt + 1) {
            Some((ttl, wait)) => {
                let id = self.send_rreq(cx, dst, ttl);
                let a = self.discoveries.advance(dst, id, ttl);
                cx.set_timer(wait, Timer::Ring { dst, attempt: a });
            }
            None => {
                self.discoveries.finish(dst);
                cx.stats().no_route_events += 1;
                cx.log_event("no_route", None, format_args!("dst={dst}"));
                routing::drop_buffered(&mut self.buffer, cx, dst, DropReason::NoRoute);
            }
        }
    }

    fn route_found(&mut self, cx: &mut Ctx<'_>, dst: NodeId) {
        let now = cx.now();
        if let Some(d) = self.discoveries.finish(dst) {
            let s = cx.stats();
            s.discoveries_succeeded += 1;
            s.discovery_durations_us.push((now - d.started).as_micros() as u64);
        }
        for p in routing::drain_buffered(&mut self.buffer, cx, dst) {
            self.route_data(cx, p);
        }
    }

    fn remember_reply(&mut self, key: (NodeId, u32), path: Vec<NodeId>) {
        if !self.replied.contains_key(&key) {
            self.replied_order.push_back(key);
            if self.replied_order.len() > REPLY_MEMORY {
                if let Some(old) = self.replied_order.pop_front() {
                    self.replied.remove(&old);
                }
            }
        }
        self.replied.entry(key).or_default().push(path);
    }

    fn should_reply(&self, key: (NodeId, u32), path: &[NodeId]) -> bool {
        let Some(earlier) = self.replied.get(&key) else {
            return true;
        };
        if earlier.len() >= self.cfg.max_target_replies {
            return false;
        }
        let inner = &path[1..path.len() - 1];
        earlier
            .iter()
            .all(|e| !e[1..e.len() - 1].iter().any(|n| inner.contains(n)))
    }

    fn handle_rreq(&mut self, cx: &mut Ctx<'_>, p: Packet, rreq: &RouteRequest) {
        if p.src == self.id || rreq.record.contains(&self.id) {
            return;
        }
        for &l in &rreq.piggyback {
            self.cache.remove_link(l);
        }
        let mut path = rreq.record.clone();
        path.push(self.id);
        let back: Vec<NodeId> = path.iter().rev().copied().collect();
        self.learn(cx, &back);
        let key = (p.src, rreq.id);
        if p.dst == self.id {
            if self.should_reply(key, &path) {
                self.remember_reply(key, path.clone());
                self.send_rrep(cx, self.id, p.src, path.clone(), &path, false);
            }
            return;
        }
        if !self.seen.insert(p.src, rreq.id, cx.now()) {
            return;
        }
        if let Some(suffix) = self.cache.lookup(p.dst) {
            let mut full = rreq.record.clone();
            full.extend_from_slice(&suffix);
            if !has_repeats(&full) {
                cx.stats().grat_replies += 1;
                self.send_rrep(cx, p.dst, p.src, full, &path, true);
                return;
            }
        }
        if let Some(mut fwd) = p.forwarded() {
            if let Payload::Rreq(r) = &mut fwd.payload {
                r.record.push(self.id);
                r.hop_count += 1;
            }
            cx.broadcast(fwd);
        }
    }

    /// `back` is the traversed part of the request, originator first.
    fn send_rrep(
        &mut self,
        cx: &mut Ctx<'_>,
        target: NodeId,
        orig: NodeId,
        path: Vec<NodeId>,
        back: &[NodeId],
        gratuitous: bool,
    ) {
        let route = SourceRouteHeader::new(back.iter().rev().copied().collect());
        let reply = RouteReply {
            target_seq: 0,
            hop_count: path.len() as u32 - 1,
            gratuitous,
            path,
            route: Some(route),
        };
        let p = cx.packet(target, orig, self.cfg.routing.reply_ttl, Payload::Rrep(reply));
        self.forward_routed(cx, p);
    }

    fn handle_rrep(&mut self, cx: &mut Ctx<'_>, mut p: Packet, rrep: &RouteReply) {
        self.learn_route(cx, &rrep.path);
        if p.dst == self.id {
            self.route_found(cx, p.src);
        } else if p.decrement_ttl() {
            self.forward_routed(cx, p);
        }
    }

    fn handle_rerr(&mut self, cx: &mut Ctx<'_>, mut p: Packet, rerr: &RouteError) {
        cx.stats().rerr_receivers += 1;
        if let Some(l) = rerr.broken {
            self.cache.remove_link(l);
            if p.dst == self.id {
                self.add_piggyback(l);
            }
        }
        if rerr.route.is_some() && p.dst != self.id && p.decrement_ttl() {
            self.forward_routed(cx, p);
        }
    }

    fn handle_data(&mut self, cx: &mut Ctx<'_>, mut p: Packet) {
        let hops = p
            .data()
            .and_then(|d| d.route.as_ref())
            .expect("source route on data")
            .hops
            .clone();
        self.learn_route(cx, &hops);
        if p.dst == self.id {
            cx.deliver(p);
        } else if p.decrement_ttl() {
            self.forward_routed(cx, p);
        } else {
            cx.drop_data(p, DropReason::TtlExpired);
        }
    }

    fn salvage(&mut self, cx: &mut Ctx<'_>, mut p: Packet, broken: Link) {
        let body = p.data_mut().expect("data");
        let header = body.route.as_ref().expect("source route on data");
        let me = header.cursor - 1;
        debug_assert_eq!(header.hops[me], self.id);
        let prefix: Vec<NodeId> = header.hops[..=me].to_vec();
        if body.salvaged < self.cfg.salvage_limit {
            let alt = self.cache.lookup_avoiding(p.dst, &prefix[..me]);
            if let Some(alt) = alt {
                let mut hops = prefix[..me].to_vec();
                hops.extend_from_slice(&alt);
                if !has_repeats(&hops) {
                    let body = p.data_mut().expect("data");
                    body.salvaged += 1;
                    body.route = Some(SourceRouteHeader { hops, cursor: me });
                    cx.stats().salvages += 1;
                    cx.log_event(
                        "salvage",
                        Some(&p),
                        format_args!("broken={}-{}", broken.from, broken.to),
                    );
                    self.broadcast_rerr(cx, broken);
                    self.forward_routed(cx, p);
                    return;
                }
            }
        }
        cx.stats().salvage_failures += 1;
        let src = p.src;
        cx.drop_data(p, DropReason::SalvageFailed);
        if me > 0 {
            self.rerr_id += 1;
            let rerr = RouteError {
                id: self.rerr_id,
                unreachable: Vec::new(),
                broken: Some(broken),
                route: Some(SourceRouteHeader::new(prefix.into_iter().rev().collect())),
            };
            let e = cx.packet(self.id, src, self.cfg.routing.reply_ttl, Payload::Rerr(rerr));
            self.forward_routed(cx, e);
        }
    }

    fn broadcast_rerr(&mut self, cx: &mut Ctx<'_>, broken: Link) {
        self.rerr_id += 1;
        let rerr = RouteError {
            id: self.rerr_id,
            unreachable: Vec::new(),
            broken: Some(broken),
            route: None,
        };
        let p = cx.packet(self.id, NodeId::BROADCAST, 1, Payload::Rerr(rerr));
        cx.broadcast(p);
    }
}

fn route_mut(p: &mut Packet) -> Option<&mut SourceRouteHeader> {
    match &mut p.payload {
        Payload::Data(d) => d.route.as_mut(),
        Payload::Rrep(r) => r.route.as_mut(),
        Payload::Rerr(r) => r.route.as_mut(),
        _ => None,
    }
}

fn route_of(p: &Packet) -> Option<&SourceRouteHeader> {
    match &p.payload {
        Payload::Data(d) => d.route.as_ref(),
        Payload::Rrep(r) => r.route.as_ref(),
        Payload::Rerr(r) => r.route.as_ref(),
        _ => None,
    }
}

impl Protocol for Dsr {
    type Timer = Timer;
    const PROMISCUOUS: bool = true;

    fn name(&self) -> &'static str {
        match self.variant {
            DsrVariant::Standard => "dsr",
            DsrVariant::SmallCache => "dsr-m",
        }
    }

    fn on_data(&mut self, cx: &mut Ctx<'_>, packet: Packet) {
        self.route_data(cx, packet);
    }

    fn on_receive(&mut self, cx: &mut Ctx<'_>, packet: Packet) {
        match &packet.payload {
            Payload::Rreq(r) => {
                let r = r.clone();
                self.handle_rreq(cx, packet, &r);
            }
            Payload::Rrep(r) => {
                let r = r.clone();
                self.handle_rrep(cx, packet, &r);
            }
            Payload::Rerr(r) => {
                let r = r.clone();
                self.handle_rerr(cx, packet, &r);
            }
            Payload::Hello => {}
            Payload::Data(_) => self.handle_data(cx, packet),
        }
    }

    fn on_overhear(&mut self, cx: &mut Ctx<'_>, packet: &Packet) {
        let hops = match &packet.payload {
            Payload::Rrep(r) => r.path.clone(),
            _ => match route_of(packet) {
                Some(h) => h.hops.clone(),
                None => return,
            },
        };
        self.learn_overheard(cx, &hops, packet.prev_hop);
    }

    fn on_tx_failed(&mut self, cx: &mut Ctx<'_>, mut packet: Packet, to: NodeId) {
        let broken = Link::new(self.id, to);
        self.cache.remove_link(broken);
        cx.stats().link_breaks_detected += 1;
        cx.log_event("link_broken", Some(&packet), format_args!("peer={to} via=unicast"));
        if packet.data().is_none() {
            return;
        }
        if packet.src == self.id {
            self.add_piggyback(broken);
            packet.data_mut().expect("data").route = None;
            self.route_data(cx, packet);
        } else {
            self.salvage(cx, packet, broken);
        }
    }

    fn on_timer(&mut self, cx: &mut Ctx<'_>, timer: Timer) {
        match timer {
            Timer::BufferExpiry(uid) => routing::expire_buffered(&mut self.buffer, cx, uid),
            Timer::Ring { dst, attempt } => self.ring_expired(cx, dst, attempt),
            Timer::RepairTimeout { .. } | Timer::Hello => {}
        }
    }

    fn buffered_data(&self) -> usize {
        self.buffer.len()
    }
}
