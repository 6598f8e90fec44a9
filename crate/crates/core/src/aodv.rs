//! AODV with HELLO link monitoring, and the AODV-LL variant that relies on
//! link-layer beacons and unicast feedback instead.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use rand::Rng;

use crate::engine::packet::{RouteError, RouteReply, RouteRequest};
use crate::engine::{NodeId, Packet, Payload, SimTime};
use crate::metrics::DropReason;
use crate::routing::{
    self, Ctx, Discoveries, HelloState, Protocol, RouteState, RouteTable, RoutingConfig, RreqSeen, SendBuffer, Timer,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AodvVariant {
    Hello,
    LinkLayer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AodvConfig {
    pub routing: RoutingConfig,
    pub route_lifetime: Duration,
    pub local_repair: bool,
}

impl Default for AodvConfig {
    fn default() -> Self {
        AodvConfig {
            routing: RoutingConfig::default(),
            route_lifetime: Duration::from_secs(10),
            local_repair: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Repair {
    id: u32,
    started: SimTime,
}

#[derive(Debug)]
pub struct Aodv {
    id: NodeId,
    variant: AodvVariant,
    cfg: AodvConfig,
    seq: u64,
    rreq_id: u32,
    rerr_id: u32,
    table: RouteTable,
    seen: RreqSeen,
    buffer: SendBuffer,
    discoveries: Discoveries,
    repairs: BTreeMap<NodeId, Repair>,
    hello: HelloState,
}

impl Aodv {
    pub fn new(id: NodeId, variant: AodvVariant, cfg: AodvConfig) -> Self {
        Aodv {
            id,
            variant,
            seq: 0,
            rreq_id: 0,
            rerr_id: 0,
            table: RouteTable::default(),
            seen: RreqSeen::new(cfg.routing.rreq_seen_horizon),
            buffer: SendBuffer::new(cfg.routing.buffer_capacity, cfg.routing.buffer_timeout),
            discoveries: Discoveries::default(),
            repairs: BTreeMap::new(),
            hello: HelloState::default(),
            cfg,
        }
    }

    pub fn variant(&self) -> AodvVariant {
        self.variant
    }

    pub fn table(&self) -> &RouteTable {
        &self.table
    }

    pub fn own_seq(&self) -> u64 {
        self.seq
    }

    pub fn is_repairing(&self, dst: NodeId) -> bool {
        self.repairs.contains_key(&dst)
    }

    fn lifetime(&self, now: SimTime) -> SimTime {
        now + self.cfg.route_lifetime
    }

    fn route_data(&mut self, cx: &mut Ctx<'_>, packet: Packet, after_failure: bool) {
        let now = cx.now();
        let dst = packet.dst;
        if let Some(next) = self.table.route(dst, now).map(|e| e.next_hop) {
            self.send_via(cx, packet, next);
        } else if self.repairs.contains_key(&dst) {
            routing::buffer_data(&mut self.buffer, cx, packet);
        } else if packet.src == self.id {
            routing::buffer_data(&mut self.buffer, cx, packet);
            if !self.discoveries.is_pending(dst) {
                self.start_discovery(cx, dst);
            }
        } else {
            let prev = packet.prev_hop;
            cx.drop_data(packet, DropReason::NoRoute);
            if !after_failure && prev != self.id {
                let seq = self.table.get(dst).map_or(0, |e| e.dest_seq);
                self.send_rerr(cx, vec![(dst, seq)], BTreeSet::from([prev]));
            }
        }
    }

    fn send_via(&mut self, cx: &mut Ctx<'_>, packet: Packet, next: NodeId) {
        let now = cx.now();
        let life = self.lifetime(now);
        let (src, dst, prev) = (packet.src, packet.dst, packet.prev_hop);
        self.table.refresh(dst, life);
        self.table.refresh(next, life);
        if let Some(e) = self.table.get_mut(dst) {
            e.active_until = life;
            e.last_src = Some(src);
            if src != self.id {
                e.precursors.insert(prev);
            }
        }
        if src != self.id {
            self.table.refresh(src, life);
            if let Some(r) = self.table.get_mut(src) {
                if r.state == RouteState::Valid {
                    r.active_until = life;
                    r.precursors.insert(next);
                }
            }
        }
        if self.variant == AodvVariant::LinkLayer {
            cx.watch_link(next, life);
        }
        cx.unicast(packet, next);
    }

    fn start_discovery(&mut self, cx: &mut Ctx<'_>, dst: NodeId) {
        let now = cx.now();
        cx.stats().discoveries_started += 1;
        let (ttl, wait) = self.cfg.routing.ers.next(0).expect("schedule has at least one ring");
        let id = self.send_rreq(cx, dst, ttl, false);
        self.discoveries.begin(dst, now, id, ttl);
        cx.set_timer(wait, Timer::Ring { dst, attempt: 0 });
    }

    fn send_rreq(&mut self, cx: &mut Ctx<'_>, dst: NodeId, ttl: u32, repair: bool) -> u32 {
        self.seq += 1;
        self.rreq_id += 1;
        let id = self.rreq_id;
        self.seen.insert(self.id, id, cx.now());
        let target_seq = self.table.get(dst).filter(|e| e.seq_known).map(|e| e.dest_seq);
        let rreq = RouteRequest {
            id,
            orig_seq: self.seq,
            target_seq,
            hop_count: 0,
            record: Vec::new(),
            piggyback: Vec::new(),
            repair,
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
        if self.table.route(dst, cx.now()).is_some() {
            self.route_found(cx, dst);
            return;
        }
        match self.cfg.routing.ers.next(attempt + 1) {
            Some((ttl, wait)) => {
                let id = self.send_rreq(cx, dst, ttl, false);
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
        if let Some(r) = self.repairs.remove(&dst) {
            let s = cx.stats();
            s.repairs_succeeded += 1;
            s.repair_durations_us.push((now - r.started).as_micros() as u64);
            cx.log_event("repair_ok", None, format_args!("dst={dst}"));
        }
        for p in routing::drain_buffered(&mut self.buffer, cx, dst) {
            self.route_data(cx, p, false);
        }
    }

    fn handle_rreq(&mut self, cx: &mut Ctx<'_>, p: Packet, rreq: &RouteRequest) {
        let now = cx.now();
        if p.src == self.id || !self.seen.insert(p.src, rreq.id, now) {
            return;
        }
        let hops = rreq.hop_count + 1;
        let life = self.lifetime(now);
        self.table
            .offer(p.src, Some(rreq.orig_seq), hops, p.prev_hop, life, now);
        if p.dst == self.id {
            if let Some(t) = rreq.target_seq {
                self.seq = self.seq.max(t);
            }
            self.seq += 1;
            let reply = RouteReply {
                target_seq: self.seq,
                hop_count: 0,
                gratuitous: false,
                path: Vec::new(),
                route: None,
            };
            self.send_rrep(cx, self.id, p.src, reply);
            return;
        }
        let wanted = rreq.target_seq.unwrap_or(0);
        let cached = self
            .table
            .route(p.dst, now)
            .filter(|e| e.seq_known && e.dest_seq >= wanted && e.next_hop != p.prev_hop)
            .map(|e| (e.dest_seq, e.hop_count, e.next_hop));
        if let Some((seq, hop_count, next)) = cached {
            if let Some(e) = self.table.get_mut(p.dst) {
                e.precursors.insert(p.prev_hop);
            }
            if let Some(r) = self.table.get_mut(p.src) {
                r.precursors.insert(next);
            }
            cx.stats().grat_replies += 1;
            let reply = RouteReply {
                target_seq: seq,
                hop_count,
                gratuitous: true,
                path: Vec::new(),
                route: None,
            };
            self.send_rrep(cx, p.dst, p.src, reply);
            return;
        }
        if let Some(mut fwd) = p.forwarded() {
            if let Payload::Rreq(r) = &mut fwd.payload {
                r.hop_count = hops;
            }
            cx.broadcast(fwd);
        }
    }

    fn send_rrep(&mut self, cx: &mut Ctx<'_>, target: NodeId, orig: NodeId, reply: RouteReply) {
        let Some(next) = self.table.route(orig, cx.now()).map(|e| e.next_hop) else {
            return;
        };
        let p = cx.packet(target, orig, self.cfg.routing.reply_ttl, Payload::Rrep(reply));
        cx.unicast(p, next);
    }

    fn handle_rrep(&mut self, cx: &mut Ctx<'_>, p: Packet, rrep: &RouteReply) {
        let now = cx.now();
        let hops = rrep.hop_count + 1;
        let life = self.lifetime(now);
        let offer = self
            .table
            .offer(p.src, Some(rrep.target_seq), hops, p.prev_hop, life, now);
        if p.dst == self.id {
            if offer.accepted() {
                self.route_found(cx, p.src);
            }
            return;
        }
        if !offer.accepted() {
            return;
        }
        let Some(rev) = self.table.route(p.dst, now).map(|e| e.next_hop) else {
            return;
        };
        if let Some(e) = self.table.get_mut(p.src) {
            e.precursors.insert(rev);
        }
        if let Some(e) = self.table.get_mut(p.dst) {
            e.precursors.insert(p.prev_hop);
        }
        if let Some(mut fwd) = p.forwarded() {
            if let Payload::Rrep(r) = &mut fwd.payload {
                r.hop_count = hops;
            }
            cx.unicast(fwd, rev);
        }
    }

    fn handle_rerr(&mut self, cx: &mut Ctx<'_>, p: &Packet, rerr: &RouteError) {
        cx.stats().rerr_receivers += 1;
        let mut lost = Vec::new();
        let mut precursors = BTreeSet::new();
        for &(d, s) in &rerr.unreachable {
            let hit = self
                .table
                .get(d)
                .is_some_and(|e| e.next_hop == p.prev_hop && e.state == RouteState::Valid);
            if !hit {
                continue;
            }
            if let Some((seq, pre)) = self.table.invalidate(d) {
                let seq = seq.max(s);
                if let Some(e) = self.table.get_mut(d) {
                    e.dest_seq = seq;
                }
                lost.push((d, seq));
                precursors.extend(pre);
            }
        }
        self.send_rerr(cx, lost, precursors);
    }

    fn send_rerr(&mut self, cx: &mut Ctx<'_>, unreachable: Vec<(NodeId, u64)>, mut precursors: BTreeSet<NodeId>) {
        precursors.remove(&self.id);
        if unreachable.is_empty() || precursors.is_empty() {
            return;
        }
        self.rerr_id += 1;
        let rerr = RouteError {
            id: self.rerr_id,
            unreachable,
            broken: None,
            route: None,
        };
        if precursors.len() == 1 {
            let to = *precursors.iter().next().expect("one precursor");
            let p = cx.packet(self.id, to, 1, Payload::Rerr(rerr));
            cx.unicast(p, to);
        } else {
            let p = cx.packet(self.id, NodeId::BROADCAST, 1, Payload::Rerr(rerr));
            cx.broadcast(p);
        }
    }

    fn repair_eligible(&self, dst: NodeId, now: SimTime) -> bool {
        let Some(e) = self.table.get(dst) else {
            return false;
        };
        if !self.cfg.local_repair || !e.is_active(now) {
            return false;
        }
        match e.last_src {
            Some(src) if src != self.id => self.table.get(src).is_some_and(|r| e.hop_count < r.hop_count),
            _ => false,
        }
    }

    fn link_broken(&mut self, cx: &mut Ctx<'_>, nbr: NodeId) {
        let now = cx.now();
        cx.stats().link_breaks_detected += 1;
        self.hello.forget(nbr);
        let mut lost = Vec::new();
        let mut precursors = BTreeSet::new();
        for d in self.table.via(nbr, false) {
            if self.repair_eligible(d, now) {
                self.start_repair(cx, d);
            } else if let Some((seq, pre)) = self.table.invalidate(d) {
                lost.push((d, seq));
                precursors.extend(pre);
            }
        }
        self.send_rerr(cx, lost, precursors);
    }

    fn start_repair(&mut self, cx: &mut Ctx<'_>, dst: NodeId) {
        let now = cx.now();
        let e = self.table.get_mut(dst).expect("repair of unknown route");
        e.state = RouteState::UnderRepair;
        e.dest_seq += 1;
        e.seq_known = true;
        let ttl = e.hop_count.max(2) + 2;
        let id = self.send_rreq(cx, dst, ttl, true);
        self.repairs.insert(dst, Repair { id, started: now });
        cx.stats().record_repair_attempt(now);
        cx.log_event("repair_start", None, format_args!("dst={dst} ttl={ttl}"));
        cx.set_timer(self.cfg.routing.ers.wait_for(ttl), Timer::RepairTimeout { dst, id });
    }

    fn repair_expired(&mut self, cx: &mut Ctx<'_>, dst: NodeId, id: u32) {
        match self.repairs.get(&dst) {
            Some(r) if r.id == id => {}
            _ => return,
        }
        self.repairs.remove(&dst);
        cx.stats().repairs_failed += 1;
        cx.log_event("repair_fail", None, format_args!("dst={dst}"));
        if let Some((seq, pre)) = self.table.invalidate(dst) {
            self.send_rerr(cx, vec![(dst, seq)], pre);
        }
        routing::drop_buffered(&mut self.buffer, cx, dst, DropReason::RepairFailed);
    }

    fn hello_tick(&mut self, cx: &mut Ctx<'_>) {
        let now = cx.now();
        let hcfg = self.cfg.routing.hello;
        if self.table.has_active_route(now) {
            let p = cx.packet(self.id, NodeId::BROADCAST, 1, Payload::Hello);
            cx.broadcast(p);
            let id = self.id;
            let s = cx.stats();
            s.hello_active_ticks += 1;
            s.hello_nodes.insert(id);
        }
        for n in self.table.active_next_hops(now) {
            if self.hello.is_lost(n, now, &hcfg) {
                cx.log_event("link_broken", None, format_args!("peer={n} via=hello"));
                self.link_broken(cx, n);
            }
        }
        cx.set_timer(hcfg.interval, Timer::Hello);
    }
}

impl Protocol for Aodv {
    type Timer = Timer;

    fn name(&self) -> &'static str {
        match self.variant {
            AodvVariant::Hello => "aodv",
            AodvVariant::LinkLayer => "aodv-ll",
        }
    }

    fn start(&mut self, cx: &mut Ctx<'_>) {
        if self.variant == AodvVariant::Hello {
            let max = self.cfg.routing.hello.interval.as_micros() as u64;
            let offset = cx.rng().random_range(0..max);
            cx.set_timer(Duration::from_micros(offset), Timer::Hello);
        }
    }

    fn on_data(&mut self, cx: &mut Ctx<'_>, packet: Packet) {
        self.route_data(cx, packet, false);
    }

    fn on_receive(&mut self, cx: &mut Ctx<'_>, mut packet: Packet) {
        let now = cx.now();
        let prev = packet.prev_hop;
        self.hello.heard(prev, now);
        let life = self.lifetime(now);
        self.table.offer(prev, None, 1, prev, life, now);
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
                self.handle_rerr(cx, &packet, &r);
            }
            Payload::Hello => {}
            Payload::Data(_) => {
                if packet.dst == self.id {
                    let life = self.lifetime(now);
                    self.table.refresh(packet.src, life);
                    if let Some(r) = self.table.get_mut(packet.src) {
                        if r.state == RouteState::Valid {
                            r.active_until = life;
                        }
                    }
                    cx.deliver(packet);
                } else if packet.decrement_ttl() {
                    self.route_data(cx, packet, false);
                } else {
                    cx.drop_data(packet, DropReason::TtlExpired);
                }
            }
        }
    }

    fn on_tx_failed(&mut self, cx: &mut Ctx<'_>, packet: Packet, to: NodeId) {
        match self.variant {
            AodvVariant::Hello => {
                if packet.data().is_some() {
                    cx.drop_data(packet, DropReason::LinkFailure);
                }
            }
            AodvVariant::LinkLayer => {
                cx.log_event("link_broken", Some(&packet), format_args!("peer={to} via=unicast"));
                self.link_broken(cx, to);
                if packet.data().is_some() {
                    self.route_data(cx, packet, true);
                }
            }
        }
    }

    fn on_timer(&mut self, cx: &mut Ctx<'_>, timer: Timer) {
        match timer {
            Timer::BufferExpiry(uid) => routing::expire_buffered(&mut self.buffer, cx, uid),
            Timer::Ring { dst, attempt } => self.ring_expired(cx, dst, attempt),
            Timer::RepairTimeout { dst, id } => self.repair_expired(cx, dst, id),
            Timer::Hello => self.hello_tick(cx),
        }
    }

    fn on_link_broken(&mut self, cx: &mut Ctx<'_>, neighbor: NodeId) {
        if self.variant == AodvVariant::LinkLayer {
            self.link_broken(cx, neighbor);
        }
    }

    fn buffered_data(&self) -> usize {
        self.buffer.len()
    }
}
