//! DYMO: expanding ring discovery answered only by the destination, HELLO
//! link monitoring and a scoped RERR flood on every detected break.

use std::time::Duration;

use rand::Rng;

use crate::engine::packet::{RouteError, RouteReply, RouteRequest};
use crate::engine::{NodeId, Packet, Payload, SimTime};
use crate::metrics::DropReason;
use crate::routing::{
    self, Ctx, Discoveries, HelloState, Protocol, RouteState, RouteTable, RoutingConfig, RreqSeen, SendBuffer, Timer,
};

#[derive(Clone, Debug, PartialEq)]
pub struct DymoConfig {
    pub routing: RoutingConfig,
    pub route_lifetime: Duration,
    pub rerr_ttl: u32,
}

impl Default for DymoConfig {
    fn default() -> Self {
        DymoConfig {
            routing: RoutingConfig::default(),
            route_lifetime: Duration::from_secs(5),
            rerr_ttl: 3,
        }
    }
}

#[derive(Debug)]
pub struct Dymo {
    id: NodeId,
    cfg: DymoConfig,
    seq: u64,
    rreq_id: u32,
    rerr_id: u32,
    table: RouteTable,
    seen: RreqSeen,
    rerr_seen: RreqSeen,
    buffer: SendBuffer,
    discoveries: Discoveries,
    hello: HelloState,
}

impl Dymo {
    pub fn new(id: NodeId, cfg: DymoConfig) -> Self {
        Dymo {
            id,
            seq: 0,
            rreq_id: 0,
            rerr_id: 0,
            table: RouteTable::default(),
            seen: RreqSeen::new(cfg.routing.rreq_seen_horizon),
            rerr_seen: RreqSeen::new(cfg.routing.rreq_seen_horizon),
            buffer: SendBuffer::new(cfg.routing.buffer_capacity, cfg.routing.buffer_timeout),
            discoveries: Discoveries::default(),
            hello: HelloState::default(),
            cfg,
        }
    }

    pub fn table(&self) -> &RouteTable {
        &self.table
    }

    fn lifetime(&self, now: SimTime) -> SimTime {
        now + self.cfg.route_lifetime
    }

    fn route_data(&mut self, cx: &mut Ctx<'_>, packet: Packet) {
        let now = cx.now();
        let dst = packet.dst;
        if let Some(next) = self.table.route(dst, now).map(|e| e.next_hop) {
            let life = self.lifetime(now);
            let src = packet.src;
            self.table.refresh(dst, life);
            self.table.refresh(next, life);
            if let Some(e) = self.table.get_mut(dst) {
                e.active_until = life;
                e.last_src = Some(src);
            }
            if src != self.id {
                self.table.refresh(src, life);
                if let Some(r) = self.table.get_mut(src) {
                    if r.state == RouteState::Valid {
                        r.active_until = life;
                    }
                }
            }
            cx.unicast(packet, next);
        } else if packet.src == self.id {
            routing::buffer_data(&mut self.buffer, cx, packet);
            if !self.discoveries.is_pending(dst) {
                self.start_discovery(cx, dst);
            }
        } else {
            cx.drop_data(packet, DropReason::NoRoute);
            let seq = self.table.get(dst).map_or(0, |e| e.dest_seq);
            self.flood_rerr(cx, vec![(dst, seq)]);
        }
    }

    fn start_discovery(&mut self, cx: &mut Ctx<'_>, dst: NodeId) {
        cx.stats().discoveries_started += 1;
        let (ttl, wait) = self.cfg.routing.ers.next(0).expect("schedule has at least one ring");
        let id = self.send_rreq(cx, dst, ttl);
        self.discoveries.begin(dst, cx.now(), id, ttl);
        cx.set_timer(wait, Timer::Ring { dst, attempt: 0 });
    }

    fn send_rreq(&mut self, cx: &mut Ctx<'_>, dst: NodeId, ttl: u32) -> u32 {
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
        if self.table.route(dst, cx.now()).is_some() {
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
            if let Some(next) = self.table.route(p.src, now).map(|e| e.next_hop) {
                let r = cx.packet(self.id, p.src, self.cfg.routing.reply_ttl, Payload::Rrep(reply));
                cx.unicast(r, next);
            }
            return;
        }
        if let Some(mut fwd) = p.forwarded() {
            if let Payload::Rreq(r) = &mut fwd.payload {
                r.hop_count = hops;
            }
            cx.broadcast(fwd);
        }
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
        if let Some(mut fwd) = p.forwarded() {
            if let Payload::Rrep(r) = &mut fwd.payload {
                r.hop_count = hops;
            }
            cx.unicast(fwd, rev);
        }
    }

    fn handle_rerr(&mut self, cx: &mut Ctx<'_>, p: &Packet, rerr: &RouteError) {
        if p.src == self.id || !self.rerr_seen.insert(p.src, rerr.id, cx.now()) {
            return;
        }
        cx.stats().rerr_receivers += 1;
        for &(d, s) in &rerr.unreachable {
            let hit = self
                .table
                .get(d)
                .is_some_and(|e| e.next_hop == p.prev_hop && e.state == RouteState::Valid);
            if hit {
                if let Some((seq, _)) = self.table.invalidate(d) {
                    if let Some(e) = self.table.get_mut(d) {
                        e.dest_seq = seq.max(s);
                    }
                }
            }
        }
        if let Some(fwd) = p.forwarded() {
            cx.broadcast(fwd);
        }
    }

    fn flood_rerr(&mut self, cx: &mut Ctx<'_>, unreachable: Vec<(NodeId, u64)>) {
        if unreachable.is_empty() {
            return;
        }
        self.rerr_id += 1;
        self.rerr_seen.insert(self.id, self.rerr_id, cx.now());
        let rerr = RouteError {
            id: self.rerr_id,
            unreachable,
            broken: None,
            route: None,
        };
        let p = cx.packet(self.id, NodeId::BROADCAST, self.cfg.rerr_ttl, Payload::Rerr(rerr));
        cx.broadcast(p);
    }

    fn link_broken(&mut self, cx: &mut Ctx<'_>, nbr: NodeId) {
        cx.stats().link_breaks_detected += 1;
        self.hello.forget(nbr);
        let mut lost = Vec::new();
        for d in self.table.via(nbr, false) {
            if let Some((seq, _)) = self.table.invalidate(d) {
                lost.push((d, seq));
            }
        }
        self.flood_rerr(cx, lost);
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

impl Protocol for Dymo {
    type Timer = Timer;

    fn name(&self) -> &'static str {
        "dymo"
    }

    fn start(&mut self, cx: &mut Ctx<'_>) {
        let max = self.cfg.routing.hello.interval.as_micros() as u64;
        let offset = cx.rng().random_range(0..max);
        cx.set_timer(Duration::from_micros(offset), Timer::Hello);
    }

    fn on_data(&mut self, cx: &mut Ctx<'_>, packet: Packet) {
        self.route_data(cx, packet);
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
                    self.route_data(cx, packet);
                } else {
                    cx.drop_data(packet, DropReason::TtlExpired);
                }
            }
        }
    }

    fn on_tx_failed(&mut self, cx: &mut Ctx<'_>, packet: Packet, _to: NodeId) {
        if packet.data().is_some() {
            cx.drop_data(packet, DropReason::LinkFailure);
        }
    }

    fn on_timer(&mut self, cx: &mut Ctx<'_>, timer: Timer) {
        match timer {
            Timer::BufferExpiry(uid) => routing::expire_buffered(&mut self.buffer, cx, uid),
            Timer::Ring { dst, attempt } => self.ring_expired(cx, dst, attempt),
            Timer::RepairTimeout { .. } => {}
            Timer::Hello => self.hello_tick(cx),
        }
    }

    fn buffered_data(&self) -> usize {
        self.buffer.len()
    }
}
