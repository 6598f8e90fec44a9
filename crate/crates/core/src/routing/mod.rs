//! Machinery shared by the reactive protocols and the interface the engine
//! dispatches into.

pub mod buffer;
pub mod discovery;
pub mod ers;
pub mod hello;
pub mod seen;
pub mod table;

use std::fmt;
use std::time::Duration;

use crate::engine::{NodeCtx, NodeId, Packet};
use crate::metrics::DropReason;

pub use self::buffer::SendBuffer;
pub use self::discovery::{Discoveries, Discovery};
pub use self::ers::ErsSchedule;
pub use self::hello::{HelloConfig, HelloState};
pub use self::seen::RreqSeen;
pub use self::table::{Offer, RouteEntry, RouteState, RouteTable};

/// Callbacks a routing protocol instance receives for the node it runs on.
pub trait Protocol {
    type Timer: fmt::Debug;
    /// Whether unicasts between other nodes are also handed to `on_overhear`.
    const PROMISCUOUS: bool = false;

    fn name(&self) -> &'static str;

    fn start(&mut self, _cx: &mut NodeCtx<'_, Self::Timer>) {}

    /// A DATA packet generated by this node's traffic source.
    fn on_data(&mut self, cx: &mut NodeCtx<'_, Self::Timer>, packet: Packet);

    /// A packet addressed to this node (unicast) or a broadcast it received.
    fn on_receive(&mut self, cx: &mut NodeCtx<'_, Self::Timer>, packet: Packet);

    fn on_overhear(&mut self, _cx: &mut NodeCtx<'_, Self::Timer>, _packet: &Packet) {}

    /// Link-layer feedback: the unicast of `packet` to `to` found no receiver.
    fn on_tx_failed(&mut self, cx: &mut NodeCtx<'_, Self::Timer>, packet: Packet, to: NodeId);

    fn on_timer(&mut self, cx: &mut NodeCtx<'_, Self::Timer>, timer: Self::Timer);

    /// Beacon monitor verdict for a watched neighbor.
    fn on_link_broken(&mut self, _cx: &mut NodeCtx<'_, Self::Timer>, _neighbor: NodeId) {}

    /// DATA packets held in protocol buffers.
    fn buffered_data(&self) -> usize;
}

/// Timer kinds used by all three protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Timer {
    BufferExpiry(u64),
    Ring { dst: NodeId, attempt: u32 },
    RepairTimeout { dst: NodeId, id: u32 },
    Hello,
}

pub type Ctx<'a> = NodeCtx<'a, Timer>;

#[derive(Clone, Debug, PartialEq)]
pub struct RoutingConfig {
    pub ers: ErsSchedule,
    pub buffer_capacity: usize,
    pub buffer_timeout: Duration,
    pub rreq_seen_horizon: Duration,
    pub hello: HelloConfig,
    /// TTL for unicast replies and errors travelling back along a known path.
    pub reply_ttl: u32,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig {
            ers: ErsSchedule::default(),
            buffer_capacity: 64,
            buffer_timeout: Duration::from_secs(30),
            rreq_seen_horizon: Duration::from_secs(10),
            hello: HelloConfig::default(),
            reply_ttl: 35,
        }
    }
}

/// Stores `packet` and arms its expiry timer; a packet evicted by overflow is dropped.
pub(crate) fn buffer_data(buffer: &mut SendBuffer, cx: &mut Ctx<'_>, packet: Packet) {
    let uid = packet.uid;
    if let Some(old) = buffer.push(packet, cx.now()) {
        cx.drop_data(old, DropReason::BufferOverflow);
    }
    cx.set_timer(buffer.timeout(), Timer::BufferExpiry(uid));
}

pub(crate) fn expire_buffered(buffer: &mut SendBuffer, cx: &mut Ctx<'_>, uid: u64) {
    if let Some(p) = buffer.remove_uid(uid) {
        cx.drop_data(p, DropReason::BufferTimeout);
    }
}

/// Removes every packet for `dst`; ones that reached the timeout are dropped here.
pub(crate) fn drain_buffered(buffer: &mut SendBuffer, cx: &mut Ctx<'_>, dst: NodeId) -> Vec<Packet> {
    let (fresh, expired) = buffer.take_for(dst, cx.now());
    for p in expired {
        cx.drop_data(p, DropReason::BufferTimeout);
    }
    fresh
}

pub(crate) fn drop_buffered(buffer: &mut SendBuffer, cx: &mut Ctx<'_>, dst: NodeId, reason: DropReason) {
    let (fresh, expired) = buffer.take_for(dst, cx.now());
    for p in expired {
        cx.drop_data(p, DropReason::BufferTimeout);
    }
    for p in fresh {
        cx.drop_data(p, reason);
    }
}
