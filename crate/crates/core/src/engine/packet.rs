use std::fmt;

use serde::{Deserialize, Serialize};

use super::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    /// Link-level broadcast address; never a real node.
    pub const BROADCAST: NodeId = NodeId(u32::MAX);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == NodeId::BROADCAST {
            f.write_str("*")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Directed radio link `from -> to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
}

impl Link {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Link { from, to }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PacketKind {
    Rreq,
    Rrep,
    Rerr,
    Hello,
    Data,
}

impl PacketKind {
    pub fn is_control(self) -> bool {
        !matches!(self, PacketKind::Data)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Rreq => "RREQ",
            PacketKind::Rrep => "RREP",
            PacketKind::Rerr => "RERR",
            PacketKind::Hello => "HELLO",
            PacketKind::Data => "DATA",
        }
    }
}

/// Explicit hop list carried by source-routed packets.
///
/// `cursor` indexes the node currently holding the packet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceRouteHeader {
    pub hops: Vec<NodeId>,
    pub cursor: usize,
}

impl SourceRouteHeader {
    pub fn new(hops: Vec<NodeId>) -> Self {
        SourceRouteHeader { hops, cursor: 0 }
    }

    pub fn current(&self) -> NodeId {
        self.hops[self.cursor]
    }

    pub fn next(&self) -> Option<NodeId> {
        self.hops.get(self.cursor + 1).copied()
    }

    pub fn at_end(&self) -> bool {
        self.cursor + 1 >= self.hops.len()
    }

    /// Moves the cursor to the next hop and returns it.
    pub fn advance(&mut self) -> Option<NodeId> {
        let next = self.next()?;
        self.cursor += 1;
        Some(next)
    }

    pub fn has_repeats(&self) -> bool {
        has_repeats(&self.hops)
    }
}

pub fn has_repeats(nodes: &[NodeId]) -> bool {
    nodes.iter().enumerate().any(|(i, n)| nodes[i + 1..].contains(n))
}

/// Route request. Originator is `Packet::src`, sought target is `Packet::dst`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteRequest {
    pub id: u32,
    pub orig_seq: u64,
    pub target_seq: Option<u64>,
    pub hop_count: u32,
    /// Accumulated route record (source-routing protocols); starts with the originator.
    pub record: Vec<NodeId>,
    /// Broken links announced alongside the request.
    pub piggyback: Vec<Link>,
    pub repair: bool,
}

/// Route reply. Route leads to `Packet::src`; reply travels to `Packet::dst`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteReply {
    pub target_seq: u64,
    pub hop_count: u32,
    pub gratuitous: bool,
    /// Full discovered path, originator first (source-routing protocols).
    pub path: Vec<NodeId>,
    /// Return route for source-routed replies.
    pub route: Option<SourceRouteHeader>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteError {
    pub id: u32,
    pub unreachable: Vec<(NodeId, u64)>,
    pub broken: Option<Link>,
    pub route: Option<SourceRouteHeader>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataBody {
    pub flow: u32,
    pub seq: u64,
    pub created_at: SimTime,
    pub payload_bits: u32,
    pub route: Option<SourceRouteHeader>,
    pub salvaged: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Rreq(RouteRequest),
    Rrep(RouteReply),
    Rerr(RouteError),
    Hello,
    Data(DataBody),
}

impl Payload {
    pub fn kind(&self) -> PacketKind {
        match self {
            Payload::Rreq(_) => PacketKind::Rreq,
            Payload::Rrep(_) => PacketKind::Rrep,
            Payload::Rerr(_) => PacketKind::Rerr,
            Payload::Hello => PacketKind::Hello,
            Payload::Data(_) => PacketKind::Data,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub uid: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub prev_hop: NodeId,
    pub ttl: u32,
    pub size_bits: u32,
    pub payload: Payload,
}

impl Packet {
    pub fn kind(&self) -> PacketKind {
        self.payload.kind()
    }

    pub fn is_gratuitous_reply(&self) -> bool {
        matches!(&self.payload, Payload::Rrep(r) if r.gratuitous)
    }

    pub fn data(&self) -> Option<&DataBody> {
        match &self.payload {
            Payload::Data(d) => Some(d),
            _ => None,
        }
    }

    pub fn data_mut(&mut self) -> Option<&mut DataBody> {
        match &mut self.payload {
            Payload::Data(d) => Some(d),
            _ => None,
        }
    }

    /// Copy for the next hop with TTL decremented, or `None` once TTL is spent.
    pub fn forwarded(&self) -> Option<Packet> {
        let mut p = self.clone();
        p.decrement_ttl().then_some(p)
    }

    /// Decrements TTL in place; returns false (leaving TTL untouched) when it would reach 0.
    pub fn decrement_ttl(&mut self) -> bool {
        if self.ttl <= 1 {
            return false;
        }
        self.ttl -= 1;
        true
    }
}

/// On-air sizes per packet kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketSizes {
    pub rreq_bytes: u32,
    pub rrep_bytes: u32,
    pub rerr_bytes: u32,
    pub hello_bytes: u32,
    pub data_header_bytes: u32,
}

impl Default for PacketSizes {
    fn default() -> Self {
        PacketSizes {
            rreq_bytes: 64,
            rrep_bytes: 64,
            rerr_bytes: 64,
            hello_bytes: 32,
            data_header_bytes: 32,
        }
    }
}

impl PacketSizes {
    pub fn bits_for(&self, payload: &Payload) -> u32 {
        8 * match payload {
            Payload::Rreq(_) => self.rreq_bytes,
            Payload::Rrep(_) => self.rrep_bytes,
            Payload::Rerr(_) => self.rerr_bytes,
            Payload::Hello => self.hello_bytes,
            Payload::Data(d) => return d.payload_bits + 8 * self.data_header_bytes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hello(ttl: u32) -> Packet {
        Packet {
            uid: 1,
            src: NodeId(0),
            dst: NodeId::BROADCAST,
            prev_hop: NodeId(0),
            ttl,
            size_bits: 256,
            payload: Payload::Hello,
        }
    }

    #[test]
    fn ttl_is_never_forwarded_past_one() {
        assert!(hello(1).forwarded().is_none());
        assert_eq!(hello(3).forwarded().unwrap().ttl, 2);
        let mut p = hello(1);
        assert!(!p.decrement_ttl());
        assert_eq!(p.ttl, 1);
    }

    #[test]
    fn data_size_includes_header() {
        let sizes = PacketSizes::default();
        let body = DataBody {
            flow: 0,
            seq: 0,
            created_at: SimTime::ZERO,
            payload_bits: 4096,
            route: None,
            salvaged: 0,
        };
        assert_eq!(sizes.bits_for(&Payload::Data(body)), 4096 + 256);
        assert_eq!(sizes.bits_for(&Payload::Hello), 256);
    }

    #[test]
    fn source_route_cursor() {
        let mut h = SourceRouteHeader::new(vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(h.current(), NodeId(0));
        assert_eq!(h.advance(), Some(NodeId(1)));
        assert_eq!(h.advance(), Some(NodeId(2)));
        assert!(h.at_end());
        assert_eq!(h.advance(), None);
        assert!(!h.has_repeats());
        assert!(has_repeats(&[NodeId(1), NodeId(2), NodeId(1)]));
    }
}
