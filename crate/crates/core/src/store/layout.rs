//! On-disk record layout shared by the forward, backward and core files.
//!
//! Forward/backward block: `node u32 | count u32 | count x edge`.
//! Core block: `node u32 | out u32 | in u32 | reserved u32 | out edges | in edges`.
//! Edge: `endpoint u32 | length u64 | pred_hint u32 | kind u8 | pad` (24 bytes).
//! All integers little-endian.

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, EdgeTriplet, NodeId};

pub const FORMAT_VERSION: u32 = 1;
pub const EDGE_BYTES: usize = 24;
pub const BLOCK_HEADER_BYTES: usize = 8;
pub const CORE_HEADER_BYTES: usize = 16;

pub const FORWARD_FILE: &str = "forward.bin";
pub const BACKWARD_FILE: &str = "backward.bin";
pub const CORE_FILE: &str = "core.bin";
pub const META_FILE: &str = "meta.json";
pub(crate) const BACKWARD_STAGING: &str = "backward.stage";

/// One stored edge, seen from the node owning the block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IndexEdge {
    /// Head for outgoing records, tail for incoming ones.
    pub endpoint: NodeId,
    pub length: u64,
    pub pred_hint: NodeId,
    pub kind: EdgeKind,
}

impl IndexEdge {
    pub fn from_triplet(t: &EdgeTriplet) -> Self {
        IndexEdge {
            endpoint: t.b,
            length: t.length,
            pred_hint: t.pred_hint,
            kind: t.kind,
        }
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        let start = out.len();
        out.extend_from_slice(&self.endpoint.to_le_bytes());
        out.extend_from_slice(&self.length.to_le_bytes());
        out.extend_from_slice(&self.pred_hint.to_le_bytes());
        out.push(self.kind.to_u8());
        out.resize(start + EDGE_BYTES, 0);
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        if buf.len() < EDGE_BYTES {
            return Err(Error::Corrupt("short edge record".into()));
        }
        Ok(IndexEdge {
            endpoint: read_u32(buf, 0),
            length: u64::from_le_bytes(buf[4..12].try_into().unwrap()),
            pred_hint: read_u32(buf, 12),
            kind: EdgeKind::from_u8(buf[16])
                .ok_or_else(|| Error::Corrupt(format!("unknown edge kind tag {}", buf[16])))?,
        })
    }
}

/// A forward or backward adjacency block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub node: NodeId,
    pub edges: Vec<IndexEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreBlock {
    pub node: NodeId,
    pub outgoing: Vec<IndexEdge>,
    pub incoming: Vec<IndexEdge>,
}

pub(crate) fn read_u32(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().unwrap())
}

pub fn block_bytes(edges: usize) -> u64 {
    (BLOCK_HEADER_BYTES + edges * EDGE_BYTES) as u64
}

pub fn encode_block<'a>(node: NodeId, edges: impl ExactSizeIterator<Item = &'a EdgeTriplet>, out: &mut Vec<u8>) {
    out.extend_from_slice(&node.to_le_bytes());
    out.extend_from_slice(&(edges.len() as u32).to_le_bytes());
    for t in edges {
        IndexEdge::from_triplet(t).encode(out);
    }
}

pub fn decode_block(buf: &[u8]) -> Result<Block> {
    if buf.len() < BLOCK_HEADER_BYTES {
        return Err(Error::Corrupt("short block header".into()));
    }
    let node = read_u32(buf, 0);
    let count = read_u32(buf, 4) as usize;
    if buf.len() != BLOCK_HEADER_BYTES + count * EDGE_BYTES {
        return Err(Error::Corrupt(format!(
            "block of node {node} declares {count} edges but spans {} bytes",
            buf.len()
        )));
    }
    let edges = buf[BLOCK_HEADER_BYTES..]
        .chunks_exact(EDGE_BYTES)
        .map(IndexEdge::decode)
        .collect::<Result<_>>()?;
    Ok(Block { node, edges })
}

pub fn encode_core_block(node: NodeId, outgoing: &[EdgeTriplet], incoming: &[EdgeTriplet], out: &mut Vec<u8>) {
    out.extend_from_slice(&node.to_le_bytes());
    out.extend_from_slice(&(outgoing.len() as u32).to_le_bytes());
    out.extend_from_slice(&(incoming.len() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for t in outgoing.iter().chain(incoming) {
        IndexEdge::from_triplet(t).encode(out);
    }
}

/// Decodes the core block at the start of `buf`, returning it with its
/// encoded length.
pub fn decode_core_block(buf: &[u8]) -> Result<(CoreBlock, usize)> {
    if buf.len() < CORE_HEADER_BYTES {
        return Err(Error::Corrupt("short core block header".into()));
    }
    let node = read_u32(buf, 0);
    let n_out = read_u32(buf, 4) as usize;
    let n_in = read_u32(buf, 8) as usize;
    let total = CORE_HEADER_BYTES + (n_out + n_in) * EDGE_BYTES;
    if buf.len() < total {
        return Err(Error::Corrupt(format!("core block of node {node} is truncated")));
    }
    let mut edges = buf[CORE_HEADER_BYTES..total].chunks_exact(EDGE_BYTES).map(IndexEdge::decode);
    let outgoing = edges.by_ref().take(n_out).collect::<Result<_>>()?;
    let incoming = edges.collect::<Result<_>>()?;
    Ok((
        CoreBlock {
            node,
            outgoing,
            incoming,
        },
        total,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Sign;

    #[test]
    fn block_round_trip() {
        let ts = [
            EdgeTriplet::outgoing(3, 7, 11, EdgeKind::Original, 3),
            EdgeTriplet::outgoing(3, 9, u64::MAX - 1, EdgeKind::Candidate, 5),
        ];
        let mut buf = Vec::new();
        encode_block(3, ts.iter(), &mut buf);
        assert_eq!(buf.len() as u64, block_bytes(2));
        let b = decode_block(&buf).unwrap();
        assert_eq!(b.node, 3);
        assert_eq!(b.edges[1].endpoint, 9);
        assert_eq!(b.edges[1].length, u64::MAX - 1);
        assert_eq!(b.edges[1].pred_hint, 5);
        assert_eq!(b.edges[1].kind, EdgeKind::Candidate);
        assert!(decode_block(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn core_block_round_trip() {
        let out = [EdgeTriplet::outgoing(1, 2, 4, EdgeKind::Original, 1)];
        let inc = [EdgeTriplet {
            a: 1,
            b: 2,
            length: 6,
            sign: Sign::Incoming,
            kind: EdgeKind::Candidate,
            pred_hint: 8,
        }];
        let mut buf = Vec::new();
        encode_core_block(1, &out, &inc, &mut buf);
        let (b, used) = decode_core_block(&buf).unwrap();
        assert_eq!(used, buf.len());
        assert_eq!(b.outgoing.len(), 1);
        assert_eq!(b.incoming[0].length, 6);
    }
}
