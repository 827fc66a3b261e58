use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::graph::NodeId;
use crate::preprocess::{BuildConfig, IterationStats};

use super::io::{BlockReader, IoTrace};
use super::layout::*;

const NOT_ARCHIVED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileInfo {
    pub bytes: u64,
    pub crc32: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileTable {
    pub forward: FileInfo,
    pub backward: FileInfo,
    pub core: FileInfo,
}

/// Contents of `meta.json`. Both offset tables are indexed by forward
/// position; `order` maps a forward position back to its node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub format_version: u32,
    pub n: u32,
    pub core_rank: u32,
    pub core_nodes: u32,
    pub core_edges: u64,
    pub core_size_bytes: u64,
    pub max_edge_length: u64,
    pub order: Vec<NodeId>,
    pub ranks: Vec<u32>,
    pub forward_offsets: Vec<u64>,
    pub backward_offsets: Vec<u64>,
    pub config: BuildConfig,
    pub files: FileTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u64>>,
    pub iterations: Vec<IterationStats>,
}

/// A finished index directory opened for reading.
#[derive(Debug)]
pub struct IndexBundle {
    dir: PathBuf,
    meta: IndexMeta,
    theta: Vec<u32>,
    block_size: u64,
}

impl IndexBundle {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(META_FILE);
        let file = File::open(&meta_path).at(&meta_path)?;
        let meta: IndexMeta = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Corrupt(format!("{}: {e}", meta_path.display())))?;
        Self::from_meta(dir, meta)
    }

    fn from_meta(dir: &Path, meta: IndexMeta) -> Result<Self> {
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::Corrupt(format!("unsupported format version {}", meta.format_version)));
        }
        let n = meta.n as usize;
        let archived = meta.order.len();
        if meta.ranks.len() != n || meta.forward_offsets.len() != archived || meta.backward_offsets.len() != archived {
            return Err(Error::Corrupt("metadata tables have inconsistent lengths".into()));
        }
        if meta.labels.as_ref().is_some_and(|l| l.len() != n || l.windows(2).any(|w| w[0] >= w[1])) {
            return Err(Error::Corrupt("label table is not one sorted label per node".into()));
        }
        if archived + meta.core_nodes as usize != n {
            return Err(Error::Corrupt("archived and core node counts do not add up".into()));
        }
        let mut theta = vec![NOT_ARCHIVED; n];
        for (pos, &v) in meta.order.iter().enumerate() {
            let slot = theta
                .get_mut(v as usize)
                .ok_or_else(|| Error::Corrupt(format!("order names unknown node {v}")))?;
            if *slot != NOT_ARCHIVED {
                return Err(Error::Corrupt(format!("node {v} appears twice in the forward order")));
            }
            *slot = pos as u32;
        }
        for (name, info) in [
            (FORWARD_FILE, meta.files.forward),
            (BACKWARD_FILE, meta.files.backward),
            (CORE_FILE, meta.files.core),
        ] {
            let p = dir.join(name);
            let len = std::fs::metadata(&p).at(&p)?.len();
            if len != info.bytes {
                return Err(Error::Corrupt(format!("{name} holds {len} bytes, metadata says {}", info.bytes)));
            }
        }
        let block_size = meta.config.block_size;
        Ok(IndexBundle {
            dir: dir.to_path_buf(),
            meta,
            theta,
            block_size,
        })
    }

    /// Overrides the block size used by readers.
    pub fn with_block_size(mut self, block_size: u64) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::Config("block size must be positive".into()));
        }
        self.block_size = block_size;
        Ok(self)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> &IndexMeta {
        &self.meta
    }

    pub fn block_size(&self) -> u64 {
        self.block_size
    }

    pub fn node_count(&self) -> usize {
        self.meta.n as usize
    }

    /// Nodes stored in the forward/backward files.
    pub fn archived_count(&self) -> usize {
        self.meta.order.len()
    }

    pub fn rank(&self, v: NodeId) -> u32 {
        self.meta.ranks[v as usize]
    }

    pub fn is_core(&self, v: NodeId) -> bool {
        self.theta[v as usize] == NOT_ARCHIVED
    }

    /// Forward-file position of a non-core node.
    pub fn theta(&self, v: NodeId) -> Option<u32> {
        match self.theta[v as usize] {
            NOT_ARCHIVED => None,
            t => Some(t),
        }
    }

    pub fn node_at(&self, theta: u32) -> NodeId {
        self.meta.order[theta as usize]
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if (v as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownNode(v as u64))
        }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn forward_span(&self, theta: u32) -> (u64, u64) {
        let offsets = &self.meta.forward_offsets;
        let start = offsets[theta as usize];
        let end = offsets
            .get(theta as usize + 1)
            .copied()
            .unwrap_or(self.meta.files.forward.bytes);
        (start, end - start)
    }

    fn backward_span(&self, theta: u32) -> (u64, u64) {
        let offsets = &self.meta.backward_offsets;
        let start = offsets[theta as usize];
        let end = match theta {
            0 => self.meta.files.backward.bytes,
            t => offsets[t as usize - 1],
        };
        (start, end - start)
    }

    /// Cursor over the forward file starting at position `from`.
    pub fn scan_forward(&self, from: u32) -> Result<ForwardCursor<'_>> {
        let len = self.archived_count() as u32;
        if from > len {
            return Err(Error::OutOfRange { position: from, len });
        }
        Ok(ForwardCursor {
            bundle: self,
            reader: BlockReader::open(&self.path(FORWARD_FILE), self.block_size)?,
            next: from,
            last: None,
        })
    }

    /// Every backward block front to back, i.e. by descending position.
    pub fn scan_backward_descending(&self) -> Result<BackwardCursor<'_>> {
        self.backward_cursor(true)
    }

    /// Backward blocks from the end of the file, i.e. by ascending position.
    pub fn scan_backward_ascending_rank(&self) -> Result<BackwardCursor<'_>> {
        self.backward_cursor(false)
    }

    fn backward_cursor(&self, descending: bool) -> Result<BackwardCursor<'_>> {
        let len = self.archived_count() as u32;
        let mut reader = BlockReader::open(&self.path(BACKWARD_FILE), self.block_size)?;
        reader.set_reverse(!descending);
        Ok(BackwardCursor {
            bundle: self,
            reader,
            descending,
            remaining: if descending { len } else { 0 },
            last: None,
        })
    }

    pub fn load_core(&self) -> Result<CoreGraph> {
        Ok(self.load_core_traced()?.0)
    }

    /// Loads the core graph and returns the block trace of the load.
    pub fn load_core_traced(&self) -> Result<(CoreGraph, IoTrace)> {
        if self.meta.core_nodes == 0 {
            return Err(Error::Corrupt("index has an empty core graph".into()));
        }
        let mut reader = BlockReader::open(&self.path(CORE_FILE), self.block_size)?;
        let len = reader.len();
        let bytes = reader.read(0, len)?;
        if crc32fast::hash(bytes) != self.meta.files.core.crc32 {
            return Err(Error::Corrupt(format!("{CORE_FILE}: checksum mismatch")));
        }
        let core = CoreGraph::decode(bytes, self.node_count(), self.meta.core_nodes as usize)?;
        if core.edge_count() as u64 != self.meta.core_edges {
            return Err(Error::Corrupt("core edge count differs from metadata".into()));
        }
        for &v in core.nodes() {
            if !self.is_core(v) {
                return Err(Error::Corrupt(format!("core file holds archived node {v}")));
            }
        }
        Ok((core, reader.into_trace()))
    }

    /// Recomputes the checksum of each file; returns the names that differ.
    pub fn verify_checksums(&self) -> Result<Vec<&'static str>> {
        let mut bad = Vec::new();
        for (name, info) in [
            (FORWARD_FILE, self.meta.files.forward),
            (BACKWARD_FILE, self.meta.files.backward),
            (CORE_FILE, self.meta.files.core),
        ] {
            let p = self.path(name);
            let mut f = BufReader::new(File::open(&p).at(&p)?);
            let mut h = crc32fast::Hasher::new();
            let mut buf = vec![0u8; 1 << 16];
            loop {
                let k = f.read(&mut buf).at(&p)?;
                if k == 0 {
                    break;
                }
                h.update(&buf[..k]);
            }
            if h.finalize() != info.crc32 {
                bad.push(name);
            }
        }
        Ok(bad)
    }

    /// Full sweep of the structural invariants. Returns one message per
    /// violation; IO and decoding failures are errors.
    pub fn check_structure(&self) -> Result<Vec<String>> {
        let mut v = Vec::new();
        for name in self.verify_checksums()? {
            v.push(format!("{name}: checksum mismatch"));
        }
        let core_rank = self.meta.core_rank;
        let mut max_archived_rank = 0;
        for (node, &r) in self.meta.ranks.iter().enumerate() {
            let node = node as NodeId;
            if self.is_core(node) {
                if r != core_rank {
                    v.push(format!("core node {node} has rank {r}, expected {core_rank}"));
                }
            } else {
                max_archived_rank = max_archived_rank.max(r);
                if r == 0 || r >= core_rank {
                    v.push(format!("archived node {node} has rank {r} outside [1, {core_rank})"));
                }
            }
        }
        if self.archived_count() > 0 && core_rank != max_archived_rank + 1 {
            v.push(format!("core rank {core_rank} is not one above the top archived rank {max_archived_rank}"));
        }
        for w in self.meta.order.windows(2) {
            if self.rank(w[0]) > self.rank(w[1]) {
                v.push(format!("forward order places node {} before lower-ranked node {}", w[0], w[1]));
            }
        }

        let mut fwd = self.scan_forward(0)?;
        for theta in 0..self.archived_count() as u32 {
            let b = fwd.block(theta)?;
            for e in &b.edges {
                if self.rank(e.endpoint) <= self.rank(b.node) {
                    v.push(format!(
                        "forward edge {} -> {} does not climb in rank ({} -> {})",
                        b.node,
                        e.endpoint,
                        self.rank(b.node),
                        self.rank(e.endpoint)
                    ));
                }
            }
        }
        let mut bwd = self.scan_backward_descending()?;
        let mut expected = self.archived_count() as u32;
        while let Some(b) = bwd.next_block()? {
            expected -= 1;
            if b.node != self.node_at(expected) {
                v.push(format!(
                    "backward block {} holds node {}, expected node {}",
                    self.archived_count() as u32 - 1 - expected,
                    b.node,
                    self.node_at(expected)
                ));
            }
            for e in &b.edges {
                if self.rank(e.endpoint) <= self.rank(b.node) {
                    v.push(format!(
                        "backward edge {} -> {} does not come from a higher rank",
                        e.endpoint, b.node
                    ));
                }
            }
        }
        if !v.is_empty() && v.iter().any(|m| m.starts_with(CORE_FILE)) {
            return Ok(v);
        }
        let core = self.load_core()?;
        for &u in core.nodes() {
            for e in core.outgoing(u).iter().chain(core.incoming(u)) {
                if !core.contains(e.endpoint) {
                    v.push(format!("core edge between {u} and non-core node {}", e.endpoint));
                }
            }
        }
        if self.meta.core_size_bytes > self.meta.config.memory_budget {
            v.push(format!(
                "core size {} exceeds memory budget {}",
                self.meta.core_size_bytes, self.meta.config.memory_budget
            ));
        }
        Ok(v)
    }
}

/// Forward-file cursor; positions must be requested in non-decreasing order.
pub struct ForwardCursor<'a> {
    bundle: &'a IndexBundle,
    reader: BlockReader,
    next: u32,
    last: Option<u32>,
}

impl ForwardCursor<'_> {
    pub fn block(&mut self, theta: u32) -> Result<Block> {
        let len = self.bundle.archived_count() as u32;
        if theta >= len {
            return Err(Error::OutOfRange { position: theta, len });
        }
        if let Some(last) = self.last {
            if theta < last {
                return Err(Error::ScanOrder { requested: theta, last });
            }
        }
        self.last = Some(theta);
        self.next = theta + 1;
        let (off, n) = self.bundle.forward_span(theta);
        let b = decode_block(self.reader.read(off, n)?)?;
        if b.node != self.bundle.node_at(theta) {
            return Err(Error::Corrupt(format!("forward block {theta} holds node {}", b.node)));
        }
        Ok(b)
    }

    pub fn trace(&self) -> &IoTrace {
        self.reader.trace()
    }

    pub fn into_trace(self) -> IoTrace {
        self.reader.into_trace()
    }

    pub fn buffer_bytes(&self) -> usize {
        self.reader.buffer_bytes()
    }
}

impl Iterator for ForwardCursor<'_> {
    type Item = Result<Block>;

    fn next(&mut self) -> Option<Self::Item> {
        if (self.next as usize) >= self.bundle.archived_count() {
            return None;
        }
        Some(self.block(self.next))
    }
}

/// Backward-file cursor in one of two directions.
///
/// Descending: front to back, positions decreasing. Ascending: back to front,
/// positions increasing. Requests against the direction are rejected.
pub struct BackwardCursor<'a> {
    bundle: &'a IndexBundle,
    reader: BlockReader,
    descending: bool,
    remaining: u32,
    last: Option<u32>,
}

impl BackwardCursor<'_> {
    pub fn block(&mut self, theta: u32) -> Result<Block> {
        let len = self.bundle.archived_count() as u32;
        if theta >= len {
            return Err(Error::OutOfRange { position: theta, len });
        }
        if let Some(last) = self.last {
            let against = if self.descending { theta > last } else { theta < last };
            if against {
                return Err(Error::ScanOrder { requested: theta, last });
            }
        }
        self.last = Some(theta);
        self.remaining = if self.descending { theta } else { theta + 1 };
        let (off, n) = self.bundle.backward_span(theta);
        let b = decode_block(self.reader.read(off, n)?)?;
        if b.node != self.bundle.node_at(theta) {
            return Err(Error::Corrupt(format!("backward block for position {theta} holds node {}", b.node)));
        }
        Ok(b)
    }

    /// Next block in this cursor's direction, if any.
    pub fn next_block(&mut self) -> Result<Option<Block>> {
        let len = self.bundle.archived_count() as u32;
        if self.descending {
            if self.remaining == 0 {
                return Ok(None);
            }
            self.block(self.remaining - 1).map(Some)
        } else {
            if self.remaining >= len {
                return Ok(None);
            }
            self.block(self.remaining).map(Some)
        }
    }

    pub fn trace(&self) -> &IoTrace {
        self.reader.trace()
    }

    pub fn into_trace(self) -> IoTrace {
        self.reader.into_trace()
    }

    pub fn buffer_bytes(&self) -> usize {
        self.reader.buffer_bytes()
    }
}

impl Iterator for BackwardCursor<'_> {
    type Item = Result<Block>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_block().transpose()
    }
}

/// Memory-resident core graph in compressed sparse row form.
#[derive(Clone, Debug)]
pub struct CoreGraph {
    slot: Vec<u32>,
    nodes: Vec<NodeId>,
    out_start: Vec<usize>,
    out_edges: Vec<IndexEdge>,
    in_start: Vec<usize>,
    in_edges: Vec<IndexEdge>,
    file_bytes: u64,
}

impl CoreGraph {
    fn decode(mut bytes: &[u8], n: usize, expected_nodes: usize) -> Result<Self> {
        let file_bytes = bytes.len() as u64;
        let mut g = CoreGraph {
            slot: vec![NOT_ARCHIVED; n],
            nodes: Vec::with_capacity(expected_nodes),
            out_start: vec![0],
            out_edges: Vec::new(),
            in_start: vec![0],
            in_edges: Vec::new(),
            file_bytes,
        };
        while !bytes.is_empty() {
            let (b, used) = decode_core_block(bytes)?;
            bytes = &bytes[used..];
            let s = g
                .slot
                .get_mut(b.node as usize)
                .ok_or_else(|| Error::Corrupt(format!("core names unknown node {}", b.node)))?;
            if *s != NOT_ARCHIVED {
                return Err(Error::Corrupt(format!("core lists node {} twice", b.node)));
            }
            *s = g.nodes.len() as u32;
            g.nodes.push(b.node);
            g.out_edges.extend(b.outgoing);
            g.out_start.push(g.out_edges.len());
            g.in_edges.extend(b.incoming);
            g.in_start.push(g.in_edges.len());
        }
        if g.nodes.len() != expected_nodes {
            return Err(Error::Corrupt(format!(
                "core holds {} nodes, metadata says {expected_nodes}",
                g.nodes.len()
            )));
        }
        Ok(g)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.slot.get(v as usize).is_some_and(|&s| s != NOT_ARCHIVED)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.len()
    }

    pub fn outgoing(&self, v: NodeId) -> &[IndexEdge] {
        match self.slot.get(v as usize) {
            Some(&s) if s != NOT_ARCHIVED => &self.out_edges[self.out_start[s as usize]..self.out_start[s as usize + 1]],
            _ => &[],
        }
    }

    pub fn incoming(&self, v: NodeId) -> &[IndexEdge] {
        match self.slot.get(v as usize) {
            Some(&s) if s != NOT_ARCHIVED => &self.in_edges[self.in_start[s as usize]..self.in_start[s as usize + 1]],
            _ => &[],
        }
    }

    /// Size of the core file this graph was loaded from.
    pub fn file_bytes(&self) -> u64 {
        self.file_bytes
    }

    /// Heap bytes held by the loaded structure.
    pub fn heap_bytes(&self) -> usize {
        use std::mem::size_of;
        self.slot.capacity() * size_of::<u32>()
            + self.nodes.capacity() * size_of::<NodeId>()
            + (self.out_start.capacity() + self.in_start.capacity()) * size_of::<usize>()
            + (self.out_edges.capacity() + self.in_edges.capacity()) * size_of::<IndexEdge>()
    }
}
