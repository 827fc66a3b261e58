//! Graph data model: node ids, distances, edge triplets and the mutable
//! adjacency structure that preprocessing reduces iteration by iteration.

use std::cmp::Ordering;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extsort::triplet_compare;

/// Dense, 0-based node identifier.
pub type NodeId = u32;

/// Width in bytes of one edge record, on disk and in the size measure of a
/// reduced graph.
pub const RECORD_BYTES: usize = 24;

/// Shortest-path distance. `UNREACHABLE` acts as +inf.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Distance(u64);

impl Distance {
    pub const ZERO: Distance = Distance(0);
    pub const UNREACHABLE: Distance = Distance(u64::MAX);

    /// Panics if `value` collides with the unreachable sentinel.
    pub fn finite(value: u64) -> Self {
        assert!(value != u64::MAX, "distance value collides with sentinel");
        Distance(value)
    }

    pub fn is_finite(self) -> bool {
        self.0 != u64::MAX
    }

    pub fn value(self) -> Option<u64> {
        self.is_finite().then_some(self.0)
    }

    /// Adds an edge length. Infinite stays infinite; finite overflow is an
    /// error rather than a wrap.
    pub fn add_len(self, length: u64) -> Result<Distance> {
        if !self.is_finite() {
            return Ok(self);
        }
        match self.0.checked_add(length) {
            Some(v) if v != u64::MAX => Ok(Distance(v)),
            _ => Err(Error::Overflow),
        }
    }

    pub fn plus(self, other: Distance) -> Result<Distance> {
        if !other.is_finite() {
            return Ok(Distance::UNREACHABLE);
        }
        self.add_len(other.0)
    }
}

impl fmt::Debug for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("INF"),
        }
    }
}

/// Direction of a triplet relative to its owning node.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sign {
    /// The edge is `<a, b>`.
    Outgoing,
    /// The edge is `<b, a>`.
    Incoming,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Outgoing => Sign::Incoming,
            Sign::Incoming => Sign::Outgoing,
        }
    }
}

/// Provenance of an edge. The declaration order is the final tie-break of
/// the triplet order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// Edge of the input graph.
    Original,
    /// Redundancy witness; only ever lives in the temporary sort file.
    Baseline,
    /// Shortcut proposal. Retained candidates are stored with this kind.
    Candidate,
}

impl EdgeKind {
    pub(crate) fn to_u8(self) -> u8 {
        match self {
            EdgeKind::Original => 0,
            EdgeKind::Baseline => 1,
            EdgeKind::Candidate => 2,
        }
    }

    pub(crate) fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(EdgeKind::Original),
            1 => Some(EdgeKind::Baseline),
            2 => Some(EdgeKind::Candidate),
            _ => None,
        }
    }
}

/// Signed directed edge record owned by node `a`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct EdgeTriplet {
    pub a: NodeId,
    pub b: NodeId,
    pub length: u64,
    pub sign: Sign,
    pub kind: EdgeKind,
    /// Node preceding the head of this edge on the path it stands for.
    pub pred_hint: NodeId,
}

impl EdgeTriplet {
    /// The outgoing triplet for edge `<from, to>`.
    pub fn outgoing(from: NodeId, to: NodeId, length: u64, kind: EdgeKind, pred_hint: NodeId) -> Self {
        EdgeTriplet {
            a: from,
            b: to,
            length,
            sign: Sign::Outgoing,
            kind,
            pred_hint,
        }
    }

    /// The same logical edge as seen from the other endpoint.
    pub fn mirror(&self) -> Self {
        EdgeTriplet {
            a: self.b,
            b: self.a,
            sign: self.sign.flip(),
            ..*self
        }
    }

    /// Tail of the logical edge.
    pub fn from(&self) -> NodeId {
        match self.sign {
            Sign::Outgoing => self.a,
            Sign::Incoming => self.b,
        }
    }

    /// Head of the logical edge.
    pub fn to(&self) -> NodeId {
        match self.sign {
            Sign::Outgoing => self.b,
            Sign::Incoming => self.a,
        }
    }

    fn same_slot(&self, other: &EdgeTriplet) -> bool {
        self.b == other.b && self.sign == other.sign
    }
}

impl PartialOrd for EdgeTriplet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EdgeTriplet {
    fn cmp(&self, other: &Self) -> Ordering {
        triplet_compare(self, other)
    }
}

/// Everything a removed node owned at the moment of its removal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovedNode {
    pub node: NodeId,
    pub outgoing: Vec<EdgeTriplet>,
    pub incoming: Vec<EdgeTriplet>,
}

/// In-memory reduced graph. Every node keeps one list holding both signs,
/// sorted by `(b, sign)` with at most one triplet per slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyGraph {
    lists: Vec<Vec<EdgeTriplet>>,
    alive: Vec<bool>,
    alive_count: usize,
    edge_count: usize,
}

impl AdjacencyGraph {
    pub fn new(n: usize) -> Self {
        AdjacencyGraph {
            lists: vec![Vec::new(); n],
            alive: vec![true; n],
            alive_count: n,
            edge_count: 0,
        }
    }

    /// Builds a graph of original edges. Self-loops are dropped and parallel
    /// edges collapse to the shortest one.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId, u64)>) -> Result<Self> {
        let mut list: Vec<(NodeId, NodeId, u64)> = Vec::new();
        for (u, w, len) in edges {
            if u as usize >= n || w as usize >= n {
                return Err(Error::UnknownNode(u.max(w) as u64));
            }
            if len == 0 || len == u64::MAX {
                return Err(Error::Validation {
                    line: 0,
                    message: format!("edge {u} -> {w} has invalid length {len}"),
                });
            }
            if u != w {
                list.push((u, w, len));
            }
        }
        let (g, _) = Self::assemble(n, list);
        Ok(g)
    }

    /// Returns the graph and the number of parallel edges dropped.
    fn assemble(n: usize, mut edges: Vec<(NodeId, NodeId, u64)>) -> (Self, usize) {
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup_by_key(|e| (e.0, e.1));
        let duplicates = before - edges.len();

        let mut g = AdjacencyGraph::new(n);
        for &(u, w, len) in &edges {
            let t = EdgeTriplet::outgoing(u, w, len, EdgeKind::Original, u);
            g.lists[u as usize].push(t);
            g.lists[w as usize].push(t.mirror());
        }
        for list in &mut g.lists {
            list.sort_unstable();
        }
        g.edge_count = edges.len();
        (g, duplicates)
    }

    pub fn node_count(&self) -> usize {
        self.lists.len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    /// Logical edges among alive nodes.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Size measure used against the memory budget.
    pub fn size_bytes(&self) -> u64 {
        (self.edge_count * RECORD_BYTES) as u64
    }

    pub fn is_alive(&self, v: NodeId) -> bool {
        self.alive.get(v as usize).copied().unwrap_or(false)
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(v, _)| v as NodeId)
    }

    pub fn triplets(&self, v: NodeId) -> &[EdgeTriplet] {
        &self.lists[v as usize]
    }

    pub fn outgoing(&self, v: NodeId) -> impl Iterator<Item = &EdgeTriplet> + '_ {
        self.lists[v as usize].iter().filter(|t| t.sign == Sign::Outgoing)
    }

    pub fn incoming(&self, v: NodeId) -> impl Iterator<Item = &EdgeTriplet> + '_ {
        self.lists[v as usize].iter().filter(|t| t.sign == Sign::Incoming)
    }

    /// Sorted, deduplicated incoming neighbors.
    pub fn in_neighbors(&self, v: NodeId) -> Vec<NodeId> {
        self.incoming(v).map(|t| t.b).collect()
    }

    /// Sorted, deduplicated outgoing neighbors.
    pub fn out_neighbors(&self, v: NodeId) -> Vec<NodeId> {
        self.outgoing(v).map(|t| t.b).collect()
    }

    /// All logical edges among alive nodes, as outgoing triplets.
    pub fn edges(&self) -> impl Iterator<Item = &EdgeTriplet> + '_ {
        self.alive_nodes().flat_map(move |v| self.outgoing(v))
    }

    /// Length of edge `<u, w>` if present.
    pub fn edge_length(&self, u: NodeId, w: NodeId) -> Option<u64> {
        let list = self.lists.get(u as usize)?;
        list.binary_search_by(|t| (t.b, t.sign).cmp(&(w, Sign::Outgoing)))
            .ok()
            .map(|i| list[i].length)
    }

    /// Inserts or overwrites edge `<u, w>` on both sides.
    pub fn upsert_edge(&mut self, u: NodeId, w: NodeId, length: u64, kind: EdgeKind, pred_hint: NodeId) {
        let t = EdgeTriplet::outgoing(u, w, length, kind, pred_hint);
        if Self::upsert(&mut self.lists[u as usize], t) {
            self.edge_count += 1;
        }
        Self::upsert(&mut self.lists[w as usize], t.mirror());
    }

    /// Returns true when `t` occupied a new slot.
    fn upsert(list: &mut Vec<EdgeTriplet>, t: EdgeTriplet) -> bool {
        match list.binary_search_by(|x| (x.b, x.sign).cmp(&(t.b, t.sign))) {
            Ok(i) => {
                list[i] = t;
                false
            }
            Err(i) => {
                list.insert(i, t);
                true
            }
        }
    }

    /// Direct access for fault injection in tests.
    #[doc(hidden)]
    pub fn triplets_mut(&mut self, v: NodeId) -> &mut Vec<EdgeTriplet> {
        &mut self.lists[v as usize]
    }

    /// Flips an alive flag without touching edges; for fault injection.
    #[doc(hidden)]
    pub fn set_alive_flag(&mut self, v: NodeId, alive: bool) {
        if self.alive[v as usize] != alive {
            self.alive[v as usize] = alive;
            if alive {
                self.alive_count += 1;
            } else {
                self.alive_count -= 1;
            }
        }
    }

    /// Removes `members` (pairwise non-adjacent) with every incident edge and
    /// returns their adjacency in the given order.
    pub(crate) fn remove_nodes(&mut self, members: &[NodeId]) -> Vec<RemovedNode> {
        let mut archives = Vec::with_capacity(members.len());
        let mut touched = Vec::new();
        for &v in members {
            let list = std::mem::take(&mut self.lists[v as usize]);
            let (outgoing, incoming): (Vec<_>, Vec<_>) =
                list.into_iter().partition(|t| t.sign == Sign::Outgoing);
            touched.extend(outgoing.iter().chain(incoming.iter()).map(|t| t.b));
            self.edge_count -= outgoing.len() + incoming.len();
            self.alive[v as usize] = false;
            self.alive_count -= 1;
            archives.push(RemovedNode {
                node: v,
                outgoing,
                incoming,
            });
        }
        touched.sort_unstable();
        touched.dedup();
        for u in touched {
            let alive = &self.alive;
            self.lists[u as usize].retain(|t| alive[t.b as usize]);
        }
        archives
    }

    /// Merges retained shortcut triplets, sorted by the triplet order, into
    /// the adjacency lists. A shortcut replaces an existing edge in its slot.
    pub(crate) fn merge_sorted(&mut self, triplets: &[EdgeTriplet]) {
        let mut start = 0;
        while start < triplets.len() {
            let owner = triplets[start].a;
            let mut end = start;
            while end < triplets.len() && triplets[end].a == owner {
                end += 1;
            }
            let list = std::mem::take(&mut self.lists[owner as usize]);
            let mut merged = Vec::with_capacity(list.len() + (end - start));
            let mut old = list.into_iter().peekable();
            for &t in &triplets[start..end] {
                while let Some(x) = old.peek() {
                    if (x.b, x.sign) < (t.b, t.sign) {
                        merged.push(old.next().unwrap());
                    } else {
                        break;
                    }
                }
                match old.peek() {
                    Some(x) if x.same_slot(&t) => {
                        let x = old.next().unwrap();
                        merged.push(if t.length < x.length { t } else { x });
                    }
                    _ => {
                        if t.sign == Sign::Outgoing {
                            self.edge_count += 1;
                        }
                        merged.push(t);
                    }
                }
            }
            merged.extend(old);
            self.lists[owner as usize] = merged;
            start = end;
        }
    }
}

/// Input flags that live on the command line rather than in the file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoadOptions {
    pub directed: bool,
    pub weighted: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            directed: true,
            weighted: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: AdjacencyGraph,
    /// Original label of each dense id, present only when input ids had to
    /// be remapped.
    pub labels: Option<Vec<u64>>,
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Parses the edge-list text format: header `n m`, then `m` lines
/// `u v [w]`. Lines starting with `#` are comments.
pub fn load_edge_list(source: impl BufRead, opts: LoadOptions) -> Result<LoadedGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut raw: Vec<(u64, u64, u64)> = Vec::new();
    let mut last_line = 0;

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((_, m)) = header else {
            if tokens.len() != 2 {
                return Err(parse_err(line_no, "header must be `n m`"));
            }
            let n = parse_count(tokens[0], line_no)?;
            let m = parse_count(tokens[1], line_no)?;
            header = Some((n, m));
            raw.reserve(m.min(1 << 24));
            continue;
        };
        if raw.len() == m {
            return Err(parse_err(line_no, format!("more than the {m} edges declared in the header")));
        }
        let expected = if opts.weighted { 3 } else { 2 };
        if tokens.len() != expected {
            return Err(parse_err(
                line_no,
                format!("expected {expected} fields, found {}", tokens.len()),
            ));
        }
        let u = parse_id(tokens[0], line_no)?;
        let v = parse_id(tokens[1], line_no)?;
        let w = if opts.weighted {
            parse_weight(tokens[2], line_no)?
        } else {
            1
        };
        raw.push((u, v, w));
    }

    let Some((n, m)) = header else {
        return Err(parse_err(last_line.max(1), "missing `n m` header"));
    };
    if raw.len() != m {
        return Err(parse_err(
            last_line + 1,
            format!("header declares {m} edges but {} were found", raw.len()),
        ));
    }
    if n > NodeId::MAX as usize {
        return Err(Error::Validation {
            line: 1,
            message: format!("node count {n} exceeds 32-bit ids"),
        });
    }

    let needs_remap = raw.iter().any(|&(u, v, _)| u >= n as u64 || v >= n as u64);
    let labels = if needs_remap {
        let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v, _)| [u, v]).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() > n {
            return Err(Error::Validation {
                line: 1,
                message: format!("{} distinct node ids exceed the declared node count {n}", ids.len()),
            });
        }
        for e in &mut raw {
            e.0 = ids.binary_search(&e.0).unwrap() as u64;
            e.1 = ids.binary_search(&e.1).unwrap() as u64;
        }
        // Declared nodes that never appear become isolated, labelled past
        // the largest seen label so the table stays sorted.
        let mut next = ids.last().map_or(0, |&l| l + 1);
        while ids.len() < n {
            ids.push(next);
            next += 1;
        }
        Some(ids)
    } else {
        None
    };

    let mut self_loops = 0;
    let mut edges = Vec::with_capacity(if opts.directed { raw.len() } else { 2 * raw.len() });
    for (u, v, w) in raw {
        if u == v {
            self_loops += 1;
            continue;
        }
        edges.push((u as NodeId, v as NodeId, w));
        if !opts.directed {
            edges.push((v as NodeId, u as NodeId, w));
        }
    }
    let (graph, mut duplicates) = AdjacencyGraph::assemble(n, edges);
    if !opts.directed {
        // each repeated undirected edge shows up once per orientation
        duplicates /= 2;
    }
    if self_loops > 0 || duplicates > 0 {
        log::warn!("dropped {self_loops} self-loops and {duplicates} parallel edges");
    }
    Ok(LoadedGraph {
        graph,
        labels,
        self_loops,
        duplicates,
    })
}

/// Writes alive nodes' outgoing edges in the weighted, directed edge-list
/// format.
pub fn write_edge_list(g: &AdjacencyGraph, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", g.node_count(), g.edge_count())?;
    for t in g.edges() {
        writeln!(out, "{} {} {}", t.a, t.b, t.length)?;
    }
    out.flush()
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_count(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("`{tok}` is not a count")))
}

fn parse_id(tok: &str, line: usize) -> Result<u64> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("`{tok}` is not a node id")))
}

fn parse_weight(tok: &str, line: usize) -> Result<u64> {
    if let Some(rest) = tok.strip_prefix('-') {
        if rest.parse::<u64>().is_ok() {
            return Err(Error::Validation {
                line,
                message: format!("non-positive weight {tok}"),
            });
        }
        return Err(parse_err(line, format!("`{tok}` is not a weight")));
    }
    match tok.parse::<u64>() {
        Ok(0) => Err(Error::Validation {
            line,
            message: "non-positive weight 0".into(),
        }),
        Ok(u64::MAX) => Err(Error::Validation {
            line,
            message: "weight too large".into(),
        }),
        Ok(w) => Ok(w),
        Err(_) => Err(parse_err(line, format!("`{tok}` is not a weight"))),
    }
}

/// A broken invariant of an [`AdjacencyGraph`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Both sides of `<from, to>` exist but disagree on length or hint.
    MirrorMismatch { from: NodeId, to: NodeId },
    /// One side of `<from, to>` has no counterpart.
    MissingMirror { from: NodeId, to: NodeId },
    /// `node` holds an edge to or from the removed node `other`, or `node`
    /// itself is removed yet still lists `other`.
    DeadEndpoint { node: NodeId, other: NodeId },
    ZeroLength { from: NodeId, to: NodeId },
    SelfLoop { node: NodeId },
    /// A list is out of order, has a duplicate slot, or holds a triplet
    /// owned by another node.
    MalformedList { node: NodeId },
}

/// Checks every [`AdjacencyGraph`] invariant; an empty report means the
/// graph is well-formed.
pub fn validate_graph(g: &AdjacencyGraph) -> Vec<Violation> {
    let mut report = Vec::new();
    for v in 0..g.node_count() as NodeId {
        let list = g.triplets(v);
        if !g.is_alive(v) {
            report.extend(list.iter().map(|t| Violation::DeadEndpoint { node: v, other: t.b }));
            continue;
        }
        let well_ordered = list.iter().all(|t| t.a == v)
            && list.windows(2).all(|w| (w[0].b, w[0].sign) < (w[1].b, w[1].sign));
        if !well_ordered {
            report.push(Violation::MalformedList { node: v });
        }
        for t in list {
            if t.b == v {
                report.push(Violation::SelfLoop { node: v });
                continue;
            }
            if !g.is_alive(t.b) {
                report.push(Violation::DeadEndpoint { node: v, other: t.b });
                continue;
            }
            if t.length == 0 && t.sign == Sign::Outgoing {
                report.push(Violation::ZeroLength { from: v, to: t.b });
            }
            let mirror = g.triplets(t.b).iter().find(|x| x.b == v && x.sign == t.sign.flip());
            match (mirror, t.sign) {
                (None, _) => report.push(Violation::MissingMirror {
                    from: t.from(),
                    to: t.to(),
                }),
                (Some(m), Sign::Outgoing) if m.length != t.length || m.pred_hint != t.pred_hint || m.kind != t.kind => {
                    report.push(Violation::MirrorMismatch { from: v, to: t.b })
                }
                _ => {}
            }
        }
    }
    report
}
