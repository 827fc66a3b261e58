//! Distance queries over a built index.
//!
//! A single-source query runs three phases: a forward pass over the forward
//! file in position order, Dijkstra on the in-memory core, and one heap-free
//! pass over the backward file. A point-to-point query runs the forward pass
//! from the source, the mirrored pass from the target over the backward file,
//! and a bidirectional search on the core.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::mem::size_of;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Distance, NodeId};
use crate::store::{CoreGraph, IndexBundle, IndexEdge, IoTrace};

const NO_PRED: NodeId = NodeId::MAX;

/// Running total of tracked allocations with its high-water mark.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MemoryAccount {
    current: usize,
    peak: usize,
}

impl MemoryAccount {
    pub fn charge(&mut self, bytes: usize) {
        self.current += bytes;
        self.peak = self.peak.max(self.current);
    }

    pub fn release(&mut self, bytes: usize) {
        self.current = self.current.saturating_sub(bytes);
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn peak(&self) -> usize {
        self.peak
    }
}

/// Min-heap of `(key, node)` that counts its operations and remembers its
/// largest allocation.
#[derive(Debug)]
pub struct TrackedHeap<K: Ord> {
    heap: BinaryHeap<Reverse<(K, NodeId)>>,
    pushes: u64,
    pops: u64,
    peak_bytes: usize,
}

impl<K: Ord + Copy> TrackedHeap<K> {
    pub fn new() -> Self {
        TrackedHeap {
            heap: BinaryHeap::new(),
            pushes: 0,
            pops: 0,
            peak_bytes: 0,
        }
    }

    pub fn push(&mut self, key: K, node: NodeId) {
        self.heap.push(Reverse((key, node)));
        self.pushes += 1;
        self.peak_bytes = self
            .peak_bytes
            .max(self.heap.capacity() * size_of::<Reverse<(K, NodeId)>>());
    }

    pub fn pop(&mut self) -> Option<(K, NodeId)> {
        let Reverse(top) = self.heap.pop()?;
        self.pops += 1;
        Some(top)
    }

    pub fn peek(&self) -> Option<(K, NodeId)> {
        self.heap.peek().map(|Reverse(top)| *top)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn pushes(&self) -> u64 {
        self.pushes
    }

    pub fn pops(&self) -> u64 {
        self.pops
    }

    pub fn peak_bytes(&self) -> usize {
        self.peak_bytes
    }
}

impl<K: Ord + Copy> Default for TrackedHeap<K> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PhaseStats {
    pub ran: bool,
    pub pushes: u64,
    pub pops: u64,
    /// Pops discarded because a shorter entry for the node came first.
    pub stale_pops: u64,
    /// Nodes whose adjacency was expanded.
    pub expanded: u64,
    pub relaxations: u64,
    pub improvements: u64,
    /// Largest number of times one node was expanded; core search only.
    pub max_expansions_per_node: u32,
    pub io: Option<IoTrace>,
}

impl PhaseStats {
    fn heap<K: Ord + Copy>(&mut self, h: &TrackedHeap<K>) {
        self.pushes += h.pushes();
        self.pops += h.pops();
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryStats {
    pub forward: PhaseStats,
    /// Backward pass from the target of a point-to-point query.
    pub target_side: PhaseStats,
    pub core: PhaseStats,
    pub backward: PhaseStats,
    /// Trace of loading the core file, when the query loaded it.
    pub core_load: Option<IoTrace>,
    /// Peak of distance tables, heaps and read buffers.
    pub peak_tracked_bytes: usize,
    /// Heap bytes of the loaded core graph.
    pub core_bytes: usize,
}

/// Per-query distance tables.
#[derive(Clone, Debug)]
pub struct SearchState {
    /// Upper bounds on the distance from the source.
    pub kappa_f: Vec<Distance>,
    /// Upper bounds on the distance to the target; empty unless needed.
    pub kappa_b: Vec<Distance>,
    pred: Option<Vec<NodeId>>,
    pub stats: QueryStats,
    pub memory: MemoryAccount,
}

impl SearchState {
    pub fn new(n: usize, with_pred: bool, with_target: bool) -> Self {
        let mut memory = MemoryAccount::default();
        memory.charge(n * size_of::<Distance>());
        if with_target {
            memory.charge(n * size_of::<Distance>());
        }
        if with_pred {
            memory.charge(n * size_of::<NodeId>());
        }
        SearchState {
            kappa_f: vec![Distance::UNREACHABLE; n],
            kappa_b: if with_target {
                vec![Distance::UNREACHABLE; n]
            } else {
                Vec::new()
            },
            pred: with_pred.then(|| vec![NO_PRED; n]),
            stats: QueryStats::default(),
            memory,
        }
    }

    pub fn predecessor(&self, v: NodeId) -> Option<NodeId> {
        self.pred
            .as_ref()
            .and_then(|p| Some(p[v as usize]).filter(|&u| u != NO_PRED))
    }

    /// Relaxes `<u, e.endpoint>` into the forward table.
    fn relax_forward(&mut self, du: Distance, e: &IndexEdge) -> Result<bool> {
        let nd = du.add_len(e.length)?;
        let v = e.endpoint as usize;
        if nd < self.kappa_f[v] {
            self.kappa_f[v] = nd;
            if let Some(p) = &mut self.pred {
                p[v] = e.pred_hint;
            }
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Relaxes `<e.endpoint, v>` into the backward table given `dv = kappa_b(v)`.
    fn relax_backward(&mut self, dv: Distance, e: &IndexEdge) -> Result<bool> {
        let nd = dv.add_len(e.length)?;
        let u = e.endpoint as usize;
        if nd < self.kappa_b[u] {
            self.kappa_b[u] = nd;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn charge_transient(&mut self, bytes: usize) {
        self.memory.charge(bytes);
        self.memory.release(bytes);
    }
}

/// Single-source result; predecessors only for path queries.
#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub source: NodeId,
    pub distances: Vec<Distance>,
    pub predecessors: Option<Vec<Option<NodeId>>>,
    pub stats: QueryStats,
}

impl DistanceResult {
    pub fn distance(&self, v: NodeId) -> Distance {
        self.distances[v as usize]
    }

    pub fn predecessor(&self, v: NodeId) -> Option<NodeId> {
        self.predecessors.as_ref().and_then(|p| p[v as usize])
    }

    /// Nodes on the recorded path from the source to `v`, both included.
    /// `None` if `v` is unreachable or the predecessor chain is broken.
    pub fn path_to(&self, v: NodeId) -> Option<Vec<NodeId>> {
        self.predecessors.as_ref()?;
        if !self.distance(v).is_finite() {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while cur != self.source {
            cur = self.predecessor(cur)?;
            path.push(cur);
            if path.len() > self.distances.len() {
                return None;
            }
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Clone, Debug)]
pub struct PointDistance {
    pub source: NodeId,
    pub target: NodeId,
    pub distance: Distance,
    pub stats: QueryStats,
}

/// Forward pass: expands non-core nodes reachable from `s` in forward-file
/// order, updating the forward table. Core-resident sources skip the pass.
pub fn forward_search(bundle: &IndexBundle, s: NodeId, st: &mut SearchState) -> Result<()> {
    bundle.check_node(s)?;
    st.kappa_f[s as usize] = Distance::ZERO;
    let Some(start) = bundle.theta(s) else {
        return Ok(());
    };
    let mut cursor = bundle.scan_forward(start)?;
    let mut heap = TrackedHeap::new();
    let mut phase = PhaseStats {
        ran: true,
        ..Default::default()
    };
    heap.push(start, s);
    while let Some((theta, u)) = heap.pop() {
        let block = cursor.block(theta)?;
        phase.expanded += 1;
        let du = st.kappa_f[u as usize];
        for e in &block.edges {
            phase.relaxations += 1;
            let first = !st.kappa_f[e.endpoint as usize].is_finite();
            if st.relax_forward(du, e)? {
                phase.improvements += 1;
                if first {
                    if let Some(t) = bundle.theta(e.endpoint) {
                        heap.push(t, e.endpoint);
                    }
                }
            }
        }
    }
    phase.heap(&heap);
    st.charge_transient(heap.peak_bytes() + cursor.buffer_bytes());
    phase.io = Some(cursor.into_trace());
    st.stats.forward = phase;
    Ok(())
}

/// Dijkstra over the core seeded with every core node holding a finite
/// forward distance. Uses lazy deletion instead of decrease-key.
pub fn core_search_ssd(core: &CoreGraph, st: &mut SearchState) -> Result<()> {
    let mut heap = TrackedHeap::new();
    let mut expansions = vec![0u32; st.kappa_f.len()];
    let mut phase = PhaseStats {
        ran: true,
        ..Default::default()
    };
    for &v in core.nodes() {
        let d = st.kappa_f[v as usize];
        if d.is_finite() {
            heap.push(d, v);
        }
    }
    while let Some((d, u)) = heap.pop() {
        if expansions[u as usize] > 0 || d > st.kappa_f[u as usize] {
            phase.stale_pops += 1;
            continue;
        }
        expansions[u as usize] += 1;
        phase.expanded += 1;
        for e in core.outgoing(u) {
            phase.relaxations += 1;
            if st.relax_forward(d, e)? {
                phase.improvements += 1;
                heap.push(st.kappa_f[e.endpoint as usize], e.endpoint);
            }
        }
    }
    phase.max_expansions_per_node = expansions.iter().copied().max().unwrap_or(0);
    phase.heap(&heap);
    st.charge_transient(heap.peak_bytes() + expansions.capacity() * size_of::<u32>());
    st.stats.core = phase;
    Ok(())
}

/// One front-to-back pass over the backward file; every block's sources
/// already hold final distances when it is read.
pub fn backward_scan_ssd(bundle: &IndexBundle, st: &mut SearchState) -> Result<()> {
    let mut cursor = bundle.scan_backward_descending()?;
    let mut phase = PhaseStats {
        ran: true,
        ..Default::default()
    };
    while let Some(block) = cursor.next_block()? {
        phase.expanded += 1;
        for e in &block.edges {
            let du = st.kappa_f[e.endpoint as usize];
            if !du.is_finite() {
                continue;
            }
            phase.relaxations += 1;
            let nd = du.add_len(e.length)?;
            let v = block.node as usize;
            if nd < st.kappa_f[v] {
                st.kappa_f[v] = nd;
                if let Some(p) = &mut st.pred {
                    p[v] = e.pred_hint;
                }
                phase.improvements += 1;
            }
        }
    }
    st.charge_transient(cursor.buffer_bytes());
    phase.io = Some(cursor.into_trace());
    st.stats.backward = phase;
    Ok(())
}

fn single_source(bundle: &IndexBundle, core: &CoreGraph, s: NodeId, with_pred: bool) -> Result<DistanceResult> {
    bundle.check_node(s)?;
    let mut st = SearchState::new(bundle.node_count(), with_pred, false);
    st.memory.charge(core.heap_bytes());
    st.stats.core_bytes = core.heap_bytes();
    forward_search(bundle, s, &mut st)?;
    core_search_ssd(core, &mut st)?;
    backward_scan_ssd(bundle, &mut st)?;
    st.stats.peak_tracked_bytes = st.memory.peak();
    let predecessors = st.pred.take().map(|p| {
        p.into_iter()
            .enumerate()
            .map(|(v, u)| (u != NO_PRED && v as NodeId != s).then_some(u))
            .collect()
    });
    Ok(DistanceResult {
        source: s,
        distances: st.kappa_f,
        predecessors,
        stats: st.stats,
    })
}

/// Distances from `s` to every node.
pub fn ssd_query(bundle: &IndexBundle, s: NodeId) -> Result<DistanceResult> {
    bundle.check_node(s)?;
    let (core, trace) = bundle.load_core_traced()?;
    let mut r = single_source(bundle, &core, s, false)?;
    r.stats.core_load = Some(trace);
    Ok(r)
}

/// Distances and shortest-path predecessors from `s`.
pub fn sssp_query(bundle: &IndexBundle, s: NodeId) -> Result<DistanceResult> {
    bundle.check_node(s)?;
    let (core, trace) = bundle.load_core_traced()?;
    let mut r = single_source(bundle, &core, s, true)?;
    r.stats.core_load = Some(trace);
    Ok(r)
}

/// Forward half of a point-to-point query.
pub fn ppd_forward(bundle: &IndexBundle, s: NodeId, st: &mut SearchState) -> Result<()> {
    forward_search(bundle, s, st)
}

/// Target half of a point-to-point query: climbs from `t` through the
/// backward file in ascending position order, filling `kappa_b`.
pub fn ppd_backward(bundle: &IndexBundle, t: NodeId, st: &mut SearchState) -> Result<()> {
    bundle.check_node(t)?;
    st.kappa_b[t as usize] = Distance::ZERO;
    let Some(start) = bundle.theta(t) else {
        return Ok(());
    };
    let mut cursor = bundle.scan_backward_ascending_rank()?;
    let mut heap = TrackedHeap::new();
    let mut phase = PhaseStats {
        ran: true,
        ..Default::default()
    };
    heap.push(start, t);
    while let Some((theta, v)) = heap.pop() {
        let block = cursor.block(theta)?;
        phase.expanded += 1;
        let dv = st.kappa_b[v as usize];
        for e in &block.edges {
            phase.relaxations += 1;
            let first = !st.kappa_b[e.endpoint as usize].is_finite();
            if st.relax_backward(dv, e)? {
                phase.improvements += 1;
                if first {
                    if let Some(p) = bundle.theta(e.endpoint) {
                        heap.push(p, e.endpoint);
                    }
                }
            }
        }
    }
    phase.heap(&heap);
    st.charge_transient(heap.peak_bytes() + cursor.buffer_bytes());
    phase.io = Some(cursor.into_trace());
    st.stats.target_side = phase;
    Ok(())
}

fn sum(a: Distance, b: Distance) -> Result<Distance> {
    a.plus(b)
}

/// Drops stale entries from the top of a distance-keyed heap.
fn clean_top(heap: &mut TrackedHeap<Distance>, kappa: &[Distance], done: &[bool], stale: &mut u64) -> Option<Distance> {
    while let Some((d, v)) = heap.peek() {
        if done[v as usize] || d > kappa[v as usize] {
            heap.pop();
            *stale += 1;
        } else {
            return Some(d);
        }
    }
    None
}

/// Alternating Dijkstra on the core from both ends, seeded with the finite
/// entries of both tables. Returns the best source-target distance.
pub fn bidirectional_core_search(core: &CoreGraph, st: &mut SearchState) -> Result<Distance> {
    let n = st.kappa_f.len();
    let mut best = Distance::UNREACHABLE;
    for v in 0..n {
        if st.kappa_f[v].is_finite() && st.kappa_b[v].is_finite() {
            best = best.min(sum(st.kappa_f[v], st.kappa_b[v])?);
        }
    }
    let mut qf = TrackedHeap::new();
    let mut qb = TrackedHeap::new();
    for &v in core.nodes() {
        if st.kappa_f[v as usize].is_finite() {
            qf.push(st.kappa_f[v as usize], v);
        }
        if st.kappa_b[v as usize].is_finite() {
            qb.push(st.kappa_b[v as usize], v);
        }
    }
    let mut done_f = vec![false; n];
    let mut done_b = vec![false; n];
    let mut phase = PhaseStats {
        ran: true,
        ..Default::default()
    };
    let mut forward_turn = true;
    loop {
        let top_f = clean_top(&mut qf, &st.kappa_f, &done_f, &mut phase.stale_pops);
        let top_b = clean_top(&mut qb, &st.kappa_b, &done_b, &mut phase.stale_pops);
        let go_forward = match (top_f, top_b) {
            (None, None) => break,
            (Some(f), Some(b)) => {
                if best <= sum(f, b)? {
                    break;
                }
                forward_turn
            }
            (Some(f), None) => {
                if best <= f {
                    break;
                }
                true
            }
            (None, Some(b)) => {
                if best <= b {
                    break;
                }
                false
            }
        };
        forward_turn = !go_forward;
        phase.expanded += 1;
        if go_forward {
            let (d, u) = qf.pop().expect("non-empty");
            done_f[u as usize] = true;
            if st.kappa_b[u as usize].is_finite() {
                best = best.min(sum(d, st.kappa_b[u as usize])?);
            }
            for e in core.outgoing(u) {
                phase.relaxations += 1;
                if st.relax_forward(d, e)? {
                    phase.improvements += 1;
                    let w = e.endpoint as usize;
                    qf.push(st.kappa_f[w], e.endpoint);
                    if st.kappa_b[w].is_finite() {
                        best = best.min(sum(st.kappa_f[w], st.kappa_b[w])?);
                    }
                }
            }
        } else {
            let (d, v) = qb.pop().expect("non-empty");
            done_b[v as usize] = true;
            if st.kappa_f[v as usize].is_finite() {
                best = best.min(sum(st.kappa_f[v as usize], d)?);
            }
            for e in core.incoming(v) {
                phase.relaxations += 1;
                if st.relax_backward(d, e)? {
                    phase.improvements += 1;
                    let u = e.endpoint as usize;
                    qb.push(st.kappa_b[u], e.endpoint);
                    if st.kappa_f[u].is_finite() {
                        best = best.min(sum(st.kappa_f[u], st.kappa_b[u])?);
                    }
                }
            }
        }
    }
    phase.heap(&qf);
    phase.heap(&qb);
    st.charge_transient(qf.peak_bytes() + qb.peak_bytes() + 2 * n);
    st.stats.core = phase;
    Ok(best)
}

fn point_to_point(bundle: &IndexBundle, core: &CoreGraph, s: NodeId, t: NodeId) -> Result<PointDistance> {
    bundle.check_node(s)?;
    bundle.check_node(t)?;
    let mut st = SearchState::new(bundle.node_count(), false, true);
    st.memory.charge(core.heap_bytes());
    st.stats.core_bytes = core.heap_bytes();
    ppd_forward(bundle, s, &mut st)?;
    ppd_backward(bundle, t, &mut st)?;
    let distance = bidirectional_core_search(core, &mut st)?;
    st.stats.peak_tracked_bytes = st.memory.peak();
    Ok(PointDistance {
        source: s,
        target: t,
        distance,
        stats: st.stats,
    })
}

/// Distance from `s` to `t`.
pub fn ppd_query(bundle: &IndexBundle, s: NodeId, t: NodeId) -> Result<PointDistance> {
    bundle.check_node(s)?;
    bundle.check_node(t)?;
    let (core, trace) = bundle.load_core_traced()?;
    let mut r = point_to_point(bundle, &core, s, t)?;
    r.stats.core_load = Some(trace);
    Ok(r)
}

/// An opened index with its core graph loaded once, for many queries.
/// Queries take `&self` and may run concurrently.
#[derive(Debug)]
pub struct QueryEngine {
    bundle: IndexBundle,
    core: CoreGraph,
    core_load: IoTrace,
}

impl QueryEngine {
    pub fn new(bundle: IndexBundle) -> Result<Self> {
        let (core, core_load) = bundle.load_core_traced()?;
        Ok(QueryEngine {
            bundle,
            core,
            core_load,
        })
    }

    pub fn open(dir: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::new(IndexBundle::open(dir)?)
    }

    pub fn bundle(&self) -> &IndexBundle {
        &self.bundle
    }

    pub fn core(&self) -> &CoreGraph {
        &self.core
    }

    pub fn core_load_trace(&self) -> &IoTrace {
        &self.core_load
    }

    pub fn node_count(&self) -> usize {
        self.bundle.node_count()
    }

    pub fn ssd(&self, s: NodeId) -> Result<DistanceResult> {
        single_source(&self.bundle, &self.core, s, false)
    }

    pub fn sssp(&self, s: NodeId) -> Result<DistanceResult> {
        single_source(&self.bundle, &self.core, s, true)
    }

    pub fn ppd(&self, s: NodeId, t: NodeId) -> Result<PointDistance> {
        point_to_point(&self.bundle, &self.core, s, t)
    }

    /// Maps an external label to a dense id when the index was built with a
    /// remap table; otherwise labels are ids.
    pub fn resolve(&self, label: u64) -> Result<NodeId> {
        match &self.bundle.meta().labels {
            Some(labels) => labels
                .binary_search(&label)
                .map(|i| i as NodeId)
                .map_err(|_| Error::UnknownNode(label)),
            None if label < self.node_count() as u64 => Ok(label as NodeId),
            None => Err(Error::UnknownNode(label)),
        }
    }

    /// Inverse of [`QueryEngine::resolve`].
    pub fn label(&self, v: NodeId) -> u64 {
        match &self.bundle.meta().labels {
            Some(labels) => labels[v as usize],
            None => v as u64,
        }
    }
}
