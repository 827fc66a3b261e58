//! In-memory reference algorithms, index verification and closeness
//! estimation.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{AdjacencyGraph, Distance, EdgeKind, NodeId};
use crate::query::{DistanceResult, QueryEngine, QueryStats};
use crate::store::IndexBundle;

/// Largest graph accepted by [`exact_closeness`].
pub const EXACT_CLOSENESS_LIMIT: usize = 2_000;

/// Textbook Dijkstra over the original edges of `g`.
pub fn dijkstra_oracle(g: &AdjacencyGraph, s: NodeId) -> Result<DistanceResult> {
    dijkstra_filtered(g, s, true)
}

/// Dijkstra over every edge of `g`, shortcuts included, among alive nodes.
pub fn graph_distances(g: &AdjacencyGraph, s: NodeId) -> Result<Vec<Distance>> {
    Ok(dijkstra_filtered(g, s, false)?.distances)
}

fn dijkstra_filtered(g: &AdjacencyGraph, s: NodeId, originals_only: bool) -> Result<DistanceResult> {
    let n = g.node_count();
    if s as usize >= n {
        return Err(Error::UnknownNode(s as u64));
    }
    let mut dist = vec![Distance::UNREACHABLE; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[s as usize] = Distance::ZERO;
    heap.push(Reverse((Distance::ZERO, s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u as usize] {
            continue;
        }
        done[u as usize] = true;
        for e in g.outgoing(u).filter(|e| !originals_only || e.kind == EdgeKind::Original) {
            let nd = d.add_len(e.length)?;
            if nd < dist[e.b as usize] {
                dist[e.b as usize] = nd;
                pred[e.b as usize] = Some(u);
                heap.push(Reverse((nd, e.b)));
            }
        }
    }
    Ok(DistanceResult {
        source: s,
        distances: dist,
        predecessors: Some(pred),
        stats: QueryStats::default(),
    })
}

/// Length of the path `nodes` in `g`, if every hop is an edge.
pub fn path_length(g: &AdjacencyGraph, nodes: &[NodeId]) -> Option<u64> {
    nodes
        .windows(2)
        .try_fold(0u64, |acc, w| acc.checked_add(g.edge_length(w[0], w[1])?))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub checked: u64,
    pub violations: u64,
    /// First few violations.
    pub samples: Vec<String>,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult {
            name: name.into(),
            passed: true,
            ..Default::default()
        }
    }

    fn fail(&mut self, msg: impl FnOnce() -> String) {
        self.passed = false;
        self.violations += 1;
        if self.samples.len() < 10 {
            self.samples.push(msg());
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// An edge as stored in the index, with its tail and head.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoredEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub length: u64,
    pub pred_hint: NodeId,
    pub kind: EdgeKind,
}

/// Every edge held by the index, each once: forward blocks hold edges whose
/// tail was removed first, backward blocks those whose head was, and the
/// core the rest.
pub fn stored_edges(bundle: &IndexBundle) -> Result<Vec<StoredEdge>> {
    let mut out = Vec::new();
    for b in bundle.scan_forward(0)? {
        let b = b?;
        out.extend(b.edges.iter().map(|e| StoredEdge {
            from: b.node,
            to: e.endpoint,
            length: e.length,
            pred_hint: e.pred_hint,
            kind: e.kind,
        }));
    }
    for b in bundle.scan_backward_descending()? {
        let b = b?;
        out.extend(b.edges.iter().map(|e| StoredEdge {
            from: e.endpoint,
            to: b.node,
            length: e.length,
            pred_hint: e.pred_hint,
            kind: e.kind,
        }));
    }
    let core = bundle.load_core()?;
    for &u in core.nodes() {
        out.extend(core.outgoing(u).iter().map(|e| StoredEdge {
            from: u,
            to: e.endpoint,
            length: e.length,
            pred_hint: e.pred_hint,
            kind: e.kind,
        }));
    }
    Ok(out)
}

/// Checks each shortcut against the two archived edges `<from, x>` and
/// `<x, to>` of some lower-ranked node `x` that it must replace exactly.
fn witness_check(bundle: &IndexBundle, edges: &[StoredEdge]) -> Result<CheckResult> {
    let mut check = CheckResult::new("shortcut_witness");
    // tail -> [(removed node, length)] from backward blocks; (removed, head) -> (length, hint)
    let mut into_removed: HashMap<NodeId, Vec<(NodeId, u64)>> = HashMap::new();
    let mut out_of_removed: HashMap<(NodeId, NodeId), (u64, NodeId)> = HashMap::new();
    for b in bundle.scan_backward_descending()? {
        let b = b?;
        for e in &b.edges {
            into_removed.entry(e.endpoint).or_default().push((b.node, e.length));
        }
    }
    for b in bundle.scan_forward(0)? {
        let b = b?;
        for e in &b.edges {
            out_of_removed.insert((b.node, e.endpoint), (e.length, e.pred_hint));
        }
    }
    for e in edges.iter().filter(|e| e.kind != EdgeKind::Original) {
        check.checked += 1;
        let limit = bundle.rank(e.from).min(bundle.rank(e.to));
        let found = into_removed.get(&e.from).is_some_and(|vias| {
            vias.iter().any(|&(x, first)| {
                bundle.rank(x) < limit
                    && out_of_removed
                        .get(&(x, e.to))
                        .is_some_and(|&(second, hint)| first.checked_add(second) == Some(e.length) && hint == e.pred_hint)
            })
        });
        if !found {
            check.fail(|| {
                format!(
                    "shortcut {} -> {} (length {}) has no two-hop witness",
                    e.from, e.to, e.length
                )
            });
        }
    }
    Ok(check)
}

/// Oracle distances from every tail of the given edges, in parallel.
fn distances_from(g: &AdjacencyGraph, tails: &[NodeId]) -> Result<HashMap<NodeId, Vec<Distance>>> {
    tails
        .par_iter()
        .map(|&u| dijkstra_oracle(g, u).map(|r| (u, r.distances)))
        .collect()
}

/// Checks an index against the graph it was built from: structure,
/// shortcut soundness and witnesses, and query equality on sampled sources
/// and pairs.
pub fn verify_bundle(g: &AdjacencyGraph, bundle: &IndexBundle, sample_sources: usize, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let n = g.node_count();

    let mut structure = CheckResult::new("structure");
    if bundle.node_count() != n {
        structure.fail(|| format!("index has {} nodes, graph has {n}", bundle.node_count()));
        checks.push(structure);
        return Ok(VerifyReport { passed: false, checks });
    }
    let violations = bundle.check_structure()?;
    structure.checked = 1;
    for v in violations {
        structure.fail(|| v);
    }
    checks.push(structure);

    let edges = stored_edges(bundle)?;
    let mut originals = CheckResult::new("original_edges");
    for e in edges.iter().filter(|e| e.kind == EdgeKind::Original) {
        originals.checked += 1;
        if g.edge_length(e.from, e.to) != Some(e.length) || e.pred_hint != e.from {
            originals.fail(|| format!("stored edge {} -> {} (length {}) differs from the input", e.from, e.to, e.length));
        }
    }
    checks.push(originals);

    let mut tails: Vec<NodeId> = edges
        .iter()
        .filter(|e| e.kind != EdgeKind::Original)
        .map(|e| e.from)
        .collect();
    tails.sort_unstable();
    tails.dedup();
    let dist = distances_from(g, &tails)?;
    let mut soundness = CheckResult::new("shortcut_soundness");
    for e in edges.iter().filter(|e| e.kind != EdgeKind::Original) {
        soundness.checked += 1;
        let d = dist[&e.from][e.to as usize];
        if d > Distance::finite(e.length) {
            soundness.fail(|| format!("shortcut {} -> {} has length {} but the graph distance is {d}", e.from, e.to, e.length));
        }
    }
    checks.push(soundness);
    checks.push(witness_check(bundle, &edges)?);

    let engine = QueryEngine::new(IndexBundle::open(bundle.dir())?.with_block_size(bundle.block_size())?)?;
    let k = sample_sources.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources: Vec<NodeId> = sample(&mut rng, n, k).into_iter().map(|i| i as NodeId).collect();

    let mut ssd = CheckResult::new("ssd_equality");
    let mut paths = CheckResult::new("sssp_paths");
    let per_source: Vec<Result<(NodeId, DistanceResult, DistanceResult)>> = sources
        .par_iter()
        .map(|&s| Ok((s, engine.sssp(s)?, dijkstra_oracle(g, s)?)))
        .collect();
    for item in per_source {
        let (s, got, want) = item?;
        for v in 0..n as NodeId {
            ssd.checked += 1;
            if got.distance(v) != want.distance(v) {
                ssd.fail(|| format!("dist({s}, {v}): index {} oracle {}", got.distance(v), want.distance(v)));
            }
            if want.distance(v).is_finite() {
                paths.checked += 1;
                let len = got.path_to(v).and_then(|p| path_length(g, &p));
                if len.map(Distance::finite) != Some(want.distance(v)) {
                    paths.fail(|| format!("path {s} -> {v}: recorded length {len:?}, distance {}", want.distance(v)));
                }
            }
        }
    }
    checks.push(ssd);
    checks.push(paths);

    let mut ppd = CheckResult::new("ppd_equality");
    let pairs: Vec<(NodeId, NodeId)> = (0..k)
        .map(|_| (rng.gen_range(0..n) as NodeId, rng.gen_range(0..n) as NodeId))
        .collect();
    let results: Vec<Result<(NodeId, NodeId, Distance, Distance)>> = pairs
        .par_iter()
        .map(|&(s, t)| {
            let got = engine.ppd(s, t)?.distance;
            let want = dijkstra_oracle(g, s)?.distance(t);
            Ok((s, t, got, want))
        })
        .collect();
    for r in results {
        let (s, t, got, want) = r?;
        ppd.checked += 1;
        if got != want {
            ppd.fail(|| format!("ppd({s}, {t}): index {got} oracle {want}"));
        }
    }
    checks.push(ppd);

    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Per-node closeness from distances into each node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosenessScores {
    /// `(n - 1) / sum of finite distances into v`, or 0 when nothing reaches v.
    pub closeness: Vec<f64>,
    /// Sum of finite distances into v divided by `n - 1`.
    pub average_distance: Vec<f64>,
    /// Nodes other than v that reach v.
    pub reached_by: Vec<usize>,
}

/// Exact closeness from all-sources Dijkstra. Refuses graphs above
/// [`EXACT_CLOSENESS_LIMIT`] nodes.
pub fn exact_closeness(g: &AdjacencyGraph) -> Result<ClosenessScores> {
    let n = g.node_count();
    if n > EXACT_CLOSENESS_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: EXACT_CLOSENESS_LIMIT,
        });
    }
    let zero = || (vec![0u128; n], vec![0usize; n]);
    let (sums, counts) = (0..n as NodeId)
        .into_par_iter()
        .map(|s| dijkstra_oracle(g, s))
        .try_fold(zero, |(mut sums, mut counts), r| {
            let r = r?;
            for (v, d) in r.distances.iter().enumerate() {
                if let (Some(d), true) = (d.value(), v as NodeId != r.source) {
                    sums[v] += d as u128;
                    counts[v] += 1;
                }
            }
            Ok::<_, Error>((sums, counts))
        })
        .try_reduce(zero, |(mut a, mut ac), (b, bc)| {
            for v in 0..n {
                a[v] += b[v];
                ac[v] += bc[v];
            }
            Ok((a, ac))
        })?;
    let denom = n.saturating_sub(1).max(1) as f64;
    Ok(ClosenessScores {
        closeness: sums
            .iter()
            .map(|&s| if s == 0 { 0.0 } else { (n - 1) as f64 / s as f64 })
            .collect(),
        average_distance: sums.iter().map(|&s| s as f64 / denom).collect(),
        reached_by: counts,
    })
}

/// Number of sampled sources for additive error `epsilon`:
/// `ceil(ln n / epsilon^2)`, at least 1.
pub fn closeness_sample_count(n: usize, epsilon: f64) -> usize {
    if n <= 1 {
        return 1;
    }
    let k = ((n as f64).ln() / (epsilon * epsilon)).ceil();
    // Guard against 460.00000001-style rounding from the division.
    let rounded = k.round();
    let k = if (k - rounded).abs() < 1e-9 { rounded } else { k };
    (k as usize).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosenessEstimate {
    pub epsilon: f64,
    pub k: usize,
    /// Single-source queries actually run.
    pub queries: usize,
    pub sources: Vec<NodeId>,
    pub penalty: u64,
    pub average_distance: Vec<f64>,
    pub closeness: Vec<f64>,
}

/// Sampling estimator: `k` uniform sources drawn with replacement, one
/// single-source query each. Unreached samples count as `penalty`
/// (default `n * max edge length`).
pub fn approx_closeness(engine: &QueryEngine, epsilon: f64, seed: u64, penalty: Option<u64>) -> Result<ClosenessEstimate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    let n = engine.node_count();
    let k = closeness_sample_count(n, epsilon);
    let penalty = penalty.unwrap_or_else(|| (n as u64).saturating_mul(engine.bundle().meta().max_edge_length.max(1)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources: Vec<NodeId> = (0..k).map(|_| rng.gen_range(0..n) as NodeId).collect();
    let issued = AtomicUsize::new(0);
    let zero = || vec![0u128; n];
    let sums = sources
        .par_iter()
        .map(|&s| {
            issued.fetch_add(1, Ordering::Relaxed);
            engine.ssd(s)
        })
        .try_fold(zero, |mut acc, r| {
            let r = r?;
            for (v, d) in r.distances.iter().enumerate() {
                acc[v] += d.value().unwrap_or(penalty) as u128;
            }
            Ok::<_, Error>(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            Ok(a)
        })?;
    let scale = if n > 1 {
        n as f64 / (k as f64 * (n - 1) as f64)
    } else {
        0.0
    };
    let average_distance: Vec<f64> = sums.iter().map(|&s| scale * s as f64).collect();
    let closeness = average_distance
        .iter()
        .map(|&a| if a > 0.0 { 1.0 / a } else { 0.0 })
        .collect();
    Ok(ClosenessEstimate {
        epsilon,
        k,
        queries: issued.into_inner(),
        sources,
        penalty,
        average_distance,
        closeness,
    })
}
