//! Iterative graph reduction: pick an independent set of low-importance
//! nodes, shortcut around them where no witness path exists, archive their
//! adjacency and repeat until the residual graph fits in memory.

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extsort::{triplet_compare, ExternalSorter, SortConfig, TripletRun, TripletSink};
use crate::graph::{AdjacencyGraph, EdgeKind, EdgeTriplet, NodeId, RemovedNode, RECORD_BYTES};
use crate::store::{IndexMeta, IndexWriter};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Memory budget M in bytes; the core graph must fit within it.
    pub memory_budget: u64,
    /// Disk block size B in bytes.
    pub block_size: u64,
    /// Two-hop baseline budget multiplier.
    pub baseline_factor: u64,
    pub median_sample_size: usize,
    /// Stop once an iteration shrinks the edge count by less than this.
    pub min_shrink: f64,
    pub rng_seed: u64,
    /// Where sort runs are spilled; the system temp dir when unset.
    #[serde(skip)]
    pub scratch_dir: Option<PathBuf>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            memory_budget: 64 << 20,
            block_size: 64 << 10,
            baseline_factor: 5,
            median_sample_size: 10_000,
            min_shrink: 0.05,
            rng_seed: 0,
            scratch_dir: None,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < RECORD_BYTES as u64 {
            return Err(Error::Config(format!(
                "block size {} is below one {RECORD_BYTES}-byte record",
                self.block_size
            )));
        }
        if self.memory_budget < self.block_size {
            return Err(Error::Config(format!(
                "memory budget {} is below the block size {}",
                self.memory_budget, self.block_size
            )));
        }
        if !(self.min_shrink > 0.0 && self.min_shrink < 1.0) {
            return Err(Error::Config(format!("min_shrink {} must lie in (0, 1)", self.min_shrink)));
        }
        if self.baseline_factor < 1 {
            return Err(Error::Config("baseline factor must be at least 1".into()));
        }
        if self.median_sample_size < 1 {
            return Err(Error::Config("median sample size must be at least 1".into()));
        }
        Ok(())
    }

    fn sort_config(&self) -> SortConfig {
        SortConfig {
            memory_budget: self.memory_budget,
            block_size: self.block_size,
        }
    }
}

/// Nodes removed in one iteration, with the neighbors they blocked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovalSet {
    pub iteration: u32,
    pub members: Vec<NodeId>,
    /// Sorted.
    pub blocked: Vec<NodeId>,
    pub threshold: u64,
    /// Set when the score threshold selected nothing and the single
    /// lowest-scoring node was taken instead.
    pub fallback: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: u32,
    pub removed: usize,
    pub threshold: u64,
    pub fallback: bool,
    pub candidates_emitted: u64,
    pub baselines_emitted: u64,
    pub shortcuts_retained: u64,
    pub edges_remaining: u64,
}

/// Output of one reduction step.
#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub removal: RemovalSet,
    /// Adjacency of each removed node, in `removal.members` order.
    pub archives: Vec<RemovedNode>,
    /// Retained shortcuts as outgoing triplets.
    pub shortcuts: Vec<EdgeTriplet>,
    pub stats: IterationStats,
}

fn intersection_len(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Importance score of a node from its sorted in- and out-neighbor sets:
/// `|in| * |out \ in| + |out| * |in \ out|`.
pub fn node_score(in_neighbors: &[NodeId], out_neighbors: &[NodeId]) -> u64 {
    let both = intersection_len(in_neighbors, out_neighbors) as u64;
    let (i, o) = (in_neighbors.len() as u64, out_neighbors.len() as u64);
    i * (o - both) + o * (i - both)
}

/// Score of an alive node of `g`.
pub fn score_of(g: &AdjacencyGraph, v: NodeId) -> u64 {
    node_score(&g.in_neighbors(v), &g.out_neighbors(v))
}

/// Lower median of the scores of a uniform sample (without replacement) of
/// alive nodes. `None` when no node is alive.
pub fn estimate_median_score(g: &AdjacencyGraph, sample_size: usize, seed: u64) -> Option<u64> {
    let alive: Vec<NodeId> = g.alive_nodes().collect();
    if alive.is_empty() {
        return None;
    }
    let k = sample_size.clamp(1, alive.len());
    let mut scores: Vec<u64> = if k == alive.len() {
        alive.iter().map(|&v| score_of(g, v)).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample(&mut rng, alive.len(), k).into_iter().map(|i| score_of(g, alive[i])).collect()
    };
    scores.sort_unstable();
    Some(scores[(scores.len() - 1) / 2])
}

/// Scans alive nodes by ascending id, taking every unblocked node whose score
/// is at most `threshold` and blocking its neighbors.
pub fn select_removal_set(g: &AdjacencyGraph, threshold: u64) -> Result<RemovalSet> {
    select_with(g, threshold, |v| score_of(g, v))
}

fn select_with(g: &AdjacencyGraph, threshold: u64, score: impl Fn(NodeId) -> u64) -> Result<RemovalSet> {
    let mut blocked = vec![false; g.node_count()];
    let mut members = Vec::new();
    for v in g.alive_nodes() {
        if blocked[v as usize] || score(v) > threshold {
            continue;
        }
        members.push(v);
        for t in g.triplets(v) {
            blocked[t.b as usize] = true;
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyRemoval);
    }
    Ok(RemovalSet {
        iteration: 0,
        blocked: blocked_list(&blocked),
        members,
        threshold,
        fallback: false,
    })
}

fn blocked_list(flags: &[bool]) -> Vec<NodeId> {
    flags
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(v, _)| v as NodeId)
        .collect()
}

fn member_flags(g: &AdjacencyGraph, r: &RemovalSet) -> Vec<bool> {
    let mut m = vec![false; g.node_count()];
    for &v in &r.members {
        m[v as usize] = true;
    }
    m
}

/// Emits a candidate shortcut `<u, w>` for every in-neighbor `u` and
/// out-neighbor `w != u` of each member, both signs. Returns the number of
/// logical candidates.
pub fn emit_candidate_edges(g: &AdjacencyGraph, r: &RemovalSet, sink: &mut impl TripletSink) -> Result<u64> {
    let mut count = 0;
    for &v in &r.members {
        for inc in g.incoming(v) {
            for out in g.outgoing(v) {
                if inc.b == out.b {
                    continue;
                }
                let length = inc.length.checked_add(out.length).ok_or(Error::Overflow)?;
                let t = EdgeTriplet::outgoing(inc.b, out.b, length, EdgeKind::Candidate, out.pred_hint);
                sink.push(t)?;
                sink.push(t.mirror())?;
                count += 1;
            }
        }
    }
    Ok(count)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BaselineCounts {
    /// Existing edges between surviving nodes.
    pub surviving: u64,
    pub two_hop: u64,
    pub attempts: u64,
}

impl BaselineCounts {
    pub fn total(&self) -> u64 {
        self.surviving + self.two_hop
    }
}

/// Emits witness edges: every edge with both endpoints outside the removal
/// set, plus up to `budget` sampled two-hop paths among surviving nodes.
pub fn emit_baseline_edges(
    g: &AdjacencyGraph,
    r: &RemovalSet,
    budget: u64,
    seed: u64,
    sink: &mut impl TripletSink,
) -> Result<BaselineCounts> {
    let member = member_flags(g, r);
    // Only edges from a member's in-neighbor to a member's out-neighbor can
    // share a sort group with a candidate; the rest would be filtered out anyway.
    let mut feeds = vec![false; g.node_count()];
    let mut fed = vec![false; g.node_count()];
    for &m in &r.members {
        for e in g.incoming(m) {
            feeds[e.b as usize] = true;
        }
        for e in g.outgoing(m) {
            fed[e.b as usize] = true;
        }
    }
    let mut counts = BaselineCounts::default();
    for v in g.alive_nodes() {
        if member[v as usize] || !feeds[v as usize] {
            continue;
        }
        for t in g.outgoing(v) {
            if member[t.b as usize] || !fed[t.b as usize] {
                continue;
            }
            let b = EdgeTriplet {
                kind: EdgeKind::Baseline,
                ..*t
            };
            sink.push(b)?;
            sink.push(b.mirror())?;
            counts.surviving += 1;
        }
    }

    // Prefix sums over list lengths; a uniform triplet is a uniform edge
    // since every edge is stored once per sign.
    let mut prefix = Vec::with_capacity(g.node_count() + 1);
    prefix.push(0u64);
    for v in 0..g.node_count() as NodeId {
        prefix.push(prefix.last().unwrap() + g.triplets(v).len() as u64);
    }
    let total = *prefix.last().unwrap();
    if total == 0 || budget == 0 {
        return Ok(counts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = budget.saturating_mul(4);
    let mut ins: Vec<&EdgeTriplet> = Vec::new();
    let mut outs: Vec<&EdgeTriplet> = Vec::new();
    while counts.two_hop < budget && counts.attempts < max_attempts {
        counts.attempts += 1;
        let x = rng.gen_range(0..total);
        let owner = prefix.partition_point(|&p| p <= x) - 1;
        let t = g.triplets(owner as NodeId)[(x - prefix[owner]) as usize];
        let (p, q) = (t.from(), t.to());
        let v = match (member[p as usize], member[q as usize]) {
            (false, false) => {
                if rng.gen() {
                    p
                } else {
                    q
                }
            }
            (false, true) => p,
            (true, false) => q,
            (true, true) => continue,
        };
        ins.clear();
        ins.extend(g.incoming(v).filter(|e| !member[e.b as usize]));
        outs.clear();
        outs.extend(g.outgoing(v).filter(|e| !member[e.b as usize]));
        if ins.is_empty() || outs.is_empty() {
            continue;
        }
        let inc = ins[rng.gen_range(0..ins.len())];
        let out = outs[rng.gen_range(0..outs.len())];
        if inc.b == out.b {
            continue;
        }
        let length = inc.length.checked_add(out.length).ok_or(Error::Overflow)?;
        let b = EdgeTriplet::outgoing(inc.b, out.b, length, EdgeKind::Baseline, out.pred_hint);
        sink.push(b)?;
        sink.push(b.mirror())?;
        counts.two_hop += 1;
    }
    Ok(counts)
}

/// Single pass over a sorted stream: within each `(a, b, sign)` group the
/// first triplet is kept iff it is a candidate.
pub fn filter_sorted_triplets(input: impl IntoIterator<Item = Result<EdgeTriplet>>) -> Result<Vec<EdgeTriplet>> {
    let mut kept = Vec::new();
    let mut prev: Option<EdgeTriplet> = None;
    for t in input {
        let t = t?;
        if let Some(p) = prev {
            if triplet_compare(&p, &t) == std::cmp::Ordering::Greater {
                return Err(Error::Internal(format!("sorted triplet stream is out of order at {p:?} > {t:?}")));
            }
            if (p.a, p.b, p.sign) == (t.a, t.b, t.sign) {
                continue;
            }
        }
        if t.kind == EdgeKind::Candidate {
            kept.push(t);
        }
        prev = Some(t);
    }
    Ok(kept)
}

pub fn filter_shortcuts(sorted: &TripletRun) -> Result<Vec<EdgeTriplet>> {
    filter_sorted_triplets(sorted.reader()?)
}

fn derive_seed(seed: u64, iteration: u32, salt: u64) -> u64 {
    let mut z = seed ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One reduction step on `g`: select, emit, sort, filter, then remove the
/// selected nodes and merge the retained shortcuts.
pub fn reduce_iteration(
    g: &mut AdjacencyGraph,
    cfg: &BuildConfig,
    iteration: u32,
    scratch: &Path,
) -> Result<IterationOutcome> {
    if g.alive_count() == 0 {
        return Err(Error::EmptyRemoval);
    }
    let scores: Vec<u64> = (0..g.node_count() as NodeId)
        .map(|v| if g.is_alive(v) { score_of(g, v) } else { 0 })
        .collect();
    let threshold = estimate_median_score(g, cfg.median_sample_size, derive_seed(cfg.rng_seed, iteration, 1))
        .ok_or(Error::EmptyRemoval)?;
    let mut removal = match select_with(g, threshold, |v| scores[v as usize]) {
        Ok(r) => r,
        Err(Error::EmptyRemoval) => {
            let v = g
                .alive_nodes()
                .min_by_key(|&v| (scores[v as usize], v))
                .ok_or(Error::EmptyRemoval)?;
            let mut blocked: Vec<NodeId> = g.triplets(v).iter().map(|t| t.b).collect();
            blocked.sort_unstable();
            blocked.dedup();
            RemovalSet {
                iteration,
                members: vec![v],
                blocked,
                threshold,
                fallback: true,
            }
        }
        Err(e) => return Err(e),
    };
    removal.iteration = iteration;
    // Never empty the graph: the last node standing becomes the core.
    if removal.members.len() == g.alive_count() {
        removal.members.pop();
        if removal.members.is_empty() {
            return Err(Error::EmptyRemoval);
        }
    }

    let budget = cfg
        .baseline_factor
        .saturating_mul(removal.members.iter().map(|&v| scores[v as usize]).sum::<u64>());
    let mut sorter = ExternalSorter::new(cfg.sort_config(), scratch)?;
    let candidates = emit_candidate_edges(g, &removal, &mut sorter)?;
    let baselines = emit_baseline_edges(g, &removal, budget, derive_seed(cfg.rng_seed, iteration, 2), &mut sorter)?;
    let (run, _) = sorter.finish()?;
    let retained = filter_shortcuts(&run)?;
    drop(run);

    let archives = g.remove_nodes(&removal.members);
    g.merge_sorted(&retained);
    let shortcuts: Vec<EdgeTriplet> = retained
        .into_iter()
        .filter(|t| t.sign == crate::graph::Sign::Outgoing)
        .collect();

    let stats = IterationStats {
        iteration,
        removed: removal.members.len(),
        threshold,
        fallback: removal.fallback,
        candidates_emitted: candidates,
        baselines_emitted: baselines.total(),
        shortcuts_retained: shortcuts.len() as u64,
        edges_remaining: g.edge_count() as u64,
    };
    log::debug!("iteration {iteration}: {stats:?}");
    Ok(IterationOutcome {
        removal,
        archives,
        shortcuts,
        stats,
    })
}

/// Builds an index for `g` in directory `dir`.
pub fn build_index(g: AdjacencyGraph, cfg: &BuildConfig, dir: &Path) -> Result<IndexMeta> {
    build_index_with(g, cfg, dir, None, |_| {})
}

/// Like [`build_index`], storing an id remap table and reporting every
/// iteration to `on_iteration`.
pub fn build_index_with(
    mut g: AdjacencyGraph,
    cfg: &BuildConfig,
    dir: &Path,
    labels: Option<Vec<u64>>,
    mut on_iteration: impl FnMut(&IterationStats),
) -> Result<IndexMeta> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(Error::Config("cannot index an empty graph".into()));
    }
    if g.alive_count() != g.node_count() {
        return Err(Error::Config("input graph has removed nodes".into()));
    }
    let max_edge_length = g.edges().map(|t| t.length).max().unwrap_or(0);
    let scratch = match &cfg.scratch_dir {
        Some(d) => tempfile::Builder::new().prefix("sort-").tempdir_in(d),
        None => tempfile::Builder::new().prefix("diskhop-sort-").tempdir(),
    }
    .map_err(|e| Error::io(cfg.scratch_dir.clone().unwrap_or_else(std::env::temp_dir), e))?;

    let mut writer = IndexWriter::create(dir, g.node_count(), cfg.block_size)?;
    let mut stats = Vec::new();
    let mut iteration = 0u32;
    while g.alive_count() > 1 {
        let before = g.edge_count();
        let outcome = match reduce_iteration(&mut g, cfg, iteration + 1, scratch.path()) {
            Ok(o) => o,
            Err(Error::EmptyRemoval) => {
                if g.size_bytes() > cfg.memory_budget {
                    return Err(Error::CoreTooLarge {
                        size: g.size_bytes(),
                        budget: cfg.memory_budget,
                    });
                }
                break;
            }
            Err(e) => return Err(e),
        };
        iteration += 1;
        for a in &outcome.archives {
            writer.append_removed_node(a, iteration)?;
        }
        on_iteration(&outcome.stats);
        stats.push(outcome.stats);

        let after = g.edge_count();
        let shrink = if before == 0 {
            0.0
        } else {
            before.saturating_sub(after) as f64 / before as f64
        };
        if g.size_bytes() <= cfg.memory_budget && shrink < cfg.min_shrink {
            break;
        }
    }
    writer.finalize(&g, cfg, stats, labels, max_edge_length)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_examples() {
        assert_eq!(node_score(&[], &[7]), 0);
        assert_eq!(node_score(&[1], &[2]), 2);
        assert_eq!(node_score(&[1, 2], &[2, 3]), 4);
        assert_eq!(node_score(&[1, 2], &[1, 2]), 0);
    }

    /// Leaves 1..=k point at the hub, which points at leaves k+1..=2k.
    fn star(k: u32) -> AdjacencyGraph {
        let edges = (1..=k).flat_map(|l| [(l, 0, 1), (0, l + k, 1)]);
        AdjacencyGraph::from_edges(2 * k as usize + 1, edges).unwrap()
    }

    #[test]
    fn median_is_lower_median() {
        // Path 0->1->2->3 plus 3->1: scores 0, 2, 4?, ...
        let g = AdjacencyGraph::from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)]).unwrap();
        let scores: Vec<u64> = (0..4).map(|v| score_of(&g, v)).collect();
        assert_eq!(scores, vec![0, 2, 2, 0]);
        assert_eq!(estimate_median_score(&g, 10_000, 1), Some(0));
        let s = star(4);
        assert_eq!(estimate_median_score(&s, 100, 9), Some(0));
    }

    #[test]
    fn median_of_constant_scores() {
        // A directed 3-cycle: every node has one in and one distinct out neighbor.
        let g = AdjacencyGraph::from_edges(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        assert_eq!(estimate_median_score(&g, 2, 3), Some(2));
    }

    #[test]
    fn sampled_median_is_deterministic() {
        let edges = (0..200u32).map(|i| (i, (i * 7 + 3) % 200, 1)).chain((0..200u32).map(|i| (i, (i * 13 + 5) % 200, 2)));
        let g = AdjacencyGraph::from_edges(200, edges).unwrap();
        let a = estimate_median_score(&g, 25, 42);
        assert_eq!(a, estimate_median_score(&g, 25, 42));
    }

    #[test]
    fn star_selects_leaves_and_blocks_center() {
        let g = star(3);
        let center = score_of(&g, 0);
        assert_eq!(center, 18);
        assert!((1..=6).all(|l| score_of(&g, l) == 0));
        let t = estimate_median_score(&g, 100, 1).unwrap();
        let r = select_removal_set(&g, t).unwrap();
        assert_eq!(r.members, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(r.blocked, vec![0]);
    }

    #[test]
    fn adjacent_low_scores_pick_lower_id() {
        let g = AdjacencyGraph::from_edges(2, [(0, 1, 1)]).unwrap();
        let r = select_removal_set(&g, 0).unwrap();
        assert_eq!(r.members, vec![0]);
        assert_eq!(r.blocked, vec![1]);
    }

    #[test]
    fn nothing_below_threshold_is_empty_removal() {
        let g = AdjacencyGraph::from_edges(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        assert!(matches!(select_removal_set(&g, 1), Err(Error::EmptyRemoval)));
    }

    #[test]
    fn candidates_take_pred_hint_of_second_hop() {
        let mut g = AdjacencyGraph::from_edges(3, [(0, 1, 2), (1, 2, 3)]).unwrap();
        g.upsert_edge(1, 2, 3, EdgeKind::Candidate, 9);
        let r = RemovalSet {
            iteration: 1,
            members: vec![1],
            blocked: vec![0, 2],
            threshold: 2,
            fallback: false,
        };
        let mut out = Vec::new();
        assert_eq!(emit_candidate_edges(&g, &r, &mut out).unwrap(), 1);
        assert_eq!(out[0], EdgeTriplet::outgoing(0, 2, 5, EdgeKind::Candidate, 9));
        assert_eq!(out[1], out[0].mirror());
    }

    #[test]
    fn no_in_neighbors_no_candidates() {
        let g = AdjacencyGraph::from_edges(3, [(0, 1, 1), (0, 2, 1)]).unwrap();
        let r = select_removal_set(&g, 0).unwrap();
        assert_eq!(r.members, vec![0]);
        let mut out = Vec::new();
        assert_eq!(emit_candidate_edges(&g, &r, &mut out).unwrap(), 0);
    }

    #[test]
    fn zero_budget_emits_only_competing_surviving_edges() {
        // 2 -> 3 cannot share a group with the candidate 0 -> 2.
        let g = AdjacencyGraph::from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 2, 5)]).unwrap();
        let r = RemovalSet {
            iteration: 1,
            members: vec![1],
            blocked: vec![0, 2],
            threshold: 9,
            fallback: false,
        };
        let mut out = Vec::new();
        let c = emit_baseline_edges(&g, &r, 0, 1, &mut out).unwrap();
        assert_eq!(c, BaselineCounts { surviving: 1, two_hop: 0, attempts: 0 });
        assert!(out.iter().all(|t| t.kind == EdgeKind::Baseline && t.length == 5));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn filter_rejects_unsorted_input() {
        let a = EdgeTriplet::outgoing(2, 3, 1, EdgeKind::Candidate, 2);
        let b = EdgeTriplet::outgoing(1, 3, 1, EdgeKind::Candidate, 1);
        let r = filter_sorted_triplets([Ok(a), Ok(b)]);
        assert!(matches!(r, Err(Error::Internal(_))));
    }

    #[test]
    fn filter_keeps_first_candidate_once() {
        let c = EdgeTriplet::outgoing(8, 9, 2, EdgeKind::Candidate, 4);
        let kept = filter_sorted_triplets([Ok(c), Ok(c), Ok(EdgeTriplet { length: 3, ..c })]).unwrap();
        assert_eq!(kept, vec![c]);
        let base = EdgeTriplet { kind: EdgeKind::Baseline, ..c };
        assert!(filter_sorted_triplets([Ok(base), Ok(c)]).unwrap().is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(BuildConfig::default().validate().is_ok());
        let bad = BuildConfig {
            memory_budget: 10,
            block_size: 64,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = BuildConfig {
            min_shrink: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
