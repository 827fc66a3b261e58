#![allow(dead_code)]

use std::path::Path;

use diskhop::{AdjacencyGraph, BuildConfig, IndexBundle, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The ten-node example network; node `k` here is `v(k+1)`.
pub const FIXTURE_EDGES: &[(NodeId, NodeId, u64)] = &[
    (0, 8, 1),
    (3, 1, 1),
    (9, 2, 1),
    (7, 3, 1),
    (3, 8, 1),
    (8, 5, 1),
    (5, 6, 1),
    (6, 9, 1),
    (9, 4, 1),
    (4, 8, 2),
    (9, 7, 1),
    (9, 8, 3),
    // Long edges that shape the first removal round without changing any
    // distance from v1.
    (4, 1, 10),
    (5, 1, 10),
    (6, 2, 10),
    (7, 2, 10),
];

/// `v(k)` as a node id.
pub fn v(k: NodeId) -> NodeId {
    k - 1
}

pub fn fixture() -> AdjacencyGraph {
    AdjacencyGraph::from_edges(10, FIXTURE_EDGES.iter().copied()).unwrap()
}

/// Two edges of memory, one edge per block, and a shrink rule that keeps
/// reducing until the core is that small.
pub fn fixture_config() -> BuildConfig {
    BuildConfig {
        memory_budget: 48,
        block_size: 48,
        min_shrink: 0.99,
        ..Default::default()
    }
}

/// Directed graph with `m` distinct random edges, lengths in `1..=max_len`.
pub fn random_graph(n: usize, m: usize, max_len: u64, seed: u64) -> AdjacencyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = std::collections::BTreeMap::new();
    while edges.len() < m {
        let u = rng.gen_range(0..n as NodeId);
        let w = rng.gen_range(0..n as NodeId);
        if u != w {
            edges.entry((u, w)).or_insert_with(|| rng.gen_range(1..=max_len));
        }
    }
    AdjacencyGraph::from_edges(n, edges.into_iter().map(|((u, w), l)| (u, w, l))).unwrap()
}

/// Random graph that is strongly connected through a Hamiltonian cycle.
pub fn strongly_connected_graph(n: usize, extra: usize, max_len: u64, seed: u64) -> AdjacencyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = std::collections::BTreeMap::new();
    for u in 0..n as NodeId {
        edges.insert((u, (u + 1) % n as NodeId), rng.gen_range(1..=max_len));
    }
    while edges.len() < n + extra {
        let u = rng.gen_range(0..n as NodeId);
        let w = rng.gen_range(0..n as NodeId);
        if u != w {
            edges.entry((u, w)).or_insert_with(|| rng.gen_range(1..=max_len));
        }
    }
    AdjacencyGraph::from_edges(n, edges.into_iter().map(|((u, w), l)| (u, w, l))).unwrap()
}

pub fn build(g: &AdjacencyGraph, cfg: &BuildConfig, dir: &Path) -> IndexBundle {
    diskhop::build_index(g.clone(), cfg, dir).unwrap();
    IndexBundle::open(dir).unwrap()
}

pub fn small_config(seed: u64) -> BuildConfig {
    BuildConfig {
        memory_budget: 64 << 10,
        block_size: 4 << 10,
        rng_seed: seed,
        ..Default::default()
    }
}

/// Grid whose every street is one-way in a random direction.
pub fn oneway_grid(side: NodeId, max_len: u64, seed: u64) -> AdjacencyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |r: NodeId, c: NodeId| r * side + c;
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let mut street = |a: NodeId, b: NodeId| {
                let l = rng.gen_range(1..=max_len);
                edges.push(if rng.gen() { (a, b, l) } else { (b, a, l) });
            };
            if c + 1 < side {
                street(id(r, c), id(r, c + 1));
            }
            if r + 1 < side {
                street(id(r, c), id(r + 1, c));
            }
        }
    }
    AdjacencyGraph::from_edges((side * side) as usize, edges).unwrap()
}

/// SHA-256 over every file of an index directory, in name order.
pub fn bundle_digest(dir: &Path) -> String {
    use sha2::{Digest, Sha256};
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for name in names {
        h.update(name.as_encoded_bytes());
        h.update(std::fs::read(dir.join(&name)).unwrap());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
