//! Python module `diskhop`.

use std::path::PathBuf;

use diskhop::graph::{load_edge_list, LoadOptions};
use diskhop::oracle::{approx_closeness, dijkstra_oracle, verify_bundle};
use diskhop::{AdjacencyGraph, BuildConfig, Distance, Error, IndexBundle, NodeId, QueryEngine};
use pyo3::exceptions::{PyIOError, PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::UnknownNode(_) => PyIndexError::new_err(e.to_string()),
        Error::Parse { .. } | Error::Validation { .. } | Error::Config(_) | Error::TooLarge { .. } => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// `(node, distance, predecessor)`.
type PathRow = (u64, Option<u64>, Option<u64>);

fn dist(d: Distance) -> Option<u64> {
    d.value()
}

/// Directed graph with positive integer edge lengths.
#[pyclass(name = "Graph", module = "diskhop")]
struct PyGraph {
    graph: AdjacencyGraph,
    labels: Option<Vec<u64>>,
}

#[pymethods]
impl PyGraph {
    /// Graph on nodes `0..n` from `(u, v, length)` triples.
    #[new]
    fn new(n: usize, edges: Vec<(NodeId, NodeId, u64)>) -> PyResult<Self> {
        let graph = AdjacencyGraph::from_edges(n, edges).map_err(to_py)?;
        Ok(PyGraph { graph, labels: None })
    }

    /// Reads an edge-list file: header `n m`, then `u v [w]` lines.
    #[staticmethod]
    #[pyo3(signature = (path, directed = true, weighted = true))]
    fn load(path: PathBuf, directed: bool, weighted: bool) -> PyResult<Self> {
        let file = std::fs::File::open(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        let loaded = load_edge_list(std::io::BufReader::new(file), LoadOptions { directed, weighted }).map_err(to_py)?;
        Ok(PyGraph {
            graph: loaded.graph,
            labels: loaded.labels,
        })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Original node labels when the input ids were remapped.
    #[getter]
    fn labels(&self) -> Option<Vec<u64>> {
        self.labels.clone()
    }

    /// Exact distances from `source` by in-memory Dijkstra.
    fn dijkstra(&self, py: Python<'_>, source: NodeId) -> PyResult<Vec<Option<u64>>> {
        let r = py.detach(|| dijkstra_oracle(&self.graph, source)).map_err(to_py)?;
        Ok(r.distances.into_iter().map(dist).collect())
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.graph.node_count(), self.graph.edge_count())
    }
}

/// Builds an index for `graph` in directory `path` and opens it.
#[pyfunction]
#[pyo3(signature = (
    graph, path, memory_budget = 64 << 20, block_size = 64 << 10, baseline_factor = 5,
    median_sample_size = 10_000, min_shrink = 0.05, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn build_index(
    py: Python<'_>,
    graph: &PyGraph,
    path: PathBuf,
    memory_budget: u64,
    block_size: u64,
    baseline_factor: u64,
    median_sample_size: usize,
    min_shrink: f64,
    seed: u64,
) -> PyResult<PyIndex> {
    let cfg = BuildConfig {
        memory_budget,
        block_size,
        baseline_factor,
        median_sample_size,
        min_shrink,
        rng_seed: seed,
        scratch_dir: None,
    };
    let g = graph.graph.clone();
    let labels = graph.labels.clone();
    py.detach(|| diskhop::build_index_with(g, &cfg, &path, labels, |_| {}))
        .map_err(to_py)?;
    PyIndex::open(py, path)
}

/// An index directory opened for queries. Node arguments and results use
/// the graph's original labels.
#[pyclass(name = "Index", module = "diskhop", frozen)]
struct PyIndex {
    engine: QueryEngine,
}

impl PyIndex {
    fn node(&self, label: u64) -> PyResult<NodeId> {
        self.engine.resolve(label).map_err(to_py)
    }

    fn labelled(&self, values: Vec<Distance>) -> Vec<(u64, Option<u64>)> {
        values
            .into_iter()
            .enumerate()
            .map(|(v, d)| (self.engine.label(v as NodeId), dist(d)))
            .collect()
    }
}

#[pymethods]
impl PyIndex {
    #[new]
    fn open(py: Python<'_>, path: PathBuf) -> PyResult<Self> {
        let engine = py.detach(|| QueryEngine::open(&path)).map_err(to_py)?;
        Ok(PyIndex { engine })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.engine.node_count()
    }

    /// `[(node, distance or None)]` from `source` to every node.
    fn ssd(&self, py: Python<'_>, source: u64) -> PyResult<Vec<(u64, Option<u64>)>> {
        let s = self.node(source)?;
        let r = py.detach(|| self.engine.ssd(s)).map_err(to_py)?;
        Ok(self.labelled(r.distances))
    }

    /// `[(node, distance or None, predecessor or None)]` from `source`.
    fn sssp(&self, py: Python<'_>, source: u64) -> PyResult<Vec<PathRow>> {
        let s = self.node(source)?;
        let r = py.detach(|| self.engine.sssp(s)).map_err(to_py)?;
        Ok((0..self.engine.node_count() as NodeId)
            .map(|v| {
                (
                    self.engine.label(v),
                    dist(r.distance(v)),
                    r.predecessor(v).map(|p| self.engine.label(p)),
                )
            })
            .collect())
    }

    /// Shortest path from `source` to `target` as node labels, or None.
    fn path(&self, py: Python<'_>, source: u64, target: u64) -> PyResult<Option<Vec<u64>>> {
        let (s, t) = (self.node(source)?, self.node(target)?);
        let r = py.detach(|| self.engine.sssp(s)).map_err(to_py)?;
        Ok(r.path_to(t).map(|p| p.into_iter().map(|v| self.engine.label(v)).collect()))
    }

    /// Distance from `source` to `target`, or None if unreachable.
    fn ppd(&self, py: Python<'_>, source: u64, target: u64) -> PyResult<Option<u64>> {
        let (s, t) = (self.node(source)?, self.node(target)?);
        let r = py.detach(|| self.engine.ppd(s, t)).map_err(to_py)?;
        Ok(dist(r.distance))
    }

    /// Sampled closeness estimate per node, as `[(node, estimate)]`.
    #[pyo3(signature = (epsilon = 0.1, seed = 0, penalty = None))]
    fn closeness(&self, py: Python<'_>, epsilon: f64, seed: u64, penalty: Option<u64>) -> PyResult<Vec<(u64, f64)>> {
        let est = py
            .detach(|| approx_closeness(&self.engine, epsilon, seed, penalty))
            .map_err(to_py)?;
        Ok(est
            .closeness
            .into_iter()
            .enumerate()
            .map(|(v, c)| (self.engine.label(v as NodeId), c))
            .collect())
    }

    /// Checks this index against `graph`; returns `{check name: passed}`.
    #[pyo3(signature = (graph, sources = 20, seed = 0))]
    fn verify<'py>(&self, py: Python<'py>, graph: &PyGraph, sources: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let bundle = IndexBundle::open(self.engine.bundle().dir()).map_err(to_py)?;
        let report = py
            .detach(|| verify_bundle(&graph.graph, &bundle, sources, seed))
            .map_err(to_py)?;
        let d = PyDict::new(py);
        for c in report.checks {
            d.set_item(c.name, c.passed)?;
        }
        Ok(d)
    }

    /// Summary of the index metadata.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let meta = self.engine.bundle().meta();
        let d = PyDict::new(py);
        d.set_item("nodes", meta.n)?;
        d.set_item("archived_nodes", meta.order.len())?;
        d.set_item("core_nodes", meta.core_nodes)?;
        d.set_item("core_edges", meta.core_edges)?;
        d.set_item("iterations", meta.iterations.len())?;
        d.set_item("shortcuts", meta.iterations.iter().map(|s| s.shortcuts_retained).sum::<u64>())?;
        d.set_item("memory_budget", meta.config.memory_budget)?;
        d.set_item("block_size", meta.config.block_size)?;
        d.set_item("seed", meta.config.rng_seed)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Index({})", self.engine.bundle().dir().display())
    }
}

#[pymodule]
#[pyo3(name = "diskhop")]
fn diskhop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyIndex>()?;
    m.add_function(wrap_pyfunction!(build_index, m)?)?;
    Ok(())
}
