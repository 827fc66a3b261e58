//! Disk-resident shortcut index for distance queries on directed graphs.
//!
//! Preprocessing repeatedly removes low-importance nodes, adding shortcuts so
//! that distances among the survivors are preserved, until the residual
//! "core" graph fits in memory. Removed nodes are written in removal order to
//! a forward file (outgoing edges) and in reverse order to a backward file
//! (incoming edges). A query then needs one forward scan, an in-memory search
//! on the core and one backward scan.

pub mod error;
pub mod extsort;
pub mod graph;
pub mod oracle;
pub mod preprocess;
pub mod query;
pub mod store;

pub use error::{Error, Result};
pub use graph::*;
pub use preprocess::{build_index, build_index_with, BuildConfig, IterationStats};
pub use store::{CoreGraph, IndexBundle, IndexMeta};
pub use query::{ppd_query, ssd_query, sssp_query, DistanceResult, PointDistance, QueryEngine};
