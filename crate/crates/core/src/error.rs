use std::io;
use std::path::PathBuf;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("unknown node {0}")]
    UnknownNode(u64),

    #[error("distance overflow")]
    Overflow,

    #[error("no node qualifies for removal")]
    EmptyRemoval,

    #[error("core graph needs {size} bytes but the memory budget is {budget} bytes")]
    CoreTooLarge { size: u64, budget: u64 },

    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error("scan order violated: position {requested} requested after {last}")]
    ScanOrder { requested: u32, last: u32 },

    #[error("position {position} out of range (file holds {len} blocks)")]
    OutOfRange { position: u32, len: u32 },

    #[error("node {0} was archived but is still part of the core graph")]
    CoreNodeArchived(NodeId),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("graph too large for exact computation: {n} nodes (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches a path to `io::Result`s.
pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
