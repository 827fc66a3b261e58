//! Index files: forward, backward and core adjacency plus metadata.

mod bundle;
mod io;
pub mod layout;
mod writer;

pub use bundle::{BackwardCursor, CoreGraph, FileInfo, FileTable, ForwardCursor, IndexBundle, IndexMeta};
pub use io::{BlockReader, IoTrace};
pub use layout::{Block, CoreBlock, IndexEdge};
pub use writer::IndexWriter;
