use std::fs::{self, File};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, IoContext, Result};
use crate::graph::{AdjacencyGraph, NodeId, RemovedNode};
use crate::preprocess::{BuildConfig, IterationStats};

use super::bundle::{FileInfo, FileTable, IndexMeta};
use super::layout::*;

struct HashingWriter {
    path: PathBuf,
    out: BufWriter<File>,
    crc: crc32fast::Hasher,
    bytes: u64,
}

impl HashingWriter {
    fn create(path: PathBuf, buffer: usize) -> Result<Self> {
        let file = File::create(&path).at(&path)?;
        Ok(HashingWriter {
            out: BufWriter::with_capacity(buffer, file),
            path,
            crc: crc32fast::Hasher::new(),
            bytes: 0,
        })
    }

    fn write(&mut self, buf: &[u8]) -> Result<()> {
        self.out.write_all(buf).at(&self.path)?;
        self.crc.update(buf);
        self.bytes += buf.len() as u64;
        Ok(())
    }

    fn finish(self) -> Result<FileInfo> {
        let file = self.out.into_inner().map_err(|e| Error::io(&self.path, e.into_error()))?;
        file.sync_all().at(&self.path)?;
        Ok(FileInfo {
            bytes: self.bytes,
            crc32: self.crc.finalize(),
        })
    }
}

/// Streams removed nodes into the forward file and a backward staging file,
/// then lays out the backward and core files on `finalize`.
pub struct IndexWriter {
    dir: PathBuf,
    n: usize,
    forward: HashingWriter,
    staging: BufWriter<File>,
    staging_path: PathBuf,
    staged: Vec<(u64, u64)>,
    staging_len: u64,
    order: Vec<NodeId>,
    ranks: Vec<u32>,
    forward_offsets: Vec<u64>,
    io_buffer: usize,
    scratch: Vec<u8>,
}

impl IndexWriter {
    pub fn create(dir: &Path, n: usize, block_size: u64) -> Result<Self> {
        fs::create_dir_all(dir).at(dir)?;
        let io_buffer = block_size.clamp(4096, 1 << 20) as usize;
        let forward = HashingWriter::create(dir.join(FORWARD_FILE), io_buffer)?;
        let staging_path = dir.join(BACKWARD_STAGING);
        let staging = BufWriter::with_capacity(io_buffer, File::create(&staging_path).at(&staging_path)?);
        Ok(IndexWriter {
            dir: dir.to_path_buf(),
            n,
            forward,
            staging,
            staging_path,
            staged: Vec::new(),
            staging_len: 0,
            order: Vec::new(),
            ranks: vec![0; n],
            forward_offsets: Vec::new(),
            io_buffer,
            scratch: Vec::new(),
        })
    }

    /// Appends one removed node. Must be called in removal order; returns the
    /// node's position in the forward file.
    pub fn append_removed_node(&mut self, removed: &RemovedNode, rank: u32) -> Result<u32> {
        let v = removed.node;
        if v as usize >= self.n {
            return Err(Error::UnknownNode(v as u64));
        }
        if self.ranks[v as usize] != 0 {
            return Err(Error::Internal(format!("node {v} archived twice")));
        }
        if rank == 0 {
            return Err(Error::Internal("ranks start at 1".into()));
        }
        let position = self.order.len() as u32;
        self.ranks[v as usize] = rank;
        self.order.push(v);

        self.scratch.clear();
        encode_block(v, removed.outgoing.iter(), &mut self.scratch);
        self.forward_offsets.push(self.forward.bytes);
        self.forward.write(&self.scratch)?;

        self.scratch.clear();
        encode_block(v, removed.incoming.iter(), &mut self.scratch);
        self.staging.write_all(&self.scratch).at(&self.staging_path)?;
        self.staged.push((self.staging_len, self.scratch.len() as u64));
        self.staging_len += self.scratch.len() as u64;
        Ok(position)
    }

    pub fn archived(&self) -> usize {
        self.order.len()
    }

    /// Writes the backward file in reversed block order, the core file and
    /// the metadata. `core` must hold exactly the nodes never archived.
    pub fn finalize(
        mut self,
        core: &AdjacencyGraph,
        config: &BuildConfig,
        iterations: Vec<IterationStats>,
        labels: Option<Vec<u64>>,
        max_edge_length: u64,
    ) -> Result<IndexMeta> {
        if core.node_count() != self.n {
            return Err(Error::Internal("core graph node count differs from index".into()));
        }
        if let Some(l) = &labels {
            if l.len() != self.n || l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("label table must be strictly increasing with one label per node".into()));
            }
        }
        for v in core.alive_nodes() {
            if self.ranks[v as usize] != 0 {
                return Err(Error::CoreNodeArchived(v));
            }
        }
        if self.order.len() + core.alive_count() != self.n {
            return Err(Error::Internal("some nodes are neither archived nor in the core".into()));
        }
        if core.alive_count() == 0 && self.n > 0 {
            return Err(Error::Internal("core graph is empty".into()));
        }
        let core_size = core.size_bytes();
        if core_size > config.memory_budget {
            return Err(Error::CoreTooLarge {
                size: core_size,
                budget: config.memory_budget,
            });
        }
        let core_rank = self.ranks.iter().copied().max().unwrap_or(0) + 1;
        for v in core.alive_nodes() {
            self.ranks[v as usize] = core_rank;
        }

        let forward = self.forward.finish()?;

        self.staging.flush().at(&self.staging_path)?;
        drop(self.staging);
        let mut staged = File::open(&self.staging_path).at(&self.staging_path)?;
        let mut backward = HashingWriter::create(self.dir.join(BACKWARD_FILE), self.io_buffer)?;
        let mut backward_offsets = vec![0u64; self.order.len()];
        for (theta, &(offset, len)) in self.staged.iter().enumerate().rev() {
            backward_offsets[theta] = backward.bytes;
            self.scratch.resize(len as usize, 0);
            staged.seek(SeekFrom::Start(offset)).at(&self.staging_path)?;
            staged.read_exact(&mut self.scratch).at(&self.staging_path)?;
            backward.write(&self.scratch)?;
        }
        let backward = backward.finish()?;
        drop(staged);
        fs::remove_file(&self.staging_path).at(&self.staging_path)?;

        let mut core_out = HashingWriter::create(self.dir.join(CORE_FILE), self.io_buffer)?;
        let mut core_nodes = 0u32;
        for v in core.alive_nodes() {
            let outgoing: Vec<_> = core.outgoing(v).copied().collect();
            let incoming: Vec<_> = core.incoming(v).copied().collect();
            self.scratch.clear();
            encode_core_block(v, &outgoing, &incoming, &mut self.scratch);
            core_out.write(&self.scratch)?;
            core_nodes += 1;
        }
        let core_file = core_out.finish()?;

        let meta = IndexMeta {
            format_version: FORMAT_VERSION,
            n: self.n as u32,
            core_rank,
            core_nodes,
            core_edges: core.edge_count() as u64,
            core_size_bytes: core_size,
            max_edge_length,
            order: self.order,
            ranks: self.ranks,
            forward_offsets: self.forward_offsets,
            backward_offsets,
            config: config.clone(),
            files: FileTable {
                forward,
                backward,
                core: core_file,
            },
            labels,
            iterations,
        };
        let meta_path = self.dir.join(META_FILE);
        let json = serde_json::to_vec_pretty(&meta).map_err(|e| Error::Internal(e.to_string()))?;
        let mut f = File::create(&meta_path).at(&meta_path)?;
        f.write_all(&json).at(&meta_path)?;
        f.write_all(b"\n").at(&meta_path)?;
        f.sync_all().at(&meta_path)?;
        Ok(meta)
    }
}
