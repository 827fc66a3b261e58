//! Block-granular file reader that records every block it fetches.

use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, IoContext, Result};

/// Block fetches of one reader, in fetch order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IoTrace {
    pub block_size: u64,
    pub file_bytes: u64,
    pub fetches: Vec<u64>,
}

impl IoTrace {
    pub fn fetch_count(&self) -> usize {
        self.fetches.len()
    }

    /// Blocks in the file, i.e. the cost of one full scan.
    pub fn file_blocks(&self) -> u64 {
        self.file_bytes.div_ceil(self.block_size.max(1))
    }

    pub fn within_one_scan(&self) -> bool {
        self.fetches.len() as u64 <= self.file_blocks()
    }

    pub fn strictly_increasing(&self) -> bool {
        self.fetches.windows(2).all(|w| w[0] < w[1])
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.fetches.windows(2).all(|w| w[0] > w[1])
    }

    pub fn bytes_read(&self) -> u64 {
        self.fetches.len() as u64 * self.block_size
    }
}

/// Reads byte ranges through whole blocks. Only the blocks covering the most
/// recent range stay cached, so a monotone scan fetches every block at most
/// once and a backtracking access pattern shows up as repeated fetches.
pub struct BlockReader {
    file: File,
    path: PathBuf,
    block_size: u64,
    cache_first: u64,
    cache: Vec<u8>,
    spare: Vec<u8>,
    reverse: bool,
    trace: IoTrace,
}

impl BlockReader {
    pub fn open(path: &Path, block_size: u64) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::Config("block size must be positive".into()));
        }
        let file = File::open(path).at(path)?;
        let len = file.metadata().at(path)?.len();
        Ok(BlockReader {
            file,
            path: path.to_path_buf(),
            block_size,
            cache_first: 0,
            cache: Vec::new(),
            spare: Vec::new(),
            reverse: false,
            trace: IoTrace {
                block_size,
                file_bytes: len,
                fetches: Vec::new(),
            },
        })
    }

    /// Marks this reader as scanning towards the start of the file, so the
    /// blocks of one multi-block read are recorded last to first.
    pub fn set_reverse(&mut self, reverse: bool) {
        self.reverse = reverse;
    }

    pub fn len(&self) -> u64 {
        self.trace.file_bytes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn trace(&self) -> &IoTrace {
        &self.trace
    }

    pub fn into_trace(self) -> IoTrace {
        self.trace
    }

    /// Bytes held by the block cache.
    pub fn buffer_bytes(&self) -> usize {
        self.cache.capacity() + self.spare.capacity()
    }

    fn cached_blocks(&self) -> u64 {
        (self.cache.len() as u64).div_ceil(self.block_size)
    }

    pub fn read(&mut self, offset: u64, len: u64) -> Result<&[u8]> {
        if len == 0 {
            return Ok(&[]);
        }
        let end = offset.checked_add(len).filter(|&e| e <= self.len()).ok_or_else(|| {
            Error::Corrupt(format!(
                "{}: range {offset}+{len} exceeds file length {}",
                self.path.display(),
                self.len()
            ))
        })?;
        let bs = self.block_size;
        let first = offset / bs;
        let last = (end - 1) / bs;
        let range_end = ((last + 1) * bs).min(self.len());

        let mut next = std::mem::take(&mut self.spare);
        next.clear();
        next.resize((range_end - first * bs) as usize, 0);
        let old_first = self.cache_first;
        let old_last = old_first + self.cached_blocks();
        let mut k = first;
        while k <= last {
            let dst = ((k - first) * bs) as usize;
            if k >= old_first && k < old_last {
                let src = ((k - old_first) * bs) as usize;
                let n = (self.cache.len() - src).min(bs as usize);
                next[dst..dst + n].copy_from_slice(&self.cache[src..src + n]);
                k += 1;
                continue;
            }
            let mut run_end = k + 1;
            while run_end <= last && !(run_end >= old_first && run_end < old_last) {
                run_end += 1;
            }
            let start = k * bs;
            let stop = (run_end * bs).min(self.len());
            self.file.seek(SeekFrom::Start(start)).at(&self.path)?;
            self.file
                .read_exact(&mut next[dst..dst + (stop - start) as usize])
                .at(&self.path)?;
            if self.reverse {
                self.trace.fetches.extend((k..run_end).rev());
            } else {
                self.trace.fetches.extend(k..run_end);
            }
            k = run_end;
        }
        self.spare = std::mem::replace(&mut self.cache, next);
        self.cache_first = first;
        let skip = (offset - first * bs) as usize;
        Ok(&self.cache[skip..skip + len as usize])
    }
}
