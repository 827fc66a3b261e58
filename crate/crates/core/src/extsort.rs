//! External merge sort for edge triplets under a byte budget.
//!
//! Runs are plain files of fixed-width little-endian records with no
//! header. Run generation fills an in-memory buffer of at most
//! `memory_budget` bytes; merging reads `fan_in` runs at once, each through
//! a one-block buffer.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, IoContext, Result};
use crate::graph::{EdgeKind, EdgeTriplet, Sign};

/// Bytes per triplet record in a run file.
pub const TRIPLET_RECORD_BYTES: usize = 24;

/// Total order on triplets:
///
/// 1. owning node, then other endpoint;
/// 2. outgoing before incoming;
/// 3. shorter length first;
/// 4. baseline before candidate at equal length.
///
/// Remaining ties break on kind (original < baseline < candidate) and then
/// on the predecessor hint.
pub fn triplet_compare(t1: &EdgeTriplet, t2: &EdgeTriplet) -> Ordering {
    (t1.a, t1.b)
        .cmp(&(t2.a, t2.b))
        .then_with(|| t1.sign.cmp(&t2.sign))
        .then_with(|| t1.length.cmp(&t2.length))
        .then_with(|| t1.kind.cmp(&t2.kind))
        .then_with(|| t1.pred_hint.cmp(&t2.pred_hint))
}

pub(crate) fn encode_triplet(t: &EdgeTriplet, out: &mut [u8; TRIPLET_RECORD_BYTES]) {
    out[0..4].copy_from_slice(&t.a.to_le_bytes());
    out[4..8].copy_from_slice(&t.b.to_le_bytes());
    out[8..16].copy_from_slice(&t.length.to_le_bytes());
    out[16..20].copy_from_slice(&t.pred_hint.to_le_bytes());
    out[20] = match t.sign {
        Sign::Outgoing => 0,
        Sign::Incoming => 1,
    };
    out[21] = t.kind.to_u8();
    out[22] = 0;
    out[23] = 0;
}

pub(crate) fn decode_triplet(buf: &[u8; TRIPLET_RECORD_BYTES]) -> Option<EdgeTriplet> {
    let u32_at = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap());
    let sign = match buf[20] {
        0 => Sign::Outgoing,
        1 => Sign::Incoming,
        _ => return None,
    };
    Some(EdgeTriplet {
        a: u32_at(0),
        b: u32_at(4),
        length: u64::from_le_bytes(buf[8..16].try_into().unwrap()),
        pred_hint: u32_at(16),
        sign,
        kind: EdgeKind::from_u8(buf[21])?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SortConfig {
    pub memory_budget: u64,
    pub block_size: u64,
}

impl SortConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < TRIPLET_RECORD_BYTES as u64 {
            return Err(Error::Config(format!(
                "block size {} is smaller than one {TRIPLET_RECORD_BYTES}-byte record",
                self.block_size
            )));
        }
        if self.memory_budget < self.block_size {
            return Err(Error::Config(format!(
                "memory budget {} is smaller than one block ({})",
                self.memory_budget, self.block_size
            )));
        }
        Ok(())
    }

    pub fn records_per_run(&self) -> usize {
        ((self.memory_budget / TRIPLET_RECORD_BYTES as u64) as usize).max(1)
    }

    /// Runs merged at once: `max(2, M / B - 1)`.
    pub fn fan_in(&self) -> usize {
        ((self.memory_budget / self.block_size).saturating_sub(1) as usize).max(2)
    }

    fn io_buffer(&self) -> usize {
        self.block_size as usize
    }
}

/// A sorted run file. Temporary runs delete themselves on drop.
#[derive(Debug)]
pub struct TripletRun {
    path: PathBuf,
    len: u64,
    temporary: bool,
}

impl TripletRun {
    /// Wraps an existing run file, checking that its length is a whole
    /// number of records.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let bytes = fs::metadata(&path).at(&path)?.len();
        if bytes % TRIPLET_RECORD_BYTES as u64 != 0 {
            return Err(Error::Corrupt(format!(
                "{}: length {bytes} is not a multiple of {TRIPLET_RECORD_BYTES}",
                path.display()
            )));
        }
        Ok(TripletRun {
            path,
            len: bytes / TRIPLET_RECORD_BYTES as u64,
            temporary: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn reader(&self) -> Result<RunReader> {
        RunReader::open(&self.path, 64 * 1024)
    }

    /// Keeps the file on disk after the run is dropped.
    pub fn persist(mut self) -> PathBuf {
        self.temporary = false;
        self.path.clone()
    }

    fn write(path: PathBuf, records: impl IntoIterator<Item = EdgeTriplet>, buffer: usize) -> Result<Self> {
        let file = File::create(&path).at(&path)?;
        let mut out = BufWriter::with_capacity(buffer, file);
        let mut len = 0u64;
        let mut rec = [0u8; TRIPLET_RECORD_BYTES];
        for t in records {
            encode_triplet(&t, &mut rec);
            out.write_all(&rec).at(&path)?;
            len += 1;
        }
        out.flush().at(&path)?;
        Ok(TripletRun {
            path,
            len,
            temporary: true,
        })
    }
}

impl Drop for TripletRun {
    fn drop(&mut self) {
        if self.temporary {
            let _ = fs::remove_file(&self.path);
        }
    }
}

/// Sequential reader over a run file.
pub struct RunReader {
    path: PathBuf,
    inner: BufReader<File>,
}

impl RunReader {
    fn open(path: &Path, buffer: usize) -> Result<Self> {
        let file = File::open(path).at(path)?;
        Ok(RunReader {
            path: path.to_path_buf(),
            inner: BufReader::with_capacity(buffer, file),
        })
    }

    fn next_record(&mut self) -> Result<Option<EdgeTriplet>> {
        let mut rec = [0u8; TRIPLET_RECORD_BYTES];
        let mut filled = 0;
        while filled < TRIPLET_RECORD_BYTES {
            let n = self.inner.read(&mut rec[filled..]).at(&self.path)?;
            if n == 0 {
                if filled == 0 {
                    return Ok(None);
                }
                return Err(Error::Corrupt(format!("{}: truncated record", self.path.display())));
            }
            filled += n;
        }
        decode_triplet(&rec)
            .map(Some)
            .ok_or_else(|| Error::Corrupt(format!("{}: bad record tag", self.path.display())))
    }
}

impl Iterator for RunReader {
    type Item = Result<EdgeTriplet>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

/// Destination for emitted triplets.
pub trait TripletSink {
    fn push(&mut self, t: EdgeTriplet) -> Result<()>;
}

impl TripletSink for Vec<EdgeTriplet> {
    fn push(&mut self, t: EdgeTriplet) -> Result<()> {
        Vec::push(self, t);
        Ok(())
    }
}

impl TripletSink for ExternalSorter {
    fn push(&mut self, t: EdgeTriplet) -> Result<()> {
        ExternalSorter::push(self, t)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SortStats {
    pub records: u64,
    /// Runs produced by run generation.
    pub initial_runs: usize,
    /// Runs produced by intermediate merge passes.
    pub merged_runs: usize,
    pub merge_passes: usize,
    /// Most run files alive on disk at any moment.
    pub peak_live_runs: usize,
}

/// Accepts triplets one by one and produces a single sorted run.
pub struct ExternalSorter {
    cfg: SortConfig,
    dir: PathBuf,
    buffer: Vec<EdgeTriplet>,
    runs: Vec<TripletRun>,
    next_id: usize,
    stats: SortStats,
}

impl ExternalSorter {
    pub fn new(cfg: SortConfig, dir: impl Into<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        let dir = dir.into();
        fs::create_dir_all(&dir).at(&dir)?;
        Ok(ExternalSorter {
            cfg,
            dir,
            buffer: Vec::with_capacity(cfg.records_per_run().min(1 << 20)),
            runs: Vec::new(),
            next_id: 0,
            stats: SortStats::default(),
        })
    }

    pub fn push(&mut self, t: EdgeTriplet) -> Result<()> {
        self.buffer.push(t);
        self.stats.records += 1;
        if self.buffer.len() >= self.cfg.records_per_run() {
            self.spill()?;
        }
        Ok(())
    }

    fn run_path(&mut self) -> PathBuf {
        let p = self.dir.join(format!("run-{:06}.bin", self.next_id));
        self.next_id += 1;
        p
    }

    fn spill(&mut self) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        self.buffer.sort_unstable_by(triplet_compare);
        let path = self.run_path();
        let run = TripletRun::write(path, self.buffer.drain(..), self.cfg.io_buffer())?;
        self.runs.push(run);
        self.stats.initial_runs += 1;
        self.stats.peak_live_runs = self.stats.peak_live_runs.max(self.runs.len());
        Ok(())
    }

    pub fn finish(mut self) -> Result<(TripletRun, SortStats)> {
        if self.runs.is_empty() {
            // Everything fit in memory: one run, no merge.
            self.buffer.sort_unstable_by(triplet_compare);
            let path = self.run_path();
            let records = std::mem::take(&mut self.buffer);
            let run = TripletRun::write(path, records, self.cfg.io_buffer())?;
            self.stats.initial_runs = 1;
            self.stats.peak_live_runs = 1;
            return Ok((run, self.stats));
        }
        self.spill()?;
        self.buffer = Vec::new();

        let fan_in = self.cfg.fan_in();
        let mut runs = std::mem::take(&mut self.runs);
        while runs.len() > 1 {
            self.stats.merge_passes += 1;
            let mut next = Vec::with_capacity(runs.len().div_ceil(fan_in));
            let mut pending = runs.into_iter().peekable();
            let mut live = pending.len();
            while pending.peek().is_some() {
                let group: Vec<TripletRun> = pending.by_ref().take(fan_in).collect();
                let path = self.run_path();
                let merged = merge_runs(&group, path, self.cfg.io_buffer())?;
                live += 1;
                self.stats.peak_live_runs = self.stats.peak_live_runs.max(live);
                live -= group.len();
                drop(group);
                self.stats.merged_runs += 1;
                next.push(merged);
            }
            runs = next;
        }
        let run = runs.pop().expect("at least one run");
        Ok((run, self.stats))
    }
}

fn merge_runs(group: &[TripletRun], path: PathBuf, buffer: usize) -> Result<TripletRun> {
    let mut readers = group
        .iter()
        .map(|r| RunReader::open(r.path(), buffer))
        .collect::<Result<Vec<_>>>()?;
    let mut heap = BinaryHeap::with_capacity(readers.len());
    for (i, r) in readers.iter_mut().enumerate() {
        if let Some(t) = r.next_record()? {
            heap.push(Reverse((t, i)));
        }
    }
    let mut err = None;
    let merged = std::iter::from_fn(|| {
        let Reverse((t, i)) = heap.pop()?;
        match readers[i].next_record() {
            Ok(Some(next)) => heap.push(Reverse((next, i))),
            Ok(None) => {}
            Err(e) => {
                err = Some(e);
                return None;
            }
        }
        Some(t)
    });
    let run = TripletRun::write(path, merged, buffer)?;
    match err {
        Some(e) => Err(e),
        None => Ok(run),
    }
}

/// Sorts `input` under `cfg`, spilling runs into `dir`.
pub fn external_sort(
    input: impl IntoIterator<Item = EdgeTriplet>,
    cfg: SortConfig,
    dir: &Path,
) -> Result<(TripletRun, SortStats)> {
    let mut sorter = ExternalSorter::new(cfg, dir)?;
    for t in input {
        sorter.push(t)?;
    }
    sorter.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeKind::{Baseline, Candidate, Original};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn t(a: u32, b: u32, len: u64, sign: Sign, kind: EdgeKind) -> EdgeTriplet {
        EdgeTriplet {
            a,
            b,
            length: len,
            sign,
            kind,
            pred_hint: a,
        }
    }

    #[test]
    fn baseline_precedes_longer_candidate() {
        let base = t(1, 3, 1, Sign::Outgoing, Baseline);
        let cand = t(1, 3, 2, Sign::Outgoing, Candidate);
        assert_eq!(triplet_compare(&base, &cand), Ordering::Less);
    }

    #[test]
    fn outgoing_precedes_incoming() {
        let out = t(1, 3, 2, Sign::Outgoing, Candidate);
        let inc = t(1, 3, 2, Sign::Incoming, Baseline);
        assert_eq!(triplet_compare(&out, &inc), Ordering::Less);
    }

    #[test]
    fn incoming_groups_order_by_magnitude() {
        let base = t(3, 1, 1, Sign::Incoming, Baseline);
        let cand = t(3, 1, 2, Sign::Incoming, Candidate);
        assert_eq!(triplet_compare(&base, &cand), Ordering::Less);
    }

    #[test]
    fn equal_length_baseline_wins_and_identical_is_equal() {
        let base = t(0, 1, 5, Sign::Outgoing, Baseline);
        let cand = t(0, 1, 5, Sign::Outgoing, Candidate);
        let orig = t(0, 1, 5, Sign::Outgoing, Original);
        assert_eq!(triplet_compare(&base, &cand), Ordering::Less);
        assert_eq!(triplet_compare(&orig, &base), Ordering::Less);
        assert_eq!(triplet_compare(&cand, &cand.clone()), Ordering::Equal);
    }

    #[test]
    fn record_codec_round_trips() {
        let x = EdgeTriplet {
            a: 7,
            b: u32::MAX - 1,
            length: u64::MAX - 3,
            sign: Sign::Incoming,
            kind: Candidate,
            pred_hint: 99,
        };
        let mut buf = [0u8; TRIPLET_RECORD_BYTES];
        encode_triplet(&x, &mut buf);
        assert_eq!(decode_triplet(&buf), Some(x));
        buf[21] = 9;
        assert_eq!(decode_triplet(&buf), None);
    }

    fn random_triplets(n: usize, seed: u64) -> Vec<EdgeTriplet> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| EdgeTriplet {
                a: rng.gen_range(0..50),
                b: rng.gen_range(0..50),
                length: rng.gen_range(1..20),
                sign: if rng.gen() { Sign::Outgoing } else { Sign::Incoming },
                kind: [Original, Baseline, Candidate][rng.gen_range(0..3)],
                pred_hint: rng.gen_range(0..50),
            })
            .collect()
    }

    #[test]
    fn multi_pass_merge_matches_in_memory_sort() {
        let dir = tempfile::tempdir().unwrap();
        let input = random_triplets(5_000, 3);
        // 10 records per run, fan-in 2 -> 500 runs and many passes.
        let cfg = SortConfig {
            memory_budget: 240,
            block_size: 72,
        };
        assert_eq!(cfg.fan_in(), 2);
        let (run, stats) = external_sort(input.clone(), cfg, dir.path()).unwrap();
        let out: Vec<_> = run.reader().unwrap().collect::<Result<_>>().unwrap();
        let mut expected = input;
        expected.sort_unstable_by(triplet_compare);
        assert_eq!(out, expected);
        assert_eq!(stats.initial_runs, 500);
        assert!(stats.merge_passes >= 9);
        drop(run);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0, "temporaries left behind");
    }

    #[test]
    fn already_sorted_input_is_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let mut input = random_triplets(300, 5);
        input.sort();
        let cfg = SortConfig {
            memory_budget: 24 * 16,
            block_size: 48,
        };
        let (run, _) = external_sort(input.clone(), cfg, dir.path()).unwrap();
        let out: Vec<_> = run.reader().unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn rejects_budget_below_one_block() {
        let cfg = SortConfig {
            memory_budget: 100,
            block_size: 4096,
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn truncated_run_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bin");
        fs::write(&p, [0u8; 30]).unwrap();
        assert!(matches!(TripletRun::open(&p), Err(Error::Corrupt(_))));
    }

    fn arb_triplet() -> impl Strategy<Value = EdgeTriplet> {
        (0u32..4, 0u32..4, 1u64..4, any::<bool>(), 0u8..3, 0u32..3).prop_map(|(a, b, length, out, kind, pred_hint)| {
            EdgeTriplet {
                a,
                b,
                length,
                sign: if out { Sign::Outgoing } else { Sign::Incoming },
                kind: EdgeKind::from_u8(kind).unwrap(),
                pred_hint,
            }
        })
    }

    proptest! {
        #[test]
        fn compare_is_a_total_order(x in arb_triplet(), y in arb_triplet(), z in arb_triplet()) {
            prop_assert_eq!(triplet_compare(&x, &y), triplet_compare(&y, &x).reverse());
            prop_assert_eq!(triplet_compare(&x, &y) == Ordering::Equal, x == y);
            if triplet_compare(&x, &y) != Ordering::Greater && triplet_compare(&y, &z) != Ordering::Greater {
                prop_assert_ne!(triplet_compare(&x, &z), Ordering::Greater);
            }
        }

        #[test]
        fn external_sort_equals_in_memory_sort(input in proptest::collection::vec(arb_triplet(), 0..200)) {
            let dir = tempfile::tempdir().unwrap();
            let cfg = SortConfig { memory_budget: 24 * 7, block_size: 48 };
            let (run, stats) = external_sort(input.clone(), cfg, dir.path()).unwrap();
            let out: Vec<_> = run.reader().unwrap().collect::<Result<_>>().unwrap();
            let mut expected = input.clone();
            expected.sort();
            prop_assert_eq!(out, expected);
            let bound = (input.len() * TRIPLET_RECORD_BYTES).div_ceil(24 * 7).max(1);
            prop_assert!(stats.initial_runs <= bound);
        }
    }
}
