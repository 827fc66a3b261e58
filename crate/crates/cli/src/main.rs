//! `diskhop` command-line tool.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diskhop::graph::{load_edge_list, LoadOptions, LoadedGraph};
use diskhop::oracle::{approx_closeness, verify_bundle};
use diskhop::{BuildConfig, Distance, Error, IndexBundle, NodeId, QueryEngine};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "diskhop", version, about = "Disk-resident shortcut index for distance queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from an edge list.
    Build(BuildArgs),
    /// Distances from one source to every node.
    Ssd(SourceArgs),
    /// Distances and shortest-path predecessors from one source.
    Sssp(SourceArgs),
    /// Distance between two nodes.
    Ppd(PairArgs),
    /// Estimate closeness of every node by sampling sources.
    Closeness(ClosenessArgs),
    /// Check an index against the graph it was built from.
    Verify(VerifyArgs),
    /// Print index metadata and file sizes.
    Stats(StatsArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list: header `n m`, then lines `u v [w]`.
    #[arg(short, long)]
    input: PathBuf,
    /// Treat every edge as two opposite directed edges.
    #[arg(long)]
    undirected: bool,
    /// Edge lines carry no weight; every edge has length 1.
    #[arg(long)]
    unweighted: bool,
}

impl GraphArgs {
    fn load(&self) -> Result<LoadedGraph, Failure> {
        let file = File::open(&self.input).map_err(|e| Failure::Data(format!("{}: {e}", self.input.display())))?;
        let opts = LoadOptions {
            directed: !self.undirected,
            weighted: !self.unweighted,
        };
        load_edge_list(BufReader::new(file), opts)
            .map_err(|e| Failure::Data(format!("{}: {e}", self.input.display())))
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Output index directory.
    #[arg(short, long)]
    output: PathBuf,
    /// Memory budget, e.g. 64MiB.
    #[arg(long, default_value = "64MiB", value_parser = parse_size)]
    memory: u64,
    /// Disk block size, e.g. 64KiB.
    #[arg(long, default_value = "64KiB", value_parser = parse_size)]
    block: u64,
    /// Two-hop baselines sampled per unit of removed score.
    #[arg(long, default_value_t = 5)]
    baseline_factor: u64,
    /// Nodes sampled to estimate the median score.
    #[arg(long, default_value_t = 10_000)]
    median_sample: usize,
    /// Stop once the core fits and an iteration removes less than this
    /// fraction of edges.
    #[arg(long, default_value_t = 0.05)]
    min_shrink: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for sort runs.
    #[arg(long)]
    scratch: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArg {
    /// Index directory.
    #[arg(short = 'x', long = "index")]
    index: PathBuf,
}

#[derive(Args)]
struct SourceArgs {
    #[command(flatten)]
    index: IndexArg,
    /// Source node.
    #[arg(short, long, required_unless_present = "batch", conflicts_with = "batch")]
    source: Option<u64>,
    /// File of sources, one per line.
    #[arg(long)]
    batch: Option<PathBuf>,
    /// Worker threads for batch queries.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    index: IndexArg,
    #[arg(short, long, requires = "target", required_unless_present = "batch", conflicts_with = "batch")]
    source: Option<u64>,
    #[arg(short, long, requires = "source")]
    target: Option<u64>,
    /// File of `s t` pairs, one per line.
    #[arg(long)]
    batch: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ClosenessArgs {
    #[command(flatten)]
    index: IndexArg,
    /// Additive error bound; sets the number of sampled sources.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distance charged for unreachable pairs; defaults to n times the
    /// longest edge.
    #[arg(long)]
    penalty: Option<u64>,
    /// CSV output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    index: IndexArg,
    /// Sources (and point-to-point pairs) compared against Dijkstra.
    #[arg(long, default_value_t = 20)]
    sources: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    index: IndexArg,
    /// Print the full metadata as JSON.
    #[arg(long)]
    json: bool,
}

enum Failure {
    Usage(String),
    Data(String),
    Verify(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Verify(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Verify(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            e => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

/// Byte count with an optional `KiB`, `MiB` or `GiB` suffix.
fn parse_size(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (digits, suffix) = s.split_at(split);
    let value: u64 = digits.parse().map_err(|_| format!("`{s}` is not a size"))?;
    let shift = match suffix.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 0,
        "kib" => 10,
        "mib" => 20,
        "gib" => 30,
        other => return Err(format!("unknown size suffix `{other}` (use KiB, MiB or GiB)")),
    };
    value
        .checked_mul(1 << shift)
        .ok_or_else(|| format!("`{s}` is too large"))
}

fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn fmt_distance(d: Distance) -> String {
    match d.value() {
        Some(v) => v.to_string(),
        None => "INF".into(),
    }
}

/// Non-empty, non-comment lines of a batch file split into numbers.
fn read_batch(path: &Path, fields: usize) -> Result<Vec<Vec<u64>>, Failure> {
    let file = File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Result<Vec<u64>, _> = line.split_whitespace().map(str::parse).collect();
        match nums {
            Ok(v) if v.len() == fields => out.push(v),
            _ => {
                return Err(Failure::Data(format!(
                    "{}:{}: expected {fields} node id(s)",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

fn build(args: BuildArgs) -> Result<(), Failure> {
    let loaded = args.graph.load()?;
    if loaded.self_loops > 0 || loaded.duplicates > 0 {
        eprintln!(
            "dropped {} self-loops and {} parallel edges",
            loaded.self_loops, loaded.duplicates
        );
    }
    let cfg = BuildConfig {
        memory_budget: args.memory,
        block_size: args.block,
        baseline_factor: args.baseline_factor,
        median_sample_size: args.median_sample,
        min_shrink: args.min_shrink,
        rng_seed: args.seed,
        scratch_dir: args.scratch,
    };
    cfg.validate()?;
    let mut out = stdout();
    let mut write_err = None;
    let meta = diskhop::build_index_with(loaded.graph, &cfg, &args.output, loaded.labels, |s| {
        if write_err.is_none() {
            let line = serde_json::to_string(s).expect("iteration stats serialize");
            if let Err(e) = writeln!(out, "{line}") {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    writeln!(
        out,
        "built {}: {} nodes, {} archived, core {} nodes / {} edges, {} iterations",
        args.output.display(),
        meta.n,
        meta.order.len(),
        meta.core_nodes,
        meta.core_edges,
        meta.iterations.len()
    )?;
    out.flush()?;
    Ok(())
}

fn write_single_source(
    out: &mut impl Write,
    engine: &QueryEngine,
    r: &diskhop::DistanceResult,
    with_pred: bool,
) -> io::Result<()> {
    for v in 0..engine.node_count() as NodeId {
        let label = engine.label(v);
        let d = fmt_distance(r.distance(v));
        if with_pred {
            match r.predecessor(v) {
                Some(p) => writeln!(out, "{label} {d} {}", engine.label(p))?,
                None => writeln!(out, "{label} {d} -")?,
            }
        } else {
            writeln!(out, "{label} {d}")?;
        }
    }
    Ok(())
}

fn single_source(args: SourceArgs, with_pred: bool) -> Result<(), Failure> {
    set_threads(args.threads)?;
    let engine = QueryEngine::open(&args.index.index)?;
    let run = |label: u64| -> Result<diskhop::DistanceResult, Failure> {
        let s = engine.resolve(label)?;
        Ok(if with_pred { engine.sssp(s)? } else { engine.ssd(s)? })
    };
    let mut out = stdout();
    match (args.source, args.batch) {
        (Some(s), _) => write_single_source(&mut out, &engine, &run(s)?, with_pred)?,
        (None, Some(path)) => {
            let sources: Vec<u64> = read_batch(&path, 1)?.into_iter().map(|v| v[0]).collect();
            // Bounded chunks keep at most a few result tables alive at once.
            for chunk in sources.chunks(rayon::current_num_threads().max(1)) {
                let results: Vec<_> = chunk.par_iter().map(|&s| run(s)).collect();
                for (s, r) in chunk.iter().zip(results) {
                    writeln!(out, "# source {s}")?;
                    write_single_source(&mut out, &engine, &r?, with_pred)?;
                }
            }
        }
        (None, None) => unreachable!("clap requires a source or a batch file"),
    }
    out.flush()?;
    Ok(())
}

fn ppd(args: PairArgs) -> Result<(), Failure> {
    set_threads(args.threads)?;
    let engine = QueryEngine::open(&args.index.index)?;
    let run = |s: u64, t: u64| -> Result<Distance, Failure> {
        Ok(engine.ppd(engine.resolve(s)?, engine.resolve(t)?)?.distance)
    };
    let pairs: Vec<(u64, u64)> = match (args.source, args.target, args.batch) {
        (Some(s), Some(t), _) => vec![(s, t)],
        (_, _, Some(path)) => read_batch(&path, 2)?.into_iter().map(|v| (v[0], v[1])).collect(),
        _ => unreachable!("clap requires a pair or a batch file"),
    };
    let results: Vec<_> = pairs.par_iter().map(|&(s, t)| run(s, t)).collect();
    let mut out = stdout();
    for ((s, t), d) in pairs.iter().zip(results) {
        writeln!(out, "{s} {t} {}", fmt_distance(d?))?;
    }
    out.flush()?;
    Ok(())
}

fn closeness(args: ClosenessArgs) -> Result<(), Failure> {
    set_threads(args.threads)?;
    let engine = QueryEngine::open(&args.index.index)?;
    let est = approx_closeness(&engine, args.epsilon, args.seed, args.penalty)?;
    eprintln!(
        "{} sampled sources (epsilon {}), {} queries, penalty {}",
        est.k, est.epsilon, est.queries, est.penalty
    );
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(stdout()),
    };
    writeln!(out, "node,estimate")?;
    for (v, c) in est.closeness.iter().enumerate() {
        writeln!(out, "{},{c}", engine.label(v as NodeId))?;
    }
    out.flush()?;
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let loaded = args.graph.load()?;
    let bundle = IndexBundle::open(&args.index.index)?;
    if bundle.meta().labels != loaded.labels {
        return Err(Failure::Verify("graph node labels differ from the index".into()));
    }
    let report = verify_bundle(&loaded.graph, &bundle, args.sources, args.seed)?;
    let mut out = stdout();
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
    } else {
        for c in &report.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{status} {} checked={} violations={}", c.name, c.checked, c.violations)?;
            for s in &c.samples {
                writeln!(out, "  {s}")?;
            }
        }
    }
    out.flush()?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::Verify(format!("verification failed: {}", failed.join(", "))))
    }
}

fn stats(args: StatsArgs) -> Result<(), Failure> {
    let bundle = IndexBundle::open(&args.index.index)?;
    let meta = bundle.meta();
    let mut out = stdout();
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(meta).expect("metadata serializes"))?;
        out.flush()?;
        return Ok(());
    }
    writeln!(out, "nodes            {}", meta.n)?;
    writeln!(out, "archived nodes   {}", meta.order.len())?;
    writeln!(out, "core nodes       {}", meta.core_nodes)?;
    writeln!(out, "core edges       {}", meta.core_edges)?;
    writeln!(out, "core rank        {}", meta.core_rank)?;
    writeln!(out, "iterations       {}", meta.iterations.len())?;
    writeln!(
        out,
        "shortcuts        {}",
        meta.iterations.iter().map(|s| s.shortcuts_retained).sum::<u64>()
    )?;
    writeln!(out, "memory budget    {}", meta.config.memory_budget)?;
    writeln!(out, "block size       {}", meta.config.block_size)?;
    writeln!(out, "seed             {}", meta.config.rng_seed)?;
    for (name, info) in [
        ("forward.bin", meta.files.forward),
        ("backward.bin", meta.files.backward),
        ("core.bin", meta.files.core),
    ] {
        writeln!(out, "{name:<16} {} bytes crc32 {:08x}", info.bytes, info.crc32)?;
    }
    let meta_bytes = std::fs::metadata(bundle.path("meta.json"))?.len();
    writeln!(out, "{:<16} {meta_bytes} bytes", "meta.json")?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Build(a) => build(a),
        Command::Ssd(a) => single_source(a, false),
        Command::Sssp(a) => single_source(a, true),
        Command::Ppd(a) => ppd(a),
        Command::Closeness(a) => closeness(a),
        Command::Verify(a) => verify(a),
        Command::Stats(a) => stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("diskhop: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
