//! Command-line front end: instance generation, solving, frontier
//! record/replay, the pool-size benchmark harness, and the fast-memory
//! placement advisor.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use flowshop_bb::backend::{BackendConfig, DEFAULT_CHUNK};
use flowshop_bb::instance::{parse_instance, taillard_generate, write_instance, Instance, Time};
use flowshop_bb::placement::{profile_structures, select_placement};
use flowshop_bb::search::{
    record_pool, replay_run, solve, RecordHorizon, SearchConfig, SearchResult, Strategy,
};
use flowshop_bb::snapshot::{parse_snapshot, write_snapshot, PoolSnapshot};

/// Exit code for a run that stopped on a node or time budget.
const EXIT_BUDGET: u8 = 2;

#[derive(Parser)]
#[command(name = "flowshop-bb", version, about = "Permutation flow-shop branch-and-bound solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark-style instance file.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: i64,
        /// Output path for the instance file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance to optimality (or until a budget stops the run).
    Solve {
        #[command(flatten)]
        input: InstanceInput,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Run the serial engine for a fixed horizon and freeze the frontier.
    Record {
        #[command(flatten)]
        input: InstanceInput,
        #[command(flatten)]
        search: SearchFlags,
        /// Output path for the snapshot.
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Solve to completion from a recorded snapshot.
    Replay {
        /// Snapshot to resume from.
        #[arg(long)]
        snapshot: PathBuf,
        /// Optional instance file that must match the snapshot.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Replay one snapshot across pool sizes and backends, reporting CSV.
    Bench {
        /// Snapshot every configuration replays.
        #[arg(long)]
        snapshot: PathBuf,
        /// Pool sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "4096,8192,16384,32768")]
        pools: Vec<usize>,
        /// Backends to time, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "serial,workers")]
        backends: Vec<BackendArg>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long, default_value_t = DEFAULT_CHUNK)]
        chunk: usize,
        /// Identical node budget applied to every replay.
        #[arg(long)]
        node_budget: Option<u64>,
        /// Timing repetitions per configuration; the minimum wall time counts.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Advise which bound structures to place in fast memory.
    Placement {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        /// Remaining-job count the access formulas are evaluated at
        /// (defaults to n/2, a mid-search shape).
        #[arg(long)]
        nprime: Option<u64>,
        #[arg(long, default_value_t = 1)]
        entry_bytes: u64,
        /// Fast-memory budget in bytes.
        #[arg(long, default_value_t = 48 * 1024)]
        budget: u64,
    },
}

/// Where the instance comes from: a file, or generator parameters.
#[derive(Args)]
struct InstanceInput {
    #[arg(long, conflicts_with_all = ["n", "m", "seed"])]
    instance: Option<PathBuf>,
    #[arg(long, requires_all = ["m", "seed"])]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<i64>,
}

impl InstanceInput {
    fn load(&self) -> Result<Instance> {
        match (&self.instance, self.n, self.m, self.seed) {
            (Some(path), ..) => read_instance(path),
            (None, Some(n), Some(m), Some(seed)) => {
                taillard_generate(n, m, seed).map_err(Into::into)
            }
            _ => bail!("provide either --instance PATH or all of --n, --m, --seed"),
        }
    }
}

#[derive(Args)]
struct SearchFlags {
    /// Nodes extracted per iteration (the batch magnitude).
    #[arg(long, default_value_t = 8192)]
    pool: usize,
    #[arg(long, value_enum, default_value_t = BackendArg::Serial)]
    backend: BackendArg,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    #[arg(long, default_value_t = DEFAULT_CHUNK)]
    chunk: usize,
    /// Seed the incumbent with a known upper bound.
    #[arg(long)]
    ub: Option<Time>,
    /// Stop after this many branched nodes.
    #[arg(long)]
    node_budget: Option<u64>,
    /// Stop after this many seconds of solve-loop time.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Whether nodes whose bound ties the incumbent are eliminated.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    prune_ties: Toggle,
    #[arg(long, value_enum, default_value_t = StrategyArg::BestFirst)]
    strategy: StrategyArg,
    /// Print one progress line per iteration to stderr.
    #[arg(long, short = 'v', action = clap::ArgAction::Count)]
    verbose: u8,
}

impl SearchFlags {
    fn to_config(&self) -> SearchConfig {
        SearchConfig {
            pool_extract: self.pool,
            backend: match self.backend {
                BackendArg::Serial => BackendConfig::serial(),
                BackendArg::Workers => {
                    BackendConfig::multi_worker(self.workers).with_chunk(self.chunk)
                }
            },
            strategy: match self.strategy {
                StrategyArg::BestFirst => Strategy::BestFirst,
                StrategyArg::DepthFirst => Strategy::DepthFirst,
            },
            initial_upper_bound: self.ub,
            node_budget: self.node_budget,
            time_budget: self.time_budget.map(Duration::from_secs_f64),
            prune_ties: self.prune_ties == Toggle::On,
            verbosity: self.verbose,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Serial,
    Workers,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    BestFirst,
    DepthFirst,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { n, m, seed, out } => cmd_generate(n, m, seed, &out),
        Command::Solve { input, search } => {
            let inst = input.load()?;
            let result = solve(&inst, &search.to_config())?;
            report_result(&inst, &result);
            Ok(exit_for(&result))
        }
        Command::Record {
            input,
            search,
            snapshot,
        } => cmd_record(&input, &search, &snapshot),
        Command::Replay {
            snapshot,
            instance,
            search,
        } => cmd_replay(&snapshot, instance.as_deref(), &search),
        Command::Bench {
            snapshot,
            pools,
            backends,
            workers,
            chunk,
            node_budget,
            repeats,
            csv,
        } => cmd_bench(
            &snapshot,
            &pools,
            &backends,
            workers,
            chunk,
            node_budget,
            repeats,
            csv.as_deref(),
        ),
        Command::Placement {
            n,
            m,
            nprime,
            entry_bytes,
            budget,
        } => cmd_placement(n, m, nprime, entry_bytes, budget),
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading instance {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing instance {}", path.display()))
}

fn read_snapshot(path: &Path) -> Result<PoolSnapshot> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading snapshot {}", path.display()))?;
    parse_snapshot(&text).with_context(|| format!("parsing snapshot {}", path.display()))
}

fn cmd_generate(n: usize, m: usize, seed: i64, out: &Path) -> Result<ExitCode> {
    let inst = taillard_generate(n, m, seed)?;
    let text = write_instance(&inst);
    std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    let digest = Sha256::digest(text.as_bytes());
    let hex: String = digest.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    });
    println!("{} sha256:{hex}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_record(input: &InstanceInput, search: &SearchFlags, out: &Path) -> Result<ExitCode> {
    let inst = input.load()?;
    let cfg = search.to_config();
    let horizon = match (cfg.node_budget, cfg.time_budget) {
        (Some(nodes), None) => RecordHorizon::Nodes(nodes),
        (None, Some(time)) => RecordHorizon::Time(time),
        (None, None) => bail!("record needs --node-budget or --time-budget as the horizon"),
        (Some(_), Some(_)) => bail!("record takes exactly one of --node-budget, --time-budget"),
    };
    let (snapshot, partial) = record_pool(&inst, &cfg, horizon)?;
    std::fs::write(out, write_snapshot(&snapshot))
        .with_context(|| format!("writing {}", out.display()))?;
    println!(
        "{}: {} open nodes, incumbent {}, {} nodes branched while recording",
        out.display(),
        snapshot.nodes.len(),
        snapshot
            .incumbent
            .map_or_else(|| "inf".into(), |v| v.to_string()),
        partial.stats.branched,
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(snapshot: &Path, instance: Option<&Path>, search: &SearchFlags) -> Result<ExitCode> {
    let snapshot = read_snapshot(snapshot)?;
    if let Some(path) = instance {
        let inst = read_instance(path)?;
        snapshot.ensure_instance(&inst)?;
    }
    let result = replay_run(&snapshot, &search.to_config())?;
    report_result(&snapshot.instance, &result);
    Ok(exit_for(&result))
}

fn report_result(inst: &Instance, result: &SearchResult) {
    let stats = &result.stats;
    println!(
        "instance {}x{}: branched {}, bounded {}, pruned {}, leaves {}, iterations {}",
        inst.jobs(),
        inst.machines(),
        stats.branched,
        stats.bounded,
        stats.pruned,
        stats.leaves,
        stats.iterations
    );
    match (result.proved, result.best_makespan) {
        (true, Some(value)) => println!("optimum {value}"),
        (true, None) => println!("search space exhausted without any complete schedule"),
        (false, Some(value)) => println!("budget stop: best known {value} (not proven optimal)"),
        (false, None) => println!("budget stop: no complete schedule found yet"),
    }
    match &result.best_permutation {
        Some(perm) => println!("permutation {perm}"),
        None => {
            if result.best_makespan.is_some() {
                println!("permutation (none: the seeded bound was never improved)");
            }
        }
    }
    println!(
        "wall {:.3} ms, bounding {:.3} ms ({:.1}% of solve time)",
        stats.total_time.as_secs_f64() * 1e3,
        stats.bounding_time.as_secs_f64() * 1e3,
        stats.bounding_fraction() * 100.0
    );
}

fn exit_for(result: &SearchResult) -> ExitCode {
    if result.proved {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_BUDGET)
    }
}

/// Replays the snapshot once per (pool size, backend) pair and reports one
/// CSV row each; the serial run on the same snapshot and pool size is the
/// speedup baseline. Everything except the wall-time and speedup columns is
/// bit-stable across runs.
#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    snapshot_path: &Path,
    pools: &[usize],
    backends: &[BackendArg],
    workers: usize,
    chunk: usize,
    node_budget: Option<u64>,
    repeats: usize,
    csv_out: Option<&Path>,
) -> Result<ExitCode> {
    let snapshot = read_snapshot(snapshot_path)?;
    if pools.is_empty() || backends.is_empty() || repeats == 0 {
        bail!("bench needs at least one pool size, one backend and one repeat");
    }
    let label = format!(
        "{}x{}",
        snapshot.instance.jobs(),
        snapshot.instance.machines()
    );

    let mut csv = String::from("instance,P,backend,workers,wall_ms,branched,pruned,bounded,speedup\n");
    for &pool in pools {
        let serial = timed_replay(&snapshot, pool, BackendConfig::serial(), node_budget, repeats)?;
        let baseline_ms = serial.1;
        for &backend in backends {
            let (result, wall_ms, backend_cfg) = match backend {
                BackendArg::Serial => (serial.0.clone(), serial.1, BackendConfig::serial()),
                BackendArg::Workers => {
                    let cfg = BackendConfig::multi_worker(workers).with_chunk(chunk);
                    let (result, wall) = timed_replay(&snapshot, pool, cfg, node_budget, repeats)?;
                    (result, wall, cfg)
                }
            };
            let stats = result.stats;
            let _ = writeln!(
                csv,
                "{label},{pool},{},{},{wall_ms:.3},{},{},{},{:.3}",
                backend_cfg.kind.label(),
                backend_cfg.workers,
                stats.branched,
                stats.pruned,
                stats.bounded,
                baseline_ms / wall_ms,
            );
        }
    }

    match csv_out {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Replays `repeats` times and keeps the smallest solve-loop wall time; the
/// loop excludes table construction.
fn timed_replay(
    snapshot: &PoolSnapshot,
    pool: usize,
    backend: BackendConfig,
    node_budget: Option<u64>,
    repeats: usize,
) -> Result<(SearchResult, f64)> {
    let cfg = SearchConfig {
        pool_extract: pool,
        backend,
        node_budget,
        ..SearchConfig::default()
    };
    let mut best: Option<(SearchResult, f64)> = None;
    for _ in 0..repeats {
        let result = replay_run(snapshot, &cfg)?;
        let wall_ms = result.stats.total_time.as_secs_f64() * 1e3;
        if best.as_ref().is_none_or(|(_, b)| wall_ms < *b) {
            best = Some((result, wall_ms));
        }
    }
    best.ok_or_else(|| anyhow!("no timing runs executed"))
}

fn cmd_placement(
    n: u64,
    m: u64,
    nprime: Option<u64>,
    entry_bytes: u64,
    budget: u64,
) -> Result<ExitCode> {
    let nprime = nprime.unwrap_or_else(|| (n / 2).max(1));
    let profiles = profile_structures(n, m, nprime, entry_bytes)?;
    let plan = select_placement(&profiles, budget);
    println!("placement for n={n} m={m} n'={nprime} entry={entry_bytes}B budget={budget}B");
    println!("{:<10} {:>12} {:>14} {:>9}", "structure", "size_bytes", "accesses", "fast");
    for profile in &profiles {
        println!(
            "{:<10} {:>12} {:>14} {:>9}",
            profile.name.label(),
            profile.size_bytes(),
            profile.accesses,
            if plan.contains(profile.name) { "yes" } else { "no" },
        );
    }
    println!(
        "fast set uses {} of {} bytes: {}",
        plan.fast_bytes_used,
        plan.budget_bytes,
        plan.fast_set
            .iter()
            .map(|s| s.label())
            .collect::<Vec<_>>()
            .join(" "),
    );
    Ok(ExitCode::SUCCESS)
}
