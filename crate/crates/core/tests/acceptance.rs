//! Acceptance suite: every release-gating property, one test per criterion,
//! each printing a PASS/FAIL/SKIP line with its measured numbers.
//!
//! Run with:
//!   cargo test -p flowshop-bb --test acceptance -- --test-threads=1 --nocapture

use std::sync::Mutex;
use std::time::Duration;

use flowshop_bb::backend::{Backend, BackendConfig, BoundBatch};
use flowshop_bb::bounds::{
    bound_input, lower_bound, lower_bound_counted, two_machine_lag_makespan, BoundInput,
    BoundTables,
};
use flowshop_bb::instance::{makespan, taillard_generate, Instance, JobSet, Permutation, Time};
use flowshop_bb::oracle::{
    brute_force_best_completion, brute_force_optimum, brute_force_two_machine_lag,
};
use flowshop_bb::placement::{profile_structures, select_placement, StructureName};
use flowshop_bb::search::{
    record_pool, replay_run, replay_traced, solve, solve_traced, Node, RecordHorizon,
    SearchConfig, SearchResult,
};
use flowshop_bb::snapshot::PoolSnapshot;

/// The criteria here measure wall time; keep them from running concurrently.
static SERIAL: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn report(number: u32, name: &str, status: &str, details: &str) {
    println!("[criterion {number}] {name}: {status} ({details})");
}

fn pass(number: u32, name: &str, details: &str) {
    report(number, name, "PASS", details);
}

fn cfg_with_pool(pool: usize) -> SearchConfig {
    SearchConfig {
        pool_extract: pool,
        ..SearchConfig::default()
    }
}

fn root_input(tables: &BoundTables) -> BoundInput {
    let zeros = vec![0; tables.instance().machines()];
    bound_input(tables, &zeros, JobSet::empty())
}

#[test]
fn criterion_1_solver_matches_brute_force() {
    let _guard = lock();
    let mut checked = 0;
    for i in 0..100u32 {
        let n = 5 + (i as usize % 5);
        let m = 2 + (i as usize % 4);
        let inst = taillard_generate(n, m, 1_000 + i64::from(i)).unwrap();
        let (_, expected) = brute_force_optimum(&inst).unwrap();
        let result = solve(&inst, &cfg_with_pool(32)).unwrap();
        assert!(result.proved, "instance {i} not solved to optimality");
        assert_eq!(
            result.best_makespan,
            Some(expected),
            "instance {i} ({n}x{m})"
        );
        let perm = result.best_permutation.expect("unseeded solve finds a schedule");
        assert_eq!(makespan(&inst, &perm).unwrap(), expected);
        checked += 1;
    }
    pass(
        1,
        "optimality oracle equivalence",
        &format!("{checked}/100 instances, n in [5,9], m in [2,5], exact"),
    );
}

#[test]
fn criterion_2_bound_admissibility_sweep() {
    let _guard = lock();
    let mut nodes_checked = 0u64;
    for i in 0..20u32 {
        let n = 5 + (i as usize % 4);
        let m = 2 + (i as usize % 4);
        let inst = taillard_generate(n, m, 2_000 + i64::from(i)).unwrap();
        let (result, trace) = solve_traced(&inst, &cfg_with_pool(8)).unwrap();
        assert!(result.proved);
        assert!(!trace.expanded.is_empty());
        for (prefix, lb) in &trace.expanded {
            let best = brute_force_best_completion(&inst, prefix).unwrap();
            assert!(
                *lb <= best,
                "instance {i} ({n}x{m}): node {prefix:?} has lb {lb} > best completion {best}"
            );
            nodes_checked += 1;
        }
    }
    pass(
        2,
        "bound admissibility sweep",
        &format!("{nodes_checked} expanded nodes over 20 instances, lb <= best completion"),
    );
}

#[test]
fn criterion_3_johnson_exactness_on_two_machines() {
    let _guard = lock();
    for i in 0..50u32 {
        let n = 3 + (i as usize % 7);
        let inst = taillard_generate(n, 2, 3_000 + i64::from(i)).unwrap();
        let (_, optimum) = brute_force_optimum(&inst).unwrap();

        let a: Vec<Time> = (0..n).map(|j| inst.time(j, 0)).collect();
        let b: Vec<Time> = (0..n).map(|j| inst.time(j, 1)).collect();
        let order = flowshop_bb::bounds::johnson_order(&a, &b).unwrap();
        let perm = Permutation::new(order.order().to_vec()).unwrap();
        assert_eq!(
            makespan(&inst, &perm).unwrap(),
            optimum,
            "johnson order is not optimal on instance {i}"
        );

        let tables = BoundTables::new(&inst);
        let root_lb = lower_bound(&root_input(&tables), &tables).unwrap();
        assert_eq!(root_lb, optimum, "root bound not exact on instance {i}");
    }
    pass(
        3,
        "two-machine Johnson exactness",
        "50 instances, n <= 9: johnson makespan and root bound equal the optimum",
    );
}

#[test]
fn criterion_4_lag_johnson_exactness() {
    let _guard = lock();
    for i in 0..50u32 {
        let n = 2 + (i as usize % 6);
        let source = taillard_generate(n, 3, 4_000 + i64::from(i)).unwrap();
        // The middle machine's times are the lags of the outer pair; zero
        // them on every fifth case to cover the classic no-lag reduction.
        let rows: Vec<Vec<Time>> = (0..n)
            .map(|j| {
                let lag = if i % 5 == 0 { 0 } else { source.time(j, 1) };
                vec![source.time(j, 0), lag, source.time(j, 2)]
            })
            .collect();
        let inst = Instance::new(rows).unwrap();
        let tables = BoundTables::new(&inst);
        let outer = tables.pairs().index(0, 2);
        let a: Vec<Time> = (0..n).map(|j| inst.time(j, 0)).collect();
        let lag: Vec<Time> = (0..n).map(|j| inst.time(j, 1)).collect();
        let b: Vec<Time> = (0..n).map(|j| inst.time(j, 2)).collect();
        assert_eq!(tables.lags().lag(0, outer), lag[0]);

        let column = tables.johnson().column(outer);
        let value = two_machine_lag_makespan(column, &a, &lag, &b, 0, 0);
        let best = brute_force_two_machine_lag(&a, &lag, &b).unwrap();
        assert_eq!(value, best, "lag-johnson order not optimal on triple {i}");
    }
    pass(
        4,
        "lag-augmented Johnson exactness",
        "50 (a, lag, b) triples, n <= 7: column order matches the exhaustive minimum",
    );
}

const REPLAY_INSTANCE_SEED: i64 = 6_502;

fn recorded_snapshot(horizon: u64, pool: usize) -> PoolSnapshot {
    let inst = taillard_generate(20, 20, REPLAY_INSTANCE_SEED).unwrap();
    let (snapshot, _) = record_pool(&inst, &cfg_with_pool(pool), RecordHorizon::Nodes(horizon))
        .expect("recording succeeds");
    snapshot
}

#[test]
fn criterion_5_backend_determinism_on_replay() {
    let _guard = lock();
    let snapshot = recorded_snapshot(500, 256);
    assert!(
        snapshot.nodes.len() >= 4_096,
        "snapshot too small: {}",
        snapshot.nodes.len()
    );

    // Direct batch check on the recorded pool itself.
    let tables = BoundTables::new(&snapshot.instance);
    let inputs: Vec<BoundInput> = snapshot.nodes[..4_096]
        .iter()
        .map(|node| {
            let rebuilt = Node::from_prefix(&snapshot.instance, &node.prefix).unwrap();
            bound_input(&tables, &rebuilt.prefix_completion, rebuilt.scheduled)
        })
        .collect();
    let batch = BoundBatch {
        tables: &tables,
        inputs: &inputs,
    };
    let reference = Backend::new(BackendConfig::serial())
        .unwrap()
        .evaluate(&batch)
        .unwrap();
    for workers in [2, 4, 8] {
        let result = Backend::new(BackendConfig::multi_worker(workers).with_chunk(256))
            .unwrap()
            .evaluate(&batch)
            .unwrap();
        assert_eq!(result.lbs, reference.lbs, "batch outputs differ at W={workers}");
    }

    // Full replays: identical exploration and batch outputs per backend.
    let budget = Some(2_000);
    let serial_cfg = SearchConfig {
        pool_extract: 1_024,
        node_budget: budget,
        ..SearchConfig::default()
    };
    let (serial, serial_trace) = replay_traced(&snapshot, &serial_cfg).unwrap();
    for workers in [2, 4, 8] {
        let cfg = SearchConfig {
            backend: BackendConfig::multi_worker(workers).with_chunk(256),
            ..serial_cfg.clone()
        };
        let (result, trace) = replay_traced(&snapshot, &cfg).unwrap();
        assert_eq!(result.best_makespan, serial.best_makespan, "W={workers}");
        assert_eq!(result.stats.branched, serial.stats.branched, "W={workers}");
        assert_eq!(result.stats.pruned, serial.stats.pruned, "W={workers}");
        assert_eq!(result.stats.bounded, serial.stats.bounded, "W={workers}");
        assert_eq!(result.stats.leaves, serial.stats.leaves, "W={workers}");
        assert_eq!(
            trace.batched_lbs, serial_trace.batched_lbs,
            "batch outputs differ at W={workers}"
        );
    }
    pass(
        5,
        "backend determinism",
        &format!(
            "20x20 snapshot of {} nodes; W in {{2,4,8}}, chunk 256: counters and {} batch outputs identical",
            snapshot.nodes.len(),
            serial_trace.batched_lbs.len()
        ),
    );
}

#[test]
fn criterion_6_structure_profiles_and_access_counts() {
    let _guard = lock();
    let profiles = profile_structures(200, 20, 100, 1).unwrap();
    let size_of = |name: StructureName| {
        profiles
            .iter()
            .find(|p| p.name == name)
            .unwrap()
            .size_bytes()
    };
    assert_eq!(size_of(StructureName::Jm), 38_000);
    assert_eq!(size_of(StructureName::Lm), 38_000);
    assert_eq!(size_of(StructureName::Ptm), 4_000);

    // Instrumented evaluation on a mid-search 20x20 node.
    let inst = taillard_generate(20, 20, REPLAY_INSTANCE_SEED).unwrap();
    let tables = BoundTables::new(&inst);
    let node = Node::from_prefix(&inst, &[4, 11, 0, 17, 8, 2, 19, 6, 13, 9]).unwrap();
    let input = bound_input(&tables, &node.prefix_completion, node.scheduled);
    let (_, counters) = lower_bound_counted(&input, &tables).unwrap();
    let (n, m, remaining) = (20u64, 20u64, 10u64);
    assert_eq!(counters.jm, n * m * (m - 1) / 2);
    assert!(counters.ptm <= remaining * m * (m - 1));
    assert_eq!(counters.ptm, remaining * m * (m - 1));
    assert_eq!(counters.lm, remaining * m * (m - 1) / 2);
    assert_eq!(counters.rm, m * (m - 1));
    assert_eq!(counters.qm, m * (m - 1) / 2);
    assert_eq!(counters.mm, m * (m - 1));
    pass(
        6,
        "size/access-table conformance",
        &format!(
            "JM/LM 38000 B, PTM 4000 B at (200,20,100,1); JM read {} = n*m(m-1)/2 times",
            counters.jm
        ),
    );
}

#[test]
fn criterion_7_placement_reproduction() {
    let _guard = lock();
    let profiles = profile_structures(200, 20, 100, 1).unwrap();
    let plan = select_placement(&profiles, 48 * 1024);
    assert!(plan.contains(StructureName::Jm), "JM must be in fast memory");
    assert!(plan.contains(StructureName::Ptm), "PTM must be in fast memory");
    assert!(!plan.contains(StructureName::Lm), "LM must stay out");
    let names: Vec<&str> = plan.fast_set.iter().map(|s| s.label()).collect();
    pass(
        7,
        "placement reproduction",
        &format!(
            "48 KB budget selects {{{}}} using {} B; LM excluded",
            names.join(", "),
            plan.fast_bytes_used
        ),
    );
}

#[test]
fn criterion_8_bounding_dominates_the_wall_time() {
    let _guard = lock();
    let inst = taillard_generate(20, 20, REPLAY_INSTANCE_SEED).unwrap();
    let cfg = SearchConfig {
        pool_extract: 8_192,
        node_budget: Some(100_000),
        ..SearchConfig::default()
    };
    let result = solve(&inst, &cfg).unwrap();
    assert_eq!(result.stats.branched, 100_000);
    let fraction = result.stats.bounding_fraction();
    assert!(
        fraction >= 0.90,
        "bounding fraction {fraction:.4} below the 0.90 floor"
    );
    pass(
        8,
        "bounding dominance",
        &format!(
            "20x20, 100000-node budget: bounding {:.1}% of {:.2} s solve time (floor 90%)",
            fraction * 100.0,
            result.stats.total_time.as_secs_f64()
        ),
    );
}

/// Distinct physical cores, from /proc/cpuinfo when available.
fn physical_cores() -> usize {
    let logical = std::thread::available_parallelism().map_or(1, |n| n.get());
    let Ok(info) = std::fs::read_to_string("/proc/cpuinfo") else {
        return logical;
    };
    let mut cores = std::collections::HashSet::new();
    let (mut package, mut core) = (None::<&str>, None::<&str>);
    for line in info.lines() {
        let mut parts = line.splitn(2, ':');
        match (parts.next().map(str::trim), parts.next().map(str::trim)) {
            (Some("physical id"), value) => package = value,
            (Some("core id"), value) => core = value,
            (Some(""), _) | (None, _) => {
                if let (Some(p), Some(c)) = (package.take(), core.take()) {
                    cores.insert((p.to_string(), c.to_string()));
                }
            }
            _ => {}
        }
    }
    if let (Some(p), Some(c)) = (package, core) {
        cores.insert((p.to_string(), c.to_string()));
    }
    if cores.is_empty() {
        logical
    } else {
        cores.len()
    }
}

fn timed_replay(snapshot: &PoolSnapshot, pool: usize, backend: BackendConfig) -> (SearchResult, f64) {
    let cfg = SearchConfig {
        pool_extract: pool,
        backend,
        node_budget: Some(20_000),
        ..SearchConfig::default()
    };
    let mut best: Option<(SearchResult, f64)> = None;
    for _ in 0..3 {
        let result = replay_run(snapshot, &cfg).unwrap();
        let wall = result.stats.total_time.as_secs_f64();
        if best.as_ref().is_none_or(|(_, b)| wall < *b) {
            best = Some((result, wall));
        }
    }
    best.unwrap()
}

#[test]
fn criterion_9_multi_worker_speedup_scales_with_the_pool() {
    let _guard = lock();
    let name = "multi-worker speedup vs pool size";
    let snapshot = recorded_snapshot(2_500, 1_024);
    let workers = 4;
    let pools = [4_096usize, 8_192, 16_384, 32_768];

    println!("instance,P,backend,workers,wall_ms,branched,pruned,bounded,speedup");
    let mut speedups = Vec::new();
    let mut branched = Vec::new();
    for &pool in &pools {
        let (serial, serial_wall) = timed_replay(&snapshot, pool, BackendConfig::serial());
        let (parallel, parallel_wall) = timed_replay(
            &snapshot,
            pool,
            BackendConfig::multi_worker(workers).with_chunk(256),
        );
        assert_eq!(parallel.stats.branched, serial.stats.branched);
        assert_eq!(parallel.stats.bounded, serial.stats.bounded);
        branched.push(serial.stats.branched);
        let speedup = serial_wall / parallel_wall;
        for (label, w, wall, s) in [
            ("serial", 1, serial_wall, 1.0),
            ("workers", workers, parallel_wall, speedup),
        ] {
            println!(
                "20x20,{pool},{label},{w},{:.3},{},{},{},{s:.3}",
                wall * 1e3,
                serial.stats.branched,
                serial.stats.pruned,
                serial.stats.bounded,
            );
        }
        speedups.push(speedup);
    }
    assert!(
        branched.windows(2).all(|w| w[0] == w[1]),
        "exploration must be identical across pool sizes under a fixed node budget"
    );

    let cores = physical_cores();
    let details = format!(
        "W=4 speedups {:?} at pools {pools:?}, {cores} physical cores",
        speedups.iter().map(|s| format!("{s:.2}")).collect::<Vec<_>>()
    );
    if cores < 4 {
        report(
            9,
            name,
            "SKIP",
            &format!("requires >= 4 physical cores, found {cores}; {details}"),
        );
        return;
    }
    assert!(
        speedups[1] >= 2.0,
        "W=4 speedup at pool 8192 is {:.2}, below 2.0",
        speedups[1]
    );
    assert!(
        speedups[1] >= speedups[0],
        "speedup fell from pool 4096 ({:.2}) to 8192 ({:.2})",
        speedups[0],
        speedups[1]
    );
    pass(9, name, &details);
}

#[test]
fn criterion_extra_replay_of_snapshot_is_untainted_by_backend_stats() {
    // Guards the soft invariant behind the bench harness: a repeated replay
    // of the same snapshot reproduces every counter bit for bit.
    let _guard = lock();
    let snapshot = recorded_snapshot(200, 64);
    let cfg = SearchConfig {
        pool_extract: 512,
        node_budget: Some(1_000),
        ..SearchConfig::default()
    };
    let first = replay_run(&snapshot, &cfg).unwrap();
    let second = replay_run(&snapshot, &cfg).unwrap();
    assert_eq!(first.stats.branched, second.stats.branched);
    assert_eq!(first.stats.pruned, second.stats.pruned);
    assert_eq!(first.stats.bounded, second.stats.bounded);
    assert_eq!(first.best_makespan, second.best_makespan);
}

#[test]
fn criterion_extra_time_budget_stops_the_run() {
    let _guard = lock();
    let inst = taillard_generate(18, 10, 99).unwrap();
    let cfg = SearchConfig {
        pool_extract: 64,
        time_budget: Some(Duration::from_millis(50)),
        ..SearchConfig::default()
    };
    let result = solve(&inst, &cfg).unwrap();
    assert!(!result.proved);
    assert!(result.stats.total_time < Duration::from_secs(20));
}
