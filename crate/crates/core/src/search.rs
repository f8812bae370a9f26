//! The branch-and-bound engine. The driver is single threaded: it pops a
//! pool of open nodes, branches them on the host, hands all children of the
//! round to the bounding backend as one batch, eliminates against the
//! incumbent, and iterates until the frontier is empty or a budget runs out.
//! All concurrency lives behind the backend's `evaluate` barrier.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::backend::{Backend, BackendConfig, BackendError, BoundBatch};
use crate::bounds::{bound_input, BoundInput, BoundTables};
use crate::instance::{Instance, JobId, JobSet, Permutation, Time};
use crate::snapshot::{PoolSnapshot, SnapshotNode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("instance has {got} jobs; the scheduled-set mask supports at most {max}")]
    TooManyJobs { got: usize, max: usize },
    #[error("pool extraction size must be at least 1")]
    InvalidPoolExtract,
    #[error("cannot branch a leaf node")]
    BranchLeaf,
    #[error("invalid schedule prefix: {0}")]
    BadPrefix(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// An open sub-problem: the jobs fixed at the front of the schedule, the
/// per-machine completion times of that prefix, and the node's bound once a
/// backend has evaluated it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub prefix: Vec<JobId>,
    pub scheduled: JobSet,
    pub prefix_completion: Vec<Time>,
    pub lb: Option<Time>,
}

impl Node {
    pub fn root(inst: &Instance) -> Self {
        Self {
            prefix: Vec::new(),
            scheduled: JobSet::empty(),
            prefix_completion: vec![0; inst.machines()],
            lb: None,
        }
    }

    /// Rebuilds a node from a schedule prefix, recomputing the completion
    /// times from scratch.
    pub fn from_prefix(inst: &Instance, prefix: &[JobId]) -> Result<Self, SearchError> {
        let mut node = Self::root(inst);
        for &job in prefix {
            if job >= inst.jobs() || node.scheduled.contains(job) {
                return Err(SearchError::BadPrefix(format!(
                    "job {job} is out of range or repeated"
                )));
            }
            node.push_job(inst, job);
        }
        Ok(node)
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    /// Appends `job` to the prefix, updating the completion times
    /// incrementally.
    fn push_job(&mut self, inst: &Instance, job: JobId) {
        debug_assert!(!self.scheduled.contains(job));
        self.prefix.push(job);
        self.scheduled.insert(job);
        inst.extend_completion(&mut self.prefix_completion, job);
    }

    fn child(&self, inst: &Instance, job: JobId) -> Self {
        let mut child = Self {
            prefix: self.prefix.clone(),
            scheduled: self.scheduled,
            prefix_completion: self.prefix_completion.clone(),
            lb: None,
        };
        child.push_job(inst, job);
        child
    }
}

/// One child per unscheduled job, in ascending job id order.
pub fn branch(node: &Node, inst: &Instance) -> Result<Vec<Node>, SearchError> {
    if node.depth() >= inst.jobs() {
        return Err(SearchError::BranchLeaf);
    }
    Ok((0..inst.jobs())
        .filter(|&job| !node.scheduled.contains(job))
        .map(|job| node.child(inst, job))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Smallest bound first; deeper nodes win ties so promising schedules
    /// complete early, insertion order breaks the rest.
    BestFirst,
    /// Deepest first, then smallest bound, then insertion order.
    DepthFirst,
}

impl Strategy {
    fn key(self, lb: Time, depth: usize, seq: u64) -> [u64; 3] {
        let shallow = u64::MAX - depth as u64;
        match self {
            Strategy::BestFirst => [lb, shallow, seq],
            Strategy::DepthFirst => [shallow, lb, seq],
        }
    }
}

struct PoolEntry {
    key: [u64; 3],
    node: Node,
}

impl PartialEq for PoolEntry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for PoolEntry {}

impl PartialOrd for PoolEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PoolEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; the smallest key must compare greatest.
        other.key.cmp(&self.key)
    }
}

/// The frontier of open nodes with a total, deterministic extraction order.
pub struct Pool {
    strategy: Strategy,
    heap: BinaryHeap<PoolEntry>,
    next_seq: u64,
}

impl Pool {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }

    /// Inserts a node under the given bound key (the root enters with key 0
    /// before any evaluation).
    pub fn push(&mut self, node: Node, lb: Time) {
        let key = self.strategy.key(lb, node.depth(), self.next_seq);
        self.next_seq += 1;
        self.heap.push(PoolEntry { key, node });
    }

    pub fn pop(&mut self) -> Option<Node> {
        self.heap.pop().map(|entry| entry.node)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Nodes selected per iteration; their children form one bound batch.
    pub pool_extract: usize,
    pub backend: BackendConfig,
    pub strategy: Strategy,
    /// Optional seeded incumbent (value only, no schedule).
    pub initial_upper_bound: Option<Time>,
    /// Stop after this many branched nodes.
    pub node_budget: Option<u64>,
    /// Stop once the solve loop has run this long.
    pub time_budget: Option<Duration>,
    /// Eliminate nodes with `lb >= incumbent`; switching this off keeps
    /// ties alive (`lb > incumbent` prunes).
    pub prune_ties: bool,
    /// 0 silent; 1 prints one line per iteration to stderr.
    pub verbosity: u8,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            pool_extract: 8192,
            backend: BackendConfig::serial(),
            strategy: Strategy::BestFirst,
            initial_upper_bound: None,
            node_budget: None,
            time_budget: None,
            prune_ties: true,
            verbosity: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub branched: u64,
    pub pruned: u64,
    pub bounded: u64,
    pub leaves: u64,
    pub iterations: u64,
    pub total_time: Duration,
    pub bounding_time: Duration,
}

impl SearchStats {
    /// Fraction of the solve wall time spent preparing and evaluating bounds.
    pub fn bounding_fraction(&self) -> f64 {
        if self.total_time.is_zero() {
            return 0.0;
        }
        self.bounding_time.as_secs_f64() / self.total_time.as_secs_f64()
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Best complete schedule found by this run, if any. Stays `None` when a
    /// seeded bound was never improved.
    pub best_permutation: Option<Permutation>,
    /// Final incumbent value; the optimum once `proved` holds and no seeded
    /// bound was involved.
    pub best_makespan: Option<Time>,
    /// Whether the frontier was exhausted (no budget stop).
    pub proved: bool,
    pub stats: SearchStats,
}

/// Exploration events, collected by the `*_traced` entry points.
#[derive(Debug, Clone, Default)]
pub struct SearchTrace {
    /// Every branched node: prefix and its bound key at extraction.
    pub expanded: Vec<(Vec<JobId>, Time)>,
    /// Every eliminated node: prefix, bound, incumbent at elimination time.
    pub pruned: Vec<(Vec<JobId>, Time, Time)>,
    /// Concatenated backend outputs, batch by batch.
    pub batched_lbs: Vec<Time>,
    /// Incumbent values in improvement order.
    pub incumbents: Vec<Time>,
}

/// How long [`record_pool`] lets the serial engine run before freezing the
/// frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordHorizon {
    Nodes(u64),
    Time(Duration),
}

struct Engine {
    instance: Instance,
    tables: BoundTables,
    backend: Backend,
    cfg: SearchConfig,
    pool: Pool,
    incumbent_value: Option<Time>,
    incumbent_perm: Option<Permutation>,
    stats: SearchStats,
    trace: SearchTrace,
    collect_trace: bool,
}

impl Engine {
    fn new(inst: &Instance, cfg: &SearchConfig) -> Result<Self, SearchError> {
        if inst.jobs() > JobSet::MAX_JOBS {
            return Err(SearchError::TooManyJobs {
                got: inst.jobs(),
                max: JobSet::MAX_JOBS,
            });
        }
        if cfg.pool_extract == 0 {
            return Err(SearchError::InvalidPoolExtract);
        }
        Ok(Self {
            instance: inst.clone(),
            tables: BoundTables::new(inst),
            backend: Backend::new(cfg.backend)?,
            cfg: cfg.clone(),
            pool: Pool::new(cfg.strategy),
            incumbent_value: cfg.initial_upper_bound,
            incumbent_perm: None,
            stats: SearchStats::default(),
            trace: SearchTrace::default(),
            collect_trace: false,
        })
    }

    fn with_root(inst: &Instance, cfg: &SearchConfig) -> Result<Self, SearchError> {
        let mut engine = Self::new(inst, cfg)?;
        engine.pool.push(Node::root(inst), 0);
        Ok(engine)
    }

    fn from_snapshot(snapshot: &PoolSnapshot, cfg: &SearchConfig) -> Result<Self, SearchError> {
        let mut engine = Self::new(&snapshot.instance, cfg)?;
        engine.incumbent_value = match (snapshot.incumbent, cfg.initial_upper_bound) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        for node in &snapshot.nodes {
            let mut rebuilt = Node::from_prefix(&snapshot.instance, &node.prefix)?;
            rebuilt.lb = Some(node.lb);
            engine.pool.push(rebuilt, node.lb);
        }
        Ok(engine)
    }

    fn prunes(&self, lb: Time) -> bool {
        match self.incumbent_value {
            None => false,
            Some(ub) if self.cfg.prune_ties => lb >= ub,
            Some(ub) => lb > ub,
        }
    }

    fn offer_leaf(&mut self, order: Vec<JobId>, value: Time) {
        self.stats.leaves += 1;
        if self.incumbent_value.is_none_or(|ub| value < ub) {
            self.incumbent_value = Some(value);
            self.incumbent_perm = Some(Permutation::new_unchecked(order));
            if self.collect_trace {
                self.trace.incumbents.push(value);
            }
        }
    }

    fn note_pruned(&mut self, node: &Node, lb: Time) {
        self.stats.pruned += 1;
        if self.collect_trace {
            let ub = self.incumbent_value.expect("pruning requires an incumbent");
            self.trace.pruned.push((node.prefix.clone(), lb, ub));
        }
    }

    /// Routes freshly branched children: completed schedules and forced
    /// completions (one job left) go straight to makespan evaluation, the
    /// rest are bounded as a single batch and filtered against the
    /// incumbent.
    fn dispatch(&mut self, children: Vec<Node>) -> Result<(), SearchError> {
        let n = self.instance.jobs();
        let mut to_bound = Vec::with_capacity(children.len());
        for mut child in children {
            match n - child.depth() {
                0 => {
                    let value = *child.prefix_completion.last().expect("m >= 1");
                    self.offer_leaf(child.prefix, value);
                }
                1 => {
                    let job = (0..n)
                        .find(|&j| !child.scheduled.contains(j))
                        .expect("one job remains");
                    child.push_job(&self.instance, job);
                    let value = *child.prefix_completion.last().expect("m >= 1");
                    self.offer_leaf(child.prefix, value);
                }
                _ => to_bound.push(child),
            }
        }
        if to_bound.is_empty() {
            return Ok(());
        }

        let bounding_started = Instant::now();
        let inputs: Vec<BoundInput> = to_bound
            .iter()
            .map(|node| bound_input(&self.tables, &node.prefix_completion, node.scheduled))
            .collect();
        let batch = BoundBatch {
            tables: &self.tables,
            inputs: &inputs,
        };
        let result = self.backend.evaluate(&batch)?;
        self.stats.bounding_time += bounding_started.elapsed();
        self.stats.bounded += to_bound.len() as u64;
        if self.collect_trace {
            self.trace.batched_lbs.extend_from_slice(&result.lbs);
        }

        for (mut node, lb) in to_bound.into_iter().zip(result.lbs) {
            node.lb = Some(lb);
            if self.prunes(lb) {
                self.note_pruned(&node, lb);
            } else {
                self.pool.push(node, lb);
            }
        }
        Ok(())
    }

    fn budget_exhausted(&self, loop_start: Instant) -> bool {
        if self.cfg.node_budget.is_some_and(|b| self.stats.branched >= b) {
            return true;
        }
        self.cfg
            .time_budget
            .is_some_and(|b| loop_start.elapsed() >= b)
    }

    fn run(&mut self) -> Result<SearchResult, SearchError> {
        let loop_start = Instant::now();
        let mut proved = true;
        loop {
            if self.budget_exhausted(loop_start) {
                proved = false;
                break;
            }
            // Cap the round at the remaining node budget so a budgeted run
            // branches exactly its budget (unless the frontier runs dry
            // first), independent of the extraction size.
            let extract = match self.cfg.node_budget {
                Some(budget) => self
                    .cfg
                    .pool_extract
                    .min((budget - self.stats.branched) as usize),
                None => self.cfg.pool_extract,
            };
            let mut selected = Vec::with_capacity(extract.min(self.pool.len()).max(1));
            while selected.len() < extract {
                let Some(node) = self.pool.pop() else { break };
                let lb = node.lb.unwrap_or(0);
                if self.prunes(lb) {
                    self.note_pruned(&node, lb);
                } else {
                    selected.push(node);
                }
            }
            if selected.is_empty() {
                break; // frontier exhausted
            }
            self.stats.iterations += 1;

            let mut children = Vec::new();
            for node in selected {
                self.stats.branched += 1;
                if self.collect_trace {
                    self.trace
                        .expanded
                        .push((node.prefix.clone(), node.lb.unwrap_or(0)));
                }
                children.extend(branch(&node, &self.instance)?);
            }
            self.dispatch(children)?;

            if self.cfg.verbosity >= 1 {
                eprintln!(
                    "iteration {}: pool {}, branched {}, bounded {}, incumbent {}",
                    self.stats.iterations,
                    self.pool.len(),
                    self.stats.branched,
                    self.stats.bounded,
                    self.incumbent_value
                        .map_or_else(|| "inf".into(), |v| v.to_string()),
                );
            }
        }
        self.stats.total_time += loop_start.elapsed();
        Ok(SearchResult {
            best_permutation: self.incumbent_perm.clone(),
            best_makespan: self.incumbent_value,
            proved,
            stats: self.stats,
        })
    }

    /// Freezes the live frontier in extraction order; stale entries are
    /// dropped on the way out.
    fn drain_frontier(&mut self) -> Vec<SnapshotNode> {
        let mut nodes = Vec::with_capacity(self.pool.len());
        while let Some(node) = self.pool.pop() {
            let lb = node.lb.unwrap_or(0);
            if !self.prunes(lb) {
                nodes.push(SnapshotNode {
                    prefix: node.prefix,
                    lb,
                });
            }
        }
        nodes
    }
}

/// Solves the instance to optimality (or until a configured budget stops the
/// run, flagged through `proved`).
pub fn solve(inst: &Instance, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    Engine::with_root(inst, cfg)?.run()
}

/// [`solve`] plus the full exploration trace; meant for verification on
/// small instances.
pub fn solve_traced(
    inst: &Instance,
    cfg: &SearchConfig,
) -> Result<(SearchResult, SearchTrace), SearchError> {
    let mut engine = Engine::with_root(inst, cfg)?;
    engine.collect_trace = true;
    let result = engine.run()?;
    Ok((result, engine.trace))
}

/// Runs the serial engine up to `horizon`, then freezes the open pool and
/// the incumbent into a snapshot. Also returns the partial result of the
/// recording run.
pub fn record_pool(
    inst: &Instance,
    cfg: &SearchConfig,
    horizon: RecordHorizon,
) -> Result<(PoolSnapshot, SearchResult), SearchError> {
    let mut record_cfg = cfg.clone();
    record_cfg.backend = BackendConfig::serial();
    match horizon {
        RecordHorizon::Nodes(n) => record_cfg.node_budget = Some(n),
        RecordHorizon::Time(t) => record_cfg.time_budget = Some(t),
    }
    let mut engine = Engine::with_root(inst, &record_cfg)?;
    let result = engine.run()?;
    let nodes = engine.drain_frontier();
    Ok((
        PoolSnapshot {
            instance: inst.clone(),
            incumbent: engine.incumbent_value,
            nodes,
        },
        result,
    ))
}

/// Solves to completion from a frozen frontier. With identical ordering
/// rules the set of explored nodes is identical for every backend.
pub fn replay_run(snapshot: &PoolSnapshot, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    Engine::from_snapshot(snapshot, cfg)?.run()
}

/// [`replay_run`] plus the exploration trace.
pub fn replay_traced(
    snapshot: &PoolSnapshot,
    cfg: &SearchConfig,
) -> Result<(SearchResult, SearchTrace), SearchError> {
    let mut engine = Engine::from_snapshot(snapshot, cfg)?;
    engine.collect_trace = true;
    let result = engine.run()?;
    Ok((result, engine.trace))
}
