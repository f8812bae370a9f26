//! Precomputed lower-bound tables and the lag-based two-machine bound.
//!
//! For every ordered machine pair `(k, l)` with `k < l`, the bound relaxes
//! the flow shop to a two-machine problem with transfer lags (the work on the
//! machines strictly between `k` and `l`), sequences the remaining jobs by
//! the lag-augmented Johnson rule, and adds the smallest remaining tail after
//! `l`. The node bound is the maximum over all pairs.
//!
//! Everything here is immutable after construction and shared read-only;
//! [`lower_bound`] is a pure function of its inputs, so any number of
//! evaluations may run concurrently.

use std::cmp::Reverse;

use thiserror::Error;

use crate::instance::{Instance, JobId, JobSet, Permutation, Time};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("time vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("lower bound requested for a node with no unscheduled jobs")]
    NoUnscheduledJobs,
}

/// All ordered machine pairs `(k, l)`, `k < l`, in lexicographic order.
/// The position of a pair is the column index shared by [`LagMatrix`] and
/// [`JohnsonMatrix`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachinePairTable {
    machines: usize,
    pairs: Vec<(usize, usize)>,
}

impl MachinePairTable {
    pub fn new(machines: usize) -> Self {
        let mut pairs = Vec::with_capacity(machines * machines.saturating_sub(1) / 2);
        for k in 0..machines {
            for l in k + 1..machines {
                pairs.push((k, l));
            }
        }
        Self { machines, pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Column index of pair `(k, l)`; inverse of `pairs()[idx]`.
    pub fn index(&self, k: usize, l: usize) -> usize {
        debug_assert!(k < l && l < self.machines);
        k * (2 * self.machines - k - 1) / 2 + (l - k - 1)
    }
}

/// Per-job transfer lags: entry `(j, idx(k, l))` is the total processing
/// time of job `j` on the machines strictly between `k` and `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagMatrix {
    jobs: usize,
    columns: usize,
    values: Vec<Time>,
}

impl LagMatrix {
    #[inline]
    pub fn lag(&self, job: JobId, pair_index: usize) -> Time {
        self.values[job * self.columns + pair_index]
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn entries(&self) -> usize {
        self.values.len()
    }
}

/// Builds the lag matrix using the column recurrence
/// `lag(j, (k, l)) = lag(j, (k, l-1)) + p(j, l-1)` for `l > k + 1`.
pub fn compute_lags(inst: &Instance, pairs: &MachinePairTable) -> LagMatrix {
    let jobs = inst.jobs();
    let columns = pairs.len();
    let mut values = vec![0; jobs * columns];
    for job in 0..jobs {
        let row = &mut values[job * columns..(job + 1) * columns];
        for k in 0..inst.machines() {
            let mut lag = 0;
            for l in k + 1..inst.machines() {
                row[pairs.index(k, l)] = lag;
                lag += inst.time(job, l);
            }
        }
    }
    LagMatrix {
        jobs,
        columns,
        values,
    }
}

/// One Johnson order per machine pair, stored column-major so a bound
/// evaluation walks each column sequentially.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JohnsonMatrix {
    jobs: usize,
    columns: Vec<JobId>,
}

impl JohnsonMatrix {
    #[inline]
    pub fn column(&self, pair_index: usize) -> &[JobId] {
        &self.columns[pair_index * self.jobs..(pair_index + 1) * self.jobs]
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn entries(&self) -> usize {
        self.columns.len()
    }
}

/// Johnson's two-machine rule: jobs with `a <= b` first by non-decreasing
/// `a`, then the rest by non-increasing `b`. Ties break on the smaller job
/// id so orders (and the whole search trace) are deterministic.
pub fn johnson_order(a: &[Time], b: &[Time]) -> Result<Permutation, BoundsError> {
    if a.len() != b.len() {
        return Err(BoundsError::LengthMismatch(a.len(), b.len()));
    }
    let mut order: Vec<JobId> = (0..a.len()).filter(|&j| a[j] <= b[j]).collect();
    order.sort_by_key(|&j| (a[j], j));
    let split = order.len();
    order.extend((0..a.len()).filter(|&j| a[j] > b[j]));
    order[split..].sort_by_key(|&j| (Reverse(b[j]), j));
    Ok(Permutation::new_unchecked(order))
}

/// Builds the Johnson matrix: column `(k, l)` sequences the jobs by
/// Johnson's rule on the virtual times `(p(j,k) + lag, lag + p(j,l))`, the
/// optimal rule for the two-machine problem with transfer lags.
pub fn compute_johnson_matrices(
    inst: &Instance,
    lags: &LagMatrix,
    pairs: &MachinePairTable,
) -> JohnsonMatrix {
    let jobs = inst.jobs();
    let mut columns = Vec::with_capacity(pairs.len() * jobs);
    for (idx, &(k, l)) in pairs.pairs().iter().enumerate() {
        let a: Vec<Time> = (0..jobs).map(|j| inst.time(j, k) + lags.lag(j, idx)).collect();
        let b: Vec<Time> = (0..jobs).map(|j| lags.lag(j, idx) + inst.time(j, l)).collect();
        let order = johnson_order(&a, &b).expect("vectors built with equal lengths");
        columns.extend_from_slice(order.order());
    }
    JohnsonMatrix { jobs, columns }
}

/// Per-job tails: entry `(j, l)` is the total work of job `j` strictly after
/// machine `l`. Tails are prefix-independent; only the unscheduled-set
/// minimum varies per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailTable {
    machines: usize,
    values: Vec<Time>,
}

impl TailTable {
    pub fn new(inst: &Instance) -> Self {
        let machines = inst.machines();
        let mut values = vec![0; inst.jobs() * machines];
        for job in 0..inst.jobs() {
            let row = &mut values[job * machines..(job + 1) * machines];
            for l in (0..machines - 1).rev() {
                row[l] = row[l + 1] + inst.time(job, l + 1);
            }
        }
        Self { machines, values }
    }

    #[inline]
    pub fn tail(&self, job: JobId, machine: usize) -> Time {
        self.values[job * self.machines + machine]
    }
}

/// Earliest-start data for one node: per unscheduled job the earliest start
/// on each machine given the prefix timeline, plus the per-machine minima
/// over unscheduled jobs (heads and tails). Only the minima feed the bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadVectors {
    machines: usize,
    job_heads: Vec<Time>,
    min_heads: Vec<Time>,
    min_tails: Vec<Time>,
}

impl HeadVectors {
    /// Earliest start of `job` on `machine`; meaningful for unscheduled jobs.
    pub fn job_head(&self, job: JobId, machine: usize) -> Time {
        self.job_heads[job * self.machines + machine]
    }

    pub fn min_heads(&self) -> &[Time] {
        &self.min_heads
    }

    pub fn min_tails(&self) -> &[Time] {
        &self.min_tails
    }
}

/// Computes earliest starts for every unscheduled job:
/// `head(j, 0) = C(0)` and `head(j, k) = max(C(k), head(j, k-1) + p(j, k-1))`
/// where `C` is the prefix completion vector. With no unscheduled job left
/// the head minima fall back to the prefix completions and the tail minima
/// to zero.
pub fn head_vectors(
    inst: &Instance,
    prefix_completion: &[Time],
    scheduled: JobSet,
    tails: &TailTable,
) -> HeadVectors {
    let machines = inst.machines();
    debug_assert_eq!(prefix_completion.len(), machines);
    let mut job_heads = vec![0; inst.jobs() * machines];
    let mut min_heads: Option<Vec<Time>> = None;
    let mut min_tails = vec![Time::MAX; machines];
    let mut any = false;
    for job in 0..inst.jobs() {
        if scheduled.contains(job) {
            continue;
        }
        any = true;
        let row = &mut job_heads[job * machines..(job + 1) * machines];
        row[0] = prefix_completion[0];
        for k in 1..machines {
            row[k] = prefix_completion[k].max(row[k - 1] + inst.time(job, k - 1));
        }
        match &mut min_heads {
            None => min_heads = Some(row.to_vec()),
            Some(mins) => {
                for (min, &head) in mins.iter_mut().zip(row.iter()) {
                    *min = (*min).min(head);
                }
            }
        }
        for (l, min_tail) in min_tails.iter_mut().enumerate() {
            *min_tail = (*min_tail).min(tails.tail(job, l));
        }
    }
    if !any {
        min_tails.fill(0);
    }
    HeadVectors {
        machines,
        job_heads,
        min_heads: min_heads.unwrap_or_else(|| prefix_completion.to_vec()),
        min_tails,
    }
}

/// Everything a bound evaluation reads besides the node itself. Built once
/// per instance, immutable afterwards.
#[derive(Debug, Clone)]
pub struct BoundTables {
    instance: Instance,
    pairs: MachinePairTable,
    lags: LagMatrix,
    johnson: JohnsonMatrix,
    tails: TailTable,
}

impl BoundTables {
    pub fn new(inst: &Instance) -> Self {
        let pairs = MachinePairTable::new(inst.machines());
        let lags = compute_lags(inst, &pairs);
        let johnson = compute_johnson_matrices(inst, &lags, &pairs);
        let tails = TailTable::new(inst);
        Self {
            instance: inst.clone(),
            pairs,
            lags,
            johnson,
            tails,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn pairs(&self) -> &MachinePairTable {
        &self.pairs
    }

    pub fn lags(&self) -> &LagMatrix {
        &self.lags
    }

    pub fn johnson(&self) -> &JohnsonMatrix {
        &self.johnson
    }

    pub fn tails(&self) -> &TailTable {
        &self.tails
    }
}

/// The per-node payload handed to a bounding backend: which jobs are already
/// scheduled plus the m-length head and tail reductions, which are computed
/// on the host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundInput {
    pub scheduled: JobSet,
    pub min_heads: Vec<Time>,
    pub min_tails: Vec<Time>,
    pub remaining: usize,
}

/// Builds the [`BoundInput`] for a node from its prefix completion times.
pub fn bound_input(tables: &BoundTables, prefix_completion: &[Time], scheduled: JobSet) -> BoundInput {
    let heads = head_vectors(tables.instance(), prefix_completion, scheduled, tables.tails());
    let HeadVectors {
        min_heads,
        min_tails,
        ..
    } = heads;
    BoundInput {
        scheduled,
        min_heads,
        min_tails,
        remaining: tables.instance().jobs() - scheduled.count(),
    }
}

/// Read counters for one bound evaluation, mirroring the access model of the
/// six bound structures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AccessCounters {
    pub ptm: u64,
    pub lm: u64,
    pub jm: u64,
    pub rm: u64,
    pub qm: u64,
    pub mm: u64,
}

/// Lag-based two-machine lower bound of a node.
///
/// For every pair `(k, l)` the unscheduled jobs are walked in Johnson-matrix
/// column order (scheduled jobs are skipped), simulated through the
/// two-machine-with-lags recurrence starting from the head minima, and the
/// tail minimum after `l` is added. The result is the maximum over pairs,
/// accumulated from zero.
pub fn lower_bound(input: &BoundInput, tables: &BoundTables) -> Result<Time, BoundsError> {
    let mut counters = AccessCounters::default();
    lb_impl::<false>(input, tables, &mut counters)
}

/// Same as [`lower_bound`] but reports how often each table was read.
pub fn lower_bound_counted(
    input: &BoundInput,
    tables: &BoundTables,
) -> Result<(Time, AccessCounters), BoundsError> {
    let mut counters = AccessCounters::default();
    let lb = lb_impl::<true>(input, tables, &mut counters)?;
    Ok((lb, counters))
}

fn lb_impl<const COUNT: bool>(
    input: &BoundInput,
    tables: &BoundTables,
    counters: &mut AccessCounters,
) -> Result<Time, BoundsError> {
    if input.remaining == 0 {
        return Err(BoundsError::NoUnscheduledJobs);
    }
    let inst = tables.instance();
    debug_assert_eq!(input.min_heads.len(), inst.machines());
    debug_assert_eq!(input.scheduled.count() + input.remaining, inst.jobs());

    let mut lb = 0;
    for (idx, &(k, l)) in tables.pairs().pairs().iter().enumerate() {
        if COUNT {
            counters.mm += 2;
            counters.rm += 2;
        }
        let mut on_first = input.min_heads[k];
        let mut on_second = input.min_heads[l];
        for &job in tables.johnson().column(idx) {
            if COUNT {
                counters.jm += 1;
            }
            if !input.scheduled.contains(job) {
                if COUNT {
                    counters.ptm += 2;
                    counters.lm += 1;
                }
                on_first += inst.time(job, k);
                on_second = on_second.max(on_first + tables.lags().lag(job, idx)) + inst.time(job, l);
            }
        }
        if COUNT {
            counters.qm += 1;
        }
        on_second += input.min_tails[l];
        lb = lb.max(on_second);
    }
    Ok(lb)
}

/// Simulates the two-machine schedule with transfer lags in the given order:
/// `t1 += a[job]; t2 = max(t2, t1 + lag[job]) + b[job]`, with `t1` and `t2`
/// starting from the given offsets. The order may cover any subset of jobs;
/// the vectors are aligned by job id.
pub fn two_machine_lag_makespan(
    order: &[JobId],
    a: &[Time],
    lag: &[Time],
    b: &[Time],
    start_a: Time,
    start_b: Time,
) -> Time {
    let mut t1 = start_a;
    let mut t2 = start_b;
    for &job in order {
        t1 += a[job];
        t2 = t2.max(t1 + lag[job]) + b[job];
    }
    t2
}
