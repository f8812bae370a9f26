//! Flow-shop problem instances: processing-time matrix, the makespan
//! objective, deterministic benchmark-style generation and text file I/O.

use std::fmt;

use thiserror::Error;

/// Integer time unit used throughout the solver. All makespan and bound
/// arithmetic is exact; there is no floating point anywhere in the bound path.
pub type Time = u64;

/// Index of a job, in `0..n`.
pub type JobId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("instance must have at least one job and one machine")]
    Empty,
    #[error("job row {row} has {got} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("total processing time overflows the time type")]
    TimesTooLarge,
    #[error("seed must lie in (0, 2^31 - 1), got {0}")]
    InvalidSeed(i64),
    #[error("sequence of length {len} is not a permutation of 0..{len}")]
    NotAPermutation { len: usize },
    #[error("permutation has {got} jobs but the instance has {expected}")]
    PermutationLength { got: usize, expected: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> InstanceError {
    InstanceError::Parse {
        line,
        msg: msg.into(),
    }
}

/// A permutation flow-shop instance: `n` jobs, `m` machines and the
/// processing-time matrix with entry `(j, k)` holding job `j`'s time on
/// machine `k`. Immutable after construction and safe to share read-only
/// across concurrent evaluators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    jobs: usize,
    machines: usize,
    /// Row-major: `ptm[j * machines + k]`.
    ptm: Vec<Time>,
}

impl Instance {
    /// Builds an instance from one row of processing times per job.
    pub fn new(rows: Vec<Vec<Time>>) -> Result<Self, InstanceError> {
        let jobs = rows.len();
        let machines = rows.first().map_or(0, Vec::len);
        if jobs == 0 || machines == 0 {
            return Err(InstanceError::Empty);
        }
        let mut ptm = Vec::with_capacity(jobs * machines);
        for (row, times) in rows.iter().enumerate() {
            if times.len() != machines {
                return Err(InstanceError::RaggedRow {
                    row,
                    got: times.len(),
                    expected: machines,
                });
            }
            ptm.extend_from_slice(times);
        }
        Self::from_flat(jobs, machines, ptm)
    }

    /// Builds an instance from a row-major flat matrix.
    pub fn from_flat(jobs: usize, machines: usize, ptm: Vec<Time>) -> Result<Self, InstanceError> {
        if jobs == 0 || machines == 0 || ptm.len() != jobs * machines {
            return Err(InstanceError::Empty);
        }
        // All derived quantities (completions, lags, tails, bounds) are sums
        // of entries plus at most two head offsets, each below the total
        // work. Capping the total keeps every downstream add overflow-free.
        let mut total: Time = 0;
        for &t in &ptm {
            total = total
                .checked_add(t)
                .filter(|&s| s <= Time::MAX / 4)
                .ok_or(InstanceError::TimesTooLarge)?;
        }
        Ok(Self {
            jobs,
            machines,
            ptm,
        })
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    /// Processing time of `job` on `machine`.
    #[inline]
    pub fn time(&self, job: JobId, machine: usize) -> Time {
        self.ptm[job * self.machines + machine]
    }

    /// All processing times of one job, machine by machine.
    #[inline]
    pub fn job_row(&self, job: JobId) -> &[Time] {
        &self.ptm[job * self.machines..(job + 1) * self.machines]
    }

    /// Total processing time required on one machine.
    pub fn machine_load(&self, machine: usize) -> Time {
        (0..self.jobs).map(|j| self.time(j, machine)).sum()
    }

    /// Total processing time of one job over all machines.
    pub fn job_length(&self, job: JobId) -> Time {
        self.job_row(job).iter().sum()
    }

    /// Advances a per-machine completion-time vector by scheduling `job`
    /// next: `C'(0) = C(0) + p(j,0)`, `C'(k) = max(C'(k-1), C(k)) + p(j,k)`.
    pub fn extend_completion(&self, completion: &mut [Time], job: JobId) {
        debug_assert_eq!(completion.len(), self.machines);
        let row = self.job_row(job);
        completion[0] += row[0];
        for k in 1..self.machines {
            completion[k] = completion[k].max(completion[k - 1]) + row[k];
        }
    }
}

/// A full processing order: a bijection on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<JobId>,
}

impl Permutation {
    /// Validates that `order` visits every job in `0..order.len()` once.
    pub fn new(order: Vec<JobId>) -> Result<Self, InstanceError> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &j in &order {
            if j >= n || seen[j] {
                return Err(InstanceError::NotAPermutation { len: n });
            }
            seen[j] = true;
        }
        Ok(Self { order })
    }

    /// Skips validation; for orders that are permutations by construction.
    pub(crate) fn new_unchecked(order: Vec<JobId>) -> Self {
        debug_assert!(Self::new(order.clone()).is_ok());
        Self { order }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[JobId] {
        &self.order
    }

    pub fn into_order(self) -> Vec<JobId> {
        self.order
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, j) in self.order.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

/// Completion time of the last job on the last machine when processing all
/// jobs in the given order on every machine.
pub fn makespan(inst: &Instance, perm: &Permutation) -> Result<Time, InstanceError> {
    if perm.len() != inst.jobs() {
        return Err(InstanceError::PermutationLength {
            got: perm.len(),
            expected: inst.jobs(),
        });
    }
    let mut completion = vec![0; inst.machines()];
    for &job in perm.order() {
        inst.extend_completion(&mut completion, job);
    }
    Ok(completion[inst.machines() - 1])
}

/// A set of jobs as a bitmask. The mask is fixed-width, which caps the
/// solvable instances at [`JobSet::MAX_JOBS`] jobs; table construction and
/// the placement analysis have no such limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct JobSet(u64);

impl JobSet {
    pub const MAX_JOBS: usize = 64;

    pub fn empty() -> Self {
        Self(0)
    }

    /// The full set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= Self::MAX_JOBS);
        if n == Self::MAX_JOBS {
            Self(u64::MAX)
        } else {
            Self((1u64 << n) - 1)
        }
    }

    #[inline]
    pub fn insert(&mut self, job: JobId) {
        debug_assert!(job < Self::MAX_JOBS);
        self.0 |= 1 << job;
    }

    #[inline]
    pub fn contains(self, job: JobId) -> bool {
        debug_assert!(job < Self::MAX_JOBS);
        self.0 & (1 << job) != 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

const LCG_MODULUS: i64 = 2_147_483_647; // 2^31 - 1
const LCG_MULTIPLIER: i64 = 16_807;
const LCG_Q: i64 = 127_773; // modulus / multiplier
const LCG_R: i64 = 2_836; // modulus % multiplier

/// Minimal-standard linear congruential generator with the Schrage split,
/// the convention used by the classic flow-shop benchmark generator.
pub(crate) struct MinStdRng {
    state: i64,
}

impl MinStdRng {
    pub(crate) fn new(seed: i64) -> Result<Self, InstanceError> {
        if seed <= 0 || seed >= LCG_MODULUS {
            return Err(InstanceError::InvalidSeed(seed));
        }
        Ok(Self { state: seed })
    }

    /// Next value in (0, 1).
    pub(crate) fn next_unit(&mut self) -> f64 {
        let hi = self.state / LCG_Q;
        let lo = self.state % LCG_Q;
        self.state = LCG_MULTIPLIER * lo - LCG_R * hi;
        if self.state < 0 {
            self.state += LCG_MODULUS;
        }
        self.state as f64 / LCG_MODULUS as f64
    }

    /// Uniform integer in `[low, high]`.
    pub(crate) fn next_in(&mut self, low: Time, high: Time) -> Time {
        low + (self.next_unit() * (high - low + 1) as f64) as Time
    }
}

/// Generates a benchmark-style instance: processing times drawn uniformly
/// from `[1, 99]` in machine-major order (for each machine, for each job),
/// so results are comparable with the conventional generator.
pub fn taillard_generate(
    jobs: usize,
    machines: usize,
    seed: i64,
) -> Result<Instance, InstanceError> {
    if jobs == 0 || machines == 0 {
        return Err(InstanceError::Empty);
    }
    let mut rng = MinStdRng::new(seed)?;
    let mut ptm = vec![0; jobs * machines];
    for machine in 0..machines {
        for job in 0..jobs {
            ptm[job * machines + machine] = rng.next_in(1, 99);
        }
    }
    Instance::from_flat(jobs, machines, ptm)
}

/// Parses the text instance format: a `"n m"` header line, then `n` lines of
/// `m` space-separated non-negative integers. Lines starting with `#` are
/// ignored. Errors carry the offending 1-based line number.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(
            header_line,
            format!("header must be \"n m\", got {fields:?}"),
        ));
    }
    let jobs = parse_count(header_line, fields[0], "job count")?;
    let machines = parse_count(header_line, fields[1], "machine count")?;

    let mut ptm = Vec::with_capacity(jobs * machines);
    let mut last_line = header_line;
    for row in 0..jobs {
        let (line, text) = lines.next().ok_or_else(|| {
            parse_err(
                last_line + 1,
                format!("expected {jobs} job rows, found {row}"),
            )
        })?;
        last_line = line;
        let entries: Vec<&str> = text.split_whitespace().collect();
        if entries.len() != machines {
            return Err(parse_err(
                line,
                format!(
                    "job row {} has {} entries, expected {machines}",
                    row + 1,
                    entries.len()
                ),
            ));
        }
        for entry in entries {
            ptm.push(parse_time(line, entry)?);
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "unexpected content after the last job row"));
    }
    Instance::from_flat(jobs, machines, ptm).map_err(|e| match e {
        InstanceError::TimesTooLarge => e,
        _ => parse_err(header_line, e.to_string()),
    })
}

fn parse_count(line: usize, token: &str, what: &str) -> Result<usize, InstanceError> {
    match token.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(parse_err(line, format!("{what} must be a positive integer, got {token:?}"))),
    }
}

fn parse_time(line: usize, token: &str) -> Result<Time, InstanceError> {
    token.parse::<Time>().map_err(|_| {
        let reason = if token.starts_with('-') {
            "negative entry"
        } else {
            "entry is not an integer"
        };
        parse_err(line, format!("{reason}: {token:?}"))
    })
}

/// Writes the text instance format; `parse_instance(write_instance(i)) == i`.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = format!("{} {}\n", inst.jobs(), inst.machines());
    for job in 0..inst.jobs() {
        let row: Vec<String> = inst.job_row(job).iter().map(Time::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
