//! Batched bound evaluation: the host hands a pool of sub-problems to a
//! backend, which returns their lower bounds in order. The serial backend is
//! the reference; the multi-worker backend partitions the batch into
//! contiguous chunks claimed by a fixed set of worker threads, each output
//! slot written by exactly one worker, so results are bit-identical to the
//! serial backend for any worker count or chunk size.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bounds::{lower_bound, BoundInput, BoundTables, BoundsError};
use crate::instance::Time;

pub const DEFAULT_CHUNK: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("chunk size must be at least 1")]
    EmptyChunk,
    #[error("input {index}: {source}")]
    Input { index: usize, source: BoundsError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Serial,
    MultiWorker,
}

impl BackendKind {
    pub fn label(self) -> &'static str {
        match self {
            BackendKind::Serial => "serial",
            BackendKind::MultiWorker => "workers",
        }
    }
}

/// How a batch is evaluated: serial reference or `workers` threads pulling
/// contiguous chunks of `chunk` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub workers: usize,
    pub chunk: usize,
}

impl BackendConfig {
    pub fn serial() -> Self {
        Self {
            kind: BackendKind::Serial,
            workers: 1,
            chunk: DEFAULT_CHUNK,
        }
    }

    pub fn multi_worker(workers: usize) -> Self {
        Self {
            kind: BackendKind::MultiWorker,
            workers,
            chunk: DEFAULT_CHUNK,
        }
    }

    pub fn with_chunk(mut self, chunk: usize) -> Self {
        self.chunk = chunk;
        self
    }

    fn validate(&self) -> Result<(), BackendError> {
        if self.workers == 0 {
            return Err(BackendError::NoWorkers);
        }
        if self.chunk == 0 {
            return Err(BackendError::EmptyChunk);
        }
        Ok(())
    }
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self::serial()
    }
}

/// An ordered pool of bound inputs plus the shared tables they refer to.
#[derive(Debug, Clone, Copy)]
pub struct BoundBatch<'a> {
    pub tables: &'a BoundTables,
    pub inputs: &'a [BoundInput],
}

/// Bounds for one batch, in input order, plus the evaluation wall time.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub lbs: Vec<Time>,
    pub eval_time: Duration,
}

/// Monotone counters across evaluations; resettable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BackendStats {
    pub batches: u64,
    pub nodes: u64,
    pub eval_time: Duration,
}

/// A bounding backend with its configuration and cumulative statistics.
#[derive(Debug)]
pub struct Backend {
    config: BackendConfig,
    stats: BackendStats,
}

impl Backend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        Ok(Self {
            config,
            stats: BackendStats::default(),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn stats(&self) -> BackendStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = BackendStats::default();
    }

    /// Evaluates every input of the batch. Results are identical across
    /// backend kinds, worker counts and chunk sizes; order is preserved. The
    /// call returns only once every worker has finished.
    pub fn evaluate(&mut self, batch: &BoundBatch<'_>) -> Result<BatchResult, BackendError> {
        if batch.inputs.is_empty() {
            return Err(BackendError::EmptyBatch);
        }
        let start = Instant::now();
        let results = match self.config.kind {
            BackendKind::Serial => evaluate_serial(batch),
            BackendKind::MultiWorker => {
                evaluate_workers(batch, self.config.workers, self.config.chunk)
            }
        };
        let eval_time = start.elapsed();

        let mut lbs = Vec::with_capacity(results.len());
        for (index, result) in results.into_iter().enumerate() {
            match result {
                Ok(lb) => lbs.push(lb),
                Err(source) => return Err(BackendError::Input { index, source }),
            }
        }
        self.stats.batches += 1;
        self.stats.nodes += lbs.len() as u64;
        self.stats.eval_time += eval_time;
        Ok(BatchResult { lbs, eval_time })
    }
}

fn evaluate_serial(batch: &BoundBatch<'_>) -> Vec<Result<Time, BoundsError>> {
    batch
        .inputs
        .iter()
        .map(|input| lower_bound(input, batch.tables))
        .collect()
}

fn evaluate_workers(
    batch: &BoundBatch<'_>,
    workers: usize,
    chunk: usize,
) -> Vec<Result<Time, BoundsError>> {
    let mut out: Vec<Result<Time, BoundsError>> = vec![Ok(0); batch.inputs.len()];
    {
        // Work queue of (input chunk, output chunk) pairs; each worker claims
        // the next pair under the lock and fills its own output slots.
        let queue = Mutex::new(batch.inputs.chunks(chunk).zip(out.chunks_mut(chunk)));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let next = queue.lock().expect("bound worker panicked").next();
                    let Some((inputs, slots)) = next else {
                        break;
                    };
                    for (input, slot) in inputs.iter().zip(slots) {
                        *slot = lower_bound(input, batch.tables);
                    }
                });
            }
        });
    }
    out
}
