//! Branch-and-bound solver for the permutation flow shop.
//!
//! The solver minimizes the makespan with a best-first search whose bounding
//! step is batched: each iteration pops a pool of open nodes, branches them
//! on the host, and hands all children to a pluggable backend that returns
//! their lag-based two-machine lower bounds in order. A serial backend is
//! the reference; a multi-worker backend evaluates the same batches in
//! chunks with bit-identical results.
//!
//! Besides the solver the crate ships:
//! - deterministic benchmark-style instance generation and text I/O
//!   ([`instance`]),
//! - a record/replay protocol that freezes the frontier so different
//!   backends solve the same workload ([`search`], [`snapshot`]),
//! - a fast-memory placement advisor over the bound structures' size and
//!   access-count profiles ([`placement`]),
//! - brute-force oracles for verification ([`oracle`]).

pub mod backend;
pub mod bounds;
pub mod instance;
pub mod oracle;
pub mod placement;
pub mod search;
pub mod snapshot;

pub use backend::{Backend, BackendConfig, BackendKind, BatchResult, BoundBatch};
pub use bounds::{bound_input, lower_bound, BoundInput, BoundTables};
pub use instance::{
    makespan, parse_instance, taillard_generate, write_instance, Instance, JobId, JobSet,
    Permutation, Time,
};
pub use search::{
    branch, record_pool, replay_run, solve, Node, RecordHorizon, SearchConfig, SearchResult,
    SearchStats, Strategy,
};
pub use snapshot::{parse_snapshot, write_snapshot, PoolSnapshot};
