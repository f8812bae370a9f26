//! Exhaustive-enumeration oracles used to verify the solver and the bounds.
//! These are deliberately naive, guarded against factorial blowups, and kept
//! off the solve path.

use thiserror::Error;

use crate::bounds::two_machine_lag_makespan;
use crate::instance::{Instance, JobId, Permutation, Time};

/// Hard ceiling on the number of elements an oracle will permute.
const MAX_ENUMERATED: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("refusing to enumerate {got}! orders (limit {limit})")]
    TooLarge { got: usize, limit: usize },
    #[error("prefix is not a set of distinct jobs in range")]
    BadPrefix,
}

/// Steps `items` to the lexicographically next permutation, returning false
/// once the order wraps around from the last permutation.
fn next_permutation(items: &mut [JobId]) -> bool {
    if items.len() < 2 {
        return false;
    }
    let mut i = items.len() - 1;
    while i > 0 && items[i - 1] >= items[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = items.len() - 1;
    while items[j] <= items[i - 1] {
        j -= 1;
    }
    items.swap(i - 1, j);
    items[i..].reverse();
    true
}

/// Visits all permutations of `items` in lexicographic order.
fn for_each_permutation(mut items: Vec<JobId>, mut visit: impl FnMut(&[JobId])) {
    items.sort_unstable();
    loop {
        visit(&items);
        if !next_permutation(&mut items) {
            break;
        }
    }
}

/// Exhaustive minimum makespan over all `n!` orders. Ties resolve to the
/// lexicographically smallest permutation.
pub fn brute_force_optimum(inst: &Instance) -> Result<(Permutation, Time), OracleError> {
    guard(inst.jobs())?;
    let mut best: Option<(Vec<JobId>, Time)> = None;
    for_each_permutation((0..inst.jobs()).collect(), |order| {
        let mut completion = vec![0; inst.machines()];
        for &job in order {
            inst.extend_completion(&mut completion, job);
        }
        let value = completion[inst.machines() - 1];
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((order.to_vec(), value));
        }
    });
    let (order, value) = best.expect("instances have at least one job");
    Ok((Permutation::new(order).expect("enumerated orders are permutations"), value))
}

/// Exhaustive minimum makespan over all completions of a fixed prefix.
pub fn brute_force_best_completion(inst: &Instance, prefix: &[JobId]) -> Result<Time, OracleError> {
    let n = inst.jobs();
    let mut seen = vec![false; n];
    for &job in prefix {
        if job >= n || seen[job] {
            return Err(OracleError::BadPrefix);
        }
        seen[job] = true;
    }
    let rest: Vec<JobId> = (0..n).filter(|&j| !seen[j]).collect();
    guard(rest.len().max(1) - 1)?;

    let mut base = vec![0; inst.machines()];
    for &job in prefix {
        inst.extend_completion(&mut base, job);
    }
    if rest.is_empty() {
        return Ok(base[inst.machines() - 1]);
    }

    let mut best = Time::MAX;
    for_each_permutation(rest, |order| {
        let mut completion = base.clone();
        for &job in order {
            inst.extend_completion(&mut completion, job);
        }
        best = best.min(completion[inst.machines() - 1]);
    });
    Ok(best)
}

/// Exhaustive minimum of [`two_machine_lag_makespan`] over all orders of the
/// jobs described by the aligned `(a, lag, b)` vectors.
pub fn brute_force_two_machine_lag(a: &[Time], lag: &[Time], b: &[Time]) -> Result<Time, OracleError> {
    assert!(a.len() == lag.len() && a.len() == b.len());
    guard(a.len().max(1) - 1)?;
    let mut best = Time::MAX;
    for_each_permutation((0..a.len()).collect(), |order| {
        best = best.min(two_machine_lag_makespan(order, a, lag, b, 0, 0));
    });
    Ok(best)
}

fn guard(count: usize) -> Result<(), OracleError> {
    if count > MAX_ENUMERATED {
        return Err(OracleError::TooLarge {
            got: count,
            limit: MAX_ENUMERATED,
        });
    }
    Ok(())
}
