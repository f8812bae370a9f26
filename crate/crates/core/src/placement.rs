//! Fast-memory placement advisor. Evaluates the size and per-evaluation
//! access-count formulas of the six bound structures at a given problem
//! shape, then greedily packs the most access-dense structures into a fixed
//! fast-memory budget. The advisor reproduces the layout decision, not the
//! hardware timing.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlacementError {
    #[error("remaining-job count must satisfy 1 <= n' <= n (got n'={nprime}, n={n})")]
    InvalidRemaining { nprime: u64, n: u64 },
    #[error("machine count must be at least 2")]
    TooFewMachines,
    #[error("entry width must be at least 1 byte")]
    ZeroEntryBytes,
}

/// The six structures read by a bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureName {
    Ptm,
    Lm,
    Jm,
    Rm,
    Qm,
    Mm,
}

impl StructureName {
    pub const ALL: [StructureName; 6] = [
        StructureName::Ptm,
        StructureName::Lm,
        StructureName::Jm,
        StructureName::Rm,
        StructureName::Qm,
        StructureName::Mm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StructureName::Ptm => "PTM",
            StructureName::Lm => "LM",
            StructureName::Jm => "JM",
            StructureName::Rm => "RM",
            StructureName::Qm => "QM",
            StructureName::Mm => "MM",
        }
    }
}

impl fmt::Display for StructureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Size and access-count profile of one structure at a problem shape
/// `(n, m, n')` with a fixed entry width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureProfile {
    pub name: StructureName,
    pub size_entries: u64,
    pub accesses: u64,
    pub entry_bytes: u64,
}

impl StructureProfile {
    pub fn size_bytes(&self) -> u64 {
        self.size_entries * self.entry_bytes
    }

    /// Exact comparison of accesses-per-byte via cross multiplication.
    fn denser_than(&self, other: &StructureProfile) -> std::cmp::Ordering {
        let lhs = u128::from(self.accesses) * u128::from(other.size_bytes());
        let rhs = u128::from(other.accesses) * u128::from(self.size_bytes());
        lhs.cmp(&rhs)
    }
}

/// Evaluates the size/access formulas for all six structures:
///
/// | structure | size            | accesses per evaluation |
/// |-----------|-----------------|-------------------------|
/// | PTM       | n x m           | n' x m(m-1)             |
/// | LM        | n x m(m-1)/2    | n' x m(m-1)/2           |
/// | JM        | n x m(m-1)/2    | n  x m(m-1)/2           |
/// | RM        | m               | m(m-1)                  |
/// | QM       | m               | m(m-1)/2                |
/// | MM        | m x (m-1)       | m(m-1)                  |
pub fn profile_structures(
    n: u64,
    m: u64,
    nprime: u64,
    entry_bytes: u64,
) -> Result<Vec<StructureProfile>, PlacementError> {
    if m < 2 {
        return Err(PlacementError::TooFewMachines);
    }
    if nprime == 0 || nprime > n {
        return Err(PlacementError::InvalidRemaining { nprime, n });
    }
    if entry_bytes == 0 {
        return Err(PlacementError::ZeroEntryBytes);
    }
    let pairs = m * (m - 1) / 2;
    let profile = |name, size_entries, accesses| StructureProfile {
        name,
        size_entries,
        accesses,
        entry_bytes,
    };
    Ok(vec![
        profile(StructureName::Ptm, n * m, nprime * m * (m - 1)),
        profile(StructureName::Lm, n * pairs, nprime * pairs),
        profile(StructureName::Jm, n * pairs, n * pairs),
        profile(StructureName::Rm, m, m * (m - 1)),
        profile(StructureName::Qm, m, pairs),
        profile(StructureName::Mm, m * (m - 1), m * (m - 1)),
    ])
}

/// Which structures won a slot in fast memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementPlan {
    /// Selected structures, in selection order.
    pub fast_set: Vec<StructureName>,
    pub fast_bytes_used: u64,
    pub budget_bytes: u64,
}

impl PlacementPlan {
    pub fn contains(&self, name: StructureName) -> bool {
        self.fast_set.contains(&name)
    }
}

/// Greedy packing by descending accesses-per-byte, ties broken by smaller
/// size; a structure that does not fit is skipped. A heuristic, not an
/// optimal knapsack.
pub fn select_placement(profiles: &[StructureProfile], budget_bytes: u64) -> PlacementPlan {
    let mut order: Vec<&StructureProfile> = profiles.iter().collect();
    order.sort_by(|a, b| {
        b.denser_than(a)
            .then_with(|| a.size_bytes().cmp(&b.size_bytes()))
            .then_with(|| position(a.name).cmp(&position(b.name)))
    });
    let mut plan = PlacementPlan {
        fast_set: Vec::new(),
        fast_bytes_used: 0,
        budget_bytes,
    };
    for profile in order {
        let bytes = profile.size_bytes();
        if plan.fast_bytes_used + bytes <= budget_bytes {
            plan.fast_bytes_used += bytes;
            plan.fast_set.push(profile.name);
        }
    }
    plan
}

fn position(name: StructureName) -> usize {
    StructureName::ALL.iter().position(|&x| x == name).unwrap()
}
