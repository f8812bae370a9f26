//! Pool snapshot files: the open frontier plus the incumbent, frozen after a
//! fixed amount of serial effort. Replaying a snapshot lets different
//! backends solve an identical workload, which makes timing ratios fair.
//!
//! Format (text, `#` comment lines ignored):
//!
//! ```text
//! v1 SNAPSHOT <n> <m> <incumbent|inf> <node count>
//! <instance in the instance file format>
//! <depth> <bound field> <prefix job ids...>   (one line per node)
//! ```
//!
//! Nodes appear in pool priority order. The bound field is stored relative
//! to the incumbent (`incumbent - lb`) when an incumbent exists, and as the
//! absolute bound otherwise.

use thiserror::Error;

use crate::instance::{write_instance, Instance, InstanceError, JobId, Time};

pub const SNAPSHOT_VERSION: &str = "v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("snapshot instance does not match the given instance")]
    InstanceMismatch,
}

fn parse_err(line: usize, msg: impl Into<String>) -> SnapshotError {
    SnapshotError::Parse {
        line,
        msg: msg.into(),
    }
}

/// One open node: its schedule prefix and its evaluated bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotNode {
    pub prefix: Vec<JobId>,
    pub lb: Time,
}

/// A frozen search frontier. `incumbent` is the best makespan known when the
/// snapshot was taken (`None` before any complete schedule).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSnapshot {
    pub instance: Instance,
    pub incumbent: Option<Time>,
    pub nodes: Vec<SnapshotNode>,
}

impl PoolSnapshot {
    pub fn ensure_instance(&self, inst: &Instance) -> Result<(), SnapshotError> {
        if &self.instance == inst {
            Ok(())
        } else {
            Err(SnapshotError::InstanceMismatch)
        }
    }
}

pub fn write_snapshot(snapshot: &PoolSnapshot) -> String {
    let incumbent = match snapshot.incumbent {
        Some(v) => v.to_string(),
        None => "inf".to_string(),
    };
    let mut out = format!(
        "{SNAPSHOT_VERSION} SNAPSHOT {} {} {incumbent} {}\n",
        snapshot.instance.jobs(),
        snapshot.instance.machines(),
        snapshot.nodes.len(),
    );
    out.push_str(&write_instance(&snapshot.instance));
    for node in &snapshot.nodes {
        let stored = match snapshot.incumbent {
            Some(ub) => ub - node.lb,
            None => node.lb,
        };
        out.push_str(&format!("{} {stored}", node.prefix.len()));
        for &job in &node.prefix {
            out.push_str(&format!(" {job}"));
        }
        out.push('\n');
    }
    out
}

pub fn parse_snapshot(text: &str) -> Result<PoolSnapshot, SnapshotError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != SNAPSHOT_VERSION || fields[1] != "SNAPSHOT" {
        return Err(parse_err(
            header_line,
            format!("header must be \"{SNAPSHOT_VERSION} SNAPSHOT n m incumbent count\""),
        ));
    }
    let jobs: usize = parse_num(header_line, fields[2], "job count")?;
    let machines: usize = parse_num(header_line, fields[3], "machine count")?;
    let incumbent = if fields[4] == "inf" {
        None
    } else {
        Some(parse_num::<Time>(header_line, fields[4], "incumbent")?)
    };
    let count: usize = parse_num(header_line, fields[5], "node count")?;

    let (inst_line, inst_header) = lines
        .next()
        .ok_or_else(|| parse_err(header_line, "missing instance block"))?;
    let inst_fields: Vec<&str> = inst_header.split_whitespace().collect();
    if inst_fields != [jobs.to_string(), machines.to_string()] {
        return Err(parse_err(
            inst_line,
            format!("instance header must be \"{jobs} {machines}\""),
        ));
    }
    let mut instance_text = format!("{jobs} {machines}\n");
    for row in 0..jobs {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(inst_line, format!("missing job row {}", row + 1)))?;
        instance_text.push_str(text);
        instance_text.push('\n');
        // Row shape errors surface through the instance parser below; keep
        // the snapshot line number in that case.
        if text.split_whitespace().count() != machines {
            return Err(parse_err(
                line,
                format!("job row {} must have {machines} entries", row + 1),
            ));
        }
    }
    let instance = crate::instance::parse_instance(&instance_text)?;

    let mut nodes = Vec::with_capacity(count);
    for i in 0..count {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(header_line, format!("expected {count} node lines, found {i}")))?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(parse_err(line, "node line must start with depth and bound"));
        }
        let depth: usize = parse_num(line, tokens[0], "depth")?;
        let stored: Time = parse_num(line, tokens[1], "bound")?;
        if tokens.len() != 2 + depth {
            return Err(parse_err(
                line,
                format!("node of depth {depth} must list {depth} prefix jobs"),
            ));
        }
        let mut prefix = Vec::with_capacity(depth);
        let mut seen = vec![false; jobs];
        for token in &tokens[2..] {
            let job: JobId = parse_num(line, token, "job id")?;
            if job >= jobs || seen[job] {
                return Err(parse_err(line, format!("invalid or repeated job id {job}")));
            }
            seen[job] = true;
            prefix.push(job);
        }
        let lb = match incumbent {
            Some(ub) => ub
                .checked_sub(stored)
                .ok_or_else(|| parse_err(line, "bound field exceeds the incumbent"))?,
            None => stored,
        };
        nodes.push(SnapshotNode { prefix, lb });
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "unexpected content after the last node"));
    }
    Ok(PoolSnapshot {
        instance,
        incumbent,
        nodes,
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T, SnapshotError> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("{what} is not a valid integer: {token:?}")))
}
