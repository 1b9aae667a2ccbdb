use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::DiffusionMatrix;
use crate::error::{Error, Result};
use crate::graphstream::{GraphStream, NodeId, Snapshot};

/// Largest hop distance kept as its own bucket.
pub const MAX_DISTANCE: usize = 16;
/// Bucket for nodes farther than `MAX_DISTANCE` or not reachable at all.
pub const UNREACHABLE: usize = MAX_DISTANCE + 1;

/// An edge to be scored: endpoints `u`, `v` observed at snapshot `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRow {
    pub node: NodeId,
    /// Snapshot the row was sampled from.
    pub snapshot: usize,
    /// Position in the descending connectivity order of this timestamp's
    /// `k + 2` selected nodes.
    pub rank: usize,
    /// Distance bucket: min hops to either target, capped at [`UNREACHABLE`].
    pub distance: usize,
}

/// The `tau * (k + 2)` nodes around a target edge, oldest timestamp first.
/// Within a timestamp the two targets come first, then the contextual nodes
/// by descending connectivity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstructureSample {
    pub target: TargetEdge,
    pub k: usize,
    pub tau: usize,
    pub rows: Vec<SampleRow>,
}

impl SubstructureSample {
    /// Relative time `t - i` of a row.
    pub fn relative_time(&self, row: &SampleRow) -> usize {
        self.target.t - row.snapshot
    }
}

/// Connectivity values are compared on a 1e-12 grid so that entries equal
/// in exact arithmetic but differing by solver round-off tie, and the tie is
/// then broken by node id.
fn tie_key(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Descending by value, ascending by id on ties.
fn by_connectivity(a: &(NodeId, f64), b: &(NodeId, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

pub fn sample_substructure(
    gs: &GraphStream,
    diffusions: &[DiffusionMatrix],
    target: TargetEdge,
    k: usize,
    tau: usize,
) -> Result<SubstructureSample> {
    if k == 0 || tau == 0 {
        return Err(Error::Config(format!(
            "k and tau must be positive, got k={k}, tau={tau}"
        )));
    }
    if diffusions.len() != gs.len() {
        return Err(Error::Shape(format!(
            "{} diffusion matrices for {} snapshots",
            diffusions.len(),
            gs.len()
        )));
    }
    let n = gs.node_count();
    if n < k + 2 {
        return Err(Error::Config(format!(
            "node universe of {n} is smaller than k + 2 = {}",
            k + 2
        )));
    }
    let TargetEdge { u: v1, v: v2, t } = target;
    if v1 as usize >= n || v2 as usize >= n {
        return Err(Error::OutOfRange(format!(
            "target ({v1}, {v2}) outside universe of {n}"
        )));
    }
    if v1 == v2 {
        return Err(Error::Data(format!(
            "target endpoints must differ, got {v1} twice"
        )));
    }
    if t >= gs.len() || t + 1 < tau {
        return Err(Error::OutOfRange(format!(
            "snapshot {t} has no full window of {tau} within {} snapshots",
            gs.len()
        )));
    }

    let mut rows = Vec::with_capacity(tau * (k + 2));
    for (i, s) in diffusions.iter().enumerate().take(t + 1).skip(t + 1 - tau) {
        let snap = &gs.snapshots()[i];
        let selected = select_nodes(s, v1, v2, k);
        let distances = target_distances(snap, v1, v2, &selected[2..]);

        let mut order: Vec<usize> = (0..selected.len()).collect();
        order.sort_by(|&a, &b| by_connectivity(&selected[a], &selected[b]));
        let mut rank = vec![0; selected.len()];
        for (pos, &idx) in order.iter().enumerate() {
            rank[idx] = pos;
        }

        for (idx, &(node, _)) in selected.iter().enumerate() {
            rows.push(SampleRow {
                node,
                snapshot: i,
                rank: rank[idx],
                distance: if idx < 2 { 0 } else { distances[idx - 2] },
            });
        }
    }
    Ok(SubstructureSample {
        target,
        k,
        tau,
        rows,
    })
}

/// `[v1, v2, contexts...]` with their connectivity values. Contexts are the
/// top-k non-target nodes; when fewer than k have positive connectivity the
/// rest are filled with the lowest-id remaining nodes at connectivity 0.
fn select_nodes(s: &DiffusionMatrix, v1: NodeId, v2: NodeId, k: usize) -> Vec<(NodeId, f64)> {
    let values = s.active_values();
    let rows: Vec<usize> = [v1, v2].iter().filter_map(|&v| s.local_index(v)).collect();

    let mut candidates: Vec<(NodeId, f64)> = s
        .active_nodes()
        .iter()
        .enumerate()
        .filter(|&(_, &w)| w != v1 && w != v2)
        .map(|(j, &w)| (w, rows.iter().map(|&r| values[(r, j)]).sum::<f64>()))
        .filter(|&(_, x)| x > 0.0)
        .map(|(w, x)| (w, tie_key(x)))
        .collect();
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, by_connectivity);
        candidates.truncate(k);
    }
    candidates.sort_by(by_connectivity);

    if candidates.len() < k {
        let mut taken: Vec<NodeId> = candidates.iter().map(|c| c.0).collect();
        taken.push(v1);
        taken.push(v2);
        let mut next = 0;
        while candidates.len() < k {
            if !taken.contains(&next) {
                candidates.push((next, 0.0));
            }
            next += 1;
        }
    }

    let target_value = |v: NodeId| tie_key(s.get(v1, v) + s.get(v2, v));
    let mut out = Vec::with_capacity(k + 2);
    out.push((v1, target_value(v1)));
    out.push((v2, target_value(v2)));
    out.extend(candidates);
    out
}

/// Multi-source BFS from both targets; the distance to the nearer one for
/// each context node, bucketed.
fn target_distances(
    snap: &Snapshot,
    v1: NodeId,
    v2: NodeId,
    contexts: &[(NodeId, f64)],
) -> Vec<usize> {
    let mut pending: HashMap<NodeId, usize> = HashMap::with_capacity(contexts.len());
    for (idx, &(node, _)) in contexts.iter().enumerate() {
        pending.insert(node, idx);
    }
    let mut out = vec![UNREACHABLE; contexts.len()];
    let mut seen: HashSet<NodeId> = HashSet::from([v1, v2]);
    let mut frontier = vec![v1, v2];
    let mut depth = 0;
    while !frontier.is_empty() && !pending.is_empty() && depth < MAX_DISTANCE {
        depth += 1;
        let mut next = Vec::new();
        for &x in &frontier {
            for &y in snap.neighbors(x) {
                if seen.insert(y) {
                    if let Some(idx) = pending.remove(&y) {
                        out[idx] = depth;
                    }
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    out
}
