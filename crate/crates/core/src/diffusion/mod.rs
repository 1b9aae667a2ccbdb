//! Graph diffusion per snapshot and diffusion-guided substructure sampling.
//!
//! Each snapshot gets a dense diffusion matrix computed exactly over its
//! active nodes. Nodes without edges in a snapshot behave as if they carried
//! a self-loop: all of their diffusion mass stays on themselves, so
//! `S[v, v] = 1` and every other entry of their row and column is zero.

mod cache;
mod expm;
mod substructure;

pub use cache::DiffusionCache;
pub use expm::expm;
pub use substructure::{
    sample_substructure, SampleRow, SubstructureSample, TargetEdge, MAX_DISTANCE, UNREACHABLE,
};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphstream::{GraphStream, NodeId, Snapshot};

const NOT_ACTIVE: u32 = u32::MAX;

/// Upper bound on the heat-kernel diffusion time.
pub const MAX_HEAT_TIME: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DiffusionKind {
    /// Personalized PageRank with teleport probability `alpha`.
    Ppr { alpha: f64 },
    /// Heat kernel with diffusion time `beta`.
    Heat { beta: f64 },
}

impl DiffusionKind {
    pub const DEFAULT_ALPHA: f64 = 0.15;
    pub const DEFAULT_BETA: f64 = 5.0;

    pub fn validate(&self) -> Result<()> {
        match *self {
            DiffusionKind::Ppr { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(Error::Config(
                format!("PPR alpha must be in (0, 1), got {alpha}"),
            )),
            DiffusionKind::Heat { beta } if !(beta > 0.0 && beta <= MAX_HEAT_TIME) => {
                Err(Error::Config(format!(
                    "heat beta must be in (0, {MAX_HEAT_TIME}], got {beta}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn compute(&self, snapshot: &Snapshot) -> Result<DiffusionMatrix> {
        match *self {
            DiffusionKind::Ppr { alpha } => compute_ppr(snapshot, alpha),
            DiffusionKind::Heat { beta } => compute_heat(snapshot, beta),
        }
    }
}

impl Default for DiffusionKind {
    fn default() -> Self {
        DiffusionKind::Ppr {
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

/// Dense diffusion matrix of one snapshot, stored over its active nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    snapshot: usize,
    kind: DiffusionKind,
    local: Vec<u32>,
    active: Vec<NodeId>,
    values: DMatrix<f64>,
}

impl DiffusionMatrix {
    fn new(
        snapshot: usize,
        kind: DiffusionKind,
        node_count: usize,
        active: Vec<NodeId>,
        values: DMatrix<f64>,
    ) -> Self {
        let mut local = vec![NOT_ACTIVE; node_count];
        for (i, &v) in active.iter().enumerate() {
            local[v as usize] = i as u32;
        }
        DiffusionMatrix {
            snapshot,
            kind,
            local,
            active,
            values,
        }
    }

    pub fn snapshot(&self) -> usize {
        self.snapshot
    }

    pub fn kind(&self) -> DiffusionKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.local.len()
    }

    pub fn active_nodes(&self) -> &[NodeId] {
        &self.active
    }

    fn local_index(&self, v: NodeId) -> Option<usize> {
        match self.local[v as usize] {
            NOT_ACTIVE => None,
            i => Some(i as usize),
        }
    }

    /// Entry `S[i, j]` in universe coordinates.
    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        match (self.local_index(i), self.local_index(j)) {
            (Some(a), Some(b)) => self.values[(a, b)],
            _ if i == j => 1.0,
            _ => 0.0,
        }
    }

    /// Row `v` as a dense vector over the whole universe.
    pub fn row(&self, v: NodeId) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        match self.local_index(v) {
            Some(a) => {
                for (b, &w) in self.active.iter().enumerate() {
                    out[w as usize] = self.values[(a, b)];
                }
            }
            None => out[v as usize] = 1.0,
        }
        out
    }

    /// Full `n x n` matrix; meant for tests and small graphs.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.node_count();
        DMatrix::from_fn(n, n, |i, j| self.get(i as NodeId, j as NodeId))
    }

    pub(crate) fn active_values(&self) -> &DMatrix<f64> {
        &self.values
    }

    fn check_node(&self, v: NodeId) -> Result<()> {
        if (v as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "node {v} not in universe of size {}",
                self.node_count()
            )))
        }
    }
}

/// Adjacency of the active subgraph plus the active-node list.
fn active_adjacency(snapshot: &Snapshot) -> (Vec<NodeId>, Vec<usize>, DMatrix<f64>) {
    let active = snapshot.active_nodes();
    let mut local = vec![NOT_ACTIVE; snapshot.node_count()];
    for (i, &v) in active.iter().enumerate() {
        local[v as usize] = i as u32;
    }
    let na = active.len();
    let mut adj = DMatrix::zeros(na, na);
    for e in snapshot.edges() {
        let (a, b) = (local[e.u as usize] as usize, local[e.v as usize] as usize);
        adj[(a, b)] = 1.0;
        adj[(b, a)] = 1.0;
    }
    let degree = active.iter().map(|&v| snapshot.degree(v)).collect();
    (active, degree, adj)
}

/// `S = alpha (I - (1 - alpha) D^-1/2 A D^-1/2)^-1`, solved densely.
pub fn compute_ppr(snapshot: &Snapshot, alpha: f64) -> Result<DiffusionMatrix> {
    let kind = DiffusionKind::Ppr { alpha };
    kind.validate()?;
    let (active, degree, adj) = active_adjacency(snapshot);
    let na = active.len();
    let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();

    let system = DMatrix::from_fn(na, na, |i, j| {
        let m = adj[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        let id = if i == j { 1.0 } else { 0.0 };
        id - (1.0 - alpha) * m
    });
    // The system is symmetric positive definite (eigenvalues >= alpha).
    let inverse = match system.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => system.try_inverse().ok_or_else(|| {
            Error::Numerical(format!(
                "PPR system of snapshot {} is singular",
                snapshot.index()
            ))
        })?,
    };
    let mut values = inverse * alpha;
    // Cholesky inversion is symmetric only up to rounding.
    for i in 0..na {
        for j in i + 1..na {
            let avg = 0.5 * (values[(i, j)] + values[(j, i)]);
            values[(i, j)] = avg;
            values[(j, i)] = avg;
        }
    }
    finite_or_err(&values, snapshot.index())?;
    Ok(DiffusionMatrix::new(
        snapshot.index(),
        kind,
        snapshot.node_count(),
        active,
        values,
    ))
}

/// `S = exp(beta (A D^-1 - I))` by scaling and squaring.
pub fn compute_heat(snapshot: &Snapshot, beta: f64) -> Result<DiffusionMatrix> {
    let kind = DiffusionKind::Heat { beta };
    kind.validate()?;
    let (active, degree, adj) = active_adjacency(snapshot);
    let na = active.len();
    let generator = DMatrix::from_fn(na, na, |i, j| {
        let transition = adj[(i, j)] / degree[j] as f64;
        let id = if i == j { 1.0 } else { 0.0 };
        beta * (transition - id)
    });
    let values = expm(&generator);
    finite_or_err(&values, snapshot.index())?;
    Ok(DiffusionMatrix::new(
        snapshot.index(),
        kind,
        snapshot.node_count(),
        active,
        values,
    ))
}

fn finite_or_err(m: &DMatrix<f64>, snapshot: usize) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "non-finite diffusion entry in snapshot {snapshot}"
        )))
    }
}

/// Diffusion matrices of every snapshot, computed in parallel.
pub fn compute_all(gs: &GraphStream, kind: DiffusionKind) -> Result<Vec<DiffusionMatrix>> {
    kind.validate()?;
    gs.snapshots().par_iter().map(|s| kind.compute(s)).collect()
}

/// Connectivity of a target pair to every node: the sum of the two rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityVector {
    pub target: (NodeId, NodeId),
    pub values: Vec<f64>,
}

pub fn edge_connectivity(
    s: &DiffusionMatrix,
    v1: NodeId,
    v2: NodeId,
) -> Result<ConnectivityVector> {
    s.check_node(v1)?;
    s.check_node(v2)?;
    if v1 == v2 {
        return Err(Error::Data(format!(
            "target nodes must differ, got {v1} twice"
        )));
    }
    let mut values = s.row(v1);
    for (acc, x) in values.iter_mut().zip(s.row(v2)) {
        *acc += x;
    }
    Ok(ConnectivityVector {
        target: (v1, v2),
        values,
    })
}
