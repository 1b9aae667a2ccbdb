//! Dynamic stochastic block model generator for planted-anomaly benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphstream::{GraphStream, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub nodes: usize,
    pub blocks: usize,
    /// Probability of each ordered intra-block pair; the graph is the
    /// symmetrized union.
    pub p_in: f64,
    pub p_out: f64,
    pub snapshots: usize,
    /// Per-snapshot probability that a node moves to a uniformly chosen other
    /// block.
    pub drift: f64,
    /// Per-snapshot probability that a node takes part in any edge.
    #[serde(default = "full_activity")]
    pub activity: f64,
    pub seed: u64,
}

fn full_activity() -> f64 {
    1.0
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            nodes: 100,
            blocks: 2,
            p_in: 0.1,
            p_out: 0.005,
            snapshots: 10,
            drift: 0.0,
            activity: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticGraph {
    pub stream: GraphStream,
    /// Block of every node per snapshot.
    pub blocks: Vec<Vec<usize>>,
}

impl SyntheticGraph {
    pub fn same_block(&self, t: usize, a: NodeId, b: NodeId) -> bool {
        self.blocks[t][a as usize] == self.blocks[t][b as usize]
    }
}

pub fn generate_sbm(cfg: &SbmConfig) -> Result<SyntheticGraph> {
    if cfg.nodes < 2 || cfg.blocks == 0 || cfg.blocks > cfg.nodes || cfg.snapshots == 0 {
        return Err(Error::Config(format!(
            "need nodes >= 2, 1 <= blocks <= nodes and snapshots >= 1, got {} nodes, {} blocks, {} snapshots",
            cfg.nodes, cfg.blocks, cfg.snapshots
        )));
    }
    for (name, p) in [
        ("p_in", cfg.p_in),
        ("p_out", cfg.p_out),
        ("drift", cfg.drift),
        ("activity", cfg.activity),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut membership: Vec<usize> = (0..cfg.nodes).map(|i| i * cfg.blocks / cfg.nodes).collect();
    let mut blocks = Vec::with_capacity(cfg.snapshots);
    let mut snapshots = Vec::with_capacity(cfg.snapshots);
    for t in 0..cfg.snapshots {
        if t > 0 && cfg.blocks > 1 && cfg.drift > 0.0 {
            for b in membership.iter_mut() {
                if rng.gen_bool(cfg.drift) {
                    let shift = rng.gen_range(1..cfg.blocks);
                    *b = (*b + shift) % cfg.blocks;
                }
            }
        }
        let active: Vec<bool> = (0..cfg.nodes)
            .map(|_| cfg.activity >= 1.0 || rng.gen_bool(cfg.activity))
            .collect();
        let mut pairs = Vec::new();
        for a in 0..cfg.nodes {
            for b in 0..cfg.nodes {
                if a == b || !active[a] || !active[b] {
                    continue;
                }
                let p = if membership[a] == membership[b] {
                    cfg.p_in
                } else {
                    cfg.p_out
                };
                if rng.gen_bool(p) {
                    pairs.push((a as NodeId, b as NodeId));
                }
            }
        }
        snapshots.push(pairs);
        blocks.push(membership.clone());
    }
    let stream = GraphStream::from_snapshot_pairs(cfg.nodes, snapshots)?;
    Ok(SyntheticGraph { stream, blocks })
}
