use std::collections::HashSet;
use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graphstream::{Edge, GraphStream, NodeId, Snapshot};

/// Union of the edge sets of a range of snapshots.
#[derive(Debug, Clone, Default)]
pub struct EdgeUnion {
    edges: HashSet<Edge>,
}

impl EdgeUnion {
    pub fn of_range(gs: &GraphStream, range: Range<usize>) -> Self {
        let edges = gs.snapshots()[range]
            .iter()
            .flat_map(|s| s.edges().iter().copied())
            .collect();
        EdgeUnion { edges }
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Draws `snapshot.edge_count()` node pairs uniformly from the node universe,
/// rejecting self pairs and any pair in `union`. Gives up after `100 * m`
/// draws.
pub fn sample_negatives(
    snapshot: &Snapshot,
    union: &EdgeUnion,
    rng: &mut impl Rng,
) -> Result<Vec<Edge>> {
    let needed = snapshot.edge_count();
    let n = snapshot.node_count();
    let cap = 100 * needed;
    let mut out = Vec::with_capacity(needed);
    let mut attempts = 0;
    while out.len() < needed {
        if attempts >= cap {
            return Err(Error::SamplingExhausted {
                attempts,
                context: format!(
                    "drawing {needed} negatives for snapshot {} outside {} training edges",
                    snapshot.index(),
                    union.len()
                ),
            });
        }
        attempts += 1;
        let a = rng.gen_range(0..n as NodeId);
        let b = rng.gen_range(0..n as NodeId);
        match Edge::new(a, b) {
            Some(e) if !union.contains(&e) => out.push(e),
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn negatives_avoid_union_and_match_count() {
        let pairs: Vec<(NodeId, NodeId)> = (0..100).map(|i| (i, (i + 1) % 150)).collect();
        let gs = GraphStream::from_snapshot_pairs(150, vec![pairs.clone(), pairs]).unwrap();
        let union = EdgeUnion::of_range(&gs, 0..2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let negs = sample_negatives(gs.snapshot(0).unwrap(), &union, &mut rng).unwrap();
        assert_eq!(negs.len(), 100);
        assert!(negs.iter().all(|e| !union.contains(e)));
        let again = sample_negatives(gs.snapshot(0).unwrap(), &union, &mut rng).unwrap();
        assert_ne!(negs, again);
    }

    #[test]
    fn complete_training_graph_exhausts() {
        let n = 6;
        let all: Vec<(NodeId, NodeId)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        let gs = GraphStream::from_snapshot_pairs(n as usize, vec![all]).unwrap();
        let union = EdgeUnion::of_range(&gs, 0..1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_negatives(gs.snapshot(0).unwrap(), &union, &mut rng).unwrap_err();
        assert!(matches!(
            err,
            Error::SamplingExhausted { attempts: 1500, .. }
        ));
    }
}
