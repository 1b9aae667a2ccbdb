//! Negative sampling, the training loop, test-edge scoring and evaluation.

mod io;
mod metrics;
mod negative;

use std::collections::BTreeMap;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{write_loss_csv, write_roc_csv, write_scores_csv, Checkpoint, CHECKPOINT_VERSION};
pub use metrics::{compute_auc, compute_loss, edge_loss, roc_points, SCORE_CLAMP};
pub use negative::{sample_negatives, EdgeUnion};

use crate::diffusion::{
    sample_substructure, DiffusionKind, DiffusionMatrix, SubstructureSample, TargetEdge,
};
use crate::encoding::{fuse_and_stack, Ablation};
use crate::error::{Error, Result};
use crate::graphstream::{
    Edge, GraphStream, IngestOptions, Label, LabeledTestEdge, NodeId, SnapshotMode,
};
use crate::neuralnet::{
    backward_from_logit, forward, Adam, AdamConfig, ModelConfig, ModelParameters, StepOutcome,
};

/// Edges per parallel work unit. Partial gradients are summed in chunk order
/// so results do not depend on the thread count.
const CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub k: usize,
    pub tau: usize,
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    #[serde(default)]
    pub residual: bool,
    pub lr: f64,
    pub seed: u64,
    pub diffusion: DiffusionKind,
    pub snapshot_size: usize,
    /// Cut one snapshot per timestamp instead of fixed-size chunks.
    #[serde(default)]
    pub per_timestamp: bool,
    pub train_ratio: f64,
    pub anomaly_pct: f64,
    #[serde(default)]
    pub ablation: Ablation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            k: 5,
            tau: 2,
            dim: 32,
            layers: 2,
            heads: 2,
            residual: false,
            lr: 1e-3,
            seed: 0,
            diffusion: DiffusionKind::default(),
            snapshot_size: 1000,
            per_timestamp: false,
            train_ratio: 0.5,
            anomaly_pct: 0.1,
            ablation: Ablation::NONE,
        }
    }
}

impl TrainConfig {
    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            k: self.k,
            tau: self.tau,
            dim: self.dim,
            layers: self.layers,
            heads: self.heads,
            residual: self.residual,
            ablation: self.ablation,
        }
    }

    pub fn ingest_options(&self) -> IngestOptions {
        if self.per_timestamp {
            IngestOptions {
                mode: SnapshotMode::PerTimestamp,
            }
        } else {
            IngestOptions::fixed_size(self.snapshot_size)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        self.diffusion.validate()?;
        if self.epochs == 0 || self.snapshot_size == 0 {
            return Err(Error::Config(
                "epochs and snapshot size must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::Config(format!(
                "train ratio must be in (0, 1), got {}",
                self.train_ratio
            )));
        }
        if !(0.0..1.0).contains(&self.anomaly_pct) {
            return Err(Error::Config(format!(
                "anomaly proportion must be in [0, 1), got {}",
                self.anomaly_pct
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub snapshot: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: ModelParameters,
    pub adam: Adam,
    pub losses: Vec<LossRecord>,
    /// Optimizer steps dropped because a gradient entry was not finite.
    pub skipped_steps: usize,
}

impl TrainOutput {
    /// Mean loss per epoch over its training snapshots.
    pub fn epoch_means(&self) -> Vec<f64> {
        let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for r in &self.losses {
            let e = sums.entry(r.epoch).or_default();
            e.0 += r.loss;
            e.1 += 1;
        }
        sums.values().map(|&(s, c)| s / c as f64).collect()
    }
}

fn target(e: Edge, t: usize) -> TargetEdge {
    TargetEdge { u: e.u, v: e.v, t }
}

/// Summed loss and gradients over `items`, each a sample and whether it
/// carries the anomalous pseudo label.
fn batch_gradient(
    params: &ModelParameters,
    model: &ModelConfig,
    items: &[(&SubstructureSample, bool)],
) -> Result<(ModelParameters, f64)> {
    let partials: Vec<Result<(ModelParameters, f64)>> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grads = ModelParameters::zeros(model);
            let mut loss = 0.0;
            for &(sample, anomalous) in chunk {
                let enc = fuse_and_stack(sample, &params.tables, model.ablation)?;
                let trace = forward(&enc.x, params, model)?;
                loss += edge_loss(trace.score, anomalous);
                let y = if anomalous { 1.0 } else { 0.0 };
                backward_from_logit(&trace, &enc, params, model, trace.score - y, &mut grads);
            }
            Ok((grads, loss))
        })
        .collect();

    let mut total = ModelParameters::zeros(model);
    let mut loss = 0.0;
    for part in partials {
        let (g, l) = part?;
        total.add_assign(&g);
        loss += l;
    }
    Ok((total, loss))
}

fn sample_all(
    gs: &GraphStream,
    diffusions: &[DiffusionMatrix],
    targets: &[TargetEdge],
    k: usize,
    tau: usize,
) -> Result<Vec<SubstructureSample>> {
    targets
        .par_iter()
        .map(|&t| sample_substructure(gs, diffusions, t, k, tau))
        .collect()
}

/// Trains on the snapshots in `train`, one optimizer step per (epoch,
/// snapshot) over the full loss of that snapshot. `diffusions` must cover the
/// whole stream.
pub fn train(
    gs: &GraphStream,
    diffusions: &[DiffusionMatrix],
    train: Range<usize>,
    cfg: &TrainConfig,
) -> Result<TrainOutput> {
    train_with_progress(gs, diffusions, train, cfg, |_| {})
}

pub fn train_with_progress(
    gs: &GraphStream,
    diffusions: &[DiffusionMatrix],
    train: Range<usize>,
    cfg: &TrainConfig,
    mut on_step: impl FnMut(&LossRecord),
) -> Result<TrainOutput> {
    cfg.validate()?;
    let model = cfg.model();
    if train.end > gs.len() || train.len() < cfg.tau {
        return Err(Error::Data(format!(
            "training range {train:?} of {} snapshots has fewer than tau = {} snapshots",
            gs.len(),
            cfg.tau
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParameters::init(&model, &mut rng)?;
    let mut adam = Adam::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &params,
    );
    let union = EdgeUnion::of_range(gs, train.clone());
    let steps: Vec<usize> = (train.start.max(cfg.tau - 1)..train.end).collect();

    // Positive substructures do not change between epochs.
    let mut positives = Vec::with_capacity(steps.len());
    for &t in &steps {
        let targets: Vec<TargetEdge> = gs.snapshots()[t]
            .edges()
            .iter()
            .map(|&e| target(e, t))
            .collect();
        positives.push(sample_all(gs, diffusions, &targets, cfg.k, cfg.tau)?);
    }

    let mut losses = Vec::with_capacity(cfg.epochs * steps.len());
    let mut skipped_steps = 0;
    for epoch in 0..cfg.epochs {
        for (&t, pos) in steps.iter().zip(&positives) {
            let negatives = sample_negatives(&gs.snapshots()[t], &union, &mut rng)?;
            let neg_targets: Vec<TargetEdge> = negatives.iter().map(|&e| target(e, t)).collect();
            let neg = sample_all(gs, diffusions, &neg_targets, cfg.k, cfg.tau)?;

            let items: Vec<(&SubstructureSample, bool)> = pos
                .iter()
                .map(|s| (s, false))
                .chain(neg.iter().map(|s| (s, true)))
                .collect();
            let (grads, loss) = batch_gradient(&params, &model, &items)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "loss {loss} at epoch {epoch}, snapshot {t} over {} edges",
                    items.len()
                )));
            }
            if adam.update(&mut params, &grads)? == StepOutcome::SkippedNonFinite {
                skipped_steps += 1;
            }
            let record = LossRecord {
                epoch,
                snapshot: t,
                loss,
            };
            on_step(&record);
            losses.push(record);
        }
    }
    if !params.is_finite() {
        return Err(Error::Numerical(
            "parameters became non-finite during training".into(),
        ));
    }
    Ok(TrainOutput {
        params,
        adam,
        losses,
        skipped_steps,
    })
}

/// Anomaly score of a single edge observed at snapshot `t`.
pub fn score_edge(
    params: &ModelParameters,
    gs: &GraphStream,
    diffusions: &[DiffusionMatrix],
    model: &ModelConfig,
    u: NodeId,
    v: NodeId,
    t: usize,
) -> Result<f64> {
    let sample = sample_substructure(gs, diffusions, TargetEdge { u, v, t }, model.k, model.tau)?;
    let enc = fuse_and_stack(&sample, &params.tables, model.ablation)?;
    Ok(forward(&enc.x, params, model)?.score)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredEdge {
    pub snapshot: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub label: Label,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotAuc {
    pub snapshot: usize,
    pub normal: usize,
    pub anomalous: usize,
    /// `None` when the snapshot holds a single class.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_snapshot: Vec<SnapshotAuc>,
    /// Unweighted mean over snapshots with a defined AUC.
    pub mean_auc: f64,
    pub records: Vec<ScoredEdge>,
}

impl EvaluationReport {
    fn from_records(records: Vec<ScoredEdge>) -> Result<Self> {
        let mut groups: BTreeMap<usize, (Vec<f64>, Vec<u8>)> = BTreeMap::new();
        for r in &records {
            let g = groups.entry(r.snapshot).or_default();
            g.0.push(r.score);
            g.1.push(r.label.as_u8());
        }
        let mut per_snapshot = Vec::with_capacity(groups.len());
        for (snapshot, (scores, labels)) in groups {
            let anomalous = labels.iter().filter(|&&l| l == 1).count();
            let normal = labels.len() - anomalous;
            let auc = if anomalous > 0 && normal > 0 {
                Some(compute_auc(&scores, &labels)?)
            } else {
                None
            };
            per_snapshot.push(SnapshotAuc {
                snapshot,
                normal,
                anomalous,
                auc,
            });
        }
        let defined: Vec<f64> = per_snapshot.iter().filter_map(|s| s.auc).collect();
        if defined.is_empty() {
            return Err(Error::Data(
                "no test snapshot contains both normal and anomalous edges".into(),
            ));
        }
        let mean_auc = defined.iter().sum::<f64>() / defined.len() as f64;
        Ok(EvaluationReport {
            per_snapshot,
            mean_auc,
            records,
        })
    }
}

/// Scores every labeled edge and aggregates per-snapshot AUC. Windows may
/// reach back into training snapshots.
pub fn score_edges(
    params: &ModelParameters,
    gs: &GraphStream,
    diffusions: &[DiffusionMatrix],
    edges: &[LabeledTestEdge],
    model: &ModelConfig,
) -> Result<EvaluationReport> {
    model.validate()?;
    let records: Vec<ScoredEdge> = edges
        .par_iter()
        .map(|e| {
            let score = score_edge(
                params, gs, diffusions, model, e.edge.u, e.edge.v, e.snapshot,
            )?;
            Ok(ScoredEdge {
                snapshot: e.snapshot,
                src: e.edge.u,
                dst: e.edge.v,
                label: e.label,
                score,
            })
        })
        .collect::<Result<_>>()?;
    EvaluationReport::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::compute_all;

    fn ring_stream(n: u32, snapshots: usize) -> GraphStream {
        let snaps = (0..snapshots)
            .map(|s| (0..n).map(|i| (i, (i + 1 + s as u32 % 2) % n)).collect())
            .collect();
        GraphStream::from_snapshot_pairs(n as usize, snaps).unwrap()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 1,
            k: 2,
            tau: 1,
            dim: 4,
            layers: 1,
            heads: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn one_step_per_epoch_and_snapshot() {
        let gs = ring_stream(10, 1);
        let diffs = compute_all(&gs, DiffusionKind::default()).unwrap();
        let out = train(&gs, &diffs, 0..1, &small_cfg()).unwrap();
        assert_eq!(out.losses.len(), 1);
        assert_eq!(out.adam.step, 1);

        let gs = ring_stream(10, 3);
        let diffs = compute_all(&gs, DiffusionKind::default()).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            tau: 2,
            ..small_cfg()
        };
        let out = train(&gs, &diffs, 0..3, &cfg).unwrap();
        // Snapshots 1 and 2 have a full window.
        assert_eq!(out.losses.len(), 6);
        assert_eq!(out.losses[0].snapshot, 1);
        assert_eq!(out.epoch_means().len(), 3);
    }

    #[test]
    fn short_training_range_is_rejected() {
        let gs = ring_stream(10, 3);
        let diffs = compute_all(&gs, DiffusionKind::default()).unwrap();
        let cfg = TrainConfig {
            tau: 3,
            ..small_cfg()
        };
        assert!(matches!(
            train(&gs, &diffs, 0..2, &cfg),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn scoring_is_deterministic_and_checks_ids() {
        let gs = ring_stream(12, 2);
        let diffs = compute_all(&gs, DiffusionKind::default()).unwrap();
        let cfg = small_cfg();
        let out = train(&gs, &diffs, 0..1, &cfg).unwrap();
        let model = cfg.model();
        let a = score_edge(&out.params, &gs, &diffs, &model, 0, 5, 1).unwrap();
        let b = score_edge(&out.params, &gs, &diffs, &model, 0, 5, 1).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a > 0.0 && a < 1.0);
        assert!(score_edge(&out.params, &gs, &diffs, &model, 0, 99, 1).is_err());
    }

    #[test]
    fn single_class_snapshots_are_skipped_in_mean() {
        let rec = |snapshot, label, score| ScoredEdge {
            snapshot,
            src: 0,
            dst: 1,
            label,
            score,
        };
        let report = EvaluationReport::from_records(vec![
            rec(3, Label::Normal, 0.2),
            rec(3, Label::Anomalous, 0.9),
            rec(4, Label::Normal, 0.4),
        ])
        .unwrap();
        assert_eq!(report.mean_auc, 1.0);
        assert_eq!(report.per_snapshot[1].auc, None);
        assert!(EvaluationReport::from_records(vec![rec(0, Label::Normal, 0.1)]).is_err());
    }
}
