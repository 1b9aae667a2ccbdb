use std::collections::HashSet;

use dgad_core::diffusion::{compute_all, sample_substructure, DiffusionKind, TargetEdge};
use dgad_core::encoding::{fuse_and_stack, Ablation};
use dgad_core::graphstream::{inject_anomalies_where, split_train_test};
use dgad_core::neuralnet::{backward, forward, ModelConfig, ModelParameters};
use dgad_core::synth::{generate_sbm, SbmConfig};
use dgad_core::tensor::Matrix;
use dgad_core::trainer::{score_edges, train, TrainConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sparse_sbm(seed: u64) -> dgad_core::synth::SyntheticGraph {
    generate_sbm(&SbmConfig {
        activity: 0.3,
        seed,
        ..SbmConfig::default()
    })
    .unwrap()
}

#[test]
fn detector_learns_on_partially_active_sbm() {
    let g = sparse_sbm(3);
    let diffs = compute_all(&g.stream, DiffusionKind::default()).unwrap();
    let (train_range, test) = split_train_test(&g.stream, 0.5).unwrap();
    let edges =
        inject_anomalies_where(&g.stream, test, 0.1, 3, |t, a, b| !g.same_block(t, a, b)).unwrap();
    let cfg = TrainConfig {
        epochs: 40,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train(&g.stream, &diffs, train_range, &cfg).unwrap();

    let means = out.epoch_means();
    assert_eq!(means.len(), 40);
    let head: f64 = means[..5].iter().sum::<f64>() / 5.0;
    let tail: f64 = means[35..].iter().sum::<f64>() / 5.0;
    assert!(tail < head, "loss did not decrease: {head} -> {tail}");

    let trained = score_edges(&out.params, &g.stream, &diffs, &edges, &cfg.model()).unwrap();
    assert!(trained.mean_auc >= 0.7, "trained AUC {}", trained.mean_auc);
}

#[test]
fn untrained_model_is_near_chance() {
    let g = generate_sbm(&SbmConfig::default()).unwrap();
    let diffs = compute_all(&g.stream, DiffusionKind::default()).unwrap();
    let (_, test) = split_train_test(&g.stream, 0.5).unwrap();
    let edges =
        inject_anomalies_where(&g.stream, test, 0.1, 1, |t, a, b| !g.same_block(t, a, b)).unwrap();
    let model = TrainConfig::default().model();
    let params = ModelParameters::init(&model, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let report = score_edges(&params, &g.stream, &diffs, &edges, &model).unwrap();
    assert!(
        (report.mean_auc - 0.5).abs() <= 0.15,
        "untrained AUC {}",
        report.mean_auc
    );
}

#[test]
fn heat_kernel_runs_end_to_end() {
    let g = sparse_sbm(5);
    let kind = DiffusionKind::Heat {
        beta: DiffusionKind::DEFAULT_BETA,
    };
    let diffs = compute_all(&g.stream, kind).unwrap();
    let (train_range, test) = split_train_test(&g.stream, 0.5).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        diffusion: kind,
        ..TrainConfig::default()
    };
    let out = train(&g.stream, &diffs, train_range, &cfg).unwrap();
    let edges = inject_anomalies_where(&g.stream, test, 0.1, 5, |_, _, _| true).unwrap();
    let report = score_edges(&out.params, &g.stream, &diffs, &edges, &cfg.model()).unwrap();
    assert!(report
        .records
        .iter()
        .all(|r| r.score.is_finite() && r.score > 0.0 && r.score < 1.0));
    assert!((0.0..=1.0).contains(&report.mean_auc));
}

#[test]
fn training_is_reproducible() {
    let g = sparse_sbm(8);
    let diffs = compute_all(&g.stream, DiffusionKind::default()).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        seed: 8,
        ..TrainConfig::default()
    };
    let a = train(&g.stream, &diffs, 0..5, &cfg).unwrap();
    let b = train(&g.stream, &diffs, 0..5, &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.losses, b.losses);
}

fn sample_encoding(
    seed: u64,
) -> (
    ModelConfig,
    ModelParameters,
    dgad_core::encoding::EncodingMatrix,
) {
    let g = sparse_sbm(seed);
    let diffs = compute_all(&g.stream, DiffusionKind::default()).unwrap();
    let model = ModelConfig::default();
    let params = ModelParameters::init(&model, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let e = g.stream.snapshots()[6].edges()[0];
    let sample = sample_substructure(
        &g.stream,
        &diffs,
        TargetEdge {
            u: e.u,
            v: e.v,
            t: 6,
        },
        model.k,
        model.tau,
    )
    .unwrap();
    let enc = fuse_and_stack(&sample, &params.tables, Ablation::NONE).unwrap();
    (model, params, enc)
}

#[test]
fn score_is_invariant_to_row_order() {
    let (model, params, enc) = sample_encoding(11);
    let base = forward(&enc.x, &params, &model).unwrap().score;
    let mut order: Vec<usize> = (0..enc.x.rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
    let permuted = Matrix::from_fn(enc.x.rows(), enc.x.cols(), |i, j| enc.x[(order[i], j)]);
    let score = forward(&permuted, &params, &model).unwrap().score;
    assert!((score - base).abs() < 1e-12, "{score} vs {base}");
}

#[test]
fn attention_rows_are_distributions() {
    let (model, params, enc) = sample_encoding(12);
    let trace = forward(&enc.x, &params, &model).unwrap();
    for layer in &trace.layers {
        assert_eq!(layer.attention.len(), model.heads);
        for p in &layer.attention {
            for i in 0..p.rows() {
                let sum: f64 = p.row(i).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                assert!(p.row(i).iter().all(|&x| x >= 0.0));
            }
        }
    }
}

#[test]
fn unused_table_rows_get_no_gradient() {
    let (model, params, enc) = sample_encoding(13);
    let trace = forward(&enc.x, &params, &model).unwrap();
    let grads = backward(&trace, &enc, &params, &model, 1.0);
    let used: HashSet<usize> = enc.provenance.iter().map(|k| k.distance).collect();
    let table = &grads.tables.distance;
    for bucket in 0..table.rows() {
        let touched = table.row(bucket).iter().any(|&g| g != 0.0);
        if used.contains(&bucket) {
            assert!(touched, "bucket {bucket} is used but has zero gradient");
        } else {
            assert!(!touched, "bucket {bucket} is unused but has gradient");
        }
    }
}
