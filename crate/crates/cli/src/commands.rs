use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dgad_core::diffusion::{compute_all, DiffusionCache, DiffusionMatrix};
use dgad_core::graphstream::{
    ingest_edge_list, inject_anomalies_where, split_train_test, GraphStream, IngestOptions,
    SnapshotMode,
};
use dgad_core::synth::{generate_sbm, SbmConfig};
use dgad_core::trainer::{
    score_edges, train_with_progress, write_loss_csv, write_roc_csv, write_scores_csv, Checkpoint,
    SnapshotAuc, TrainConfig,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{EvaluateArgs, IngestArgs, InjectionArgs, RunArgs, SynthArgs, TrainArgs};
use crate::error::{CliError, PhaseExt};

const TOOL: &str = concat!("dgad ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Serialize)]
struct PhaseTiming {
    phase: &'static str,
    seconds: f64,
}

#[derive(Default)]
struct Timer {
    phases: Vec<PhaseTiming>,
}

impl Timer {
    fn time<T>(&mut self, phase: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push(PhaseTiming {
            phase,
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    fn total(&self) -> f64 {
        self.phases.iter().map(|p| p.seconds).sum()
    }
}

/// What a run consumed and produced, enough to repeat it.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    command: &'static str,
    input: String,
    dataset_hash: &'a str,
    config: &'a TrainConfig,
    seed: u64,
    injection_seed: Option<u64>,
    timings: &'a [PhaseTiming],
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    tool: &'static str,
    config: &'a TrainConfig,
    anomaly_pct: f64,
    injection_seed: u64,
    test_snapshots: Range<usize>,
    mean_auc: f64,
    per_snapshot: &'a [SnapshotAuc],
    runtime_seconds: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlocksFile {
    /// Block of every node id, per snapshot.
    blocks: Vec<Vec<usize>>,
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Phase {
        phase: "io",
        source: dgad_core::Error::Io {
            path: path.to_path_buf(),
            source,
        },
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(dgad_core::Error::from)
        .phase("write")?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| io_error(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn dataset_hash(path: &Path) -> Result<String, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| io_error(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn ingest_options(snapshot_size: usize, per_timestamp: bool) -> IngestOptions {
    if per_timestamp {
        IngestOptions {
            mode: SnapshotMode::PerTimestamp,
        }
    } else {
        IngestOptions::fixed_size(snapshot_size)
    }
}

fn load_stream(
    path: &Path,
    options: &IngestOptions,
    timer: &mut Timer,
) -> Result<(GraphStream, String), CliError> {
    timer.time("ingest", || {
        let gs = ingest_edge_list(path, options).phase("ingest")?;
        let hash = dataset_hash(path)?;
        Ok((gs, hash))
    })
}

fn diffusions(
    gs: &GraphStream,
    cfg: &TrainConfig,
    hash: &str,
    cache_dir: Option<&Path>,
    timer: &mut Timer,
) -> Result<Vec<DiffusionMatrix>, CliError> {
    timer.time("diffusion", || match cache_dir {
        Some(dir) => DiffusionCache::new(dir)
            .and_then(|c| c.load_or_compute(gs, &hash[..16], cfg.diffusion))
            .phase("diffusion"),
        None => compute_all(gs, cfg.diffusion).phase("diffusion"),
    })
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<(), CliError> {
    let options = ingest_options(args.snapshots.snapshot_size, args.snapshots.per_timestamp);
    let mut timer = Timer::default();
    let (gs, hash) = load_stream(&args.input, &options, &mut timer)?;
    create_dir(&args.out_dir)?;

    #[derive(Serialize)]
    struct IngestManifest<'a> {
        tool: &'static str,
        input: String,
        dataset_hash: &'a str,
        options: IngestOptions,
        #[serde(flatten)]
        stream: dgad_core::graphstream::StreamManifest,
    }
    let path = args.out_dir.join("manifest.json");
    write_json(
        &path,
        &IngestManifest {
            tool: TOOL,
            input: args.input.display().to_string(),
            dataset_hash: &hash,
            options,
            stream: gs.manifest(),
        },
    )?;
    println!("T={} n={} m={}", gs.len(), gs.node_count(), gs.edge_count());
    println!("wrote {}", path.display());
    Ok(())
}

pub fn blocks_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".blocks.json");
    PathBuf::from(name)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = SbmConfig {
        nodes: args.nodes,
        blocks: args.blocks,
        p_in: args.p_in,
        p_out: args.p_out,
        snapshots: args.snapshots,
        drift: args.drift,
        activity: args.activity,
        seed: args.seed,
    };
    let g = generate_sbm(&cfg).phase("synth")?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let file = File::create(&args.out).map_err(|e| io_error(&args.out, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(
            w,
            "% dynamic SBM: {} nodes, {} blocks, p_in {}, p_out {}, drift {}, activity {}, seed {}",
            cfg.nodes, cfg.blocks, cfg.p_in, cfg.p_out, cfg.drift, cfg.activity, cfg.seed
        )?;
        for (t, s) in g.stream.snapshots().iter().enumerate() {
            for e in s.edges() {
                writeln!(w, "{} {} {t}", e.u, e.v)?;
            }
        }
        w.flush()
    };
    write().map_err(|e| io_error(&args.out, e))?;

    let blocks = blocks_path(&args.out);
    write_json(
        &blocks,
        &BlocksFile {
            blocks: g.blocks.clone(),
        },
    )?;
    println!(
        "T={} n={} m={}",
        g.stream.len(),
        g.stream.node_count(),
        g.stream.edge_count()
    );
    println!("wrote {} and {}", args.out.display(), blocks.display());
    Ok(())
}

fn train_phase(
    gs: &GraphStream,
    hash: &str,
    diffs: &[DiffusionMatrix],
    cfg: &TrainConfig,
    out_dir: &Path,
    timer: &mut Timer,
) -> Result<Checkpoint, CliError> {
    let (train, _) = split_train_test(gs, cfg.train_ratio).phase("split")?;
    let last = train.end.saturating_sub(1);
    let steps_per_epoch = train.len().saturating_sub(cfg.tau - 1);
    let (mut sum, mut count) = (0.0, 0usize);
    let output = timer
        .time("train", || {
            train_with_progress(gs, diffs, train, cfg, |r| {
                sum += r.loss;
                count += 1;
                if r.snapshot == last {
                    let epoch = r.epoch + 1;
                    if epoch == 1 || epoch % 10 == 0 || epoch == cfg.epochs {
                        eprintln!("epoch {epoch:>4}  mean loss {:.6}", sum / count as f64);
                    }
                    (sum, count) = (0.0, 0);
                }
            })
        })
        .phase("train")?;
    if output.skipped_steps > 0 {
        eprintln!(
            "warning: {} of {} optimizer steps skipped on non-finite gradients",
            output.skipped_steps,
            steps_per_epoch * cfg.epochs
        );
    }

    let mut checkpoint = Checkpoint::new(*cfg, output.params, output.adam);
    checkpoint.dataset_hash = Some(hash.to_string());
    checkpoint
        .save(out_dir.join("checkpoint.json"))
        .phase("write")?;
    write_loss_csv(out_dir.join("loss.csv"), &output.losses).phase("write")?;
    Ok(checkpoint)
}

fn read_blocks(path: &Path) -> Result<BlocksFile, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(dgad_core::Error::from)
        .phase("blocks")
}

fn evaluate_phase(
    gs: &GraphStream,
    diffs: &[DiffusionMatrix],
    checkpoint: &Checkpoint,
    injection: &InjectionArgs,
    seed: u64,
    out_dir: &Path,
    timer: &mut Timer,
) -> Result<f64, CliError> {
    let cfg = &checkpoint.config;
    if !(injection.anomaly_pct > 0.0 && injection.anomaly_pct < 1.0) {
        return Err(CliError::Usage(format!(
            "--anomaly-pct must be in (0, 1) so that test snapshots contain anomalies, got {}",
            injection.anomaly_pct
        )));
    }
    let (_, test) = split_train_test(gs, cfg.train_ratio).phase("split")?;

    let blocks = injection.blocks.as_deref().map(read_blocks).transpose()?;
    if let Some(b) = &blocks {
        if b.blocks.len() != gs.len() {
            return Err(CliError::Phase {
                phase: "blocks",
                source: dgad_core::Error::Data(format!(
                    "block file covers {} snapshots, stream has {}",
                    b.blocks.len(),
                    gs.len()
                )),
            });
        }
        let max_id = (0..gs.node_count() as u32)
            .map(|v| gs.original_id(v))
            .max()
            .unwrap_or(0);
        if b.blocks.iter().any(|row| (row.len() as u64) <= max_id) {
            return Err(CliError::Phase {
                phase: "blocks",
                source: dgad_core::Error::Data(format!(
                    "block file does not cover node id {max_id}"
                )),
            });
        }
    }
    let edges = timer.time("inject", || {
        inject_anomalies_where(gs, test.clone(), injection.anomaly_pct, seed, |t, u, v| {
            match &blocks {
                Some(b) => {
                    b.blocks[t][gs.original_id(u) as usize]
                        != b.blocks[t][gs.original_id(v) as usize]
                }
                None => true,
            }
        })
        .phase("inject")
    })?;
    let report = timer
        .time("score", || {
            score_edges(&checkpoint.params, gs, diffs, &edges, &cfg.model())
        })
        .phase("score")?;

    write_scores_csv(out_dir.join("scores.csv"), gs, &report).phase("write")?;
    if injection.roc {
        write_roc_csv(out_dir.join("roc.csv"), &report).phase("write")?;
    }
    write_json(
        &out_dir.join("report.json"),
        &ReportFile {
            tool: TOOL,
            config: cfg,
            anomaly_pct: injection.anomaly_pct,
            injection_seed: seed,
            test_snapshots: test,
            mean_auc: report.mean_auc,
            per_snapshot: &report.per_snapshot,
            runtime_seconds: timer.total(),
        },
    )?;
    for s in &report.per_snapshot {
        match s.auc {
            Some(auc) => println!(
                "snapshot {:>4}  AUC {auc:.4}  ({} normal, {} anomalous)",
                s.snapshot, s.normal, s.anomalous
            ),
            None => println!("snapshot {:>4}  AUC n/a (single class)", s.snapshot),
        }
    }
    println!("mean AUC {:.4}", report.mean_auc);
    Ok(report.mean_auc)
}

#[allow(clippy::too_many_arguments)]
fn write_manifest(
    out_dir: &Path,
    name: &str,
    command: &'static str,
    input: &Path,
    hash: &str,
    config: &TrainConfig,
    injection_seed: Option<u64>,
    timer: &Timer,
) -> Result<(), CliError> {
    write_json(
        &out_dir.join(name),
        &RunManifest {
            tool: TOOL,
            command,
            input: input.display().to_string(),
            dataset_hash: hash,
            config,
            seed: config.seed,
            injection_seed,
            timings: &timer.phases,
        },
    )
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = args.model.train_config(&args.snapshots, args.seed, 0.1);
    cfg.validate().phase("config")?;
    let mut timer = Timer::default();
    let (gs, hash) = load_stream(&args.input, &cfg.ingest_options(), &mut timer)?;
    let diffs = diffusions(&gs, &cfg, &hash, args.cache_dir.as_deref(), &mut timer)?;
    create_dir(&args.out_dir)?;
    train_phase(&gs, &hash, &diffs, &cfg, &args.out_dir, &mut timer)?;
    write_manifest(
        &args.out_dir,
        "train_manifest.json",
        "train",
        &args.input,
        &hash,
        &cfg,
        None,
        &timer,
    )?;
    println!("wrote {}", args.out_dir.join("checkpoint.json").display());
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let path = args
        .checkpoint
        .clone()
        .unwrap_or_else(|| args.out_dir.join("checkpoint.json"));
    let checkpoint = Checkpoint::load(&path).phase("checkpoint")?;
    let mut cfg = checkpoint.config;
    cfg.anomaly_pct = args.injection.anomaly_pct;
    let mut timer = Timer::default();
    let (gs, hash) = load_stream(&args.input, &cfg.ingest_options(), &mut timer)?;
    if let Some(expected) = &checkpoint.dataset_hash {
        if *expected != hash {
            return Err(CliError::Phase {
                phase: "checkpoint",
                source: dgad_core::Error::Data(format!(
                    "{} was trained on a different input (hash {}, got {})",
                    path.display(),
                    &expected[..12.min(expected.len())],
                    &hash[..12]
                )),
            });
        }
    }
    let diffs = diffusions(&gs, &cfg, &hash, args.cache_dir.as_deref(), &mut timer)?;
    create_dir(&args.out_dir)?;
    evaluate_phase(
        &gs,
        &diffs,
        &checkpoint,
        &args.injection,
        args.seed,
        &args.out_dir,
        &mut timer,
    )?;
    write_manifest(
        &args.out_dir,
        "eval_manifest.json",
        "evaluate",
        &args.input,
        &hash,
        &cfg,
        Some(args.seed),
        &timer,
    )
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args
        .model
        .train_config(&args.snapshots, args.seed, args.injection.anomaly_pct);
    cfg.validate().phase("config")?;
    if cfg.anomaly_pct.is_nan() || cfg.anomaly_pct <= 0.0 {
        return Err(CliError::Usage(
            "--anomaly-pct must be positive so that test snapshots contain anomalies".into(),
        ));
    }
    let mut timer = Timer::default();
    let (gs, hash) = load_stream(&args.input, &cfg.ingest_options(), &mut timer)?;
    let diffs = diffusions(&gs, &cfg, &hash, args.cache_dir.as_deref(), &mut timer)?;
    create_dir(&args.out_dir)?;
    let checkpoint = train_phase(&gs, &hash, &diffs, &cfg, &args.out_dir, &mut timer)?;
    evaluate_phase(
        &gs,
        &diffs,
        &checkpoint,
        &args.injection,
        args.seed,
        &args.out_dir,
        &mut timer,
    )?;
    write_manifest(
        &args.out_dir,
        "run_manifest.json",
        "run",
        &args.input,
        &hash,
        &cfg,
        Some(args.seed),
        &timer,
    )
}
