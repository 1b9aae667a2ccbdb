use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dgad_core::diffusion::DiffusionKind;
use dgad_core::encoding::Ablation;
use dgad_core::trainer::TrainConfig;

#[derive(Debug, Parser)]
#[command(
    name = "dgad",
    version,
    about = "Anomalous edge detection on snapshot-stream dynamic graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an edge list, cut it into snapshots and write a manifest.
    Ingest(IngestArgs),
    /// Generate a dynamic stochastic block model edge list.
    Synth(SynthArgs),
    /// Train a detector and write a checkpoint and loss history.
    Train(TrainArgs),
    /// Inject anomalies into the test snapshots and score them.
    Evaluate(EvaluateArgs),
    /// Train and evaluate in one go.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    /// Edges per snapshot.
    #[arg(long, default_value_t = 1000)]
    pub snapshot_size: usize,
    /// One snapshot per distinct timestamp instead of fixed-size chunks.
    #[arg(long)]
    pub per_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Edge list: `src dst [weight] time` per line, whitespace or comma separated.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub snapshots: SnapshotArgs,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Edge list to write; block labels go to `<out>.blocks.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.005)]
    pub p_out: f64,
    #[arg(long, default_value_t = 10)]
    pub snapshots: usize,
    /// Per-snapshot probability of a node switching blocks.
    #[arg(long, default_value_t = 0.0)]
    pub drift: f64,
    /// Per-snapshot probability of a node being active.
    #[arg(long, default_value_t = 1.0)]
    pub activity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiffusionArg {
    Ppr,
    Heat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblateArg {
    Diff,
    Dist,
    Temp,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.5)]
    pub train_ratio: f64,
    /// Contextual nodes per timestamp.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Time window in snapshots.
    #[arg(long, default_value_t = 2)]
    pub tau: usize,
    /// Encoding and embedding width.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    /// Add residual connections around each attention layer.
    #[arg(long)]
    pub residual: bool,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, value_enum, default_value_t = DiffusionArg::Ppr)]
    pub diffusion: DiffusionArg,
    /// Teleport probability for PPR.
    #[arg(long, default_value_t = DiffusionKind::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Diffusion time for the heat kernel.
    #[arg(long, default_value_t = DiffusionKind::DEFAULT_BETA)]
    pub beta: f64,
    /// Disable an encoding term; may be repeated.
    #[arg(long, value_enum)]
    pub ablate: Vec<AblateArg>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub snapshots: SnapshotArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for cached diffusion matrices.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Checkpoint written by `train`; defaults to `<out-dir>/checkpoint.json`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub injection: InjectionArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct InjectionArgs {
    /// Injected anomalies per test snapshot, as a fraction of its edges.
    #[arg(long, default_value_t = 0.1)]
    pub anomaly_pct: f64,
    /// Block labels from `synth`; restricts injected anomalies to
    /// inter-block pairs.
    #[arg(long)]
    pub blocks: Option<PathBuf>,
    /// Also write per-snapshot ROC points.
    #[arg(long)]
    pub roc: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub snapshots: SnapshotArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub injection: InjectionArgs,
    /// Seeds both training and anomaly injection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

impl ModelArgs {
    pub fn train_config(
        &self,
        snapshots: &SnapshotArgs,
        seed: u64,
        anomaly_pct: f64,
    ) -> TrainConfig {
        let diffusion = match self.diffusion {
            DiffusionArg::Ppr => DiffusionKind::Ppr { alpha: self.alpha },
            DiffusionArg::Heat => DiffusionKind::Heat { beta: self.beta },
        };
        let mut ablation = Ablation::NONE;
        for a in &self.ablate {
            match a {
                AblateArg::Diff => ablation.diffusion = true,
                AblateArg::Dist => ablation.distance = true,
                AblateArg::Temp => ablation.temporal = true,
            }
        }
        TrainConfig {
            epochs: self.epochs,
            k: self.k,
            tau: self.tau,
            dim: self.dim,
            layers: self.layers,
            heads: self.heads,
            residual: self.residual,
            lr: self.lr,
            seed,
            diffusion,
            snapshot_size: snapshots.snapshot_size,
            per_timestamp: snapshots.per_timestamp,
            train_ratio: self.train_ratio,
            anomaly_pct,
            ablation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let cli = Cli::try_parse_from(["dgad", "train", "--input", "x.txt"]).unwrap();
        let Command::Train(args) = cli.command else {
            panic!()
        };
        let cfg = args.model.train_config(&args.snapshots, args.seed, 0.1);
        assert_eq!(cfg, TrainConfig::default());
    }

    #[test]
    fn ablate_flag_sets_distance() {
        let cli =
            Cli::try_parse_from(["dgad", "train", "--input", "x", "--ablate", "dist"]).unwrap();
        let Command::Train(args) = cli.command else {
            panic!()
        };
        let cfg = args.model.train_config(&args.snapshots, 0, 0.1);
        assert!(cfg.ablation.distance && !cfg.ablation.diffusion && !cfg.ablation.temporal);
    }

    #[test]
    fn heat_kind_uses_beta() {
        let cli = Cli::try_parse_from([
            "dgad",
            "train",
            "--input",
            "x",
            "--diffusion",
            "heat",
            "--beta",
            "2",
        ])
        .unwrap();
        let Command::Train(args) = cli.command else {
            panic!()
        };
        let cfg = args.model.train_config(&args.snapshots, 0, 0.1);
        assert_eq!(cfg.diffusion, DiffusionKind::Heat { beta: 2.0 });
    }
}
