use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvaluationReport, LossRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::graphstream::GraphStream;
use crate::neuralnet::{Adam, ModelParameters};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to score edges later: configuration, parameters and
/// optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub tool: String,
    pub config: TrainConfig,
    /// Hash of the training input, when known.
    #[serde(default)]
    pub dataset_hash: Option<String>,
    pub params: ModelParameters,
    pub adam: Adam,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, params: ModelParameters, adam: Adam) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            tool: concat!("dgad ", env!("CARGO_PKG_VERSION")).to_string(),
            config,
            dataset_hash: None,
            params,
            adam,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        serde_json::to_writer(&mut w, self)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let cp: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "{} has checkpoint version {}, expected {CHECKPOINT_VERSION}",
                path.display(),
                cp.version
            )));
        }
        let model = cp.config.model();
        model.validate()?;
        if cp.params.layers.len() != model.layers || cp.params.scorer_w.len() != model.dim {
            return Err(Error::Shape(format!(
                "{} parameters do not match its configuration",
                path.display()
            )));
        }
        Ok(cp)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// `epoch,snapshot,loss`
pub fn write_loss_csv(path: impl AsRef<Path>, losses: &[LossRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "epoch,snapshot,loss")?;
        for r in losses {
            writeln!(w, "{},{},{}", r.epoch, r.snapshot, r.loss)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// `snapshot,src,dst,label,score` with node ids mapped back to the input's
/// original ids.
pub fn write_scores_csv(
    path: impl AsRef<Path>,
    gs: &GraphStream,
    report: &EvaluationReport,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "snapshot,src,dst,label,score")?;
        for r in &report.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.snapshot,
                gs.original_id(r.src),
                gs.original_id(r.dst),
                r.label.as_u8(),
                r.score
            )?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// `snapshot,fpr,tpr` for every test snapshot with both classes.
pub fn write_roc_csv(path: impl AsRef<Path>, report: &EvaluationReport) -> Result<()> {
    let path = path.as_ref();
    let mut rows = Vec::new();
    for s in report.per_snapshot.iter().filter(|s| s.auc.is_some()) {
        let (scores, labels): (Vec<f64>, Vec<u8>) = report
            .records
            .iter()
            .filter(|r| r.snapshot == s.snapshot)
            .map(|r| (r.score, r.label.as_u8()))
            .unzip();
        for (fpr, tpr) in super::roc_points(&scores, &labels)? {
            rows.push((s.snapshot, fpr, tpr));
        }
    }
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "snapshot,fpr,tpr")?;
        for (s, fpr, tpr) in &rows {
            writeln!(w, "{s},{fpr},{tpr}")?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
