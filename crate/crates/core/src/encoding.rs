//! Spatial-temporal node encoding.
//!
//! Every sampled row carries three integers: its diffusion rank, its distance
//! bucket and its relative time. Each integer indexes its own learnable
//! table (a linear map on the one-hot code) and the three looked-up rows are
//! summed into the row's encoding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{SubstructureSample, UNREACHABLE};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Encoding terms switched off for ablation runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    #[serde(default)]
    pub diffusion: bool,
    #[serde(default)]
    pub distance: bool,
    #[serde(default)]
    pub temporal: bool,
}

impl Ablation {
    pub const NONE: Ablation = Ablation {
        diffusion: false,
        distance: false,
        temporal: false,
    };

    pub fn is_none(&self) -> bool {
        *self == Ablation::NONE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingTables {
    /// `(k + 2) x d`, one row per rank.
    pub diffusion: Matrix,
    /// `(MAX_DISTANCE + 2) x d`, one row per distance bucket.
    pub distance: Matrix,
    /// `tau x d`, one row per relative time.
    pub temporal: Matrix,
}

impl EncodingTables {
    pub fn zeros(k: usize, tau: usize, dim: usize) -> Self {
        EncodingTables {
            diffusion: Matrix::zeros(k + 2, dim),
            distance: Matrix::zeros(UNREACHABLE + 1, dim),
            temporal: Matrix::zeros(tau, dim),
        }
    }

    /// Entries from `U(-1/sqrt(d), 1/sqrt(d))`.
    pub fn random(k: usize, tau: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        EncodingTables {
            diffusion: Matrix::uniform(k + 2, dim, bound, rng),
            distance: Matrix::uniform(UNREACHABLE + 1, dim, bound, rng),
            temporal: Matrix::uniform(tau, dim, bound, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.diffusion.cols()
    }

    pub fn encode_diffusion(&self, rank: usize) -> Result<&[f64]> {
        lookup(&self.diffusion, rank, "rank")
    }

    pub fn encode_distance(&self, bucket: usize) -> Result<&[f64]> {
        lookup(&self.distance, bucket, "distance bucket")
    }

    /// Row for the offset between the target's snapshot `t` and window
    /// snapshot `i`.
    pub fn encode_temporal(&self, t: usize, i: usize) -> Result<&[f64]> {
        if i > t || t - i >= self.temporal.rows() {
            return Err(Error::OutOfRange(format!(
                "snapshot {i} is outside the window of {} ending at {t}",
                self.temporal.rows()
            )));
        }
        Ok(self.temporal.row(t - i))
    }

    pub fn is_finite(&self) -> bool {
        self.diffusion.is_finite() && self.distance.is_finite() && self.temporal.is_finite()
    }

    pub(crate) fn tensors(&self) -> [&Matrix; 3] {
        [&self.diffusion, &self.distance, &self.temporal]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut Matrix; 3] {
        [&mut self.diffusion, &mut self.distance, &mut self.temporal]
    }

    /// Adds `dx[j]` into every table row that row `j` of `encoding` read.
    pub fn accumulate(&mut self, encoding: &EncodingMatrix, dx: &Matrix, ablation: Ablation) {
        for (j, key) in encoding.provenance.iter().enumerate() {
            let g = dx.row(j);
            let add = |table: &mut Matrix, r: usize| {
                for (a, b) in table.row_mut(r).iter_mut().zip(g) {
                    *a += b;
                }
            };
            if !ablation.diffusion {
                add(&mut self.diffusion, key.rank);
            }
            if !ablation.distance {
                add(&mut self.distance, key.distance);
            }
            if !ablation.temporal {
                add(&mut self.temporal, key.relative_time);
            }
        }
    }
}

fn lookup<'a>(table: &'a Matrix, index: usize, what: &str) -> Result<&'a [f64]> {
    if index >= table.rows() {
        return Err(Error::OutOfRange(format!(
            "{what} {index} exceeds table of {} rows",
            table.rows()
        )));
    }
    Ok(table.row(index))
}

/// Table indices a row of the encoding matrix was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowKey {
    pub rank: usize,
    pub distance: usize,
    pub relative_time: usize,
}

/// `tau (k + 2) x d` input of the encoder with per-row provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    pub x: Matrix,
    pub provenance: Vec<RowKey>,
}

pub fn fuse_and_stack(
    sample: &SubstructureSample,
    tables: &EncodingTables,
    ablation: Ablation,
) -> Result<EncodingMatrix> {
    if sample.rows.len() != sample.tau * (sample.k + 2) {
        return Err(Error::Shape(format!(
            "sample has {} rows, expected tau (k + 2) = {}",
            sample.rows.len(),
            sample.tau * (sample.k + 2)
        )));
    }
    if tables.diffusion.rows() != sample.k + 2 || tables.temporal.rows() < sample.tau {
        return Err(Error::Shape(format!(
            "tables sized for k={}, tau={} but sample has k={}, tau={}",
            tables.diffusion.rows().saturating_sub(2),
            tables.temporal.rows(),
            sample.k,
            sample.tau
        )));
    }

    let dim = tables.dim();
    let mut x = Matrix::zeros(sample.rows.len(), dim);
    let mut provenance = Vec::with_capacity(sample.rows.len());
    for (j, row) in sample.rows.iter().enumerate() {
        let key = RowKey {
            rank: row.rank,
            distance: row.distance,
            relative_time: sample.relative_time(row),
        };
        let out = x.row_mut(j);
        if !ablation.diffusion {
            add_into(out, tables.encode_diffusion(key.rank)?);
        }
        if !ablation.distance {
            add_into(out, tables.encode_distance(key.distance)?);
        }
        if !ablation.temporal {
            add_into(out, tables.encode_temporal(sample.target.t, row.snapshot)?);
        }
        provenance.push(key);
    }
    Ok(EncodingMatrix { x, provenance })
}

fn add_into(out: &mut [f64], row: &[f64]) {
    for (o, r) in out.iter_mut().zip(row) {
        *o += r;
    }
}
