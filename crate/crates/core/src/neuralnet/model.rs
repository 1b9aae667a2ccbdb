use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{Ablation, EncodingMatrix, EncodingTables};
use crate::error::{Error, Result};
use crate::tensor::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Contextual nodes per timestamp.
    pub k: usize,
    /// Time window.
    pub tau: usize,
    /// Encoding and embedding width.
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    /// Adds the layer input to its output. Off by default: a layer is bare
    /// attention.
    #[serde(default)]
    pub residual: bool,
    #[serde(default)]
    pub ablation: Ablation,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("tau", self.tau),
            ("dim", self.dim),
            ("layers", self.layers),
            ("heads", self.heads),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !self.dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "dim {} is not divisible by {} heads",
                self.dim, self.heads
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.tau * (self.k + 2)
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            k: 5,
            tau: 2,
            dim: 32,
            layers: 2,
            heads: 2,
            residual: false,
            ablation: Ablation::NONE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionWeights {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
}

/// Every trainable tensor of the detector. Also used as the gradient
/// container, with the same shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub tables: EncodingTables,
    pub layers: Vec<AttentionWeights>,
    pub scorer_w: Vec<f64>,
    pub scorer_b: f64,
}

pub type Gradients = ModelParameters;

impl ModelParameters {
    /// Uniform `(-1/sqrt(d), 1/sqrt(d))` initialization.
    pub fn init(config: &ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let bound = 1.0 / (d as f64).sqrt();
        let tables = EncodingTables::random(config.k, config.tau, d, rng);
        let layers = (0..config.layers)
            .map(|_| AttentionWeights {
                wq: Matrix::uniform(d, d, bound, rng),
                wk: Matrix::uniform(d, d, bound, rng),
                wv: Matrix::uniform(d, d, bound, rng),
            })
            .collect();
        let scorer_w = (0..d).map(|_| rng.gen_range(-bound..=bound)).collect();
        let scorer_b = rng.gen_range(-bound..=bound);
        Ok(ModelParameters {
            tables,
            layers,
            scorer_w,
            scorer_b,
        })
    }

    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.dim;
        ModelParameters {
            tables: EncodingTables::zeros(config.k, config.tau, d),
            layers: (0..config.layers)
                .map(|_| AttentionWeights {
                    wq: Matrix::zeros(d, d),
                    wk: Matrix::zeros(d, d),
                    wv: Matrix::zeros(d, d),
                })
                .collect(),
            scorer_w: vec![0.0; d],
            scorer_b: 0.0,
        }
    }

    /// All tensors in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self
            .tables
            .tensors()
            .into_iter()
            .map(Matrix::as_slice)
            .collect();
        for layer in &self.layers {
            out.extend([
                layer.wq.as_slice(),
                layer.wk.as_slice(),
                layer.wv.as_slice(),
            ]);
        }
        out.push(&self.scorer_w);
        out.push(std::slice::from_ref(&self.scorer_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .tables
            .tensors_mut()
            .into_iter()
            .map(Matrix::as_mut_slice)
            .collect();
        for layer in &mut self.layers {
            out.push(layer.wq.as_mut_slice());
            out.push(layer.wk.as_mut_slice());
            out.push(layer.wv.as_mut_slice());
        }
        out.push(&mut self.scorer_w);
        out.push(std::slice::from_mut(&mut self.scorer_b));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &ModelParameters) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(m: &mut Matrix) {
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
}

/// Saved activations of one attention layer.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub input: Matrix,
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    /// Attention weights per head, each `m x m`.
    pub attention: Vec<Matrix>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub layers: Vec<LayerTrace>,
    /// Output of the last layer, `Z`.
    pub output: Matrix,
    /// Mean-pooled edge embedding `z`.
    pub pooled: Vec<f64>,
    pub logit: f64,
    /// Anomaly score `sigmoid(z . w + b)`.
    pub score: f64,
}

fn layer_forward(
    h: &Matrix,
    w: &AttentionWeights,
    heads: usize,
    residual: bool,
) -> (Matrix, LayerTrace) {
    let (m, d) = h.shape();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = h.matmul(&w.wq);
    let k = h.matmul(&w.wk);
    let v = h.matmul(&w.wv);
    let mut out = Matrix::zeros(m, d);
    let mut attention = Vec::with_capacity(heads);
    for head in 0..heads {
        let (qh, kh, vh) = (
            q.columns(head * dh, dh),
            k.columns(head * dh, dh),
            v.columns(head * dh, dh),
        );
        let mut scores = qh.matmul_t(&kh);
        scores.scale(scale);
        softmax_rows(&mut scores);
        out.set_columns(head * dh, &scores.matmul(&vh));
        attention.push(scores);
    }
    if residual {
        out += h;
    }
    let trace = LayerTrace {
        input: h.clone(),
        q,
        k,
        v,
        attention,
    };
    (out, trace)
}

/// One multi-head attention layer: per head
/// `softmax(Q_h K_h^T / sqrt(d / heads)) V_h`, heads concatenated.
pub fn attention_layer(h: &Matrix, weights: &AttentionWeights, heads: usize) -> Result<Matrix> {
    if !h.is_finite() {
        return Err(Error::Numerical("non-finite attention input".into()));
    }
    if weights.wq.rows() != h.cols() || heads == 0 || !h.cols().is_multiple_of(heads) {
        return Err(Error::Shape(format!(
            "input width {} incompatible with {}x{} weights and {heads} heads",
            h.cols(),
            weights.wq.rows(),
            weights.wq.cols()
        )));
    }
    Ok(layer_forward(h, weights, heads, false).0)
}

pub fn forward(x: &Matrix, params: &ModelParameters, config: &ModelConfig) -> Result<ForwardTrace> {
    if x.cols() != config.dim || params.layers.len() != config.layers {
        return Err(Error::Shape(format!(
            "input {}x{} or {} layers do not match config (dim {}, {} layers)",
            x.rows(),
            x.cols(),
            params.layers.len(),
            config.dim,
            config.layers
        )));
    }
    if !x.is_finite() {
        return Err(Error::Numerical("non-finite encoder input".into()));
    }
    let mut layers = Vec::with_capacity(config.layers);
    let mut h = x.clone();
    for w in &params.layers {
        let (next, trace) = layer_forward(&h, w, config.heads, config.residual);
        layers.push(trace);
        h = next;
    }
    let pooled = h.mean_rows();
    let logit = dot(&pooled, &params.scorer_w) + params.scorer_b;
    if !logit.is_finite() {
        return Err(Error::Numerical("non-finite anomaly logit".into()));
    }
    Ok(ForwardTrace {
        layers,
        output: h,
        pooled,
        logit,
        score: sigmoid(logit),
    })
}

/// Gradients of a loss whose derivative with respect to the score is
/// `d_score`.
pub fn backward(
    trace: &ForwardTrace,
    encoding: &EncodingMatrix,
    params: &ModelParameters,
    config: &ModelConfig,
    d_score: f64,
) -> Gradients {
    let mut grads = ModelParameters::zeros(config);
    let d_logit = d_score * trace.score * (1.0 - trace.score);
    backward_from_logit(trace, encoding, params, config, d_logit, &mut grads);
    grads
}

/// Accumulates into `grads` the gradients of a loss with derivative `d_logit`
/// with respect to the pre-sigmoid logit.
pub fn backward_from_logit(
    trace: &ForwardTrace,
    encoding: &EncodingMatrix,
    params: &ModelParameters,
    config: &ModelConfig,
    d_logit: f64,
    grads: &mut Gradients,
) {
    grads.scorer_b += d_logit;
    for (g, z) in grads.scorer_w.iter_mut().zip(&trace.pooled) {
        *g += d_logit * z;
    }

    let (m, d) = trace.output.shape();
    let per_row = 1.0 / m as f64;
    let mut dh = Matrix::from_fn(m, d, |_, j| d_logit * params.scorer_w[j] * per_row);

    let heads = config.heads;
    let dh_width = d / heads;
    let scale = 1.0 / (dh_width as f64).sqrt();
    for (l, layer) in trace.layers.iter().enumerate().rev() {
        let w = &params.layers[l];
        let mut dq = Matrix::zeros(m, d);
        let mut dk = Matrix::zeros(m, d);
        let mut dv = Matrix::zeros(m, d);
        for head in 0..heads {
            let off = head * dh_width;
            let p = &layer.attention[head];
            let d_out = dh.columns(off, dh_width);
            let vh = layer.v.columns(off, dh_width);
            let qh = layer.q.columns(off, dh_width);
            let kh = layer.k.columns(off, dh_width);

            dv.set_columns(off, &p.t_matmul(&d_out));
            let dp = d_out.matmul_t(&vh);
            // Softmax Jacobian per row: dS = P * (dP - <P, dP>).
            let mut ds = Matrix::zeros(m, m);
            for i in 0..m {
                let inner = dot(p.row(i), dp.row(i));
                for j in 0..m {
                    ds[(i, j)] = p[(i, j)] * (dp[(i, j)] - inner) * scale;
                }
            }
            dq.set_columns(off, &ds.matmul(&kh));
            dk.set_columns(off, &ds.t_matmul(&qh));
        }

        let g = &mut grads.layers[l];
        g.wq += &layer.input.t_matmul(&dq);
        g.wk += &layer.input.t_matmul(&dk);
        g.wv += &layer.input.t_matmul(&dv);

        let mut d_input = dq.matmul_t(&w.wq);
        d_input += &dk.matmul_t(&w.wk);
        d_input += &dv.matmul_t(&w.wv);
        if config.residual {
            d_input += &dh;
        }
        dh = d_input;
    }
    grads.tables.accumulate(encoding, &dh, config.ablation);
}
