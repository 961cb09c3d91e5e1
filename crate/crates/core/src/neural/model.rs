use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Rng;
use crate::error::{Error, Result};
use crate::table::NerTag;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub max_position: usize,
    pub dropout_rate: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            d_model: 64,
            n_heads: 4,
            n_layers: 2,
            d_ff: 128,
            max_position: 64,
            dropout_rate: 0.1,
        }
    }
}

impl EncoderConfig {
    pub const N_SEGMENTS: usize = 2;
    pub const N_CLASSES: usize = NerTag::COUNT;

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.d_model == 0 || self.n_heads == 0 || self.n_layers == 0 || self.d_ff == 0 {
            return bad("d_model, n_heads, n_layers and d_ff must be positive");
        }
        if self.d_model % self.n_heads != 0 {
            return bad("d_model must be divisible by n_heads");
        }
        if self.max_position == 0 {
            return bad("max_position must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ln1_gamma: Array1<f64>,
    pub ln1_beta: Array1<f64>,
    pub w_ff1: Array2<f64>,
    pub b_ff1: Array1<f64>,
    pub w_ff2: Array2<f64>,
    pub b_ff2: Array1<f64>,
    pub ln2_gamma: Array1<f64>,
    pub ln2_beta: Array1<f64>,
}

/// All trainable tensors. Also used as the gradient container.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub token_emb: Array2<f64>,
    pub segment_emb: Array2<f64>,
    pub position_emb: Array2<f64>,
    pub emb_ln_gamma: Array1<f64>,
    pub emb_ln_beta: Array1<f64>,
    pub layers: Vec<LayerParams>,
    pub classifier_w: Array2<f64>,
    pub classifier_b: Array1<f64>,
}

/// Named view of one tensor.
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

fn slice2(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameters are contiguous")
}

fn slice1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("parameters are contiguous")
}

impl LayerParams {
    fn zeros(d: usize, d_ff: usize) -> Self {
        let m = |r, c| Array2::zeros((r, c));
        let v = |n| Array1::zeros(n);
        LayerParams {
            wq: m(d, d),
            bq: v(d),
            wk: m(d, d),
            bk: v(d),
            wv: m(d, d),
            bv: v(d),
            wo: m(d, d),
            bo: v(d),
            ln1_gamma: v(d),
            ln1_beta: v(d),
            w_ff1: m(d, d_ff),
            b_ff1: v(d_ff),
            w_ff2: m(d_ff, d),
            b_ff2: v(d),
            ln2_gamma: v(d),
            ln2_beta: v(d),
        }
    }

    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<TensorRef<'a>>) {
        let mut m = |n: &str, a: &'a Array2<f64>| {
            out.push(TensorRef {
                name: format!("{prefix}.{n}"),
                shape: a.shape().to_vec(),
                data: slice2(a),
            })
        };
        m("attn.wq", &self.wq);
        m("attn.wk", &self.wk);
        m("attn.wv", &self.wv);
        m("attn.wo", &self.wo);
        m("ff.w1", &self.w_ff1);
        m("ff.w2", &self.w_ff2);
        let mut v = |n: &str, a: &'a Array1<f64>| {
            out.push(TensorRef {
                name: format!("{prefix}.{n}"),
                shape: a.shape().to_vec(),
                data: slice1(a),
            })
        };
        v("attn.bq", &self.bq);
        v("attn.bk", &self.bk);
        v("attn.bv", &self.bv);
        v("attn.bo", &self.bo);
        v("ff.b1", &self.b_ff1);
        v("ff.b2", &self.b_ff2);
        v("ln1.gamma", &self.ln1_gamma);
        v("ln1.beta", &self.ln1_beta);
        v("ln2.gamma", &self.ln2_gamma);
        v("ln2.beta", &self.ln2_beta);
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        for a in [
            &mut self.wq,
            &mut self.wk,
            &mut self.wv,
            &mut self.wo,
            &mut self.w_ff1,
            &mut self.w_ff2,
        ] {
            out.push(a.as_slice_mut().expect("contiguous"));
        }
        for a in [
            &mut self.bq,
            &mut self.bk,
            &mut self.bv,
            &mut self.bo,
            &mut self.b_ff1,
            &mut self.b_ff2,
            &mut self.ln1_gamma,
            &mut self.ln1_beta,
            &mut self.ln2_gamma,
            &mut self.ln2_beta,
        ] {
            out.push(a.as_slice_mut().expect("contiguous"));
        }
    }
}

impl Params {
    pub fn zeros(config: &EncoderConfig, vocab_size: usize) -> Self {
        let d = config.d_model;
        Params {
            token_emb: Array2::zeros((vocab_size, d)),
            segment_emb: Array2::zeros((EncoderConfig::N_SEGMENTS, d)),
            position_emb: Array2::zeros((config.max_position, d)),
            emb_ln_gamma: Array1::zeros(d),
            emb_ln_beta: Array1::zeros(d),
            layers: (0..config.n_layers)
                .map(|_| LayerParams::zeros(d, config.d_ff))
                .collect(),
            classifier_w: Array2::zeros((d, EncoderConfig::N_CLASSES)),
            classifier_b: Array1::zeros(EncoderConfig::N_CLASSES),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    /// Tensors in a fixed order with stable names.
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        for (name, a) in [
            ("token_emb", &self.token_emb),
            ("segment_emb", &self.segment_emb),
            ("position_emb", &self.position_emb),
        ] {
            out.push(TensorRef {
                name: name.to_owned(),
                shape: a.shape().to_vec(),
                data: slice2(a),
            });
        }
        for (name, a) in [
            ("emb_ln.gamma", &self.emb_ln_gamma),
            ("emb_ln.beta", &self.emb_ln_beta),
        ] {
            out.push(TensorRef {
                name: name.to_owned(),
                shape: a.shape().to_vec(),
                data: slice1(a),
            });
        }
        for (l, layer) in self.layers.iter().enumerate() {
            layer.tensors(&format!("layers.{l}"), &mut out);
        }
        out.push(TensorRef {
            name: "classifier.w".to_owned(),
            shape: self.classifier_w.shape().to_vec(),
            data: slice2(&self.classifier_w),
        });
        out.push(TensorRef {
            name: "classifier.b".to_owned(),
            shape: self.classifier_b.shape().to_vec(),
            data: slice1(&self.classifier_b),
        });
        out
    }

    /// Mutable tensors, same order as [`Params::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for a in [
            &mut self.token_emb,
            &mut self.segment_emb,
            &mut self.position_emb,
        ] {
            out.push(a.as_slice_mut().expect("contiguous"));
        }
        out.push(self.emb_ln_gamma.as_slice_mut().expect("contiguous"));
        out.push(self.emb_ln_beta.as_slice_mut().expect("contiguous"));
        for layer in &mut self.layers {
            layer.tensors_mut(&mut out);
        }
        out.push(self.classifier_w.as_slice_mut().expect("contiguous"));
        out.push(self.classifier_b.as_slice_mut().expect("contiguous"));
        out
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        let src = other.tensors();
        for (dst, s) in self.tensors_mut().into_iter().zip(src) {
            for (d, x) in dst.iter_mut().zip(s.data) {
                *d += scale * x;
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.data.iter().all(|x| x.is_finite()))
    }
}

/// Encoder parameters together with the configuration they were built for.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderModel {
    pub config: EncoderConfig,
    pub params: Params,
}

fn xavier(rng: &mut Rng, rows: usize, cols: usize) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-a..a))
}

impl EncoderModel {
    /// Xavier-uniform matrices, zero biases, N(0, 0.02) embeddings, unit layer-norm gains.
    pub fn new(config: EncoderConfig, vocab_size: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if vocab_size < crate::encoding::RESERVED {
            return Err(Error::Config("vocabulary size below reserved ids".into()));
        }
        let mut rng = Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.02).expect("valid std");
        let emb = |rows: usize, d: usize, rng: &mut Rng| {
            Array2::from_shape_fn((rows, d), |_| normal.sample(rng))
        };
        let d = config.d_model;
        let mut params = Params::zeros(&config, vocab_size);
        params.token_emb = emb(vocab_size, d, &mut rng);
        params.segment_emb = emb(EncoderConfig::N_SEGMENTS, d, &mut rng);
        params.position_emb = emb(config.max_position, d, &mut rng);
        params.emb_ln_gamma.fill(1.0);
        for layer in &mut params.layers {
            layer.wq = xavier(&mut rng, d, d);
            layer.wk = xavier(&mut rng, d, d);
            layer.wv = xavier(&mut rng, d, d);
            layer.wo = xavier(&mut rng, d, d);
            layer.w_ff1 = xavier(&mut rng, d, config.d_ff);
            layer.w_ff2 = xavier(&mut rng, config.d_ff, d);
            layer.ln1_gamma.fill(1.0);
            layer.ln2_gamma.fill(1.0);
        }
        params.classifier_w = xavier(&mut rng, d, EncoderConfig::N_CLASSES);
        Ok(EncoderModel { config, params })
    }

    pub fn vocab_size(&self) -> usize {
        self.params.token_emb.nrows()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorData {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// JSON checkpoint: config header, optional vocabulary, and every parameter
/// tensor by name with its shape and row-major values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: EncoderConfig,
    pub attention_mode: crate::encoding::AttentionMode,
    pub vocab: Vec<String>,
    pub tensors: Vec<TensorData>,
}

impl Checkpoint {
    pub const FORMAT: &'static str = "tabner-checkpoint";
    pub const VERSION: u32 = 1;

    pub fn from_model(
        model: &EncoderModel,
        vocab: &crate::encoding::Vocabulary,
        attention_mode: crate::encoding::AttentionMode,
    ) -> Self {
        Checkpoint {
            format: Self::FORMAT.to_owned(),
            version: Self::VERSION,
            config: model.config.clone(),
            attention_mode,
            vocab: vocab.entries().to_vec(),
            tensors: model
                .params
                .tensors()
                .into_iter()
                .map(|t| TensorData {
                    name: t.name,
                    shape: t.shape,
                    data: t.data.to_vec(),
                })
                .collect(),
        }
    }

    pub fn vocabulary(&self) -> crate::encoding::Vocabulary {
        crate::encoding::Vocabulary::from_tokens(self.vocab.iter().cloned())
    }

    pub fn to_model(&self) -> Result<EncoderModel> {
        if self.format != Self::FORMAT || self.version != Self::VERSION {
            return Err(Error::parse(
                "checkpoint",
                format!("unsupported format {} v{}", self.format, self.version),
            ));
        }
        self.config.validate()?;
        let vocab_size = self
            .tensors
            .first()
            .filter(|t| t.name == "token_emb" && t.shape.len() == 2)
            .map(|t| t.shape[0])
            .ok_or_else(|| Error::parse("checkpoint", "first tensor must be token_emb"))?;
        let mut params = Params::zeros(&self.config, vocab_size);
        let expected: Vec<(String, Vec<usize>)> = params
            .tensors()
            .into_iter()
            .map(|t| (t.name, t.shape))
            .collect();
        if expected.len() != self.tensors.len() {
            return Err(Error::parse(
                "checkpoint",
                format!("expected {} tensors, found {}", expected.len(), self.tensors.len()),
            ));
        }
        for ((dst, (name, shape)), src) in params
            .tensors_mut()
            .into_iter()
            .zip(expected)
            .zip(&self.tensors)
        {
            if src.name != name || src.shape != shape || src.data.len() != dst.len() {
                return Err(Error::parse(
                    format!("checkpoint tensor {}", src.name),
                    format!("expected {name} with shape {shape:?}"),
                ));
            }
            dst.copy_from_slice(&src.data);
        }
        Ok(EncoderModel {
            config: self.config.clone(),
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| {
            Error::parse(
                format!("{}:{}:{}", path.display(), e.line(), e.column()),
                e.to_string(),
            )
        })
    }
}
