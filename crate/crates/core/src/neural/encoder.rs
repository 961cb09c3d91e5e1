//! Forward and backward passes.
//!
//! Post-norm transformer layers:
//! `h1 = LN(h + MHA(h))`, `h2 = LN(h1 + W2 gelu(W1 h1))`, with the attention
//! scores of invisible token pairs set to `-inf` before the softmax. The
//! classifier is a single affine map to the five tag logits; the loss is the
//! mean cross-entropy over labeled tokens.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;

use super::model::{EncoderModel, LayerParams, Params};
use super::Rng;
use crate::encoding::{LinearizedInput, VisibilityMask};
use crate::error::{Error, Result};
use crate::table::NerTag;

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

struct LnCache {
    xhat: Array2<f64>,
    rstd: Array1<f64>,
}

fn layer_norm(x: &Array2<f64>, gamma: &Array1<f64>, beta: &Array1<f64>) -> (Array2<f64>, LnCache) {
    let (rows, d) = x.dim();
    let mut xhat = Array2::zeros((rows, d));
    let mut rstd = Array1::zeros(rows);
    for i in 0..rows {
        let row = x.row(i);
        let mean = row.sum() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let r = 1.0 / (var + LN_EPS).sqrt();
        rstd[i] = r;
        for k in 0..d {
            xhat[[i, k]] = (row[k] - mean) * r;
        }
    }
    let y = &xhat * gamma + beta;
    (y, LnCache { xhat, rstd })
}

fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &LnCache,
    gamma: &Array1<f64>,
    dgamma: &mut Array1<f64>,
    dbeta: &mut Array1<f64>,
) -> Array2<f64> {
    *dgamma += &(dy * &cache.xhat).sum_axis(Axis(0));
    *dbeta += &dy.sum_axis(Axis(0));
    let dxhat = dy * gamma;
    let (rows, d) = dy.dim();
    let mut dx = Array2::zeros((rows, d));
    for i in 0..rows {
        let g = dxhat.row(i);
        let xh = cache.xhat.row(i);
        let mean_g = g.sum() / d as f64;
        let mean_gx = g.dot(&xh) / d as f64;
        let r = cache.rstd[i];
        for k in 0..d {
            dx[[i, k]] = r * (g[k] - mean_g - xh[k] * mean_gx);
        }
    }
    dx
}

fn gelu(z: f64) -> f64 {
    0.5 * z * (1.0 + (GELU_C * (z + GELU_A * z * z * z)).tanh())
}

fn gelu_grad(z: f64) -> f64 {
    let t = (GELU_C * (z + GELU_A * z * z * z)).tanh();
    0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * z * z)
}

/// Row softmax restricted to visible entries; invisible entries are exactly 0.
fn masked_softmax(scores: &mut Array2<f64>, mask: Option<&VisibilityMask>) {
    let n = scores.ncols();
    for (i, mut row) in scores.axis_iter_mut(Axis(0)).enumerate() {
        let visible = |j: usize| mask.is_none_or(|m| m.get(i, j));
        let mut max = f64::NEG_INFINITY;
        for j in 0..n {
            if visible(j) {
                max = max.max(row[j]);
            }
        }
        let mut sum = 0.0;
        for j in 0..n {
            if visible(j) {
                let e = (row[j] - max).exp();
                row[j] = e;
                sum += e;
            } else {
                row[j] = 0.0;
            }
        }
        for j in 0..n {
            row[j] /= sum;
        }
    }
}

fn dropout_mask(rng: &mut Rng, shape: (usize, usize), rate: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_fn(shape, |_| if rng.random::<f64>() < rate { 0.0 } else { keep })
}

struct LayerCache {
    input: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    probs: Vec<Array2<f64>>,
    attn_dropout: Option<Vec<Array2<f64>>>,
    context: Array2<f64>,
    ln1: LnCache,
    h1: Array2<f64>,
    pre_act: Array2<f64>,
    act: Array2<f64>,
    ff_dropout: Option<Array2<f64>>,
    ln2: LnCache,
}

/// Result of a forward pass with everything the backward pass needs.
pub struct ForwardPass {
    pub logits: Array2<f64>,
    /// Attention probabilities `[layer][head]`, each `L x L`, before dropout.
    pub attention: Vec<Vec<Array2<f64>>>,
    emb_ln: LnCache,
    layers: Vec<LayerCache>,
    output: Array2<f64>,
}

fn check_input(model: &EncoderModel, input: &LinearizedInput) -> Result<()> {
    let vocab = model.vocab_size();
    if let Some(&id) = input.token_ids.iter().find(|&&id| id >= vocab) {
        return Err(Error::Config(format!(
            "token id {id} outside vocabulary of size {vocab}"
        )));
    }
    if let Some(&p) = input
        .positions
        .iter()
        .find(|&&p| p >= model.config.max_position)
    {
        return Err(Error::Config(format!(
            "position {p} exceeds max_position {}",
            model.config.max_position
        )));
    }
    if input.mask.size() != input.len() {
        return Err(Error::Config("visibility mask does not match input length".into()));
    }
    Ok(())
}

fn run_layer(
    layer: &LayerParams,
    h: &Array2<f64>,
    mask: Option<&VisibilityMask>,
    n_heads: usize,
    dropout: &mut Option<(&mut Rng, f64)>,
) -> (Array2<f64>, LayerCache) {
    let (len, d) = h.dim();
    let dk = d / n_heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let q = h.dot(&layer.wq) + &layer.bq;
    let k = h.dot(&layer.wk) + &layer.bk;
    let v = h.dot(&layer.wv) + &layer.bv;

    let mut context = Array2::zeros((len, d));
    let mut probs = Vec::with_capacity(n_heads);
    let mut attn_dropout = dropout.as_ref().map(|_| Vec::with_capacity(n_heads));
    for head in 0..n_heads {
        let cols = s![.., head * dk..(head + 1) * dk];
        let mut p = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        masked_softmax(&mut p, mask);
        let ctx = match dropout.as_mut() {
            Some((rng, rate)) => {
                let m = dropout_mask(rng, (len, len), *rate);
                let ctx = (&p * &m).dot(&v.slice(cols));
                attn_dropout.as_mut().expect("train mode").push(m);
                ctx
            }
            None => p.dot(&v.slice(cols)),
        };
        context.slice_mut(cols).assign(&ctx);
        probs.push(p);
    }
    let attn_out = context.dot(&layer.wo) + &layer.bo;
    let (h1, ln1) = layer_norm(&(h + &attn_out), &layer.ln1_gamma, &layer.ln1_beta);

    let pre_act = h1.dot(&layer.w_ff1) + &layer.b_ff1;
    let act = pre_act.mapv(gelu);
    let (ff_in, ff_dropout) = match dropout.as_mut() {
        Some((rng, rate)) => {
            let m = dropout_mask(rng, act.dim(), *rate);
            (&act * &m, Some(m))
        }
        None => (act.clone(), None),
    };
    let ff_out = ff_in.dot(&layer.w_ff2) + &layer.b_ff2;
    let (h2, ln2) = layer_norm(&(&h1 + &ff_out), &layer.ln2_gamma, &layer.ln2_beta);
    let cache = LayerCache {
        input: h.clone(),
        q,
        k,
        v,
        probs,
        attn_dropout,
        context,
        ln1,
        h1,
        pre_act,
        act,
        ff_dropout,
        ln2,
    };
    (h2, cache)
}

fn forward_impl(
    model: &EncoderModel,
    input: &LinearizedInput,
    mask: Option<&VisibilityMask>,
    rng: Option<&mut Rng>,
) -> Result<ForwardPass> {
    check_input(model, input)?;
    let p = &model.params;
    let d = model.config.d_model;
    let len = input.len();
    let mut x = Array2::zeros((len, d));
    for t in 0..len {
        let mut row = x.row_mut(t);
        row += &p.token_emb.row(input.token_ids[t]);
        row += &p.segment_emb.row(input.segments[t].id());
        row += &p.position_emb.row(input.positions[t]);
    }
    let (mut h, emb_ln) = layer_norm(&x, &p.emb_ln_gamma, &p.emb_ln_beta);

    let rate = model.config.dropout_rate;
    let mut dropout = rng.filter(|_| rate > 0.0).map(|r| (r, rate));
    let mut layers = Vec::with_capacity(p.layers.len());
    for layer in &p.layers {
        let (next, cache) = run_layer(layer, &h, mask, model.config.n_heads, &mut dropout);
        layers.push(cache);
        h = next;
    }
    let logits = h.dot(&p.classifier_w) + &p.classifier_b;
    let attention = layers.iter().map(|c| c.probs.clone()).collect();
    Ok(ForwardPass {
        logits,
        attention,
        emb_ln,
        layers,
        output: h,
    })
}

/// Eval-mode logits (`L x 5`) under the input's visibility mask.
pub fn forward(model: &EncoderModel, input: &LinearizedInput) -> Result<Array2<f64>> {
    Ok(forward_impl(model, input, Some(&input.mask), None)?.logits)
}

/// Forward pass keeping intermediate state. `dropout_rng` switches on train mode.
pub fn forward_with(
    model: &EncoderModel,
    input: &LinearizedInput,
    dropout_rng: Option<&mut Rng>,
) -> Result<ForwardPass> {
    forward_impl(model, input, Some(&input.mask), dropout_rng)
}

/// Eval-mode logits ignoring the input's mask entirely (plain encoder).
pub fn forward_unmasked(model: &EncoderModel, input: &LinearizedInput) -> Result<Array2<f64>> {
    Ok(forward_impl(model, input, None, None)?.logits)
}

fn log_softmax_row(row: ndarray::ArrayView1<f64>) -> Array1<f64> {
    let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.mapv(|v| v - lse)
}

/// Mean cross-entropy over tokens that carry a tag; 0 when none do.
pub fn cross_entropy(logits: &Array2<f64>, tags: &[Option<NerTag>]) -> f64 {
    let (sum, count) = cross_entropy_sum(logits.view(), tags);
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn cross_entropy_sum(logits: ArrayView2<f64>, tags: &[Option<NerTag>]) -> (f64, usize) {
    let mut sum = 0.0;
    let mut count = 0;
    for (t, tag) in tags.iter().enumerate() {
        if let Some(tag) = tag {
            sum -= log_softmax_row(logits.row(t))[tag.index()];
            count += 1;
        }
    }
    (sum, count)
}

fn backward_layer(
    layer: &LayerParams,
    grad: &mut LayerParams,
    cache: &LayerCache,
    dh2: &Array2<f64>,
    n_heads: usize,
) -> Array2<f64> {
    let (len, d) = dh2.dim();
    let dk = d / n_heads;
    let scale = 1.0 / (dk as f64).sqrt();

    let dr2 = layer_norm_backward(dh2, &cache.ln2, &layer.ln2_gamma, &mut grad.ln2_gamma, &mut grad.ln2_beta);
    let ff_in = match &cache.ff_dropout {
        Some(m) => &cache.act * m,
        None => cache.act.clone(),
    };
    grad.w_ff2 += &ff_in.t().dot(&dr2);
    grad.b_ff2 += &dr2.sum_axis(Axis(0));
    let mut dact = dr2.dot(&layer.w_ff2.t());
    if let Some(m) = &cache.ff_dropout {
        dact *= m;
    }
    let dpre = &dact * &cache.pre_act.mapv(gelu_grad);
    grad.w_ff1 += &cache.h1.t().dot(&dpre);
    grad.b_ff1 += &dpre.sum_axis(Axis(0));
    let dh1 = dr2 + dpre.dot(&layer.w_ff1.t());

    let dr1 = layer_norm_backward(&dh1, &cache.ln1, &layer.ln1_gamma, &mut grad.ln1_gamma, &mut grad.ln1_beta);
    grad.wo += &cache.context.t().dot(&dr1);
    grad.bo += &dr1.sum_axis(Axis(0));
    let dcontext = dr1.dot(&layer.wo.t());

    let mut dq = Array2::zeros((len, d));
    let mut dk_all = Array2::zeros((len, d));
    let mut dv = Array2::zeros((len, d));
    for head in 0..n_heads {
        let cols = s![.., head * dk..(head + 1) * dk];
        let p = &cache.probs[head];
        let dctx = dcontext.slice(cols);
        let v = cache.v.slice(cols);
        let (p_used, mut dp) = match &cache.attn_dropout {
            Some(masks) => {
                let m = &masks[head];
                (p * m, dctx.dot(&v.t()) * m)
            }
            None => (p.clone(), dctx.dot(&v.t())),
        };
        dv.slice_mut(cols).assign(&p_used.t().dot(&dctx));
        // softmax backward: dS = P * (dP - rowsum(dP * P))
        let inner = (&dp * p).sum_axis(Axis(1));
        for i in 0..len {
            let c = inner[i];
            for j in 0..len {
                dp[[i, j]] = p[[i, j]] * (dp[[i, j]] - c);
            }
        }
        let ds = dp * scale;
        dq.slice_mut(cols).assign(&ds.dot(&cache.k.slice(cols)));
        dk_all.slice_mut(cols).assign(&ds.t().dot(&cache.q.slice(cols)));
    }
    let x = &cache.input;
    grad.wq += &x.t().dot(&dq);
    grad.bq += &dq.sum_axis(Axis(0));
    grad.wk += &x.t().dot(&dk_all);
    grad.bk += &dk_all.sum_axis(Axis(0));
    grad.wv += &x.t().dot(&dv);
    grad.bv += &dv.sum_axis(Axis(0));
    dr1 + dq.dot(&layer.wq.t()) + dk_all.dot(&layer.wk.t()) + dv.dot(&layer.wv.t())
}

fn backward_from(
    model: &EncoderModel,
    input: &LinearizedInput,
    pass: &ForwardPass,
    dlogits: &Array2<f64>,
    grads: &mut Params,
) {
    let p = &model.params;
    grads.classifier_w += &pass.output.t().dot(dlogits);
    grads.classifier_b += &dlogits.sum_axis(Axis(0));
    let mut dh = dlogits.dot(&p.classifier_w.t());
    for ((layer, grad), cache) in p
        .layers
        .iter()
        .zip(grads.layers.iter_mut())
        .zip(&pass.layers)
        .rev()
    {
        dh = backward_layer(layer, grad, cache, &dh, model.config.n_heads);
    }
    let dx = layer_norm_backward(
        &dh,
        &pass.emb_ln,
        &p.emb_ln_gamma,
        &mut grads.emb_ln_gamma,
        &mut grads.emb_ln_beta,
    );
    for t in 0..input.len() {
        let g = dx.row(t);
        let mut r = grads.token_emb.row_mut(input.token_ids[t]);
        r += &g;
        let mut r = grads.segment_emb.row_mut(input.segments[t].id());
        r += &g;
        let mut r = grads.position_emb.row_mut(input.positions[t]);
        r += &g;
    }
}

/// Adds `scale * d(sum of token losses)/d(params)` into `grads`.
///
/// Returns the summed loss and the number of labeled tokens. With a dropout
/// RNG the pass runs in train mode.
pub fn accumulate_gradients(
    model: &EncoderModel,
    input: &LinearizedInput,
    scale: f64,
    dropout_rng: Option<&mut Rng>,
    grads: &mut Params,
) -> Result<(f64, usize)> {
    let pass = forward_impl(model, input, Some(&input.mask), dropout_rng)?;
    let (sum, count) = cross_entropy_sum(pass.logits.view(), &input.tags);
    if count == 0 {
        return Ok((0.0, 0));
    }
    let mut dlogits = Array2::zeros(pass.logits.dim());
    for (t, tag) in input.tags.iter().enumerate() {
        if let Some(tag) = tag {
            let probs = log_softmax_row(pass.logits.row(t)).mapv(f64::exp);
            let mut row = dlogits.row_mut(t);
            row.assign(&(probs * scale));
            row[tag.index()] -= scale;
        }
    }
    backward_from(model, input, &pass, &dlogits, grads);
    Ok((sum, count))
}

/// Eval-mode loss (mean over labeled tokens) and its exact gradient.
pub fn backward(model: &EncoderModel, input: &LinearizedInput) -> Result<(f64, Params)> {
    let mut grads = model.params.zeros_like();
    let count = input.labeled_count();
    let scale = if count == 0 { 0.0 } else { 1.0 / count as f64 };
    let (sum, count) = accumulate_gradients(model, input, scale, None, &mut grads)?;
    let loss = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok((loss, grads))
}

/// Argmax tag per token, eval mode.
pub fn predict_tags(model: &EncoderModel, input: &LinearizedInput) -> Result<Vec<NerTag>> {
    let logits = forward(model, input)?;
    Ok(logits
        .axis_iter(Axis(0))
        .map(|row| {
            let best = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
                .0;
            NerTag::from_index(best).expect("five classes")
        })
        .collect())
}
