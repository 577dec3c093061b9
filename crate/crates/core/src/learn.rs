//! Training of the weighted min-sum family: unrolled forward pass with full
//! activation retention, hybrid multiloss, reverse-mode gradients derived by
//! hand, Adam with exponential learning-rate decay, and the training loop.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{stream_rng, transmit_all_zero, ChannelBatch, SnrPoint};
use crate::decode::{
    check_update_ms, marginals, sigmoid, softplus_inv, variable_update, CheckArgmin,
    DecoderWeights, LayerWeights, SchemeKind, WeightScheme, DEFAULT_CLIP,
};
use crate::error::{Error, Result};
use crate::tanner::{Code, TannerGraph};
use crate::traindata::{mixture_moments, sample_approx_batch, sample_blended_batch, MixtureSpec};

/// Probabilities inside the cross-entropy logs are held in `[P_MIN, 1 - P_MIN]`.
const P_MIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the multiloss cross-entropy term.
    pub rho: f64,
    /// Balance factor scaling the final-layer squared-error term.
    pub kappa: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            rho: 0.2,
            kappa: 100.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) || !(self.kappa > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "loss needs 0 <= rho <= 1 and kappa > 0, got rho={} kappa={}",
                self.rho, self.kappa
            )));
        }
        Ok(())
    }
}

/// Every activation of one frame through `T` unrolled iterations.
#[derive(Clone, Debug)]
pub struct UnrolledTrace {
    t: usize,
    n: usize,
    e: usize,
    m: usize,
    /// Variable-to-check messages after clipping, `T x E`.
    pub v2c: Vec<f64>,
    /// Check-to-variable messages, `T x E`.
    pub c2v: Vec<f64>,
    /// Clipped soft outputs, `T x N`.
    pub marginals: Vec<f64>,
    /// Two smallest-magnitude edges per check, `T x M`.
    pub argmins: Vec<CheckArgmin>,
}

impl UnrolledTrace {
    pub fn new(graph: &TannerGraph, t: usize) -> Self {
        let (n, e, m) = (graph.n_vars(), graph.n_edges(), graph.n_checks());
        Self {
            t,
            n,
            e,
            m,
            v2c: vec![0.0; t * e],
            c2v: vec![0.0; t * e],
            marginals: vec![0.0; t * n],
            argmins: vec![CheckArgmin::default(); t * m],
        }
    }

    pub fn layers(&self) -> usize {
        self.t
    }

    pub fn layer_v2c(&self, l: usize) -> &[f64] {
        &self.v2c[l * self.e..(l + 1) * self.e]
    }

    pub fn layer_c2v(&self, l: usize) -> &[f64] {
        &self.c2v[l * self.e..(l + 1) * self.e]
    }

    pub fn layer_marginals(&self, l: usize) -> &[f64] {
        &self.marginals[l * self.n..(l + 1) * self.n]
    }

    pub fn layer_argmins(&self, l: usize) -> &[CheckArgmin] {
        &self.argmins[l * self.m..(l + 1) * self.m]
    }

    fn fits(&self, graph: &TannerGraph, t: usize) -> bool {
        self.t == t
            && self.n == graph.n_vars()
            && self.e == graph.n_edges()
            && self.m == graph.n_checks()
    }
}

fn check_trainable_kind(kind: SchemeKind) -> Result<()> {
    match kind {
        SchemeKind::Bp | SchemeKind::Oms(_) => Err(Error::InvalidArgument(format!(
            "scheme {kind} cannot be unrolled for training"
        ))),
        _ => Ok(()),
    }
}

/// Runs all `T` layers with no early exit, filling `trace`.
pub fn forward_unrolled_into(
    graph: &TannerGraph,
    llrs: &[f64],
    weights: &DecoderWeights,
    clip_at: f64,
    trace: &mut UnrolledTrace,
) -> Result<()> {
    check_trainable_kind(weights.scheme().kind)?;
    if llrs.len() != graph.n_vars() {
        return Err(Error::LengthMismatch {
            what: "llrs",
            expected: graph.n_vars(),
            got: llrs.len(),
        });
    }
    let t = weights.scheme().t_max;
    if !trace.fits(graph, t) {
        *trace = UnrolledTrace::new(graph, t);
    }
    let (n, e, m) = (trace.n, trace.e, trace.m);
    let zeros = vec![0.0; e];
    for l in 0..t {
        let w = weights.layer(l);
        let (done, rest) = trace.c2v.split_at_mut(l * e);
        let prev = if l == 0 {
            &zeros[..]
        } else {
            &done[(l - 1) * e..]
        };
        let v2c = &mut trace.v2c[l * e..(l + 1) * e];
        variable_update(graph, llrs, prev, &w, clip_at, v2c);
        let c2v = &mut rest[..e];
        check_update_ms(
            graph,
            v2c,
            &w,
            0.0,
            c2v,
            Some(&mut trace.argmins[l * m..(l + 1) * m]),
        );
        let x = &mut trace.marginals[l * n..(l + 1) * n];
        marginals(graph, llrs, c2v, clip_at, x);
        if x.iter().any(|v| v.is_nan()) || c2v.iter().any(|v| v.is_nan()) {
            return Err(Error::Divergence { iteration: l + 1 });
        }
    }
    Ok(())
}

pub fn forward_unrolled(
    graph: &TannerGraph,
    llrs: &[f64],
    weights: &DecoderWeights,
) -> Result<UnrolledTrace> {
    let mut trace = UnrolledTrace::new(graph, weights.scheme().t_max);
    forward_unrolled_into(graph, llrs, weights, DEFAULT_CLIP, &mut trace)?;
    Ok(trace)
}

/// Hybrid loss of one frame. `marginals` is `T x N` layer-major and
/// `labels` has length `N`. When `grad` is given it receives dloss/dx.
///
/// `p(bit = 0) = sigmoid(x)`. The cross-entropy averages all `T` layers;
/// the squared-error term scores the final layer's probability of the
/// wrong bit, `(1 - p_correct)^2`.
pub fn loss_hybrid_with_grad(
    marginals: &[f64],
    labels: &[u8],
    cfg: &LossConfig,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let n = labels.len();
    let t = marginals.len() / n;
    debug_assert_eq!(t * n, marginals.len());
    let ce_scale = cfg.rho / (n * t) as f64;
    let mse_scale = (1.0 - cfg.rho) * cfg.kappa / n as f64;
    let mut ce = 0.0;
    let mut mse = 0.0;
    for l in 0..t {
        let last = l + 1 == t;
        for i in 0..n {
            let idx = l * n + i;
            let sign = if labels[i] == 0 { 1.0 } else { -1.0 };
            let z = sign * marginals[idx];
            let p = sigmoid(z);
            let q = sigmoid(-z);
            let (log_p, dlog_p) = if p < P_MIN {
                (P_MIN.ln(), 0.0)
            } else if q < P_MIN {
                ((1.0 - P_MIN).ln(), 0.0)
            } else {
                (p.ln(), q)
            };
            ce -= log_p;
            let mut dz = -ce_scale * dlog_p;
            if last {
                mse += q * q;
                // d(q^2)/dz = -2 q p q
                dz -= mse_scale * 2.0 * p * q * q;
            }
            if let Some(g) = grad.as_deref_mut() {
                g[idx] = sign * dz;
            }
        }
    }
    ce_scale * ce + mse_scale * mse
}

pub fn loss_hybrid(marginals: &[f64], labels: &[u8], cfg: &LossConfig) -> f64 {
    loss_hybrid_with_grad(marginals, labels, cfg, None)
}

/// Where the gradient of each effective weight lands in the flat parameter
/// vector.
struct ParamLayout {
    kind: SchemeKind,
    n: usize,
    e: usize,
}

impl ParamLayout {
    fn new(weights: &DecoderWeights, graph: &TannerGraph) -> Self {
        Self {
            kind: weights.scheme().kind,
            n: graph.n_vars(),
            e: graph.n_edges(),
        }
    }

    fn stride(&self) -> usize {
        self.n + 2 * self.e
    }
}

/// Reusable buffers for [`backward`].
#[derive(Clone, Debug, Default)]
pub struct BackwardScratch {
    g_c2v: Vec<f64>,
    g_v2c: Vec<f64>,
}

/// Accumulates dloss/d(effective weight) into `grad_eff` for one frame.
/// `grad_marginals` is dloss/dx for every layer, `T x N`.
///
/// The min routes its gradient only to the stored argmin edge, the sign
/// product is held constant, and clipped activations pass no gradient.
#[allow(clippy::too_many_arguments)]
pub fn backward(
    graph: &TannerGraph,
    llrs: &[f64],
    trace: &UnrolledTrace,
    weights: &DecoderWeights,
    grad_marginals: &[f64],
    clip_at: f64,
    grad_eff: &mut [f64],
    scratch: &mut BackwardScratch,
) -> Result<()> {
    let t = weights.scheme().t_max;
    if !trace.fits(graph, t) || grad_marginals.len() != t * graph.n_vars() {
        return Err(Error::InvalidArgument(
            "trace, weights and gradient shapes disagree".into(),
        ));
    }
    if grad_eff.len() != weights.raw().len() {
        return Err(Error::LengthMismatch {
            what: "weight gradient",
            expected: weights.raw().len(),
            got: grad_eff.len(),
        });
    }
    let layout = ParamLayout::new(weights, graph);
    let (n, e) = (layout.n, layout.e);
    scratch.g_c2v.clear();
    scratch.g_c2v.resize(e, 0.0);
    scratch.g_v2c.resize(e, 0.0);
    let BackwardScratch { g_c2v, g_v2c } = scratch;

    for l in (0..t).rev() {
        let w = weights.layer(l);
        let v = trace.layer_v2c(l);
        let x = trace.layer_marginals(l);
        let gx = &grad_marginals[l * n..(l + 1) * n];
        // marginal x_i = b_i + sum of c2v over every edge of i
        for i in 0..n {
            if x[i].abs() < clip_at && gx[i] != 0.0 {
                for &ed in graph.var_edges(i) {
                    g_c2v[ed as usize] += gx[i];
                }
            }
        }

        // check update: c[e] = s_e * gamma_e * |v[a(e)]|
        let (shared_gamma, full) = match w {
            LayerWeights::Shared { gamma } => (gamma, None),
            LayerWeights::Full { beta, gamma, .. } => {
                let stride = layout.stride();
                let (ga, rest) = grad_eff[l * stride..(l + 1) * stride].split_at_mut(n);
                let (gb, gg) = rest.split_at_mut(e);
                (0.0, Some((beta, gamma, ga, gb, gg)))
            }
        };
        let mut full = full;
        g_v2c.fill(0.0);
        let mut g_gamma_shared = 0.0;
        for (j, am) in trace.layer_argmins(l).iter().enumerate() {
            let edges = graph.check_edges(j);
            if edges.len() < 2 {
                continue;
            }
            let vs = &v[edges.clone()];
            let gs = &g_c2v[edges.clone()];
            if gs.iter().all(|&g| g == 0.0) {
                continue;
            }
            let negative = vs.iter().fold(false, |acc, &x| acc ^ (x < 0.0));
            let (a1, a2) = (am.first as usize, am.second as usize);
            // each edge reads one of the two argmins; both signs are fixed
            let s1 = if v[a1] < 0.0 { -1.0 } else { 1.0 };
            let s2 = if v[a2] < 0.0 { -1.0 } else { 1.0 };
            let (mag1, mag2) = (v[a1].abs(), v[a2].abs());
            let (mut up1, mut up2) = (0.0, 0.0);
            for (k, (&g, &vv)) in gs.iter().zip(vs).enumerate() {
                if g == 0.0 {
                    continue;
                }
                let ed = edges.start + k;
                let s = if negative ^ (vv < 0.0) { -1.0 } else { 1.0 };
                let other_first = ed != a1;
                let mag = if other_first { mag1 } else { mag2 };
                let gamma = match &mut full {
                    None => {
                        g_gamma_shared += g * s * mag;
                        shared_gamma
                    }
                    Some((_, gamma, _, _, gg)) => {
                        gg[ed] += g * s * mag;
                        gamma[ed]
                    }
                };
                if other_first {
                    up1 += g * s * gamma;
                } else {
                    up2 += g * s * gamma;
                }
            }
            g_v2c[a1] += up1 * s1;
            g_v2c[a2] += up2 * s2;
        }
        for (g, &vv) in g_v2c.iter_mut().zip(v) {
            if vv.abs() >= clip_at {
                *g = 0.0;
            }
        }

        // variable update: v[e] = alpha_i b_i + sum_{e' != e} beta_e' c_prev[e']
        let c_prev = if l > 0 {
            Some(trace.layer_c2v(l - 1))
        } else {
            None
        };
        g_c2v.fill(0.0);
        for i in 0..n {
            let edges = graph.var_edges(i);
            let total: f64 = edges.iter().map(|&ed| g_v2c[ed as usize]).sum();
            if let Some((_, _, ga, _, _)) = &mut full {
                ga[i] += llrs[i] * total;
            }
            let Some(c_prev) = c_prev else { continue };
            match &mut full {
                None => {
                    for &ed in edges {
                        let ed = ed as usize;
                        g_c2v[ed] = total - g_v2c[ed];
                    }
                }
                Some((beta, _, _, gb, _)) => {
                    for &ed in edges {
                        let ed = ed as usize;
                        let rest = total - g_v2c[ed];
                        gb[ed] += c_prev[ed] * rest;
                        g_c2v[ed] = beta[ed] * rest;
                    }
                }
            }
        }
        match layout.kind {
            SchemeKind::Unnms => grad_eff[0] += g_gamma_shared,
            SchemeKind::Snnms => grad_eff[l] += g_gamma_shared,
            _ => {}
        }
    }
    Ok(())
}

/// Chain rule through softplus: d(softplus(x))/dx = sigmoid(x).
pub fn effective_to_raw_grad(weights: &DecoderWeights, grad_eff: &mut [f64]) {
    for (g, &x) in grad_eff.iter_mut().zip(weights.raw()) {
        *g *= sigmoid(x);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr0: f64,
    pub decay_rate: f64,
    pub decay_steps: f64,
    /// Decay in whole steps of `decay_steps` instead of continuously.
    pub staircase: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr0: 0.002,
            decay_rate: 0.95,
            decay_steps: 400.0,
            staircase: false,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn lr_at(&self, step: u64) -> f64 {
        let mut p = step as f64 / self.decay_steps;
        if self.staircase {
            p = p.floor();
        }
        self.lr0 * self.decay_rate.powf(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub cfg: AdamConfig,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(cfg: AdamConfig, len: usize) -> Self {
        Self {
            cfg,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// Learning rate the next step will use.
    pub fn lr(&self) -> f64 {
        self.cfg.lr_at(self.step)
    }

    /// Bias-corrected Adam update of `params` in place. A non-finite
    /// gradient rejects the step and leaves all state untouched.
    pub fn adam_step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                what: "optimizer parameters",
                expected: self.m.len(),
                got: params.len().min(grads.len()),
            });
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
            ..
        } = self.cfg;
        let lr = self.lr();
        self.step += 1;
        let c1 = 1.0 - beta1.powf(self.step as f64);
        let c2 = 1.0 - beta2.powf(self.step as f64);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Single Gaussian matched to the mixture's first two moments.
    Approx,
    /// Exact mixture, frames split across the SNR grid.
    Blended,
}

/// Stop when the mean loss of consecutive `window`-step windows changes by
/// less than `rel_tol` (relative) `patience` times in a row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauRule {
    pub window: usize,
    pub rel_tol: f64,
    pub patience: usize,
}

impl Default for PlateauRule {
    fn default() -> Self {
        Self {
            window: 200,
            rel_tol: 1e-3,
            patience: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Minibatches per epoch; epoch `k` replays the same batches.
    pub batches: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub data: DataSource,
    pub plateau: Option<PlateauRule>,
    /// Raw-weight snapshot interval in steps; 0 keeps only the first and last.
    pub snapshot_every: usize,
    pub clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batches: 2000,
            batch_size: 64,
            epochs: 6,
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            data: DataSource::Approx,
            plateau: Some(PlateauRule::default()),
            snapshot_every: 400,
            clip: DEFAULT_CLIP,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub ber: f64,
    pub fer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub raw: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    EndOfFeeding,
    Plateau {
        step: usize,
    },
    /// Non-finite loss or gradient; the final weights are the last good ones.
    Diverged {
        step: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub scheme: String,
    pub t_max: usize,
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_raw: Vec<f64>,
    pub stop: StopReason,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.loss).collect()
    }

    pub fn bers(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.ber).collect()
    }

    /// One JSON object per step.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of minibatch `index` within a run seeded by `seed`.
pub fn batch_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Frames handled per parallel task; fixed so the reduction order does not
/// depend on the worker count.
const FRAME_CHUNK: usize = 4;

#[derive(Clone, Debug, Default)]
struct BatchOutcome {
    loss: f64,
    grad: Vec<f64>,
    bit_errors: usize,
    frame_errors: usize,
}

struct Workspace {
    trace: UnrolledTrace,
    back: BackwardScratch,
    gx: Vec<f64>,
}

/// Mean loss and mean effective-weight gradient over a batch, with
/// final-layer error counts.
fn batch_loss_grad(
    graph: &TannerGraph,
    batch: &ChannelBatch,
    weights: &DecoderWeights,
    loss: &LossConfig,
    clip_at: f64,
) -> Result<BatchOutcome> {
    let t = weights.scheme().t_max;
    let n = graph.n_vars();
    let p = weights.raw().len();
    let frames: Vec<usize> = (0..batch.batch_size).collect();
    let parts: Vec<Result<BatchOutcome>> = frames
        .par_chunks(FRAME_CHUNK)
        .map_init(
            || Workspace {
                trace: UnrolledTrace::new(graph, t),
                back: BackwardScratch::default(),
                gx: vec![0.0; t * n],
            },
            |ws, chunk| {
                let mut out = BatchOutcome {
                    grad: vec![0.0; p],
                    ..Default::default()
                };
                for &f in chunk {
                    let llrs = batch.frame(f);
                    let labels = batch.labels(f);
                    forward_unrolled_into(graph, llrs, weights, clip_at, &mut ws.trace)?;
                    out.loss +=
                        loss_hybrid_with_grad(&ws.trace.marginals, labels, loss, Some(&mut ws.gx));
                    backward(
                        graph,
                        llrs,
                        &ws.trace,
                        weights,
                        &ws.gx,
                        clip_at,
                        &mut out.grad,
                        &mut ws.back,
                    )?;
                    let last = ws.trace.layer_marginals(t - 1);
                    let errs = last
                        .iter()
                        .zip(labels)
                        .filter(|(x, &y)| u8::from(**x < 0.0) != y)
                        .count();
                    out.bit_errors += errs;
                    out.frame_errors += usize::from(errs > 0);
                }
                Ok(out)
            },
        )
        .collect();
    let mut total = BatchOutcome {
        grad: vec![0.0; p],
        ..Default::default()
    };
    for part in parts {
        let part = part?;
        total.loss += part.loss;
        for (a, b) in total.grad.iter_mut().zip(&part.grad) {
            *a += b;
        }
        total.bit_errors += part.bit_errors;
        total.frame_errors += part.frame_errors;
    }
    let scale = 1.0 / batch.batch_size as f64;
    total.loss *= scale;
    for g in &mut total.grad {
        *g *= scale;
    }
    Ok(total)
}

/// Mean hybrid loss of `batch` under `weights`, without gradients.
pub fn batch_loss(
    graph: &TannerGraph,
    batch: &ChannelBatch,
    weights: &DecoderWeights,
    cfg: &LossConfig,
) -> Result<f64> {
    let mut trace = UnrolledTrace::new(graph, weights.scheme().t_max);
    let mut sum = 0.0;
    for f in 0..batch.batch_size {
        forward_unrolled_into(graph, batch.frame(f), weights, DEFAULT_CLIP, &mut trace)?;
        sum += loss_hybrid(&trace.marginals, batch.labels(f), cfg);
    }
    Ok(sum / batch.batch_size as f64)
}

/// Mean loss and gradient with respect to the raw parameters.
pub fn batch_raw_gradient(
    graph: &TannerGraph,
    batch: &ChannelBatch,
    weights: &DecoderWeights,
    cfg: &LossConfig,
) -> Result<(f64, Vec<f64>)> {
    let mut out = batch_loss_grad(graph, batch, weights, cfg, DEFAULT_CLIP)?;
    effective_to_raw_grad(weights, &mut out.grad);
    Ok((out.loss, out.grad))
}

struct PlateauTracker {
    rule: PlateauRule,
    sum: f64,
    count: usize,
    prev: Option<f64>,
    streak: usize,
}

impl PlateauTracker {
    fn new(rule: PlateauRule) -> Self {
        Self {
            rule,
            sum: 0.0,
            count: 0,
            prev: None,
            streak: 0,
        }
    }

    /// Feeds one loss value; true once the plateau rule fires.
    fn push(&mut self, loss: f64) -> bool {
        self.sum += loss;
        self.count += 1;
        if self.count < self.rule.window.max(1) {
            return false;
        }
        let mean = self.sum / self.count as f64;
        self.sum = 0.0;
        self.count = 0;
        if let Some(prev) = self.prev {
            let rel = (mean - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            if rel < self.rule.rel_tol {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.prev = Some(mean);
        self.streak >= self.rule.patience
    }
}

/// Trains `scheme` on data drawn from `spec`, starting from all effective
/// weights equal to 1.
pub fn train(
    code: &Code,
    scheme: WeightScheme,
    spec: &MixtureSpec,
    cfg: &TrainConfig,
) -> Result<(DecoderWeights, TrainReport)> {
    train_with(code, scheme, spec, cfg, |_, _| {})
}

/// [`train`] with a callback after every step, for checkpoints and progress.
pub fn train_with<F>(
    code: &Code,
    scheme: WeightScheme,
    spec: &MixtureSpec,
    cfg: &TrainConfig,
    mut on_step: F,
) -> Result<(DecoderWeights, TrainReport)>
where
    F: FnMut(&StepRecord, &DecoderWeights),
{
    if !scheme.kind.is_trainable() {
        return Err(Error::InvalidArgument(format!(
            "scheme {} has no trainable weights",
            scheme.kind
        )));
    }
    cfg.loss.validate()?;
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let graph = &code.graph;
    let n = graph.n_vars();
    let moments = mixture_moments(spec)?;
    let mut weights = DecoderWeights::initial(scheme, graph);
    let mut opt = OptimizerState::new(cfg.adam, weights.raw().len());
    let mut plateau = cfg.plateau.map(PlateauTracker::new);
    let total_steps = cfg.batches * cfg.epochs;
    let mut steps = Vec::with_capacity(total_steps);
    let mut snapshots = vec![Snapshot {
        step: 0,
        raw: weights.raw().to_vec(),
    }];
    let mut stop = StopReason::EndOfFeeding;
    let mut raw = weights.raw().to_vec();

    for step in 0..total_steps {
        let index = (step % cfg.batches) as u64;
        let seed = batch_seed(cfg.seed, index);
        let batch = match cfg.data {
            DataSource::Approx => sample_approx_batch(&moments, cfg.batch_size, n, seed)?,
            DataSource::Blended => sample_blended_batch(spec, cfg.batch_size, seed)?,
        };
        let mut out = match batch_loss_grad(graph, &batch, &weights, &cfg.loss, cfg.clip) {
            Ok(o) => o,
            Err(Error::Divergence { .. }) => {
                stop = StopReason::Diverged { step };
                break;
            }
            Err(e) => return Err(e),
        };
        if !out.loss.is_finite() {
            stop = StopReason::Diverged { step };
            break;
        }
        effective_to_raw_grad(&weights, &mut out.grad);
        let lr = opt.lr();
        match opt.adam_step(&mut raw, &out.grad) {
            Ok(()) => {}
            Err(Error::NonFiniteGradient { .. }) => {
                stop = StopReason::Diverged { step };
                break;
            }
            Err(e) => return Err(e),
        }
        if raw.iter().any(|x| !x.is_finite()) {
            stop = StopReason::Diverged { step };
            break;
        }
        weights.set_raw(&raw)?;
        let record = StepRecord {
            step,
            lr,
            loss: out.loss,
            ber: out.bit_errors as f64 / (cfg.batch_size * n) as f64,
            fer: out.frame_errors as f64 / cfg.batch_size as f64,
        };
        on_step(&record, &weights);
        steps.push(record);
        if cfg.snapshot_every > 0 && (step + 1) % cfg.snapshot_every == 0 {
            snapshots.push(Snapshot {
                step: step + 1,
                raw: raw.clone(),
            });
        }
        if let Some(p) = plateau.as_mut() {
            if p.push(out.loss) {
                stop = StopReason::Plateau { step };
                break;
            }
        }
    }
    let done = steps.len();
    if snapshots.last().map(|s| s.step) != Some(done) {
        snapshots.push(Snapshot {
            step: done,
            raw: weights.raw().to_vec(),
        });
    }
    let report = TrainReport {
        scheme: scheme.kind.to_string(),
        t_max: scheme.t_max,
        steps,
        snapshots,
        final_raw: weights.raw().to_vec(),
        stop,
    };
    Ok((weights, report))
}

/// Centered moving average; windows shrink at the ends.
pub fn smooth(series: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = vec![0.0; series.len() + 1];
    for (i, &x) in series.iter().enumerate() {
        prefix[i + 1] = prefix[i] + x;
    }
    (0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(series.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub params: usize,
    /// Coordinates compared on at least one frame.
    pub checked: usize,
    /// Coordinates where every frame crossed a kink.
    pub skipped: usize,
    /// (coordinate, frame) pairs dropped because a perturbation crossed a kink.
    pub kinked_frames: usize,
}

/// Denominator floor of the relative error, so coordinates whose gradient
/// is numerically zero are compared absolutely.
const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Loss of one frame plus a fingerprint of every branch taken in the
/// forward pass and the loss: argmins, message signs, clip and
/// probability-clamp hits.
fn frame_loss_signature(
    graph: &TannerGraph,
    llrs: &[f64],
    labels: &[u8],
    weights: &DecoderWeights,
    cfg: &LossConfig,
    trace: &mut UnrolledTrace,
) -> Result<(f64, u64)> {
    forward_unrolled_into(graph, llrs, weights, DEFAULT_CLIP, trace)?;
    let mut h = DefaultHasher::new();
    trace.argmins.hash(&mut h);
    for &v in &trace.v2c {
        (v < 0.0, v.abs() >= DEFAULT_CLIP).hash(&mut h);
    }
    for &x in &trace.marginals {
        (
            x.abs() >= DEFAULT_CLIP,
            sigmoid(x) < P_MIN,
            sigmoid(-x) < P_MIN,
        )
            .hash(&mut h);
    }
    Ok((loss_hybrid(&trace.marginals, labels, cfg), h.finish()))
}

/// Compares [`backward`] against central differences with step `1e-4` over
/// every raw parameter, at random weights near 1 and noisy frames.
///
/// Each coordinate is compared on the sum over frames whose branch
/// signature is unchanged by both perturbations.
pub fn grad_check(
    code: &Code,
    scheme: WeightScheme,
    n_frames: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    const H: f64 = 1e-4;
    const DOMAIN_GRADCHECK: u64 = 0x4752_4144; // "GRAD"
    check_trainable_kind(scheme.kind)?;
    let graph = &code.graph;
    let count = scheme.param_count(graph.n_vars(), graph.n_edges());
    let mut rng = stream_rng(seed, DOMAIN_GRADCHECK, 0);
    let raw: Vec<f64> = (0..count)
        .map(|_| softplus_inv(1.0) + rng.gen_range(-0.6..0.6))
        .collect();
    let mut weights = DecoderWeights::new(scheme, graph, raw.clone())?;
    // noisy enough that decoding leaves errors at every layer
    let snr = SnrPoint::new(1.5, &code.params)?;
    let batch = transmit_all_zero(&snr, graph.n_vars(), n_frames, seed)?;
    let cfg = LossConfig::default();
    let t = scheme.t_max;

    let mut trace = UnrolledTrace::new(graph, t);
    let mut back = BackwardScratch::default();
    let mut gx = vec![0.0; t * graph.n_vars()];
    let mut analytic = Vec::with_capacity(n_frames);
    let mut base_sig = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let (_, sig) = frame_loss_signature(
            graph,
            batch.frame(f),
            batch.labels(f),
            &weights,
            &cfg,
            &mut trace,
        )?;
        loss_hybrid_with_grad(&trace.marginals, batch.labels(f), &cfg, Some(&mut gx));
        let mut g = vec![0.0; count];
        backward(
            graph,
            batch.frame(f),
            &trace,
            &weights,
            &gx,
            DEFAULT_CLIP,
            &mut g,
            &mut back,
        )?;
        effective_to_raw_grad(&weights, &mut g);
        analytic.push(g);
        base_sig.push(sig);
    }

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        params: count,
        checked: 0,
        skipped: 0,
        kinked_frames: 0,
    };
    let mut probe = raw.clone();
    let mut plus = vec![(0.0, 0u64); n_frames];
    for k in 0..count {
        probe[k] = raw[k] + H;
        weights.set_raw(&probe)?;
        for (f, slot) in plus.iter_mut().enumerate() {
            *slot = frame_loss_signature(
                graph,
                batch.frame(f),
                batch.labels(f),
                &weights,
                &cfg,
                &mut trace,
            )?;
        }
        probe[k] = raw[k] - H;
        weights.set_raw(&probe)?;
        let (mut a_sum, mut n_sum, mut used) = (0.0, 0.0, 0);
        for f in 0..n_frames {
            let (lm, sm) = frame_loss_signature(
                graph,
                batch.frame(f),
                batch.labels(f),
                &weights,
                &cfg,
                &mut trace,
            )?;
            let (lp, sp) = plus[f];
            if sp != base_sig[f] || sm != base_sig[f] {
                report.kinked_frames += 1;
                continue;
            }
            a_sum += analytic[f][k];
            n_sum += (lp - lm) / (2.0 * H);
            used += 1;
        }
        probe[k] = raw[k];
        if used == 0 {
            report.skipped += 1;
            continue;
        }
        let (a, numeric) = (a_sum / used as f64, n_sum / used as f64);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        report.max_rel_error = report.max_rel_error.max(rel);
        report.checked += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes;
    use crate::decode::{DecodeConfig, DecodeScratch};
    use crate::tanner::ParityCheckMatrix;

    fn toy() -> Code {
        codes::builtin("reg96").unwrap()
    }

    #[test]
    fn lr_schedule_values() {
        let c = AdamConfig::default();
        assert_eq!(c.lr_at(0), 0.002);
        assert!((c.lr_at(400) - 0.0019).abs() < 1e-15);
        assert!((c.lr_at(4000) - 0.001197).abs() < 1e-6);
        let stair = AdamConfig {
            staircase: true,
            ..c
        };
        assert_eq!(stair.lr_at(399), 0.002);
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        for g in [3.7, -0.02, 1e-4] {
            let mut opt = OptimizerState::new(AdamConfig::default(), 1);
            let mut p = [0.5];
            opt.adam_step(&mut p, &[g]).unwrap();
            let moved = p[0] - 0.5;
            assert!((moved + 0.002 * g.signum()).abs() < 1e-6, "{moved}");
        }
    }

    #[test]
    fn adam_zero_gradient_is_a_fixed_point() {
        let mut opt = OptimizerState::new(AdamConfig::default(), 3);
        let mut p = [0.1, -2.0, 5.0];
        for _ in 0..50 {
            opt.adam_step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, [0.1, -2.0, 5.0]);
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut opt = OptimizerState::new(AdamConfig::default(), 2);
        let mut p = [1.0, 2.0];
        let err = opt.adam_step(&mut p, &[0.1, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { index: 1 }));
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(opt.step, 0);
    }

    #[test]
    fn loss_examples() {
        let cfg = LossConfig::default();
        let labels = [0u8, 1, 0];
        // perfect at every layer (beyond the clamp)
        let perfect = [60.0, -60.0, 60.0, 60.0, -60.0, 60.0];
        assert!(loss_hybrid(&perfect, &labels, &cfg) < 1e-10);
        let flat = [0.0; 6];
        let l = loss_hybrid(&flat, &labels, &cfg);
        assert!((l - (0.2 * std::f64::consts::LN_2 + 0.8 * 100.0 * 0.25)).abs() < 1e-12);
        assert!((l - 20.14).abs() < 5e-3);
    }

    #[test]
    fn loss_averages_exactly_t_cross_entropy_terms() {
        let cfg = LossConfig {
            rho: 1.0,
            kappa: 1.0,
        };
        let labels = [0u8; 2];
        // layer 0 is poor, layer 1 is perfect: CE equals half the layer-0 term
        let x = [-1.0, 0.5, 60.0, 60.0];
        let l0 = (-(sigmoid(-1.0)).ln() - sigmoid(0.5).ln()) / 2.0;
        assert!((loss_hybrid(&x, &labels, &cfg) - l0 / 2.0).abs() < 1e-12);
        // dropping the early layer changes the value
        assert!((loss_hybrid(&x[2..], &labels, &cfg) - loss_hybrid(&x, &labels, &cfg)).abs() > 0.1);
    }

    #[test]
    fn loss_gradient_matches_differences() {
        let cfg = LossConfig::default();
        let labels = [0u8, 1, 0, 1];
        let x = [0.3, -2.0, -1.2, 4.0, 2.2, 0.1, -0.7, -3.0];
        let mut g = [0.0; 8];
        loss_hybrid_with_grad(&x, &labels, &cfg, Some(&mut g));
        for k in 0..8 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += 1e-6;
            xm[k] -= 1e-6;
            let fd = (loss_hybrid(&xp, &labels, &cfg) - loss_hybrid(&xm, &labels, &cfg)) / 2e-6;
            assert!(
                (fd - g[k]).abs() < 1e-6 * fd.abs().max(1.0),
                "{k}: {fd} vs {}",
                g[k]
            );
        }
    }

    #[test]
    fn all_ones_forward_equals_min_sum_decode_prefix() {
        let code = toy();
        let g = &code.graph;
        let t = 8;
        let ms =
            DecoderWeights::new(WeightScheme::new(SchemeKind::Ms, t).unwrap(), g, vec![]).unwrap();
        let unnms = DecoderWeights::initial(WeightScheme::new(SchemeKind::Unnms, t).unwrap(), g);
        let annms = DecoderWeights::initial(WeightScheme::new(SchemeKind::Annms, t).unwrap(), g);
        let snr = SnrPoint::new(2.0, &code.params).unwrap();
        let batch = transmit_all_zero(&snr, g.n_vars(), 30, 11).unwrap();
        let mut scratch = DecodeScratch::new(g);
        for f in 0..batch.batch_size {
            let llrs = batch.frame(f);
            let ms_trace = forward_unrolled(g, llrs, &ms).unwrap();
            for w in [&unnms, &annms] {
                let tr = forward_unrolled(g, llrs, w).unwrap();
                assert_eq!(tr.v2c, ms_trace.v2c);
                assert_eq!(tr.c2v, ms_trace.c2v);
                assert_eq!(tr.marginals, ms_trace.marginals);
            }
            // decode with early exit: the exit layer matches the unrolled output
            let r = crate::decode::decode(g, llrs, &ms, &DecodeConfig::default(), &mut scratch)
                .unwrap();
            assert_eq!(r.soft, ms_trace.layer_marginals(r.iterations_used - 1));
        }
    }

    #[test]
    fn stored_argmins_replay() {
        let code = toy();
        let g = &code.graph;
        let w = DecoderWeights::new(
            WeightScheme::new(SchemeKind::Snnms, 4).unwrap(),
            g,
            vec![0.1, -0.5, 0.9, -1.0],
        )
        .unwrap();
        let snr = SnrPoint::new(1.0, &code.params).unwrap();
        let batch = transmit_all_zero(&snr, g.n_vars(), 5, 3).unwrap();
        for llrs in batch.frames() {
            let tr = forward_unrolled(g, llrs, &w).unwrap();
            for l in 0..4 {
                let v = tr.layer_v2c(l);
                for (j, am) in tr.layer_argmins(l).iter().enumerate() {
                    for e in g.check_edges(j) {
                        let winner = g
                            .check_edges(j)
                            .filter(|&x| x != e)
                            .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(a.cmp(&b)))
                            .unwrap();
                        assert_eq!(am.excluding(e) as usize, winner);
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_frame_has_small_loss() {
        let code = toy();
        let g = &code.graph;
        let w = DecoderWeights::initial(WeightScheme::new(SchemeKind::Unnms, 5).unwrap(), g);
        let llrs = vec![20.0; g.n_vars()];
        let tr = forward_unrolled(g, &llrs, &w).unwrap();
        assert!(tr.layer_marginals(4).iter().all(|&x| x >= 20.0));
        assert!(loss_hybrid(&tr.marginals, &vec![0; g.n_vars()], &LossConfig::default()) < 1e-8);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradient() {
        let code = toy();
        let g = &code.graph;
        let w = DecoderWeights::initial(WeightScheme::new(SchemeKind::Annms, 3).unwrap(), g);
        let snr = SnrPoint::new(1.0, &code.params).unwrap();
        let batch = transmit_all_zero(&snr, g.n_vars(), 1, 3).unwrap();
        let tr = forward_unrolled(g, batch.frame(0), &w).unwrap();
        let mut grad = vec![0.0; w.raw().len()];
        let gx = vec![0.0; 3 * g.n_vars()];
        backward(
            g,
            batch.frame(0),
            &tr,
            &w,
            &gx,
            DEFAULT_CLIP,
            &mut grad,
            &mut BackwardScratch::default(),
        )
        .unwrap();
        assert!(grad.iter().all(|&x| x == 0.0));
    }

    fn tiny_code() -> Code {
        let h = ParityCheckMatrix::from_dense(&[
            vec![1, 1, 0, 1, 0, 0],
            vec![0, 1, 1, 0, 1, 0],
            vec![1, 0, 0, 0, 1, 1],
            vec![0, 0, 1, 1, 0, 1],
        ])
        .unwrap();
        Code::new("tiny", h, None).unwrap()
    }

    #[test]
    fn grad_check_passes_on_tiny_code() {
        let code = tiny_code();
        for kind in [SchemeKind::Unnms, SchemeKind::Snnms, SchemeKind::Annms] {
            let r = grad_check(&code, WeightScheme::new(kind, 3).unwrap(), 20, 4).unwrap();
            assert!(r.checked > 0);
            assert!(r.max_rel_error < 1e-4, "{kind}: {r:?}");
        }
    }

    #[test]
    fn shared_gradient_is_sum_of_per_edge_gradients() {
        let code = toy();
        let g = &code.graph;
        let t = 3;
        let (n, e) = (g.n_vars(), g.n_edges());
        let mut rng = stream_rng(5, 1, 0);
        let gammas: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.5)).collect();
        let snn = DecoderWeights::new(
            WeightScheme::new(SchemeKind::Snnms, t).unwrap(),
            g,
            gammas.clone(),
        )
        .unwrap();
        // ANNMS with alpha = beta = 1 and every gamma of layer l equal to the shared one
        let one = softplus_inv(1.0);
        let mut raw = Vec::new();
        for &gl in &gammas {
            raw.extend(std::iter::repeat_n(one, n + e));
            raw.extend(std::iter::repeat_n(gl, e));
        }
        let ann =
            DecoderWeights::new(WeightScheme::new(SchemeKind::Annms, t).unwrap(), g, raw).unwrap();
        let snr = SnrPoint::new(1.5, &code.params).unwrap();
        let batch = transmit_all_zero(&snr, n, 8, 9).unwrap();
        let cfg = LossConfig::default();
        let (ls, gs) = batch_raw_gradient(g, &batch, &snn, &cfg).unwrap();
        let (la, ga) = batch_raw_gradient(g, &batch, &ann, &cfg).unwrap();
        assert_eq!(ls, la);
        for l in 0..t {
            let base = l * (n + 2 * e) + n + e;
            let sum: f64 = ga[base..base + e].iter().sum();
            assert!(
                (sum - gs[l]).abs() < 1e-10 * gs[l].abs().max(1.0),
                "layer {l}: {sum} vs {}",
                gs[l]
            );
        }
    }

    #[test]
    fn zero_epoch_training_returns_initial_weights() {
        let code = toy();
        let spec = MixtureSpec::new(
            2.0,
            3.0,
            crate::traindata::MixturePoints::Discrete(3),
            code.params.clone(),
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let scheme = WeightScheme::new(SchemeKind::Snnms, 4).unwrap();
        let (w, report) = train(&code, scheme, &spec, &cfg).unwrap();
        assert_eq!(w, DecoderWeights::initial(scheme, &code.graph));
        assert!(report.steps.is_empty());
        assert_eq!(report.stop, StopReason::EndOfFeeding);
    }

    #[test]
    fn training_is_reproducible_and_parallel_invariant() {
        let code = toy();
        let spec = MixtureSpec::new(
            2.0,
            3.0,
            crate::traindata::MixturePoints::Discrete(3),
            code.params.clone(),
        )
        .unwrap();
        let cfg = TrainConfig {
            batches: 6,
            batch_size: 16,
            epochs: 2,
            seed: 17,
            ..TrainConfig::default()
        };
        let scheme = WeightScheme::new(SchemeKind::Snnms, 4).unwrap();
        let (_, a) = train(&code, scheme, &spec, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let (_, b) = pool.install(|| train(&code, scheme, &spec, &cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps.len(), 12);
        assert_eq!(a.to_jsonl().unwrap().lines().count(), 12);
    }

    #[test]
    fn plateau_rule_fires_on_flat_loss() {
        let mut p = PlateauTracker::new(PlateauRule {
            window: 2,
            rel_tol: 1e-3,
            patience: 3,
        });
        let fired: Vec<bool> = (0..8).map(|_| p.push(1.0)).collect();
        assert_eq!(
            fired,
            [false, false, false, false, false, false, false, true]
        );
        let mut p = PlateauTracker::new(PlateauRule::default());
        assert!(!(0..2000).any(|i| p.push(1.0 / (1.0 + i as f64))));
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(smooth(&[1.0, 2.0, 3.0, 4.0], 3), vec![1.5, 2.0, 3.0, 3.5]);
    }
}
