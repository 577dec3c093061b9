//! Flooding-schedule decoders: sum-product BP, min-sum and its normalized
//! and offset variants, and the weighted neural min-sum family.
//!
//! One iteration runs the variable update, then the check update, then the
//! full-sum marginals, then the syndrome gate. The kernels here are shared
//! with the unrolled trainer so inference and training agree bit for bit.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::llr_hard_decision;
use crate::error::{Error, Result};
use crate::tanner::TannerGraph;

/// Saturation bound for variable-to-check messages and marginals.
pub const DEFAULT_CLIP: f64 = 100.0;

/// Largest tanh product magnitude fed to `atanh` in the BP check update.
const BP_PRODUCT_LIMIT: f64 = 1.0 - 1e-12;

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 36.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(e^y - 1)`, the raw parameter whose softplus is `y`.
#[inline]
pub fn softplus_inv(y: f64) -> f64 {
    if y > 36.0 {
        y + (-(-y).exp_m1()).ln()
    } else {
        y.exp_m1().ln()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Correction factor of the shared-weight decoder after training settles
/// around a raw value of -1: `softplus(-1) = ln(1 + e^-1)`.
pub fn nms_factor_from_unnms() -> f64 {
    softplus(-1.0)
}

/// Which update rule and which trainable parameters a decoder uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchemeKind {
    /// Sum-product belief propagation.
    Bp,
    /// Plain min-sum.
    Ms,
    /// Normalized min-sum with a constant factor.
    Nms(f64),
    /// Offset min-sum with a constant offset.
    Oms(f64),
    /// One trainable check-side weight for the whole decoder.
    Unnms,
    /// One trainable check-side weight per iteration.
    Snnms,
    /// Per-iteration alpha per variable, beta and gamma per edge.
    Annms,
}

impl SchemeKind {
    pub fn is_trainable(self) -> bool {
        matches!(
            self,
            SchemeKind::Unnms | SchemeKind::Snnms | SchemeKind::Annms
        )
    }

    pub fn is_min_sum(self) -> bool {
        !matches!(self, SchemeKind::Bp)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::Bp => f.write_str("bp"),
            SchemeKind::Ms => f.write_str("ms"),
            SchemeKind::Nms(g) => write!(f, "nms:{g}"),
            SchemeKind::Oms(b) => write!(f, "oms:{b}"),
            SchemeKind::Unnms => f.write_str("unnms"),
            SchemeKind::Snnms => f.write_str("snnms"),
            SchemeKind::Annms => f.write_str("annms"),
        }
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    /// Accepts `bp`, `ms`, `nms:<factor>`, `oms:<offset>`, `unnms`, `snnms`,
    /// `annms`, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let value = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| {
                Error::InvalidArgument(format!("scheme {name} needs a value, e.g. {name}:0.5"))
            })?;
            let v: f64 = a
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad scheme value {a:?}")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "scheme value must be finite and >= 0, got {v}"
                )));
            }
            Ok(v)
        };
        let kind = match name {
            "bp" | "sbp" => SchemeKind::Bp,
            "ms" => SchemeKind::Ms,
            "nms" => SchemeKind::Nms(value(arg)?),
            "oms" => SchemeKind::Oms(value(arg)?),
            "unnms" => SchemeKind::Unnms,
            "snnms" => SchemeKind::Snnms,
            "annms" => SchemeKind::Annms,
            _ => return Err(Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        };
        if arg.is_some() && !matches!(kind, SchemeKind::Nms(_) | SchemeKind::Oms(_)) {
            return Err(Error::InvalidArgument(format!(
                "scheme {name} takes no value"
            )));
        }
        Ok(kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightScheme {
    pub kind: SchemeKind,
    pub t_max: usize,
}

impl WeightScheme {
    pub fn new(kind: SchemeKind, t_max: usize) -> Result<Self> {
        if t_max == 0 {
            return Err(Error::InvalidArgument("t_max must be at least 1".into()));
        }
        Ok(Self { kind, t_max })
    }

    /// Number of raw parameters for a graph with `n_vars` variables and
    /// `n_edges` edges.
    pub fn param_count(&self, n_vars: usize, n_edges: usize) -> usize {
        match self.kind {
            SchemeKind::Unnms => 1,
            SchemeKind::Snnms => self.t_max,
            SchemeKind::Annms => self.t_max * (n_vars + 2 * n_edges),
            _ => 0,
        }
    }
}

/// Weights of one unrolled layer, already passed through softplus.
#[derive(Clone, Copy, Debug)]
pub enum LayerWeights<'a> {
    /// alpha = beta = 1; every check output is scaled by `gamma`.
    Shared { gamma: f64 },
    Full {
        alpha: &'a [f64],
        beta: &'a [f64],
        gamma: &'a [f64],
    },
}

impl LayerWeights<'_> {
    #[inline]
    pub fn gamma(&self, e: usize) -> f64 {
        match self {
            LayerWeights::Shared { gamma } => *gamma,
            LayerWeights::Full { gamma, .. } => gamma[e],
        }
    }

    #[inline]
    pub fn beta(&self, e: usize) -> f64 {
        match self {
            LayerWeights::Shared { .. } => 1.0,
            LayerWeights::Full { beta, .. } => beta[e],
        }
    }
}

/// Scheme plus its unconstrained parameters; effective weights are
/// `softplus(raw)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderWeights {
    scheme: WeightScheme,
    n_vars: usize,
    n_edges: usize,
    raw: Vec<f64>,
    effective: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightFile {
    scheme: String,
    t_max: usize,
    raw: Vec<f64>,
}

impl DecoderWeights {
    pub fn new(scheme: WeightScheme, graph: &TannerGraph, raw: Vec<f64>) -> Result<Self> {
        let (n_vars, n_edges) = (graph.n_vars(), graph.n_edges());
        let want = scheme.param_count(n_vars, n_edges);
        if raw.len() != want {
            return Err(Error::Weights(format!(
                "scheme {} with t_max={} needs {want} raw parameters, got {}",
                scheme.kind,
                scheme.t_max,
                raw.len()
            )));
        }
        if let Some(i) = raw.iter().position(|x| !x.is_finite()) {
            return Err(Error::Weights(format!("raw parameter {i} is not finite")));
        }
        let effective = raw.iter().map(|&x| softplus(x)).collect();
        Ok(Self {
            scheme,
            n_vars,
            n_edges,
            raw,
            effective,
        })
    }

    /// Every effective weight starts at 1, the plain min-sum point.
    pub fn initial(scheme: WeightScheme, graph: &TannerGraph) -> Self {
        let count = scheme.param_count(graph.n_vars(), graph.n_edges());
        Self::new(scheme, graph, vec![softplus_inv(1.0); count]).expect("initial weights are valid")
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn effective(&self) -> &[f64] {
        &self.effective
    }

    pub fn set_raw(&mut self, raw: &[f64]) -> Result<()> {
        if raw.len() != self.raw.len() {
            return Err(Error::LengthMismatch {
                what: "raw weights",
                expected: self.raw.len(),
                got: raw.len(),
            });
        }
        self.raw.copy_from_slice(raw);
        for (e, &x) in self.effective.iter_mut().zip(raw) {
            *e = softplus(x);
        }
        Ok(())
    }

    /// Stride of one ANNMS layer: `N + 2E`.
    pub fn annms_stride(&self) -> usize {
        self.n_vars + 2 * self.n_edges
    }

    /// Effective weights of layer `l` (0-based).
    pub fn layer(&self, l: usize) -> LayerWeights<'_> {
        match self.scheme.kind {
            SchemeKind::Unnms => LayerWeights::Shared {
                gamma: self.effective[0],
            },
            SchemeKind::Snnms => LayerWeights::Shared {
                gamma: self.effective[l],
            },
            SchemeKind::Annms => {
                let base = l * self.annms_stride();
                let (n, e) = (self.n_vars, self.n_edges);
                LayerWeights::Full {
                    alpha: &self.effective[base..base + n],
                    beta: &self.effective[base + n..base + n + e],
                    gamma: &self.effective[base + n + e..base + n + 2 * e],
                }
            }
            SchemeKind::Nms(g) => LayerWeights::Shared { gamma: g },
            SchemeKind::Ms | SchemeKind::Oms(_) | SchemeKind::Bp => {
                LayerWeights::Shared { gamma: 1.0 }
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&WeightFile {
            scheme: self.scheme.kind.to_string(),
            t_max: self.scheme.t_max,
            raw: self.raw.clone(),
        })?)
    }

    pub fn from_json(text: &str, graph: &TannerGraph) -> Result<Self> {
        let file: WeightFile = serde_json::from_str(text)?;
        let scheme = WeightScheme::new(file.scheme.parse()?, file.t_max)?;
        Self::new(scheme, graph, file.raw)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, graph: &TannerGraph) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, graph)
    }
}

#[inline(always)]
fn clip(x: f64, c: f64) -> f64 {
    // NaN falls through untouched so divergence stays visible.
    if x > c {
        c
    } else if x < -c {
        -c
    } else {
        x
    }
}

/// Variable-to-check messages: `alpha_i b_i + sum_{other edges} beta c2v`,
/// computed as the node total minus the edge's own term, then clipped.
pub fn variable_update(
    graph: &TannerGraph,
    llrs: &[f64],
    c2v_prev: &[f64],
    w: &LayerWeights<'_>,
    clip_at: f64,
    v2c: &mut [f64],
) {
    match w {
        LayerWeights::Shared { .. } => {
            for (i, &b) in llrs.iter().enumerate() {
                let edges = graph.var_edges(i);
                let total = edges.iter().fold(b, |acc, &e| acc + c2v_prev[e as usize]);
                for &e in edges {
                    let e = e as usize;
                    v2c[e] = clip(total - c2v_prev[e], clip_at);
                }
            }
        }
        LayerWeights::Full { alpha, beta, .. } => {
            for (i, &b) in llrs.iter().enumerate() {
                let edges = graph.var_edges(i);
                let total = edges.iter().fold(alpha[i] * b, |acc, &e| {
                    acc + beta[e as usize] * c2v_prev[e as usize]
                });
                for &e in edges {
                    let e = e as usize;
                    v2c[e] = clip(total - beta[e] * c2v_prev[e], clip_at);
                }
            }
        }
    }
}

/// Sentinel in [`CheckArgmin::second`] for degree-1 checks.
pub const NO_EDGE: u32 = u32::MAX;

/// The two smallest-magnitude incoming edges of a check node. Ties resolve
/// to the lowest edge id.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CheckArgmin {
    pub first: u32,
    pub second: u32,
}

impl CheckArgmin {
    /// The edge holding the minimum over the check's edges other than `e`.
    #[inline]
    pub fn excluding(&self, e: usize) -> u32 {
        if e as u32 == self.first {
            self.second
        } else {
            self.first
        }
    }
}

/// Min-sum check-to-variable messages: product of the other signs times
/// `gamma_e` times the smallest other magnitude (less `offset`, floored at
/// zero). Degree-1 checks emit 0.
pub fn check_update_ms(
    graph: &TannerGraph,
    v2c: &[f64],
    w: &LayerWeights<'_>,
    offset: f64,
    c2v: &mut [f64],
    mut argmins: Option<&mut [CheckArgmin]>,
) {
    for j in 0..graph.n_checks() {
        let edges = graph.check_edges(j);
        if edges.len() < 2 {
            for e in edges.clone() {
                c2v[e] = 0.0;
            }
            if let Some(a) = argmins.as_deref_mut() {
                a[j] = CheckArgmin {
                    first: edges.start as u32,
                    second: NO_EDGE,
                };
            }
            continue;
        }
        let x = &v2c[edges.clone()];
        let (sign_bits, min1, min2) = two_min_abs(x);
        let k1 = x.iter().position(|v| v.abs() == min1).unwrap_or(0);
        let idx1 = edges.start + k1;
        let sub = |mag: f64| {
            if offset != 0.0 {
                (mag - offset).max(0.0)
            } else {
                mag
            }
        };
        let (m1, m2) = (sub(min1), sub(min2));
        let out = &mut c2v[edges.clone()];
        match w {
            LayerWeights::Shared { gamma } => {
                let (o1, o2) = (gamma * m1, gamma * m2);
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = f64::from_bits(o1.to_bits() ^ sign_bits ^ neg_bit(v));
                }
                out[k1] = f64::from_bits(o2.to_bits() ^ sign_bits ^ neg_bit(x[k1]));
            }
            LayerWeights::Full { gamma, .. } => {
                for ((o, &v), &g) in out.iter_mut().zip(x).zip(&gamma[edges.clone()]) {
                    *o = f64::from_bits((g * m1).to_bits() ^ sign_bits ^ neg_bit(v));
                }
                out[k1] = f64::from_bits((gamma[idx1] * m2).to_bits() ^ sign_bits ^ neg_bit(x[k1]));
            }
        }
        if let Some(a) = argmins.as_deref_mut() {
            let k2 = (0..x.len())
                .find(|&k| k != k1 && x[k].abs() == min2)
                .unwrap_or(k1);
            a[j] = CheckArgmin {
                first: idx1 as u32,
                second: (edges.start + k2) as u32,
            };
        }
    }
}

#[inline(always)]
fn fmin(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

#[inline(always)]
fn fmax(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

/// Sign parity bit and the two smallest magnitudes (equal when tied) of
/// `xs`, in independent lanes so the loop vectorizes.
#[inline]
fn two_min_abs(xs: &[f64]) -> (u64, f64, f64) {
    const L: usize = 4;
    let mut m1 = [f64::INFINITY; L];
    let mut m2 = [f64::INFINITY; L];
    let mut sg = [0u64; L];
    let chunks = xs.chunks_exact(L);
    let tail = chunks.remainder();
    for c in chunks {
        for k in 0..L {
            let bits = c[k].to_bits();
            sg[k] ^= neg_bit(c[k]);
            let mag = f64::from_bits(bits & !(1 << 63));
            m2[k] = fmin(m2[k], fmax(m1[k], mag));
            m1[k] = fmin(m1[k], mag);
        }
    }
    for (k, &v) in tail.iter().enumerate() {
        sg[k] ^= neg_bit(v);
        let mag = v.abs();
        m2[k] = fmin(m2[k], fmax(m1[k], mag));
        m1[k] = fmin(m1[k], mag);
    }
    let (mut a1, mut a2, mut s) = (m1[0], m2[0], sg[0]);
    for k in 1..L {
        a2 = fmin(fmin(a2, m2[k]), fmax(a1, m1[k]));
        a1 = fmin(a1, m1[k]);
        s ^= sg[k];
    }
    (s, a1, a2)
}

/// Sign bit of a negative value; zero (of either sign) counts as positive.
#[inline]
fn neg_bit(x: f64) -> u64 {
    u64::from(x < 0.0) << 63
}

/// Sum-product check update `2 atanh(prod_{others} tanh(x / 2))` with
/// prefix/suffix products; the product magnitude is held below `1 - 1e-12`.
pub fn check_update_bp(graph: &TannerGraph, v2c: &[f64], c2v: &mut [f64], scratch: &mut Vec<f64>) {
    for j in 0..graph.n_checks() {
        let edges = graph.check_edges(j);
        let d = edges.len();
        if d < 2 {
            for e in edges {
                c2v[e] = 0.0;
            }
            continue;
        }
        scratch.clear();
        scratch.extend(v2c[edges.clone()].iter().map(|x| (0.5 * x).tanh()));
        // c2v temporarily holds the suffix products
        let base = edges.start;
        let mut suffix = 1.0;
        for k in (0..d).rev() {
            c2v[base + k] = suffix;
            suffix *= scratch[k];
        }
        let mut prefix = 1.0;
        for k in 0..d {
            let p = (prefix * c2v[base + k]).clamp(-BP_PRODUCT_LIMIT, BP_PRODUCT_LIMIT);
            c2v[base + k] = 2.0 * p.atanh();
            prefix *= scratch[k];
        }
    }
}

/// Full-sum soft output `b_i + sum_{all edges} c2v`, clipped.
pub fn marginals(graph: &TannerGraph, llrs: &[f64], c2v: &[f64], clip_at: f64, out: &mut [f64]) {
    for (i, (&b, x)) in llrs.iter().zip(out.iter_mut()).enumerate() {
        let s = graph
            .var_edges(i)
            .iter()
            .fold(b, |acc, &e| acc + c2v[e as usize]);
        *x = clip(s, clip_at);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub clip: f64,
    /// Stop as soon as the hard decision satisfies every check.
    pub early_exit: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            clip: DEFAULT_CLIP,
            early_exit: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub hard: Vec<u8>,
    pub soft: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Reusable per-frame buffers, owned by the caller.
#[derive(Clone, Debug, Default)]
pub struct DecodeScratch {
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    tanh: Vec<f64>,
}

impl DecodeScratch {
    pub fn new(graph: &TannerGraph) -> Self {
        Self {
            v2c: vec![0.0; graph.n_edges()],
            c2v: vec![0.0; graph.n_edges()],
            tanh: Vec::new(),
        }
    }

    /// Check-to-variable messages of the last iteration run.
    pub fn c2v(&self) -> &[f64] {
        &self.c2v
    }

    /// Variable-to-check messages of the last iteration run.
    pub fn v2c(&self) -> &[f64] {
        &self.v2c
    }
}

/// One flooding iteration; `c2v` holds the previous layer's messages on
/// entry and this layer's on exit.
pub fn run_iteration(
    graph: &TannerGraph,
    llrs: &[f64],
    weights: &DecoderWeights,
    layer: usize,
    clip_at: f64,
    scratch: &mut DecodeScratch,
    argmins: Option<&mut [CheckArgmin]>,
) {
    let w = weights.layer(layer);
    variable_update(graph, llrs, &scratch.c2v, &w, clip_at, &mut scratch.v2c);
    match weights.scheme().kind {
        SchemeKind::Bp => check_update_bp(graph, &scratch.v2c, &mut scratch.c2v, &mut scratch.tanh),
        SchemeKind::Oms(offset) => {
            check_update_ms(graph, &scratch.v2c, &w, offset, &mut scratch.c2v, argmins)
        }
        _ => check_update_ms(graph, &scratch.v2c, &w, 0.0, &mut scratch.c2v, argmins),
    }
}

/// Decodes one frame of channel LLRs.
pub fn decode(
    graph: &TannerGraph,
    llrs: &[f64],
    weights: &DecoderWeights,
    cfg: &DecodeConfig,
    scratch: &mut DecodeScratch,
) -> Result<DecodeResult> {
    let n = graph.n_vars();
    if llrs.len() != n {
        return Err(Error::LengthMismatch {
            what: "llrs",
            expected: n,
            got: llrs.len(),
        });
    }
    if scratch.c2v.len() != graph.n_edges() {
        *scratch = DecodeScratch::new(graph);
    }
    scratch.c2v.fill(0.0);
    let mut soft = vec![0.0; n];
    let mut hard = vec![0u8; n];
    let t_max = weights.scheme().t_max;
    let mut converged = false;
    let mut used = t_max;
    for l in 0..t_max {
        run_iteration(graph, llrs, weights, l, cfg.clip, scratch, None);
        marginals(graph, llrs, &scratch.c2v, cfg.clip, &mut soft);
        if soft.iter().any(|x| x.is_nan()) || scratch.c2v.iter().any(|x| x.is_nan()) {
            return Err(Error::Divergence { iteration: l + 1 });
        }
        for (h, &x) in hard.iter_mut().zip(&soft) {
            *h = llr_hard_decision(x);
        }
        converged = graph.syndrome_is_zero(&hard);
        if converged && cfg.early_exit {
            used = l + 1;
            break;
        }
    }
    Ok(DecodeResult {
        hard,
        soft,
        iterations_used: used,
        converged,
    })
}

/// A graph, weights, and configuration bundled for repeated decoding.
#[derive(Clone, Debug)]
pub struct Decoder<'a> {
    pub graph: &'a TannerGraph,
    pub weights: &'a DecoderWeights,
    pub config: DecodeConfig,
}

impl<'a> Decoder<'a> {
    pub fn new(graph: &'a TannerGraph, weights: &'a DecoderWeights) -> Self {
        Self {
            graph,
            weights,
            config: DecodeConfig::default(),
        }
    }

    pub fn with_config(mut self, config: DecodeConfig) -> Self {
        self.config = config;
        self
    }

    pub fn decode(&self, llrs: &[f64]) -> Result<DecodeResult> {
        let mut scratch = DecodeScratch::new(self.graph);
        self.decode_with(llrs, &mut scratch)
    }

    pub fn decode_with(&self, llrs: &[f64], scratch: &mut DecodeScratch) -> Result<DecodeResult> {
        decode(self.graph, llrs, self.weights, &self.config, scratch)
    }
}
