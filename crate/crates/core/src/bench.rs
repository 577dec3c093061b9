//! Monte-Carlo BER/FER evaluation, operation counts, and result files.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{all_zero_frame, stream_rng, SnrPoint};
use crate::decode::{decode, DecodeConfig, DecodeScratch, DecoderWeights, SchemeKind};
use crate::error::{Error, Result};
use crate::tanner::{Code, CodeParams};

/// Stream domain of evaluation frames; the SNR index is added to it.
const DOMAIN_EVAL: u64 = 0x4556_414c_0000_0000; // "EVAL"

/// Frames per parallel round start at `EVAL_CHUNK_MIN` and double up to
/// `EVAL_CHUNK_MAX`, so low-SNR points do not overshoot their error quota
/// by much. Results do not depend on the chunking.
const EVAL_CHUNK_MIN: u64 = 64;
const EVAL_CHUNK_MAX: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub snr_points_db: Vec<f64>,
    /// Stop a point once this many frames are in error.
    pub min_frame_errors: u64,
    /// Safety cap per point; reaching it first marks the point censored.
    pub max_frames: u64,
    pub seed: u64,
    pub decode: DecodeConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            snr_points_db: Vec::new(),
            min_frame_errors: 100,
            max_frames: 10_000_000,
            seed: 0,
            decode: DecodeConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_points_db.is_empty() {
            return Err(Error::InvalidArgument("no SNR points to evaluate".into()));
        }
        if self.min_frame_errors == 0 || self.max_frames == 0 {
            return Err(Error::InvalidArgument(
                "min_frame_errors and max_frames must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn snr_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    #[serde(rename = "frames")]
    pub frames_run: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    #[serde(rename = "mean_iters")]
    pub mean_iterations: f64,
    /// The frame cap was hit before the error quota.
    pub censored: bool,
}

#[derive(Clone, Copy, Default)]
struct FrameOutcome {
    bit_errors: u32,
    iterations: u32,
}

/// Decodes all-zeros frames at each SNR until `min_frame_errors` frame
/// errors or `max_frames` frames. Frame `f` at SNR index `s` always sees the
/// same noise, so results do not depend on the worker count.
pub fn monte_carlo_eval(
    code: &Code,
    weights: &DecoderWeights,
    cfg: &EvalConfig,
) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    cfg.snr_points_db
        .iter()
        .enumerate()
        .map(|(s, &db)| eval_point(code, weights, cfg, s as u64, db))
        .collect()
}

fn eval_point(
    code: &Code,
    weights: &DecoderWeights,
    cfg: &EvalConfig,
    index: u64,
    db: f64,
) -> Result<CurvePoint> {
    let snr = SnrPoint::new(db, &code.params)?;
    let graph = &code.graph;
    let n = graph.n_vars();
    let domain = DOMAIN_EVAL + index;
    let (mut frames, mut bit_errors, mut frame_errors, mut iterations) = (0u64, 0u64, 0u64, 0u64);
    let mut chunk = EVAL_CHUNK_MIN;
    'outer: while frames < cfg.max_frames {
        let end = (frames + chunk).min(cfg.max_frames);
        chunk = (chunk * 2).min(EVAL_CHUNK_MAX);
        let outcomes: Vec<Result<FrameOutcome>> = (frames..end)
            .into_par_iter()
            .map_init(
                || (DecodeScratch::new(graph), vec![0.0; n]),
                |(scratch, llrs), f| {
                    let mut rng = stream_rng(cfg.seed, domain, f);
                    all_zero_frame(snr.sigma2, &mut rng, llrs);
                    let r = decode(graph, llrs, weights, &cfg.decode, scratch)?;
                    Ok(FrameOutcome {
                        bit_errors: r.hard.iter().map(|&b| u32::from(b)).sum(),
                        iterations: r.iterations_used as u32,
                    })
                },
            )
            .collect();
        // sequential scan so the stopping frame is exact
        for o in outcomes {
            let o = o?;
            frames += 1;
            bit_errors += u64::from(o.bit_errors);
            frame_errors += u64::from(o.bit_errors > 0);
            iterations += u64::from(o.iterations);
            if frame_errors >= cfg.min_frame_errors {
                break 'outer;
            }
        }
    }
    Ok(CurvePoint {
        snr_db: db,
        frames_run: frames,
        bit_errors,
        frame_errors,
        ber: bit_errors as f64 / (frames * n as u64) as f64,
        fer: frame_errors as f64 / frames as f64,
        mean_iterations: iterations as f64 / frames as f64,
        censored: frame_errors < cfg.min_frame_errors,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub decoder: String,
    pub additions_per_iter: u64,
    pub multiplications_per_iter: u64,
    pub comparisons_per_iter: u64,
    /// tanh/atanh evaluations.
    pub hyperbolic_per_iter: u64,
    /// Euclidean projections onto the parity polytope.
    pub projections_per_iter: u64,
}

/// Per-iteration operation counts with `dv`, `dc` the average column and
/// row weights. Min-sum family additions are `N (dv + dc) + 2 M dc`.
pub fn complexity_count(code: &CodeParams, kind: SchemeKind) -> ComplexityReport {
    let (n, m) = (code.n as f64, code.m as f64);
    let (dv, dc) = (code.avg_col_weight, code.avg_row_weight);
    let e = code.edges as u64;
    let count = |x: f64| x.round() as u64;
    let ms_adds = count(n * (dv + dc) + 2.0 * m * dc);
    let mut r = ComplexityReport {
        decoder: kind.to_string(),
        additions_per_iter: ms_adds,
        multiplications_per_iter: 0,
        comparisons_per_iter: 2 * e,
        hyperbolic_per_iter: 0,
        projections_per_iter: 0,
    };
    match kind {
        SchemeKind::Ms | SchemeKind::Oms(_) => {}
        SchemeKind::Nms(_) | SchemeKind::Unnms | SchemeKind::Snnms => {
            r.multiplications_per_iter = e
        }
        SchemeKind::Annms => r.multiplications_per_iter = code.n as u64 + 2 * e,
        SchemeKind::Bp => {
            r.additions_per_iter = count(n * (dv + dc));
            r.comparisons_per_iter = 0;
            r.hyperbolic_per_iter = count(e as f64 * (dc - 1.0));
            r.multiplications_per_iter = count(e as f64 * (dc - 2.0).max(0.0));
        }
    }
    r
}

/// Published per-iteration cost of ADMM decoding, for comparison only:
/// `N (dv + 1) + 3 M dc` additions, `N` multiplications, `N + M` projections.
pub fn admm_reference(code: &CodeParams) -> ComplexityReport {
    let (n, m) = (code.n as f64, code.m as f64);
    ComplexityReport {
        decoder: "admm (reference)".into(),
        additions_per_iter: (n * (code.avg_col_weight + 1.0) + 3.0 * m * code.avg_row_weight)
            .round() as u64,
        multiplications_per_iter: code.n as u64,
        comparisons_per_iter: 0,
        hyperbolic_per_iter: 0,
        projections_per_iter: (code.n + code.m) as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidArgument(format!(
                "unknown format {s:?}, expected csv or json"
            ))),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

pub const CSV_HEADER: &str = "snr_db,frames,bit_errors,frame_errors,ber,fer,mean_iters,censored";

pub fn to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.snr_db,
            p.frames_run,
            p.bit_errors,
            p.frame_errors,
            p.ber,
            p.fer,
            p.mean_iterations,
            p.censored
        );
    }
    out
}

pub fn to_json(points: &[CurvePoint]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(points)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Vec<CurvePoint>> {
    Ok(serde_json::from_str(text)?)
}

pub fn render(points: &[CurvePoint], format: OutputFormat) -> Result<String> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no curve points to emit".into()));
    }
    match format {
        OutputFormat::Csv => Ok(to_csv(points)),
        OutputFormat::Json => to_json(points),
    }
}

pub fn emit_results(points: &[CurvePoint], format: OutputFormat, dest: &Path) -> Result<()> {
    let text = render(points, format)?;
    std::fs::write(dest, text).map_err(|e| Error::io(dest, e))
}

/// One decoder's curve in a comparison run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledCurve {
    pub label: String,
    pub decoder: String,
    pub t_max: usize,
    pub points: Vec<CurvePoint>,
}

/// Several curves in one document. CSV gains a leading `label` column.
pub fn render_curves(curves: &[LabeledCurve], format: OutputFormat) -> Result<String> {
    if curves.iter().all(|c| c.points.is_empty()) {
        return Err(Error::InvalidArgument("no curve points to emit".into()));
    }
    match format {
        OutputFormat::Csv => {
            let mut out = format!("label,{CSV_HEADER}\n");
            for c in curves {
                for line in to_csv(&c.points).lines().skip(1) {
                    let _ = writeln!(out, "{},{line}", csv_field(&c.label));
                }
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(curves)?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A published BER or FER curve kept for plot overlays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve {
    pub code: String,
    pub decoder: String,
    pub metric: String,
    pub iterations: Option<u32>,
    /// `external` for literature curves, `reported` for published results
    /// of the weighted decoders and their baselines.
    pub source: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct ReferenceFile {
    curves: Vec<ReferenceCurve>,
}

/// Raw text of the bundled reference-curve file.
pub const REFERENCE_CURVES_JSON: &str = include_str!("../data/reference_curves.json");

pub fn reference_curves() -> Vec<ReferenceCurve> {
    serde_json::from_str::<ReferenceFile>(REFERENCE_CURVES_JSON)
        .expect("bundled reference curves parse")
        .curves
}

/// Value of a reference curve at exactly `snr_db`, if it was sampled there.
pub fn reference_value(
    code: &str,
    decoder: &str,
    metric: &str,
    iterations: u32,
    snr_db: f64,
) -> Option<f64> {
    reference_curves()
        .into_iter()
        .find(|c| {
            c.code == code
                && c.decoder == decoder
                && c.metric == metric
                && c.iterations == Some(iterations)
        })?
        .points
        .into_iter()
        .find(|(x, _)| (x - snr_db).abs() < 1e-9)
        .map(|(_, y)| y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes;
    use crate::decode::WeightScheme;
    use crate::tanner::ParityCheckMatrix;

    fn params(n: usize, m: usize, e: usize) -> CodeParams {
        CodeParams {
            n,
            m,
            k: n.saturating_sub(m).max(1),
            rank: m,
            edges: e,
            avg_col_weight: e as f64 / n as f64,
            avg_row_weight: e as f64 / m as f64,
        }
    }

    #[test]
    fn complexity_of_the_1023_code() {
        let b = params(1023, 1023, 32736);
        let r = complexity_count(&b, SchemeKind::Unnms);
        assert_eq!(r.additions_per_iter, 130_944);
        let a = admm_reference(&b);
        assert_eq!(
            (
                a.additions_per_iter,
                a.multiplications_per_iter,
                a.projections_per_iter
            ),
            (131_967, 1023, 2046)
        );
        let bp = complexity_count(&b, SchemeKind::Bp);
        assert_eq!(bp.hyperbolic_per_iter, 32736 * 31);
    }

    #[test]
    fn complexity_of_a_single_edge() {
        // N (dv + dc) + 2 M dc with N = M = dv = dc = 1
        let r = complexity_count(&params(1, 1, 1), SchemeKind::Ms);
        assert_eq!(r.additions_per_iter, 4);
    }

    fn point(snr: f64, censored: bool) -> CurvePoint {
        CurvePoint {
            snr_db: snr,
            frames_run: 1000,
            bit_errors: 37,
            frame_errors: 5,
            ber: 37.0 / 96000.0,
            fer: 0.005,
            mean_iterations: 2.125,
            censored,
        }
    }

    #[test]
    fn csv_and_json_output() {
        let csv = to_csv(&[point(3.0, false)]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("3,1000,37,5,"));
        assert!(lines[1].ends_with(",2.125,false"));

        let pts = vec![point(3.0, false), point(3.5, true)];
        let json = to_json(&pts).unwrap();
        let back = from_json(&json).unwrap();
        assert_eq!(back, pts);
        assert_eq!(to_json(&back).unwrap(), json);
        assert!(json.contains("\"censored\": true"));
        assert!(json.contains("\"mean_iters\""));
        assert!(render(&[], OutputFormat::Csv).is_err());
    }

    #[test]
    fn labeled_curves_keep_their_labels() {
        let curves = vec![
            LabeledCurve {
                label: "a,b".into(),
                decoder: "ms".into(),
                t_max: 5,
                points: vec![point(3.0, false)],
            },
            LabeledCurve {
                label: "nms".into(),
                decoder: "nms:0.75".into(),
                t_max: 5,
                points: vec![point(3.0, false), point(3.5, true)],
            },
        ];
        let csv = render_curves(&curves, OutputFormat::Csv).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], format!("label,{CSV_HEADER}"));
        assert!(lines[1].starts_with("\"a,b\",3,"));
        assert!(lines[3].starts_with("nms,3.5,"));
        let json = render_curves(&curves, OutputFormat::Json).unwrap();
        let back: Vec<LabeledCurve> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, curves);
    }

    #[test]
    fn snr_grid_endpoints() {
        let g = snr_grid(2.8, 3.6, 9);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 2.8);
        assert_eq!(g[8], 3.6);
        assert!((g[4] - 3.2).abs() < 1e-12);
        assert_eq!(snr_grid(1.0, 2.0, 1), vec![1.0]);
    }

    #[test]
    fn noiseless_point_is_error_free_and_censored() {
        let code = codes::builtin("reg96").unwrap();
        let w = DecoderWeights::new(
            WeightScheme::new(SchemeKind::Ms, 10).unwrap(),
            &code.graph,
            vec![],
        )
        .unwrap();
        let cfg = EvalConfig {
            snr_points_db: vec![60.0],
            max_frames: 500,
            ..EvalConfig::default()
        };
        let p = &monte_carlo_eval(&code, &w, &cfg).unwrap()[0];
        assert_eq!((p.frames_run, p.bit_errors, p.frame_errors), (500, 0, 0));
        assert_eq!(p.mean_iterations, 1.0);
        assert!(p.censored);
    }

    #[test]
    fn stopping_rule_and_counters() {
        let code = codes::builtin("reg96").unwrap();
        let w = DecoderWeights::new(
            WeightScheme::new(SchemeKind::Ms, 5).unwrap(),
            &code.graph,
            vec![],
        )
        .unwrap();
        let cfg = EvalConfig {
            snr_points_db: vec![1.0, 2.0],
            min_frame_errors: 30,
            max_frames: 100_000,
            seed: 3,
            ..EvalConfig::default()
        };
        let pts = monte_carlo_eval(&code, &w, &cfg).unwrap();
        for p in &pts {
            assert!(!p.censored);
            assert_eq!(p.frame_errors, 30);
            assert!(p.bit_errors >= p.frame_errors);
            assert_eq!(p.ber, p.bit_errors as f64 / (p.frames_run * 96) as f64);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        assert_eq!(
            pool.install(|| monte_carlo_eval(&code, &w, &cfg)).unwrap(),
            pts
        );
    }

    #[test]
    fn degenerate_code_runs() {
        let h = ParityCheckMatrix::from_dense(&[vec![1, 1]]).unwrap();
        let code = Code::new("rep2", h, None).unwrap();
        let w = DecoderWeights::new(
            WeightScheme::new(SchemeKind::Bp, 3).unwrap(),
            &code.graph,
            vec![],
        )
        .unwrap();
        let cfg = EvalConfig {
            snr_points_db: vec![0.0],
            min_frame_errors: 5,
            max_frames: 10_000,
            ..EvalConfig::default()
        };
        let p = &monte_carlo_eval(&code, &w, &cfg).unwrap()[0];
        assert_eq!(p.frame_errors, 5);
    }

    #[test]
    fn reference_curves_load() {
        let curves = reference_curves();
        assert!(curves
            .iter()
            .any(|c| c.source == "external" && c.decoder == "Msr"));
        assert!(curves.iter().all(|c| !c.points.is_empty()));
        let ms = reference_value("eg1023", "MS", "ber", 50, 3.4).unwrap();
        assert!((ms - 0.0498).abs() < 1e-4);
    }
}
