//! Command-line front end: code inspection, training-data statistics,
//! training, decoding, evaluation sweeps, code generation and operation
//! counts.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for runtime
//! failures (including a training run that diverged).

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use nnms::bench::{self, EvalConfig, LabeledCurve, OutputFormat};
use nnms::codes;
use nnms::decode::{DecodeConfig, Decoder, DecoderWeights, SchemeKind, WeightScheme};
use nnms::learn::{self, DataSource, PlateauRule, StopReason, TrainConfig};
use nnms::tanner::{write_alist, Code};
use nnms::traindata::{initial_ber, mixture_moments, MixturePoints, MixtureSpec};
use nnms::Error;

#[derive(Parser, Debug)]
#[command(
    name = "nnms",
    version,
    about = "LDPC min-sum decoders with trainable weights"
)]
struct Cli {
    /// Worker threads for parallel decoding and training (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Flat TOML file of option values; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the dimensions of a code.
    Info(Opts),
    /// Moments of the training-data mixture and the initial BER, as JSON.
    DatagenStats(Opts),
    /// Train a weighted min-sum decoder.
    Train(Opts),
    /// Monte-Carlo BER/FER sweep of one or more decoders.
    Eval(Opts),
    /// Decode LLR frames read from a text file, one frame per line.
    Decode(DecodeOpts),
    /// Write the parity-check matrix of a generated code as alist.
    GenCode(GenOpts),
    /// Per-iteration operation counts for each decoder.
    Complexity(Opts),
}

/// Options shared by most commands. Each command reads the ones it needs.
#[derive(Args, Debug, Default, Clone)]
struct Opts {
    /// Code as an alist or JSON sidecar path, or `builtin:NAME`.
    #[arg(long)]
    code: Option<String>,
    /// Decoder scheme: bp, ms, nms:F, oms:B, unnms, snnms, annms. Repeatable for eval and complexity.
    #[arg(long)]
    scheme: Vec<String>,
    /// Unrolled or maximum iterations.
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    snr_lo: Option<f64>,
    #[arg(long)]
    snr_hi: Option<f64>,
    /// Evaluation grid size, or mixture points I for training data.
    #[arg(long)]
    snr_points: Option<usize>,
    /// Use the continuous-limit mixture instead of I discrete points.
    #[arg(long)]
    continuous: bool,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Minibatches per epoch.
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (train) or file (eval, complexity); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Weight file to evaluate. Repeatable.
    #[arg(long)]
    weights: Vec<PathBuf>,
    #[arg(long)]
    min_frame_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Training data: approx (single matched normal) or blended.
    #[arg(long)]
    data: Option<String>,
    /// Steps between weight checkpoints during training.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Run every step even if the loss plateaus.
    #[arg(long)]
    no_plateau: bool,
    /// Disable syndrome-based early exit when decoding.
    #[arg(long)]
    no_early_exit: bool,
}

#[derive(Args, Debug, Clone)]
struct DecodeOpts {
    #[command(flatten)]
    common: Opts,
    /// Text file of LLRs, whitespace separated, one frame per line; `-` reads stdin.
    #[arg(long)]
    llrs: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct GenOpts {
    /// eg (Euclidean geometry), regular (random (dv,dc)-regular) or tree.
    #[arg(long)]
    family: String,
    /// Geometry order s of EG(2, 2^s).
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dv: Option<usize>,
    #[arg(long)]
    dc: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Values read from `--config`. Keys mirror the long flags with
/// underscores.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    code: Option<String>,
    scheme: Option<SchemeList>,
    t_max: Option<usize>,
    snr_lo: Option<f64>,
    snr_hi: Option<f64>,
    snr_points: Option<usize>,
    continuous: Option<bool>,
    batch_size: Option<usize>,
    batches: Option<usize>,
    epochs: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    weights: Option<Vec<PathBuf>>,
    min_frame_errors: Option<u64>,
    max_frames: Option<u64>,
    format: Option<String>,
    data: Option<String>,
    checkpoint_every: Option<usize>,
    plateau: Option<bool>,
    early_exit: Option<bool>,
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum SchemeList {
    One(String),
    Many(Vec<String>),
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            toml::from_str::<FileConfig>(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    if let Some(w) = cli.workers.or(file.workers) {
        if w == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Info(o) => cmd_info(&merge(o, &file)),
        Command::DatagenStats(o) => cmd_datagen_stats(&merge(o, &file)),
        Command::Train(o) => cmd_train(&merge(o, &file)),
        Command::Eval(o) => cmd_eval(&merge(o, &file)),
        Command::Decode(d) => cmd_decode(&merge(d.common, &file), &d.llrs),
        Command::GenCode(g) => cmd_gen_code(&g),
        Command::Complexity(o) => cmd_complexity(&merge(o, &file)),
    }
}

/// Fills every option not given on the command line from the file.
fn merge(mut o: Opts, f: &FileConfig) -> Opts {
    o.code = o.code.or_else(|| f.code.clone());
    if o.scheme.is_empty() {
        o.scheme = match &f.scheme {
            Some(SchemeList::One(s)) => vec![s.clone()],
            Some(SchemeList::Many(v)) => v.clone(),
            None => Vec::new(),
        };
    }
    o.t_max = o.t_max.or(f.t_max);
    o.snr_lo = o.snr_lo.or(f.snr_lo);
    o.snr_hi = o.snr_hi.or(f.snr_hi);
    o.snr_points = o.snr_points.or(f.snr_points);
    o.continuous = o.continuous || f.continuous.unwrap_or(false);
    o.batch_size = o.batch_size.or(f.batch_size);
    o.batches = o.batches.or(f.batches);
    o.epochs = o.epochs.or(f.epochs);
    o.seed = o.seed.or(f.seed);
    o.out = o.out.or_else(|| f.out.clone());
    if o.weights.is_empty() {
        o.weights = f.weights.clone().unwrap_or_default();
    }
    o.min_frame_errors = o.min_frame_errors.or(f.min_frame_errors);
    o.max_frames = o.max_frames.or(f.max_frames);
    o.format = o.format.or_else(|| f.format.clone());
    o.data = o.data.or_else(|| f.data.clone());
    o.checkpoint_every = o.checkpoint_every.or(f.checkpoint_every);
    o.no_plateau = o.no_plateau || f.plateau == Some(false);
    o.no_early_exit = o.no_early_exit || f.early_exit == Some(false);
    o
}

fn load_code(o: &Opts) -> CliResult<Code> {
    let spec = o
        .code
        .as_deref()
        .ok_or_else(|| usage("--code is required"))?;
    match spec.strip_prefix("builtin:") {
        Some(name) => codes::builtin(name).map_err(|e| usage(e.to_string())),
        None => Ok(Code::load(Path::new(spec))?),
    }
}

fn parse_scheme(s: &str) -> CliResult<SchemeKind> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn single_scheme(o: &Opts) -> CliResult<SchemeKind> {
    match o.scheme.as_slice() {
        [s] => parse_scheme(s),
        [] => Err(usage("--scheme is required")),
        _ => Err(usage("give exactly one --scheme")),
    }
}

fn format_of(o: &Opts) -> CliResult<OutputFormat> {
    match &o.format {
        Some(f) => f.parse().map_err(|e: Error| usage(e.to_string())),
        None => Ok(OutputFormat::Csv),
    }
}

fn mixture(o: &Opts, code: &Code) -> CliResult<MixtureSpec> {
    let lo = o.snr_lo.ok_or_else(|| usage("--snr-lo is required"))?;
    let hi = o.snr_hi.unwrap_or(lo);
    let points = if o.continuous {
        MixturePoints::Continuous
    } else {
        MixturePoints::Discrete(o.snr_points.unwrap_or(if hi > lo { 5 } else { 1 }))
    };
    MixtureSpec::new(lo, hi, points, code.params.clone()).map_err(|e| usage(e.to_string()))
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            fs::write(path, text).map_err(|e| io_err(path, e))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn fmt_degree(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x}")
    } else {
        format!("{x:.3}")
    }
}

fn cmd_info(o: &Opts) -> CliResult<ExitCode> {
    let code = load_code(o)?;
    let p = &code.params;
    println!(
        "N={} M={} K={} E={} dv={} dc={} rank={}",
        p.n,
        p.m,
        p.k,
        p.edges,
        fmt_degree(p.avg_col_weight),
        fmt_degree(p.avg_row_weight),
        p.rank
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DatagenStats {
    mu_a: f64,
    sigma2_a: f64,
    initial_ber: f64,
    snr_lo: f64,
    snr_hi: f64,
    /// Number of mixture points, or null for the continuous limit.
    points: Option<usize>,
}

fn cmd_datagen_stats(o: &Opts) -> CliResult<ExitCode> {
    let code = load_code(o)?;
    let spec = mixture(o, &code)?;
    let m = mixture_moments(&spec)?;
    let stats = DatagenStats {
        mu_a: m.mu_a,
        sigma2_a: m.sigma2_a,
        initial_ber: initial_ber(&m)?,
        snr_lo: spec.snr_lo_db,
        snr_hi: spec.snr_hi_db,
        points: match spec.points {
            MixturePoints::Discrete(i) => Some(i),
            MixturePoints::Continuous => None,
        },
    };
    let mut text = serde_json::to_string(&stats).map_err(Error::from)?;
    text.push('\n');
    emit(o.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TrainSummary {
    code: String,
    scheme: String,
    t_max: usize,
    seed: u64,
    steps_run: usize,
    stop: StopReason,
    /// Loss of the last step.
    final_loss: f64,
    /// Mean loss over the last `tail_window` steps.
    final_loss_mean: f64,
    tail_window: usize,
    final_ber_mean: f64,
    /// Spearman correlation of the smoothed loss and BER series.
    loss_ber_spearman: f64,
    /// Mean effective weight at the end of training.
    mean_effective_weight: f64,
}

/// Steps averaged for the summary's tail statistics and smoothing window.
const TAIL_WINDOW: usize = 200;

fn cmd_train(o: &Opts) -> CliResult<ExitCode> {
    let code = load_code(o)?;
    let kind = single_scheme(o)?;
    if !kind.is_trainable() {
        return Err(usage(format!("scheme {kind} has no trainable weights")));
    }
    let t_max = o.t_max.unwrap_or(10);
    let scheme = WeightScheme::new(kind, t_max).map_err(|e| usage(e.to_string()))?;
    let spec = mixture(o, &code)?;
    let defaults = TrainConfig::default();
    let data = match o.data.as_deref() {
        None | Some("approx") => DataSource::Approx,
        Some("blended") => DataSource::Blended,
        Some(other) => {
            return Err(usage(format!(
                "unknown data source {other:?}, expected approx or blended"
            )))
        }
    };
    let cfg = TrainConfig {
        batches: o.batches.unwrap_or(defaults.batches),
        batch_size: o.batch_size.unwrap_or(defaults.batch_size),
        epochs: o.epochs.unwrap_or(defaults.epochs),
        data,
        plateau: if o.no_plateau {
            None
        } else {
            Some(PlateauRule::default())
        },
        snapshot_every: o.checkpoint_every.unwrap_or(defaults.snapshot_every),
        seed: o.seed.unwrap_or(0),
        ..defaults
    };
    if cfg.batch_size == 0 || cfg.batches == 0 {
        return Err(usage("--batch-size and --batches must be positive"));
    }
    let out = o
        .out
        .clone()
        .ok_or_else(|| usage("--out DIR is required for train"))?;
    let ckpt_dir = out.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(|e| io_err(&ckpt_dir, e))?;

    let every = cfg.snapshot_every;
    let mut ckpt_error = None;
    let (weights, report) = learn::train_with(&code, scheme, &spec, &cfg, |rec, w| {
        if rec.step % 100 == 0 {
            eprintln!(
                "step {:>6}  loss {:.4}  ber {:.5}  fer {:.3}",
                rec.step, rec.loss, rec.ber, rec.fer
            );
        }
        if every > 0 && (rec.step + 1) % every == 0 && ckpt_error.is_none() {
            let path = ckpt_dir.join(format!("step_{:06}.json", rec.step + 1));
            if let Err(e) = w.save(&path) {
                ckpt_error = Some(e);
            }
        }
    })?;
    if let Some(e) = ckpt_error {
        return Err(e.into());
    }

    weights.save(&out.join("weights.json"))?;
    let jsonl = out.join("train.jsonl");
    fs::write(&jsonl, report.to_jsonl()?).map_err(|e| io_err(&jsonl, e))?;

    let losses = report.losses();
    let bers = report.bers();
    let tail = TAIL_WINDOW.min(losses.len());
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let eff = weights.effective();
    let summary = TrainSummary {
        code: code.name.clone(),
        scheme: kind.to_string(),
        t_max,
        seed: cfg.seed,
        steps_run: losses.len(),
        stop: report.stop,
        final_loss: losses.last().copied().unwrap_or(f64::NAN),
        final_loss_mean: mean(&losses[losses.len() - tail..]),
        tail_window: tail,
        final_ber_mean: mean(&bers[bers.len() - tail..]),
        loss_ber_spearman: learn::spearman(
            &learn::smooth(&losses, TAIL_WINDOW),
            &learn::smooth(&bers, TAIL_WINDOW),
        ),
        mean_effective_weight: mean(eff),
    };
    let path = out.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    eprintln!(
        "{} steps, stop: {:?}, mean loss over last {tail}: {:.4}",
        summary.steps_run, summary.stop, summary.final_loss_mean
    );
    Ok(match report.stop {
        StopReason::Diverged { .. } => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    })
}

/// Every decoder named on the command line: weight files first, then
/// fixed schemes.
fn decoders(o: &Opts, code: &Code) -> CliResult<Vec<(String, DecoderWeights)>> {
    let mut out = Vec::new();
    for path in &o.weights {
        let w = DecoderWeights::load(path, &code.graph)?;
        if let Some(t) = o.t_max {
            if t != w.scheme().t_max {
                return Err(usage(format!(
                    "--t-max {t} disagrees with {} (t_max={})",
                    path.display(),
                    w.scheme().t_max
                )));
            }
        }
        out.push((path.display().to_string(), w));
    }
    for s in &o.scheme {
        let kind = parse_scheme(s)?;
        if kind.is_trainable() {
            return Err(usage(format!("scheme {kind} needs a --weights file")));
        }
        let t = o.t_max.unwrap_or(10);
        let scheme = WeightScheme::new(kind, t).map_err(|e| usage(e.to_string()))?;
        out.push((
            format!("{kind}@T{t}"),
            DecoderWeights::initial(scheme, &code.graph),
        ));
    }
    if out.is_empty() {
        return Err(usage("give at least one --weights file or fixed --scheme"));
    }
    Ok(out)
}

fn decode_config(o: &Opts) -> DecodeConfig {
    DecodeConfig {
        early_exit: !o.no_early_exit,
        ..DecodeConfig::default()
    }
}

fn cmd_eval(o: &Opts) -> CliResult<ExitCode> {
    let code = load_code(o)?;
    let format = format_of(o)?;
    let lo = o.snr_lo.ok_or_else(|| usage("--snr-lo is required"))?;
    let hi = o.snr_hi.unwrap_or(lo);
    let points = match o.snr_points {
        Some(p) => p,
        None if hi == lo => 1,
        None => {
            return Err(usage(
                "--snr-points is required when --snr-hi differs from --snr-lo",
            ))
        }
    };
    if points == 0 || hi < lo {
        return Err(usage(
            "SNR grid needs snr_lo <= snr_hi and at least one point",
        ));
    }
    let defaults = EvalConfig::default();
    let cfg = EvalConfig {
        snr_points_db: bench::snr_grid(lo, hi, points),
        min_frame_errors: o.min_frame_errors.unwrap_or(defaults.min_frame_errors),
        max_frames: o.max_frames.unwrap_or(defaults.max_frames),
        seed: o.seed.unwrap_or(0),
        decode: decode_config(o),
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let mut curves = Vec::new();
    for (label, weights) in decoders(o, &code)? {
        let pts = bench::monte_carlo_eval(&code, &weights, &cfg)?;
        for p in &pts {
            eprintln!(
                "{label}  {:.3} dB  ber {:.3e}  fer {:.3e}  frames {}{}",
                p.snr_db,
                p.ber,
                p.fer,
                p.frames_run,
                if p.censored { "  (censored)" } else { "" }
            );
        }
        curves.push(LabeledCurve {
            label,
            decoder: weights.scheme().kind.to_string(),
            t_max: weights.scheme().t_max,
            points: pts,
        });
    }
    emit(o.out.as_deref(), &bench::render_curves(&curves, format)?)?;
    Ok(ExitCode::SUCCESS)
}

fn read_llr_frames(path: &Path, n: usize) -> CliResult<Vec<Vec<f64>>> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin()
            .lock()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    }
    let mut frames = Vec::new();
    for (i, line) in text.as_bytes().lines().enumerate() {
        let line = line.map_err(|e| CliError::Runtime(e.to_string()))?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let frame = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Runtime(format!("line {}: {e}", i + 1)))?;
        if frame.len() != n {
            return Err(CliError::Runtime(format!(
                "line {}: expected {n} LLRs, got {}",
                i + 1,
                frame.len()
            )));
        }
        frames.push(frame);
    }
    Ok(frames)
}

#[derive(Serialize)]
struct DecodedFrame {
    frame: usize,
    hard: String,
    iterations: usize,
    converged: bool,
}

fn cmd_decode(o: &Opts, llrs: &Path) -> CliResult<ExitCode> {
    let code = load_code(o)?;
    let mut all = decoders(o, &code)?;
    if all.len() != 1 {
        return Err(usage("decode takes exactly one decoder"));
    }
    let (_, weights) = all.pop().expect("one decoder");
    let frames = read_llr_frames(llrs, code.n())?;
    let decoder = Decoder::new(&code.graph, &weights).with_config(decode_config(o));
    let mut out = String::new();
    for (f, frame) in frames.iter().enumerate() {
        let r = decoder.decode(frame)?;
        let rec = DecodedFrame {
            frame: f,
            hard: r.hard.iter().map(|&b| char::from(b'0' + b)).collect(),
            iterations: r.iterations_used,
            converged: r.converged,
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&rec).map_err(Error::from)?);
    }
    emit(o.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_code(g: &GenOpts) -> CliResult<ExitCode> {
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| usage(format!("--{flag} is required for this family")))
    };
    let h = match g.family.as_str() {
        "eg" => {
            codes::euclidean_geometry(g.order.ok_or_else(|| usage("--order is required for eg"))?)
        }
        "regular" => codes::regular_peg(
            need(g.n, "n")?,
            need(g.dv, "dv")?,
            need(g.dc, "dc")?,
            g.seed,
        ),
        "tree" => codes::tree_code(need(g.n, "n")?, need(g.dc, "dc")?, g.seed),
        other => {
            return Err(usage(format!(
                "unknown family {other:?}, expected eg, regular or tree"
            )))
        }
    }
    .map_err(|e| usage(e.to_string()))?;
    emit(g.out.as_deref(), &write_alist(&h))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_complexity(o: &Opts) -> CliResult<ExitCode> {
    let code = load_code(o)?;
    let kinds = if o.scheme.is_empty() {
        vec![
            SchemeKind::Bp,
            SchemeKind::Ms,
            SchemeKind::Nms(0.75),
            SchemeKind::Unnms,
            SchemeKind::Snnms,
            SchemeKind::Annms,
        ]
    } else {
        o.scheme
            .iter()
            .map(|s| parse_scheme(s))
            .collect::<CliResult<_>>()?
    };
    let mut rows: Vec<_> = kinds
        .iter()
        .map(|&k| bench::complexity_count(&code.params, k))
        .collect();
    rows.push(bench::admm_reference(&code.params));
    let text = match format_of(o)? {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).map_err(Error::from)?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = String::from(
                "decoder,additions,multiplications,comparisons,hyperbolic,projections\n",
            );
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.decoder,
                    r.additions_per_iter,
                    r.multiplications_per_iter,
                    r.comparisons_per_iter,
                    r.hyperbolic_per_iter,
                    r.projections_per_iter
                );
            }
            s
        }
    };
    emit(o.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
