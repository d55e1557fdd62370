//! The `regulus` command line.
//!
//! Every command runs inside a rayon pool of the requested size. Parallel
//! results are collected in index order, so the JSON and CSV outputs do not
//! depend on the thread count. Exit codes: 0 pass, 2 principled negative
//! (the verdict is false or the input has nothing to measure), 1 error.

use std::error::Error as StdError;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use regulus_core::cartan::{kappa, LinearFunctional, Theta};
use regulus_core::controls;
use regulus_core::error::Error;
use regulus_core::groups::{
    critical_exponent_estimate, gallery, phi_values, poincare_from_values, word_ball, GeneratorSet, RayPattern,
    WordSequence, DEFAULT_DEDUP_TOL, GALLERY,
};
use regulus_core::hilbert::ConvexDomain;
use regulus_core::io::{read_matrix_file, write_matrices};
use regulus_core::matrix::GroupElement;
use regulus_core::morse::{classify_morse, classify_morse_path, classify_uniform_regular, ConcatenatedPath, MorseConfig};
use regulus_core::pipeline::{run_pipeline, PipelineConfig, RaySpec};
use regulus_core::sublinear::DEFAULT_SEED;
use regulus_core::trajectory::Trajectory;
use regulus_core::weyl::{verify_morse_lemma, WeylConfig, DEFAULT_STARTS};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

type Res<T> = std::result::Result<T, Box<dyn StdError + Send + Sync>>;

#[derive(Parser, Debug)]
#[command(name = "regulus", version, args_override_self = true, about = "Sublinearly Morse diagnostics for matrix sequences and groups")]
pub struct RunConfig {
    /// Seed for every randomized step (pair schedules, descent jitters).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; 0 means one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Directory for JSON and CSV reports.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// JSON object of flag values. Flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// κ, simple roots and fundamental weights of every matrix in a file.
    Kappa(KappaArgs),
    /// Morse, uniform-regularity or path classification of a sequence.
    Classify(ClassifyArgs),
    /// Distance of a sequence to the Weyl cone of its limit flag.
    WeylVerify(WeylArgs),
    /// Compact part, orbit extraction and Morse verdict along a ray.
    HilbertPipeline(PipelineArgs),
    /// Poincaré partial sums and a critical exponent bracket.
    Poincare(PoincareArgs),
    /// Lists the built-in generator sets, or prints one.
    Gallery(GalleryArgs),
    /// Writes a built-in control sequence or a geodesic ray as JSONL.
    Sequence(SequenceArgs),
}

#[derive(Args, Debug)]
pub struct KappaArgs {
    /// JSONL file, one matrix per line.
    #[arg(long, short)]
    pub input: PathBuf,
}

#[derive(Args, Debug)]
pub struct SequenceSource {
    /// JSONL file of matrices, or of words when --group is given.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Read the input as words in this gallery group (or generator JSON file).
    #[arg(long)]
    pub group: Option<String>,
    /// Root indices, e.g. "1,2"; all simple roots by default.
    #[arg(long)]
    pub theta: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Morse,
    Ur,
    Path,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: SequenceSource,
    #[arg(long, value_enum, default_value_t = Mode::Morse)]
    pub mode: Mode,
    /// Uniform regularity: required root-to-distance ratio.
    #[arg(long, default_value_t = 0.3)]
    pub c: f64,
    /// Uniform regularity: minimum index gap.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Pairs sampled for the ray and gap conditions.
    #[arg(long)]
    pub pair_budget: Option<usize>,
}

#[derive(Args, Debug)]
pub struct WeylArgs {
    #[command(flatten)]
    pub source: SequenceSource,
    #[arg(long, default_value_t = DEFAULT_STARTS)]
    pub starts: usize,
    /// Tail length for the flag limit; 0 means a third of the sequence.
    #[arg(long, default_value_t = 0)]
    pub tail: usize,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Domain JSON {kind, form|vertices, base_point}; the Klein disk by default.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Gallery name or generator JSON file.
    #[arg(long, default_value = "klein-schottky")]
    pub group: String,
    /// Ray along the axis of this word.
    #[arg(long, conflicts_with = "direction")]
    pub axis: Option<String>,
    /// Ray from the base point in this chart direction, e.g. "1,0.5".
    #[arg(long)]
    pub direction: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    #[arg(long, default_value_t = 3.0)]
    pub c: f64,
    /// Ray length T.
    #[arg(long, default_value_t = 200.0)]
    pub t: f64,
    #[arg(long, default_value_t = 5)]
    pub ball_radius: usize,
    #[arg(long)]
    pub theta: Option<String>,
}

#[derive(Args, Debug)]
pub struct PoincareArgs {
    #[arg(long)]
    pub group: String,
    /// Weights of φ in the fundamental-weight basis; ω₁ by default.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long, default_value = "2,4,6")]
    pub radii: String,
    #[arg(long, default_value = "0,0.25,0.5,1,2")]
    pub s: String,
}

#[derive(Args, Debug)]
pub struct GalleryArgs {
    #[arg(long)]
    pub name: Option<String>,
    /// With --name: print the word ball of this radius as JSONL.
    #[arg(long, requires = "name")]
    pub ball: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SequenceArgs {
    /// flat-regular, flat-wall, sqrt-detour, jordan, block-unipotent,
    /// spiral, wall-corner, reducible-block or ray.
    #[arg(long)]
    pub kind: String,
    #[arg(long, short, default_value_t = 200)]
    pub n: usize,
    /// For `ray`: gallery name or generator JSON file.
    #[arg(long)]
    pub group: Option<String>,
    /// For `ray`: infinite word such as "(ab)" or "b(aB)".
    #[arg(long)]
    pub pattern: Option<String>,
    /// For `ray`: print the words instead of the matrices. Words keep
    /// displacements exact; long rays of matrices lose them to cancellation.
    #[arg(long)]
    pub words: bool,
}

/// Parses and runs; returns the process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    match pool.install(|| execute(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

const SUBCOMMANDS: &[&str] = &["kappa", "classify", "weyl-verify", "hilbert-pipeline", "poincare", "gallery", "sequence"];

/// Splices the `--config` file into the argument list right after the
/// subcommand, so explicit flags (parsed later) override it. A `command`
/// key supplies the subcommand when none is given.
fn expand_config(args: Vec<OsString>) -> Res<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            strs.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let obj = value.as_object().ok_or_else(|| format!("{path}: expected a JSON object"))?;
    let mut extra: Vec<OsString> = Vec::new();
    for (key, v) in obj {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => extra.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar_text).collect::<Res<_>>()?;
                extra.push(flag.into());
                extra.push(parts.join(",").into());
            }
            other => {
                extra.push(flag.into());
                extra.push(scalar_text(other)?.into());
            }
        }
    }
    let mut out = args.clone();
    match strs.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) {
        Some(i) => {
            out.splice(i + 1..i + 1, extra);
        }
        None => {
            let cmd = obj
                .get("command")
                .and_then(Value::as_str)
                .ok_or_else(|| format!("{path}: no subcommand given and no \"command\" key"))?;
            out.push(cmd.into());
            out.extend(extra);
        }
    }
    Ok(out)
}

fn scalar_text(v: &Value) -> Res<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}").into()),
    }
}

fn execute(cfg: &RunConfig) -> Res<i32> {
    match &cfg.command {
        Command::Kappa(a) => cmd_kappa(a),
        Command::Classify(a) => cmd_classify(cfg, a),
        Command::WeylVerify(a) => cmd_weyl_verify(cfg, a),
        Command::HilbertPipeline(a) => cmd_hilbert_pipeline(cfg, a),
        Command::Poincare(a) => cmd_poincare(cfg, a),
        Command::Gallery(a) => cmd_gallery(a),
        Command::Sequence(a) => cmd_sequence(a),
    }
}

/// Shortest round-trip text; no negative zero.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    if x != 0.0 && x.is_finite() && (x.abs() >= 1e15 || x.abs() < 1e-6) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.to_string())?)?)
}

fn write_out(dir: &Path, name: &str, text: &str) -> Res<()> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Res<()> {
    write_out(dir, name, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Res<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| format!("{what} '{s}': {e}").into()))
        .collect()
}

fn load_group(name: &str) -> Res<GeneratorSet> {
    let path = Path::new(name);
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| format!("{name}: {e}"))?;
        return Ok(GeneratorSet::from_json(&serde_json::from_str(&text)?)?);
    }
    Ok(gallery(name)?)
}

fn theta_for(d: usize, name: Option<&str>) -> Res<Theta> {
    Ok(match name {
        Some(s) => Theta::parse(d, s)?,
        None => Theta::full(d),
    })
}

// ---- kappa ----

/// κ, α and ω of each matrix as CSV.
pub fn kappa_table(elements: &[GroupElement]) -> Res<String> {
    let d = elements.first().map_or(0, |g| g.dim());
    let rows: Vec<Vec<String>> = elements
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let k = kappa(g)?;
            let mut row = vec![i.to_string()];
            row.extend(k.coords().iter().map(|&x| num(x)));
            row.extend(k.roots().iter().map(|&x| num(x)));
            row.extend(k.weights().iter().map(|&x| num(x)));
            Ok(row)
        })
        .collect::<std::result::Result<_, Error>>()?;
    let mut header = vec!["index".to_string()];
    header.extend((1..=d).map(|i| format!("kappa_{i}")));
    header.extend((1..d).map(|i| format!("alpha_{i}")));
    header.extend((1..d).map(|i| format!("omega_{i}")));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_text(&h, &rows)
}

fn cmd_kappa(a: &KappaArgs) -> Res<i32> {
    let elements = read_matrix_file(&a.input)?;
    print!("{}", kappa_table(&elements)?);
    Ok(EXIT_PASS)
}

// ---- sequences ----

enum Loaded {
    Matrices(Vec<GroupElement>),
    Words(GeneratorSet, Vec<String>),
}

fn load_sequence(src: &SequenceSource) -> Res<Loaded> {
    match &src.group {
        None => Ok(Loaded::Matrices(read_matrix_file(&src.input)?)),
        Some(g) => {
            let gens = load_group(g)?;
            let text = fs::read_to_string(&src.input).map_err(|e| format!("{}: {e}", src.input.display()))?;
            let mut words = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let word = if line.starts_with('"') || line.starts_with('{') {
                    let v: Value = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
                    v.as_str()
                        .or_else(|| v.get("word").and_then(Value::as_str))
                        .ok_or_else(|| format!("line {}: expected a word", i + 1))?
                        .to_string()
                } else {
                    line.to_string()
                };
                words.push(word);
            }
            if words.is_empty() {
                return Err(Error::EmptyInput.into());
            }
            Ok(Loaded::Words(gens, words))
        }
    }
}

/// Runs `f` on the loaded sequence as a trajectory.
fn with_trajectory<R>(loaded: &Loaded, f: impl FnOnce(&dyn Trajectory) -> Res<R>) -> Res<R> {
    match loaded {
        Loaded::Matrices(m) => f(m),
        Loaded::Words(gens, words) => {
            let seq = WordSequence::new(gens, words.clone())?;
            f(&seq)
        }
    }
}

/// Per-element rows against g₀: n, d_X(g₀, g_n), min θ-root.
fn base_rows(seq: &dyn Trajectory, theta: &Theta) -> Res<Vec<(usize, f64, f64)>> {
    (0..seq.len())
        .into_par_iter()
        .map(|n| {
            let k = kappa(&seq.displacement(0, n))?;
            Ok((n, k.norm(), k.min_root(theta)))
        })
        .collect::<std::result::Result<_, Error>>()
        .map_err(Into::into)
}

fn cmd_classify(cfg: &RunConfig, a: &ClassifyArgs) -> Res<i32> {
    let loaded = load_sequence(&a.source)?;
    let mut morse = MorseConfig { seed: cfg.seed, ..MorseConfig::default() };
    if let Some(b) = a.pair_budget {
        morse.pair_budget = b;
    }
    let (pass, report, csv) = with_trajectory(&loaded, |seq| {
        let theta = theta_for(seq.dim(), a.source.theta.as_deref())?;
        match a.mode {
            Mode::Morse => {
                let v = classify_morse(seq, &theta, &morse)?;
                let rows: Vec<Vec<String>> = v
                    .profile
                    .iter()
                    .map(|r| vec![r.n.to_string(), num(r.distance), num(r.min_root), num(r.deficit)])
                    .collect();
                let csv = csv_text(&["n", "distance", "min_root", "deficit"], &rows)?;
                Ok((v.overall, json!({ "mode": "morse", "theta": theta, "pass": v.overall, "verdict": v }), csv))
            }
            Mode::Ur => {
                let v = classify_uniform_regular(seq, &theta, a.c, a.d)?;
                let rows: Vec<Vec<String>> = base_rows(seq, &theta)?
                    .into_iter()
                    .map(|(n, d, m)| vec![n.to_string(), num(d), num(m), num(if d > 0.0 { m / d } else { 0.0 })])
                    .collect();
                let csv = csv_text(&["n", "distance", "min_root", "ratio"], &rows)?;
                Ok((v.pass, json!({ "mode": "ur", "theta": theta, "pass": v.pass, "verdict": v }), csv))
            }
            Mode::Path => {
                let path = ConcatenatedPath::new(seq)?;
                let v = classify_morse_path(&path, &theta, &morse)?;
                let rows: Vec<Vec<String>> = base_rows(&path, &theta)?
                    .into_iter()
                    .zip(path.params())
                    .map(|((n, d, m), s)| vec![n.to_string(), num(*s), num(d), num(m)])
                    .collect();
                let csv = csv_text(&["sample", "arclength", "distance", "min_root"], &rows)?;
                Ok((v.pass, json!({ "mode": "path", "theta": theta, "pass": v.pass, "verdict": v }), csv))
            }
        }
    })?;
    write_json(&cfg.out_dir, "classify.json", &report)?;
    write_out(&cfg.out_dir, "classify.csv", &csv)?;
    println!("{}", if pass { "pass" } else { "fail" });
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_weyl_verify(cfg: &RunConfig, a: &WeylArgs) -> Res<i32> {
    let loaded = load_sequence(&a.source)?;
    let wcfg = WeylConfig { starts: a.starts, tail: a.tail, seed: cfg.seed, ..WeylConfig::default() };
    let outcome = with_trajectory(&loaded, |seq| {
        let theta = theta_for(seq.dim(), a.source.theta.as_deref())?;
        Ok((theta.clone(), verify_morse_lemma(seq, &theta, &wcfg)))
    })?;
    let (theta, result) = outcome;
    let (pass, report, rows) = match result {
        Ok(rep) => {
            let rows: Vec<Vec<String>> =
                rep.rows.iter().map(|r| vec![r.index.to_string(), num(r.distance), num(r.bound)]).collect();
            (rep.verdict, json!({ "theta": theta, "pass": rep.verdict, "report": rep }), rows)
        }
        Err(e @ (Error::Divergent(_) | Error::NoGapAt { .. })) => {
            (false, json!({ "theta": theta, "pass": false, "reason": e.to_string() }), Vec::new())
        }
        Err(e) => return Err(e.into()),
    };
    write_json(&cfg.out_dir, "weyl.json", &report)?;
    write_out(&cfg.out_dir, "weyl.csv", &csv_text(&["n", "distance", "bound"], &rows)?)?;
    match report.get("reason").and_then(Value::as_str) {
        Some(reason) => println!("fail: {reason}"),
        None => println!("{}", if pass { "pass" } else { "fail" }),
    }
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_hilbert_pipeline(cfg: &RunConfig, a: &PipelineArgs) -> Res<i32> {
    let gens = load_group(&a.group)?;
    let dom = match &a.domain {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            ConvexDomain::from_json(&serde_json::from_str(&text)?)?
        }
        None if gens.dim() == 3 => ConvexDomain::klein_disk(),
        None => return Err(format!("--domain is required for a group in dimension {}", gens.dim()).into()),
    };
    let ray = match (&a.axis, &a.direction) {
        (Some(w), None) => RaySpec::Axis(w.clone()),
        (None, Some(d)) => RaySpec::Direction(parse_list(d, "direction")?),
        (None, None) => RaySpec::Axis(gens.labels().first().map(|c| c.to_string()).ok_or("group has no generators")?),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    let theta = theta_for(gens.dim(), a.theta.as_deref())?;
    let pcfg = PipelineConfig {
        r: a.r,
        c: a.c,
        t_max: a.t,
        ball_radius: a.ball_radius,
        morse: MorseConfig { seed: cfg.seed, ..MorseConfig::default() },
    };
    let report = match run_pipeline(&gens, &dom, &ray, &theta, &pcfg) {
        Ok(r) => r,
        Err(e @ Error::EmptyIntersection) => {
            write_json(&cfg.out_dir, "pipeline.json", &json!({ "pass": false, "reason": e.to_string() }))?;
            println!("fail: {e}");
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(e.into()),
    };
    let pass = report.verdict.as_ref().is_some_and(|v| v.overall);
    let intervals: Vec<Vec<String>> = report.intervals.iter().map(|(s, e)| vec![num(*s), num(*e)]).collect();
    let selected: std::collections::BTreeSet<&str> = report.a_gamma_c.iter().map(String::as_str).collect();
    let hits: Vec<Vec<String>> = report
        .a_gamma
        .iter()
        .map(|h| {
            vec![
                h.word.clone(),
                num(h.t),
                num(h.interval.0),
                num(h.interval.1),
                selected.contains(h.word.as_str()).to_string(),
            ]
        })
        .collect();
    write_json(&cfg.out_dir, "pipeline.json", &json!({ "pass": pass, "report": report }))?;
    write_out(&cfg.out_dir, "intervals.csv", &csv_text(&["start", "end"], &intervals)?)?;
    write_out(&cfg.out_dir, "a_gamma.csv", &csv_text(&["word", "t", "enter", "exit", "selected"], &hits)?)?;
    println!("fraction {} verdict {}", num(report.fraction), if pass { "pass" } else { "fail" });
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_poincare(cfg: &RunConfig, a: &PoincareArgs) -> Res<i32> {
    let gens = load_group(&a.group)?;
    let d = gens.dim();
    let weights = match &a.phi {
        Some(p) => parse_list::<f64>(p, "phi")?,
        None => (0..d - 1).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
    };
    let phi = LinearFunctional::new(weights);
    let radii: Vec<usize> = parse_list(&a.radii, "radii")?;
    let s_grid: Vec<f64> = parse_list(&a.s, "s")?;
    if s_grid.iter().any(|s| !(*s >= 0.0)) {
        return Err("s values must be non-negative".into());
    }
    let rmax = radii.iter().copied().max().ok_or("no radii")?;
    let ball = word_ball(&gens, rmax, DEFAULT_DEDUP_TOL)?;
    let values = phi_values(&ball, &phi)?;
    let mut rows = Vec::new();
    for &r in &radii {
        let sub: Vec<f64> = ball.iter().zip(&values).filter(|(n, _)| n.length <= r).map(|(_, v)| *v).collect();
        for &s in &s_grid {
            rows.push(vec![r.to_string(), sub.len().to_string(), num(s), num(poincare_from_values(&sub, s))]);
        }
    }
    let bracket = if radii.len() >= 2 && radii.windows(2).all(|w| w[0] < w[1]) {
        serde_json::to_value(critical_exponent_estimate(&gens, &phi, &radii)?)?
    } else {
        Value::Null
    };
    write_out(&cfg.out_dir, "poincare.csv", &csv_text(&["radius", "size", "s", "sum"], &rows)?)?;
    write_json(
        &cfg.out_dir,
        "poincare.json",
        &json!({ "group": a.group, "phi": phi, "radii": radii, "s": s_grid, "critical_exponent": bracket }),
    )?;
    if let Some(b) = bracket.as_object() {
        println!("delta in [{}, {}]", num(b["delta_low"].as_f64().unwrap_or(f64::NAN)), num(b["delta_high"].as_f64().unwrap_or(f64::NAN)));
    }
    Ok(EXIT_PASS)
}

fn cmd_gallery(a: &GalleryArgs) -> Res<i32> {
    match (&a.name, a.ball) {
        (None, _) => {
            for (name, desc) in GALLERY {
                println!("{name}\t{desc}");
            }
        }
        (Some(n), None) => println!("{}", serde_json::to_string_pretty(&gallery(n)?.to_json())?),
        (Some(n), Some(r)) => {
            for node in word_ball(&gallery(n)?, r, DEFAULT_DEDUP_TOL)? {
                println!("{}", node.to_json());
            }
        }
    }
    Ok(EXIT_PASS)
}

fn cmd_sequence(a: &SequenceArgs) -> Res<i32> {
    if a.kind != "ray" {
        print!("{}", write_matrices(&controls::named(&a.kind, a.n)?));
        return Ok(EXIT_PASS);
    }
    let gens = load_group(a.group.as_deref().ok_or("ray needs --group")?)?;
    let pattern = RayPattern::parse(a.pattern.as_deref().ok_or("ray needs --pattern")?)?;
    let seq = WordSequence::ray(&gens, &pattern, a.n)?;
    if a.words {
        for w in seq.words() {
            println!("{}", Value::String(w.clone()));
        }
    } else {
        let elements: Vec<GroupElement> = (0..seq.len()).map(|i| seq.element(i)).collect();
        print!("{}", write_matrices(&elements));
    }
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(num(1e-9), "1e-9");
        for x in [1.0 / 3.0, -2.5e17, 7e-12, 123.456] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn config_lands_before_explicit_flags() {
        let dir = std::env::temp_dir().join(format!("regulus-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        fs::write(&path, r#"{"radii": [1, 2], "group": "trivial", "verbose_flag": true, "off": false}"#).unwrap();
        let p = path.to_string_lossy().into_owned();
        let args: Vec<OsString> = ["regulus", "--config", &p, "poincare", "--radii", "3"].iter().map(OsString::from).collect();
        let out: Vec<String> = expand_config(args).unwrap().iter().map(|a| a.to_string_lossy().into_owned()).collect();
        let cmd = out.iter().position(|a| a == "poincare").unwrap();
        assert_eq!(&out[cmd + 1..], ["--group", "trivial", "--radii", "1,2", "--verbose-flag", "--radii", "3"]);
        fs::remove_dir_all(&dir).unwrap();
    }
}
