//! Command-line front end: job specification, dispatch and output documents.

use std::fmt;
use std::path::Path;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bdiv::{
    default_hmax, degree_difference, degree_nef, is_nef_bdiv, mixed_degree, BDivisor, BDivisorJson, Builtin, Mode,
    PlModel, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::fan::{ChainJson, Fan, FanJson, RefinementChain};
use crate::okounkov::{global_fiber_check_with, growth_coefficient, normalize_trivial, okounkov_body, okounkov_slice_check, FlagBasis};
use crate::rational::{format_rational, Q};
use crate::sections::{global_sections, hilbert_samuel_table, DEFAULT_SECTION_HEIGHT};
use crate::surface::{
    degree_surface, SeriesConfig, SeriesVerdict, DEFAULT_DELTA, DEFAULT_DEPTH, DEFAULT_SERIES_TOL, DEFAULT_TAIL_DEPTHS,
};

pub const SCHEMA: &str = "torib/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "TORIB_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

const DEFAULT_HS_LMAX: u64 = 10;
const DEFAULT_OKOUNKOV_LMAX: u64 = 6;
const DEFAULT_NEF_HEIGHT: u64 = 16;
const FIBER_LMAX_CAP: u64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Degree,
    MixedDegree,
    DegreeDiff,
    SurfaceSeries,
    Sections,
    HsTable,
    Okounkov,
    Subdivide,
    CheckNef,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("serializable");
        f.write_str(v.as_str().expect("string"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    #[default]
    Json,
    Csv,
}

/// Everything needed to run one command. Unset options take per-command
/// defaults, which are echoed back under `thresholds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: Command,
    /// A path to a JSON file, or inline JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub builtin: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hmax: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lmax: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub out: OutFormat,
}

impl JobSpec {
    pub fn new(command: Command) -> Self {
        JobSpec {
            command,
            input: None,
            builtin: Vec::new(),
            tol: None,
            hmax: None,
            depth: None,
            lmax: None,
            level: None,
            flag: None,
            face: None,
            mode: None,
            out: OutFormat::Json,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Numeric,
}

/// Computations with toric b-divisors.
#[derive(Debug, Parser)]
#[command(name = "torib", version, about)]
struct Args {
    #[arg(value_enum)]
    command: Option<Command>,
    /// Job specification file (JSON); other flags override its fields.
    #[arg(long)]
    job: Option<String>,
    /// Input JSON: a path or an inline document.
    #[arg(long)]
    input: Option<String>,
    /// Builtin divisor or fan; repeat for several divisors.
    #[arg(long)]
    builtin: Vec<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    hmax: Option<u64>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    lmax: Option<u64>,
    #[arg(long)]
    level: Option<u64>,
    /// Flag cone as comma-separated ray indices.
    #[arg(long, value_delimiter = ',')]
    flag: Option<Vec<usize>>,
    /// Face to star-subdivide, as comma-separated ray indices.
    #[arg(long, value_delimiter = ',')]
    face: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    out: Option<OutFormat>,
}

fn job_from_args(a: Args) -> Result<JobSpec> {
    let mut job = match &a.job {
        Some(src) => JobSpec::from_json_str(&read_source(src)?)?,
        None => JobSpec::new(a.command.ok_or_else(|| Error::InvalidInput("missing command".into()))?),
    };
    if let Some(c) = a.command {
        job.command = c;
    }
    if a.input.is_some() {
        job.input = a.input;
    }
    if !a.builtin.is_empty() {
        job.builtin = a.builtin;
    }
    job.tol = a.tol.or(job.tol);
    job.hmax = a.hmax.or(job.hmax);
    job.depth = a.depth.or(job.depth);
    job.lmax = a.lmax.or(job.lmax);
    job.level = a.level.or(job.level);
    job.flag = a.flag.or(job.flag);
    job.face = a.face.or(job.face);
    if let Some(m) = a.mode {
        job.mode = Some(match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Numeric => Mode::Numeric,
        });
    }
    if let Some(o) = a.out {
        job.out = o;
    }
    Ok(job)
}

fn read_source(src: &str) -> Result<String> {
    let t = src.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(src.to_string())
    } else {
        Ok(std::fs::read_to_string(Path::new(src))?)
    }
}

/// Result of running a job.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub document: Value,
    pub csv: Option<String>,
}

impl Outcome {
    pub fn render(&self, out: OutFormat) -> String {
        match (out, &self.csv) {
            (OutFormat::Csv, Some(c)) => c.clone(),
            _ => {
                let mut s = serde_json::to_string_pretty(&self.document).expect("serializable");
                s.push('\n');
                s
            }
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::Json(_) => "json",
        Error::Io(_) => "io",
        Error::NotConical(_) => "not_conical",
        Error::NotConverged(_) => "not_converged",
        Error::NotBig => "not_big",
        Error::NotBigNef => "not_big_nef",
        Error::NoIntegralShift(_) => "no_integral_shift",
        Error::EvaluationNotExact(_) => "evaluation_not_exact",
        Error::NotSmooth(_) => "not_smooth",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::NotDimensionTwo(_) => "not_dimension_two",
        _ => "invalid_input",
    }
}

fn error_document(job: Option<&JobSpec>, e: &Error) -> Value {
    json!({
        "schema": SCHEMA,
        "version": VERSION,
        "job": job,
        "error": { "kind": error_kind(e), "message": e.to_string() },
    })
}

/// Per-command output before the common envelope is added.
struct Report {
    input: Value,
    thresholds: Value,
    result: Value,
    csv: Option<String>,
    exit_code: i32,
}

/// Runs a job and builds its output document.
pub fn run(job: &JobSpec) -> Outcome {
    match dispatch(job) {
        Ok(r) => Outcome {
            exit_code: r.exit_code,
            document: json!({
                "schema": SCHEMA,
                "version": VERSION,
                "command": job.command.to_string(),
                "job": job,
                "input": r.input,
                "thresholds": r.thresholds,
                "result": r.result,
            }),
            csv: r.csv,
        },
        Err(Error::NotConverged(res)) => {
            let document = json!({
                "schema": SCHEMA,
                "version": VERSION,
                "command": job.command.to_string(),
                "job": job,
                "thresholds": { "tol": job.tol.unwrap_or(DEFAULT_TOL), "hmax": job.hmax },
                "result": &*res,
                "error": { "kind": "not_converged", "message": Error::NotConverged(res.clone()).to_string() },
            });
            Outcome { exit_code: EXIT_NOT_CONVERGED, document, csv: Some(trace_csv(&res.trace)) }
        }
        Err(e) => Outcome { exit_code: EXIT_INVALID, document: error_document(Some(job), &e), csv: None },
    }
}

/// Builtin divisors by name: the planar functions plus a few classical classes.
pub fn builtin_divisor(name: &str) -> Result<BDivisor> {
    let q = |n: i64| Q::from_integer(n.into());
    match name {
        "p2_h" | "hyperplane" => Ok(BDivisor::hyperplane()),
        "p1xp1_o11" => BDivisor::from_coefficients(Fan::p1xp1(), &[q(0), q(0), q(1), q(1)]),
        "p1xp1_o10" => BDivisor::from_coefficients(Fan::p1xp1(), &[q(0), q(0), q(1), q(0)]),
        "p1xp1_o01" => BDivisor::from_coefficients(Fan::p1xp1(), &[q(0), q(0), q(0), q(1)]),
        "p3_h" => {
            let f = Fan::projective_space(3);
            let mut a = vec![q(0); f.rays().len()];
            *a.last_mut().expect("nonempty") = q(1);
            BDivisor::from_coefficients(f, &a)
        }
        other => Ok(BDivisor::builtin(Builtin::parse(other)?)),
    }
}

/// Builtin fans by name.
pub fn builtin_fan(name: &str) -> Result<Fan> {
    match name {
        "p2" => Ok(Fan::projective_plane()),
        "p1xp1" => Ok(Fan::p1xp1()),
        "p3" => Ok(Fan::projective_space(3)),
        other => Err(Error::InvalidInput(format!("unknown builtin fan {other:?}"))),
    }
}

fn default_mode(command: Command, capable: bool) -> Mode {
    if command == Command::SurfaceSeries || !capable {
        Mode::Numeric
    } else {
        Mode::Exact
    }
}

/// Divisors named by the job, with their JSON echo.
fn load_divisors(job: &JobSpec) -> Result<(Vec<BDivisor>, Value)> {
    let mut out = Vec::new();
    let mut echo = Vec::new();
    for name in &job.builtin {
        let d = builtin_divisor(name)?;
        let mode = job.mode.unwrap_or(default_mode(job.command, d.phi().is_exact()));
        out.push(d.with_mode(mode)?);
        echo.push(json!({ "builtin": name }));
    }
    if let Some(src) = &job.input {
        let v: Value = serde_json::from_str(&read_source(src)?)?;
        let items: Vec<Value> = match &v {
            Value::Array(a) => a.clone(),
            Value::Object(o) if o.contains_key("divisors") => match &o["divisors"] {
                Value::Array(a) if o.len() == 1 => a.clone(),
                _ => return Err(Error::InvalidInput("\"divisors\" must be the only key and hold an array".into())),
            },
            _ => vec![v.clone()],
        };
        for item in items {
            let j: BDivisorJson = serde_json::from_value(item)?;
            let d = BDivisor::from_json(&BDivisorJson { mode: None, ..j.clone() })?;
            let mode = job.mode.or(j.mode).unwrap_or(default_mode(job.command, d.phi().is_exact()));
            out.push(d.with_mode(mode)?);
        }
        echo.push(v);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no input: pass --input or --builtin".into()));
    }
    let echo = if echo.len() == 1 { echo.pop().expect("one") } else { Value::Array(echo) };
    Ok((out, echo))
}

fn single(job: &JobSpec) -> Result<(BDivisor, Value)> {
    let (mut ds, echo) = load_divisors(job)?;
    if ds.len() != 1 {
        return Err(Error::InvalidInput(format!("{} expects one divisor, got {}", job.command, ds.len())));
    }
    Ok((ds.pop().expect("one"), echo))
}

fn csv_of(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

fn trace_csv(trace: &[crate::bdiv::TraceEntry]) -> String {
    csv_of(
        &["height", "value", "value_f64"],
        trace.iter().map(|t| vec![t.height.to_string(), format_rational(&t.value), t.value_f64.to_string()]).collect(),
    )
}

fn dispatch(job: &JobSpec) -> Result<Report> {
    let tol = job.tol.unwrap_or(DEFAULT_TOL);
    match job.command {
        Command::Degree | Command::MixedDegree | Command::DegreeDiff => {
            let (ds, input) = load_divisors(job)?;
            let dim = ds[0].dim();
            let hmax = job.hmax.unwrap_or(default_hmax(dim));
            let res = match job.command {
                Command::Degree => {
                    if ds.len() != 1 {
                        return Err(Error::InvalidInput(format!("degree expects one divisor, got {}", ds.len())));
                    }
                    degree_nef(&ds[0], tol, hmax)?
                }
                Command::MixedDegree => mixed_degree(&ds, tol, hmax)?,
                _ => {
                    if ds.len() != 2 {
                        return Err(Error::InvalidInput(format!("degree-diff expects two divisors, got {}", ds.len())));
                    }
                    degree_difference(&ds[0], &ds[1], tol, hmax)?
                }
            };
            Ok(Report {
                input,
                thresholds: json!({ "tol": tol, "hmax": hmax, "schedule": "doubling" }),
                csv: Some(trace_csv(&res.trace)),
                result: serde_json::to_value(&res)?,
                exit_code: EXIT_OK,
            })
        }
        Command::SurfaceSeries => {
            let (d, input) = single(job)?;
            let depth = job.depth.unwrap_or(DEFAULT_DEPTH);
            let cfg = SeriesConfig { tol: job.tol.unwrap_or(DEFAULT_SERIES_TOL), ..SeriesConfig::default() };
            let res = degree_surface(&d, depth, &cfg)?;
            let exit_code = match res.series.verdict {
                SeriesVerdict::Inconclusive { .. } => EXIT_NOT_CONVERGED,
                _ => EXIT_OK,
            };
            let csv = csv_of(
                &["depth", "subtotal", "partial_sum"],
                res.series
                    .per_depth
                    .iter()
                    .scan(0.0f64, |acc, s| {
                        *acc += s;
                        Some(*acc)
                    })
                    .zip(&res.series.per_depth)
                    .enumerate()
                    .map(|(i, (acc, s))| vec![(i + 1).to_string(), s.to_string(), acc.to_string()])
                    .collect(),
            );
            Ok(Report {
                input,
                thresholds: json!({
                    "tol": cfg.tol,
                    "depth": depth,
                    "tail_depths": DEFAULT_TAIL_DEPTHS,
                    "delta": DEFAULT_DELTA,
                }),
                result: json!({
                    "partial_sum": res.series.partial_sum,
                    "per_depth": res.series.per_depth,
                    "verdict": res.series.verdict,
                    "degree": res.degree,
                    "detail": res,
                }),
                csv: Some(csv),
                exit_code,
            })
        }
        Command::Sections => {
            let (d, input) = single(job)?;
            let level = job.level.unwrap_or(1);
            let h = job.hmax.unwrap_or(DEFAULT_SECTION_HEIGHT);
            let s = global_sections(&d, level, h)?;
            let csv = csv_of(
                &(0..d.dim()).map(|i| ["m1", "m2", "m3", "m4"][i.min(3)]).collect::<Vec<_>>(),
                s.points.iter().map(|p| p.coords().iter().map(|c| c.to_string()).collect()).collect(),
            );
            Ok(Report {
                input,
                thresholds: json!({ "level": level, "height": h }),
                result: json!({ "h0": s.points.len(), "sections": s }),
                csv: Some(csv),
                exit_code: EXIT_OK,
            })
        }
        Command::HsTable => {
            let (d, input) = single(job)?;
            let lmax = job.lmax.unwrap_or(DEFAULT_HS_LMAX);
            let h = job.hmax.unwrap_or(DEFAULT_SECTION_HEIGHT);
            let rows = hilbert_samuel_table(&d, lmax, h)?;
            let csv = csv_of(
                &["level", "h0", "normalized", "normalized_f64"],
                rows.iter()
                    .map(|r| vec![r.level.to_string(), r.h0.to_string(), format_rational(&r.normalized), r.normalized_f64.to_string()])
                    .collect(),
            );
            Ok(Report {
                input,
                thresholds: json!({ "lmax": lmax, "height": h }),
                result: json!({ "rows": rows }),
                csv: Some(csv),
                exit_code: EXIT_OK,
            })
        }
        Command::Okounkov => okounkov_report(job),
        Command::Subdivide => subdivide_report(job),
        Command::CheckNef => {
            let (d, input) = single(job)?;
            let h = job.hmax.unwrap_or(DEFAULT_NEF_HEIGHT);
            let v = is_nef_bdiv(&d, h)?;
            let csv = csv_of(&["nef", "height"], vec![vec![v.is_nef().to_string(), h.to_string()]]);
            Ok(Report {
                input,
                thresholds: json!({ "height": h, "mode": d.mode() }),
                result: json!({ "nef": v.is_nef(), "detail": v }),
                csv: Some(csv),
                exit_code: EXIT_OK,
            })
        }
    }
}

fn okounkov_report(job: &JobSpec) -> Result<Report> {
    let (d, input) = single(job)?;
    let lmax = job.lmax.unwrap_or(DEFAULT_OKOUNKOV_LMAX);
    let h = job.hmax.unwrap_or(DEFAULT_SECTION_HEIGHT);
    let fb = match &job.flag {
        Some(f) => FlagBasis::new(d.base(), f)?,
        None => FlagBasis::first(d.base())?,
    };
    let norm = normalize_trivial(&d, &fb)?;
    let nd = &norm.divisor;
    let slice = okounkov_slice_check(nd, &fb, lmax, h)?;
    let growth = match growth_coefficient(nd, &fb, lmax.max(1), h) {
        Ok(g) => serde_json::to_value(g)?,
        Err(Error::NotBig) => json!({ "error": "not_big" }),
        Err(e) => return Err(e),
    };
    let body = match okounkov_body(nd, &fb, lmax.max(1), h) {
        Ok(b) => serde_json::to_value(b)?,
        Err(Error::EmptyPolytope) => Value::Null,
        Err(e) => return Err(e),
    };
    // the fiber check applies to divisors that are Cartier on the base fan
    let fiber = match d.phi().pl_model() {
        Some(PlModel::OnFan(f, values)) if &f == d.base() => {
            let a: Vec<Q> = values.iter().map(|v| -v).collect();
            match global_fiber_check_with(&f, &a, &fb, lmax.min(FIBER_LMAX_CAP)) {
                Ok(r) => serde_json::to_value(r)?,
                Err(e @ (Error::NotBigNef | Error::InvalidInput(_))) => json!({ "error": error_kind(&e), "message": e.to_string() }),
                Err(e) => return Err(e),
            }
        }
        _ => Value::Null,
    };
    let csv = csv_of(
        &["level", "matches", "count"],
        slice.levels.iter().map(|l| vec![l.level.to_string(), l.matches.to_string(), l.count.to_string()]).collect(),
    );
    Ok(Report {
        input,
        thresholds: json!({ "lmax": lmax, "height": h, "flag": fb.rays }),
        result: json!({
            "shift": norm.shift,
            "slice_check": slice,
            "growth": growth,
            "body": body,
            "fiber_check": fiber,
        }),
        csv: Some(csv),
        exit_code: EXIT_OK,
    })
}

fn subdivide_report(job: &JobSpec) -> Result<Report> {
    let (mut chain, input) = match (&job.input, job.builtin.as_slice()) {
        (Some(src), []) => {
            let v: Value = serde_json::from_str(&read_source(src)?)?;
            let chain = if v.get("base").is_some() {
                RefinementChain::from_json(serde_json::from_value::<ChainJson>(v.clone())?)?
            } else {
                RefinementChain::new(Fan::from_json(serde_json::from_value::<FanJson>(v.clone())?)?)?
            };
            (chain, v)
        }
        (None, [name]) => (RefinementChain::new(builtin_fan(name)?)?, json!({ "builtin": name })),
        (None, []) => (RefinementChain::new(Fan::projective_plane())?, json!({ "builtin": "p2" })),
        _ => return Err(Error::InvalidInput("subdivide takes one fan".into())),
    };
    if let Some(face) = &job.face {
        chain.push(face)?;
    }
    if let Some(h) = job.hmax {
        chain.refine_by_height(h)?;
    }
    let fan = chain.fan();
    let csv = csv_of(
        &["ray", "coords"],
        fan.rays().iter().enumerate().map(|(i, r)| vec![i.to_string(), r.to_string()]).collect(),
    );
    Ok(Report {
        input,
        thresholds: json!({ "height": job.hmax, "face": job.face }),
        result: json!({
            "chain": chain.to_json(),
            "fan": fan.to_json(),
            "smooth": fan.is_smooth(),
            "rays": fan.rays().len(),
            "max_cones": fan.max_cones().len(),
        }),
        csv: Some(csv),
        exit_code: EXIT_OK,
    })
}

/// Caps the global thread pool from the environment.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        // a pool that is already configured keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
    };
    let fail = |job: Option<&JobSpec>, e: Error| {
        eprintln!("error: {e}");
        println!("{}", serde_json::to_string_pretty(&error_document(job, &e)).expect("serializable"));
        EXIT_INVALID
    };
    if let Err(e) = configure_threads() {
        return fail(None, e);
    }
    let job = match job_from_args(args) {
        Ok(j) => j,
        Err(e) => return fail(None, e),
    };
    let outcome = run(&job);
    if outcome.exit_code != EXIT_OK {
        if let Some(err) = outcome.document.get("error") {
            eprintln!("error: {}", err["message"].as_str().unwrap_or("unknown"));
        }
    }
    print!("{}", outcome.render(job.out));
    outcome.exit_code
}
