//! Command-line interface. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | parse or usage error (bad flags, malformed files) |
//! | 2 | invalid instance (degree > 3, self-loop, `|L(v)| < deg(v)+1`, ...) |
//! | 3 | unsatisfiable instance (count 0 is still printed) |
//! | 4 | exact oracle capacity exceeded |
//! | 5 | decay verification failed |

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use colorcount::counter::{approx_count, depth_for_epsilon, CountConfig, CountError, DepthPolicy};
use colorcount::decay::{verify_all, verify_case, AlphaReport, DecayError, Threshold, VerifyOptions, CASES};
use colorcount::generators::{generate, CorpusSpec, Family, GenError, ListPolicy};
use colorcount::oracle::{Oracle, OracleError, DEFAULT_VERTEX_CAP};
use colorcount::{
    classify_boundary, estimate_marginal, Backend, Color, EstimateError, EstimatorConfig, Instance, Probability,
};
use serde_json::{json, Value};

use crate::formats::{load_instance, write_graph, write_lists, FormatError};
use crate::report::{InputDigest, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNSATISFIABLE: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;
pub const EXIT_VERIFY_FAILED: i32 = 5;

const DEFAULT_DEPTH: u32 = 8;

#[derive(Parser, Debug)]
#[command(name = "colorcount", version, about = "Approximate and exact counting of list 4-colorings on graphs of maximum degree 3")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Approximate the number of proper list-colorings.
    Count(CountArgs),
    /// Estimate one marginal Pr[c(v) = i].
    Marginal(MarginalArgs),
    /// Exact count or marginal by backtracking.
    Exact(ExactArgs),
    /// Re-verify the contraction-rate inequalities on a grid.
    VerifyDecay(VerifyArgs),
    /// Write a graph file (and optionally a lists file).
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Graph file (`p edge n m` + `e u v` lines, or `n m [base]` + `u v` lines).
    graph: PathBuf,
    /// JSON lists file; vertices not listed get {1,2,3,4}.
    #[arg(long)]
    lists: Option<PathBuf>,
    /// Print a JSON run report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Float,
    Rational,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Float => Backend::Float,
            BackendArg::Rational => Backend::Rational,
        }
    }
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Fixed recursion depth.
    #[arg(long, conflicts_with = "epsilon")]
    depth: Option<u32>,
    /// Target relative error; the depth follows from the decay rate.
    #[arg(long)]
    epsilon: Option<f64>,
    /// The decay constant C used with --epsilon.
    #[arg(long, default_value_t = 1.0, requires = "epsilon")]
    constant: f64,
    /// Refuse depths above this (the --epsilon schedule is very deep).
    #[arg(long, default_value_t = 64)]
    max_depth: u32,
    #[arg(long, value_enum, default_value_t = BackendArg::Float)]
    backend: BackendArg,
    /// Disable the sub-instance cache.
    #[arg(long)]
    no_memo: bool,
}

#[derive(Args, Debug)]
struct MarginalArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Vertex (0-based).
    #[arg(long)]
    vertex: usize,
    /// Color in 1..=4.
    #[arg(long)]
    color: u8,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long, value_enum, default_value_t = BackendArg::Float)]
    backend: BackendArg,
    #[arg(long)]
    no_memo: bool,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Exact marginal of vertex V and color I instead of the count.
    #[arg(long, num_args = 2, value_names = ["V", "I"])]
    marginal: Option<Vec<u64>>,
    /// Largest instance the oracle accepts.
    #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Grid step per dimension.
    #[arg(long, default_value_t = 0.005)]
    resolution: f64,
    /// A check name or `all`.
    #[arg(long, default_value = "all")]
    case: String,
    /// Replace a report's threshold, e.g. `resolve3+=0.90` (negative controls).
    #[arg(long = "override-threshold", value_name = "NAME=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    K4,
    Cycle,
    Path,
    Star3,
    Petersen,
    Kp33,
    Cubic,
    Subcubic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ListsArg {
    Full,
    Random,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Vertex count for cycle, path, cubic and subcubic.
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability for subcubic.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ListsArg::Full)]
    list_policy: ListsArg,
    /// Seed for random lists (default: --seed).
    #[arg(long)]
    list_seed: Option<u64>,
    /// Graph output path.
    #[arg(long)]
    out: PathBuf,
    /// Lists output path (written only when given).
    #[arg(long)]
    lists_out: Option<PathBuf>,
}

/// An error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: i32, error: impl Into<anyhow::Error>) -> Self {
        Failure { code, error: error.into() }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        let code = match e {
            FormatError::Instance(_) => EXIT_INVALID,
            _ => EXIT_PARSE,
        };
        Failure::new(code, e)
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Self {
        let code = match e {
            CountError::Invalid(_) => EXIT_INVALID,
            CountError::Unsatisfiable => EXIT_UNSATISFIABLE,
            CountError::Policy(_) => EXIT_PARSE,
            _ => EXIT_INVALID,
        };
        Failure::new(code, e)
    }
}

impl From<EstimateError> for Failure {
    fn from(e: EstimateError) -> Self {
        let code = match e {
            EstimateError::Unsatisfiable { .. } => EXIT_UNSATISFIABLE,
            EstimateError::Instance(_) => EXIT_PARSE,
            EstimateError::Contract(_) => EXIT_INVALID,
        };
        Failure::new(code, e)
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::Capacity { .. } => EXIT_CAPACITY,
            OracleError::UndefinedMeasure => EXIT_UNSATISFIABLE,
            OracleError::Instance(_) => EXIT_PARSE,
        };
        Failure::new(code, e)
    }
}

impl From<DecayError> for Failure {
    fn from(e: DecayError) -> Self {
        Failure::new(EXIT_PARSE, e)
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        Failure::new(EXIT_PARSE, e)
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        // Only fails if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let outcome = match cli.command {
        Command::Count(a) => cmd_count(a),
        Command::Marginal(a) => cmd_marginal(a),
        Command::Exact(a) => cmd_exact(a),
        Command::VerifyDecay(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::new(EXIT_PARSE, e))
}

struct Loaded {
    inst: Instance,
    digest: InputDigest,
}

fn load(input: &InputArgs) -> Result<Loaded, Failure> {
    let graph = read(&input.graph)?;
    let lists = input.lists.as_deref().map(read).transpose()?;
    let inst = load_instance(&graph, lists.as_deref())?;
    Ok(Loaded {
        inst,
        digest: InputDigest::of(&graph, lists.as_deref()),
    })
}

fn emit(json_out: bool, report: RunReport, text: impl FnOnce() -> String) {
    if json_out {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", text());
    }
}

fn warn_default_depth() {
    eprintln!(
        "warning: no --depth/--epsilon given, using depth {DEFAULT_DEPTH}; accuracy at this depth is empirical \
         (the proven schedule for --epsilon needs depths in the tens of thousands)"
    );
}

fn prob_json(p: &Probability) -> Value {
    serde_json::to_value(p).expect("probability serializes")
}

fn cmd_count(a: CountArgs) -> Outcome {
    let loaded = load(&a.input)?;
    let policy = match (a.depth, a.epsilon) {
        (Some(d), _) => DepthPolicy::fixed(d),
        (None, Some(eps)) => DepthPolicy::target(eps, a.constant),
        (None, None) => {
            warn_default_depth();
            DepthPolicy::fixed(DEFAULT_DEPTH)
        }
    };
    policy.validate()?;
    let depth = depth_for_epsilon(&policy, loaded.inst.num_vertices());
    if depth > a.max_depth {
        return Err(Failure::new(
            EXIT_PARSE,
            anyhow!("the requested accuracy needs depth {depth}, above --max-depth {}", a.max_depth),
        ));
    }
    let cfg = CountConfig::new(policy).with_backend(a.backend.into()).with_memo(!a.no_memo);
    let start = Instant::now();
    let r = approx_count(&loaded.inst, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let config = json!({
        "policy": policy,
        "depth": depth,
        "backend": Backend::from(a.backend),
        "memoize": !a.no_memo,
    });
    let result = json!({
        "count": r.estimate,
        "unsatisfiable": r.unsatisfiable,
        "depth_used": r.depth_used,
        "epsilon_claimed": r.epsilon_claimed,
        "factors": r.factors,
    });
    let report = RunReport::new("count", loaded.digest, config, result, elapsed);
    emit(a.input.json, report, || {
        let mut s = format!("count: {}\n", r.estimate);
        s += &format!("depth: {}\n", r.depth_used);
        if r.unsatisfiable {
            s += "unsatisfiable: forced colors empty a list or a marginal vanished\n";
        }
        s
    });
    Ok(if r.unsatisfiable { EXIT_UNSATISFIABLE } else { EXIT_OK })
}

fn color_arg(c: u64) -> Result<Color, Failure> {
    u8::try_from(c)
        .ok()
        .and_then(|c| Color::new(c).ok())
        .ok_or_else(|| Failure::new(EXIT_PARSE, anyhow!("color {c} not in 1..=4")))
}

fn cmd_marginal(a: MarginalArgs) -> Outcome {
    let loaded = load(&a.input)?;
    let inst = &loaded.inst;
    let color = color_arg(a.color.into())?;
    if a.vertex >= inst.capacity() {
        return Err(Failure::new(
            EXIT_PARSE,
            anyhow!("vertex {} out of range for n = {}", a.vertex, inst.capacity()),
        ));
    }
    let depth = a.depth.unwrap_or_else(|| {
        warn_default_depth();
        DEFAULT_DEPTH
    });
    let cfg = EstimatorConfig::new(depth).with_backend(a.backend.into()).with_memo(!a.no_memo);
    let start = Instant::now();
    let p = estimate_marginal(inst, a.vertex, color, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let reach = inst.check_reachable(a.vertex);
    let class = if reach.satisfied {
        Some(classify_boundary(inst, a.vertex, color)?)
    } else {
        None
    };
    let config = json!({ "depth": depth, "backend": Backend::from(a.backend), "memoize": !a.no_memo });
    let result = json!({
        "vertex": a.vertex,
        "color": color,
        "marginal": prob_json(&p),
        "marginal_f64": p.to_f64(),
        "reachable": reach.satisfied,
        "violated_condition": reach.violated_condition,
        "boundary_class": class,
    });
    let report = RunReport::new("marginal", loaded.digest, config, result, elapsed);
    emit(a.input.json, report, || {
        let mut s = format!("marginal: {p}\n");
        match &class {
            Some(c) if c.witness.is_empty() => s += &format!("class: {}\n", c.kind),
            Some(c) => s += &format!("class: {} ({})\n", c.kind, c.witness),
            None => s += &format!("class: n/a (not reachable: {})\n", reach.violated_condition.clone().unwrap_or_default()),
        }
        s
    });
    Ok(EXIT_OK)
}

fn cmd_exact(a: ExactArgs) -> Outcome {
    let loaded = load(&a.input)?;
    let oracle = Oracle::with_cap(a.cap);
    let start = Instant::now();
    let (result, text) = match &a.marginal {
        Some(vi) => {
            let (v, c) = (vi[0] as usize, color_arg(vi[1])?);
            let m = oracle.marginal(&loaded.inst, v, c)?;
            (json!({ "vertex": v, "color": c, "marginal": m.to_string() }), format!("marginal: {m}\n"))
        }
        None => {
            let z = oracle.count(&loaded.inst)?;
            (json!({ "count": z.to_string() }), format!("count: {z}\n"))
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let report = RunReport::new("exact", loaded.digest, json!({ "cap": oracle.cap() }), result, elapsed);
    emit(a.input.json, report, || text);
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let mut opts = VerifyOptions::default();
    for o in &a.overrides {
        let (name, value) = o
            .split_once('=')
            .ok_or_else(|| Failure::new(EXIT_PARSE, anyhow!("--override-threshold expects NAME=VALUE, got {o:?}")))?;
        opts.threshold_overrides.push((name.to_string(), Threshold::parse(value)?));
    }
    let start = Instant::now();
    let reports: Vec<AlphaReport> = if a.case == "all" {
        verify_all(a.resolution, &opts)?
    } else if CASES.contains(&a.case.as_str()) {
        verify_case(&a.case, a.resolution, &opts)?
    } else {
        return Err(Failure::new(
            EXIT_PARSE,
            anyhow!("unknown case {:?}; expected `all` or one of {}", a.case, CASES.join(", ")),
        ));
    };
    let elapsed = start.elapsed().as_secs_f64();
    let all_pass = reports.iter().all(|r| r.pass);
    let result = json!({ "pass": all_pass, "reports": reports });
    let config = json!({ "resolution": a.resolution, "case": a.case, "overrides": a.overrides });
    let report = RunReport::new("verify-decay", InputDigest::none(), config, result, elapsed);
    emit(a.json, report, || {
        let mut s: String = reports.iter().map(|r| format!("{r}\n")).collect();
        s += if all_pass { "all checks passed\n" } else { "SOME CHECKS FAILED\n" };
        s
    });
    Ok(if all_pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let need_n = || a.n.ok_or_else(|| Failure::new(EXIT_PARSE, anyhow!("--n is required for this family")));
    let family = match a.family {
        FamilyArg::K4 => Family::CompleteK4,
        FamilyArg::Cycle => Family::Cycle(need_n()?),
        FamilyArg::Path => Family::Path(need_n()?),
        FamilyArg::Star3 => Family::Star3,
        FamilyArg::Petersen => Family::Petersen,
        FamilyArg::Kp33 => Family::Kp33,
        FamilyArg::Cubic => Family::RandomCubic { n: need_n()?, seed: a.seed },
        FamilyArg::Subcubic => Family::RandomSubcubic { n: need_n()?, p: a.p, seed: a.seed },
    };
    let lists = match a.list_policy {
        ListsArg::Full => ListPolicy::Full,
        ListsArg::Random => ListPolicy::RandomValid { seed: a.list_seed.unwrap_or(a.seed) },
    };
    let inst = generate(&CorpusSpec { family, lists })?;
    let write = |path: &Path, text: String| {
        fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(|e| Failure::new(EXIT_PARSE, e))
    };
    write(&a.out, write_graph(inst.base_graph()))?;
    if let Some(p) = &a.lists_out {
        write(p, write_lists(&inst.lists()))?;
    }
    Ok(EXIT_OK)
}
