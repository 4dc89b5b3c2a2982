//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 check failure,
//! 3 budget or time-limit refusal.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::enumeration::EnumerationError;
use crate::generate::{random_network, GenParams};
use crate::model::{
    bridge_example, serialize_report, uniform_distribution, EdgeStateDistribution, Network,
    NetworkDocument, ReportFormat, State,
};
use crate::reliability::{
    all_levels_reliability, exhaustive_oracle, monte_carlo, EngineError, EngineOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

/// Oracle agreement required by `check`.
pub const CHECK_ORACLE_TOLERANCE: f64 = 1e-9;
/// Monte-Carlo agreement required by `check`, in standard errors.
pub const CHECK_MC_SIGMAS: f64 = 4.0;
/// Below this many samples the Monte-Carlo comparison is reported only.
pub const CHECK_MIN_POWER_SAMPLES: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "mfnrel",
    version,
    about = "All-levels reliability of multistate flow networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute r_d and R_d for every level of one network document.
    Run(RunArgs),
    /// Compare the engine against the exhaustive oracle and Monte-Carlo.
    Check(CheckArgs),
    /// Time the engine on the built-in bridge and/or network documents.
    Bench(BenchArgs),
    /// Emit a random connected network document.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Replace every edge distribution by a uniform one over 0..=MAX_STATE.
    #[arg(long, value_name = "MAX_STATE")]
    pub uniform: Option<State>,
    /// Rescale distributions that do not sum to 1.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Sweep threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: u32,
    /// Run even when the state space exceeds the default budget of 2^40 vectors.
    #[arg(long)]
    pub budget_override: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub input_opts: InputArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub limit: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Network document; omit with --random.
    #[arg(required_unless_present = "random")]
    pub input: Option<PathBuf>,
    /// Check a generated instance instead (uses --n, --m, --max-state, --seed).
    #[arg(long, conflicts_with = "input")]
    pub random: bool,
    #[arg(long, default_value_t = 5)]
    pub n: u32,
    #[arg(long, default_value_t = 7)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub max_state: State,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub input_opts: InputArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Additional network documents.
    pub inputs: Vec<PathBuf>,
    /// Include the built-in bridge with five uniform states per edge.
    #[arg(long)]
    pub builtin: bool,
    #[command(flatten)]
    pub input_opts: InputArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Wall-clock limit per instance in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub limit: f64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub max_state: State,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random per-edge probabilities instead of uniform ones.
    #[arg(long)]
    pub random_dist: bool,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::BudgetExceeded { .. }
            | EngineError::Timeout { .. }
            | EngineError::OracleTooLarge { .. }
            | EngineError::Enumeration(EnumerationError::StateSpaceOverflow)
            | EngineError::Flow(_) => EXIT_REFUSED,
            EngineError::EdgeCountMismatch { .. } | EngineError::Enumeration(_) => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::invalid(e.to_string())
    }
}

type CliResult = Result<i32, CliError>;

/// Parses `args` (including the program name) and runs the subcommand,
/// writing results to `out` and diagnostics to `err`. Returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            if e.use_stderr() {
                let _ = write!(err, "{e}");
            } else {
                let _ = write!(out, "{e}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Gen(a) => cmd_gen(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn load(path: &Path, opts: &InputArgs) -> Result<(Network, EdgeStateDistribution), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    let mut doc: NetworkDocument = serde_json::from_str(&text).map_err(|e| {
        CliError::invalid(format!(
            "{}: malformed network document: {e}",
            path.display()
        ))
    })?;
    if opts.normalize {
        doc.normalize = Some(true);
    }
    let (net, dist) = doc
        .into_model()
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    Ok(apply_uniform(net, dist, opts.uniform))
}

fn apply_uniform(
    net: Network,
    dist: EdgeStateDistribution,
    uniform: Option<State>,
) -> (Network, EdgeStateDistribution) {
    match uniform {
        Some(k) => {
            let dist = uniform_distribution(&net, k);
            (net, dist)
        }
        None => (net, dist),
    }
}

fn engine_options(args: &EngineArgs, limit: Option<f64>) -> EngineOptions {
    EngineOptions {
        workers: args.workers as usize,
        budget: if args.budget_override {
            None
        } else {
            EngineOptions::default().budget
        },
        skip_prefix: true,
        deadline: limit.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0))),
    }
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> CliResult {
    let (net, dist) = load(&args.input, &args.input_opts)?;
    let report = all_levels_reliability(&net, &dist, &engine_options(&args.engine, args.limit))?;
    out.write_all(serialize_report(&report, args.format).as_bytes())?;
    Ok(EXIT_OK)
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> CliResult {
    let (net, dist) = match &args.input {
        Some(path) => load(path, &args.input_opts)?,
        None => {
            let (net, dist) = random_network(&GenParams {
                n: args.n,
                m: args.m,
                max_state: args.max_state,
                random_dist: true,
                seed: args.seed,
            })
            .map_err(|e| CliError::invalid(e.to_string()))?;
            apply_uniform(net, dist, args.input_opts.uniform)
        }
    };

    let oracle = exhaustive_oracle(&net, &dist)?;
    let engine = all_levels_reliability(&net, &dist, &engine_options(&args.engine, None))?;
    let mc = monte_carlo(&net, &dist, args.samples, args.seed)?;

    writeln!(
        out,
        "instance: n={} m={} N={} N_FC={} d_max={}",
        net.vertex_count(),
        net.edge_count(),
        engine.n_total,
        engine.n_processed,
        engine.d_max
    )?;
    writeln!(out, "d,R_engine,R_oracle,delta,R_mc,se,z")?;

    let mut oracle_ok = engine.d_max == oracle.d_max && engine.x_fc == oracle.x_fc;
    let mut max_delta = (engine.pr_disconnected - oracle.pr_disconnected).abs();
    let mut mc_ok = true;
    for d in 0..engine.d_max as usize {
        let exact = engine.big_r[d];
        let o = oracle.big_r.get(d).copied().unwrap_or(f64::NAN);
        let delta = (exact - o)
            .abs()
            .max((engine.r[d] - oracle.r.get(d).copied().unwrap_or(f64::NAN)).abs());
        if delta.is_nan() {
            oracle_ok = false;
        } else {
            max_delta = max_delta.max(delta);
        }
        let est = mc.estimates[d];
        // Under the null the spread is set by the exact value; the sample
        // estimate alone degenerates to 0 whenever R̂ hits 0 or 1.
        let se = mc.std_errors[d].max((exact * (1.0 - exact) / mc.samples as f64).sqrt());
        let z = if se > 0.0 {
            (est - exact).abs() / se
        } else if est == exact {
            0.0
        } else {
            f64::INFINITY
        };
        if z > CHECK_MC_SIGMAS {
            mc_ok = false;
        }
        writeln!(
            out,
            "{},{:.9},{:.9},{:.3e},{:.9},{:.3e},{:.2}",
            d + 1,
            exact,
            o,
            delta,
            est,
            se,
            z
        )?;
    }
    oracle_ok &= max_delta <= CHECK_ORACLE_TOLERANCE;
    let low_power = mc.samples < CHECK_MIN_POWER_SAMPLES;

    writeln!(
        out,
        "oracle: {} (max delta {:.3e}, tolerance {:.0e})",
        if oracle_ok { "PASS" } else { "FAIL" },
        max_delta,
        CHECK_ORACLE_TOLERANCE
    )?;
    let mc_status = match (low_power, mc_ok) {
        (true, _) => "LOW-POWER (not gating)",
        (false, true) => "PASS",
        (false, false) => "FAIL",
    };
    writeln!(
        out,
        "monte-carlo: {} ({} samples, seed {}, {}, {}-sigma)",
        mc_status, mc.samples, mc.seed, mc.rng, CHECK_MC_SIGMAS
    )?;
    let pass = oracle_ok && (low_power || mc_ok);
    writeln!(out, "{}", if pass { "PASS" } else { "FAIL" })?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Column header of the `bench` table.
pub const BENCH_HEADER: &str =
    "id,status,n,m,d_max,x_fc,elapsed_s,n_total,n_processed,r_1,r_2,r_3,r_4";

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> CliResult {
    let mut instances: Vec<(String, Network, EdgeStateDistribution)> = Vec::new();
    if args.builtin || args.inputs.is_empty() {
        let (net, _) = bridge_example();
        let dist = uniform_distribution(&net, args.input_opts.uniform.unwrap_or(4));
        instances.push(("bridge".to_string(), net, dist));
    }
    for path in &args.inputs {
        let (net, dist) = load(path, &args.input_opts)?;
        instances.push((path.display().to_string(), net, dist));
    }

    writeln!(out, "{BENCH_HEADER}")?;
    for (id, net, dist) in &instances {
        let options = engine_options(&args.engine, Some(args.limit));
        let started = Instant::now();
        let (n, m) = (net.vertex_count(), net.edge_count());
        match all_levels_reliability(net, dist, &options) {
            Ok(rep) => {
                let x_fc = rep.x_fc.as_ref().map(|x| x.to_string()).unwrap_or_default();
                let levels: Vec<String> = (0..4)
                    .map(|d| rep.r.get(d).map(|v| format!("{v:.9}")).unwrap_or_default())
                    .collect();
                writeln!(
                    out,
                    "{id},ok,{n},{m},{},\"{x_fc}\",{:.3},{},{},{}",
                    rep.d_max,
                    rep.elapsed,
                    rep.n_total,
                    rep.n_processed,
                    levels.join(",")
                )?;
            }
            Err(EngineError::Timeout { .. }) => {
                writeln!(
                    out,
                    "{id},TIMEOUT,{n},{m},,,{:.3},,,,,,",
                    started.elapsed().as_secs_f64()
                )?;
            }
            Err(EngineError::BudgetExceeded { total, .. }) => {
                writeln!(out, "{id},REFUSED,{n},{m},,,0.000,{total},,,,,")?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> CliResult {
    let (net, dist) = random_network(&GenParams {
        n: args.n,
        m: args.m,
        max_state: args.max_state,
        random_dist: args.random_dist,
        seed: args.seed,
    })
    .map_err(|e| CliError::invalid(e.to_string()))?;
    writeln!(
        out,
        "{}",
        NetworkDocument::from_model(&net, &dist).to_json()
    )?;
    Ok(EXIT_OK)
}
