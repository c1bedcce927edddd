//! Command-line front end. Exit status: 0 on success, 2 for configuration
//! errors (including argument errors), 1 for runtime failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::environments::{load_scenario, preset, Scenario};
use crate::error::{Error, Result};
use crate::harness::{self, RunConfig};
use crate::par::Execution;
use crate::policies::{index, ArmStatistics, PolicyConfig, PolicyDefaults, PolicyKind};

#[derive(Debug, Parser)]
#[command(name = "ucboost", version, about = "UCB index policies: regret simulation and index timing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run regret simulations and write the mean regret trace as CSV.
    Simulate(SimulateArgs),
    /// Time index computations on a recorded input pool and write a CSV report.
    Bench(BenchArgs),
    /// Print one upper confidence bound.
    Index(IndexArgs),
}

#[derive(Debug, Args)]
struct PolicyParams {
    /// Default epsilon for `ucboost_eps` without an explicit value.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Default tolerance for `klucb_ref` without an explicit value.
    #[arg(long, default_value_t = crate::kl_approx::REFERENCE_TOL)]
    kl_tol: f64,
    /// Exploration constant in `log t + c log log t`.
    #[arg(long, default_value_t = 0.0)]
    c: f64,
}

impl PolicyParams {
    fn defaults(&self) -> PolicyDefaults {
        PolicyDefaults { epsilon: self.epsilon, kl_tol: self.kl_tol }
    }

    fn parse_list(&self, list: &str) -> Result<Vec<PolicyKind>> {
        let kinds: Vec<PolicyKind> = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| PolicyKind::parse(s, self.defaults()))
            .collect::<Result<_>>()?;
        if kinds.is_empty() {
            return Err(Error::Config("no policies given".into()));
        }
        Ok(kinds)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Preset name or `file:PATH`.
    #[arg(long)]
    scenario: String,
    /// Comma-separated policy list.
    #[arg(long)]
    policies: String,
    #[arg(long, default_value_t = 10_000)]
    horizon: u64,
    #[arg(long, default_value_t = 200)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    params: PolicyParams,
    /// Record regret every N steps (and at the horizon).
    #[arg(long, default_value_t = 100)]
    stride: u64,
    /// Run replications on one thread.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    policies: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[command(flatten)]
    params: PolicyParams,
    /// Seed of the recorded trajectory behind the input pool.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long)]
    policy: String,
    /// Empirical mean.
    #[arg(long)]
    mean: f64,
    #[arg(long)]
    pulls: u64,
    #[arg(long)]
    t: u64,
    #[command(flatten)]
    params: PolicyParams,
}

const USAGE_HINT: &str = "policies: ucb1, ucb_bq, ucb_h, ucboost_d[:bq+h+lb], ucboost_eps[:EPS], \
klucb_ref[:TOL], klucb_general\nscenarios: bernoulli1, bernoulli2, beta, file:PATH\n\
run `ucboost <command> --help` for usage";

/// Horizon of the trajectory the bench input pool is drawn from.
const POOL_HORIZON: u64 = 10_000;

fn scenario(spec: &str) -> Result<Scenario> {
    match spec.strip_prefix("file:") {
        Some(path) => load_scenario(Path::new(path)),
        None => preset(spec),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = RunConfig {
        scenario: scenario(&args.scenario)?,
        policies: args.params.parse_list(&args.policies)?,
        horizon: args.horizon,
        runs: args.runs,
        seed: args.seed,
        c: args.params.c,
        stride: args.stride,
        execution: if args.serial { Execution::Serial } else { Execution::Parallel },
    };
    let traces = harness::simulate(&cfg)?;
    harness::write_regret_csv(&traces, &args.out)
}

fn bench(args: BenchArgs) -> Result<()> {
    let configs: Vec<PolicyConfig> = args
        .params
        .parse_list(&args.policies)?
        .into_iter()
        .map(|k| PolicyConfig::new(k, args.params.c))
        .collect::<Result<_>>()?;
    let pool = harness::recorded_pool(args.seed, POOL_HORIZON)?;
    let reports = harness::bench(&configs, args.samples, &pool)?;
    harness::write_timing_csv(&reports, &args.out)
}

fn print_index(args: IndexArgs, out: &mut dyn Write) -> Result<()> {
    let kind = PolicyKind::parse(&args.policy, args.params.defaults())?;
    let cfg = PolicyConfig::new(kind, args.params.c)?;
    if args.pulls == 0 || args.t == 0 {
        return Err(Error::Config("pulls and t must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&args.mean) {
        return Err(Error::OutOfUnitInterval(args.mean));
    }
    let arm = ArmStatistics::new(args.pulls, args.mean * args.pulls as f64)?;
    let q = index(&cfg, &arm, args.t)?;
    writeln!(out, "{:.9}", q.get()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
}

/// Runs the CLI with explicit output streams and returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
        Command::Index(a) => print_index(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::UnknownPolicy(_) | Error::UnknownPreset(_)) {
                let _ = writeln!(err, "{USAGE_HINT}");
            }
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
