//! Command-line front end: single-trajectory simulation, the benchmark
//! plans, schedule-assumption validation, and the discrete algorithm.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error,
//! 3 validation ran and reported "not satisfied".

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nshr::bench::{
    self, run_custom_config, run_dnshr_config, run_plan, ExperimentPlan, PlanKind, RunResult,
};
use nshr::dnshr::DnshrConfig;
use nshr::dynamics::{Driver, DynamicKind, DynamicSpec};
use nshr::integrate::IntegratorConfig;
use nshr::monotone::SubdifferentialOperator;
use nshr::proxcore::test_objective;
use nshr::schedules::{
    validate_assumption_b, validate_assumption_d, AssumptionReport, ParameterSchedule, PowerFn,
};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_UNSATISFIED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nshr",
    about = "Proximal inertial dynamics with Tikhonov regularization: \
             simulation, benchmarks, validation, and the discrete algorithm",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and export its diagnostics as CSV.
    Simulate(SimulateArgs),
    /// Run a benchmark plan and export one CSV per configuration.
    Bench(BenchArgs),
    /// Check a parameter schedule against an assumption; prints a report.
    Validate(ValidateArgs),
    /// Run the discrete proximal algorithm and export its iterate history.
    Dnshr(DnshrArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DynamicArg {
    /// Second-order dynamic with vanishing damping and Moreau-envelope drive.
    Nshr,
    /// The same dynamic driven by a Yosida-regularized monotone operator
    /// (here: the subdifferential of the built-in test objective).
    Hrmmd,
    /// First-order baseline with the Tikhonov coefficient, no Hessian term.
    BaselineDelta,
    /// First-order baseline with unit coefficient.
    BaselineUnit,
    /// Inertial Newton-like benchmark with smoothing (1.1/9)*t^2.
    Al,
    /// Time-rescaled benchmark with b(t) = 4.1*t^0.5, smoothing t^0.5.
    Bk,
}

#[derive(Args)]
struct SimulateArgs {
    /// Which dynamic to integrate.
    #[arg(long, value_enum, default_value = "nshr")]
    dynamic: DynamicArg,
    /// Damping coefficient alpha (dimensionless, > 0).
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    /// Hessian-driven coefficient beta (time units, >= 0).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Schedule exponent p: Tikhonov coefficient t^p, smoothing c*t^(p+2).
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Schedule coefficient c (> 0).
    #[arg(long, default_value_t = 0.01)]
    c: f64,
    /// Start time (time units).
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    /// End time (time units).
    #[arg(long = "t-end", default_value_t = 50.0)]
    t_end: f64,
    /// Initial position, comma-separated.
    #[arg(long, default_value = "20,-15")]
    x0: String,
    /// Initial velocity, comma-separated.
    #[arg(long, default_value = "0,0")]
    v0: String,
    /// Integrator absolute tolerance.
    #[arg(long = "abs-tol", default_value_t = 1e-10)]
    abs_tol: f64,
    /// Integrator relative tolerance.
    #[arg(long = "rel-tol", default_value_t = 1e-8)]
    rel_tol: f64,
    /// Number of log-spaced output samples.
    #[arg(long, default_value_t = 600)]
    samples: usize,
    /// Output directory for CSV and metadata.
    #[arg(long, default_value = "./results")]
    out: PathBuf,
    /// Flat key=value config file; keys mirror flag names and override flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanArg {
    #[value(name = "vary_beta")]
    VaryBeta,
    #[value(name = "vary_alpha")]
    VaryAlpha,
    Compare,
    #[value(name = "monotone_demo")]
    MonotoneDemo,
    #[value(name = "dnshr_demo")]
    DnshrDemo,
}

#[derive(Args)]
struct BenchArgs {
    /// Which benchmark plan to run.
    #[arg(long, value_enum)]
    plan: PlanArg,
    /// Output directory for CSVs and metadata.
    #[arg(long, default_value = "./results")]
    out: PathBuf,
    /// Flat key=value config file; keys mirror flag names and override flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AssumptionArg {
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "D", alias = "d")]
    D,
}

#[derive(Args)]
struct ValidateArgs {
    /// Which assumption to check: B (objective decay) or D (operator decay).
    #[arg(long, value_enum)]
    assumption: AssumptionArg,
    /// Damping coefficient alpha.
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    /// Anchor weight sigma, required in (0, alpha-1); used by assumption D.
    #[arg(long, default_value_t = 1.5)]
    sigma: f64,
    /// Schedule exponent p.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Schedule coefficient c.
    #[arg(long, default_value_t = 0.01)]
    c: f64,
    /// Flat key=value config file; keys mirror flag names and override flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DnshrArgs {
    /// Step size h (> 0).
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Maximum number of iterations.
    #[arg(long, default_value_t = 20000)]
    n: usize,
    /// Damping coefficient alpha.
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    /// Hessian-driven coefficient beta.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Schedule exponent p.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Schedule coefficient c.
    #[arg(long, default_value_t = 0.01)]
    c: f64,
    /// Output directory for CSV and metadata.
    #[arg(long, default_value = "./results")]
    out: PathBuf,
    /// Flat key=value config file; keys mirror flag names and override flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// A usage-level error (bad flags or config): message plus exit code 2.
struct UsageError(String);

fn read_config(path: &Path) -> Result<Vec<(String, String)>, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            UsageError(format!(
                "config {}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, UsageError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| UsageError(format!("config key {key}: invalid value {value:?}: {e}")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, UsageError> {
    T::from_str(value, false)
        .map_err(|e| UsageError(format!("config key {key}: invalid value {value:?}: {e}")))
}

fn unknown_key(key: &str) -> UsageError {
    UsageError(format!("config key {key}: not a recognized flag name"))
}

impl SimulateArgs {
    fn apply_config(&mut self) -> Result<(), UsageError> {
        let Some(path) = self.config.clone() else { return Ok(()) };
        for (k, v) in read_config(&path)? {
            match k.as_str() {
                "dynamic" => self.dynamic = parse_enum(&k, &v)?,
                "alpha" => self.alpha = parse_as(&k, &v)?,
                "beta" => self.beta = parse_as(&k, &v)?,
                "p" => self.p = parse_as(&k, &v)?,
                "c" => self.c = parse_as(&k, &v)?,
                "t0" => self.t0 = parse_as(&k, &v)?,
                "t-end" => self.t_end = parse_as(&k, &v)?,
                "x0" => self.x0 = v,
                "v0" => self.v0 = v,
                "abs-tol" => self.abs_tol = parse_as(&k, &v)?,
                "rel-tol" => self.rel_tol = parse_as(&k, &v)?,
                "samples" => self.samples = parse_as(&k, &v)?,
                "out" => self.out = PathBuf::from(v),
                _ => return Err(unknown_key(&k)),
            }
        }
        Ok(())
    }
}

impl BenchArgs {
    fn apply_config(&mut self) -> Result<(), UsageError> {
        let Some(path) = self.config.clone() else { return Ok(()) };
        for (k, v) in read_config(&path)? {
            match k.as_str() {
                "plan" => self.plan = parse_enum(&k, &v)?,
                "out" => self.out = PathBuf::from(v),
                _ => return Err(unknown_key(&k)),
            }
        }
        Ok(())
    }
}

impl ValidateArgs {
    fn apply_config(&mut self) -> Result<(), UsageError> {
        let Some(path) = self.config.clone() else { return Ok(()) };
        for (k, v) in read_config(&path)? {
            match k.as_str() {
                "assumption" => self.assumption = parse_enum(&k, &v)?,
                "alpha" => self.alpha = parse_as(&k, &v)?,
                "sigma" => self.sigma = parse_as(&k, &v)?,
                "p" => self.p = parse_as(&k, &v)?,
                "c" => self.c = parse_as(&k, &v)?,
                _ => return Err(unknown_key(&k)),
            }
        }
        Ok(())
    }
}

impl DnshrArgs {
    fn apply_config(&mut self) -> Result<(), UsageError> {
        let Some(path) = self.config.clone() else { return Ok(()) };
        for (k, v) in read_config(&path)? {
            match k.as_str() {
                "h" => self.h = parse_as(&k, &v)?,
                "n" => self.n = parse_as(&k, &v)?,
                "alpha" => self.alpha = parse_as(&k, &v)?,
                "beta" => self.beta = parse_as(&k, &v)?,
                "p" => self.p = parse_as(&k, &v)?,
                "c" => self.c = parse_as(&k, &v)?,
                "out" => self.out = PathBuf::from(v),
                _ => return Err(unknown_key(&k)),
            }
        }
        Ok(())
    }
}

fn parse_vec(key: &str, text: &str) -> Result<Vec<f64>, UsageError> {
    text.split(',')
        .map(|s| parse_as::<f64>(key, s.trim()))
        .collect()
}

fn run_simulate(mut args: SimulateArgs) -> Result<u8, CliFailure> {
    args.apply_config()?;
    let x0 = parse_vec("x0", &args.x0)?;
    let v0 = parse_vec("v0", &args.v0)?;
    let (kind, schedule, driver) = match args.dynamic {
        DynamicArg::Nshr => (
            DynamicKind::Nshr,
            ParameterSchedule::polynomial(args.p, args.c, args.t0)?,
            Driver::Objective(Arc::new(test_objective())),
        ),
        DynamicArg::Hrmmd => (
            DynamicKind::Hrmmd,
            ParameterSchedule::polynomial(args.p, args.c, args.t0)?,
            Driver::Operator(Arc::new(SubdifferentialOperator {
                objective: Arc::new(test_objective()),
            })),
        ),
        DynamicArg::BaselineDelta => (
            DynamicKind::BaselineDelta,
            ParameterSchedule::polynomial(args.p, args.c, args.t0)?,
            Driver::Objective(Arc::new(test_objective())),
        ),
        DynamicArg::BaselineUnit => (
            DynamicKind::BaselineUnit,
            ParameterSchedule::polynomial(args.p, args.c, args.t0)?,
            Driver::Objective(Arc::new(test_objective())),
        ),
        DynamicArg::Al => (
            DynamicKind::AttouchLaszlo,
            ParameterSchedule::Power {
                delta: PowerFn { coef: 1.0, exponent: 0.0 },
                gamma: PowerFn {
                    coef: bench::constants::AL_LAMBDA_COEF,
                    exponent: 2.0,
                },
                t0: args.t0,
            },
            Driver::Objective(Arc::new(test_objective())),
        ),
        DynamicArg::Bk => (
            DynamicKind::BotKarapetyants,
            ParameterSchedule::Power {
                delta: PowerFn {
                    coef: bench::constants::BK_B_COEF,
                    exponent: bench::constants::BK_EXPONENT,
                },
                gamma: PowerFn {
                    coef: 1.0,
                    exponent: bench::constants::BK_EXPONENT,
                },
                t0: args.t0,
            },
            Driver::Objective(Arc::new(test_objective())),
        ),
    };
    let spec = DynamicSpec::new(kind, args.alpha, args.beta, schedule, driver, args.t0)?;
    let plan = ExperimentPlan {
        kind: PlanKind::Custom,
        t0: args.t0,
        t_end: args.t_end,
        samples: args.samples,
        integrator: IntegratorConfig {
            abs_tol: args.abs_tol,
            rel_tol: args.rel_tol,
            ..Default::default()
        },
    };
    let key = args
        .dynamic
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string();
    let cfg = run_custom_config(&plan, &key, spec, &x0, &v0)?;
    let result = RunResult { plan, configs: vec![cfg] };
    let paths = bench::export_csv(&result, &args.out)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn run_bench(mut args: BenchArgs) -> Result<u8, CliFailure> {
    args.apply_config()?;
    let kind = match args.plan {
        PlanArg::VaryBeta => PlanKind::VaryBeta,
        PlanArg::VaryAlpha => PlanKind::VaryAlpha,
        PlanArg::Compare => PlanKind::Compare,
        PlanArg::MonotoneDemo => PlanKind::MonotoneDemo,
        PlanArg::DnshrDemo => PlanKind::DnshrDemo,
    };
    let plan = ExperimentPlan::new(kind);
    let result = run_plan(&plan)?;
    let paths = bench::export_csv(&result, &args.out)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    let mut failed = false;
    for cfg in &result.configs {
        if let Some(f) = &cfg.failure {
            eprintln!("configuration {} failed: {f}", cfg.key);
            failed = true;
        }
    }
    Ok(if failed { EXIT_RUNTIME } else { 0 })
}

fn print_report(report: &AssumptionReport) {
    println!("assumption={}", report.assumption);
    println!("satisfied={}", report.satisfied);
    println!("method={}", report.method);
    if let Some(z) = report.zeta {
        println!("zeta={z}");
    }
    if let Some(th) = report.threshold {
        println!("threshold={th}");
    }
    for c in &report.conditions {
        println!("condition.{}.satisfied={}", c.label, c.satisfied);
        println!("condition.{}.observed={}", c.label, c.observed);
        println!("condition.{}.bound={}", c.label, c.bound);
        println!("condition.{}.margin={}", c.label, c.margin);
    }
}

fn run_validate(mut args: ValidateArgs) -> Result<u8, CliFailure> {
    args.apply_config()?;
    let schedule = ParameterSchedule::polynomial(args.p, args.c, 1.0)?;
    let report = match args.assumption {
        AssumptionArg::B => validate_assumption_b(&schedule, args.alpha)?,
        AssumptionArg::D => validate_assumption_d(&schedule, args.alpha, args.sigma)?,
    };
    print_report(&report);
    Ok(if report.satisfied { 0 } else { EXIT_UNSATISFIED })
}

fn run_dnshr(mut args: DnshrArgs) -> Result<u8, CliFailure> {
    args.apply_config()?;
    let cfg = DnshrConfig {
        h: args.h,
        alpha: args.alpha,
        beta: args.beta,
        schedule: ParameterSchedule::polynomial(args.p, args.c, args.h)?,
        objective: Arc::new(test_objective()),
        max_iters: args.n,
        stop_threshold: 1e-10,
    };
    let config_result = run_dnshr_config(&cfg, "dnshr", &bench::constants::X0)?;
    let plan = ExperimentPlan {
        kind: PlanKind::Custom,
        t0: cfg.h,
        t_end: args.n as f64 * cfg.h,
        samples: config_result.series.samples.len(),
        integrator: IntegratorConfig::default(),
    };
    let result = RunResult { plan, configs: vec![config_result] };
    let paths = bench::export_csv(&result, &args.out)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

/// Either a usage problem (exit 2) or a runtime failure (exit 1).
enum CliFailure {
    Usage(String),
    Runtime(nshr::Error),
}

impl From<UsageError> for CliFailure {
    fn from(e: UsageError) -> Self {
        CliFailure::Usage(e.0)
    }
}

impl From<nshr::Error> for CliFailure {
    fn from(e: nshr::Error) -> Self {
        CliFailure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Bench(args) => run_bench(args),
        Command::Validate(args) => run_validate(args),
        Command::Dnshr(args) => run_dnshr(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliFailure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliFailure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
