//! Reproducible experiment harness: canonical parameter sets, plan runner,
//! and CSV/metadata export.
//!
//! Every default lives in [`constants`] — one canonical table, no scattered
//! literals. Configurations within a plan run concurrently; the result is
//! assembled in configuration-key order, never completion order, so output
//! bytes are deterministic on a given platform.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::dnshr::{dnshr_run, DnshrConfig};
use crate::dynamics::{simulate, Driver, DynamicKind, DynamicSpec, Reformulation};
use crate::integrate::{IntegratorConfig, IntegratorStats};
use crate::lyapunov::{
    diagnostics, fit_rate, oscillation_metric, DiagnosticsSample, DiagnosticsSeries,
    LyapunovParams, RateFit,
};
use crate::monotone::{LinearMonotoneOperator, SubdifferentialOperator};
use crate::proxcore::test_objective;
use crate::schedules::{ParameterSchedule, PowerFn};
use crate::{vec_ops, Error, Result};

/// Canonical experiment defaults.
pub mod constants {
    /// Initial position.
    pub const X0: [f64; 2] = [20.0, -15.0];
    /// Initial velocity.
    pub const V0: [f64; 2] = [0.0, 0.0];
    /// Time horizon.
    pub const T0: f64 = 1.0;
    pub const T_END: f64 = 50.0;
    /// Integrator tolerances.
    pub const ABS_TOL: f64 = 1e-10;
    pub const REL_TOL: f64 = 1e-8;
    /// Log-spaced sample count.
    pub const SAMPLES: usize = 600;
    /// Tail window for rate fits (final decade-plus of the horizon).
    pub const FIT_WINDOW: (f64, f64) = (20.0, 50.0);
    /// Window for oscillation metrics.
    pub const OSC_WINDOW: (f64, f64) = (1.0, 50.0);

    /// β-sweep: α = 4, δ = t^0.5, γ = 0.01·t^2.5.
    pub const VARY_BETA_ALPHA: f64 = 4.0;
    pub const VARY_BETA_BETAS: [f64; 4] = [0.01, 0.08, 0.8, 1.5];
    pub const VARY_BETA_P: f64 = 0.5;
    pub const VARY_BETA_C: f64 = 0.01;

    /// α-sweep: β = 1, p = α − 3.5, c = 0.01.
    pub const VARY_ALPHA_BETA: f64 = 1.0;
    pub const VARY_ALPHA_ALPHAS: [f64; 4] = [4.0, 5.0, 6.0, 8.0];
    pub const VARY_ALPHA_C: f64 = 0.01;

    /// Comparison run (the model as printed there uses γ = 1e−4·t^2.5 — a
    /// different c than the β-sweep; both are kept verbatim).
    pub const COMPARE_ALPHA: f64 = 4.0;
    pub const COMPARE_BETA: f64 = 1.0;
    pub const COMPARE_P: f64 = 0.5;
    pub const COMPARE_C: f64 = 1e-4;
    /// Newton-like inertial benchmark smoothing λ(t) = (1.1/9)·t².
    pub const AL_LAMBDA_COEF: f64 = 1.1 / 9.0;
    /// Time-scaled benchmark: b(t) = 4.1·t^0.5, λ(t) = t^0.5.
    pub const BK_B_COEF: f64 = 4.1;
    pub const BK_EXPONENT: f64 = 0.5;

    /// Monotone demo (artifact-defined; there is no source experiment to
    /// reproduce): p = 1, c = 2/(4(α−σ−1)σ) = 2/9 with α = 4, σ = 1.5.
    pub const MONO_ALPHA: f64 = 4.0;
    pub const MONO_BETA: f64 = 1.0;
    pub const MONO_SIGMA: f64 = 1.5;
    pub const MONO_P: f64 = 1.0;
    pub const MONO_C: f64 = 2.0 / 9.0;

    /// Discrete-algorithm demo.
    pub const DNSHR_H: f64 = 0.01;
    pub const DNSHR_N: usize = 20_000;
    pub const DNSHR_ALPHA: f64 = 4.0;
    pub const DNSHR_BETA: f64 = 1.0;
    pub const DNSHR_P: f64 = 0.5;
    pub const DNSHR_C: f64 = 0.01;
}

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    VaryBeta,
    VaryAlpha,
    Compare,
    MonotoneDemo,
    DnshrDemo,
    /// A single caller-defined configuration (the CLI `simulate`/`dnshr`
    /// subcommands route through this).
    Custom,
}

impl PlanKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlanKind::VaryBeta => "vary_beta",
            PlanKind::VaryAlpha => "vary_alpha",
            PlanKind::Compare => "compare",
            PlanKind::MonotoneDemo => "monotone_demo",
            PlanKind::DnshrDemo => "dnshr_demo",
            PlanKind::Custom => "custom",
        }
    }
}

/// A plan plus its horizon, sampling, and integrator settings.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub kind: PlanKind,
    pub t0: f64,
    pub t_end: f64,
    pub samples: usize,
    pub integrator: IntegratorConfig,
}

impl ExperimentPlan {
    pub fn new(kind: PlanKind) -> Self {
        Self {
            kind,
            t0: constants::T0,
            t_end: constants::T_END,
            samples: constants::SAMPLES,
            integrator: IntegratorConfig {
                abs_tol: constants::ABS_TOL,
                rel_tol: constants::REL_TOL,
                ..Default::default()
            },
        }
    }
}

/// Result for one configuration of a plan.
#[derive(Clone)]
pub struct ConfigResult {
    /// Stable configuration key (also the CSV file suffix).
    pub key: String,
    pub series: DiagnosticsSeries,
    /// Objective-gap tail rate over the fit window.
    pub obj_rate: Option<RateFit>,
    /// Gradient-norm tail rate over the fit window.
    pub grad_rate: Option<RateFit>,
    /// Oscillation metric of the objective-gap series.
    pub obj_oscillation: Option<f64>,
    pub wall_secs: f64,
    pub stats: IntegratorStats,
    /// Populated instead of the series when this configuration failed.
    pub failure: Option<String>,
}

/// All configurations of one executed plan, ordered by key.
pub struct RunResult {
    pub plan: ExperimentPlan,
    pub configs: Vec<ConfigResult>,
}

/// Log-spaced grid with `n` points from `a` to `b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// One continuous configuration: a named spec plus optional explicit energy
/// parameters.
struct Job {
    key: String,
    spec: DynamicSpec,
    lyap: Option<LyapunovParams>,
}

fn objective_driver() -> Driver {
    Driver::Objective(Arc::new(test_objective()))
}

fn nshr_spec(alpha: f64, beta: f64, p: f64, c: f64) -> Result<DynamicSpec> {
    DynamicSpec::new(
        DynamicKind::Nshr,
        alpha,
        beta,
        ParameterSchedule::polynomial(p, c, constants::T0)?,
        objective_driver(),
        constants::T0,
    )
}

fn continuous_jobs(kind: PlanKind) -> Result<Vec<Job>> {
    use constants::*;
    let mut jobs = Vec::new();
    match kind {
        PlanKind::VaryBeta => {
            for beta in VARY_BETA_BETAS {
                jobs.push(Job {
                    key: format!("beta={beta}"),
                    spec: nshr_spec(VARY_BETA_ALPHA, beta, VARY_BETA_P, VARY_BETA_C)?,
                    lyap: None,
                });
            }
        }
        PlanKind::VaryAlpha => {
            for alpha in VARY_ALPHA_ALPHAS {
                jobs.push(Job {
                    key: format!("alpha={alpha}"),
                    spec: nshr_spec(alpha, VARY_ALPHA_BETA, alpha - 3.5, VARY_ALPHA_C)?,
                    lyap: None,
                });
            }
        }
        PlanKind::Compare => {
            jobs.push(Job {
                key: "nshr".into(),
                spec: nshr_spec(COMPARE_ALPHA, COMPARE_BETA, COMPARE_P, COMPARE_C)?,
                lyap: None,
            });
            for (key, kind, beta) in [
                ("baseline-delta", DynamicKind::BaselineDelta, 0.0),
                ("baseline-unit", DynamicKind::BaselineUnit, 0.0),
            ] {
                jobs.push(Job {
                    key: key.into(),
                    spec: DynamicSpec::new(
                        kind,
                        COMPARE_ALPHA,
                        beta,
                        ParameterSchedule::polynomial(COMPARE_P, COMPARE_C, T0)?,
                        objective_driver(),
                        T0,
                    )?,
                    lyap: None,
                });
            }
            jobs.push(Job {
                key: "al".into(),
                spec: DynamicSpec::new(
                    DynamicKind::AttouchLaszlo,
                    COMPARE_ALPHA,
                    COMPARE_BETA,
                    ParameterSchedule::Power {
                        delta: PowerFn { coef: 1.0, exponent: 0.0 },
                        gamma: PowerFn { coef: AL_LAMBDA_COEF, exponent: 2.0 },
                        t0: T0,
                    },
                    objective_driver(),
                    T0,
                )?,
                lyap: None,
            });
            jobs.push(Job {
                key: "bk".into(),
                spec: DynamicSpec::new(
                    DynamicKind::BotKarapetyants,
                    COMPARE_ALPHA,
                    COMPARE_BETA,
                    ParameterSchedule::Power {
                        delta: PowerFn { coef: BK_B_COEF, exponent: BK_EXPONENT },
                        gamma: PowerFn { coef: 1.0, exponent: BK_EXPONENT },
                        t0: T0,
                    },
                    objective_driver(),
                    T0,
                )?,
                lyap: None,
            });
        }
        PlanKind::MonotoneDemo => {
            let sched = ParameterSchedule::polynomial(MONO_P, MONO_C, T0)?;
            let rotation: Arc<dyn crate::monotone::MonotoneOperator> =
                Arc::new(LinearMonotoneOperator::rotation_2d());
            let subdiff: Arc<dyn crate::monotone::MonotoneOperator> =
                Arc::new(SubdifferentialOperator { objective: Arc::new(test_objective()) });
            for (key, op) in [("rotation", rotation), ("subdiff", subdiff)] {
                let zero = op.zero().expect("demo operators have known zeros");
                jobs.push(Job {
                    key: key.into(),
                    spec: DynamicSpec::new(
                        DynamicKind::Hrmmd,
                        MONO_ALPHA,
                        MONO_BETA,
                        sched.clone(),
                        Driver::Operator(op),
                        T0,
                    )?,
                    lyap: Some(LyapunovParams::new(MONO_SIGMA, MONO_ALPHA, zero)?),
                });
            }
        }
        PlanKind::DnshrDemo => unreachable!("discrete plan handled separately"),
        PlanKind::Custom => {
            return Err(Error::Unsupported(
                "custom plans carry their own configuration; use run_custom_config".into(),
            ))
        }
    }
    Ok(jobs)
}

/// Runs one caller-supplied continuous configuration under the plan's grid
/// and integrator settings, with the same diagnostics and tail fits as the
/// built-in plans.
pub fn run_custom_config(
    plan: &ExperimentPlan,
    key: &str,
    spec: DynamicSpec,
    x0: &[f64],
    v0: &[f64],
) -> Result<ConfigResult> {
    let start = Instant::now();
    let grid = logspace(plan.t0, plan.t_end, plan.samples);
    let traj = simulate(
        &spec,
        Reformulation::Shift,
        x0,
        v0,
        plan.t_end,
        &plan.integrator,
        &grid,
    )?;
    let series = diagnostics(&spec, Reformulation::Shift, &traj, None)?;
    let obj = series.column(|s| s.obj_gap);
    let grad = series.column(|s| s.grad_norm);
    Ok(ConfigResult {
        key: key.into(),
        obj_rate: fit_rate(&obj, constants::FIT_WINDOW).ok(),
        grad_rate: fit_rate(&grad, constants::FIT_WINDOW).ok(),
        obj_oscillation: oscillation_metric(&obj, constants::OSC_WINDOW).ok(),
        series,
        wall_secs: start.elapsed().as_secs_f64(),
        stats: traj.stats,
        failure: None,
    })
}

fn run_continuous_job(plan: &ExperimentPlan, job: &Job) -> Result<ConfigResult> {
    let start = Instant::now();
    let grid = logspace(plan.t0, plan.t_end, plan.samples);
    let traj = simulate(
        &job.spec,
        Reformulation::Shift,
        &constants::X0,
        &constants::V0,
        plan.t_end,
        &plan.integrator,
        &grid,
    )?;
    let series = diagnostics(&job.spec, Reformulation::Shift, &traj, job.lyap.as_ref())?;
    let obj = series.column(|s| s.obj_gap);
    let grad = series.column(|s| s.grad_norm);
    Ok(ConfigResult {
        key: job.key.clone(),
        obj_rate: fit_rate(&obj, constants::FIT_WINDOW).ok(),
        grad_rate: fit_rate(&grad, constants::FIT_WINDOW).ok(),
        obj_oscillation: oscillation_metric(&obj, constants::OSC_WINDOW).ok(),
        series,
        wall_secs: start.elapsed().as_secs_f64(),
        stats: traj.stats,
        failure: None,
    })
}

fn run_dnshr_demo() -> Result<ConfigResult> {
    use constants::*;
    let cfg = DnshrConfig {
        h: DNSHR_H,
        alpha: DNSHR_ALPHA,
        beta: DNSHR_BETA,
        schedule: ParameterSchedule::polynomial(DNSHR_P, DNSHR_C, DNSHR_H)?,
        objective: Arc::new(test_objective()),
        max_iters: DNSHR_N,
        stop_threshold: 1e-10,
    };
    run_dnshr_config(&cfg, "dnshr", &X0)
}

/// Runs the discrete algorithm from a duplicated warm start and packages the
/// iterate history as a diagnostics series (energy column zero).
pub fn run_dnshr_config(cfg: &DnshrConfig, key: &str, x0: &[f64]) -> Result<ConfigResult> {
    let start = Instant::now();
    let run = dnshr_run(cfg, x0, x0)?;
    // Present the iterate history through the same diagnostics shape as the
    // continuous runs; the energy column is left at zero.
    let mut series = DiagnosticsSeries::default();
    let obj: &dyn crate::proxcore::ProxObjective = cfg.objective.as_ref();
    let f_star = obj.optimal_value().unwrap_or(0.0);
    for (k, gap) in run.gaps.iter().enumerate() {
        let x = &run.iterates[k + 2]; // gaps[k] belongs to iterate k+2
        let x_prev = &run.iterates[k + 1];
        let t = (k + 2) as f64 * cfg.h;
        let (_, _, gamma, _) = crate::schedules::schedule_eval(&cfg.schedule, t)?;
        let g = crate::proxcore::moreau_gradient(obj, gamma, x)?;
        let env_gap = crate::proxcore::moreau_value(obj, gamma, x)? - f_star;
        let xdot: Vec<f64> = x.iter().zip(x_prev).map(|(a, b)| (a - b) / cfg.h).collect();
        series.samples.push(DiagnosticsSample {
            t,
            obj_gap: gap.max(0.0),
            env_gap: env_gap.max(0.0),
            grad_norm: vec_ops::norm(&g),
            x_norm: vec_ops::norm(x),
            x: x.clone(),
            t_xdot_norm: t * vec_ops::norm(&xdot),
            rel_obj: if run.gaps[0] > 0.0 { gap / run.gaps[0] } else { 1.0 },
            rel_grad: 1.0,
            lyapunov: 0.0,
        });
    }
    Ok(ConfigResult {
        key: key.into(),
        series,
        obj_rate: None,
        grad_rate: None,
        obj_oscillation: None,
        wall_secs: start.elapsed().as_secs_f64(),
        stats: IntegratorStats::default(),
        failure: None,
    })
}

/// Executes every configuration of the plan (concurrently for the continuous
/// plans) and assembles results in key order. A failing configuration is
/// recorded in its slot; it does not abort the others.
pub fn run_plan(plan: &ExperimentPlan) -> Result<RunResult> {
    let mut configs: Vec<ConfigResult> = match plan.kind {
        PlanKind::DnshrDemo => {
            vec![run_dnshr_demo().unwrap_or_else(|e| failed_config("dnshr", e))]
        }
        _ => {
            let jobs = continuous_jobs(plan.kind)?;
            std::thread::scope(|scope| {
                let handles: Vec<_> = jobs
                    .iter()
                    .map(|job| scope.spawn(move || run_continuous_job(plan, job)))
                    .collect();
                handles
                    .into_iter()
                    .zip(&jobs)
                    .map(|(h, job)| match h.join() {
                        Ok(Ok(res)) => res,
                        Ok(Err(e)) => failed_config(&job.key, e),
                        Err(_) => failed_config(
                            &job.key,
                            Error::NonFinite("worker thread panicked".into()),
                        ),
                    })
                    .collect()
            })
        }
    };
    configs.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(RunResult {
        plan: plan.clone(),
        configs,
    })
}

fn failed_config(key: &str, e: Error) -> ConfigResult {
    ConfigResult {
        key: key.into(),
        series: DiagnosticsSeries::default(),
        obj_rate: None,
        grad_rate: None,
        obj_oscillation: None,
        wall_secs: 0.0,
        stats: IntegratorStats::default(),
        failure: Some(e.to_string()),
    }
}

/// Exact CSV header shared by every exported series.
pub const CSV_HEADER: &str =
    "t,obj_gap,env_gap,grad_norm,x_norm,x1,x2,t_xdot_norm,rel_obj,rel_grad,lyapunov";

fn fmt(v: f64) -> String {
    // Scientific notation with 17 significant digits: round-trips f64 exactly.
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes one CSV per configuration plus a key=value metadata file into
/// `dir`; returns the created paths (metadata last).
pub fn export_csv(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let plan_name = result.plan.kind.name();
    let mut paths = Vec::new();
    for cfg in &result.configs {
        if cfg.failure.is_some() {
            continue;
        }
        let path = dir.join(format!("{plan_name}_{}.csv", cfg.key));
        let mut out = String::with_capacity(cfg.series.samples.len() * 220);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &cfg.series.samples {
            if s.x.len() != 2 {
                return Err(Error::Unsupported(
                    "CSV export is defined for 2-D configurations".into(),
                ));
            }
            let cols = [
                s.t,
                s.obj_gap,
                s.env_gap,
                s.grad_norm,
                s.x_norm,
                s.x[0],
                s.x[1],
                s.t_xdot_norm,
                s.rel_obj,
                s.rel_grad,
                s.lyapunov,
            ];
            let row: Vec<String> = cols.iter().map(|&v| fmt(v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(&path, out).map_err(io_err(&path))?;
        paths.push(path);
    }
    let meta_path = dir.join(format!("{plan_name}_metadata.txt"));
    let mut meta = std::fs::File::create(&meta_path).map_err(io_err(&meta_path))?;
    let p = &result.plan;
    let mut w = |line: String| -> Result<()> {
        writeln!(meta, "{line}").map_err(io_err(&meta_path))
    };
    w(format!("plan={plan_name}"))?;
    w(format!("version={}", env!("CARGO_PKG_VERSION")))?;
    w(format!("t0={}", p.t0))?;
    w(format!("t_end={}", p.t_end))?;
    w(format!("samples={}", p.samples))?;
    w(format!("abs_tol={:e}", p.integrator.abs_tol))?;
    w(format!("rel_tol={:e}", p.integrator.rel_tol))?;
    w(format!(
        "fit_window={},{}",
        constants::FIT_WINDOW.0,
        constants::FIT_WINDOW.1
    ))?;
    w(format!(
        "osc_window={},{}",
        constants::OSC_WINDOW.0,
        constants::OSC_WINDOW.1
    ))?;
    w(format!("x0={},{}", constants::X0[0], constants::X0[1]))?;
    w(format!("v0={},{}", constants::V0[0], constants::V0[1]))?;
    for cfg in &result.configs {
        w(format!("config.{}.wall_secs={}", cfg.key, cfg.wall_secs))?;
        w(format!("config.{}.accepted_steps={}", cfg.key, cfg.stats.accepted))?;
        w(format!("config.{}.rejected_steps={}", cfg.key, cfg.stats.rejected))?;
        if let Some(f) = &cfg.failure {
            w(format!("config.{}.failure={f}", cfg.key))?;
        }
    }
    paths.push(meta_path);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_round_trips_exactly() {
        for v in [
            0.0,
            1.0,
            -1.3627272727272727,
            10446.452740774077,
            1.0e-14,
            std::f64::consts::PI,
        ] {
            let s = fmt(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn logspace_endpoints() {
        let g = logspace(1.0, 50.0, 600);
        assert_eq!(g.len(), 600);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[599] - 50.0).abs() < 1e-9);
        for w in g.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn plan_keys_are_sorted_and_complete() {
        for kind in [PlanKind::VaryBeta, PlanKind::VaryAlpha, PlanKind::Compare] {
            let jobs = continuous_jobs(kind).unwrap();
            let n = jobs.len();
            match kind {
                PlanKind::VaryBeta | PlanKind::VaryAlpha => assert_eq!(n, 4),
                PlanKind::Compare => assert_eq!(n, 5),
                _ => {}
            }
        }
    }

    #[test]
    fn export_produces_header_and_rows() {
        // A tiny synthetic result exercises the format contract without an
        // expensive integration.
        let plan = ExperimentPlan::new(PlanKind::VaryBeta);
        let mut series = DiagnosticsSeries::default();
        for i in 0..3 {
            let t = 1.0 + i as f64;
            series.samples.push(DiagnosticsSample {
                t,
                obj_gap: 0.0,
                env_gap: 0.0,
                grad_norm: 0.0,
                x_norm: 0.0,
                x: vec![0.0, 0.0],
                t_xdot_norm: 0.0,
                rel_obj: 1.0,
                rel_grad: 1.0,
                lyapunov: 0.0,
            });
        }
        let result = RunResult {
            plan,
            configs: vec![ConfigResult {
                key: "beta=0.01".into(),
                series,
                obj_rate: None,
                grad_rate: None,
                obj_oscillation: None,
                wall_secs: 0.0,
                stats: IntegratorStats::default(),
                failure: None,
            }],
        };
        let dir = std::env::temp_dir().join(format!("nshr-bench-test-{}", std::process::id()));
        let paths = export_csv(&result, &dir).unwrap();
        assert_eq!(paths.len(), 2);
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.count(), 3);
        let meta = std::fs::read_to_string(&paths[1]).unwrap();
        assert!(meta.contains("plan=vary_beta"));
        assert!(meta.contains("version="));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dnshr_demo_runs() {
        let plan = ExperimentPlan::new(PlanKind::DnshrDemo);
        let result = run_plan(&plan).unwrap();
        assert_eq!(result.configs.len(), 1);
        let cfg = &result.configs[0];
        assert!(cfg.failure.is_none());
        assert!(!cfg.series.samples.is_empty());
        // The demo reaches its early-stop threshold well within the budget.
        assert!(cfg.series.samples.len() < constants::DNSHR_N);
    }
}
