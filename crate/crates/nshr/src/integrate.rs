//! Adaptive explicit Runge–Kutta integration with dense output.
//!
//! One fixed embedded 5(4) pair (the Dormand–Prince coefficients) with FSAL,
//! PI step-size control, and the pair's quartic interpolant for dense
//! sampling. The experiments only need tight tolerances, not pluggable
//! tableaus, so the method is not abstracted.

use std::sync::Arc;

use crate::{vec_ops, Error, Result};

/// A first-order vector field ż = F(t, z).
pub type VectorField<'a> = dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + Sync + 'a;

/// Integrator tolerances and guards.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Absolute tolerance (default 1e−10).
    pub abs_tol: f64,
    /// Relative tolerance (default 1e−8).
    pub rel_tol: f64,
    /// First trial step (default 1e−4).
    pub initial_step: f64,
    /// Upper bound on the step size (default: unbounded, clamped to the span).
    pub max_step: f64,
    /// Hard cap on attempted steps.
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            initial_step: 1e-4,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

/// Interpolation data for one accepted step `[t, t+h]`.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t: f64,
    pub h: f64,
    /// Horner coefficients of the quartic interpolant.
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    /// Evaluates the interpolant at `t` inside the step.
    fn eval(&self, t: f64) -> Vec<f64> {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        let n = self.rcont[0].len();
        (0..n)
            .map(|i| {
                self.rcont[0][i]
                    + theta
                        * (self.rcont[1][i]
                            + theta1
                                * (self.rcont[2][i]
                                    + theta * (self.rcont[3][i] + theta1 * self.rcont[4][i])))
            })
            .collect()
    }
}

/// Step-acceptance counters.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Time-stamped states sampled from one integration, with the dense output
/// retained so diagnostics can re-sample anywhere in the span.
#[derive(Clone)]
pub struct Trajectory {
    /// Strictly increasing sample times; first is t0, last is t_end.
    pub times: Vec<f64>,
    /// State at each sample time.
    pub states: Vec<Vec<f64>>,
    /// Accepted-step interpolants covering [t0, t_end].
    pub dense: Arc<Vec<DenseStep>>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    /// Evaluates the dense output at any `t` within the integration span.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let steps = &*self.dense;
        if steps.is_empty() {
            return Err(Error::InsufficientSamples("empty trajectory".into()));
        }
        let span_end = steps.last().unwrap().t + steps.last().unwrap().h;
        if t < steps[0].t - 1e-12 || t > span_end + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "evaluation time {t} outside the integration span"
            )));
        }
        // Last step whose start is ≤ t.
        let idx = steps.partition_point(|s| s.t <= t).saturating_sub(1);
        Ok(steps[idx].eval(t))
    }

    /// Start of the integration span.
    pub fn t_start(&self) -> f64 {
        *self.times.first().unwrap()
    }

    /// End of the integration span.
    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th- and 4th-order solutions.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output coefficients.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Integrates ż = F(t, z) from `(t0, z0)` to `t_end` and samples the dense
/// output at `sample_grid` (t0 and t_end are always included).
///
/// Error control uses the mixed norm `err_i / (abs_tol + rel_tol·max(|z_i|,
/// |z'_i|))` with a PI controller (safety 0.9, growth clamp [0.2, 5.0]).
pub fn integrate(
    field: &VectorField,
    t0: f64,
    z0: &[f64],
    t_end: f64,
    config: &IntegratorConfig,
    sample_grid: &[f64],
) -> Result<Trajectory> {
    if !(t_end > t0) {
        return Err(Error::InvalidParameter(format!(
            "integration span must be forward: t0 = {t0}, t_end = {t_end}"
        )));
    }
    if !(config.abs_tol > 0.0 && config.rel_tol > 0.0 && config.initial_step > 0.0) {
        return Err(Error::InvalidParameter(
            "integrator tolerances and initial step must be positive".into(),
        ));
    }
    if !vec_ops::all_finite(z0) {
        return Err(Error::NonFinite("initial state".into()));
    }
    if sample_grid.iter().any(|&t| t < t0 - 1e-12 || t > t_end + 1e-12) {
        return Err(Error::InvalidParameter(
            "sample grid extends outside [t0, t_end]".into(),
        ));
    }

    // Output times: t0, interior grid points in order, t_end.
    let mut out_times = vec![t0];
    let mut grid = sample_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    for &t in &grid {
        if t > t0 + 1e-12 && t < t_end - 1e-12 {
            out_times.push(t);
        }
    }
    out_times.push(t_end);
    out_times.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let n = z0.len();
    let span = t_end - t0;
    let max_step = config.max_step.min(span);
    let mut t = t0;
    let mut z = z0.to_vec();
    let mut h = config.initial_step.min(max_step);
    let mut stats = IntegratorStats::default();
    let mut dense: Vec<DenseStep> = Vec::new();

    let mut k = vec![vec![0.0; n]; 7];
    k[0] = field(t, &z)?;
    stats.evaluations += 1;
    let mut err_old: f64 = 1e-4;

    while t < t_end {
        if stats.accepted + stats.rejected >= config.max_steps {
            return Err(Error::MaxStepsExceeded {
                max_steps: config.max_steps,
                t,
            });
        }
        h = h.min(max_step).min(t_end - t);
        if h <= f64::EPSILON * t.abs().max(1.0) * 4.0 {
            return Err(Error::StepSizeUnderflow { t });
        }

        // Stages 2..7 (stage 7 is the FSAL evaluation at the new point).
        for s in 1..7 {
            let mut zs = z.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s - 1][j];
                if a != 0.0 {
                    for i in 0..n {
                        zs[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = field(t + C[s] * h, &zs)?;
            stats.evaluations += 1;
        }
        // 5th-order solution: row 6 of A are the b-weights; k[6] = F(t+h, z1).
        let mut z1 = z.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = A[5][j];
            if b != 0.0 {
                for i in 0..n {
                    z1[i] += h * b * kj[i];
                }
            }
        }
        if !vec_ops::all_finite(&z1) {
            return Err(Error::NonFinite(format!("state at t = {}", t + h)));
        }

        // Mixed error norm.
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = config.abs_tol + config.rel_tol * z[i].abs().max(z1[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            // Accept: build the dense-output interpolant for this step.
            let mut rcont = [
                z.clone(),
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ];
            for i in 0..n {
                let dy = z1[i] - z[i];
                let bspl = h * k[0][i] - dy;
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k[6][i] - bspl;
                let mut d = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    d += D[j] * kj[i];
                }
                rcont[4][i] = h * d;
            }
            dense.push(DenseStep { t, h, rcont });
            stats.accepted += 1;

            // PI controller.
            let fac = SAFETY * err.max(1e-10).powf(-0.7 / 5.0) * err_old.powf(0.4 / 5.0);
            err_old = err.max(1e-4);
            t += h;
            z = z1;
            k[0] = k[6].clone(); // FSAL
            h *= fac.clamp(FAC_MIN, FAC_MAX);
        } else {
            stats.rejected += 1;
            let fac = SAFETY * err.powf(-0.2);
            h *= fac.clamp(FAC_MIN, 1.0);
        }
    }

    let dense = Arc::new(dense);
    let mut traj = Trajectory {
        times: Vec::with_capacity(out_times.len()),
        states: Vec::with_capacity(out_times.len()),
        dense,
        stats,
    };
    for &ot in &out_times {
        let state = if ot >= t_end {
            z.clone() // exact final state, not an interpolation
        } else {
            traj.eval(ot)?
        };
        traj.times.push(ot.min(t_end));
        traj.states.push(state);
    }
    Ok(traj)
}

/// Resamples a trajectory's dense output on the uniform grid
/// `t0, t0+h, …, t_end` (the end point is appended if the grid misses it).
pub fn resample_uniform(traj: &Trajectory, h: f64) -> Result<Trajectory> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "resample step must be positive, got {h}"
        )));
    }
    let (t0, t_end) = (traj.t_start(), traj.t_end());
    if h >= t_end - t0 {
        return Err(Error::InvalidParameter(
            "resample step exceeds the trajectory span".into(),
        ));
    }
    let mut times = Vec::new();
    let mut k = 0usize;
    loop {
        let t = t0 + k as f64 * h;
        if t > t_end + 1e-12 {
            break;
        }
        times.push(t.min(t_end));
        k += 1;
    }
    if *times.last().unwrap() < t_end - 1e-12 {
        times.push(t_end);
    }
    let states = times
        .iter()
        .map(|&t| traj.eval(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times,
        states,
        dense: traj.dense.clone(),
        stats: traj.stats,
    })
}
