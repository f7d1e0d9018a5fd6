//! Lyapunov/energy evaluation along trajectories, per-sample diagnostics,
//! log-log rate fitting, and an oscillation metric.
//!
//! Gap series are floored at 1e−14 before any logarithm; samples at the floor
//! are excluded from rate fits, and a fit whose window has too few positive
//! samples reports a floor hit instead of a slope.

use crate::dynamics::{recover_velocity, DynamicSpec, Driver, Reformulation};
use crate::integrate::Trajectory;
use crate::proxcore::{moreau_value, Point};
use crate::schedules::{schedule_eval, ParameterSchedule};
use crate::{vec_ops, Error, Result};

/// Numerical floor applied to gap values before logarithms.
pub const GAP_FLOOR: f64 = 1e-14;

/// Parameters of the energy function for the objective setting.
#[derive(Debug, Clone)]
pub struct LyapunovParams {
    /// Anchor weight σ ∈ (0, α−1).
    pub sigma: f64,
    /// Derived distance weight η = σ(α−σ−1)/2.
    pub eta: f64,
    /// Reference point x* (minimizer or operator zero).
    pub x_star: Point,
}

impl LyapunovParams {
    pub fn new(sigma: f64, alpha: f64, x_star: Point) -> Result<Self> {
        if !(sigma > 0.0 && sigma < alpha - 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must lie in (0, alpha−1), got sigma = {sigma}, alpha = {alpha}"
            )));
        }
        let eta = sigma * (alpha - sigma - 1.0) / 2.0;
        Ok(Self { sigma, eta, x_star })
    }

    /// The monitoring default: the midpoint σ = α−1−ζ/2 of the feasible
    /// interval (α−1−ζ, α−1) with ζ = α−3−p; requires p < α−3.
    pub fn default_for(alpha: f64, p: f64, x_star: Point) -> Result<Self> {
        let zeta = alpha - 3.0 - p;
        if !(zeta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "default sigma needs p < alpha−3, got p = {p}, alpha = {alpha}"
            )));
        }
        Self::new(alpha - 1.0 - zeta / 2.0, alpha, x_star)
    }
}

/// Energy for the objective setting:
///
/// `V = a(t)(f_{γ(t)}(x) − f*) + ½‖σ(x−x*) + tẋ + βtδ(t)∇f_{γ(t)}(x)‖²
///    + η‖x−x*‖²`
///
/// with `a(t) = [t − β(σ+1−α)]·t·δ(t)`. The βδ coefficient is taken from the
/// spec's inner coefficient c(t), so the mixed term stays meaningful for
/// every dynamic kind.
pub fn lyapunov_value(
    params: &LyapunovParams,
    spec: &DynamicSpec,
    t: f64,
    x: &[f64],
    xdot: &[f64],
) -> Result<f64> {
    let obj = match &spec.driver {
        Driver::Objective(obj) => obj,
        Driver::Operator(_) => {
            return Err(Error::Unsupported(
                "objective-setting energy needs an objective driver; use the monotone form".into(),
            ))
        }
    };
    let f_star = obj
        .optimal_value()
        .ok_or_else(|| Error::MissingZero("objective has no known optimal value".into()))?;
    let (delta, _, gamma, _) = schedule_eval(&spec.schedule, t)?;
    let env_gap = moreau_value(obj.as_ref(), gamma, x)? - f_star;
    let a_t = (t - spec.beta * (params.sigma + 1.0 - spec.alpha)) * t * delta;
    let g = spec.driving_map(t, x)?;
    let c = spec.inner_coef(t)?;
    let mix = mixed_term(params, t, x, xdot, c, &g);
    let dx = vec_ops::sub(x, &params.x_star);
    Ok(a_t * env_gap + 0.5 * vec_ops::dot(&mix, &mix) + params.eta * vec_ops::dot(&dx, &dx))
}

/// Energy for the monotone setting — no objective-dependent term:
///
/// `V_A = ½‖σ(x−x*) + tẋ + βtδ(t)A_{γ(t)}(x)‖² + η‖x−x*‖²`.
pub fn lyapunov_value_monotone(
    sigma: f64,
    eta: f64,
    spec: &DynamicSpec,
    t: f64,
    x: &[f64],
    xdot: &[f64],
) -> Result<f64> {
    let x_star = spec
        .driver
        .rest_point()
        .ok_or_else(|| Error::MissingZero("driver has no known zero".into()))?;
    let g = spec.driving_map(t, x)?;
    let c = spec.inner_coef(t)?;
    let params = LyapunovParams {
        sigma,
        eta,
        x_star,
    };
    let mix = mixed_term(&params, t, x, xdot, c, &g);
    let dx = vec_ops::sub(x, &params.x_star);
    Ok(0.5 * vec_ops::dot(&mix, &mix) + eta * vec_ops::dot(&dx, &dx))
}

fn mixed_term(
    params: &LyapunovParams,
    t: f64,
    x: &[f64],
    xdot: &[f64],
    c: f64,
    g: &[f64],
) -> Vec<f64> {
    (0..x.len())
        .map(|i| params.sigma * (x[i] - params.x_star[i]) + t * xdot[i] + t * c * g[i])
        .collect()
}

/// One diagnostics record.
#[derive(Debug, Clone)]
pub struct DiagnosticsSample {
    pub t: f64,
    /// Prox-shadow objective gap f(prox_{γ(t)}(x)) − f* (0 for operator runs).
    pub obj_gap: f64,
    /// Envelope gap f_{γ(t)}(x) − f* (0 for operator runs).
    pub env_gap: f64,
    /// ‖∇f_{γ(t)}(x)‖, or ‖A_{γ(t)}(x)‖ for operator runs.
    pub grad_norm: f64,
    pub x_norm: f64,
    pub x: Point,
    /// t·‖ẋ(t)‖ with the velocity recovered from the reformulated state.
    pub t_xdot_norm: f64,
    /// obj_gap / obj_gap(t0); identically 1 when the initial gap is at floor.
    pub rel_obj: f64,
    /// grad_norm / grad_norm(t0); identically 1 when the start is at floor.
    pub rel_grad: f64,
    /// Energy value (objective or monotone form, as available; 0 when no
    /// reference point is known).
    pub lyapunov: f64,
}

/// Per-sample diagnostics of one trajectory.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsSeries {
    pub samples: Vec<DiagnosticsSample>,
}

impl DiagnosticsSeries {
    /// Extracts one column as (t, value) pairs.
    pub fn column(&self, f: impl Fn(&DiagnosticsSample) -> f64) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, f(s))).collect()
    }
}

fn clamp_gap(gap: f64, what: &str) -> Result<f64> {
    if gap < -1e-12 {
        return Err(Error::NonFinite(format!(
            "{what} fell below the −1e−12 numerical floor: {gap}"
        )));
    }
    Ok(gap.max(0.0))
}

/// Computes the full diagnostics series for a trajectory.
///
/// `lyap` selects the energy parameters; when `None`, σ defaults to the
/// midpoint rule of [`LyapunovParams::default_for`] if the schedule is
/// polynomial with p < α−3, else the energy column is filled with the
/// monotone form at σ = (α−1)/2 when a rest point is known, and 0 otherwise.
pub fn diagnostics(
    spec: &DynamicSpec,
    reform: Reformulation,
    traj: &Trajectory,
    lyap: Option<&LyapunovParams>,
) -> Result<DiagnosticsSeries> {
    if traj.times.is_empty() {
        return Err(Error::InsufficientSamples("empty trajectory".into()));
    }
    let n = spec.driver.dimension();

    // Resolve energy parameters.
    let owned_params: Option<LyapunovParams> = match (lyap, spec.driver.rest_point()) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(x_star)) => {
            let by_default = if let ParameterSchedule::Polynomial(ps) = &spec.schedule {
                LyapunovParams::default_for(spec.alpha, ps.p, x_star.clone()).ok()
            } else {
                None
            };
            by_default.or_else(|| {
                if spec.alpha > 1.0 {
                    LyapunovParams::new((spec.alpha - 1.0) / 2.0, spec.alpha, x_star).ok()
                } else {
                    None
                }
            })
        }
        (None, None) => None,
    };

    let objective = match &spec.driver {
        Driver::Objective(obj) => Some(obj.clone()),
        Driver::Operator(_) => None,
    };
    let f_star = objective.as_ref().and_then(|o| o.optimal_value());

    let mut series = DiagnosticsSeries::default();
    let (mut obj_gap0, mut grad0) = (0.0, 0.0);
    for (idx, (&t, z)) in traj.times.iter().zip(&traj.states).enumerate() {
        let x = &z[..n];
        let (_, _, gamma, _) = schedule_eval(&spec.schedule, t)?;
        let g = spec.driving_map(t, x)?;
        let grad_norm = vec_ops::norm(&g);
        let (obj_gap, env_gap) = match (&objective, f_star) {
            (Some(obj), Some(fs)) => {
                let shadow = obj.prox(gamma, x)?;
                let og = clamp_gap(obj.value(&shadow) - fs, "objective gap")?;
                let eg = clamp_gap(moreau_value(obj.as_ref(), gamma, x)? - fs, "envelope gap")?;
                (og, eg)
            }
            _ => (0.0, 0.0),
        };
        let xdot = recover_velocity(spec, reform, t, z)?;
        let lyapunov = match (&owned_params, &spec.driver) {
            (Some(p), Driver::Objective(_)) if f_star.is_some() => {
                lyapunov_value(p, spec, t, x, &xdot)?
            }
            (Some(p), _) => lyapunov_value_monotone(p.sigma, p.eta, spec, t, x, &xdot)?,
            (None, _) => 0.0,
        };
        if idx == 0 {
            obj_gap0 = obj_gap;
            grad0 = grad_norm;
        }
        let rel_obj = if obj_gap0 > GAP_FLOOR { obj_gap / obj_gap0 } else { 1.0 };
        let rel_grad = if grad0 > GAP_FLOOR { grad_norm / grad0 } else { 1.0 };
        series.samples.push(DiagnosticsSample {
            t,
            obj_gap,
            env_gap,
            grad_norm,
            x_norm: vec_ops::norm(x),
            x: x.to_vec(),
            t_xdot_norm: t * vec_ops::norm(&xdot),
            rel_obj,
            rel_grad,
            lyapunov,
        });
    }
    Ok(series)
}

/// Outcome of a tail-rate fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFit {
    /// Least-squares slope of log(value) against log(t) over the window.
    Slope(f64),
    /// The series already sat at the numerical floor: fewer than 10 samples
    /// in the window were above 1e−14, so no slope is measurable.
    FloorHit { positive_samples: usize },
}

/// Fits the log-log tail slope of a positive series over a time window.
///
/// Samples at or below the 1e−14 floor are excluded. Errors if the window
/// holds fewer than 10 samples overall; reports [`RateFit::FloorHit`] if it
/// holds enough samples but fewer than 10 above the floor.
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let in_window: Vec<&(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    if in_window.len() < 10 {
        return Err(Error::InsufficientSamples(format!(
            "rate fit needs ≥ 10 samples in [{}, {}], got {}",
            window.0,
            window.1,
            in_window.len()
        )));
    }
    let pts: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|(_, v)| *v > GAP_FLOOR)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 10 {
        return Ok(RateFit::FloorHit {
            positive_samples: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(RateFit::Slope(sxy / sxx))
}

/// Oscillation residue of a series over a window: total variation of
/// `log(max(value, 1e−14))` minus the absolute net change. Zero for monotone
/// series; roughly twice the summed log-amplitude of the excursions
/// otherwise.
pub fn oscillation_metric(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let u: Vec<f64> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .map(|(_, v)| v.max(GAP_FLOOR).ln())
        .collect();
    if u.len() < 10 {
        return Err(Error::InsufficientSamples(format!(
            "oscillation metric needs ≥ 10 samples in [{}, {}], got {}",
            window.0,
            window.1,
            u.len()
        )));
    }
    let tv: f64 = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let net = (u[u.len() - 1] - u[0]).abs();
    Ok(tv - net)
}

/// Finds the monotonicity onset of a series: the sample time after the last
/// violation of `v[i+1] ≤ v[i] + slack·max(1, v[i])`. Returns the first time
/// when the series never increases again (the first sample time if it is
/// nonincreasing throughout).
pub fn monotone_onset(ts: &[f64], vs: &[f64], slack: f64) -> Option<f64> {
    if ts.is_empty() || ts.len() != vs.len() {
        return None;
    }
    let mut onset = ts[0];
    for i in 0..vs.len() - 1 {
        if vs[i + 1] > vs[i] + slack * vs[i].abs().max(1.0) {
            onset = ts[i + 1];
        }
    }
    Some(onset)
}
