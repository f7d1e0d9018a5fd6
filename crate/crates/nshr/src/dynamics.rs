//! Vector-field definitions for the continuous-time models.
//!
//! Two equivalent first-order reformulations are implemented:
//!
//! * the exact (x, y) system of the envelope-driven dynamic (β > 0 only),
//!   used as a correctness anchor;
//! * a generic velocity-shift system with auxiliary variable
//!   `v = ẋ + c(t)·g(t, x)`, which covers every model — including the β = 0
//!   baselines — without evaluating Hessians or envelope second derivatives.
//!
//! With `g(t, x)` the driving map (envelope gradient or Yosida
//! approximation), `c(t)` the coefficient inside the time derivative, and
//! `e(t)` the outer coefficient, the second-order model is
//!
//! ```text
//! ẍ + (α/t)ẋ + d/dt[c(t)·g(t, x)] + e(t)·g(t, x) = 0,
//! ```
//!
//! and the velocity-shift system reads `ẋ = v − c·g`, `v̇ = −(α/t)ẋ − e·g`.

use std::sync::Arc;

use crate::integrate::{integrate, IntegratorConfig, Trajectory};
use crate::monotone::{yosida, MonotoneOperator};
use crate::proxcore::{moreau_gradient, Point, ProxObjective};
use crate::schedules::{schedule_eval, ParameterSchedule};
use crate::{vec_ops, Error, Result};

/// Which continuous model is being integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicKind {
    /// The high-resolution envelope-driven dynamic:
    /// c = βδ(t), e = (1 + β/t)δ(t), smoothing γ(t).
    Nshr,
    /// Its monotone-operator counterpart: same coefficients, driver is a
    /// Yosida approximation.
    Hrmmd,
    /// Baseline without geometric damping: c = 0, e = δ(t).
    BaselineDelta,
    /// Baseline without damping or time rescaling: c = 0, e = 1.
    BaselineUnit,
    /// Newton-like inertial benchmark: c = β, e = 1, its own smoothing λ(t).
    AttouchLaszlo,
    /// Time-scaled Newton-like benchmark: c = β (constant), e = b(t), its own
    /// smoothing λ(t). The b(t) coefficient rides in the schedule's δ slot.
    BotKarapetyants,
}

/// What drives the dynamic: a convex objective (through its Moreau-envelope
/// gradient) or a maximally monotone operator (through its Yosida
/// approximation).
#[derive(Clone)]
pub enum Driver {
    Objective(Arc<dyn ProxObjective>),
    Operator(Arc<dyn MonotoneOperator>),
}

impl Driver {
    /// The driving map `g` at smoothing parameter `lambda`.
    pub fn map(&self, lambda: f64, x: &[f64]) -> Result<Point> {
        match self {
            Driver::Objective(obj) => moreau_gradient(obj.as_ref(), lambda, x),
            Driver::Operator(op) => yosida(op.as_ref(), lambda, x),
        }
    }

    /// Known minimizer/zero, if any.
    pub fn rest_point(&self) -> Option<Point> {
        match self {
            Driver::Objective(obj) => obj.minimizer(),
            Driver::Operator(op) => op.zero(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Driver::Objective(obj) => obj.dimension(),
            Driver::Operator(op) => op.dimension(),
        }
    }
}

/// A fully parameterized continuous model.
///
/// For the benchmark kinds the schedule slots are reinterpreted: the γ slot
/// always carries the smoothing parameter handed to the driver, and for
/// `BotKarapetyants` the δ slot carries the outer coefficient b(t).
#[derive(Clone)]
pub struct DynamicSpec {
    pub kind: DynamicKind,
    pub alpha: f64,
    pub beta: f64,
    pub schedule: ParameterSchedule,
    pub driver: Driver,
    pub t0: f64,
}

impl DynamicSpec {
    pub fn new(
        kind: DynamicKind,
        alpha: f64,
        beta: f64,
        schedule: ParameterSchedule,
        driver: Driver,
        t0: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(t0 > 0.0) {
            return Err(Error::InvalidParameter(format!("t0 must be positive, got {t0}")));
        }
        if t0 < schedule.t0() {
            return Err(Error::InvalidParameter(format!(
                "dynamic start t0 = {t0} precedes the schedule domain start {}",
                schedule.t0()
            )));
        }
        if matches!(kind, DynamicKind::Hrmmd) && !matches!(driver, Driver::Operator(_)) {
            return Err(Error::InvalidParameter(
                "the operator dynamic requires a monotone-operator driver".into(),
            ));
        }
        Ok(Self {
            kind,
            alpha,
            beta,
            schedule,
            driver,
            t0,
        })
    }

    /// Smoothing parameter λ(t) handed to the driving map.
    pub fn smoothing(&self, t: f64) -> Result<f64> {
        let (_, _, gamma, _) = schedule_eval(&self.schedule, t)?;
        Ok(gamma)
    }

    /// Coefficient c(t) inside the time derivative.
    pub fn inner_coef(&self, t: f64) -> Result<f64> {
        Ok(match self.kind {
            DynamicKind::Nshr | DynamicKind::Hrmmd => {
                let (delta, _, _, _) = schedule_eval(&self.schedule, t)?;
                self.beta * delta
            }
            DynamicKind::BaselineDelta | DynamicKind::BaselineUnit => 0.0,
            // β(t) is restricted to a constant for the time-scaled benchmark;
            // a time-varying β(t) inside the derivative is out of scope.
            DynamicKind::AttouchLaszlo | DynamicKind::BotKarapetyants => self.beta,
        })
    }

    /// Outer coefficient e(t) multiplying the driving map.
    pub fn outer_coef(&self, t: f64) -> Result<f64> {
        Ok(match self.kind {
            DynamicKind::Nshr | DynamicKind::Hrmmd => {
                let (delta, _, _, _) = schedule_eval(&self.schedule, t)?;
                (1.0 + self.beta / t) * delta
            }
            DynamicKind::BaselineDelta => {
                let (delta, _, _, _) = schedule_eval(&self.schedule, t)?;
                delta
            }
            DynamicKind::BaselineUnit | DynamicKind::AttouchLaszlo => 1.0,
            DynamicKind::BotKarapetyants => {
                let (b, _, _, _) = schedule_eval(&self.schedule, t)?;
                b
            }
        })
    }

    /// Driving map g(t, x) at the spec's smoothing parameter.
    pub fn driving_map(&self, t: f64, x: &[f64]) -> Result<Point> {
        self.driver.map(self.smoothing(t)?, x)
    }
}

/// Which first-order reformulation a flat state vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reformulation {
    /// The exact coupled (x, y) system (envelope-driven dynamic, β > 0 only).
    Coupled,
    /// The velocity-shift system (x, v) with v = ẋ + c(t)·g(t, x).
    Shift,
}

/// Solves the initial-condition compatibility equation of the (x, y)
/// reformulation for y0, given a desired initial velocity v0:
///
/// `y0 = −β·[v0 + βδ(t0)·∇f_{γ(t0)}(x0) + ((α−1)/t0 − 1/β)·x0]`.
///
/// β = 0 is rejected — the (x, y) form divides by β; use the velocity-shift
/// reformulation instead.
pub fn compatibility_y0(
    x0: &[f64],
    v0: &[f64],
    t0: f64,
    alpha: f64,
    beta: f64,
    sched: &ParameterSchedule,
    obj: &dyn ProxObjective,
) -> Result<Point> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "the (x, y) reformulation requires beta > 0, got {beta}"
        )));
    }
    let (delta, _, gamma, _) = schedule_eval(sched, t0)?;
    let g = moreau_gradient(obj, gamma, x0)?;
    let lin = (alpha - 1.0) / t0 - 1.0 / beta;
    Ok((0..x0.len())
        .map(|i| -beta * (v0[i] + beta * delta * g[i] + lin * x0[i]))
        .collect())
}

/// The exact (x, y) vector field of the envelope-driven dynamic:
///
/// `ẋ = −βδ∇f_γ(x) − ((α−1)/t − 1/β)x − y/β`
/// `ẏ = (1/β − (α−2)/t)x − (1/t + 1/β)y`
pub fn coupled_vector_field(
    spec: &DynamicSpec,
    t: f64,
    x: &[f64],
    y: &[f64],
) -> Result<(Point, Point)> {
    if spec.kind != DynamicKind::Nshr {
        return Err(Error::Unsupported(
            "the (x, y) reformulation is defined for the envelope-driven dynamic only".into(),
        ));
    }
    if !(spec.beta > 0.0) {
        return Err(Error::InvalidParameter(
            "the (x, y) reformulation requires beta > 0".into(),
        ));
    }
    if t < spec.t0 {
        return Err(Error::InvalidParameter(format!(
            "field evaluated at t = {t} before t0 = {}",
            spec.t0
        )));
    }
    let (delta, _, gamma, _) = schedule_eval(&spec.schedule, t)?;
    let g = spec.driver.map(gamma, x)?;
    let (alpha, beta) = (spec.alpha, spec.beta);
    let lin_x = (alpha - 1.0) / t - 1.0 / beta;
    let dx: Point = (0..x.len())
        .map(|i| -beta * delta * g[i] - lin_x * x[i] - y[i] / beta)
        .collect();
    let cx = 1.0 / beta - (alpha - 2.0) / t;
    let cy = 1.0 / t + 1.0 / beta;
    let dy: Point = (0..x.len()).map(|i| cx * x[i] - cy * y[i]).collect();
    Ok((dx, dy))
}

/// The generic velocity-shift vector field, valid for every dynamic kind:
/// `ẋ = v − c(t)·g(t, x)`, `v̇ = −(α/t)·ẋ − e(t)·g(t, x)`.
pub fn shift_vector_field(
    spec: &DynamicSpec,
    t: f64,
    x: &[f64],
    v: &[f64],
) -> Result<(Point, Point)> {
    if t < spec.t0 {
        return Err(Error::InvalidParameter(format!(
            "field evaluated at t = {t} before t0 = {}",
            spec.t0
        )));
    }
    let c = spec.inner_coef(t)?;
    let e = spec.outer_coef(t)?;
    let g = spec.driving_map(t, x)?;
    let dx: Point = (0..x.len()).map(|i| v[i] - c * g[i]).collect();
    let a_t = spec.alpha / t;
    let dv: Point = (0..x.len()).map(|i| -a_t * dx[i] - e * g[i]).collect();
    Ok((dx, dv))
}

/// Recovers the physical velocity ẋ from a reformulated state.
pub fn recover_velocity(
    spec: &DynamicSpec,
    reform: Reformulation,
    t: f64,
    state: &[f64],
) -> Result<Point> {
    let n = spec.driver.dimension();
    if state.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: state.len(),
        });
    }
    let (x, aux) = state.split_at(n);
    match reform {
        Reformulation::Coupled => {
            let (dx, _) = coupled_vector_field(spec, t, x, aux)?;
            Ok(dx)
        }
        Reformulation::Shift => {
            let c = spec.inner_coef(t)?;
            let g = spec.driving_map(t, x)?;
            Ok((0..n).map(|i| aux[i] - c * g[i]).collect())
        }
    }
}

/// Builds the flat initial state for the chosen reformulation from
/// position x0 and velocity v0.
pub fn initial_state(
    spec: &DynamicSpec,
    reform: Reformulation,
    x0: &[f64],
    v0: &[f64],
) -> Result<Vec<f64>> {
    let n = spec.driver.dimension();
    if x0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len().max(v0.len()),
        });
    }
    let mut z0 = x0.to_vec();
    match reform {
        Reformulation::Coupled => {
            let obj = match &spec.driver {
                Driver::Objective(obj) => obj.clone(),
                Driver::Operator(_) => {
                    return Err(Error::Unsupported(
                        "the (x, y) reformulation needs an objective driver".into(),
                    ))
                }
            };
            let y0 = compatibility_y0(
                x0,
                v0,
                spec.t0,
                spec.alpha,
                spec.beta,
                &spec.schedule,
                obj.as_ref(),
            )?;
            z0.extend(y0);
        }
        Reformulation::Shift => {
            let c = spec.inner_coef(spec.t0)?;
            let g = spec.driving_map(spec.t0, x0)?;
            z0.extend((0..n).map(|i| v0[i] + c * g[i]));
        }
    }
    Ok(z0)
}

/// Integrates the dynamic from `(x0, v0)` at `spec.t0` to `t_end`, sampling
/// at `sample_grid`. State layout in the returned trajectory: `[x.., aux..]`
/// where `aux` is y or v depending on the reformulation.
pub fn simulate(
    spec: &DynamicSpec,
    reform: Reformulation,
    x0: &[f64],
    v0: &[f64],
    t_end: f64,
    config: &IntegratorConfig,
    sample_grid: &[f64],
) -> Result<Trajectory> {
    let z0 = initial_state(spec, reform, x0, v0)?;
    let n = spec.driver.dimension();
    let field = move |t: f64, z: &[f64]| -> Result<Vec<f64>> {
        let (x, aux) = z.split_at(n);
        let (dx, daux) = match reform {
            Reformulation::Coupled => coupled_vector_field(spec, t, x, aux)?,
            Reformulation::Shift => shift_vector_field(spec, t, x, aux)?,
        };
        let mut dz = dx;
        dz.extend(daux);
        Ok(dz)
    };
    integrate(&field, spec.t0, &z0, t_end, config, sample_grid)
}

/// Finite-difference residual of the second-order model at an interior probe
/// time, from the trajectory's dense output with uniform local spacing `h`:
///
/// `‖ẍ + (α/t)ẋ + D_t[c(t)·g(t, x(t))] + e(t)·g(t, x)‖`
///
/// with ẍ, ẋ by central differences on x and the damping term by a central
/// difference of w(s) = c(s)·g(s, x(s)). Nothing here evaluates Hessians.
pub fn second_order_residual(
    spec: &DynamicSpec,
    traj: &Trajectory,
    reform: Reformulation,
    t: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("probe step must be positive, got {h}")));
    }
    if t - h < traj.t_start() || t + h > traj.t_end() {
        return Err(Error::InvalidParameter(format!(
            "probe time {t} ± {h} leaves the trajectory span"
        )));
    }
    let n = spec.driver.dimension();
    let x_at = |s: f64| -> Result<Vec<f64>> { Ok(traj.eval(s)?[..n].to_vec()) };
    let (xm, x0, xp) = (x_at(t - h)?, x_at(t)?, x_at(t + h)?);
    let w_at = |s: f64, xs: &[f64]| -> Result<Vec<f64>> {
        let c = spec.inner_coef(s)?;
        let g = spec.driving_map(s, xs)?;
        Ok(vec_ops::scale(c, &g))
    };
    let (wm, wp) = (w_at(t - h, &xm)?, w_at(t + h, &xp)?);
    let g0 = spec.driving_map(t, &x0)?;
    let e = spec.outer_coef(t)?;
    let _ = reform; // the residual is reformulation-independent
    let mut res = vec![0.0; n];
    for i in 0..n {
        let xddot = (xp[i] - 2.0 * x0[i] + xm[i]) / (h * h);
        let xdot = (xp[i] - xm[i]) / (2.0 * h);
        let wdot = (wp[i] - wm[i]) / (2.0 * h);
        res[i] = xddot + spec.alpha / t * xdot + wdot + e * g0[i];
    }
    Ok(vec_ops::norm(&res))
}
