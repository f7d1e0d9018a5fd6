//! Inertial dynamics for nonsmooth convex minimization through time-varying
//! Moreau-envelope smoothing.
//!
//! The library implements:
//!
//! * proximal operators, Moreau envelopes, and concrete separable test
//!   objectives ([`proxcore`]);
//! * maximally monotone operators, resolvents, and Yosida approximations
//!   ([`monotone`]);
//! * time-varying parameter schedules with validators for the standing
//!   assumptions of the optimization and monotone settings ([`schedules`]);
//! * the continuous-time models — the high-resolution inertial dynamic driven
//!   by the envelope gradient, its monotone-operator counterpart, two damped
//!   baselines, and two literature benchmark dynamics ([`dynamics`]);
//! * an adaptive Dormand–Prince 5(4) integrator with dense output
//!   ([`integrate`]);
//! * Lyapunov/energy evaluation, diagnostics, rate fitting, and oscillation
//!   metrics ([`lyapunov`]);
//! * the discrete-time proximal algorithm obtained from the implicit
//!   discretization of the dynamic ([`dnshr`]);
//! * a reproducible experiment harness with CSV export ([`bench`]).

pub mod bench;
pub mod dnshr;
pub mod dynamics;
pub mod integrate;
pub mod lyapunov;
pub mod monotone;
pub mod proxcore;
pub mod schedules;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Vector dimensions did not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A NaN or infinity appeared where a finite value is required.
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    /// The adaptive integrator could not make progress.
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    /// The integrator exceeded its step budget.
    #[error("maximum step count {max_steps} exceeded at t = {t}")]
    MaxStepsExceeded { max_steps: usize, t: f64 },
    /// An operation requiring a known zero/minimizer was called without one.
    #[error("operator/objective has no known zero or minimizer: {0}")]
    MissingZero(String),
    /// A rate fit or metric had too few usable samples.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    /// The requested combination is deliberately not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An I/O failure, tagged with the offending path.
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Dense vector helpers shared by the numeric modules.
///
/// Points are plain `Vec<f64>`; problems here are tiny (dimension ≤ 10), so a
/// handful of free functions beats pulling in a linear-algebra crate.
pub mod vec_ops {
    /// Euclidean norm.
    pub fn norm(v: &[f64]) -> f64 {
        v.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Inner product; panics on length mismatch (programmer error).
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// `a - b`.
    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    /// `a + s * b`.
    pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x + s * y).collect()
    }

    /// `s * a`.
    pub fn scale(s: f64, a: &[f64]) -> Vec<f64> {
        a.iter().map(|x| s * x).collect()
    }

    /// Largest absolute entry (sup norm).
    pub fn norm_inf(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// True iff every entry is finite.
    pub fn all_finite(v: &[f64]) -> bool {
        v.iter().all(|a| a.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::vec_ops::*;

    #[test]
    fn vector_helpers() {
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(sub(&[1.0, 2.0], &[3.0, 1.0]), vec![-2.0, 1.0]);
        assert_eq!(add_scaled(&[1.0, 2.0], 2.0, &[3.0, 1.0]), vec![7.0, 4.0]);
        assert_eq!(norm_inf(&[-3.0, 2.0]), 3.0);
        assert!(all_finite(&[1.0, 2.0]));
        assert!(!all_finite(&[1.0, f64::NAN]));
    }
}
