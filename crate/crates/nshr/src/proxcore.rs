//! Proximal operators, Moreau envelopes, and the concrete test objectives
//! used by the experiment harness.
//!
//! Objectives are exposed *only* through value and prox oracles: the models in
//! this crate never need subgradients, and keeping access oracle-based keeps
//! nonsmoothness exact. `value` may return `f64::INFINITY` (proper l.s.c.
//! functions); `prox` must always return a finite point.

use crate::{vec_ops, Error, Result};

/// A point of the ambient space; all entries must be finite.
pub type Point = Vec<f64>;

/// A convex objective accessed through value and proximal-map oracles.
///
/// Implementations must be pure: evaluation never mutates the objective, so
/// instances can be shared across concurrently integrated trajectories.
pub trait ProxObjective: Send + Sync {
    /// Ambient dimension n ≥ 1.
    fn dimension(&self) -> usize;

    /// Extended-real objective value; may return `+∞` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    /// The proximal map: unique minimizer of `y ↦ value(y) + ‖x−y‖²/(2γ)`.
    fn prox(&self, gamma: f64, x: &[f64]) -> Result<Point>;

    /// Known optimal value f*, if any.
    fn optimal_value(&self) -> Option<f64> {
        None
    }

    /// Known minimizer x*, if any.
    fn minimizer(&self) -> Option<Point> {
        None
    }
}

fn check_prox_args(dim: usize, gamma: f64, x: &[f64]) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "prox parameter gamma must be positive, got {gamma}"
        )));
    }
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if !vec_ops::all_finite(x) {
        return Err(Error::NonFinite("prox argument".into()));
    }
    Ok(())
}

/// Soft-thresholding: `sign(xi) · max(|xi| − tau, 0)`.
///
/// Rejects negative thresholds.
pub fn soft_threshold(xi: f64, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "soft_threshold requires tau >= 0, got {tau}"
        )));
    }
    Ok(xi.signum() * (xi.abs() - tau).max(0.0))
}

/// A scalar convex piece of a separable objective, with a closed-form
/// one-dimensional prox.
pub trait ScalarPiece: Send + Sync {
    fn value(&self, x: f64) -> f64;
    /// Minimizer of `y ↦ value(y) + (x−y)²/(2γ)`, γ > 0.
    fn prox(&self, gamma: f64, x: f64) -> f64;
}

/// The piece `½·q·x² + w·|x|` (q ≥ 0, w ≥ 0), whose prox is a scaled
/// soft-threshold: `S_{wγ/(1+qγ)}(x/(1+qγ))`.
#[derive(Debug, Clone, Copy)]
pub struct QuadPlusAbs {
    /// Quadratic curvature q.
    pub q: f64,
    /// Weight w of the absolute-value term.
    pub w: f64,
}

impl ScalarPiece for QuadPlusAbs {
    fn value(&self, x: f64) -> f64 {
        0.5 * self.q * x * x + self.w * x.abs()
    }

    fn prox(&self, gamma: f64, x: f64) -> f64 {
        let scale = 1.0 + self.q * gamma;
        // tau = w·γ/(1+qγ) ≥ 0, so the unwrap can't fire.
        soft_threshold(x / scale, self.w * gamma / scale).unwrap()
    }
}

/// A coordinate-separable convex objective built from scalar pieces.
pub struct SeparableObjective {
    pieces: Vec<Box<dyn ScalarPiece>>,
    optimal_value: Option<f64>,
    minimizer: Option<Point>,
}

impl SeparableObjective {
    pub fn new(
        pieces: Vec<Box<dyn ScalarPiece>>,
        optimal_value: Option<f64>,
        minimizer: Option<Point>,
    ) -> Self {
        Self {
            pieces,
            optimal_value,
            minimizer,
        }
    }
}

impl ProxObjective for SeparableObjective {
    fn dimension(&self) -> usize {
        self.pieces.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.pieces.len());
        x.iter()
            .zip(&self.pieces)
            .map(|(&xi, p)| p.value(xi))
            .sum()
    }

    fn prox(&self, gamma: f64, x: &[f64]) -> Result<Point> {
        check_prox_args(self.pieces.len(), gamma, x)?;
        Ok(x.iter()
            .zip(&self.pieces)
            .map(|(&xi, p)| p.prox(gamma, xi))
            .collect())
    }

    fn optimal_value(&self) -> Option<f64> {
        self.optimal_value
    }

    fn minimizer(&self) -> Option<Point> {
        self.minimizer.clone()
    }
}

/// The 2-D test objective `½(x₁² + 1000·x₂²) + ‖x‖₁` with minimizer (0,0) and
/// optimal value 0. Its prox is coordinatewise soft-thresholding after a
/// quadratic shrink.
pub fn test_objective() -> SeparableObjective {
    SeparableObjective::new(
        vec![
            Box::new(QuadPlusAbs { q: 1.0, w: 1.0 }),
            Box::new(QuadPlusAbs { q: 1000.0, w: 1.0 }),
        ],
        Some(0.0),
        Some(vec![0.0, 0.0]),
    )
}

/// Moreau envelope value `f_γ(x) = value(p) + ‖x−p‖²/(2γ)` with
/// `p = prox(γ, x)`. Always ≤ `value(x)`.
pub fn moreau_value(obj: &dyn ProxObjective, gamma: f64, x: &[f64]) -> Result<f64> {
    let p = obj.prox(gamma, x)?;
    let d = vec_ops::sub(x, &p);
    Ok(obj.value(&p) + vec_ops::dot(&d, &d) / (2.0 * gamma))
}

/// Moreau envelope gradient `∇f_γ(x) = (x − prox(γ,x))/γ`; 1/γ-Lipschitz and
/// γ-cocoercive.
pub fn moreau_gradient(obj: &dyn ProxObjective, gamma: f64, x: &[f64]) -> Result<Point> {
    let p = obj.prox(gamma, x)?;
    Ok(x.iter().zip(&p).map(|(xi, pi)| (xi - pi) / gamma).collect())
}

/// Expands a bracket around the prox subproblem's minimizer by doubling from
/// `[x−1, x+1]` until the finite-difference slope of
/// `φ(y) = fn(y) + (x−y)²/(2γ)` changes sign across the interval.
pub fn bracket_prox_1d(f: &dyn Fn(f64) -> f64, gamma: f64, x: f64) -> Result<(f64, f64)> {
    let phi = |y: f64| f(y) + (x - y) * (x - y) / (2.0 * gamma);
    let slope = |y: f64| {
        let h = 1e-7 * (1.0 + y.abs());
        (phi(y + h) - phi(y - h)) / (2.0 * h)
    };
    let (mut lo, mut hi) = (x - 1.0, x + 1.0);
    for _ in 0..80 {
        if slope(lo) <= 0.0 && slope(hi) >= 0.0 {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        let half = hi - mid;
        lo = mid - 2.0 * half;
        hi = mid + 2.0 * half;
    }
    Err(Error::InvalidParameter(
        "bracket expansion failed to enclose the prox minimizer".into(),
    ))
}

/// Independent prox oracle: minimizes `y ↦ fn(y) + (x−y)²/(2γ)` over the given
/// bracket by golden-section search to absolute tolerance 1e−12.
///
/// Used to validate closed-form prox implementations; derivative-free, so it
/// is robust at nonsmooth kinks.
pub fn brute_force_prox_1d(
    f: &dyn Fn(f64) -> f64,
    gamma: f64,
    x: f64,
    bracket: (f64, f64),
) -> Result<f64> {
    let (mut a, mut b) = bracket;
    if !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "invalid bracket [{a}, {b}]"
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let phi = |y: f64| f(y) + (x - y) * (x - y) / (2.0 * gamma);
    if !phi(a).is_finite() || !phi(b).is_finite() {
        return Err(Error::NonFinite("prox subproblem value on bracket".into()));
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8; // (√5 − 1)/2
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (phi(c), phi(d));
    while b - a > 1e-12 {
        if !fc.is_finite() || !fd.is_finite() {
            return Err(Error::NonFinite("prox subproblem value inside bracket".into()));
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = phi(d);
        }
    }
    let p_hat = 0.5 * (a + b);

    // Function-value comparisons cannot resolve the minimizer below
    // ~sqrt(eps)·scale: near the minimum phi varies quadratically while its
    // absolute value stays O(phi*), so differences under eps·phi* are
    // invisible to the search above. One parabolic refinement over a wider,
    // noise-dominating spacing recovers near-eps accuracy where phi is
    // locally smooth. Curvature estimates at two spacings disagree when a
    // nonsmooth kink sits inside the stencil; in that case the estimate from
    // the search is kept (there phi* itself is small, so the sqrt(eps) error
    // is small in absolute terms).
    let (b0_lo, b0_hi) = bracket;
    let s = 1e-4 * (1.0 + p_hat.abs());
    if p_hat - s < b0_lo || p_hat + s > b0_hi {
        return Ok(p_hat);
    }
    let vertex_and_curvature = |s: f64| {
        let (f1, f2, f3) = (phi(p_hat - s), phi(p_hat), phi(p_hat + s));
        let curv = (f1 - 2.0 * f2 + f3) / (s * s);
        let vertex = p_hat + s * (f1 - f3) / (2.0 * (f1 - 2.0 * f2 + f3));
        (vertex, curv)
    };
    let (v1, a1) = vertex_and_curvature(s);
    let (v2, a2) = vertex_and_curvature(0.5 * s);
    let smooth = a1 > 0.0
        && a2 > 0.0
        && (a1 - a2).abs() <= 1e-3 * a1.max(a2)
        && (v1 - p_hat).abs() <= s
        && (v1 - v2).abs() <= 0.1 * s;
    Ok(if smooth { v1 } else { p_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0).unwrap(), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(-2.0, 0.5).unwrap(), -1.5);
        assert!(soft_threshold(1.0, -0.1).is_err());
    }

    #[test]
    fn prox_fixed_point_at_minimizer() {
        let obj = test_objective();
        for gamma in [1e-4, 0.01, 1.0, 50.0] {
            let p = obj.prox(gamma, &[0.0, 0.0]).unwrap();
            assert_eq!(p, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn prox_frozen_regression_values() {
        let obj = test_objective();
        // Frozen from the golden-section oracle (and the closed form):
        // prox_{0.01 f}((20, −15)) with q = (1, 1000).
        let p = obj.prox(0.01, &[20.0, -15.0]).unwrap();
        assert!((p[0] - 19.792079207920793).abs() < 1e-12);
        assert!((p[1] - -1.3627272727272727).abs() < 1e-12);

        // γ = 1 at (0.5, 0.5): both scaled coordinates fall inside the
        // soft-threshold dead zone (0.25 ≤ 0.5 and 0.5/1001 ≤ 1/1001), so the
        // oracle-frozen value is exactly (0, 0).
        let p = obj.prox(1.0, &[0.5, 0.5]).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn prox_rejects_bad_inputs() {
        let obj = test_objective();
        assert!(obj.prox(0.0, &[1.0, 1.0]).is_err());
        assert!(obj.prox(-1.0, &[1.0, 1.0]).is_err());
        assert!(obj.prox(1.0, &[1.0]).is_err());
        assert!(obj.prox(1.0, &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn moreau_values() {
        let obj = test_objective();
        for gamma in [0.01, 1.0, 10.0] {
            assert_eq!(moreau_value(&obj, gamma, &[0.0, 0.0]).unwrap(), 0.0);
        }
        // Pure quadratic ½x²: envelope is x²/(2(1+γ)).
        let quad = SeparableObjective::new(
            vec![Box::new(QuadPlusAbs { q: 1.0, w: 0.0 })],
            Some(0.0),
            Some(vec![0.0]),
        );
        for (gamma, x) in [(0.5, 3.0), (2.0, -1.25), (1e-3, 7.0)] {
            let v = moreau_value(&quad, gamma, &[x]).unwrap();
            assert!((v - x * x / (2.0 * (1.0 + gamma))).abs() < 1e-12);
            let g = moreau_gradient(&quad, gamma, &[x]).unwrap();
            assert!((g[0] - x / (1.0 + gamma)).abs() < 1e-12);
        }
        // Frozen from the prox oracle at (γ, x) = (0.01, (20, −15)).
        let v = moreau_value(&obj, 0.01, &[20.0, -15.0]).unwrap();
        assert!((v - 10446.452740774077).abs() < 1e-8 * v);
        let g = moreau_gradient(&obj, 0.01, &[20.0, -15.0]).unwrap();
        assert!((g[0] - 20.792079207920792).abs() < 1e-9);
        assert!((g[1] - -1363.7272727272727).abs() < 1e-9);
        // Envelope never exceeds the function value.
        assert!(v <= obj.value(&[20.0, -15.0]));
    }

    #[test]
    fn moreau_gradient_vanishes_at_minimizer() {
        let obj = test_objective();
        let g = moreau_gradient(&obj, 0.3, &[0.0, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn brute_force_prox_examples() {
        // |y| with γ=1 at x=3: soft threshold → 2.
        let p = brute_force_prox_1d(&|y: f64| y.abs(), 1.0, 3.0, (-10.0, 10.0)).unwrap();
        assert!((p - 2.0).abs() < 1e-10);
        // ½y² with γ=1 at x=4: shrink → 2.
        let p = brute_force_prox_1d(&|y: f64| 0.5 * y * y, 1.0, 4.0, (-10.0, 10.0)).unwrap();
        assert!((p - 2.0).abs() < 1e-10);
        // Second coordinate of the test objective at x = −15, γ = 0.01.
        let piece = QuadPlusAbs { q: 1000.0, w: 1.0 };
        let p = brute_force_prox_1d(
            &|y: f64| piece.value(y),
            0.01,
            -15.0,
            (-20.0, 5.0),
        )
        .unwrap();
        assert!((p - piece.prox(0.01, -15.0)).abs() < 1e-10);
    }

    #[test]
    fn brute_force_prox_rejects_bad_bracket() {
        assert!(brute_force_prox_1d(&|y: f64| y.abs(), 1.0, 0.0, (2.0, 2.0)).is_err());
        assert!(brute_force_prox_1d(&|y: f64| y.abs(), 1.0, 0.0, (3.0, -3.0)).is_err());
    }

    #[test]
    fn bracket_expansion_encloses_minimizer() {
        let piece = QuadPlusAbs { q: 1.0, w: 1.0 };
        let f = |y: f64| piece.value(y);
        let (lo, hi) = bracket_prox_1d(&f, 0.5, 40.0).unwrap();
        let m = piece.prox(0.5, 40.0);
        assert!(lo <= m && m <= hi);
        let p = brute_force_prox_1d(&f, 0.5, 40.0, (lo, hi)).unwrap();
        assert!((p - m).abs() < 1e-10);
    }

    #[test]
    fn prox_via_gradient_identity() {
        // prox(γ,x) = x − γ∇f_γ(x) exactly.
        let obj = test_objective();
        let (gamma, x) = (0.37, [5.5, -2.25]);
        let p = obj.prox(gamma, &x).unwrap();
        let g = moreau_gradient(&obj, gamma, &x).unwrap();
        for i in 0..2 {
            // Exact up to one rounding of the multiply-subtract.
            assert!((p[i] - (x[i] - gamma * g[i])).abs() <= 1e-15 * (1.0 + p[i].abs()));
        }
    }

    proptest! {
        /// Closed-form prox agrees with the golden-section oracle.
        #[test]
        fn prox_matches_oracle(
            // γ ≤ ~0.5: when the minimizer sits on the |y| kink the oracle
            // keeps its sqrt(eps)-limited estimate, whose absolute error is
            // ~w·γ·sqrt(eps); this range keeps that below the 1e−8 tolerance.
            lg in -4.0f64..-0.3,
            x1 in -50.0f64..50.0,
            x2 in -50.0f64..50.0,
        ) {
            let gamma = 10f64.powf(lg);
            let obj = test_objective();
            let p = obj.prox(gamma, &[x1, x2]).unwrap();
            for (i, (xi, q)) in [(x1, 1.0), (x2, 1000.0)].into_iter().enumerate() {
                let piece = QuadPlusAbs { q, w: 1.0 };
                let f = |y: f64| piece.value(y);
                let bracket = bracket_prox_1d(&f, gamma, xi).unwrap();
                let oracle = brute_force_prox_1d(&f, gamma, xi, bracket).unwrap();
                prop_assert!((p[i] - oracle).abs() < 1e-8);
            }
        }

        /// Prox is nonexpansive.
        #[test]
        fn prox_nonexpansive(
            gamma in 1e-3f64..10.0,
            a1 in -20.0f64..20.0, a2 in -20.0f64..20.0,
            b1 in -20.0f64..20.0, b2 in -20.0f64..20.0,
        ) {
            let obj = test_objective();
            let pa = obj.prox(gamma, &[a1, a2]).unwrap();
            let pb = obj.prox(gamma, &[b1, b2]).unwrap();
            let num = crate::vec_ops::norm(&crate::vec_ops::sub(&pa, &pb));
            let den = crate::vec_ops::norm(&[a1 - b1, a2 - b2]);
            prop_assert!(num <= den + 1e-12);
        }

        /// d/dγ f_γ(x) = −½‖∇f_γ(x)‖² (central finite difference).
        #[test]
        fn envelope_parameter_derivative(
            lg in -2.0f64..1.0,
            x1 in -20.0f64..20.0,
            x2 in -20.0f64..20.0,
        ) {
            let gamma = 10f64.powf(lg);
            let obj = test_objective();
            let h = 1e-6 * gamma;
            let vp = moreau_value(&obj, gamma + h, &[x1, x2]).unwrap();
            let vm = moreau_value(&obj, gamma - h, &[x1, x2]).unwrap();
            let fd = (vp - vm) / (2.0 * h);
            let g = moreau_gradient(&obj, gamma, &[x1, x2]).unwrap();
            let expect = -0.5 * crate::vec_ops::dot(&g, &g);
            prop_assert!((fd - expect).abs() <= 1e-5 * expect.abs().max(1e-8));
        }

        /// Cocoercivity: ⟨∇f_γ(x)−∇f_γ(y), x−y⟩ ≥ γ‖∇f_γ(x)−∇f_γ(y)‖².
        #[test]
        fn envelope_gradient_cocoercive(
            gamma in 1e-3f64..10.0,
            a1 in -20.0f64..20.0, a2 in -20.0f64..20.0,
            b1 in -20.0f64..20.0, b2 in -20.0f64..20.0,
        ) {
            let obj = test_objective();
            let ga = moreau_gradient(&obj, gamma, &[a1, a2]).unwrap();
            let gb = moreau_gradient(&obj, gamma, &[b1, b2]).unwrap();
            let dg = crate::vec_ops::sub(&ga, &gb);
            let dx = [a1 - b1, a2 - b2];
            let lhs = crate::vec_ops::dot(&dg, &dx);
            let rhs = gamma * crate::vec_ops::dot(&dg, &dg);
            prop_assert!(lhs >= rhs - 1e-9 * (1.0 + rhs.abs()));
        }

        /// f_γ(x) is nonincreasing in γ.
        #[test]
        fn envelope_monotone_in_gamma(
            lg in -2.0f64..1.0,
            x1 in -20.0f64..20.0,
            x2 in -20.0f64..20.0,
        ) {
            let gamma = 10f64.powf(lg);
            let obj = test_objective();
            let v1 = moreau_value(&obj, gamma, &[x1, x2]).unwrap();
            let v2 = moreau_value(&obj, 2.0 * gamma, &[x1, x2]).unwrap();
            prop_assert!(v2 <= v1 + 1e-10 * (1.0 + v1.abs()));
        }
    }
}
