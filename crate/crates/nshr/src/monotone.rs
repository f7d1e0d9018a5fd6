//! Maximally monotone operators, resolvents, and Yosida approximations,
//! together with the operator-calculus identities the monotone analysis rests
//! on (resolvent identity, parameter perturbation, a diagonal-majorant
//! construction for negative-definite quadratic forms).

use std::sync::Arc;

use crate::proxcore::{Point, ProxObjective};
use crate::{vec_ops, Error, Result};

/// A maximally monotone operator exposed through its resolvent
/// `J_{λA} = (I + λA)⁻¹`.
///
/// Set-valued evaluation of `A` itself is deliberately not part of the
/// interface: everything downstream only ever needs resolvents.
pub trait MonotoneOperator: Send + Sync {
    /// Ambient dimension.
    fn dimension(&self) -> usize;

    /// Resolvent `J_{λA}(x)`, λ > 0. Firmly nonexpansive.
    fn resolvent(&self, lambda: f64, x: &[f64]) -> Result<Point>;

    /// A known zero x* with 0 ∈ A(x*), if any.
    fn zero(&self) -> Option<Point> {
        None
    }
}

/// The subdifferential ∂f of a convex objective; its resolvent is the
/// proximal map and its Yosida approximation is the Moreau-envelope gradient.
pub struct SubdifferentialOperator {
    pub objective: Arc<dyn ProxObjective>,
}

impl MonotoneOperator for SubdifferentialOperator {
    fn dimension(&self) -> usize {
        self.objective.dimension()
    }

    fn resolvent(&self, lambda: f64, x: &[f64]) -> Result<Point> {
        self.objective.prox(lambda, x)
    }

    fn zero(&self) -> Option<Point> {
        self.objective.minimizer()
    }
}

/// The scaling operator `A = s·I` with s ≥ 0 (s = 0 is the zero operator,
/// s = 1 the identity). Resolvent: `x/(1+λs)`; zero at the origin for s > 0.
pub struct ScalingOperator {
    pub dimension: usize,
    pub s: f64,
}

impl MonotoneOperator for ScalingOperator {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn resolvent(&self, lambda: f64, x: &[f64]) -> Result<Point> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "resolvent parameter must be positive, got {lambda}"
            )));
        }
        Ok(vec_ops::scale(1.0 / (1.0 + lambda * self.s), x))
    }

    fn zero(&self) -> Option<Point> {
        Some(vec![0.0; self.dimension])
    }
}

/// A linear operator `A x = M x` with `M + Mᵀ` positive semidefinite, the
/// standard source of maximally monotone operators that are *not*
/// subdifferentials (e.g. rotations). The resolvent solves `(I + λM) y = x`
/// by a dense partial-pivoting solve; dimensions here are tiny.
pub struct LinearMonotoneOperator {
    matrix: Vec<Vec<f64>>,
    zero: Option<Point>,
}

impl LinearMonotoneOperator {
    /// Builds the operator, verifying monotonicity: the symmetric part
    /// `(M + Mᵀ)/2` must be positive semidefinite (checked by a Cholesky
    /// factorization after a 1e−12 diagonal shift).
    pub fn new(matrix: Vec<Vec<f64>>, zero: Option<Point>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter("matrix must be square and nonempty".into()));
        }
        let mut sym = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                sym[i][j] = 0.5 * (matrix[i][j] + matrix[j][i]);
            }
            sym[i][i] += 1e-12;
        }
        if !cholesky_ok(&sym) {
            return Err(Error::InvalidParameter(
                "matrix is not monotone: symmetric part has a negative eigenvalue".into(),
            ));
        }
        Ok(Self { matrix, zero })
    }

    /// The 2-D rotation `M = [[0, −1], [1, 0]]`, maximally monotone with
    /// zero symmetric part and unique zero at the origin.
    pub fn rotation_2d() -> Self {
        Self::new(
            vec![vec![0.0, -1.0], vec![1.0, 0.0]],
            Some(vec![0.0, 0.0]),
        )
        .expect("rotation matrix is monotone")
    }
}

impl MonotoneOperator for LinearMonotoneOperator {
    fn dimension(&self) -> usize {
        self.matrix.len()
    }

    fn resolvent(&self, lambda: f64, x: &[f64]) -> Result<Point> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "resolvent parameter must be positive, got {lambda}"
            )));
        }
        let n = self.matrix.len();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = lambda * self.matrix[i][j];
            }
            a[i][i] += 1.0;
        }
        solve_dense(a, x.to_vec())
    }

    fn zero(&self) -> Option<Point> {
        self.zero.clone()
    }
}

/// Returns true iff the symmetric matrix admits a Cholesky factorization
/// (i.e. is positive definite to working precision).
fn cholesky_ok(sym: &[Vec<f64>]) -> bool {
    let n = sym.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = sym[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Dense linear solve with partial pivoting (in-place LU). `a` is consumed.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Point> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            // Cannot happen for I + λM with monotone M; flagged anyway.
            return Err(Error::NonFinite("singular resolvent linear system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * b[k];
        }
        b[col] = s / a[col][col];
    }
    Ok(b)
}

/// Yosida approximation `A_λ(x) = (x − J_{λA}(x))/λ`; 1/λ-Lipschitz and
/// λ-cocoercive. For a subdifferential operator this coincides with the
/// Moreau-envelope gradient (same arithmetic, bit for bit).
pub fn yosida(a: &dyn MonotoneOperator, lambda: f64, x: &[f64]) -> Result<Point> {
    let j = a.resolvent(lambda, x)?;
    Ok(x.iter().zip(&j).map(|(xi, ji)| (xi - ji) / lambda).collect())
}

/// Residual of the resolvent identity
/// `J_{αA}(x) = J_{βA}((β/α)x + (1 − β/α)J_{αA}(x))`; ≤ 1e−10 for exact
/// resolvents.
pub fn resolvent_identity_residual(
    a: &dyn MonotoneOperator,
    alpha: f64,
    beta: f64,
    x: &[f64],
) -> Result<f64> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "resolvent parameters must be positive, got ({alpha}, {beta})"
        )));
    }
    let ja = a.resolvent(alpha, x)?;
    let r = beta / alpha;
    let arg: Vec<f64> = x
        .iter()
        .zip(&ja)
        .map(|(xi, ji)| r * xi + (1.0 - r) * ji)
        .collect();
    let jb = a.resolvent(beta, &arg)?;
    Ok(vec_ops::norm(&vec_ops::sub(&ja, &jb)))
}

/// Margin of the Yosida parameter-perturbation bound
/// `‖A_β(x) − A_α(x)‖ ≤ (2|β−α|/α)·‖A_β(x)‖`: returns bound minus deviation,
/// which is ≥ −1e−10 for every maximally monotone operator.
pub fn yosida_perturbation_margin(
    a: &dyn MonotoneOperator,
    alpha: f64,
    beta: f64,
    x: &[f64],
) -> Result<f64> {
    let ya = yosida(a, alpha, x)?;
    let yb = yosida(a, beta, x)?;
    let bound = 2.0 * (beta - alpha).abs() / alpha * vec_ops::norm(&yb);
    Ok(bound - vec_ops::norm(&vec_ops::sub(&yb, &ya)))
}

/// Margin of the basic Yosida bound `‖A_λ(x)‖ ≤ ‖x − x*‖/λ` through a known
/// zero x*: returns bound minus norm, ≥ −1e−10.
pub fn yosida_basic_bound_margin(
    a: &dyn MonotoneOperator,
    lambda: f64,
    x: &[f64],
) -> Result<f64> {
    let zero = a
        .zero()
        .ok_or_else(|| Error::MissingZero("basic Yosida bound needs a known zero".into()))?;
    let y = yosida(a, lambda, x)?;
    Ok(vec_ops::norm(&vec_ops::sub(x, &zero)) / lambda - vec_ops::norm(&y))
}

/// Diagonal majorant for a negative-definite quadratic form
/// `P(x,y) = a‖x‖² + b⟨x,y⟩ + c‖y‖²` with a, c < 0 and Δ = b² − 4ac < 0:
/// produces (m, n) > 0 with `P ≤ −m‖x‖² − n‖y‖²`.
///
/// The choice of m is free inside the open interval (0, Δ/(4c));
/// `epsilon_fraction` ∈ (0,1) selects the point, then
/// `n = (Δ − 4mc)/(4(m + a))`. The pair satisfies m ≤ −a, n ≤ −c, and
/// `(−m−a)(−n−c) ≥ b²/4`, which is exactly positive semidefiniteness of the
/// slack form.
pub fn majorant_coefficients(
    a: f64,
    b: f64,
    c: f64,
    epsilon_fraction: f64,
) -> Result<(f64, f64)> {
    if !(a < 0.0) || !(c < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "majorant requires a < 0 and c < 0, got a = {a}, c = {c}"
        )));
    }
    let delta = b * b - 4.0 * a * c;
    if !(delta < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "majorant requires b² − 4ac < 0, got {delta}"
        )));
    }
    if !(epsilon_fraction > 0.0 && epsilon_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon_fraction must lie in (0,1), got {epsilon_fraction}"
        )));
    }
    // Δ/(4c) > 0 since both Δ and c are negative; m stays strictly below −a.
    let m = epsilon_fraction * delta / (4.0 * c);
    let n = (delta - 4.0 * m * c) / (4.0 * (m + a));
    Ok((m, n))
}
