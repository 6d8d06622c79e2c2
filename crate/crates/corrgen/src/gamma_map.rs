//! The log-correlation bijection and its change of variables.
//!
//! A valid correlation matrix `C` maps to `gamma = vecl(log C)`; the inverse
//! direction reconstructs the diagonal of `log C` by the fixed point
//! `x <- x - log diag(exp G[x])`, where `G[x]` places `gamma` off the
//! diagonal and `x` on it. This module implements both directions, the
//! Jacobian `J = d vecl(C) / d gamma` with its determinant reciprocal `psi`,
//! density transport from gamma space to correlation space, eigenvalue bound
//! reports, and the irreducibility test used to reason about matrices that
//! split into independent diagonal blocks.
//!
//! The Jacobian follows the elimination form
//! `J = E_l (I - A_C E_d' (E_d A_C E_d')^{-1} E_d) A_C (E_l + E_u)'`
//! where `A_C = (Q (x) Q) Xi (Q (x) Q)'` is the derivative of the matrix
//! exponential at `log C`. The elimination maps are realized as index
//! selections into `A_C` (never as materialized n^2-by-n^2 products), and
//! `A_C` itself is assembled column by column from rank-one eigenvector
//! products. A full `A_C` is kept for inspection up to n = 50; beyond that
//! `jacobian` refuses with `BoundExceeded`.

use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::linalg::{
    self, cholesky, lu_factor, mat_log_spd, sym_eig, unvecl, vecl, vecl_len, Mat, SymMatrix,
};

/// Coordinates of a correlation matrix in log-correlation space: the
/// strictly-lower-triangle entries of `log C` in `vecl` order.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaVector {
    n: usize,
    values: Vec<f64>,
}

impl GammaVector {
    /// Gamma vector for matrix dimension `n`; `values` must have length
    /// n(n-1)/2 and be finite.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(CorrError::DimensionError(
                "gamma vectors need matrix dimension at least 2".into(),
            ));
        }
        if values.len() != vecl_len(n) {
            return Err(CorrError::DimensionError(format!(
                "gamma length {} does not match dimension {} (expected {})",
                values.len(),
                n,
                vecl_len(n)
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(CorrError::DomainError(format!("non-finite gamma entry {bad}")));
        }
        Ok(GammaVector { n, values })
    }

    /// Infer the matrix dimension from the vector length.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = linalg::dim_from_vecl_len(values.len()).ok_or_else(|| {
            CorrError::DimensionError(format!(
                "length {} is not n(n-1)/2 for any n >= 2",
                values.len()
            ))
        })?;
        GammaVector::new(n, values)
    }

    /// All-zero gamma (the identity matrix's coordinates).
    pub fn zeros(n: usize) -> Result<Self> {
        GammaVector::new(n, vec![0.0; vecl_len(n.max(2))])
    }

    /// Constant gamma `value * 1`.
    pub fn constant(n: usize, value: f64) -> Result<Self> {
        GammaVector::new(n, vec![value; vecl_len(n.max(2))])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Length d = n(n-1)/2.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Largest absolute entry.
    pub fn gamma_max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The symmetric matrix `G[x]` with these off-diagonal entries and
    /// diagonal `x`.
    pub fn embed(&self, diag: &[f64]) -> Result<SymMatrix> {
        if diag.len() != self.n {
            return Err(CorrError::DimensionError(format!(
                "diagonal length {} does not match dimension {}",
                diag.len(),
                self.n
            )));
        }
        unvecl(&self.values, diag)
    }
}

/// A validated correlation matrix with its eigenvalues cached.
///
/// Invariants: symmetric with unit diagonal, off-diagonal entries strictly
/// inside (-1, 1), and positive definite. External inputs are validated by
/// [`CorrelationMatrix::from_sym`] (eigenvalue floor 1e-12); matrices built
/// internally from a spectral decomposition carry their eigenvalues along
/// instead of being re-decomposed.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    mat: SymMatrix,
    /// Descending; strictly positive.
    eigenvalues: Vec<f64>,
}

impl CorrelationMatrix {
    /// Validate an arbitrary symmetric matrix as a correlation matrix.
    ///
    /// The diagonal must be 1 within 1e-12 (it is snapped to exactly 1),
    /// off-diagonals must lie strictly inside (-1, 1), and the smallest
    /// eigenvalue must exceed the 1e-12 floor.
    pub fn from_sym(m: SymMatrix) -> Result<Self> {
        let n = m.dim();
        let mut snapped = m;
        for i in 0..n {
            let d = snapped.get(i, i);
            if (d - 1.0).abs() > 1e-12 {
                return Err(CorrError::DomainError(format!(
                    "diagonal entry {i} is {d}, expected 1"
                )));
            }
            snapped.set(i, i, 1.0);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if snapped.get(i, j).abs() >= 1.0 {
                    return Err(CorrError::DomainError(format!(
                        "off-diagonal ({i}, {j}) = {} is outside (-1, 1)",
                        snapped.get(i, j)
                    )));
                }
            }
        }
        let eig = sym_eig(&snapped)?;
        let lambda_min = *eig.values.last().expect("non-empty");
        if lambda_min <= linalg::EIGENVALUE_FLOOR {
            return Err(CorrError::NotPositiveDefinite { lambda_min });
        }
        Ok(CorrelationMatrix {
            mat: snapped,
            eigenvalues: eig.values,
        })
    }

    /// Trusted constructor for matrices assembled from a known spectral
    /// decomposition (unit diagonal already in place, eigenvalues strictly
    /// positive and descending). Verifies the cheap parts of the invariant
    /// and refuses degenerate output instead of panicking.
    pub(crate) fn from_parts(mat: SymMatrix, eigenvalues: Vec<f64>) -> Result<Self> {
        let n = mat.dim();
        debug_assert_eq!(eigenvalues.len(), n);
        debug_assert!(eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        if eigenvalues.last().copied().unwrap_or(0.0) <= 0.0 {
            return Err(CorrError::NumericalFailure(
                "spectral construction produced a non-positive eigenvalue".into(),
            ));
        }
        for i in 0..n {
            debug_assert_eq!(mat.get(i, i), 1.0);
            for j in (i + 1)..n {
                if mat.get(i, j).abs() >= 1.0 {
                    return Err(CorrError::NumericalFailure(format!(
                        "spectral construction produced off-diagonal ({i}, {j}) = {}",
                        mat.get(i, j)
                    )));
                }
            }
        }
        Ok(CorrelationMatrix { mat, eigenvalues })
    }

    /// Equicorrelation matrix with common coefficient `r`; valid for
    /// r in (-1/(n-1), 1). Its spectrum is known in closed form.
    pub fn equicorrelation(n: usize, r: f64) -> Result<Self> {
        if n < 2 {
            return Err(CorrError::DimensionError(
                "correlation matrices need dimension at least 2".into(),
            ));
        }
        let lo = -1.0 / (n as f64 - 1.0);
        if !(r > lo && r < 1.0) {
            return Err(CorrError::DomainError(format!(
                "equicorrelation coefficient {r} outside ({lo}, 1)"
            )));
        }
        let mat = SymMatrix::equicorrelation(n, r)?;
        let top = 1.0 + r * (n as f64 - 1.0);
        let rest = 1.0 - r;
        let mut eigenvalues = Vec::with_capacity(n);
        if top >= rest {
            eigenvalues.push(top);
            eigenvalues.extend(std::iter::repeat(rest).take(n - 1));
        } else {
            eigenvalues.extend(std::iter::repeat(rest).take(n - 1));
            eigenvalues.push(top);
        }
        CorrelationMatrix::from_parts(mat, eigenvalues)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn mat(&self) -> &SymMatrix {
        &self.mat
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty")
    }

    /// Determinant from the Cholesky pivots, which keep full relative
    /// accuracy even when the matrix is nearly singular (the cached
    /// eigenvalues carry only norm-relative accuracy). Falls back to the
    /// eigenvalue product if factorization fails.
    pub fn det(&self) -> f64 {
        match cholesky(&self.mat) {
            Ok(l) => (0..self.dim()).map(|i| l.get(i, i) * l.get(i, i)).product(),
            Err(_) => self.eigenvalues.iter().product(),
        }
    }

    /// The correlation coefficients `vecl(C)` (same ordering as gamma).
    pub fn to_vecl(&self) -> Vec<f64> {
        vecl(&self.mat)
    }

    /// Lower Cholesky factor (always exists for a valid instance).
    pub fn cholesky_factor(&self) -> Result<Mat> {
        cholesky(&self.mat)
    }
}

/// Forward direction of the bijection: `gamma = vecl(log C)`.
pub fn corr_to_gamma(c: &CorrelationMatrix) -> Result<GammaVector> {
    let g = mat_log_spd(c.mat())?;
    GammaVector::new(c.dim(), vecl(&g))
}

/// Result of the fixed-point inversion. `Ok` implies convergence; the
/// iteration count and final max-norm update are reported for diagnostics.
#[derive(Clone, Debug)]
pub struct GammaSolve {
    pub corr: CorrelationMatrix,
    pub iterations: usize,
    pub residual: f64,
}

/// Default tolerance on the max-norm diagonal update.
pub const GAMMA_TO_CORR_TOL: f64 = 1e-12;
/// Default iteration cap for the fixed point.
pub const GAMMA_TO_CORR_MAX_ITER: usize = 1000;

/// Inverse direction with default tolerance and iteration cap.
pub fn gamma_to_corr(gamma: &GammaVector) -> Result<CorrelationMatrix> {
    Ok(gamma_to_corr_with(gamma, GAMMA_TO_CORR_TOL, GAMMA_TO_CORR_MAX_ITER)?.corr)
}

/// Inverse direction of the bijection by the diagonal fixed point
/// `x <- x - log diag(exp G[x])`, starting from `x = 0`.
///
/// Convergence is declared when the max-norm of the update falls to `tol`
/// or below; hitting `max_iter` first yields `IterationLimit` carrying the
/// last residual.
pub fn gamma_to_corr_with(gamma: &GammaVector, tol: f64, max_iter: usize) -> Result<GammaSolve> {
    if !(tol > 0.0) {
        return Err(CorrError::DomainError(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(CorrError::DomainError("max_iter must be at least 1".into()));
    }
    let n = gamma.n();
    let mut g = gamma.embed(&vec![0.0; n])?;
    let mut x = vec![0.0_f64; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        let eig = sym_eig(&g)?;
        let exp_vals: Vec<f64> = eig.values.iter().map(|&l| l.exp()).collect();
        // diag(exp G) without assembling the full matrix.
        let mut max_update = 0.0_f64;
        let mut delta = vec![0.0_f64; n];
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                let q = eig.vectors.get(i, k);
                acc += exp_vals[k] * q * q;
            }
            if acc <= 0.0 {
                return Err(CorrError::NumericalFailure(
                    "diagonal of exp(G) underflowed to zero".into(),
                ));
            }
            delta[i] = acc.ln();
            max_update = max_update.max(delta[i].abs());
        }
        residual = max_update;
        if max_update <= tol {
            // Accept the current iterate: assemble C = exp(G[x]) with
            // compensated accumulation and rescale by the computed diagonal
            // (within tol of 1). Both steps matter for the round trip: the
            // logarithm amplifies absolute entry errors by 1/lambda_min, so
            // neither plain-summation noise nor an unscaled diagonal snap is
            // benign, while the congruence rescaling moves eigenvalues only
            // relatively.
            let mut c = eig.apply_compensated(f64::exp);
            let scale: Vec<f64> = (0..n).map(|i| c.get(i, i).sqrt()).collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    c.set(i, j, c.get(i, j) / (scale[i] * scale[j]));
                }
                c.set(i, i, 1.0);
            }
            let corr = CorrelationMatrix::from_parts(c, exp_vals)?;
            return Ok(GammaSolve {
                corr,
                iterations: iter,
                residual,
            });
        }
        for i in 0..n {
            x[i] -= delta[i];
            g.set(i, i, x[i]);
        }
    }
    Err(CorrError::IterationLimit {
        iterations: max_iter,
        residual,
    })
}

/// Jacobian of the change of variables at `C`, with the density factor
/// `psi = 1/det(J)`, the matrix-exponential derivative `A_C`, and the
/// divided-difference weights `Xi`.
#[derive(Clone, Debug)]
pub struct JacobianBundle {
    /// d-by-d matrix `d vecl(C) / d gamma`.
    pub j: Mat,
    /// `1 / det(j)`.
    pub psi: f64,
    /// n^2-by-n^2 derivative of `exp` at `log C` (symmetric positive
    /// definite).
    pub a_c: Mat,
    /// Diagonal of `Xi` in vec order: entry `u*n + t` is `xi_{t,u}`.
    pub xi: Vec<f64>,
}

/// Largest dimension for which the full `A_C` is assembled.
pub const JACOBIAN_MAX_DIM: usize = 50;

/// Divided-difference weights: `(l_i - l_j) / (log l_i - log l_j)`, with the
/// confluent value `l_i` when the eigenvalues are closer than 1e-10.
fn xi_weights(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut xi = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (values[i], values[j]);
            xi[i * n + j] = if (li - lj).abs() < 1e-10 {
                li
            } else {
                (li - lj) / (li.ln() - lj.ln())
            };
        }
    }
    xi
}

/// Jacobian of `vecl(C)` with respect to gamma at a valid `C`.
///
/// Assembles the full n^2-by-n^2 `A_C`, so it refuses dimensions above
/// [`JACOBIAN_MAX_DIM`] with `BoundExceeded`. Cost is O(n^5) time and
/// O(n^4) memory.
pub fn jacobian(c: &CorrelationMatrix) -> Result<JacobianBundle> {
    let n = c.dim();
    if n > JACOBIAN_MAX_DIM {
        return Err(CorrError::BoundExceeded(format!(
            "jacobian assembles a full n^2 x n^2 matrix and is limited to n <= {JACOBIAN_MAX_DIM}, got {n}"
        )));
    }
    let eig = sym_eig(c.mat())?;
    let lambda_min = *eig.values.last().expect("non-empty");
    if lambda_min <= 0.0 {
        return Err(CorrError::NotPositiveDefinite { lambda_min });
    }
    let q = &eig.vectors;
    let xi = xi_weights(&eig.values);
    let nn = n * n;

    // A_C column by column: the column for unit matrix E_{t,u} (vec index
    // u*n + t) is vec(Q ((Q' E_{t,u} Q) o Xi) Q') with
    // Q' E_{t,u} Q = outer(row t of Q, row u of Q).
    let mut a = Mat::zeros(nn, nn);
    let mut w = vec![0.0; nn];
    let mut y = vec![0.0; nn];
    for u in 0..n {
        for t in 0..n {
            let col = u * n + t;
            // w = (outer(Q[t,:], Q[u,:]) o Xi) Q', i.e. w[i][j] =
            // Q[t][i] * sum_k Q[u][k] xi[i][k] Q[j][k] -- build in two steps.
            for i in 0..n {
                let qt = q.get(t, i);
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += q.get(u, k) * xi[i * n + k] * q.get(j, k);
                    }
                    w[i * n + j] = qt * acc;
                }
            }
            // y = Q w; column entry for output position (r2, c2) is
            // y[r2][c2], stored at vec index c2*n + r2.
            for r2 in 0..n {
                for c2 in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += q.get(r2, i) * w[i * n + c2];
                    }
                    y[r2 * n + c2] = acc;
                }
            }
            for r2 in 0..n {
                for c2 in 0..n {
                    a.set(c2 * n + r2, col, y[r2 * n + c2]);
                }
            }
        }
    }
    // A_C is symmetric analytically; average out assembly rounding.
    for i in 0..nn {
        for j in (i + 1)..nn {
            let s = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, s);
            a.set(j, i, s);
        }
    }

    // Index selections realizing E_l, E_u, E_d.
    let d = vecl_len(n);
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for c2 in 0..n {
        for r2 in (c2 + 1)..n {
            lower.push(c2 * n + r2);
            upper.push(r2 * n + c2);
        }
    }
    let diag: Vec<usize> = (0..n).map(|i| i * n + i).collect();

    // B = A (E_l + E_u)', restricted to the rows we need.
    let b_at = |row: usize, k: usize| a.get(row, lower[k]) + a.get(row, upper[k]);
    let mut s = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, a.get(diag[i], diag[j]));
        }
    }
    let mut b_diag = Mat::zeros(n, d);
    for i in 0..n {
        for k in 0..d {
            b_diag.set(i, k, b_at(diag[i], k));
        }
    }
    let lu = lu_factor(&s).map_err(|_| {
        CorrError::NumericalFailure("singular diagonal block E_d A_C E_d' in jacobian".into())
    })?;
    let x = lu.solve_mat(&b_diag);

    let mut j = Mat::zeros(d, d);
    for k1 in 0..d {
        for k2 in 0..d {
            let mut acc = b_at(lower[k1], k2);
            for i in 0..n {
                acc -= a.get(lower[k1], diag[i]) * x.get(i, k2);
            }
            j.set(k1, k2, acc);
        }
    }

    let det = lu_factor(&j)
        .map_err(|_| CorrError::NumericalFailure("singular jacobian".into()))?
        .det();
    if det == 0.0 || !det.is_finite() {
        return Err(CorrError::NumericalFailure(format!(
            "jacobian determinant {det} is unusable"
        )));
    }
    let mut xi_diag = vec![0.0; nn];
    for u in 0..n {
        for t in 0..n {
            xi_diag[u * n + t] = xi[t * n + u];
        }
    }
    Ok(JacobianBundle {
        j,
        psi: 1.0 / det,
        a_c: a,
        xi: xi_diag,
    })
}

/// A density on gamma space, used to transport densities to correlation
/// space. The families cover the laws exercised by the samplers and the
/// command-line `density` command.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GammaDensity {
    /// Independent N(mean, omega2) coordinates.
    GaussianIid { mean: f64, omega2: f64 },
    /// Joint Gaussian with full covariance.
    GaussianFull {
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
    /// Independent logistic coordinates with location and scale.
    LogisticIid { loc: f64, scale: f64 },
}

impl GammaDensity {
    /// Evaluate the density at a gamma vector.
    pub fn eval(&self, gamma: &[f64]) -> Result<f64> {
        match self {
            GammaDensity::GaussianIid { mean, omega2 } => {
                if !(*omega2 > 0.0) {
                    return Err(CorrError::DomainError(format!(
                        "gaussian_iid needs omega2 > 0, got {omega2}"
                    )));
                }
                let norm = 1.0 / (2.0 * std::f64::consts::PI * omega2).sqrt();
                let mut out = 1.0;
                for &g in gamma {
                    let z = g - mean;
                    out *= norm * (-0.5 * z * z / omega2).exp();
                }
                Ok(out)
            }
            GammaDensity::GaussianFull { mean, covariance } => {
                let d = mean.len();
                if gamma.len() != d || covariance.len() != d {
                    return Err(CorrError::DimensionError(format!(
                        "gaussian_full dimension mismatch: gamma {}, mean {}, covariance {}",
                        gamma.len(),
                        d,
                        covariance.len()
                    )));
                }
                let sigma = Mat::from_rows(covariance)?;
                let lu = lu_factor(&sigma)?;
                let det = lu.det();
                if !(det > 0.0) {
                    return Err(CorrError::DomainError(format!(
                        "gaussian_full covariance determinant {det} is not positive"
                    )));
                }
                let centered: Vec<f64> = gamma.iter().zip(mean).map(|(g, m)| g - m).collect();
                let solved = lu.solve(&centered);
                let quad: f64 = centered.iter().zip(&solved).map(|(a, b)| a * b).sum();
                let norm = (2.0 * std::f64::consts::PI).powi(d as i32) * det;
                Ok((-0.5 * quad).exp() / norm.sqrt())
            }
            GammaDensity::LogisticIid { loc, scale } => {
                if !(*scale > 0.0) {
                    return Err(CorrError::DomainError(format!(
                        "logistic_iid needs scale > 0, got {scale}"
                    )));
                }
                let mut out = 1.0;
                for &g in gamma {
                    let e = (-(g - loc) / scale).exp();
                    out *= e / (scale * (1.0 + e) * (1.0 + e));
                }
                Ok(out)
            }
        }
    }
}

/// Density induced on correlation space: `f_C(C) = f_gamma(gamma(C)) |psi|`.
pub fn density_corr(c: &CorrelationMatrix, f_gamma: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let gamma = corr_to_gamma(c)?;
    let value = f_gamma(gamma.as_slice());
    if !value.is_finite() || value < 0.0 {
        return Err(CorrError::DomainError(format!(
            "gamma density evaluated to {value}; expected finite non-negative"
        )));
    }
    let bundle = jacobian(c)?;
    Ok(value * bundle.psi.abs())
}

/// Eigenvalue bound diagnostics for a (gamma, C) pair.
///
/// The upper bound `exp(-gamma_max)` is a theorem and must never be
/// violated; the lower bound uses the conjectured constant K = n and is
/// reported as a conjecture, not asserted.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub gamma_max: f64,
    pub lambda_min: f64,
    pub upper: f64,
    pub lower_conjectured: f64,
}

/// Slack applied when flagging bound violations.
pub const BOUND_SLACK: f64 = 1e-10;

impl BoundReport {
    /// True when `lambda_min` exceeds the proven upper bound beyond slack.
    pub fn upper_violated(&self) -> bool {
        self.lambda_min > self.upper + BOUND_SLACK
    }

    /// True when `lambda_min` undercuts the conjectured (K = n) lower bound
    /// beyond slack.
    pub fn lower_conjecture_violated(&self) -> bool {
        self.lambda_min < self.lower_conjectured - BOUND_SLACK
    }
}

/// Bound report for `C = gamma_to_corr(gamma)` (the caller's obligation;
/// dimensions are checked).
pub fn min_eig_bounds(gamma: &GammaVector, c: &CorrelationMatrix) -> BoundReport {
    assert_eq!(
        gamma.n(),
        c.dim(),
        "gamma and C must describe the same dimension"
    );
    let gamma_max = gamma.gamma_max();
    BoundReport {
        gamma_max,
        lambda_min: c.lambda_min(),
        upper: (-gamma_max).exp(),
        lower_conjectured: (-(c.dim() as f64) * gamma_max).exp(),
    }
}

/// Is the graph with edges at non-zero off-diagonals of `G` connected?
///
/// Equivalently: `exp(G)` (and any correlation matrix with log pattern `G`)
/// cannot be permuted into a non-trivial block-diagonal form.
pub fn is_irreducible(g: &SymMatrix) -> bool {
    let n = g.dim();
    let mut seen = vec![false; n];
    let mut queue = vec![0_usize];
    seen[0] = true;
    let mut visited = 1;
    while let Some(v) = queue.pop() {
        for w in 0..n {
            if w != v && !seen[w] && g.get(v, w) != 0.0 {
                seen[w] = true;
                visited += 1;
                queue.push(w);
            }
        }
    }
    visited == n
}
