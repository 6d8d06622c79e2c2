//! Dense symmetric linear algebra at desk scale.
//!
//! Everything here is deterministic and pure: eigendecomposition by cyclic
//! Jacobi rotations, symmetric matrix exponential and logarithm through the
//! spectral map, half-vectorization (`vecl`/`unvecl`), Cholesky, symmetric
//! permutation, plus crate-internal LU and QR kernels.
//!
//! Conventions:
//! - [`SymMatrix`] stores the full n-by-n array but enforces exact symmetry
//!   on construction, so `get(i, j) == get(j, i)` bitwise.
//! - `vecl` reads the strictly lower triangle column by column: pairs
//!   (2,1), (3,1), ..., (n,1), (3,2), ..., (n,n-1) in 1-based notation.
//! - Eigenvalues are returned in descending order; exact ties keep the order
//!   in which the Jacobi sweep produced them, so results are reproducible.

use crate::error::{CorrError, Result};

/// Dense row-major matrix, the workhorse for non-symmetric intermediates
/// (eigenvector bases, Jacobians, triangular factors).
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(CorrError::DimensionError("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(CorrError::DimensionError(
                "all rows must have the same non-zero length".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self * other`; panics on shape mismatch (internal contract).
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Symmetric matrix with full storage and exact element symmetry.
///
/// Construction symmetrizes (averages mirrored entries) and rejects
/// non-finite input, so a `SymMatrix` always satisfies
/// `get(i, j) == get(j, i)` exactly and contains finite values only.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CorrError::DimensionError("dimension must be positive".into()));
        }
        Ok(SymMatrix {
            n,
            data: vec![0.0; n * n],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = SymMatrix::zeros(n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    /// Build from full rows; mirrored entries are averaged so the stored
    /// matrix is exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(CorrError::DimensionError("input must be square and non-empty".into()));
        }
        SymMatrix::from_fn(n, |i, j| {
            if i == j {
                rows[i][j]
            } else {
                0.5 * (rows[i][j] + rows[j][i])
            }
        })
    }

    /// Build from a generator called once per pair `i <= j`; the value is
    /// written to both triangles.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = SymMatrix::zeros(n)?;
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(CorrError::DomainError(format!(
                        "non-finite entry at ({i}, {j})"
                    )));
                }
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        Ok(m)
    }

    /// Matrix with unit diagonal and constant off-diagonal `r`.
    pub fn equicorrelation(n: usize, r: f64) -> Result<Self> {
        SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { r })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.data[i * self.n + j]
    }

    /// Set entry (i, j) and its mirror. Panics on non-finite input to keep
    /// the type invariant.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(v.is_finite(), "SymMatrix entries must be finite");
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn to_mat(&self) -> Mat {
        Mat {
            rows: self.n,
            cols: self.n,
            data: self.data.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute elementwise difference; panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Compensated accumulator for sums of triple products.
///
/// Error-free transformations (FMA splits each product, two-sum carries the
/// running error) make the total accurate to a rounding of the exact value
/// rather than of the largest intermediate. Worth the extra arithmetic only
/// where a downstream consumer amplifies absolute errors, as the matrix
/// logarithm does by `1 / lambda_min`.
#[derive(Clone, Copy, Default)]
struct CompensatedSum {
    hi: f64,
    lo: f64,
}

impl CompensatedSum {
    /// Add `a * b * c`, capturing the rounding error of both products.
    fn add_triple(&mut self, a: f64, b: f64, c: f64) {
        let p1 = a * b;
        let e1 = a.mul_add(b, -p1);
        let p2 = p1 * c;
        let e2 = p1.mul_add(c, -p2);
        let s = self.hi + p2;
        let t = s - self.hi;
        let err = (self.hi - (s - t)) + (p2 - t);
        self.hi = s;
        self.lo += err + e2 + e1 * c;
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Orthonormal eigenbasis with eigenvalues in descending order.
///
/// Column `k` of `vectors` is the eigenvector for `values[k]`. Exact
/// eigenvalue ties keep their pre-sort order, so the decomposition is a
/// deterministic function of the input.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub vectors: Mat,
    pub values: Vec<f64>,
}

impl EigenPair {
    /// Reassemble `Q f(Lambda) Q'` with exactly symmetric output: each pair
    /// (i, j) is accumulated once and written to both triangles.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fvals: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let q = &self.vectors;
        SymMatrix::from_fn(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                acc += fvals[k] * q.get(i, k) * q.get(j, k);
            }
            acc
        })
        .expect("spectral reassembly of finite input is finite")
    }

    /// Like [`EigenPair::apply`], but each entry is accumulated with
    /// compensated arithmetic, so it carries a relative rounding error
    /// instead of an absolute one of order `n * eps * max |f|`. Use this
    /// when the result feeds the matrix logarithm, which amplifies absolute
    /// entry errors by `1 / lambda_min`.
    pub fn apply_compensated(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fvals: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let q = &self.vectors;
        SymMatrix::from_fn(n, |i, j| {
            let mut acc = CompensatedSum::default();
            for k in 0..n {
                acc.add_triple(fvals[k], q.get(i, k), q.get(j, k));
            }
            acc.value()
        })
        .expect("spectral reassembly of finite input is finite")
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;
/// Scaled stopping threshold: an off-diagonal is negligible once it is this
/// small relative to sqrt(a_pp * a_qq).
const JACOBI_SCALED_TOL: f64 = 1e-14;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps rotate every off-diagonal pair in turn until the largest
/// off-diagonal magnitude falls below `1e-12 * ||M||_F`, capped at 100
/// sweeps. Deterministic for identical input.
pub fn sym_eig(m: &SymMatrix) -> Result<EigenPair> {
    jacobi_eig(m, false)
}

/// Jacobi with the scaled stopping rule `|a_pq| <= tol * sqrt(a_pp a_qq)`.
///
/// On positive-definite input this delivers high relative accuracy for the
/// small eigenvalues as well (the absolute rule only bounds their error
/// relative to the matrix norm), which the matrix logarithm needs: the log
/// amplifies any absolute eigenvalue error by 1/lambda.
pub(crate) fn sym_eig_scaled(m: &SymMatrix) -> Result<EigenPair> {
    jacobi_eig(m, true)
}

fn jacobi_eig(m: &SymMatrix, scaled: bool) -> Result<EigenPair> {
    let n = m.dim();
    let mut a = m.data.clone();
    let mut q = Mat::identity(n);

    let norm_f = m.frob_norm();
    let tol = JACOBI_REL_TOL * norm_f;
    let negligible = |a: &[f64], p: usize, r: usize| -> bool {
        let scale = (a[p * n + p].abs() * a[r * n + r].abs()).sqrt();
        a[p * n + r].abs() <= JACOBI_SCALED_TOL * scale
    };

    let mut converged = norm_f == 0.0;
    if !converged {
        'sweeps: for _ in 0..JACOBI_MAX_SWEEPS {
            let done = if scaled {
                (0..n).all(|p| {
                    ((p + 1)..n).all(|r| a[p * n + r] == 0.0 || negligible(&a, p, r))
                })
            } else {
                let mut off = 0.0_f64;
                for p in 0..n {
                    for r in (p + 1)..n {
                        off = off.max(a[p * n + r].abs());
                    }
                }
                off <= tol
            };
            if done {
                converged = true;
                break 'sweeps;
            }
            for p in 0..n - 1 {
                for r in (p + 1)..n {
                    let apr = a[p * n + r];
                    if apr == 0.0 || (scaled && negligible(&a, p, r)) {
                        continue;
                    }
                    // Rotation angle from the stable half-angle formulas.
                    let theta = (a[r * n + r] - a[p * n + p]) / (2.0 * apr);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        1.0 / (theta - (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apr;

                    a[p * n + p] -= h;
                    a[r * n + r] += h;
                    a[p * n + r] = 0.0;
                    a[r * n + p] = 0.0;
                    for k in 0..n {
                        if k == p || k == r {
                            continue;
                        }
                        let akp = a[k * n + p];
                        let akr = a[k * n + r];
                        let new_p = akp - s * (akr + tau * akp);
                        let new_r = akr + s * (akp - tau * akr);
                        a[k * n + p] = new_p;
                        a[p * n + k] = new_p;
                        a[k * n + r] = new_r;
                        a[r * n + k] = new_r;
                    }
                    for k in 0..n {
                        let qkp = q.data[k * n + p];
                        let qkr = q.data[k * n + r];
                        q.data[k * n + p] = qkp - s * (qkr + tau * qkp);
                        q.data[k * n + r] = qkr + s * (qkp - tau * qkr);
                    }
                }
            }
        }
    }
    if !converged {
        return Err(CorrError::NumericalFailure(format!(
            "Jacobi eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps (n = {n})"
        )));
    }

    // Sort descending; stable sort keeps original index order on exact ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .expect("eigenvalues of finite input are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.data[k * n + dst] = q.data[k * n + src];
        }
    }
    Ok(EigenPair { vectors, values })
}

/// Eigenvalue floor below which a matrix is treated as not positive definite.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Matrix logarithm of a symmetric positive-definite matrix.
///
/// Rejects inputs with `lambda_min <= 1e-12` instead of clamping: a clamped
/// logarithm would silently break the round trip with [`mat_exp_sym`]. The
/// spectral estimate from the scaled Jacobi solver is then polished by
/// Newton steps on `exp(G) = C`, which removes the eigensolver's absolute
/// error floor: without the polish, an ill-conditioned input (condition
/// number 1e7 is routine for matrices whose log has entries of size 1.5)
/// loses seven digits in the small-eigenvalue directions.
pub fn mat_log_spd(c: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig_scaled(c)?;
    let lambda_min = *eig
        .values
        .last()
        .expect("eigendecomposition of non-empty matrix");
    if lambda_min <= EIGENVALUE_FLOOR {
        return Err(CorrError::NotPositiveDefinite { lambda_min });
    }
    let mut g = eig.apply(f64::ln);
    refine_log_spd(c, &mut g)?;
    Ok(g)
}

/// Newton polish iteration cap and the correction size below which another
/// step would only churn roundoff.
const LOG_NEWTON_MAX_STEPS: usize = 3;
const LOG_NEWTON_TOL: f64 = 1e-9;
/// Eigenvalues more than this far (in log units) below the largest one get
/// their residual entries recomputed in compensated arithmetic; ln(100), so
/// the cutoff is a factor 100 below the top of the spectrum.
const SMALL_MODE_LOG_GAP: f64 = 4.605170185988091;

/// Newton iteration for `exp(G) = C` starting from an approximate `G`.
///
/// With `G = W diag(mu) W'`, the first-order correction in the eigenbasis is
/// `(W' C W - diag(exp(mu)))_ij / phi(mu_i, mu_j)` where `phi` is the divided
/// difference of `exp`. Dividing by `phi` amplifies residual noise by up to
/// `1 / lambda_min`, so residual entries coupling two small modes are
/// accumulated in doubled precision; elsewhere plain products suffice. Stops
/// on stagnation, so a best-effort `G` is kept even when the floor is hit.
fn refine_log_spd(c: &SymMatrix, g: &mut SymMatrix) -> Result<()> {
    let n = c.dim();
    let c_mat = c.to_mat();
    let mut prev_step = f64::INFINITY;
    for _ in 0..LOG_NEWTON_MAX_STEPS {
        let eig = sym_eig(g)?;
        let w = &eig.vectors;
        let mu = &eig.values;

        // Residual in the eigenbasis: R = W' C W - diag(exp(mu)).
        let mut r = w.transpose().matmul(&c_mat.matmul(w));
        let small: Vec<bool> = mu.iter().map(|&m| m <= mu[0] - SMALL_MODE_LOG_GAP).collect();
        for i in 0..n {
            for j in i..n {
                if small[i] && small[j] {
                    let v = bilinear_compensated(c, w, i, j);
                    r.set(i, j, v);
                    r.set(j, i, v);
                }
            }
        }

        let mut delta = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { mu[i].exp() } else { 0.0 };
                delta.set(i, j, (r.get(i, j) - target) / exp_divided_diff(mu[i], mu[j]));
            }
        }

        // Correction back in the original basis, symmetrized.
        let back = w.matmul(&delta).matmul(&w.transpose());
        let step = back.max_abs();
        if !step.is_finite() || step >= prev_step {
            break;
        }
        for i in 0..n {
            for j in i..n {
                let v = g.get(i, j) + 0.5 * (back.get(i, j) + back.get(j, i));
                if !v.is_finite() {
                    return Ok(());
                }
                g.set(i, j, v);
            }
        }
        prev_step = step;
        if step <= LOG_NEWTON_TOL {
            break;
        }
    }
    Ok(())
}

/// Divided difference of `exp`: `(e^a - e^b) / (a - b)`, continuously
/// extended to `e^a` at `a == b` via the stable `exp(mean) * sinh(d) / d`
/// form, which avoids cancellation for nearby arguments.
fn exp_divided_diff(a: f64, b: f64) -> f64 {
    let d = 0.5 * (a - b);
    let m = 0.5 * (a + b);
    if d == 0.0 {
        m.exp()
    } else {
        m.exp() * (d.sinh() / d)
    }
}

/// `w_i' C w_j` via [`CompensatedSum`], accurate to a rounding of the true
/// value. Needed where the Newton step divides by a divided difference near
/// `lambda_min`.
fn bilinear_compensated(c: &SymMatrix, w: &Mat, ci: usize, cj: usize) -> f64 {
    let n = c.dim();
    let mut acc = CompensatedSum::default();
    for k in 0..n {
        let wk = w.get(k, ci);
        if wk == 0.0 {
            continue;
        }
        for l in 0..n {
            acc.add_triple(wk, c.get(k, l), w.get(l, cj));
        }
    }
    acc.value()
}

/// Matrix exponential of a symmetric matrix via the spectral map.
pub fn mat_exp_sym(g: &SymMatrix) -> Result<SymMatrix> {
    Ok(sym_eig(g)?.apply(f64::exp))
}

/// Strictly-lower-triangle entries, column-major: (2,1), (3,1), ..., (n,1),
/// (3,2), ... in 1-based notation.
pub fn vecl(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut v = Vec::with_capacity(n * (n - 1) / 2);
    for c in 0..n {
        for r in (c + 1)..n {
            v.push(m.get(r, c));
        }
    }
    v
}

/// Rebuild a symmetric matrix from `vecl` output and a diagonal.
pub fn unvecl(v: &[f64], diag: &[f64]) -> Result<SymMatrix> {
    let n = diag.len();
    if n == 0 {
        return Err(CorrError::DimensionError("diagonal must be non-empty".into()));
    }
    if v.len() != n * (n - 1) / 2 {
        return Err(CorrError::DimensionError(format!(
            "vecl length {} does not match dimension {} (expected {})",
            v.len(),
            n,
            n * (n - 1) / 2
        )));
    }
    let mut m = SymMatrix::zeros(n)?;
    for (i, &d) in diag.iter().enumerate() {
        if !d.is_finite() {
            return Err(CorrError::DomainError(format!("non-finite diagonal entry {i}")));
        }
        m.data[i * n + i] = d;
    }
    let mut k = 0;
    for c in 0..n {
        for r in (c + 1)..n {
            if !v[k].is_finite() {
                return Err(CorrError::DomainError(format!("non-finite vecl entry {k}")));
            }
            m.data[r * n + c] = v[k];
            m.data[c * n + r] = v[k];
            k += 1;
        }
    }
    Ok(m)
}

/// The (row, col) pairs of the `vecl` ordering for dimension `n`, with
/// row > col.
pub fn vecl_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for c in 0..n {
        for r in (c + 1)..n {
            pairs.push((r, c));
        }
    }
    pairs
}

/// Number of strictly-lower-triangle entries for dimension `n`.
pub fn vecl_len(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Recover the matrix dimension from a `vecl` length, if it is triangular.
pub fn dim_from_vecl_len(d: usize) -> Option<usize> {
    let n = (0.5 + (0.25 + 2.0 * d as f64).sqrt()).round() as usize;
    (n >= 2 && n * (n - 1) / 2 == d).then_some(n)
}

/// Lower-triangular Cholesky factor L with `L L' = M`.
pub fn cholesky(m: &SymMatrix) -> Result<Mat> {
    let n = m.dim();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    // Pivot failure means the matrix is not PD; report the
                    // actual smallest eigenvalue for the error message.
                    let lambda_min = sym_eig(m)
                        .map(|e| *e.values.last().expect("non-empty"))
                        .unwrap_or(f64::NAN);
                    return Err(CorrError::NotPositiveDefinite { lambda_min });
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Cheap positive-definiteness predicate: does the Cholesky factorization
/// complete with strictly positive pivots?
pub(crate) fn cholesky_is_pd(m: &SymMatrix) -> bool {
    let n = m.dim();
    let mut l = vec![0.0_f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    true
}

/// Symmetric permutation: `result[i][j] = M[perm[i]][perm[j]]`.
pub fn apply_permutation(m: &SymMatrix, perm: &[usize]) -> Result<SymMatrix> {
    let n = m.dim();
    if perm.len() != n {
        return Err(CorrError::DimensionError(format!(
            "permutation length {} does not match dimension {}",
            perm.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(CorrError::DimensionError(
                "permutation must visit each index 0..n exactly once".into(),
            ));
        }
        seen[p] = true;
    }
    SymMatrix::from_fn(n, |i, j| m.get(perm[i], perm[j]))
}

/// LU factorization with partial pivoting (crate-internal).
pub(crate) struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    det_sign: f64,
}

pub(crate) fn lu_factor(a: &Mat) -> Result<Lu> {
    assert_eq!(a.rows(), a.cols(), "LU requires a square matrix");
    let n = a.rows();
    let mut lu = a.data.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut det_sign = 1.0;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[k * n + k].abs();
        for i in (k + 1)..n {
            let v = lu[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return Err(CorrError::NumericalFailure("singular matrix in LU factorization".into()));
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
            det_sign = -det_sign;
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let factor = lu[i * n + k] / pivot;
            lu[i * n + k] = factor;
            for j in (k + 1)..n {
                lu[i * n + j] -= factor * lu[k * n + j];
            }
        }
    }
    Ok(Lu {
        n,
        lu,
        piv,
        det_sign,
    })
}

impl Lu {
    pub(crate) fn det(&self) -> f64 {
        let mut d = self.det_sign;
        for k in 0..self.n {
            d *= self.lu[k * self.n + k];
        }
        d
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "solve shape mismatch");
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut sum = x[i];
            for j in 0..i {
                sum -= self.lu[i * n + j] * x[j];
            }
            x[i] = sum;
        }
        for i in (0..n).rev() {
            let mut sum = x[i];
            for j in (i + 1)..n {
                sum -= self.lu[i * n + j] * x[j];
            }
            x[i] = sum / self.lu[i * n + i];
        }
        x
    }

    /// Solve for each column of `b`.
    pub(crate) fn solve_mat(&self, b: &Mat) -> Mat {
        assert_eq!(b.rows(), self.n, "solve_mat shape mismatch");
        let mut out = Mat::zeros(self.n, b.cols());
        for j in 0..b.cols() {
            let col = self.solve(&b.col(j));
            for i in 0..self.n {
                out.set(i, j, col[i]);
            }
        }
        out
    }
}

/// Orthonormalize the columns of a square matrix by Householder QR and fix
/// signs so the R diagonal is positive (crate-internal; applied to a
/// standard-normal matrix this yields a rotation-invariant orthogonal
/// matrix).
pub(crate) fn qr_orthonormal(a: &Mat) -> Result<Mat> {
    assert_eq!(a.rows(), a.cols(), "QR orthonormalization requires square input");
    let n = a.rows();
    let mut r = a.clone();
    // Householder vectors applied to an implicit identity to accumulate Q.
    let mut q = Mat::identity(n);
    for k in 0..n {
        let mut norm = 0.0;
        for i in k..n {
            norm += r.get(i, k) * r.get(i, k);
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(CorrError::NumericalFailure("rank-deficient matrix in QR".into()));
        }
        let alpha = if r.get(k, k) >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[k] = r.get(k, k) - alpha;
        for i in (k + 1)..n {
            v[i] = r.get(i, k);
        }
        let vtv: f64 = v[k..].iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        // Apply H = I - 2 v v' / (v'v) to R (left) and accumulate into Q.
        for j in k..n {
            let dot: f64 = (k..n).map(|i| v[i] * r.get(i, j)).sum();
            let scale = 2.0 * dot / vtv;
            for i in k..n {
                let val = r.get(i, j) - scale * v[i];
                r.set(i, j, val);
            }
        }
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i] * q.get(i, j)).sum();
            let scale = 2.0 * dot / vtv;
            for i in k..n {
                let val = q.get(i, j) - scale * v[i];
                q.set(i, j, val);
            }
        }
    }
    // q now holds the product of Householder reflectors, i.e. Q'. Fix signs
    // so the implied R has positive diagonal.
    let mut qt = q.transpose();
    for k in 0..n {
        if r.get(k, k) < 0.0 {
            for i in 0..n {
                let val = -qt.get(i, k);
                qt.set(i, k, val);
            }
        }
    }
    Ok(qt)
}
