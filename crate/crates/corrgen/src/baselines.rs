//! Classical random correlation matrix generators used for comparison.
//!
//! Five families: naive rejection from the unit hypercube, Gram matrices of
//! random unit vectors, the standard angles parameterization, spectrum-first
//! construction through Givens rotations, the partial-correlation vine, and
//! sample correlation matrices of Wishart draws. They provide independent
//! reference distributions for validating the log-parameterized samplers,
//! and several have known marginal laws that the verification harness tests
//! against.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::gamma_map::CorrelationMatrix;
use crate::linalg::{
    cholesky, cholesky_is_pd, lu_factor, qr_orthonormal, vecl_len, vecl_pairs, Mat, SymMatrix,
};
use crate::rng::Stream;

/// One accepted draw from the naive rejection sampler, with the number of
/// proposals consumed.
#[derive(Clone, Debug)]
pub struct NaiveDraw {
    pub corr: CorrelationMatrix,
    pub attempts: u64,
}

/// Naive rejection: propose entries iid uniform on [-1, 1] and keep the
/// first symmetric unit-diagonal proposal that is positive definite. The
/// acceptance probability collapses quickly with dimension (it is below
/// 1e-3 already at n = 6), so `max_tries` bounds the search.
pub fn naive_sample(n: usize, max_tries: u64, stream: &mut Stream) -> Result<NaiveDraw> {
    if n < 2 {
        return Err(CorrError::DimensionError(
            "correlation matrices need dimension at least 2".into(),
        ));
    }
    if max_tries == 0 {
        return Err(CorrError::DomainError("max_tries must be at least 1".into()));
    }
    let mut attempts = 0_u64;
    while attempts < max_tries {
        attempts += 1;
        let mut m = SymMatrix::identity(n)?;
        for (r, c) in vecl_pairs(n) {
            m.set(r, c, stream.gen_range(-1.0..1.0));
        }
        // Cheap Cholesky screen first; the full constructor then computes
        // and caches the spectrum of the survivors.
        if !cholesky_is_pd(&m) {
            continue;
        }
        match CorrelationMatrix::from_sym(m) {
            Ok(corr) => return Ok(NaiveDraw { corr, attempts }),
            Err(CorrError::NotPositiveDefinite { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(CorrError::ValidityStarvation { attempts })
}

/// Law for the columns of the Gram construction. Only the uniform law on
/// the unit sphere (normalized standard Gaussian) is shipped; the enum is
/// the extension point for other column laws.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnLaw {
    #[default]
    UniformSphere,
}

/// Number of consecutive rank-deficient Gram draws tolerated before giving
/// up (each has probability zero under the uniform sphere law).
const GRAM_RETRY_BUDGET: u64 = 64;

/// Gram construction: draw n unit vectors in R^n and return the matrix of
/// their inner products. Positive semidefinite by construction; draws with
/// smallest eigenvalue at or below 1e-10 are discarded and redrawn.
pub fn gram_sample(n: usize, law: ColumnLaw, stream: &mut Stream) -> Result<CorrelationMatrix> {
    if n < 2 {
        return Err(CorrError::DimensionError(
            "correlation matrices need dimension at least 2".into(),
        ));
    }
    let ColumnLaw::UniformSphere = law;
    let mut attempts = 0_u64;
    loop {
        attempts += 1;
        let mut cols = vec![vec![0.0_f64; n]; n];
        for col in cols.iter_mut() {
            loop {
                for v in col.iter_mut() {
                    *v = StandardNormal.sample(stream);
                }
                let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-100 {
                    for v in col.iter_mut() {
                        *v /= norm;
                    }
                    break;
                }
            }
        }
        let m = SymMatrix::from_fn(n, |i, j| {
            if i == j {
                1.0
            } else {
                cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum()
            }
        })?;
        match CorrelationMatrix::from_sym(m) {
            Ok(corr) => return Ok(corr),
            Err(CorrError::NotPositiveDefinite { lambda_min }) if lambda_min <= 1e-10 => {
                if attempts >= GRAM_RETRY_BUDGET {
                    return Err(CorrError::ValidityStarvation { attempts });
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Upper-triangular angle array for the standard angles parameterization:
/// one angle in [0, pi) per pair i < j, stored in the same column-major
/// pair order as vecl.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSet {
    n: usize,
    angles: Vec<f64>,
}

impl AngleSet {
    pub fn new(n: usize, angles: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(CorrError::DimensionError(
                "angle sets need dimension at least 2".into(),
            ));
        }
        if angles.len() != vecl_len(n) {
            return Err(CorrError::DimensionError(format!(
                "expected {} angles for dimension {n}, got {}",
                vecl_len(n),
                angles.len()
            )));
        }
        if angles
            .iter()
            .any(|&t| !t.is_finite() || !(0.0..std::f64::consts::PI).contains(&t))
        {
            return Err(CorrError::DomainError(
                "angles must lie in [0, pi)".into(),
            ));
        }
        Ok(AngleSet { n, angles })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Angle for the pair (i, j) with i < j.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < j && j < self.n);
        let pos = vecl_pairs(self.n)
            .into_iter()
            .position(|(r, c)| (c, r) == (i, j))
            .expect("pair in range");
        self.angles[pos]
    }
}

/// Law for drawing the angles of the standard angles parameterization.
/// `BetaFamily` draws cos(theta_ij) = 2B - 1 with B ~ Beta(a_i, a_i) and
/// a_i = alpha - (i - 1)/2 indexed by the (1-based) row i of the angle;
/// this makes every correlation coefficient Beta(alpha, alpha) on (-1, 1).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum AngleLaw {
    Uniform,
    BetaFamily { alpha: f64 },
}

/// Correlation matrix from an angle array: the columns of the implied
/// upper-triangular factor U are unit vectors built from products of sines
/// capped by one cosine, and C = U'U.
pub fn angles_to_corr(set: &AngleSet) -> Result<CorrelationMatrix> {
    let n = set.dim();
    // Column j of U: entries cos(t_1j), cos(t_2j) sin(t_1j), ...,
    // prod_k sin(t_kj) in the last occupied row.
    let mut u = vec![vec![0.0_f64; n]; n];
    u[0][0] = 1.0;
    for j in 1..n {
        let mut sin_prod = 1.0;
        for i in 0..j {
            let t = set.get(i, j);
            u[j][i] = t.cos() * sin_prod;
            sin_prod *= t.sin();
        }
        u[j][j] = sin_prod;
    }
    let m = SymMatrix::from_fn(n, |a, b| {
        if a == b {
            1.0
        } else {
            u[a].iter().zip(&u[b]).map(|(x, y)| x * y).sum()
        }
    })?;
    CorrelationMatrix::from_sym(m)
}

/// Standard angles parameterization sampler.
pub fn sap_sample(n: usize, law: AngleLaw, stream: &mut Stream) -> Result<CorrelationMatrix> {
    if n < 2 {
        return Err(CorrError::DimensionError(
            "correlation matrices need dimension at least 2".into(),
        ));
    }
    let angles = match law {
        AngleLaw::Uniform => vecl_pairs(n)
            .into_iter()
            .map(|_| stream.gen_range(0.0..std::f64::consts::PI))
            .collect(),
        AngleLaw::BetaFamily { alpha } => {
            if !(alpha >= n as f64 / 2.0) {
                return Err(CorrError::DomainError(format!(
                    "beta angle family needs alpha >= n/2 = {}, got {alpha}",
                    n as f64 / 2.0
                )));
            }
            let mut out = Vec::with_capacity(vecl_len(n));
            for (r, c) in vecl_pairs(n) {
                // Pair (i, j) = (c, r); the shape parameter follows the row
                // index i (0-based): a = alpha - i/2.
                let _ = r;
                let a = alpha - c as f64 / 2.0;
                let beta = Beta::new(a, a).map_err(|e| {
                    CorrError::DomainError(format!("invalid Beta({a}, {a}): {e}"))
                })?;
                let x: f64 = 2.0 * beta.sample(stream) - 1.0;
                out.push(x.clamp(-1.0, 1.0).acos().min(std::f64::consts::PI - f64::EPSILON));
            }
            out
        }
    };
    angles_to_corr(&AngleSet::new(n, angles)?)
}

/// Law for the target spectrum of the eigendecomposition sampler. Values
/// must be non-negative and sum to n (within 1e-8; they are then rescaled
/// exactly). `DirichletScaled` draws iid Exp(1) variates and normalizes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EigenvalueLaw {
    DirichletScaled,
    Fixed { values: Vec<f64> },
}

fn draw_spectrum(n: usize, law: &EigenvalueLaw, stream: &mut Stream) -> Result<Vec<f64>> {
    let mut values = match law {
        EigenvalueLaw::DirichletScaled => {
            let mut y: Vec<f64> = (0..n).map(|_| Exp1.sample(stream)).collect();
            let total: f64 = y.iter().sum();
            for v in y.iter_mut() {
                *v *= n as f64 / total;
            }
            y
        }
        EigenvalueLaw::Fixed { values } => {
            if values.len() != n {
                return Err(CorrError::DimensionError(format!(
                    "expected {n} eigenvalues, got {}",
                    values.len()
                )));
            }
            if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(CorrError::DomainError(
                    "eigenvalues must be finite and non-negative".into(),
                ));
            }
            let total: f64 = values.iter().sum();
            if (total - n as f64).abs() > 1e-8 {
                return Err(CorrError::DomainError(format!(
                    "eigenvalues must sum to {n}, got {total}"
                )));
            }
            values.iter().map(|&v| v * n as f64 / total).collect()
        }
    };
    // Deterministic exact trace after the guard above.
    let total: f64 = values.iter().sum();
    for v in values.iter_mut() {
        *v *= n as f64 / total;
    }
    Ok(values)
}

/// Spectrum-first sampler: start from A = Q L Q' with Haar-random Q and the
/// prescribed spectrum L, then walk the diagonal positions in order and
/// apply one Givens rotation per position, pairing it with a later position
/// whose diagonal entry lies on the opposite side of 1, choosing the angle
/// that sets the current diagonal entry to exactly 1. Rotations preserve
/// the spectrum, so the result is a correlation matrix with eigenvalues L.
pub fn eigen_sample(n: usize, law: &EigenvalueLaw, stream: &mut Stream) -> Result<CorrelationMatrix> {
    if n < 2 {
        return Err(CorrError::DimensionError(
            "correlation matrices need dimension at least 2".into(),
        ));
    }
    let spectrum = draw_spectrum(n, law, stream)?;

    let mut gauss = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gauss.set(i, j, StandardNormal.sample(stream));
        }
    }
    let q = qr_orthonormal(&gauss)?;
    // A = Q diag(spectrum) Q', dense working copy.
    let mut a = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for (k, &lam) in spectrum.iter().enumerate() {
                s += q.get(i, k) * lam * q.get(j, k);
            }
            a[i][j] = s;
            a[j][i] = s;
        }
    }

    for i in 0..(n - 1) {
        let di = a[i][i];
        if (di - 1.0).abs() <= 1e-12 {
            a[i][i] = 1.0;
            continue;
        }
        let j = ((i + 1)..n)
            .find(|&j| (di - 1.0) * (a[j][j] - 1.0) < 0.0)
            .ok_or_else(|| {
                CorrError::NumericalFailure(format!(
                    "no rotation partner for diagonal position {i} (value {di})"
                ))
            })?;
        // Solve (c-1) t^2 - 2 b t + (a-1) = 0 for t = tan(theta), where the
        // rotated (i, i) entry is (a - 2 b t + c t^2)/(1 + t^2). The root
        // product form avoids cancellation; the discriminant is at least
        // b^2 because (a-1)(c-1) < 0.
        let (aa, cc, bb) = (a[i][i], a[j][j], a[i][j]);
        let disc = (bb * bb - (aa - 1.0) * (cc - 1.0)).sqrt();
        let sign = if bb >= 0.0 { 1.0 } else { -1.0 };
        let t = (aa - 1.0) / (bb + sign * disc);
        let cos = 1.0 / (1.0 + t * t).sqrt();
        let sin = t * cos;
        // Apply G' A G with the rotation acting on rows/columns (i, j).
        for k in 0..n {
            let (ki, kj) = (a[k][i], a[k][j]);
            a[k][i] = cos * ki - sin * kj;
            a[k][j] = sin * ki + cos * kj;
        }
        for k in 0..n {
            let (ik, jk) = (a[i][k], a[j][k]);
            a[i][k] = cos * ik - sin * jk;
            a[j][k] = sin * ik + cos * jk;
        }
        let rotated = a[i][i];
        if (rotated - 1.0).abs() > 1e-9 {
            return Err(CorrError::NumericalFailure(format!(
                "rotation at position {i} left diagonal value {rotated}"
            )));
        }
        // The angle was chosen to land exactly on 1; remove the residual
        // roundoff so the unit diagonal is exact.
        a[i][i] = 1.0;
        for k in 0..n {
            let v = 0.5 * (a[k][j] + a[j][k]);
            a[k][j] = v;
            a[j][k] = v;
        }
    }
    let last = a[n - 1][n - 1];
    if (last - 1.0).abs() > 1e-9 {
        return Err(CorrError::NumericalFailure(format!(
            "trailing diagonal entry {last} is not 1"
        )));
    }
    let entries = SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { a[i][j] })?;
    let mut sorted = spectrum;
    sorted.sort_by(|x, y| y.partial_cmp(x).expect("finite"));
    CorrelationMatrix::from_parts(entries, sorted)
}

/// Partial correlations of the vine decomposition, in the same column-major
/// pair order as vecl: the entry for (i, j) with i < j is the correlation
/// of i and j given all indices strictly between them (the plain
/// correlation when j = i + 1).
#[derive(Clone, Debug, PartialEq)]
pub struct PartialCorrSet {
    n: usize,
    values: Vec<f64>,
    alphas: Option<Vec<f64>>,
}

impl PartialCorrSet {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(CorrError::DimensionError(
                "partial correlation sets need dimension at least 2".into(),
            ));
        }
        if values.len() != vecl_len(n) {
            return Err(CorrError::DimensionError(format!(
                "expected {} partials for dimension {n}, got {}",
                vecl_len(n),
                values.len()
            )));
        }
        if values.iter().any(|&v| !v.is_finite() || v.abs() >= 1.0) {
            return Err(CorrError::DomainError(
                "partial correlations must lie strictly inside (-1, 1)".into(),
            ));
        }
        Ok(PartialCorrSet { n, values, alphas: None })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Shape parameters used to draw each partial, when the set came from
    /// `pac_sample_partials`.
    pub fn alphas(&self) -> Option<&[f64]> {
        self.alphas.as_deref()
    }

    /// `prod (1 - rho^2)` over all pairs, which equals det C of the
    /// reconstructed matrix.
    pub fn det_product(&self) -> f64 {
        self.values.iter().map(|&v| 1.0 - v * v).product()
    }
}

/// Shape parameters of the partial-correlation vine: for the pair (i, j)
/// with i < j (1-based), alpha_ij = alpha + (1 - (j - i))/2, in vecl pair
/// order. Requires alpha > (n - 2)/2 so every shape stays positive.
pub fn pac_alphas(n: usize, alpha: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(CorrError::DimensionError(
            "partial correlation sets need dimension at least 2".into(),
        ));
    }
    if !(alpha > (n as f64 - 2.0) / 2.0) {
        return Err(CorrError::DomainError(format!(
            "vine sampler needs alpha > (n-2)/2 = {}, got {alpha}",
            (n as f64 - 2.0) / 2.0
        )));
    }
    Ok(vecl_pairs(n)
        .into_iter()
        .map(|(r, c)| {
            let lag = (r - c) as f64;
            alpha + (1.0 - lag) / 2.0
        })
        .collect())
}

/// Draw the partial correlations of the vine: rho_ij = 2B - 1 with
/// B ~ Beta(alpha_ij, alpha_ij).
pub fn pac_sample_partials(n: usize, alpha: f64, stream: &mut Stream) -> Result<PartialCorrSet> {
    let alphas = pac_alphas(n, alpha)?;
    let mut values = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        let beta = Beta::new(a, a)
            .map_err(|e| CorrError::DomainError(format!("invalid Beta({a}, {a}): {e}")))?;
        loop {
            let v = 2.0 * beta.sample(stream) - 1.0;
            if v.abs() < 1.0 {
                values.push(v);
                break;
            }
        }
    }
    let mut set = PartialCorrSet::new(n, values)?;
    set.alphas = Some(alphas);
    Ok(set)
}

/// Partial-correlation vine sampler: marginally every entry of the result
/// is Beta(alpha, alpha) on (-1, 1).
pub fn pac_sample(n: usize, alpha: f64, stream: &mut Stream) -> Result<CorrelationMatrix> {
    partials_to_corr(&pac_sample_partials(n, alpha, stream)?)
}

/// Conditional moments of the pair (i, j) given the indices strictly
/// between them, from the already-known shorter-lag correlations:
/// (d_ij, v_i, v_j) with d the cross term and v the conditional variances.
fn vine_terms(c: &[Vec<f64>], i: usize, j: usize) -> Result<(f64, f64, f64)> {
    let mid: Vec<usize> = ((i + 1)..j).collect();
    if mid.is_empty() {
        return Ok((0.0, 1.0, 1.0));
    }
    let m = mid.len();
    let mut sub = Mat::zeros(m, m);
    for (a, &p) in mid.iter().enumerate() {
        for (b, &q) in mid.iter().enumerate() {
            sub.set(a, b, c[p][q]);
        }
    }
    let lu = lu_factor(&sub)?;
    let u: Vec<f64> = mid.iter().map(|&p| c[i][p]).collect();
    let w: Vec<f64> = mid.iter().map(|&p| c[j][p]).collect();
    let a = lu.solve(&u);
    let b = lu.solve(&w);
    let d: f64 = u.iter().zip(&b).map(|(x, y)| x * y).sum();
    let vi = 1.0 - u.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>();
    let vj = 1.0 - w.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>();
    if vi <= 0.0 || vj <= 0.0 {
        return Err(CorrError::NumericalFailure(format!(
            "non-positive conditional variance for pair ({i}, {j})"
        )));
    }
    Ok((d, vi, vj))
}

/// Reconstruct the correlation matrix from vine partials, filling pairs in
/// increasing lag order so every conditional moment only needs
/// shorter-lag entries.
pub fn partials_to_corr(p: &PartialCorrSet) -> Result<CorrelationMatrix> {
    let n = p.dim();
    let mut c = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        c[i][i] = 1.0;
    }
    let pairs = vecl_pairs(n);
    for lag in 1..n {
        for (pos, &(r, col)) in pairs.iter().enumerate() {
            let (i, j) = (col, r);
            if j - i != lag {
                continue;
            }
            let (d, vi, vj) = vine_terms(&c, i, j)?;
            let value = d + p.values()[pos] * (vi * vj).sqrt();
            c[i][j] = value;
            c[j][i] = value;
        }
    }
    let m = SymMatrix::from_fn(n, |i, j| c[i][j])?;
    CorrelationMatrix::from_sym(m)
}

/// Invert the vine: recover the partial correlations of a correlation
/// matrix. Inverse of `partials_to_corr`.
pub fn corr_to_partials(corr: &CorrelationMatrix) -> Result<PartialCorrSet> {
    let n = corr.dim();
    let c: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| corr.get(i, j)).collect())
        .collect();
    let mut values = Vec::with_capacity(vecl_len(n));
    for (r, col) in vecl_pairs(n) {
        let (i, j) = (col, r);
        let (d, vi, vj) = vine_terms(&c, i, j)?;
        values.push((c[i][j] - d) / (vi * vj).sqrt());
    }
    PartialCorrSet::new(n, values)
}

/// Scale matrix and degrees of freedom for the Wishart construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawWishartConfig", into = "RawWishartConfig")]
pub struct WishartConfig {
    sigma: SymMatrix,
    t: usize,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawWishartConfig {
    sigma: Vec<Vec<f64>>,
    t: usize,
}

impl TryFrom<RawWishartConfig> for WishartConfig {
    type Error = CorrError;
    fn try_from(raw: RawWishartConfig) -> Result<Self> {
        WishartConfig::new(SymMatrix::from_rows(&raw.sigma)?, raw.t)
    }
}

impl From<WishartConfig> for RawWishartConfig {
    fn from(cfg: WishartConfig) -> Self {
        let n = cfg.sigma.dim();
        RawWishartConfig {
            sigma: (0..n)
                .map(|i| (0..n).map(|j| cfg.sigma.get(i, j)).collect())
                .collect(),
            t: cfg.t,
        }
    }
}

impl WishartConfig {
    /// Validate: the scale must be symmetric positive definite and the
    /// sample size T at least the dimension (otherwise the scatter matrix
    /// is singular with probability one).
    pub fn new(sigma: SymMatrix, t: usize) -> Result<Self> {
        let n = sigma.dim();
        if n < 2 {
            return Err(CorrError::DimensionError(
                "scale matrix needs dimension at least 2".into(),
            ));
        }
        if t < n {
            return Err(CorrError::DomainError(format!(
                "sample size {t} is below the dimension {n}"
            )));
        }
        cholesky(&sigma)?;
        Ok(WishartConfig { sigma, t })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

/// Sample correlation matrix of T iid N(0, Sigma) observations: the scatter
/// matrix is rescaled to unit diagonal. A singular scatter (probability
/// zero when T >= n) triggers one resample, then a hard failure.
pub fn wishart_corr_sample(cfg: &WishartConfig, stream: &mut Stream) -> Result<CorrelationMatrix> {
    let n = cfg.dim();
    let l = cholesky(cfg.sigma())?;
    for attempt in 0..2 {
        let mut scatter = vec![0.0_f64; n * n];
        let mut z = vec![0.0_f64; n];
        let mut x = vec![0.0_f64; n];
        for _ in 0..cfg.t() {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(stream);
            }
            for i in 0..n {
                let mut s = 0.0;
                for k in 0..=i {
                    s += l.get(i, k) * z[k];
                }
                x[i] = s;
            }
            for i in 0..n {
                for j in i..n {
                    scatter[i * n + j] += x[i] * x[j];
                }
            }
        }
        let diag: Vec<f64> = (0..n).map(|i| scatter[i * n + i].sqrt()).collect();
        if diag.iter().any(|&d| !(d > 0.0)) {
            continue;
        }
        let m = SymMatrix::from_fn(n, |i, j| {
            if i == j {
                1.0
            } else {
                scatter[i * n + j] / (diag[i] * diag[j])
            }
        })?;
        match CorrelationMatrix::from_sym(m) {
            Ok(corr) => return Ok(corr),
            Err(CorrError::NotPositiveDefinite { .. }) if attempt == 0 => continue,
            Err(e) => return Err(e),
        }
    }
    Err(CorrError::NumericalFailure(
        "scatter matrix singular twice in a row; is T >= n?".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;
    use crate::rng;

    #[test]
    fn naive_n2_accepts_first_proposal() {
        let mut stream = rng::master(5);
        for _ in 0..20 {
            let draw = naive_sample(2, 10, &mut stream).unwrap();
            assert_eq!(draw.attempts, 1);
            assert!(draw.corr.get(0, 1).abs() < 1.0);
        }
    }

    #[test]
    fn naive_counts_attempts_and_starves() {
        let mut stream = rng::master(7);
        let draw = naive_sample(5, 100_000, &mut stream).unwrap();
        assert!(draw.attempts >= 1);
        assert!(draw.corr.lambda_min() > 0.0);
        // n=6 acceptance is below 1e-3, so 2 tries nearly always starve.
        let mut starved = 0;
        for seed in 0..20 {
            if matches!(
                naive_sample(6, 2, &mut rng::master(seed)),
                Err(CorrError::ValidityStarvation { attempts: 2 })
            ) {
                starved += 1;
            }
        }
        assert!(starved >= 19);
    }

    #[test]
    fn gram_outputs_are_valid_and_reproducible() {
        let a = gram_sample(4, ColumnLaw::UniformSphere, &mut rng::master(11)).unwrap();
        let b = gram_sample(4, ColumnLaw::UniformSphere, &mut rng::master(11)).unwrap();
        assert_eq!(a.mat().max_abs_diff(b.mat()), 0.0);
        assert!(a.lambda_min() > 0.0);
        for i in 0..4 {
            assert_eq!(a.get(i, i), 1.0);
        }
    }

    #[test]
    fn angles_at_right_angles_give_identity() {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let set = AngleSet::new(3, vec![half_pi; 3]).unwrap();
        let c = angles_to_corr(&set).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                // cos(pi/2) is only zero to machine precision.
                assert!((c.get(i, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn angles_two_dimensional_recovers_cosine() {
        let set = AngleSet::new(2, vec![1.1]).unwrap();
        let c = angles_to_corr(&set).unwrap();
        assert!((c.get(0, 1) - 1.1_f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn sap_columns_have_unit_norm_structure() {
        // The Gram construction of the angle factor must keep entries in
        // [-1, 1] and stay positive definite for random angle draws.
        let mut stream = rng::master(13);
        for _ in 0..25 {
            let c = sap_sample(5, AngleLaw::Uniform, &mut stream).unwrap();
            assert!(c.lambda_min() > 0.0);
            for (r, col) in vecl_pairs(5) {
                assert!(c.get(r, col).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn sap_rejects_small_alpha() {
        assert!(matches!(
            sap_sample(4, AngleLaw::BetaFamily { alpha: 1.9 }, &mut rng::master(1)),
            Err(CorrError::DomainError(_))
        ));
        assert!(sap_sample(4, AngleLaw::BetaFamily { alpha: 2.0 }, &mut rng::master(1)).is_ok());
    }

    #[test]
    fn eigen_sample_preserves_fixed_spectrum() {
        let law = EigenvalueLaw::Fixed {
            values: vec![1.5, 1.0, 0.5],
        };
        let mut stream = rng::master(17);
        for _ in 0..50 {
            let c = eigen_sample(3, &law, &mut stream).unwrap();
            for i in 0..3 {
                assert_eq!(c.get(i, i), 1.0);
            }
            // Independent decomposition agrees with the prescribed values.
            let eig = sym_eig(c.mat()).unwrap();
            for (got, want) in eig.values.iter().zip(&[1.5, 1.0, 0.5]) {
                assert!((got - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eigen_sample_identity_spectrum_is_identity() {
        let law = EigenvalueLaw::Fixed {
            values: vec![1.0; 4],
        };
        let c = eigen_sample(4, &law, &mut rng::master(19)).unwrap();
        assert!(c.mat().max_abs_diff(&SymMatrix::identity(4).unwrap()) < 1e-9);
    }

    #[test]
    fn eigen_sample_dirichlet_law_keeps_trace() {
        let mut stream = rng::master(23);
        for _ in 0..20 {
            let c = eigen_sample(5, &EigenvalueLaw::DirichletScaled, &mut stream).unwrap();
            let trace: f64 = c.eigenvalues().iter().sum();
            assert!((trace - 5.0).abs() < 1e-9);
            assert!(c.lambda_min() > 0.0);
        }
    }

    #[test]
    fn eigen_law_validation() {
        assert!(matches!(
            eigen_sample(
                3,
                &EigenvalueLaw::Fixed { values: vec![2.0, 0.5, 0.6] },
                &mut rng::master(1)
            ),
            Err(CorrError::DomainError(_))
        ));
        assert!(matches!(
            eigen_sample(
                3,
                &EigenvalueLaw::Fixed { values: vec![2.0, 1.5, -0.5] },
                &mut rng::master(1)
            ),
            Err(CorrError::DomainError(_))
        ));
    }

    #[test]
    fn pac_alphas_follow_lag() {
        let alphas = pac_alphas(4, 2.0).unwrap();
        // vecl pair order: (1,0),(2,0),(3,0),(2,1),(3,1),(3,2) with lags
        // 1, 2, 3, 1, 2, 1.
        let expect = [2.0, 1.5, 1.0, 2.0, 1.5, 2.0];
        for (a, e) in alphas.iter().zip(&expect) {
            assert!((a - e).abs() < 1e-15);
        }
        assert!(pac_alphas(4, 1.0).is_err());
    }

    #[test]
    fn vine_zero_partials_give_identity() {
        let p = PartialCorrSet::new(4, vec![0.0; 6]).unwrap();
        let c = partials_to_corr(&p).unwrap();
        assert!(c.mat().max_abs_diff(&SymMatrix::identity(4).unwrap()) < 1e-14);
    }

    #[test]
    fn vine_three_dimensional_golden() {
        // partials (rho_12, rho_23, rho_13|2) = (0.5, 0.5, 0):
        // C_13 = 0.25 and det C = 0.5625.
        let pairs = vecl_pairs(3);
        assert_eq!(pairs, vec![(1, 0), (2, 0), (2, 1)]);
        let p = PartialCorrSet::new(3, vec![0.5, 0.0, 0.5]).unwrap();
        let c = partials_to_corr(&p).unwrap();
        assert!((c.get(0, 2) - 0.25).abs() < 1e-12);
        let det: f64 = c.eigenvalues().iter().product();
        assert!((det - 0.5625).abs() < 1e-10);
        assert!((p.det_product() - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn vine_round_trip_and_determinant_identity() {
        let mut stream = rng::master(29);
        for n in [2_usize, 3, 5, 8] {
            for _ in 0..10 {
                let p = pac_sample_partials(n, n as f64 / 2.0 + 0.5, &mut stream).unwrap();
                let c = partials_to_corr(&p).unwrap();
                let back = corr_to_partials(&c).unwrap();
                for (x, y) in p.values().iter().zip(back.values()) {
                    assert!((x - y).abs() < 1e-10);
                }
                let chol = c.cholesky_factor().unwrap();
                let det: f64 = (0..n).map(|i| chol.get(i, i).powi(2)).product();
                let rel = (det - p.det_product()).abs() / p.det_product();
                assert!(rel < 1e-10, "n={n}: det {det} vs {}", p.det_product());
            }
        }
    }

    #[test]
    fn pac_sample_outputs_are_valid() {
        let mut stream = rng::master(31);
        for _ in 0..20 {
            let c = pac_sample(5, 2.5, &mut stream).unwrap();
            assert!(c.lambda_min() > 0.0);
        }
        assert!(matches!(
            pac_sample(5, 1.5, &mut rng::master(1)),
            Err(CorrError::DomainError(_))
        ));
    }

    #[test]
    fn wishart_config_validation() {
        assert!(WishartConfig::new(SymMatrix::identity(3).unwrap(), 2).is_err());
        let not_pd = SymMatrix::equicorrelation(3, -0.9).unwrap();
        assert!(WishartConfig::new(not_pd, 10).is_err());
        assert!(WishartConfig::new(SymMatrix::identity(3).unwrap(), 3).is_ok());
    }

    #[test]
    fn wishart_large_t_concentrates_at_scale_correlation() {
        let sigma = SymMatrix::equicorrelation(3, 0.6).unwrap();
        let cfg = WishartConfig::new(sigma, 20_000).unwrap();
        let c = wishart_corr_sample(&cfg, &mut rng::master(37)).unwrap();
        for (r, col) in vecl_pairs(3) {
            assert!((c.get(r, col) - 0.6).abs() < 0.03);
        }
    }

    #[test]
    fn wishart_scale_with_non_unit_diagonal_is_normalized() {
        // Covariance scale with distinct variances still yields a unit
        // diagonal correlation matrix.
        let sigma = SymMatrix::from_rows(&[
            vec![4.0, 0.8, 0.0],
            vec![0.8, 1.0, -0.3],
            vec![0.0, -0.3, 9.0],
        ])
        .unwrap();
        let cfg = WishartConfig::new(sigma, 50).unwrap();
        let c = wishart_corr_sample(&cfg, &mut rng::master(41)).unwrap();
        for i in 0..3 {
            assert_eq!(c.get(i, i), 1.0);
        }
        assert!(c.lambda_min() > 0.0);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = WishartConfig::new(SymMatrix::equicorrelation(2, 0.4).unwrap(), 7).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: WishartConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.t(), 7);
        assert!(back.sigma().max_abs_diff(cfg.sigma()) == 0.0);
        let bad: std::result::Result<WishartConfig, _> =
            serde_json::from_str("{\"sigma\":[[1.0,0.2],[0.2,1.0]],\"t\":1}");
        assert!(bad.is_err());
    }
}
