//! Block correlation matrices through the canonical representation G = QDQ'.
//!
//! When the log-correlation matrix G is constant within and between blocks
//! (value `gamma_kk` inside block k, `gamma_kl` between blocks k and l, and
//! a per-block diagonal value `y_k`), it diagonalizes against a fixed
//! orthonormal basis Q that does not depend on the parameter values: block
//! indicator vectors followed by per-block Helmert completions. In that
//! basis G becomes a K-by-K corner block `A + diag(y)` plus scalar entries
//! `y_k - gamma_kk`, so the unit-diagonal condition reduces to a K-dimensional
//! fixed point and the full matrix exponential is never evaluated at size n.
//!
//! Mixtures of independently drawn, randomly permuted block matrices give
//! large correlation matrices whose number of distinct coefficients grows
//! with the component count while positive definiteness is preserved by
//! convexity.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::gamma_map::CorrelationMatrix;
use crate::linalg::{apply_permutation, sym_eig, Mat, SymMatrix};
use crate::rng::Stream;

/// Block pattern: sizes of the K blocks and the symmetric K-by-K parameter
/// matrix. `gammas[k][k]` is the within-block value (forced to 0 for
/// singleton blocks, which have no within-block pairs); `gammas[k][l]` is
/// the between-block value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockSpec", into = "RawBlockSpec")]
pub struct BlockSpec {
    sizes: Vec<usize>,
    gammas: Vec<Vec<f64>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawBlockSpec {
    sizes: Vec<usize>,
    gammas: Vec<Vec<f64>>,
}

impl TryFrom<RawBlockSpec> for BlockSpec {
    type Error = CorrError;
    fn try_from(raw: RawBlockSpec) -> Result<Self> {
        BlockSpec::new(raw.sizes, raw.gammas)
    }
}

impl From<BlockSpec> for RawBlockSpec {
    fn from(spec: BlockSpec) -> Self {
        RawBlockSpec {
            sizes: spec.sizes,
            gammas: spec.gammas,
        }
    }
}

impl BlockSpec {
    /// Validate and normalize: `gammas` must be K-by-K and symmetric within
    /// 1e-12 (it is symmetrized exactly); singleton diagonal entries are
    /// zeroed; the total dimension must be at least 2.
    pub fn new(sizes: Vec<usize>, gammas: Vec<Vec<f64>>) -> Result<Self> {
        let k = sizes.len();
        if k == 0 {
            return Err(CorrError::DimensionError("at least one block required".into()));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(CorrError::DimensionError("block sizes must be positive".into()));
        }
        let n: usize = sizes.iter().sum();
        if n < 2 {
            return Err(CorrError::DimensionError(
                "total dimension must be at least 2".into(),
            ));
        }
        if gammas.len() != k || gammas.iter().any(|row| row.len() != k) {
            return Err(CorrError::DimensionError(format!(
                "gamma matrix must be {k}x{k} to match the block count"
            )));
        }
        let mut g = gammas;
        for a in 0..k {
            for b in 0..k {
                if !g[a][b].is_finite() {
                    return Err(CorrError::DomainError(format!(
                        "non-finite gamma at ({a}, {b})"
                    )));
                }
            }
        }
        for a in 0..k {
            for b in (a + 1)..k {
                if (g[a][b] - g[b][a]).abs() > 1e-12 {
                    return Err(CorrError::DomainError(format!(
                        "gamma matrix is not symmetric at ({a}, {b}): {} vs {}",
                        g[a][b], g[b][a]
                    )));
                }
                let v = 0.5 * (g[a][b] + g[b][a]);
                g[a][b] = v;
                g[b][a] = v;
            }
        }
        for a in 0..k {
            if sizes[a] == 1 {
                g[a][a] = 0.0;
            }
        }
        Ok(BlockSpec { sizes, gammas: g })
    }

    /// Number of blocks K.
    pub fn block_count(&self) -> usize {
        self.sizes.len()
    }

    /// Total matrix dimension n.
    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn gamma(&self, k: usize, l: usize) -> f64 {
        self.gammas[k][l]
    }

    /// Block index of each coordinate, in order.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for (k, &s) in self.sizes.iter().enumerate() {
            out.extend(std::iter::repeat(k).take(s));
        }
        out
    }

    /// The K-by-K corner matrix A: `gamma_kk (n_k - 1)` on the diagonal,
    /// `gamma_kl sqrt(n_k n_l)` off it.
    pub fn corner_a(&self) -> SymMatrix {
        let k = self.block_count();
        SymMatrix::from_fn(k, |a, b| {
            if a == b {
                self.gammas[a][a] * (self.sizes[a] as f64 - 1.0)
            } else {
                self.gammas[a][b] * ((self.sizes[a] * self.sizes[b]) as f64).sqrt()
            }
        })
        .expect("finite by construction")
    }

    /// Dense log-correlation matrix G[y] for this pattern: diagonal `y_k`,
    /// within-block off-diagonal `gamma_kk`, between-block `gamma_kl`.
    pub fn dense_g(&self, y: &[f64]) -> Result<SymMatrix> {
        if y.len() != self.block_count() {
            return Err(CorrError::DimensionError(format!(
                "y length {} does not match block count {}",
                y.len(),
                self.block_count()
            )));
        }
        let blocks = self.block_of();
        SymMatrix::from_fn(self.dim(), |i, j| {
            let (bi, bj) = (blocks[i], blocks[j]);
            if i == j {
                y[bi]
            } else {
                self.gammas[bi][bj]
            }
        })
    }
}

/// Canonical orthonormal basis for the block pattern: the first K columns
/// are normalized block indicators, followed by each block's Helmert
/// completion (grouped per block, in block order). Independent of the
/// gamma values.
pub fn canonical_basis(spec: &BlockSpec) -> Mat {
    let n = spec.dim();
    let k = spec.block_count();
    let mut q = Mat::zeros(n, n);
    let mut offsets = Vec::with_capacity(k);
    let mut acc = 0;
    for &s in spec.sizes() {
        offsets.push(acc);
        acc += s;
    }
    for (b, (&s, &off)) in spec.sizes().iter().zip(&offsets).enumerate() {
        let scale = 1.0 / (s as f64).sqrt();
        for i in 0..s {
            q.set(off + i, b, scale);
        }
    }
    let mut col = k;
    for (&s, &off) in spec.sizes().iter().zip(&offsets) {
        for m in 1..s {
            // Helmert vector: m leading entries 1/sqrt(m(m+1)), then
            // -m/sqrt(m(m+1)), zeros after; orthogonal to the indicator.
            let denom = ((m * (m + 1)) as f64).sqrt();
            for i in 0..m {
                q.set(off + i, col, 1.0 / denom);
            }
            q.set(off + m, col, -(m as f64) / denom);
            col += 1;
        }
    }
    debug_assert_eq!(col, n);
    q
}

/// The n-by-n matrix D with corner `A + diag(y)` and per-block scalar tail
/// `y_k - gamma_kk` (multiplicity n_k - 1), such that `G[y] = Q D Q'` for
/// the canonical basis.
pub fn build_d(spec: &BlockSpec, y: &[f64]) -> Result<SymMatrix> {
    let k = spec.block_count();
    if y.len() != k {
        return Err(CorrError::DimensionError(format!(
            "y length {} does not match block count {}",
            y.len(),
            k
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(CorrError::DomainError("y must be finite".into()));
    }
    let n = spec.dim();
    let a = spec.corner_a();
    let mut d = SymMatrix::zeros(n)?;
    for i in 0..k {
        for j in i..k {
            let v = a.get(i, j) + if i == j { y[i] } else { 0.0 };
            d.set(i, j, v);
        }
    }
    let mut idx = k;
    for (b, &s) in spec.sizes().iter().enumerate() {
        for _ in 1..s {
            d.set(idx, idx, y[b] - spec.gamma(b, b));
            idx += 1;
        }
    }
    Ok(d)
}

/// Solution of the block unit-diagonal fixed point.
#[derive(Clone, Debug)]
pub struct BlockSolution {
    /// The per-block diagonal values y* (all <= 0 up to roundoff).
    pub y: Vec<f64>,
    /// The corner matrix A of the spec that was solved.
    pub a: SymMatrix,
    /// Fixed-point iterations performed.
    pub iterations: usize,
    /// Final max_k |q_k(y) - 1|.
    pub residual: f64,
}

/// Default tolerance on `max_k |q_k(y) - 1|`.
pub const BLOCK_SOLVE_TOL: f64 = 1e-12;
/// Default iteration cap for the block fixed point.
pub const BLOCK_SOLVE_MAX_ITER: usize = 1000;
/// Residual above which a solution is considered unsolved by consumers.
pub const BLOCK_SOLVED_RESIDUAL: f64 = 1e-8;

/// Diagonal values of block k of `exp(G[y])`: `q_k(y) = (1/n_k) M_kk +
/// ((n_k - 1)/n_k) e^{y_k - gamma_kk}` with `M = exp(A + diag(y))`.
fn block_diagonals(spec: &BlockSpec, y: &[f64]) -> Result<(Vec<f64>, SymMatrix)> {
    let k = spec.block_count();
    let mut corner = spec.corner_a();
    for i in 0..k {
        corner.set(i, i, corner.get(i, i) + y[i]);
    }
    let m = sym_eig(&corner)?.apply(f64::exp);
    let mut q = Vec::with_capacity(k);
    for i in 0..k {
        let nk = spec.sizes()[i] as f64;
        let tail = (nk - 1.0) / nk * (y[i] - spec.gamma(i, i)).exp();
        q.push(m.get(i, i) / nk + tail);
    }
    Ok((q, m))
}

/// Solve the unit-diagonal fixed point from the default start y = 0.
pub fn solve_block_diagonal(spec: &BlockSpec, tol: f64, max_iter: usize) -> Result<BlockSolution> {
    solve_block_diagonal_from(spec, &vec![0.0; spec.block_count()], tol, max_iter)
}

/// Solve from an explicit starting point (the fixed point is unique, so any
/// start converges to the same y*).
///
/// Iteration: `y_k <- y_k + log n_k - log(n_k q_k(y))`, i.e. `y_k -= log
/// q_k(y)`; convergence when `max_k |q_k(y) - 1| <= tol`.
pub fn solve_block_diagonal_from(
    spec: &BlockSpec,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<BlockSolution> {
    if !(tol > 0.0) {
        return Err(CorrError::DomainError(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(CorrError::DomainError("max_iter must be at least 1".into()));
    }
    let k = spec.block_count();
    if start.len() != k {
        return Err(CorrError::DimensionError(format!(
            "start length {} does not match block count {}",
            start.len(),
            k
        )));
    }
    let mut y = start.to_vec();
    let mut residual = f64::INFINITY;
    for iterations in 0..=max_iter {
        let (q, _) = block_diagonals(spec, &y)?;
        residual = q.iter().fold(0.0_f64, |m, &v| m.max((v - 1.0).abs()));
        if residual <= tol {
            return Ok(BlockSolution {
                y,
                a: spec.corner_a(),
                iterations,
                residual,
            });
        }
        if iterations == max_iter {
            break;
        }
        for (yk, &qk) in y.iter_mut().zip(&q) {
            if !(qk > 0.0) {
                return Err(CorrError::NumericalFailure(format!(
                    "block diagonal value {qk} is not positive"
                )));
            }
            *yk -= qk.ln();
        }
    }
    Err(CorrError::IterationLimit {
        iterations: max_iter,
        residual,
    })
}

/// Closed-form block correlation matrix from a solved fixed point.
///
/// With `M = exp(A + diag(y*))`: within block k the off-diagonal value is
/// `(M_kk - e^{y_k - gamma_kk}) / n_k`, between blocks k and l it is
/// `M_kl / sqrt(n_k n_l)`, and the diagonal is exactly 1. Each distinct
/// coefficient is computed once, so equal entries are bitwise equal. No
/// n-by-n matrix exponential is evaluated; the spectrum of the result is
/// `exp` of the spectrum of D, which is available from the K-by-K corner
/// plus the scalar tail.
pub fn block_corr(spec: &BlockSpec, sol: &BlockSolution) -> Result<CorrelationMatrix> {
    let k = spec.block_count();
    if sol.y.len() != k || sol.a.dim() != k {
        return Err(CorrError::DimensionError(format!(
            "solution shape (y: {}, A: {}) does not match block count {}",
            sol.y.len(),
            sol.a.dim(),
            k
        )));
    }
    if !(sol.residual <= BLOCK_SOLVED_RESIDUAL) {
        return Err(CorrError::InvalidState(format!(
            "block solution residual {} exceeds {BLOCK_SOLVED_RESIDUAL}; solve before reconstructing",
            sol.residual
        )));
    }
    let mut corner = spec.corner_a();
    for i in 0..k {
        corner.set(i, i, corner.get(i, i) + sol.y[i]);
    }
    let corner_eig = sym_eig(&corner)?;
    let m = corner_eig.apply(f64::exp);

    // One value per unordered block pair.
    let mut within = vec![0.0; k];
    for b in 0..k {
        let nk = spec.sizes()[b] as f64;
        within[b] = (m.get(b, b) - (sol.y[b] - spec.gamma(b, b)).exp()) / nk;
    }
    let mut across = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let v = m.get(a, b) / ((spec.sizes()[a] * spec.sizes()[b]) as f64).sqrt();
            across[a][b] = v;
            across[b][a] = v;
        }
    }
    let blocks = spec.block_of();
    let entries = SymMatrix::from_fn(spec.dim(), |i, j| {
        if i == j {
            1.0
        } else {
            let (bi, bj) = (blocks[i], blocks[j]);
            if bi == bj {
                within[bi]
            } else {
                across[bi][bj]
            }
        }
    })?;

    // Spectrum of C = exp(spectrum of D): the corner's eigenvalues plus the
    // scalar tail, exponentiated.
    let mut eigenvalues: Vec<f64> = corner_eig.values.iter().map(|&l| l.exp()).collect();
    for (b, &s) in spec.sizes().iter().enumerate() {
        let tail = (sol.y[b] - spec.gamma(b, b)).exp();
        eigenvalues.extend(std::iter::repeat(tail).take(s - 1));
    }
    eigenvalues.sort_by(|x, y| y.partial_cmp(x).expect("finite"));
    CorrelationMatrix::from_parts(entries, eigenvalues)
}

/// Gamma law for block parameters: `gamma_kl` iid N(mu, (omega/n)^2), with
/// the within-block variance scaling guidance baked into the 1/n factor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockGammaLaw {
    pub sizes: Vec<usize>,
    pub mu: f64,
    pub omega: f64,
}

impl BlockGammaLaw {
    fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || !self.omega.is_finite() || self.omega < 0.0 {
            return Err(CorrError::DomainError(format!(
                "block gamma law needs finite mu and omega >= 0, got ({}, {})",
                self.mu, self.omega
            )));
        }
        BlockSpec::new(self.sizes.clone(), vec![vec![0.0; self.sizes.len()]; self.sizes.len()])
            .map(|_| ())
    }

    /// Draw a complete BlockSpec from this law.
    pub fn draw_spec(&self, stream: &mut Stream) -> Result<BlockSpec> {
        self.validate()?;
        let k = self.sizes.len();
        let n: usize = self.sizes.iter().sum();
        let sd = self.omega / n as f64;
        let mut gammas = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                let z: f64 = StandardNormal.sample(stream);
                let v = self.mu + sd * z;
                gammas[a][b] = v;
                gammas[b][a] = v;
            }
        }
        BlockSpec::new(self.sizes.clone(), gammas)
    }
}

/// Draw one block correlation matrix from a block gamma law.
pub fn sample_block_corr(law: &BlockGammaLaw, stream: &mut Stream) -> Result<CorrelationMatrix> {
    let spec = law.draw_spec(stream)?;
    let sol = solve_block_diagonal(&spec, BLOCK_SOLVE_TOL, BLOCK_SOLVE_MAX_ITER)?;
    block_corr(&spec, &sol)
}

/// One mixture component: a block spec with a weight and an optional fixed
/// permutation (`None` draws a uniform permutation at sampling time).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub spec: BlockSpec,
    #[serde(default)]
    pub permutation: Option<Vec<usize>>,
}

/// Convex mixture of permuted block correlation matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawMixtureSpec", into = "RawMixtureSpec")]
pub struct MixtureSpec {
    components: Vec<MixtureComponent>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawMixtureSpec {
    components: Vec<MixtureComponent>,
}

impl TryFrom<RawMixtureSpec> for MixtureSpec {
    type Error = CorrError;
    fn try_from(raw: RawMixtureSpec) -> Result<Self> {
        MixtureSpec::new(raw.components)
    }
}

impl From<MixtureSpec> for RawMixtureSpec {
    fn from(spec: MixtureSpec) -> Self {
        RawMixtureSpec {
            components: spec.components,
        }
    }
}

impl MixtureSpec {
    /// Validate: at least one component, non-negative weights summing to 1
    /// within 1e-12, a common dimension, and any fixed permutations valid.
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(CorrError::DimensionError("mixture needs at least one component".into()));
        }
        let n = components[0].spec.dim();
        let mut total = 0.0;
        for (m, comp) in components.iter().enumerate() {
            if !(comp.weight >= 0.0) {
                return Err(CorrError::DomainError(format!(
                    "component {m} has negative weight {}",
                    comp.weight
                )));
            }
            total += comp.weight;
            if comp.spec.dim() != n {
                return Err(CorrError::DimensionError(format!(
                    "component {m} has dimension {} but component 0 has {n}",
                    comp.spec.dim()
                )));
            }
            if let Some(p) = &comp.permutation {
                if p.len() != n {
                    return Err(CorrError::DimensionError(format!(
                        "component {m} permutation length {} does not match dimension {n}",
                        p.len()
                    )));
                }
                let mut seen = vec![false; n];
                for &v in p {
                    if v >= n || seen[v] {
                        return Err(CorrError::DimensionError(format!(
                            "component {m} permutation is not a permutation of 0..{n}"
                        )));
                    }
                    seen[v] = true;
                }
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(CorrError::DomainError(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(MixtureSpec { components })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].spec.dim()
    }
}

/// Draw a mixture matrix: each component is solved, reconstructed in closed
/// form, permuted (fixed or freshly drawn uniform permutation), and the
/// weighted sum is validated as a correlation matrix (its smallest
/// eigenvalue is computed and cached in the result).
pub fn sample_mixture(mix: &MixtureSpec, stream: &mut Stream) -> Result<CorrelationMatrix> {
    let n = mix.dim();
    let mut acc = vec![0.0_f64; n * n];
    for comp in mix.components() {
        let sol = solve_block_diagonal(&comp.spec, BLOCK_SOLVE_TOL, BLOCK_SOLVE_MAX_ITER)?;
        let c = block_corr(&comp.spec, &sol)?;
        let perm: Vec<usize> = match &comp.permutation {
            Some(p) => p.clone(),
            None => {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(stream);
                p
            }
        };
        let permuted = apply_permutation(c.mat(), &perm)?;
        for i in 0..n {
            for j in 0..n {
                acc[i * n + j] += comp.weight * permuted.get(i, j);
            }
        }
    }
    let entries = SymMatrix::from_fn(n, |i, j| acc[i * n + j])?;
    CorrelationMatrix::from_sym(entries)
}

/// Law for mixtures with freshly drawn components: M components with equal
/// weights, specs from a shared block gamma law, and uniform permutations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixtureGammaLaw {
    pub m: usize,
    pub base: BlockGammaLaw,
}

/// Draw a mixture of `m` freshly drawn, freshly permuted block matrices
/// with equal weights.
pub fn sample_mixture_law(law: &MixtureGammaLaw, stream: &mut Stream) -> Result<CorrelationMatrix> {
    if law.m == 0 {
        return Err(CorrError::DomainError("mixture needs at least one component".into()));
    }
    let weight = 1.0 / law.m as f64;
    let mut components = Vec::with_capacity(law.m);
    for _ in 0..law.m {
        components.push(MixtureComponent {
            weight,
            spec: law.base.draw_spec(stream)?,
            permutation: None,
        });
    }
    sample_mixture(&MixtureSpec::new(components)?, stream)
}
