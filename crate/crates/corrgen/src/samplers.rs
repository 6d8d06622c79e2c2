//! Distributions on gamma space and the equicorrelation family.
//!
//! A [`GammaLaw`] is an immutable, serializable description of a
//! distribution on R^d (d = n(n-1)/2). Drawing consumes an explicit
//! [`Stream`], so (seed, law, n) fully determines the output. The variants
//! cover iid and fully-correlated Gaussians, exchangeable constructions
//! assembled entrywise from common/index/pair components, perturbations
//! around a target, Jacobian-shaped laws that equalize correlation
//! dispersion, hard support bounds, and non-negative folding.
//!
//! The equicorrelation family is one-dimensional: a Beta draw is mapped to
//! the common correlation `r` and then to its log-space coordinate `z`;
//! [`z_of_r`]/[`r_of_z`] implement that reparameterization.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{CorrError, Result};
use crate::gamma_map::{gamma_to_corr, jacobian, CorrelationMatrix, GammaVector};
use crate::linalg::{cholesky, lu_factor, vecl_len, vecl_pairs, SymMatrix};
use crate::rng::{self, Stream};

/// Scalar component law for exchangeable constructions.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ScalarLaw {
    Constant { value: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ScalarLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarLaw::Constant { value } => {
                if !value.is_finite() {
                    return Err(CorrError::DomainError("constant law needs a finite value".into()));
                }
            }
            ScalarLaw::Normal { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() || *sd < 0.0 {
                    return Err(CorrError::DomainError(format!(
                        "normal law needs finite mean and sd >= 0, got ({mean}, {sd})"
                    )));
                }
            }
            ScalarLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(CorrError::DomainError(format!(
                        "uniform law needs lo < hi, got ({lo}, {hi})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn draw(&self, stream: &mut Stream) -> f64 {
        match *self {
            ScalarLaw::Constant { value } => value,
            ScalarLaw::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(stream);
                mean + sd * z
            }
            ScalarLaw::Uniform { lo, hi } => stream.gen_range(lo..hi),
        }
    }
}

/// How the common, index, and pair components combine into one entry
/// `G_ij = h(zeta, xi_i, xi_j, eps_ij)`. Every combiner is symmetric in the
/// two index arguments, which is what makes the output exchangeable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// h = 0: degenerate, gives the identity matrix.
    Zero,
    /// h = zeta + xi_i + xi_j + eps.
    Sum,
    /// h = zeta + xi_i * xi_j + eps.
    SumProduct,
}

impl Combiner {
    pub fn apply(&self, zeta: f64, xi_i: f64, xi_j: f64, eps: f64) -> f64 {
        match self {
            Combiner::Zero => 0.0,
            Combiner::Sum => zeta + xi_i + xi_j + eps,
            Combiner::SumProduct => zeta + xi_i * xi_j + eps,
        }
    }
}

/// Exchangeable law: each `G_ij` (i > j canonical) combines one common draw,
/// per-index draws, and a per-pair draw, each taken from its own substream.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExchangeableLaw {
    pub common: ScalarLaw,
    pub index: ScalarLaw,
    pub pair: ScalarLaw,
    pub combiner: Combiner,
}

impl ExchangeableLaw {
    pub fn validate(&self) -> Result<()> {
        self.common.validate()?;
        self.index.validate()?;
        self.pair.validate()
    }
}

/// Support-bound handling for the `bounded` variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// Resample the whole vector until it fits; preserves the law's shape
    /// inside the box (the default).
    Reject,
    /// Clamp each coordinate; documented as distorting the law.
    Clip,
}

/// Consecutive-rejection budget for [`BoundMode::Reject`].
pub const BOUND_REJECT_BUDGET: u64 = 1_000_000;

/// A distribution on gamma vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum GammaLaw {
    /// Independent N(mu, omega2) coordinates.
    GaussianIid { mu: f64, omega2: f64 },
    /// Joint Gaussian with mean vector and full SPD covariance.
    GaussianFull { mu_vec: Vec<f64>, sigma: Vec<Vec<f64>> },
    /// Entrywise exchangeable construction.
    Exchangeable(ExchangeableLaw),
    /// `gamma0` plus noise from a base law.
    PerturbedTarget { gamma0: Vec<f64>, noise: Box<GammaLaw> },
    /// Gaussian shaped by the inverse Jacobian at `gamma0`: the draw is
    /// `gamma0 + J0^{-1} Lambda^{1/2} z`, z standard normal, so correlation
    /// coordinates inherit dispersion approximately `Lambda` entrywise.
    HeteroJacobian { gamma0: Vec<f64>, lambda_omega: Vec<f64> },
    /// Base law constrained to `max_k |gamma_k| <= bound`.
    Bounded {
        base: Box<GammaLaw>,
        bound: f64,
        mode: BoundMode,
    },
    /// Coordinatewise `|base draw| + shift` (shift >= 0), giving a law on
    /// the non-negative orthant.
    Nonnegative { base: Box<GammaLaw>, shift: f64 },
}

impl GammaLaw {
    /// Check internal consistency against the target dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(CorrError::DimensionError("dimension must be at least 2".into()));
        }
        let d = vecl_len(n);
        match self {
            GammaLaw::GaussianIid { mu, omega2 } => {
                if !mu.is_finite() || !omega2.is_finite() || *omega2 < 0.0 {
                    return Err(CorrError::DomainError(format!(
                        "gaussian_iid needs finite mu and omega2 >= 0, got ({mu}, {omega2})"
                    )));
                }
            }
            GammaLaw::GaussianFull { mu_vec, sigma } => {
                if mu_vec.len() != d || sigma.len() != d || sigma.iter().any(|r| r.len() != d) {
                    return Err(CorrError::DimensionError(format!(
                        "gaussian_full needs mean length {d} and {d}x{d} covariance"
                    )));
                }
            }
            GammaLaw::Exchangeable(law) => law.validate()?,
            GammaLaw::PerturbedTarget { gamma0, noise } => {
                if gamma0.len() != d {
                    return Err(CorrError::DimensionError(format!(
                        "perturbed_target gamma0 length {} expected {d}",
                        gamma0.len()
                    )));
                }
                noise.validate(n)?;
            }
            GammaLaw::HeteroJacobian { gamma0, lambda_omega } => {
                if gamma0.len() != d || lambda_omega.len() != d {
                    return Err(CorrError::DimensionError(format!(
                        "hetero_jacobian needs gamma0 and lambda_omega of length {d}"
                    )));
                }
                if lambda_omega.iter().any(|&l| !(l > 0.0)) {
                    return Err(CorrError::DomainError(
                        "hetero_jacobian needs strictly positive lambda_omega entries".into(),
                    ));
                }
            }
            GammaLaw::Bounded { base, bound, mode: _ } => {
                if !(*bound > 0.0) {
                    return Err(CorrError::DomainError(format!("bound must be positive, got {bound}")));
                }
                base.validate(n)?;
            }
            GammaLaw::Nonnegative { base, shift } => {
                if !(*shift >= 0.0) {
                    return Err(CorrError::DomainError(format!("shift must be >= 0, got {shift}")));
                }
                base.validate(n)?;
            }
        }
        Ok(())
    }
}

/// One draw from `law` for matrix dimension `n`.
pub fn sample_gamma(law: &GammaLaw, n: usize, stream: &mut Stream) -> Result<GammaVector> {
    law.validate(n)?;
    draw_unchecked(law, n, stream)
}

fn draw_unchecked(law: &GammaLaw, n: usize, stream: &mut Stream) -> Result<GammaVector> {
    let d = vecl_len(n);
    match law {
        GammaLaw::GaussianIid { mu, omega2 } => {
            let sd = omega2.sqrt();
            let values = (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(stream);
                    mu + sd * z
                })
                .collect();
            GammaVector::new(n, values)
        }
        GammaLaw::GaussianFull { mu_vec, sigma } => {
            let cov = SymMatrix::from_rows(sigma)?;
            let l = cholesky(&cov)?;
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(stream)).collect();
            let values = (0..d)
                .map(|i| {
                    let mut acc = mu_vec[i];
                    for k in 0..=i {
                        acc += l.get(i, k) * z[k];
                    }
                    acc
                })
                .collect();
            GammaVector::new(n, values)
        }
        GammaLaw::Exchangeable(xlaw) => sample_gamma_exchangeable(xlaw, n, stream),
        GammaLaw::PerturbedTarget { gamma0, noise } => {
            let eps = draw_unchecked(noise, n, stream)?;
            let values = gamma0
                .iter()
                .zip(eps.as_slice())
                .map(|(g, e)| g + e)
                .collect();
            GammaVector::new(n, values)
        }
        GammaLaw::HeteroJacobian { gamma0, lambda_omega } => {
            let target = GammaVector::new(n, gamma0.clone())?;
            let c0 = gamma_to_corr(&target)?;
            let bundle = jacobian(&c0)?;
            let lu = lu_factor(&bundle.j)?;
            let w: Vec<f64> = lambda_omega
                .iter()
                .map(|&l| {
                    let z: f64 = StandardNormal.sample(stream);
                    l.sqrt() * z
                })
                .collect();
            let u = lu.solve(&w);
            let values = gamma0.iter().zip(&u).map(|(g, x)| g + x).collect();
            GammaVector::new(n, values)
        }
        GammaLaw::Bounded { base, bound, mode } => match mode {
            BoundMode::Reject => {
                let mut attempts: u64 = 0;
                loop {
                    let draw = draw_unchecked(base, n, stream)?;
                    if draw.gamma_max() <= *bound {
                        return Ok(draw);
                    }
                    attempts += 1;
                    if attempts >= BOUND_REJECT_BUDGET {
                        return Err(CorrError::SamplingStarvation { attempts });
                    }
                }
            }
            BoundMode::Clip => {
                let draw = draw_unchecked(base, n, stream)?;
                let values = draw
                    .as_slice()
                    .iter()
                    .map(|&g| g.clamp(-*bound, *bound))
                    .collect();
                GammaVector::new(n, values)
            }
        },
        GammaLaw::Nonnegative { base, shift } => {
            let draw = draw_unchecked(base, n, stream)?;
            let values = draw.as_slice().iter().map(|&g| g.abs() + shift).collect();
            GammaVector::new(n, values)
        }
    }
}

/// Component substream tags for the exchangeable sampler.
const TAG_COMMON: u64 = 1;
const TAG_INDEX: u64 = 2;
const TAG_PAIR: u64 = 3;

/// One exchangeable draw: `G_ij = h(zeta, xi_i, xi_j, eps_ij)` with the
/// common, index, and pair components taken from three independent
/// substreams forked off `stream`.
pub fn sample_gamma_exchangeable(
    law: &ExchangeableLaw,
    n: usize,
    stream: &mut Stream,
) -> Result<GammaVector> {
    law.validate()?;
    if n < 2 {
        return Err(CorrError::DimensionError("dimension must be at least 2".into()));
    }
    let mut common_stream = rng::fork(stream, TAG_COMMON);
    let mut index_stream = rng::fork(stream, TAG_INDEX);
    let mut pair_stream = rng::fork(stream, TAG_PAIR);

    let zeta = law.common.draw(&mut common_stream);
    let xi: Vec<f64> = (0..n).map(|_| law.index.draw(&mut index_stream)).collect();
    let values: Vec<f64> = vecl_pairs(n)
        .into_iter()
        .map(|(i, j)| {
            let eps = law.pair.draw(&mut pair_stream);
            law.combiner.apply(zeta, xi[i], xi[j], eps)
        })
        .collect();
    GammaVector::new(n, values)
}

/// One-parameter equicorrelation law: Beta(alpha, beta) rescaled onto the
/// valid interval (-1/(n-1), 1).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EquiLaw {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl EquiLaw {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n < 2 {
            return Err(CorrError::DomainError("equicorrelation needs n >= 2".into()));
        }
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(CorrError::DomainError(format!(
                "Beta shapes must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(EquiLaw { n, alpha, beta })
    }

    /// Location of the z-space density: log(n-1)/n.
    pub fn mu(&self) -> f64 {
        ((self.n as f64) - 1.0).ln() / self.n as f64
    }

    /// Scale of the z-space density: 1/n.
    pub fn s(&self) -> f64 {
        1.0 / self.n as f64
    }
}

/// Log-space coordinate of an equicorrelation coefficient:
/// `z(r) = (1/n) log(1 + n r / (1 - r))` on r in (-1/(n-1), 1).
pub fn z_of_r(r: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(CorrError::DomainError("z_of_r needs n >= 2".into()));
    }
    let lo = -1.0 / (n as f64 - 1.0);
    if !(r > lo && r < 1.0) {
        return Err(CorrError::DomainError(format!(
            "equicorrelation coefficient {r} outside ({lo}, 1)"
        )));
    }
    let nf = n as f64;
    Ok((1.0 + nf * r / (1.0 - r)).ln() / nf)
}

/// Inverse of [`z_of_r`]: `r(z) = (1 - e^{-nz}) / (1 + (n-1) e^{-nz})`,
/// evaluated in the numerically stable branch for each sign of z.
pub fn r_of_z(z: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(CorrError::DomainError("r_of_z needs n >= 2".into()));
    }
    let nf = n as f64;
    let nz = nf * z;
    if nz >= 0.0 {
        let e = (-nz).exp();
        Ok((1.0 - e) / (1.0 + (nf - 1.0) * e))
    } else {
        // Multiply through by e^{nz} to avoid overflow for very negative z.
        let e = nz.exp();
        Ok((e - 1.0) / (e + (nf - 1.0)))
    }
}

/// Draw an equicorrelation matrix: B ~ Beta(alpha, beta) mapped affinely
/// onto (-1/(n-1), 1).
///
/// The matrix is assembled directly from `r` (its entries are exactly `r`
/// and its spectrum is known in closed form); this equals routing `z(r)`
/// through the fixed-point inverse up to machine precision, which a test
/// pins down.
pub fn sample_equicorrelation(law: &EquiLaw, stream: &mut Stream) -> Result<CorrelationMatrix> {
    EquiLaw::new(law.n, law.alpha, law.beta)?;
    let beta = Beta::new(law.alpha, law.beta)
        .map_err(|e| CorrError::DomainError(format!("invalid Beta shapes: {e}")))?;
    let lo = -1.0 / (law.n as f64 - 1.0);
    loop {
        let b: f64 = beta.sample(stream);
        let r = lo + b * (1.0 - lo);
        // A draw landing exactly on the boundary (possible only through
        // floating-point rounding of extreme Beta draws) is retried.
        if r > lo && r < 1.0 {
            return CorrelationMatrix::equicorrelation(law.n, r);
        }
    }
}

/// Variance of z under the alpha = beta = 1 (uniform-r) law: pi^2/3 * n^-2.
pub fn equi_z_variance(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(CorrError::DomainError("equi_z_variance needs n >= 2".into()));
    }
    let nf = n as f64;
    Ok(std::f64::consts::PI.powi(2) / 3.0 / (nf * nf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_gaussian_gives_identity() {
        let law = GammaLaw::GaussianIid { mu: 0.0, omega2: 0.0 };
        let mut stream = rng::master(1);
        let g = sample_gamma(&law, 3, &mut stream).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0, 0.0]);
        let c = gamma_to_corr(&g).unwrap();
        assert!(c.mat().max_abs_diff(&SymMatrix::identity(3).unwrap()) < 1e-15);
    }

    #[test]
    fn tiny_variance_concentrates_at_target() {
        let mu = 4.0_f64.ln() / 3.0;
        let law = GammaLaw::GaussianIid { mu, omega2: 1e-12 };
        let mut stream = rng::master(2);
        for _ in 0..20 {
            let g = sample_gamma(&law, 3, &mut stream).unwrap();
            let c = gamma_to_corr(&g).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert!((c.get(i, j) - 0.5).abs() < 1e-4);
                    }
                }
            }
        }
    }

    #[test]
    fn draws_are_reproducible() {
        let law = GammaLaw::GaussianIid { mu: 0.1, omega2: 0.3 };
        let mut a = rng::master(99);
        let mut b = rng::master(99);
        for _ in 0..5 {
            let ga = sample_gamma(&law, 4, &mut a).unwrap();
            let gb = sample_gamma(&law, 4, &mut b).unwrap();
            assert_eq!(ga.as_slice(), gb.as_slice());
        }
    }

    #[test]
    fn gaussian_full_reduces_to_iid_for_scaled_identity() {
        // Same substream, same underlying normals: the draws must agree.
        let d = vecl_len(3);
        let mut sigma = vec![vec![0.0; d]; d];
        for (i, row) in sigma.iter_mut().enumerate() {
            row[i] = 0.25;
        }
        let full = GammaLaw::GaussianFull { mu_vec: vec![0.0; d], sigma };
        let iid = GammaLaw::GaussianIid { mu: 0.0, omega2: 0.25 };
        let a = sample_gamma(&full, 3, &mut rng::master(5)).unwrap();
        let b = sample_gamma(&iid, 3, &mut rng::master(5)).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_full_rejects_bad_covariance() {
        let law = GammaLaw::GaussianFull {
            mu_vec: vec![0.0; 3],
            sigma: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        };
        let mut stream = rng::master(1);
        assert!(matches!(
            sample_gamma(&law, 3, &mut stream),
            Err(CorrError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn exchangeable_zero_combiner_gives_zero_gamma() {
        let law = ExchangeableLaw {
            common: ScalarLaw::Normal { mean: 0.0, sd: 1.0 },
            index: ScalarLaw::Normal { mean: 0.0, sd: 1.0 },
            pair: ScalarLaw::Normal { mean: 0.0, sd: 1.0 },
            combiner: Combiner::Zero,
        };
        let g = sample_gamma_exchangeable(&law, 4, &mut rng::master(3)).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exchangeable_constants_assemble_exactly() {
        let law = ExchangeableLaw {
            common: ScalarLaw::Constant { value: 0.5 },
            index: ScalarLaw::Constant { value: 2.0 },
            pair: ScalarLaw::Constant { value: -0.25 },
            combiner: Combiner::Sum,
        };
        let g = sample_gamma_exchangeable(&law, 4, &mut rng::master(4)).unwrap();
        for &v in g.as_slice() {
            assert_eq!(v, 0.5 + 2.0 + 2.0 - 0.25);
        }
        let prod = ExchangeableLaw { combiner: Combiner::SumProduct, ..law };
        let g = sample_gamma_exchangeable(&prod, 4, &mut rng::master(4)).unwrap();
        for &v in g.as_slice() {
            assert_eq!(v, 0.5 + 4.0 - 0.25);
        }
    }

    #[test]
    fn exchangeable_components_use_independent_substreams() {
        // With the pair component silenced, gamma entries for pairs sharing
        // an index are correlated, but the xi values must not depend on how
        // many pair draws happen (stream independence).
        let law = ExchangeableLaw {
            common: ScalarLaw::Constant { value: 0.0 },
            index: ScalarLaw::Normal { mean: 0.0, sd: 1.0 },
            pair: ScalarLaw::Constant { value: 0.0 },
            combiner: Combiner::Sum,
        };
        let g3 = sample_gamma_exchangeable(&law, 3, &mut rng::master(11)).unwrap();
        let g5 = sample_gamma_exchangeable(&law, 5, &mut rng::master(11)).unwrap();
        // gamma_21 = xi_2 + xi_1 in both cases, from the same substream.
        assert!((g3.as_slice()[0] - g5.as_slice()[0]).abs() < 1e-15);
    }

    #[test]
    fn perturbed_target_with_silent_noise_hits_target() {
        let gamma0 = vec![0.3, -0.1, 0.2];
        let law = GammaLaw::PerturbedTarget {
            gamma0: gamma0.clone(),
            noise: Box::new(GammaLaw::GaussianIid { mu: 0.0, omega2: 0.0 }),
        };
        let g = sample_gamma(&law, 3, &mut rng::master(6)).unwrap();
        assert_eq!(g.as_slice(), gamma0.as_slice());
    }

    #[test]
    fn hetero_jacobian_with_vanishing_scale_hits_target() {
        let gamma0 = vec![0.25, 0.25, 0.25];
        let law = GammaLaw::HeteroJacobian {
            gamma0: gamma0.clone(),
            lambda_omega: vec![1e-30; 3],
        };
        let g = sample_gamma(&law, 3, &mut rng::master(7)).unwrap();
        for (a, b) in g.as_slice().iter().zip(&gamma0) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn bounded_reject_respects_bound_exactly() {
        let law = GammaLaw::Bounded {
            base: Box::new(GammaLaw::GaussianIid { mu: 0.0, omega2: 1.0 }),
            bound: 0.5,
            mode: BoundMode::Reject,
        };
        let mut stream = rng::master(8);
        for _ in 0..500 {
            let g = sample_gamma(&law, 3, &mut stream).unwrap();
            assert!(g.gamma_max() <= 0.5);
        }
    }

    #[test]
    fn bounded_reject_starves_on_impossible_bound() {
        // Mass concentrated far outside the box: every draw is rejected.
        let law = GammaLaw::Bounded {
            base: Box::new(GammaLaw::GaussianIid { mu: 10.0, omega2: 1e-6 }),
            bound: 0.5,
            mode: BoundMode::Reject,
        };
        let mut stream = rng::master(9);
        match sample_gamma(&law, 3, &mut stream) {
            Err(CorrError::SamplingStarvation { attempts }) => {
                assert_eq!(attempts, BOUND_REJECT_BUDGET);
            }
            other => panic!("expected SamplingStarvation, got {other:?}"),
        }
    }

    #[test]
    fn bounded_clip_clamps_coordinates() {
        let law = GammaLaw::Bounded {
            base: Box::new(GammaLaw::GaussianIid { mu: 10.0, omega2: 1e-6 }),
            bound: 0.5,
            mode: BoundMode::Clip,
        };
        let g = sample_gamma(&law, 3, &mut rng::master(10)).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn nonnegative_folds_and_shifts() {
        let law = GammaLaw::Nonnegative {
            base: Box::new(GammaLaw::GaussianIid { mu: 0.0, omega2: 1.0 }),
            shift: 0.01,
        };
        let mut stream = rng::master(11);
        for _ in 0..200 {
            let g = sample_gamma(&law, 3, &mut stream).unwrap();
            assert!(g.as_slice().iter().all(|&v| v >= 0.01));
        }
    }

    #[test]
    fn nonnegative_gamma_gives_nonnegative_correlations() {
        let law = GammaLaw::Nonnegative {
            base: Box::new(GammaLaw::GaussianIid { mu: 0.0, omega2: 1.0 }),
            shift: 0.0,
        };
        let mut stream = rng::master(12);
        for _ in 0..50 {
            let g = sample_gamma(&law, 4, &mut stream).unwrap();
            let c = gamma_to_corr(&g).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!(c.get(i, j) >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn z_r_conversions() {
        assert_eq!(z_of_r(0.0, 3).unwrap(), 0.0);
        assert_eq!(r_of_z(0.0, 3).unwrap(), 0.0);
        // n=3, z = (log 4)/3 corresponds to r = 1/2.
        let z = 4.0_f64.ln() / 3.0;
        assert!((r_of_z(z, 3).unwrap() - 0.5).abs() < 1e-12);
        assert!((z_of_r(0.5, 3).unwrap() - z).abs() < 1e-12);
        // n=2 reduces to the Fisher transformation.
        for r in [-0.95, -0.5, -0.1, 0.0, 0.3, 0.8, 0.99] {
            assert!((z_of_r(r, 2).unwrap() - r.atanh()).abs() < 1e-12);
        }
        // Mutual inverses across the domain.
        for n in [2, 3, 5, 10] {
            let lo = -1.0 / (n as f64 - 1.0);
            for k in 1..40 {
                let r = lo + (1.0 - lo) * (k as f64) / 40.0;
                let z = z_of_r(r, n).unwrap();
                assert!((r_of_z(z, n).unwrap() - r).abs() < 1e-12);
            }
        }
        // Stable in the far tails.
        assert!((r_of_z(-200.0, 4).unwrap() + 1.0 / 3.0).abs() < 1e-12);
        assert!((r_of_z(200.0, 4).unwrap() - 1.0).abs() < 1e-12);
        // Domain errors outside the open interval.
        assert!(matches!(z_of_r(1.0, 3), Err(CorrError::DomainError(_))));
        assert!(matches!(z_of_r(-0.5, 3), Err(CorrError::DomainError(_))));
    }

    #[test]
    fn equicorrelation_spectrum_is_exact() {
        let law = EquiLaw::new(5, 2.0, 3.0).unwrap();
        let mut stream = rng::master(13);
        for _ in 0..20 {
            let c = sample_equicorrelation(&law, &mut stream).unwrap();
            let r = c.get(0, 1);
            let values = c.eigenvalues();
            let top = 1.0 + r * 4.0;
            let rest = 1.0 - r;
            let expect_max = top.max(rest);
            let expect_min = top.min(rest);
            assert!((values[0] - expect_max).abs() < 1e-9);
            for &v in &values[1..values.len() - 1] {
                assert!((v - rest).abs() < 1e-9 || (v - top).abs() < 1e-9);
            }
            assert!((values[values.len() - 1] - expect_min).abs() < 1e-9);
        }
    }

    #[test]
    fn equicorrelation_matches_fixed_point_route() {
        for (n, r) in [(3, 0.5_f64), (4, -0.2), (6, 0.85)] {
            let z = z_of_r(r, n).unwrap();
            let via_gamma = gamma_to_corr(&GammaVector::constant(n, z).unwrap()).unwrap();
            let direct = CorrelationMatrix::equicorrelation(n, r).unwrap();
            assert!(via_gamma.mat().max_abs_diff(direct.mat()) < 1e-9);
        }
    }

    #[test]
    fn equi_law_parameters() {
        let law = EquiLaw::new(3, 1.0, 1.0).unwrap();
        assert!((law.mu() - 2.0_f64.ln() / 3.0).abs() < 1e-15);
        assert!((law.s() - 1.0 / 3.0).abs() < 1e-15);
        assert!(EquiLaw::new(1, 1.0, 1.0).is_err());
        assert!(EquiLaw::new(3, 0.0, 1.0).is_err());
        assert!((equi_z_variance(2).unwrap() - std::f64::consts::PI.powi(2) / 12.0).abs() < 1e-15);
        assert!((equi_z_variance(10).unwrap() - std::f64::consts::PI.powi(2) / 300.0).abs() < 1e-15);
        assert!(equi_z_variance(1).is_err());
    }

    #[test]
    fn law_json_round_trip() {
        let law = GammaLaw::Bounded {
            base: Box::new(GammaLaw::Exchangeable(ExchangeableLaw {
                common: ScalarLaw::Normal { mean: 0.0, sd: 1.0 },
                index: ScalarLaw::Normal { mean: 0.0, sd: 1.0 },
                pair: ScalarLaw::Normal { mean: 0.0, sd: 1.0 },
                combiner: Combiner::SumProduct,
            })),
            bound: 1.5,
            mode: BoundMode::Reject,
        };
        let json = serde_json::to_string(&law).unwrap();
        assert!(json.contains("\"variant\":\"bounded\""));
        assert!(json.contains("\"combiner\":\"sum_product\""));
        let back: GammaLaw = serde_json::from_str(&json).unwrap();
        let a = sample_gamma(&law, 4, &mut rng::master(21)).unwrap();
        let b = sample_gamma(&back, 4, &mut rng::master(21)).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn law_validation_errors() {
        assert!(matches!(
            GammaLaw::GaussianIid { mu: 0.0, omega2: -1.0 }.validate(3),
            Err(CorrError::DomainError(_))
        ));
        assert!(matches!(
            GammaLaw::Bounded {
                base: Box::new(GammaLaw::GaussianIid { mu: 0.0, omega2: 1.0 }),
                bound: 0.0,
                mode: BoundMode::Reject,
            }
            .validate(3),
            Err(CorrError::DomainError(_))
        ));
        assert!(matches!(
            GammaLaw::HeteroJacobian { gamma0: vec![0.0; 3], lambda_omega: vec![1.0, -1.0, 1.0] }
                .validate(3),
            Err(CorrError::DomainError(_))
        ));
        assert!(matches!(
            GammaLaw::PerturbedTarget {
                gamma0: vec![0.0; 2],
                noise: Box::new(GammaLaw::GaussianIid { mu: 0.0, omega2: 1.0 }),
            }
            .validate(3),
            Err(CorrError::DimensionError(_))
        ));
    }
}
