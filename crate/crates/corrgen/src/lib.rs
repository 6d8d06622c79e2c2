//! Random correlation matrices through the log-correlation parameterization.
//!
//! A non-singular correlation matrix `C` is encoded by the vector
//! `gamma = vecl(log C)`: the strictly-lower-triangular entries of its matrix
//! logarithm, read column by column. The map is a bijection between the set of
//! valid correlation matrices and all of R^d with d = n(n-1)/2, which makes it
//! a convenient coordinate system for sampling, density evaluation, and
//! structured construction:
//!
//! - [`gamma_map`] implements the bijection itself: `corr_to_gamma`,
//!   `gamma_to_corr` (a fixed-point inversion of the diagonal), the Jacobian
//!   of the change of variables, and densities induced on correlation space.
//! - [`samplers`] draws `gamma` from configurable laws (iid Gaussian, full
//!   covariance, exchangeable, perturbed target, Jacobian-shaped, bounded,
//!   non-negative) and handles the one-parameter equicorrelation family.
//! - [`block`] exploits block structure: a K-dimensional fixed point replaces
//!   the n-dimensional one when the correlation pattern is constant within and
//!   between blocks, and mixtures of permuted block matrices build large
//!   matrices with controlled diversity.
//! - [`baselines`] implements classical generators (rejection from the cube,
//!   Gram/sphere, spherical angle parameterizations, partial-correlation
//!   vines, eigenvalue-prescribed rotations, Wishart renormalization) used as
//!   reference points.
//! - [`verify`] contains the statistical audit toolbox: KS tests, reference
//!   CDFs, marginal summaries, and named check suites.
//! - [`linalg`] is the small dense symmetric linear-algebra kernel everything
//!   is built on.
//!
//! All randomness is driven by explicit 64-bit seeds through counter-mode
//! streams (see [`rng`]), so every draw is reproducible and batches can be
//! evaluated in parallel without sharing generator state.

pub mod baselines;
pub mod block;
pub mod error;
pub mod gamma_map;
pub mod linalg;
pub mod rng;
pub mod samplers;
pub mod verify;

pub use error::{CorrError, Result};
pub use gamma_map::{CorrelationMatrix, GammaVector};
