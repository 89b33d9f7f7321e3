//! Max-stable limit laws of independent, non-identically distributed Gaussian
//! vectors and the machinery around them: the bivariate Husler-Reiss family
//! and its mixtures over a measure on [0, inf], the d-variate extension built
//! from Gaussian survivor integrals, exact point-process samplers for the
//! associated max-stable processes (Brown-Resnick fields, their max-mixtures,
//! randomly rescaled Gaussian maxima), spectral densities and extremal
//! correlation functions, and a Monte Carlo verification harness.
//!
//! Entry points:
//! - [`distributions`]: `hr_bivariate_cdf`, `hr_mixture_cdf`, closed forms,
//!   `husler_reiss_cdf`, `h_eta_cdf`
//! - [`measures`]: mixing measures on the compactified half-line
//! - [`dependence`]: spectral densities and extremal correlation functions
//! - [`simulate`]: samplers and reproducible RNG streams
//! - [`verify`]: empirical CDFs, sup distances, convergence reports
//! - [`special`]: Gaussian kernels, normalizing constants, Cholesky,
//!   bivariate/multivariate normal probabilities

pub mod dependence;
pub mod distributions;
pub mod error;
pub mod measures;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
