//! Numerical laboratory for optimal linear prediction (kriging) of stationary
//! Gaussian random fields, built to measure the *screening effect*: how nearly
//! a few observations close to the prediction site render distant observations
//! irrelevant.
//!
//! The crate is organized bottom-up:
//!
//! - [`specfun`]: scalar building blocks — compensated double-double arithmetic,
//!   `erfc`/`erfcx`, `ln_gamma`, and the modified Bessel function `K_nu`.
//! - [`kernels`]: the covariance families under study, each with its spectral
//!   density, small-lag prediction-error rate, and (where it exists) an
//!   extended-precision evaluation path.
//! - [`kriging`]: dense symmetric positive-definite solves with diagonal
//!   pivoting, generic over `f64` and double-double scalars; simple and
//!   ordinary kriging; screening ratios.
//! - [`spectral`]: adaptive Gauss–Kronrod quadrature (including oscillatory
//!   tails over the real line), prediction-error functionals evaluated in the
//!   frequency domain, and the local spectral-flatness diagnostic.
//! - [`experiments`]: the scenario catalog, shrinking-lag sweeps, limit
//!   extrapolation, and verification of the asymptotic-covariance lemma that
//!   underlies the screening limits.

pub mod experiments;
pub mod kernels;
pub mod kriging;
pub mod specfun;
pub mod spectral;
