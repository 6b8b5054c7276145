//! Special functions and extended-precision scalars.
//!
//! Everything downstream (covariance kernels, ill-conditioned kriging solves,
//! frequency-domain integrals) reduces to four primitives implemented here:
//! double-double arithmetic, the complementary error function (plain and
//! scaled), the log-gamma function, and the modified Bessel function of the
//! second kind with real order.

mod bessel;
mod dd;
mod erf;
mod gamma;
mod real;

pub use bessel::bessel_k;
pub use dd::Dd;
pub use erf::{erfc, erfc_dd, erfcx};
pub use gamma::{gamma, inv_gamma1p, ln_gamma};
pub use real::Real;

/// Failure modes of the special-function layer.
///
/// These are programmer-input errors (domain violations), not convergence
/// failures: every series/continued fraction used here has a proven
/// convergence bound on its accepted domain, enforced by debug assertions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecFunError {
    #[error("bessel_k requires x > 0, got x = {x}")]
    BesselNonPositiveArgument { x: f64 },
    #[error("ln_gamma requires x > 0, got x = {x}")]
    LogGammaNonPositiveArgument { x: f64 },
}
