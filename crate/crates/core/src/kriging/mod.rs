//! Optimal linear prediction of `Z(0)` (or a directional derivative at 0)
//! from finitely many observation sites.
//!
//! The screening measurements drive site clusters into near-confluence
//! (`eps` down to 2^-30 and beyond), where the Gram matrix condition grows
//! like a power of `1/eps` and f64 solves silently lose every digit of the
//! small prediction variances being compared. The machinery here is built
//! around that failure mode:
//!
//! * sites carry exact double-double coordinates materialized from a
//!   `anchor + eps * offset` lattice, so lags between clustered sites are
//!   exact rather than rounded;
//! * solves run generically in f64 or double-double behind a precision
//!   policy, with a pivot-ratio condition estimate and a forward-error bound
//!   on the reported variance;
//! * no nugget is ever added implicitly — regularization would change the
//!   ratio being measured.

pub(crate) mod chol;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kernels::{kernel_derivative, kernel_derivative_dd, CovarianceModel, KernelError};
use crate::specfun::{Dd, Real};

/// A native solve is accepted by the automatic policy only below this
/// condition estimate; beyond it the solve is re-run in double-double.
pub const NATIVE_RETRY_CONDITION: f64 = 1e12;
/// A double-double solve beyond this condition estimate is refused outright:
/// better an error than a silently wrong ratio.
pub const EXTENDED_CONDITION_LIMIT: f64 = 1e24;
/// The automatic policy keeps a native result only when its forward-error
/// bound resolves the variance to this relative accuracy; the tightest
/// downstream use of a ratio demands ~1e-10.
const AUTO_RETRY_REL: f64 = 1e-10;
/// An extended-precision variance whose error bound exceeds this fraction of
/// its value is numerically meaningless and is reported as ill-conditioned.
const EXTENDED_MAX_REL: f64 = 1e-2;
/// Heuristic forward-error constant: pivoted Cholesky on our tiny systems
/// loses at most ~n^2 ulps through the factorization, and n <= 8 throughout.
const ERROR_BOUND_FACTOR: f64 = 100.0;

/// Errors from site handling and kriging solves.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KrigingError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("no observation sites")]
    EmptySites,
    #[error("invalid site configuration: {reason}")]
    InvalidConfiguration { reason: String },
    #[error("sites {i} and {j} coincide")]
    DuplicateSites { i: usize, j: usize },
    #[error("near and far sets collide when materialized at eps = {eps}")]
    CollidingSites { eps: f64 },
    #[error("Gram matrix numerically singular (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("unsupported predictand: {reason}")]
    UnsupportedPredictand { reason: String },
}

/// Which arithmetic a solve is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecisionPolicy {
    /// f64 first; re-run in double-double when the condition estimate or the
    /// variance error bound says f64 was not enough.
    #[default]
    Auto,
    /// f64 only (diagnostic mode: exposes what native precision does to the
    /// ratios).
    Native,
    /// Double-double only.
    Extended,
}

impl FromStr for PrecisionPolicy {
    type Err = KrigingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(PrecisionPolicy::Auto),
            "native" => Ok(PrecisionPolicy::Native),
            "extended" => Ok(PrecisionPolicy::Extended),
            other => Err(KrigingError::InvalidConfiguration {
                reason: format!("unknown precision policy {other:?} (auto|native|extended)"),
            }),
        }
    }
}

/// Which arithmetic actually produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    Native,
    Extended,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Native => "native",
            Precision::Extended => "extended",
        })
    }
}

/// Mean structure assumed by the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanModel {
    /// Simple kriging: mean known to be zero.
    KnownZero,
    /// Ordinary kriging: unknown constant mean, weights constrained to sum
    /// to one.
    UnknownConstant,
}

/// What is being predicted at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Predictand {
    /// `Z(0)`.
    Value,
    /// The directional derivative of `Z` at 0 along `direction`.
    Derivative { direction: Vec<f64> },
}

/// An observation site with exact extended-precision coordinates.
///
/// Built either from a lattice form `anchor + eps * offset` (the
/// materialization used by ε-sweeps, where both products and sums are exact
/// in double-double) or from fixed coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    native: Vec<f64>,
    extended: Vec<Dd>,
}

impl Site {
    pub fn from_lattice(anchor: &[f64], offset: &[f64], eps: f64) -> Site {
        let extended: Vec<Dd> = anchor
            .iter()
            .zip(offset)
            .map(|(&a, &o)| Dd::from(a) + Dd::from(o).mul_f64(eps))
            .collect();
        let native = extended.iter().map(|c| c.to_f64()).collect();
        Site { native, extended }
    }

    pub fn fixed(coords: &[f64]) -> Site {
        Site {
            native: coords.to_vec(),
            extended: coords.iter().map(|&c| Dd::from(c)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.native.len()
    }

    pub fn native_coords(&self) -> &[f64] {
        &self.native
    }
}

/// The site geometry of a screening experiment, in the symbolic form that
/// survives `eps -> 0`: a near cluster `{eps x_j}` collapsing on the origin
/// and a far cluster `{y0 + eps y_j}` collapsing on the anchor `y0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfiguration {
    pub dim: usize,
    pub near_offsets: Vec<Vec<f64>>,
    pub far_anchor: Vec<f64>,
    pub far_offsets: Vec<Vec<f64>>,
}

impl SiteConfiguration {
    pub fn validate(&self) -> Result<(), KrigingError> {
        let bad = |reason: String| KrigingError::InvalidConfiguration { reason };
        if self.dim == 0 {
            return Err(bad("dimension must be at least 1".into()));
        }
        if self.near_offsets.is_empty() {
            return Err(bad("near set must contain at least one offset".into()));
        }
        for (name, vecs) in [("near", &self.near_offsets), ("far", &self.far_offsets)] {
            for v in vecs.iter() {
                if v.len() != self.dim {
                    return Err(bad(format!(
                        "{name} offset {v:?} does not have dimension {}",
                        self.dim
                    )));
                }
            }
        }
        if self.far_anchor.len() != self.dim {
            return Err(bad(format!(
                "far anchor {:?} does not have dimension {}",
                self.far_anchor, self.dim
            )));
        }
        for x in &self.near_offsets {
            if x.iter().all(|&c| c == 0.0) {
                return Err(bad("near offsets must be nonzero".into()));
            }
        }
        for (i, a) in self.near_offsets.iter().enumerate() {
            for b in self.near_offsets.iter().skip(i + 1) {
                if a == b {
                    return Err(bad(format!("near offsets contain a duplicate: {a:?}")));
                }
            }
        }
        for (i, a) in self.far_offsets.iter().enumerate() {
            for b in self.far_offsets.iter().skip(i + 1) {
                if a == b {
                    return Err(bad(format!("far offsets contain a duplicate: {a:?}")));
                }
            }
        }
        if !self.far_offsets.is_empty() && self.far_anchor.iter().all(|&c| c == 0.0) {
            return Err(bad("far anchor must be nonzero".into()));
        }
        Ok(())
    }

    /// The collapsing cluster `N_eps = {eps x_j}`.
    pub fn materialize_near(&self, eps: f64) -> Result<Vec<Site>, KrigingError> {
        self.check_eps(eps)?;
        let zero = vec![0.0; self.dim];
        let sites: Vec<Site> = self
            .near_offsets
            .iter()
            .map(|x| Site::from_lattice(&zero, x, eps))
            .collect();
        reject_collisions(&sites, eps)?;
        Ok(sites)
    }

    /// `N_eps` followed by `F_eps = {y0 + eps y_j}`, rejecting any `eps`
    /// where the two clusters touch (no silent deduplication).
    pub fn materialize_full(&self, eps: f64) -> Result<Vec<Site>, KrigingError> {
        self.check_eps(eps)?;
        let zero = vec![0.0; self.dim];
        let mut sites: Vec<Site> = self
            .near_offsets
            .iter()
            .map(|x| Site::from_lattice(&zero, x, eps))
            .collect();
        sites.extend(
            self.far_offsets
                .iter()
                .map(|y| Site::from_lattice(&self.far_anchor, y, eps)),
        );
        reject_collisions(&sites, eps)?;
        Ok(sites)
    }

    fn check_eps(&self, eps: f64) -> Result<(), KrigingError> {
        self.validate()?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(KrigingError::InvalidConfiguration {
                reason: format!("eps must be positive and finite, got {eps}"),
            });
        }
        Ok(())
    }
}

fn reject_collisions(sites: &[Site], eps: f64) -> Result<(), KrigingError> {
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            if sites[i].extended == sites[j].extended {
                return Err(KrigingError::CollidingSites { eps });
            }
        }
    }
    Ok(())
}

/// A solved prediction problem.
#[derive(Debug, Clone)]
pub struct KrigingSolution {
    pub weights: Vec<f64>,
    /// Minimal prediction error variance (clamped at zero).
    pub mse: f64,
    /// Conservative forward-error bound on `mse` from the solve itself.
    pub mse_error_bound: f64,
    pub predictand: Predictand,
    pub condition_estimate: f64,
    pub precision_regime: Precision,
    pub mean_model: MeanModel,
}

/// Solver options. `Default` is the automatic precision policy and no
/// nugget; a nonzero nugget is an explicit opt-in that changes the quantity
/// being measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub precision: PrecisionPolicy,
    pub nugget: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            precision: PrecisionPolicy::Auto,
            nugget: 0.0,
        }
    }
}

/// Scalar plumbing that lets one solve implementation run in either
/// precision.
trait KrigeScalar: Real {
    const REGIME: Precision;
    fn coords(site: &Site) -> &[Self];
    fn cov(model: &CovarianceModel, lag: &[Self]) -> Result<Self, KernelError>;
    fn deriv(
        model: &CovarianceModel,
        lag: &[Self],
        dir: &[f64],
    ) -> Result<(Self, Self), KernelError>;
}

impl KrigeScalar for f64 {
    const REGIME: Precision = Precision::Native;
    fn coords(site: &Site) -> &[f64] {
        &site.native
    }
    fn cov(model: &CovarianceModel, lag: &[f64]) -> Result<f64, KernelError> {
        model.eval_cov(lag)
    }
    fn deriv(
        model: &CovarianceModel,
        lag: &[f64],
        dir: &[f64],
    ) -> Result<(f64, f64), KernelError> {
        let d = kernel_derivative(model, lag, dir)?;
        Ok((d.first, d.second))
    }
}

impl KrigeScalar for Dd {
    const REGIME: Precision = Precision::Extended;
    fn coords(site: &Site) -> &[Dd] {
        &site.extended
    }
    fn cov(model: &CovarianceModel, lag: &[Dd]) -> Result<Dd, KernelError> {
        model.eval_cov_dd(lag)
    }
    fn deriv(model: &CovarianceModel, lag: &[Dd], dir: &[f64]) -> Result<(Dd, Dd), KernelError> {
        kernel_derivative_dd(model, lag, dir)
    }
}

struct RawSolution {
    weights: Vec<f64>,
    mse_raw: f64,
    condition: f64,
    error_bound: f64,
    precision: Precision,
}

/// Gram matrix, cross-covariance vector, and predictand variance.
fn assemble<R: KrigeScalar>(
    model: &CovarianceModel,
    sites: &[Site],
    target: &Predictand,
    nugget: f64,
) -> Result<(Vec<R>, Vec<R>, R), KrigingError> {
    let n = sites.len();
    let dim = sites[0].dim();
    let mut gram = vec![R::zero(); n * n];
    let mut lagbuf = vec![R::zero(); dim];
    for i in 0..n {
        for j in 0..=i {
            let si = R::coords(&sites[i]);
            let sj = R::coords(&sites[j]);
            for c in 0..dim {
                lagbuf[c] = si[c] - sj[c];
            }
            let mut v = R::cov(model, &lagbuf)?;
            if i == j {
                v = v + R::from_f64(nugget);
            }
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }

    // Cross-covariances with the predictand at the origin. For a derivative
    // target D_u Z(0) the sign convention is fixed by the difference
    // quotient cov(Z(s), [Z(h u) - Z(0)]/h) = [K(s - h u) - K(s)]/h, whose
    // h -> 0 limit is minus the directional derivative of K at s.
    let mut rhs = vec![R::zero(); n];
    let k0;
    match target {
        Predictand::Value => {
            for (i, site) in sites.iter().enumerate() {
                rhs[i] = R::cov(model, R::coords(site))?;
            }
            k0 = R::cov(model, &vec![R::zero(); dim])?;
        }
        Predictand::Derivative { direction } => {
            if direction.len() != dim {
                return Err(KrigingError::InvalidConfiguration {
                    reason: format!(
                        "derivative direction {direction:?} does not match site dimension {dim}"
                    ),
                });
            }
            for (i, site) in sites.iter().enumerate() {
                let (first, _) = R::deriv(model, R::coords(site), direction)?;
                rhs[i] = -first;
            }
            let (_, second) = R::deriv(model, &vec![R::zero(); dim], direction)?;
            k0 = -second;
        }
    }
    Ok((gram, rhs, k0))
}

fn solve_in<R: KrigeScalar>(
    model: &CovarianceModel,
    sites: &[Site],
    target: &Predictand,
    mean: MeanModel,
    nugget: f64,
) -> Result<RawSolution, KrigingError> {
    let n = sites.len();
    let (gram, rhs, k0) = assemble::<R>(model, sites, target, nugget)?;

    let (weights_r, mse_r, condition) = match mean {
        MeanModel::KnownZero => {
            let f = chol::factor(&gram, n).map_err(|b| KrigingError::IllConditioned {
                condition: b.condition,
            })?;
            let w = f.solve(&rhs);
            let mut acc = k0;
            for (wi, ki) in w.iter().zip(&rhs) {
                acc = acc - *wi * *ki;
            }
            (w, acc, f.condition)
        }
        MeanModel::UnknownConstant => {
            if matches!(target, Predictand::Derivative { .. }) {
                return Err(KrigingError::UnsupportedPredictand {
                    reason: "ordinary kriging is defined here for the value predictand only"
                        .into(),
                });
            }
            ordinary_solve(&gram, &rhs, k0, n)?
        }
    };

    let condition = condition.max(1.0);
    let k0_f = k0.to_f64();
    let error_bound = ERROR_BOUND_FACTOR * R::UNIT_ROUNDOFF * condition * k0_f.abs();
    Ok(RawSolution {
        weights: weights_r.iter().map(|w| w.to_f64()).collect(),
        mse_raw: mse_r.to_f64(),
        condition,
        error_bound,
        precision: R::REGIME,
    })
}

/// Ordinary kriging via the increment reparameterization: with `lambda_n =
/// 1 - sum(v)` the constrained problem becomes an unconstrained SPD solve on
/// increments `Z(s_i) - Z(s_n)`, whose covariances stay well-scaled as the
/// cluster collapses.
fn ordinary_solve<R: KrigeScalar>(
    gram: &[R],
    rhs: &[R],
    k0: R,
    n: usize,
) -> Result<(Vec<R>, R, f64), KrigingError> {
    if n == 1 {
        // Unbiasedness forces the single weight to one.
        let mse = k0 - rhs[0] - rhs[0] + gram[0];
        return Ok((vec![R::one()], mse, 1.0));
    }
    let m = n - 1;
    let mut b = vec![R::zero(); m * m];
    for i in 0..m {
        for j in 0..m {
            b[i * m + j] = gram[i * n + j] - gram[i * n + (n - 1)] - gram[j * n + (n - 1)]
                + gram[(n - 1) * n + (n - 1)];
        }
    }
    let mut r = vec![R::zero(); m];
    for i in 0..m {
        r[i] = (rhs[i] - rhs[n - 1]) - (gram[i * n + (n - 1)] - gram[(n - 1) * n + (n - 1)]);
    }
    let f = chol::factor(&b, m).map_err(|br| KrigingError::IllConditioned {
        condition: br.condition,
    })?;
    let v = f.solve(&r);

    let mut lambda = vec![R::zero(); n];
    let mut tail = R::one();
    for i in 0..m {
        lambda[i] = v[i];
        tail = tail - v[i];
    }
    lambda[n - 1] = tail;

    // mse = K0 - 2 lambda'k + lambda'C lambda, evaluated in working precision.
    let mut mse = k0;
    for i in 0..n {
        mse = mse - (lambda[i] * rhs[i]).scale(2.0);
        for j in 0..n {
            mse = mse + lambda[i] * gram[i * n + j] * lambda[j];
        }
    }
    Ok((lambda, mse, f.condition))
}

fn finalize(
    raw: RawSolution,
    target: &Predictand,
    mean: MeanModel,
) -> KrigingSolution {
    KrigingSolution {
        weights: raw.weights,
        mse: raw.mse_raw.max(0.0),
        mse_error_bound: raw.error_bound,
        predictand: target.clone(),
        condition_estimate: raw.condition,
        precision_regime: raw.precision,
        mean_model: mean,
    }
}

fn krige(
    model: &CovarianceModel,
    sites: &[Site],
    target: &Predictand,
    mean: MeanModel,
    opts: &SolveOptions,
) -> Result<KrigingSolution, KrigingError> {
    if sites.is_empty() {
        return Err(KrigingError::EmptySites);
    }
    let dim = sites[0].dim();
    if sites.iter().any(|s| s.dim() != dim) {
        return Err(KrigingError::InvalidConfiguration {
            reason: "sites have mixed dimensions".into(),
        });
    }
    model.validate()?;

    match opts.precision {
        PrecisionPolicy::Native => {
            let raw = solve_in::<f64>(model, sites, target, mean, opts.nugget)?;
            Ok(finalize(raw, target, mean))
        }
        PrecisionPolicy::Extended => {
            let raw = solve_in::<Dd>(model, sites, target, mean, opts.nugget)?;
            accept_extended(raw, target, mean)
        }
        PrecisionPolicy::Auto => {
            match solve_in::<f64>(model, sites, target, mean, opts.nugget) {
                Ok(raw)
                    if raw.condition <= NATIVE_RETRY_CONDITION
                        && raw.mse_raw > 0.0
                        && raw.error_bound <= AUTO_RETRY_REL * raw.mse_raw =>
                {
                    Ok(finalize(raw, target, mean))
                }
                Ok(_) | Err(KrigingError::IllConditioned { .. }) => {
                    let raw = solve_in::<Dd>(model, sites, target, mean, opts.nugget)?;
                    accept_extended(raw, target, mean)
                }
                Err(other) => Err(other),
            }
        }
    }
}

fn accept_extended(
    raw: RawSolution,
    target: &Predictand,
    mean: MeanModel,
) -> Result<KrigingSolution, KrigingError> {
    if raw.condition > EXTENDED_CONDITION_LIMIT
        || raw.mse_raw <= 0.0
        || raw.error_bound > EXTENDED_MAX_REL * raw.mse_raw
    {
        return Err(KrigingError::IllConditioned {
            condition: raw.condition,
        });
    }
    Ok(finalize(raw, target, mean))
}

/// The covariance matrix `K(s_i - s_j)` of a site list.
pub fn gram_matrix(
    model: &CovarianceModel,
    sites: &[Site],
) -> Result<GramMatrix, KrigingError> {
    if sites.is_empty() {
        return Err(KrigingError::EmptySites);
    }
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            if sites[i].extended == sites[j].extended {
                return Err(KrigingError::DuplicateSites { i, j });
            }
        }
    }
    let (data, _, _) = assemble::<f64>(model, sites, &Predictand::Value, 0.0)?;
    Ok(GramMatrix {
        n: sites.len(),
        data,
    })
}

/// Row-major symmetric covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl GramMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Best linear prediction with known zero mean.
pub fn simple_krige(
    model: &CovarianceModel,
    sites: &[Site],
    target: &Predictand,
    opts: &SolveOptions,
) -> Result<KrigingSolution, KrigingError> {
    krige(model, sites, target, MeanModel::KnownZero, opts)
}

/// Best linear unbiased prediction of `Z(0)` under an unknown constant mean.
pub fn ordinary_krige(
    model: &CovarianceModel,
    sites: &[Site],
    opts: &SolveOptions,
) -> Result<KrigingSolution, KrigingError> {
    krige(model, sites, &Predictand::Value, MeanModel::UnknownConstant, opts)
}

/// One measurement of the screening effect at a fixed `eps`.
#[derive(Debug, Clone)]
pub struct ScreeningPoint {
    pub epsilon: f64,
    pub mse_near: f64,
    pub mse_full: f64,
    /// `mse(N u F) / mse(N)`.
    pub ratio: f64,
    /// Conservative bound on the solve-induced error of `ratio`.
    pub ratio_error_bound: f64,
    /// The larger of the two condition estimates.
    pub condition: f64,
    /// Extended if either solve ran extended.
    pub precision: Precision,
}

/// `mse(N_eps u F_eps) / mse(N_eps)` for the configured geometry.
pub fn screening_ratio(
    model: &CovarianceModel,
    config: &SiteConfiguration,
    eps: f64,
    target: &Predictand,
    mean: MeanModel,
    opts: &SolveOptions,
) -> Result<ScreeningPoint, KrigingError> {
    let near = config.materialize_near(eps)?;
    let sol_near = krige(model, &near, target, mean, opts)?;
    if sol_near.mse <= 0.0 {
        return Err(KrigingError::IllConditioned {
            condition: sol_near.condition_estimate,
        });
    }
    if config.far_offsets.is_empty() {
        // Identical numerator and denominator.
        return Ok(ScreeningPoint {
            epsilon: eps,
            mse_near: sol_near.mse,
            mse_full: sol_near.mse,
            ratio: 1.0,
            ratio_error_bound: 0.0,
            condition: sol_near.condition_estimate,
            precision: sol_near.precision_regime,
        });
    }
    let full = config.materialize_full(eps)?;
    let sol_full = krige(model, &full, target, mean, opts)?;
    let ratio = sol_full.mse / sol_near.mse;
    let ratio_error_bound =
        (sol_full.mse_error_bound + ratio * sol_near.mse_error_bound) / sol_near.mse;
    Ok(ScreeningPoint {
        epsilon: eps,
        mse_near: sol_near.mse,
        mse_full: sol_full.mse,
        ratio,
        ratio_error_bound,
        condition: sol_near.condition_estimate.max(sol_full.condition_estimate),
        precision: sol_near.precision_regime.max(sol_full.precision_regime),
    })
}

/// Verdict of the derivative-information diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyVerdict {
    /// The near set determines the derivative in the limit.
    Consistent,
    /// Prediction error variance stays bounded away from zero.
    NotConsistent,
    /// The field has no mean-square derivative along that direction.
    NotDifferentiable,
}

/// Error-variance sequence for predicting a directional derivative at the
/// origin from the collapsing near set alone.
#[derive(Debug, Clone)]
pub struct DerivativeConsistency {
    /// One BLP error variance per grid point, parallel to the input grid.
    pub error_variances: Vec<f64>,
    pub derivative_variance: f64,
    pub verdict: ConsistencyVerdict,
}

/// A sequence counts as consistent when the terminal error variance falls
/// below this fraction of the derivative variance (and is still falling).
const CONSISTENCY_FRACTION: f64 = 0.2;

pub fn derivative_consistency(
    model: &CovarianceModel,
    config: &SiteConfiguration,
    direction: &[f64],
    eps_grid: &[f64],
    opts: &SolveOptions,
) -> Result<DerivativeConsistency, KrigingError> {
    config.validate()?;
    if eps_grid.is_empty() {
        return Err(KrigingError::InvalidConfiguration {
            reason: "empty eps grid".into(),
        });
    }
    let zero = vec![0.0; config.dim];
    let var = match kernel_derivative(model, &zero, direction) {
        Ok(d) => -d.second,
        Err(KernelError::NotDifferentiable { .. }) => {
            return Ok(DerivativeConsistency {
                error_variances: Vec::new(),
                derivative_variance: f64::NAN,
                verdict: ConsistencyVerdict::NotDifferentiable,
            });
        }
        Err(e) => return Err(e.into()),
    };

    let target = Predictand::Derivative {
        direction: direction.to_vec(),
    };
    let mut mses = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let sites = config.materialize_near(eps)?;
        let sol = krige(model, &sites, &target, MeanModel::KnownZero, opts)?;
        mses.push(sol.mse);
    }
    let first = mses[0];
    let last = *mses.last().expect("nonempty grid");
    let verdict = if last < CONSISTENCY_FRACTION * var && last < first {
        ConsistencyVerdict::Consistent
    } else {
        ConsistencyVerdict::NotConsistent
    };
    Ok(DerivativeConsistency {
        error_variances: mses,
        derivative_variance: var,
        verdict,
    })
}
