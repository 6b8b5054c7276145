//! Run configuration: one JSON schema shared by every subcommand, the
//! command-line flags that override its fields, and the `KRIGE_PRECISION`
//! environment variable.
//!
//! Precedence, highest first: explicit flag, environment (precision only),
//! configuration file, built-in default. A configuration is fully resolved
//! and validated *before* any computation, so a rejected run writes nothing.
//! Unknown keys in the file are errors; keys that the invoked command does
//! not use (e.g. `omega0` under `sweep`) are permitted and ignored, since
//! the schema is shared.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Deserialize;

use krigelab_core::experiments::{
    self, default_epsilon_grid, default_lemma1_grid, ExperimentError, ReferenceLimit, Scenario,
};
use krigelab_core::kernels::CovarianceModel;
use krigelab_core::kriging::{MeanModel, PrecisionPolicy, SiteConfiguration, SolveOptions};
use krigelab_core::spectral::{FcondVerdict, QuadratureBudget};

use crate::CliError;

/// Largest dyadic exponent a grid may reach; far beyond anything the noise
/// gates can use, but still a normal positive double.
const KMAX_HARD_LIMIT: u32 = 120;

/// The JSON run configuration. Every field is optional; the subcommand
/// supplies defaults and flags override. `deny_unknown_fields` enforces the
/// validate-before-compute contract at the parser.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// When present, must match the invoked subcommand (`sweep`, `band`,
    /// `fcond`, `lemma1`) — a guard against running a file under the wrong
    /// command.
    pub command: Option<String>,
    /// Catalog scenario id; mutually exclusive with an inline model.
    pub scenario: Option<String>,
    /// Inline covariance model, e.g. `{"family":"matern","nu":1.5,"alpha":1.0}`.
    pub model: Option<CovarianceModel>,
    /// Inline site geometry (requires `model`).
    pub sites: Option<SiteConfiguration>,
    /// Reference limit for the verdict of an inline scenario.
    pub reference: Option<f64>,
    /// Epsilon grid; `{"kmin":2,"kmax":12}` or `{"values":[0.25,0.125]}`.
    pub grid: Option<GridSpec>,
    pub mean: Option<MeanModel>,
    /// `"auto"`, `"native"`, or `"extended"`.
    pub precision: Option<String>,
    pub nugget: Option<f64>,
    /// Verdict tolerance: sweep limit vs reference, or lemma entry vs target.
    pub tolerance: Option<f64>,
    pub quadrature: Option<QuadratureConfig>,
    /// Band command: the scale at which the near residual is formed.
    pub epsilon: Option<f64>,
    /// Band command: ball radii to attribute error variance to.
    pub omega0: Option<Vec<f64>>,
    /// Fcond command: probe-ball radius `R`.
    pub radius: Option<f64>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_points: Option<usize>,
    /// Fcond command: `"consistent"` or `"violated"`, for CI exit codes.
    pub expect: Option<String>,
    /// Lemma command: instance id.
    pub instance: Option<String>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    /// `false` drops the `# generated,<unix-seconds>` header.
    pub timestamp: Option<bool>,
}

impl FileConfig {
    /// Load and parse, or an empty configuration when no path was given.
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    fn check_command(&self, invoked: &str) -> Result<(), CliError> {
        match self.command.as_deref() {
            None => Ok(()),
            Some(c) if c == invoked => Ok(()),
            Some(c) => Err(CliError::config(format!(
                "configuration file names command {c:?} but was run under {invoked:?}"
            ))),
        }
    }
}

/// Epsilon-grid specification: dyadic exponent range or explicit values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kmin: Option<u32>,
    pub kmax: Option<u32>,
    pub values: Option<Vec<f64>>,
}

/// Quadrature error targets for the spectral commands.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: Option<f64>,
    pub abs_floor: Option<f64>,
    pub max_panels: Option<usize>,
}

// ---------------------------------------------------------------------------
// Command-line argument groups (clap), shared between subcommands.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// JSON run configuration; explicit flags override its fields
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the CSV to this file instead of standard output
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Omit the `# generated,<unix-seconds>` header line
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct GridArgs {
    /// Largest scale of the dyadic grid, as the exponent in 2^-k
    #[arg(long, value_name = "K")]
    pub kmin: Option<u32>,
    /// Smallest scale of the dyadic grid, as the exponent in 2^-k
    #[arg(long, value_name = "K")]
    pub kmax: Option<u32>,
    /// Explicit strictly decreasing scales, comma separated
    #[arg(
        long,
        value_name = "E1,E2,...",
        value_delimiter = ',',
        conflicts_with_all = ["kmin", "kmax"]
    )]
    pub eps_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct SolveArgs {
    /// Arithmetic policy: auto, native, or extended (overrides KRIGE_PRECISION)
    #[arg(long, value_name = "POLICY")]
    pub precision: Option<String>,
    /// Observation-noise variance added to the Gram diagonal
    #[arg(long, value_name = "VAR")]
    pub nugget: Option<f64>,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct ScenarioArgs {
    /// Catalog scenario id (list them with `krigelab catalog`)
    #[arg(long, value_name = "ID")]
    pub scenario: Option<String>,
    /// Inline covariance model as JSON, e.g. '{"family":"exponential","alpha":1.0}'
    #[arg(long, value_name = "JSON", conflicts_with = "scenario", requires = "sites_json")]
    pub model_json: Option<String>,
    /// Inline site geometry as JSON (dim, near_offsets, far_anchor, far_offsets)
    #[arg(long, value_name = "JSON", conflicts_with = "scenario", requires = "model_json")]
    pub sites_json: Option<String>,
    /// Reference limit the verdict compares against (inline scenarios only)
    #[arg(long, value_name = "VALUE", conflicts_with = "scenario")]
    pub reference: Option<f64>,
}

// ---------------------------------------------------------------------------
// Resolved runs: everything a command needs, validated.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub scenario: Scenario,
    pub grid: Vec<f64>,
    pub mean: MeanModel,
    pub opts: SolveOptions,
    pub tolerance: f64,
    pub out: Option<PathBuf>,
    pub svg_out: Option<PathBuf>,
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct BandRun {
    pub scenario: Scenario,
    pub epsilon: f64,
    pub omega0: Vec<f64>,
    pub opts: SolveOptions,
    pub budget: QuadratureBudget,
    pub out: Option<PathBuf>,
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct FcondRun {
    /// What the header names as the density under test: the scenario id or
    /// the model family.
    pub label: String,
    pub model: CovarianceModel,
    pub radius: f64,
    pub omega_grid: Vec<f64>,
    pub expect: Option<FcondVerdict>,
    pub out: Option<PathBuf>,
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Lemma1Run {
    pub instance_id: String,
    pub grid: Vec<f64>,
    pub tolerance: f64,
    pub out: Option<PathBuf>,
    pub timestamp: Option<u64>,
}

// ---------------------------------------------------------------------------
// Shared resolution helpers.
// ---------------------------------------------------------------------------

fn parse_precision(source: &str, value: &str) -> Result<PrecisionPolicy, CliError> {
    value
        .parse::<PrecisionPolicy>()
        .map_err(|e| CliError::config(format!("{source}: {e}")))
}

/// Flag over `KRIGE_PRECISION` over file over `Auto`. A malformed
/// environment value is rejected even when a flag outranks it: silently
/// ignoring it would hide a broken CI setup.
pub fn resolve_precision(
    flag: Option<&str>,
    env: Option<&str>,
    file: Option<&str>,
) -> Result<PrecisionPolicy, CliError> {
    let env_parsed = env
        .map(|v| parse_precision("KRIGE_PRECISION", v))
        .transpose()?;
    if let Some(v) = flag {
        return parse_precision("--precision", v);
    }
    if let Some(p) = env_parsed {
        return Ok(p);
    }
    match file {
        Some(v) => parse_precision("configuration field \"precision\"", v),
        None => Ok(PrecisionPolicy::Auto),
    }
}

fn env_precision() -> Option<String> {
    std::env::var("KRIGE_PRECISION").ok()
}

fn resolve_solve_options(args: &SolveArgs, file: &FileConfig) -> Result<SolveOptions, CliError> {
    let precision = resolve_precision(
        args.precision.as_deref(),
        env_precision().as_deref(),
        file.precision.as_deref(),
    )?;
    let nugget = args.nugget.or(file.nugget).unwrap_or(0.0);
    if !(nugget >= 0.0 && nugget.is_finite()) {
        return Err(CliError::config(format!(
            "nugget must be a finite nonnegative variance, got {nugget}"
        )));
    }
    Ok(SolveOptions { precision, nugget })
}

fn dyadic_grid(kmin: u32, kmax: u32) -> Result<Vec<f64>, CliError> {
    if kmin > kmax {
        return Err(CliError::config(format!(
            "dyadic grid needs kmin <= kmax, got kmin={kmin} kmax={kmax}"
        )));
    }
    if kmax > KMAX_HARD_LIMIT {
        return Err(CliError::config(format!(
            "kmax={kmax} exceeds the supported limit {KMAX_HARD_LIMIT}"
        )));
    }
    Ok((kmin..=kmax).map(|k| 2.0f64.powi(-(k as i32))).collect())
}

fn explicit_grid(values: &[f64]) -> Result<Vec<f64>, CliError> {
    if values.is_empty() {
        return Err(CliError::config("explicit grid is empty"));
    }
    for pair in values.windows(2) {
        // Negated comparison on purpose: NaN entries must be rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(pair[1] < pair[0]) {
            return Err(CliError::config(format!(
                "explicit grid must be strictly decreasing, got {} before {}",
                pair[0], pair[1]
            )));
        }
    }
    if values.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(CliError::config(
            "explicit grid values must be positive and finite",
        ));
    }
    Ok(values.to_vec())
}

/// Grid precedence: `--eps-grid`, then `--kmin`/`--kmax` (each defaulting the
/// other from the command's defaults), then the file, then the default range.
fn resolve_grid(
    args: &GridArgs,
    file: Option<&GridSpec>,
    default_kmin: u32,
    default_kmax: u32,
) -> Result<Vec<f64>, CliError> {
    if let Some(values) = &args.eps_grid {
        return explicit_grid(values);
    }
    if args.kmin.is_some() || args.kmax.is_some() {
        return dyadic_grid(
            args.kmin.unwrap_or(default_kmin),
            args.kmax.unwrap_or(default_kmax),
        );
    }
    if let Some(spec) = file {
        return match (&spec.values, spec.kmin.is_some() || spec.kmax.is_some()) {
            (Some(_), true) => Err(CliError::config(
                "grid gives both explicit values and a dyadic range; choose one",
            )),
            (Some(values), false) => explicit_grid(values),
            (None, true) => dyadic_grid(
                spec.kmin.unwrap_or(default_kmin),
                spec.kmax.unwrap_or(default_kmax),
            ),
            (None, false) => Err(CliError::config(
                "grid object is empty; give values or kmin/kmax",
            )),
        };
    }
    dyadic_grid(default_kmin, default_kmax)
}

fn resolve_timestamp(no_timestamp_flag: bool, file: &FileConfig) -> Option<u64> {
    if no_timestamp_flag || file.timestamp == Some(false) {
        return None;
    }
    Some(
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    )
}

fn parse_inline_model(json: &str) -> Result<CovarianceModel, CliError> {
    let model: CovarianceModel = serde_json::from_str(json)
        .map_err(|e| CliError::config(format!("inline model: {e}")))?;
    model
        .validate()
        .map_err(|e| CliError::config(format!("inline model: {e}")))?;
    Ok(model)
}

fn inline_scenario(
    model: CovarianceModel,
    sites: SiteConfiguration,
    reference: Option<f64>,
) -> Result<Scenario, CliError> {
    sites
        .validate()
        .map_err(|e| CliError::config(format!("inline sites: {e}")))?;
    // Lag-zero evaluation proves the model accepts the geometry's dimension.
    model
        .eval_cov(&vec![0.0; sites.dim])
        .map_err(|e| CliError::config(format!("model/sites mismatch: {e}")))?;
    if let Some(value) = reference {
        if !value.is_finite() {
            return Err(CliError::config(format!(
                "reference limit must be finite, got {value}"
            )));
        }
    }
    Ok(Scenario {
        id: "user-scenario".to_string(),
        model,
        config: Some(sites),
        reference: reference.map(|value| ReferenceLimit {
            value,
            label: "user-supplied".to_string(),
        }),
        notes: String::new(),
        geometry_approximate: false,
        fcond_violating: false,
    })
}

fn catalog_scenario(id: &str) -> Result<Scenario, CliError> {
    experiments::find_scenario(id).map_err(|e| match e {
        ExperimentError::UnknownScenario { .. } => CliError::config(e.to_string()),
        other => CliError::config(other.to_string()),
    })
}

/// A scenario by id or assembled inline, flags before file.
fn resolve_scenario(args: &ScenarioArgs, file: &FileConfig) -> Result<Scenario, CliError> {
    if let Some(id) = &args.scenario {
        return catalog_scenario(id);
    }
    if let (Some(model_json), Some(sites_json)) = (&args.model_json, &args.sites_json) {
        let model = parse_inline_model(model_json)?;
        let sites: SiteConfiguration = serde_json::from_str(sites_json)
            .map_err(|e| CliError::config(format!("inline sites: {e}")))?;
        return inline_scenario(model, sites, args.reference.or(file.reference));
    }
    match (&file.scenario, &file.model, &file.sites) {
        (Some(_), Some(_), _) => Err(CliError::config(
            "configuration gives both a scenario id and an inline model; choose one",
        )),
        (Some(id), None, _) => catalog_scenario(id),
        (None, Some(model), Some(sites)) => {
            model
                .validate()
                .map_err(|e| CliError::config(format!("inline model: {e}")))?;
            inline_scenario(model.clone(), sites.clone(), args.reference.or(file.reference))
        }
        (None, Some(_), None) => Err(CliError::config(
            "inline model given without a sites object",
        )),
        (None, None, _) => Err(CliError::config(
            "no scenario: give --scenario <id> or an inline model and sites",
        )),
    }
}

fn resolve_tolerance(
    flag: Option<f64>,
    file: Option<f64>,
    default: f64,
) -> Result<f64, CliError> {
    let tolerance = flag.or(file).unwrap_or(default);
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(CliError::config(format!(
            "tolerance must be positive and finite, got {tolerance}"
        )));
    }
    Ok(tolerance)
}

fn resolve_budget(
    flag: &QuadratureConfig,
    file: Option<&QuadratureConfig>,
) -> Result<QuadratureBudget, CliError> {
    let defaults = QuadratureBudget::default();
    let pick_f64 = |a: Option<f64>, b: Option<f64>, d: f64| a.or(b).unwrap_or(d);
    let rel_tol = pick_f64(flag.rel_tol, file.and_then(|f| f.rel_tol), defaults.rel_tol);
    let abs_floor = pick_f64(
        flag.abs_floor,
        file.and_then(|f| f.abs_floor),
        defaults.abs_floor,
    );
    let max_panels = flag
        .max_panels
        .or(file.and_then(|f| f.max_panels))
        .unwrap_or(defaults.max_panels);
    if !(rel_tol > 0.0 && rel_tol.is_finite()) {
        return Err(CliError::config(format!(
            "quadrature rel_tol must be positive and finite, got {rel_tol}"
        )));
    }
    if !(abs_floor >= 0.0 && abs_floor.is_finite()) {
        return Err(CliError::config(format!(
            "quadrature abs_floor must be nonnegative and finite, got {abs_floor}"
        )));
    }
    if max_panels < 8 {
        return Err(CliError::config(format!(
            "quadrature max_panels must be at least 8, got {max_panels}"
        )));
    }
    Ok(QuadratureBudget { rel_tol, abs_floor, max_panels })
}

// ---------------------------------------------------------------------------
// Per-command argument structs and their resolution.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, clap::Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Mean structure: known-zero (simple kriging) or unknown-constant
    #[arg(long, value_name = "MEAN")]
    pub mean: Option<String>,
    /// Verdict tolerance on |extrapolated limit - reference limit|
    #[arg(long, value_name = "TOL")]
    pub tolerance: Option<f64>,
    /// Also write an SVG plot of ratio against log epsilon
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
}

fn parse_mean(value: &str) -> Result<MeanModel, CliError> {
    match value {
        "known-zero" => Ok(MeanModel::KnownZero),
        "unknown-constant" => Ok(MeanModel::UnknownConstant),
        other => Err(CliError::config(format!(
            "unknown mean model {other:?} (known-zero|unknown-constant)"
        ))),
    }
}

/// Default sweep verdict tolerance; individual documented limits are checked
/// more tightly by the acceptance suite.
pub const DEFAULT_SWEEP_TOLERANCE: f64 = 0.01;

pub fn resolve_sweep(args: &SweepArgs) -> Result<SweepRun, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    file.check_command("sweep")?;
    let scenario = resolve_scenario(&args.scenario, &file)?;
    let defaults = default_epsilon_grid();
    let (dkmin, dkmax) = dyadic_bounds(&defaults);
    let grid = resolve_grid(&args.grid, file.grid.as_ref(), dkmin, dkmax)?;
    let mean = match &args.mean {
        Some(value) => parse_mean(value)?,
        None => file.mean.unwrap_or(MeanModel::KnownZero),
    };
    let opts = resolve_solve_options(&args.solve, &file)?;
    let tolerance = resolve_tolerance(args.tolerance, file.tolerance, DEFAULT_SWEEP_TOLERANCE)?;
    let timestamp = resolve_timestamp(args.common.no_timestamp, &file);
    Ok(SweepRun {
        scenario,
        grid,
        mean,
        opts,
        tolerance,
        out: args.common.out.clone().or(file.out),
        svg_out: args.svg.clone().or(file.svg),
        timestamp,
    })
}

/// The dyadic exponents spanned by a default grid of the form `2^-k`.
fn dyadic_bounds(grid: &[f64]) -> (u32, u32) {
    let k_of = |e: f64| (-e.log2()).round() as u32;
    (k_of(grid[0]), k_of(grid[grid.len() - 1]))
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct BandArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Ball radii omega0, comma separated
    #[arg(long, value_name = "W1,W2,...", value_delimiter = ',')]
    pub omega0: Option<Vec<f64>>,
    /// Scale at which the near-set residual is formed
    #[arg(long, value_name = "EPS")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct QuadArgs {
    /// Relative quadrature error target
    #[arg(long, value_name = "TOL")]
    pub quad_rel_tol: Option<f64>,
    /// Absolute floor under the relative target
    #[arg(long, value_name = "ABS")]
    pub quad_abs_floor: Option<f64>,
    /// Panel budget per integral
    #[arg(long, value_name = "N")]
    pub quad_max_panels: Option<usize>,
}

impl QuadArgs {
    fn as_config(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.quad_rel_tol,
            abs_floor: self.quad_abs_floor,
            max_panels: self.quad_max_panels,
        }
    }
}

/// Default scale for spectral diagnostics: deep enough into the collapse for
/// the limiting band shares to show, well inside every model's solvable range.
pub const DEFAULT_BAND_EPSILON: f64 = 0.0009765625; // 2^-10

pub fn resolve_band(args: &BandArgs) -> Result<BandRun, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    file.check_command("band")?;
    let scenario = resolve_scenario(&args.scenario, &file)?;
    if scenario.config.is_none() {
        return Err(CliError::config(format!(
            "scenario {:?} has no site geometry; band attribution needs a near residual",
            scenario.id
        )));
    }
    let epsilon = args.eps.or(file.epsilon).unwrap_or(DEFAULT_BAND_EPSILON);
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CliError::config(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let omega0 = args
        .omega0
        .clone()
        .or_else(|| file.omega0.clone())
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    if omega0.is_empty() {
        return Err(CliError::config("omega0 list is empty"));
    }
    if omega0.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(CliError::config(
            "omega0 radii must be positive and finite",
        ));
    }
    let opts = resolve_solve_options(&args.solve, &file)?;
    let budget = resolve_budget(&args.quad.as_config(), file.quadrature.as_ref())?;
    let timestamp = resolve_timestamp(args.common.no_timestamp, &file);
    Ok(BandRun {
        scenario,
        epsilon,
        omega0,
        opts,
        budget,
        out: args.common.out.clone().or(file.out),
        timestamp,
    })
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct FcondArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Catalog scenario whose model is probed (its catalog flag sets the
    /// expected verdict)
    #[arg(long, value_name = "ID")]
    pub scenario: Option<String>,
    /// Model family: exponential, triangular, matern, tensor-exponential,
    /// space-time-stein2005 (doubly-matern via --model-json)
    #[arg(long, value_name = "FAMILY", conflicts_with = "scenario")]
    pub model: Option<String>,
    /// Inline model as JSON
    #[arg(long, value_name = "JSON", conflicts_with_all = ["scenario", "model"])]
    pub model_json: Option<String>,
    /// Matern smoothness parameter
    #[arg(long, value_name = "NU")]
    pub nu: Option<f64>,
    /// Inverse range (exponential, matern)
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
    /// First-axis inverse range (tensor-exponential)
    #[arg(long, value_name = "A1")]
    pub alpha1: Option<f64>,
    /// Second-axis inverse range (tensor-exponential)
    #[arg(long, value_name = "A2")]
    pub alpha2: Option<f64>,
    /// Probe-ball radius R
    #[arg(long, value_name = "R")]
    pub radius: Option<f64>,
    /// Smallest probed frequency
    #[arg(long, value_name = "W")]
    pub omega_min: Option<f64>,
    /// Largest probed frequency
    #[arg(long, value_name = "W")]
    pub omega_max: Option<f64>,
    /// Number of geometric grid points
    #[arg(long, value_name = "N")]
    pub omega_points: Option<usize>,
    /// Expected verdict (consistent|violated); a mismatch exits 1
    #[arg(long, value_name = "VERDICT")]
    pub expect: Option<String>,
}

fn parse_expect(value: &str) -> Result<FcondVerdict, CliError> {
    match value {
        "consistent" => Ok(FcondVerdict::ConsistentHeuristic),
        "violated" => Ok(FcondVerdict::Violated),
        other => Err(CliError::config(format!(
            "unknown expected verdict {other:?} (consistent|violated)"
        ))),
    }
}

/// Build a model from `--model <family>` plus its parameter flags, rejecting
/// parameters the family does not take.
fn model_from_family(args: &FcondArgs, family: &str) -> Result<CovarianceModel, CliError> {
    let reject = |flag: &str, set: bool| -> Result<(), CliError> {
        if set {
            Err(CliError::config(format!(
                "--{flag} does not apply to the {family} family"
            )))
        } else {
            Ok(())
        }
    };
    let model = match family {
        "exponential" => {
            reject("nu", args.nu.is_some())?;
            reject("alpha1", args.alpha1.is_some())?;
            reject("alpha2", args.alpha2.is_some())?;
            CovarianceModel::Exponential { alpha: args.alpha.unwrap_or(1.0) }
        }
        "triangular" => {
            reject("nu", args.nu.is_some())?;
            reject("alpha", args.alpha.is_some())?;
            reject("alpha1", args.alpha1.is_some())?;
            reject("alpha2", args.alpha2.is_some())?;
            CovarianceModel::Triangular
        }
        "matern" => {
            reject("alpha1", args.alpha1.is_some())?;
            reject("alpha2", args.alpha2.is_some())?;
            let nu = args
                .nu
                .ok_or_else(|| CliError::config("the matern family needs --nu"))?;
            CovarianceModel::Matern { nu, alpha: args.alpha.unwrap_or(1.0) }
        }
        "tensor-exponential" => {
            reject("nu", args.nu.is_some())?;
            reject("alpha", args.alpha.is_some())?;
            CovarianceModel::TensorExponential {
                alpha1: args.alpha1.unwrap_or(1.0),
                alpha2: args.alpha2.unwrap_or(1.0),
            }
        }
        "space-time-stein2005" => {
            reject("nu", args.nu.is_some())?;
            reject("alpha", args.alpha.is_some())?;
            reject("alpha1", args.alpha1.is_some())?;
            reject("alpha2", args.alpha2.is_some())?;
            CovarianceModel::SpaceTimeStein2005
        }
        other => {
            return Err(CliError::config(format!(
                "unknown model family {other:?}; doubly-matern takes its parameters \
                 as JSON via --model-json"
            )))
        }
    };
    model
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    Ok(model)
}

/// Default fcond frequency grid: three geometric decades starting at 1.
const DEFAULT_OMEGA_MIN: f64 = 1.0;
const DEFAULT_OMEGA_MAX: f64 = 1024.0;
const DEFAULT_OMEGA_POINTS: usize = 11;

pub fn resolve_fcond(args: &FcondArgs) -> Result<FcondRun, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    file.check_command("fcond")?;

    // Model source and its label, flags before file. A scenario source also
    // carries the catalog's expectation about the verdict.
    let mut catalog_expect = None;
    let (label, model) = if let Some(json) = &args.model_json {
        ("inline-model".to_string(), parse_inline_model(json)?)
    } else if let Some(family) = &args.model {
        (family.clone(), model_from_family(args, family)?)
    } else if let Some(id) = &args.scenario {
        let scenario = catalog_scenario(id)?;
        catalog_expect = Some(verdict_of_flag(scenario.fcond_violating));
        (scenario.id, scenario.model)
    } else if let Some(id) = &file.scenario {
        if file.model.is_some() {
            return Err(CliError::config(
                "configuration gives both a scenario id and an inline model; choose one",
            ));
        }
        let scenario = catalog_scenario(id)?;
        catalog_expect = Some(verdict_of_flag(scenario.fcond_violating));
        (scenario.id, scenario.model)
    } else if let Some(model) = &file.model {
        model
            .validate()
            .map_err(|e| CliError::config(format!("inline model: {e}")))?;
        (model.family_name().to_string(), model.clone())
    } else {
        return Err(CliError::config(
            "no model: give --scenario, --model <family>, or --model-json",
        ));
    };

    let radius = args.radius.or(file.radius).unwrap_or(1.0);
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CliError::config(format!(
            "probe radius must be positive and finite, got {radius}"
        )));
    }
    let omega_min = args.omega_min.or(file.omega_min).unwrap_or(DEFAULT_OMEGA_MIN);
    let omega_max = args.omega_max.or(file.omega_max).unwrap_or(DEFAULT_OMEGA_MAX);
    let omega_points = args
        .omega_points
        .or(file.omega_points)
        .unwrap_or(DEFAULT_OMEGA_POINTS);
    if !(omega_min > 0.0 && omega_min.is_finite() && omega_max > omega_min) {
        return Err(CliError::config(format!(
            "frequency range needs 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )));
    }
    if omega_points < 2 {
        return Err(CliError::config(format!(
            "omega_points must be at least 2, got {omega_points}"
        )));
    }
    let ratio = omega_max / omega_min;
    let omega_grid: Vec<f64> = (0..omega_points)
        .map(|i| omega_min * ratio.powf(i as f64 / (omega_points - 1) as f64))
        .collect();

    let expect = match &args.expect {
        Some(value) => Some(parse_expect(value)?),
        None => match &file.expect {
            Some(value) => Some(parse_expect(value)?),
            None => catalog_expect,
        },
    };
    let timestamp = resolve_timestamp(args.common.no_timestamp, &file);
    Ok(FcondRun {
        label,
        model,
        radius,
        omega_grid,
        expect,
        out: args.common.out.clone().or(file.out),
        timestamp,
    })
}

fn verdict_of_flag(fcond_violating: bool) -> FcondVerdict {
    if fcond_violating {
        FcondVerdict::Violated
    } else {
        FcondVerdict::ConsistentHeuristic
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Lemma1Args {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Instance id (list them with --list)
    #[arg(long, value_name = "ID")]
    pub instance: Option<String>,
    /// Entrywise tolerance of the convergence verdict
    #[arg(long, value_name = "TOL")]
    pub tolerance: Option<f64>,
    /// List the known instance ids and exit
    #[arg(long)]
    pub list: bool,
}

/// Default entrywise tolerance for the scaled-covariance verdict.
pub const DEFAULT_LEMMA_TOLERANCE: f64 = 0.02;

pub fn resolve_lemma1(args: &Lemma1Args) -> Result<Lemma1Run, CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    file.check_command("lemma1")?;
    let instance_id = args
        .instance
        .clone()
        .or_else(|| file.instance.clone())
        .ok_or_else(|| CliError::config("no instance: give --instance <id>"))?;
    let defaults = default_lemma1_grid();
    let (dkmin, dkmax) = dyadic_bounds(&defaults);
    let grid = resolve_grid(&args.grid, file.grid.as_ref(), dkmin, dkmax)?;
    let tolerance = resolve_tolerance(args.tolerance, file.tolerance, DEFAULT_LEMMA_TOLERANCE)?;
    let timestamp = resolve_timestamp(args.common.no_timestamp, &file);
    Ok(Lemma1Run {
        instance_id,
        grid,
        tolerance,
        out: args.common.out.clone().or(file.out),
        timestamp,
    })
}
