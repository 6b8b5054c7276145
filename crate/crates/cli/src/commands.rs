//! One function per subcommand. Each validates nothing (the configuration
//! module already did), computes everything, and only then returns rendered
//! artifacts — so a failing run never leaves a partial file. The boolean on
//! [`CommandResult`] is the CI verdict behind exit code 1.

use std::path::PathBuf;

use krigelab_core::experiments::{
    catalog, lemma1_instances, run_sweep, verify_lemma1, ExperimentError,
};
use krigelab_core::kriging::{self, KrigingError, Predictand};
use krigelab_core::spectral::{
    band_fraction, fcond_profile, FcondOptions, FrequencyBand, SpectralError, TrigPolynomial,
};

use crate::config::{BandRun, FcondRun, Lemma1Run, SweepRun};
use crate::report::{self, BandRow};
use crate::{svg, Artifact, CliError, CommandResult};

fn from_experiment(err: ExperimentError) -> CliError {
    match err {
        ExperimentError::UnknownScenario { .. }
        | ExperimentError::SpectralOnly { .. }
        | ExperimentError::InvalidGrid
        | ExperimentError::InvalidInput { .. } => CliError::config(err.to_string()),
        ExperimentError::Kriging(_)
        | ExperimentError::Kernel(_)
        | ExperimentError::Spectral(_)
        | ExperimentError::InsufficientData { .. } => CliError::numerical(err.to_string()),
    }
}

fn from_kriging(err: KrigingError) -> CliError {
    match err {
        KrigingError::EmptySites
        | KrigingError::InvalidConfiguration { .. }
        | KrigingError::DuplicateSites { .. }
        | KrigingError::CollidingSites { .. }
        | KrigingError::UnsupportedPredictand { .. } => CliError::config(err.to_string()),
        KrigingError::Kernel(_) | KrigingError::IllConditioned { .. } => {
            CliError::numerical(err.to_string())
        }
    }
}

fn from_spectral(err: SpectralError) -> CliError {
    match err {
        SpectralError::InvalidInput { .. } | SpectralError::UnsupportedReduction { .. } => {
            CliError::config(err.to_string())
        }
        SpectralError::NonConvergent { .. } => CliError::numerical(err.to_string()),
        SpectralError::Kernel(_) => CliError::numerical(err.to_string()),
        SpectralError::Kriging(inner) => from_kriging(inner),
    }
}

/// Sweep a scenario over its grid, extrapolate, judge against the reference.
pub fn cmd_sweep(run: &SweepRun) -> Result<CommandResult, CliError> {
    let sweep = run_sweep(&run.scenario, &run.grid, run.mean, &run.opts)
        .map_err(from_experiment)?;
    if sweep.points.is_empty() {
        let first = sweep
            .failures
            .first()
            .map(|f| f.reason.clone())
            .unwrap_or_else(|| "empty grid".to_string());
        return Err(CliError::numerical(format!(
            "no grid point survived; first failure: {first}"
        )));
    }
    let (csv, verdict) = report::render_sweep(&sweep, run.tolerance, run.timestamp);
    let mut artifacts = vec![Artifact { path: run.out.clone(), contents: csv }];
    if let Some(svg_path) = &run.svg_out {
        if sweep.points.len() < 2 {
            return Err(CliError::numerical(
                "an SVG plot needs at least two surviving grid points",
            ));
        }
        artifacts.push(Artifact {
            path: Some(svg_path.clone()),
            contents: svg::ratio_plot(&sweep),
        });
    }
    Ok(CommandResult { artifacts, ci_ok: verdict.ci_ok() })
}

/// Share of the near-residual error variance inside balls `b(omega0)`, at
/// one fixed scale.
pub fn cmd_band(run: &BandRun) -> Result<CommandResult, CliError> {
    let config = run
        .scenario
        .config
        .as_ref()
        .expect("band resolution requires a site geometry");
    let near = config
        .materialize_near(run.epsilon)
        .map_err(from_kriging)?;
    let solution = kriging::simple_krige(&run.scenario.model, &near, &Predictand::Value, &run.opts)
        .map_err(from_kriging)?;
    let residual = TrigPolynomial::residual_of_solution(&solution, &near).map_err(from_spectral)?;
    let mut rows = Vec::with_capacity(run.omega0.len());
    for &omega0 in &run.omega0 {
        let band = FrequencyBand::new(omega0).map_err(from_spectral)?;
        let fraction = band_fraction(&residual, &run.scenario.model, &band, &run.budget)
            .map_err(from_spectral)?;
        rows.push(BandRow {
            omega0,
            value: fraction.value,
            error_estimate: fraction.error,
        });
    }
    let csv = report::render_band(&run.scenario.id, run.epsilon, &rows, run.timestamp);
    Ok(CommandResult {
        artifacts: vec![Artifact { path: run.out.clone(), contents: csv }],
        ci_ok: true,
    })
}

/// Sampled low-frequency flatness profile with the heuristic verdict.
pub fn cmd_fcond(run: &FcondRun) -> Result<CommandResult, CliError> {
    let profile = fcond_profile(
        &run.model,
        run.radius,
        &run.omega_grid,
        &FcondOptions::default(),
    )
    .map_err(from_spectral)?;
    let ci_ok = run.expect.is_none_or(|expected| expected == profile.verdict);
    let csv = report::render_fcond(&run.label, &profile, run.expect, run.timestamp);
    Ok(CommandResult {
        artifacts: vec![Artifact { path: run.out.clone(), contents: csv }],
        ci_ok,
    })
}

/// Scaled-covariance convergence report for one named instance.
pub fn cmd_lemma1(run: &Lemma1Run) -> Result<CommandResult, CliError> {
    let instance = lemma1_instances()
        .into_iter()
        .find(|i| i.id == run.instance_id)
        .ok_or_else(|| {
            let known: Vec<&str> = lemma1_instances().iter().map(|i| i.id).collect();
            CliError::config(format!(
                "unknown instance {:?}; known instances: {}",
                run.instance_id,
                known.join(", ")
            ))
        })?;
    let report = verify_lemma1(&instance, &run.grid, run.tolerance).map_err(from_experiment)?;
    let ci_ok = report.converged;
    let csv = report::render_lemma1(&report, run.timestamp);
    Ok(CommandResult {
        artifacts: vec![Artifact { path: run.out.clone(), contents: csv }],
        ci_ok,
    })
}

/// The instance ids `--list` prints, one per line.
pub fn lemma1_instance_listing() -> String {
    let mut out = String::new();
    for instance in lemma1_instances() {
        out.push_str(&format!("{} ({n}x{n} limit)\n", instance.id, n = instance.size()));
    }
    out
}

/// The catalog as shipped: pretty-printed JSON, one scenario object per
/// entry, trailing newline. This function *is* the file-format definition;
/// the shipped `data/catalog.json` must match it byte for byte.
pub fn catalog_json() -> String {
    let mut text = serde_json::to_string_pretty(&catalog())
        .expect("the built-in catalog always serializes");
    text.push('\n');
    text
}

/// A short human table of the catalog: id, family, dimension, reference.
pub fn catalog_summary() -> String {
    let entries = catalog();
    let id_width = entries.iter().map(|s| s.id.len()).max().unwrap_or(0);
    let mut out = String::new();
    for s in &entries {
        let geometry = match &s.config {
            Some(c) => format!("{}-d, {} near / {} far", c.dim, c.near_offsets.len(),
                c.far_offsets.len()),
            None => "spectral only".to_string(),
        };
        let reference = match &s.reference {
            Some(r) => format!("limit {} = {:.6}", r.label, r.value),
            None => "no reference".to_string(),
        };
        out.push_str(&format!(
            "{:id_width$}  {:22} {:24} {}\n",
            s.id,
            s.model.family_name(),
            geometry,
            reference,
        ));
    }
    out
}

/// `catalog`: emit the shipped-format JSON, or with `check` compare a file
/// against it (a CI guard that the shipped copy is current).
pub fn cmd_catalog(
    out: Option<PathBuf>,
    check: Option<PathBuf>,
    summary: bool,
) -> Result<CommandResult, CliError> {
    if let Some(path) = check {
        let shipped = std::fs::read_to_string(&path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let current = catalog_json();
        let ci_ok = shipped == current;
        let message = if ci_ok {
            format!("{} matches the built-in catalog\n", path.display())
        } else {
            format!(
                "{} is stale: regenerate it with `krigelab catalog --out {}`\n",
                path.display(),
                path.display()
            )
        };
        return Ok(CommandResult {
            artifacts: vec![Artifact { path: None, contents: message }],
            ci_ok,
        });
    }
    let contents = if summary { catalog_summary() } else { catalog_json() };
    Ok(CommandResult {
        artifacts: vec![Artifact { path: out, contents }],
        ci_ok: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{
        resolve_band, resolve_fcond, resolve_lemma1, resolve_sweep, BandArgs, FcondArgs,
        GridArgs, Lemma1Args, ScenarioArgs, SweepArgs,
    };
    use crate::EXIT_CONFIG;

    fn sweep_args(id: &str, kmax: u32) -> SweepArgs {
        SweepArgs {
            scenario: ScenarioArgs { scenario: Some(id.to_string()), ..ScenarioArgs::default() },
            grid: GridArgs { kmin: Some(2), kmax: Some(kmax), eps_grid: None },
            ..SweepArgs::default()
        }
    }

    #[test]
    fn a_markov_sweep_passes_and_renders_exact_rows() {
        let run = resolve_sweep(&sweep_args("fig1-exponential", 8)).unwrap();
        let result = cmd_sweep(&run).unwrap();
        assert!(result.ci_ok);
        let csv = &result.artifacts[0].contents;
        for line in csv.lines().filter(|l| l.starts_with("fig1-exponential")) {
            let ratio: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
            assert!((ratio - 1.0).abs() <= 1e-10);
        }
        assert!(csv.contains("# verdict,pass"));
    }

    #[test]
    fn a_missed_reference_fails_the_run_but_still_renders() {
        let args = SweepArgs {
            scenario: ScenarioArgs {
                model_json: Some(r#"{"family":"triangular"}"#.to_string()),
                sites_json: Some(
                    r#"{"dim":1,"near_offsets":[[1.0]],"far_anchor":[1.0],"far_offsets":[[0.0],[1.0]]}"#
                        .to_string(),
                ),
                reference: Some(0.25),
                ..ScenarioArgs::default()
            },
            grid: GridArgs { kmin: Some(2), kmax: Some(10), eps_grid: None },
            ..SweepArgs::default()
        };
        let run = resolve_sweep(&args).unwrap();
        let result = cmd_sweep(&run).unwrap();
        assert!(!result.ci_ok);
        assert!(result.artifacts[0].contents.contains("# verdict,fail"));
    }

    #[test]
    fn band_fractions_are_shares_between_zero_and_one() {
        let args = BandArgs {
            scenario: ScenarioArgs {
                scenario: Some("fig2a-matern32".to_string()),
                ..ScenarioArgs::default()
            },
            omega0: Some(vec![0.5, 1.0, 2.0]),
            eps: Some(2.0f64.powi(-6)),
            ..BandArgs::default()
        };
        let result = cmd_band(&resolve_band(&args).unwrap()).unwrap();
        let csv = &result.artifacts[0].contents;
        let mut previous = 0.0;
        for line in csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with("omega0")) {
            let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!((0.0..=1.0).contains(&value), "share out of range: {line}");
            assert!(value >= previous - 1e-9, "shares must grow with the ball");
            previous = value;
        }
    }

    #[test]
    fn fcond_expectations_color_the_outcome() {
        let args = FcondArgs {
            model: Some("triangular".to_string()),
            expect: Some("violated".to_string()),
            ..FcondArgs::default()
        };
        let result = cmd_fcond(&resolve_fcond(&args).unwrap()).unwrap();
        assert!(result.ci_ok);
        assert!(result.artifacts[0].contents.contains("# verdict,violated"));

        let args = FcondArgs {
            model: Some("triangular".to_string()),
            expect: Some("consistent".to_string()),
            ..FcondArgs::default()
        };
        let result = cmd_fcond(&resolve_fcond(&args).unwrap()).unwrap();
        assert!(!result.ci_ok);
    }

    #[test]
    fn lemma_runs_report_convergence_and_unknown_instances_are_config_errors() {
        let args = Lemma1Args {
            instance: Some("fig3a-matern32".to_string()),
            grid: GridArgs { kmin: Some(2), kmax: Some(16), eps_grid: None },
            ..Lemma1Args::default()
        };
        let result = cmd_lemma1(&resolve_lemma1(&args).unwrap()).unwrap();
        assert!(result.ci_ok);
        let csv = &result.artifacts[0].contents;
        assert!(csv.starts_with("# generated,") || csv.starts_with("# instance,"));
        assert!(csv.contains("epsilon,max_abs_deviation,verdict"));
        assert!(csv.contains("# verdict,converged"));

        let args = Lemma1Args {
            instance: Some("no-such-instance".to_string()),
            ..Lemma1Args::default()
        };
        let err = cmd_lemma1(&resolve_lemma1(&args).unwrap()).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(err.to_string().contains("fig3a-matern32"));
    }

    #[test]
    fn the_catalog_check_flags_stale_copies() {
        let dir = std::env::temp_dir().join("krigelab-catalog-check-test");
        std::fs::create_dir_all(&dir).unwrap();
        let fresh = dir.join("fresh.json");
        std::fs::write(&fresh, catalog_json()).unwrap();
        let result = cmd_catalog(None, Some(fresh.clone()), false).unwrap();
        assert!(result.ci_ok);
        let stale = dir.join("stale.json");
        std::fs::write(&stale, "{}").unwrap();
        let result = cmd_catalog(None, Some(stale.clone()), false).unwrap();
        assert!(!result.ci_ok);
        std::fs::remove_dir_all(&dir).unwrap();

        let summary = catalog_summary();
        assert!(summary.contains("fig1-exponential"));
        assert!(summary.contains("spectral only"));
    }
}
