//! CSV rendering.
//!
//! One fixed numeric format everywhere: 12 significant digits in scientific
//! notation with a `.` decimal separator, so identical runs produce
//! identical bytes. Context lines (`# key,value`) precede the column header;
//! the footer block follows the body the same way. Body rows are plain CSV
//! with exactly the documented columns, so a reader that skips `#` comments
//! sees a rectangular table.

use krigelab_core::experiments::{
    ExtrapolationVerdict, Lemma1Report, ScreeningSweep,
};
use krigelab_core::spectral::{FcondProfile, FcondVerdict};

/// Twelve significant digits: one leading digit plus eleven after the point.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.11e}")
}

fn header(timestamp: Option<u64>, context: &[(&str, String)]) -> String {
    let mut out = String::new();
    if let Some(seconds) = timestamp {
        out.push_str(&format!("# generated,{seconds}\n"));
    }
    for (key, value) in context {
        out.push_str(&format!("# {key},{value}\n"));
    }
    out
}

/// The sweep verdict: against the reference when one exists, otherwise just
/// how the extrapolation went.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVerdict {
    /// Converged within tolerance of the documented reference limit.
    Pass,
    /// A reference exists and was missed (or the fit never converged).
    Fail,
    /// No reference; the extrapolation converged.
    Converged,
    /// No reference and the tail did not settle (or too few points).
    Inconclusive,
}

impl SweepVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVerdict::Pass => "pass",
            SweepVerdict::Fail => "fail",
            SweepVerdict::Converged => "converged",
            SweepVerdict::Inconclusive => "inconclusive",
        }
    }

    /// Only a missed reference colors the exit code.
    pub fn ci_ok(self) -> bool {
        self != SweepVerdict::Fail
    }
}

/// Judge a sweep: a documented reference must be hit within `tolerance` by a
/// converged extrapolation; without a reference the verdict merely reports
/// the fit.
pub fn judge_sweep(sweep: &ScreeningSweep, tolerance: f64) -> SweepVerdict {
    match (&sweep.extrapolation, &sweep.reference) {
        (Some(ext), Some(reference)) => {
            if ext.verdict == ExtrapolationVerdict::Converged
                && (ext.limit - reference.value).abs() <= tolerance
            {
                SweepVerdict::Pass
            } else {
                SweepVerdict::Fail
            }
        }
        (Some(ext), None) => match ext.verdict {
            ExtrapolationVerdict::Converged => SweepVerdict::Converged,
            ExtrapolationVerdict::Inconclusive => SweepVerdict::Inconclusive,
        },
        // A grid too short to extrapolate cannot miss the reference; exit 1
        // is reserved for an assessed miss.
        (None, _) => SweepVerdict::Inconclusive,
    }
}

/// Render a sweep: `scenario,epsilon,mse_near,mse_full,ratio,condition,precision`
/// rows, failed grid points as comments, then the footer block.
pub fn render_sweep(
    sweep: &ScreeningSweep,
    tolerance: f64,
    timestamp: Option<u64>,
) -> (String, SweepVerdict) {
    let verdict = judge_sweep(sweep, tolerance);
    let mut out = header(timestamp, &[]);
    out.push_str("scenario,epsilon,mse_near,mse_full,ratio,condition,precision\n");
    for p in &sweep.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sweep.scenario,
            sig12(p.epsilon),
            sig12(p.mse_near),
            sig12(p.mse_full),
            sig12(p.ratio),
            sig12(p.condition),
            p.precision,
        ));
    }
    for f in &sweep.failures {
        out.push_str(&format!("# failed,{},{}\n", sig12(f.epsilon), f.reason));
    }
    let (limit, uncertainty) = match &sweep.extrapolation {
        Some(ext) => (sig12(ext.limit), sig12(ext.uncertainty)),
        None => ("n/a".to_string(), "n/a".to_string()),
    };
    let reference = match &sweep.reference {
        Some(r) => sig12(r.value),
        None => "n/a".to_string(),
    };
    out.push_str(&format!("# extrapolated_limit,{limit}\n"));
    out.push_str(&format!("# uncertainty,{uncertainty}\n"));
    out.push_str(&format!("# reference_limit,{reference}\n"));
    out.push_str(&format!("# verdict,{}\n", verdict.as_str()));
    (out, verdict)
}

/// One band-attribution row: the share of residual error variance inside
/// the ball of radius `omega0`, with the quadrature error estimate.
pub struct BandRow {
    pub omega0: f64,
    pub value: f64,
    pub error_estimate: f64,
}

/// Render a band table: `omega0,value,error_estimate,verdict` under context
/// lines naming the scenario and scale. Rows carry `ok`; a non-convergent
/// quadrature would have aborted the command instead.
pub fn render_band(
    scenario: &str,
    epsilon: f64,
    rows: &[BandRow],
    timestamp: Option<u64>,
) -> String {
    let mut out = header(
        timestamp,
        &[
            ("scenario", scenario.to_string()),
            ("epsilon", sig12(epsilon)),
        ],
    );
    out.push_str("omega0,value,error_estimate,verdict\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},ok\n",
            sig12(row.omega0),
            sig12(row.value),
            sig12(row.error_estimate),
        ));
    }
    out
}

pub fn fcond_verdict_str(verdict: FcondVerdict) -> &'static str {
    match verdict {
        FcondVerdict::ConsistentHeuristic => "consistent",
        FcondVerdict::Violated => "violated",
    }
}

/// Render a flatness profile: `omega,value,error_estimate,verdict` rows (the
/// profile is sampled pointwise, so no quadrature estimate applies), then
/// the overall verdict. Consistency at finite frequencies is a heuristic,
/// and the footer says so.
pub fn render_fcond(
    label: &str,
    profile: &FcondProfile,
    expect: Option<FcondVerdict>,
    timestamp: Option<u64>,
) -> String {
    let mut out = header(
        timestamp,
        &[
            ("model", label.to_string()),
            ("radius", sig12(profile.radius)),
        ],
    );
    out.push_str("omega,value,error_estimate,verdict\n");
    for point in &profile.points {
        let violated = profile
            .violations
            .iter()
            .any(|&w| w.to_bits() == point.omega.to_bits());
        out.push_str(&format!(
            "{},{},n/a,{}\n",
            sig12(point.omega),
            sig12(point.c),
            if violated { "violated" } else { "ok" },
        ));
    }
    out.push_str("# note,consistency at finite frequencies is a heuristic and not a proof\n");
    if let Some(expected) = expect {
        out.push_str(&format!("# expected,{}\n", fcond_verdict_str(expected)));
    }
    out.push_str(&format!("# verdict,{}\n", fcond_verdict_str(profile.verdict)));
    out
}

/// Render a scaled-covariance convergence report:
/// `epsilon,max_abs_deviation,verdict` rows, where the row verdict says
/// whether the rounding-noise gate lets this scale count, then the verdict
/// block.
pub fn render_lemma1(report: &Lemma1Report, timestamp: Option<u64>) -> String {
    let mut out = header(timestamp, &[("instance", report.id.to_string())]);
    out.push_str("epsilon,max_abs_deviation,verdict\n");
    for point in &report.points {
        let verdict = if !point.symmetric_psd {
            "inconsistent"
        } else if point.trusted {
            "trusted"
        } else {
            "noise-limited"
        };
        out.push_str(&format!(
            "{},{},{}\n",
            sig12(point.epsilon),
            sig12(point.max_abs_deviation),
            verdict,
        ));
    }
    let verdict_epsilon = match report.verdict_epsilon {
        Some(e) => sig12(e),
        None => "n/a".to_string(),
    };
    let deviation = match report.deviation_at_verdict {
        Some(d) => sig12(d),
        None => "n/a".to_string(),
    };
    out.push_str(&format!("# verdict_epsilon,{verdict_epsilon}\n"));
    out.push_str(&format!("# deviation_at_verdict,{deviation}\n"));
    out.push_str(&format!(
        "# verdict,{}\n",
        if report.converged { "converged" } else { "not-converged" }
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use krigelab_core::experiments::{run_sweep, find_scenario};
    use krigelab_core::kriging::{MeanModel, SolveOptions};

    #[test]
    fn the_numeric_format_is_twelve_significant_digits() {
        assert_eq!(sig12(0.75), "7.50000000000e-1");
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(-0.001953125), "-1.95312500000e-3");
        assert_eq!(sig12(1.0e12), "1.00000000000e12");
        assert_eq!(sig12(0.0), "0.00000000000e0");
        assert_eq!(sig12(f64::NAN), "nan");
    }

    #[test]
    fn sweep_rendering_has_the_documented_columns_and_footer() {
        let scenario = find_scenario("fig1-triangular").unwrap();
        let grid = [0.25, 0.125, 0.0625, 0.03125];
        let sweep =
            run_sweep(&scenario, &grid, MeanModel::KnownZero, &SolveOptions::default()).unwrap();
        let (csv, _) = render_sweep(&sweep, 0.05, Some(1_000_000));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# generated,1000000");
        assert_eq!(
            lines[1],
            "scenario,epsilon,mse_near,mse_full,ratio,condition,precision"
        );
        assert_eq!(lines.len(), 2 + grid.len() + 4);
        for (row, eps) in lines[2..2 + grid.len()].iter().zip(grid) {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(fields.len(), 7);
            assert_eq!(fields[0], "fig1-triangular");
            assert_eq!(fields[1], sig12(eps));
            assert!(fields[6] == "native" || fields[6] == "extended");
        }
        assert!(lines[lines.len() - 4].starts_with("# extrapolated_limit,"));
        assert!(lines[lines.len() - 3].starts_with("# uncertainty,"));
        assert!(lines[lines.len() - 2].starts_with("# reference_limit,7.5"));
        assert_eq!(lines[lines.len() - 1], "# verdict,pass");
    }

    #[test]
    fn the_verdict_distinguishes_reference_misses_from_missing_references() {
        let scenario = find_scenario("fig1-triangular").unwrap();
        let grid = [0.25, 0.125, 0.0625, 0.03125];
        let mut sweep =
            run_sweep(&scenario, &grid, MeanModel::KnownZero, &SolveOptions::default()).unwrap();
        assert_eq!(judge_sweep(&sweep, 0.05), SweepVerdict::Pass);
        sweep.reference.as_mut().unwrap().value = 0.5;
        assert_eq!(judge_sweep(&sweep, 0.05), SweepVerdict::Fail);
        assert!(!judge_sweep(&sweep, 0.05).ci_ok());
        let fitted = sweep.extrapolation.take();
        assert_eq!(
            judge_sweep(&sweep, 0.05),
            SweepVerdict::Inconclusive,
            "an unassessed reference is not a miss"
        );
        sweep.extrapolation = fitted;
        sweep.reference = None;
        assert_eq!(judge_sweep(&sweep, 0.05), SweepVerdict::Converged);
        sweep.extrapolation = None;
        assert_eq!(judge_sweep(&sweep, 0.05), SweepVerdict::Inconclusive);
    }

    #[test]
    fn omitting_the_timestamp_drops_exactly_the_header_line() {
        let rows = [BandRow { omega0: 1.0, value: 0.25, error_estimate: 1e-10 }];
        let with = render_band("fig2a-matern32", 0.001, &rows, Some(42));
        let without = render_band("fig2a-matern32", 0.001, &rows, None);
        assert!(with.starts_with("# generated,42\n"));
        assert_eq!(with.lines().count(), without.lines().count() + 1);
        assert!(without.starts_with("# scenario,fig2a-matern32\n"));
        assert!(without.contains("omega0,value,error_estimate,verdict\n"));
    }
}
