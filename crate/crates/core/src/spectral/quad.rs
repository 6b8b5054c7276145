//! Adaptive Gauss–Kronrod quadrature with an oscillatory-tail accelerator.
//!
//! The workhorse is the 15-point Kronrod rule with its embedded 7-point
//! Gauss rule for error estimation, driven worst-panel-first by a heap.
//! Half-infinite ranges are compactified with a tangent substitution.
//! Cosine and sine transforms of algebraically decaying envelopes — where
//! naive truncation would need absurd cutoffs — are finished by summing
//! half-period panels between consecutive zeros of the oscillating factor
//! and accelerating the alternating partial sums with iterated Aitken
//! extrapolation.  Splitting at period boundaries is what exposes the
//! cancellation; plain adaptive panels never see it.

use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use super::SpectralError;

/// Hard cap on panels for a single adaptive pass.
pub const DEFAULT_MAX_PANELS: usize = 4096;

/// Cap on half-period panels in an oscillatory tail sum.
const MAX_HALF_PERIODS: usize = 600;

/// One quadrature outcome: value, conservative absolute error estimate,
/// and the number of integrand evaluations spent.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub(crate) fn zero() -> Self {
        QuadResult { value: 0.0, error: 0.0, evaluations: 0 }
    }

    /// Accumulate another piece of the same integral.
    pub(crate) fn absorb(&mut self, other: QuadResult) {
        self.value += other.value;
        self.error += other.error;
        self.evaluations += other.evaluations;
    }

    /// Accumulate a scaled piece: `self += scale * other`.
    pub(crate) fn absorb_scaled(&mut self, scale: f64, other: QuadResult) {
        self.value += scale * other.value;
        self.error += scale.abs() * other.error;
        self.evaluations += other.evaluations;
    }
}

// 15-point Kronrod abscissae on [-1, 1]; entries 1, 3, 5 and the centre are
// the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

// Weights of the embedded Gauss rule, matching XGK[1], XGK[3], XGK[5], centre.
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// Apply the Gauss–Kronrod pair once on [a, b].  Returns the Kronrod value
/// and an error estimate sharpened the way QUADPACK does it: the raw
/// Gauss/Kronrod discrepancy is damped against the integral of
/// |f - mean|, which keeps the estimate honest on oscillatory panels.
fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [0.0f64; 14];
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[2 * j] - reskh).abs() + (fv[2 * j + 1] - reskh).abs());
    }
    let value = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if round > err {
        err = round;
    }
    (value, err)
}

/// A panel in the refinement heap, ordered by error with the interval as a
/// deterministic tie-break.
#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| self.a.total_cmp(&other.a))
            .then_with(|| self.b.total_cmp(&other.b))
    }
}

/// Adaptive integration over the union of `breakpoints` windows (sorted,
/// at least two entries).  Seeding a panel per window lets callers pin
/// known features — kinks, density knots, oscillation zeros — so the
/// refinement never has to discover them.
pub fn adaptive_segments<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    breakpoints: &[f64],
    tol_abs: f64,
    max_panels: usize,
) -> Result<QuadResult, SpectralError> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    let mut total_err = 0.0f64;
    for w in breakpoints.windows(2) {
        // Negated comparison on purpose: NaN breakpoints are skipped too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(w[1] > w[0]) {
            continue;
        }
        let (value, error) = gk15(f, w[0], w[1]);
        evaluations += 15;
        total_err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }
    if heap.is_empty() {
        return Ok(QuadResult::zero());
    }
    while total_err > tol_abs && heap.len() < max_panels {
        let worst = heap.pop().expect("heap cannot be empty inside the loop");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            // Interval narrower than the floating-point grid; keep as is.
            heap.push(worst);
            break;
        }
        total_err -= worst.error;
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        evaluations += 30;
        total_err += e1 + e2;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Deterministic reduction: sum panels in interval order, not heap order.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    if error > tol_abs {
        return Err(SpectralError::NonConvergent { achieved: error, requested: tol_abs });
    }
    Ok(QuadResult { value, error, evaluations })
}

/// Convenience wrapper: adaptive integration of a single finite interval.
pub fn adaptive<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    tol_abs: f64,
    max_panels: usize,
) -> Result<QuadResult, SpectralError> {
    adaptive_segments(f, &[a, b], tol_abs, max_panels)
}

/// ∫_a^∞ f(x) dx for an envelope decaying at least like x^{-p}, p > 1,
/// via x = a + tan u.  The Jacobian is written as 1 + tan²u so that a
/// borderline 1/x² tail turns into a bounded integrand instead of a
/// 0·∞ product at the far endpoint.
pub fn half_line<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    tol_abs: f64,
    max_panels: usize,
) -> Result<QuadResult, SpectralError> {
    let g = |u: f64| {
        let t = u.tan();
        f(a + t) * (1.0 + t * t)
    };
    adaptive_segments(&g, &[0.0, FRAC_PI_2 * 0.5, FRAC_PI_2], tol_abs, max_panels)
}

/// Which oscillating factor multiplies the envelope in a tail transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Cos,
    Sin,
}

impl Phase {
    fn eval(self, x: f64) -> f64 {
        match self {
            Phase::Cos => x.cos(),
            Phase::Sin => x.sin(),
        }
    }

    /// k-th zero of the oscillating factor at unit frequency.
    fn zero(self, k: u64) -> f64 {
        match self {
            Phase::Cos => (k as f64 + 0.5) * PI,
            Phase::Sin => (k as f64 + 1.0) * PI,
        }
    }
}

/// Iterated Aitken Δ² extrapolation of a sequence of partial sums.
/// Returns the accelerated limit and a heuristic error: the change from
/// the previous extrapolation column (with the last in-column step as a
/// floor), which in practice brackets the true error for the alternating
/// sums produced by half-period splitting.
fn iterated_aitken(s: &[f64]) -> (f64, f64) {
    debug_assert!(s.len() >= 2);
    let mut cur = s.to_vec();
    let mut best = *cur.last().expect("nonempty sequence");
    let mut spread = (best - cur[cur.len() - 2]).abs();
    while cur.len() >= 3 {
        let mut next = Vec::with_capacity(cur.len() - 2);
        for i in 0..cur.len() - 2 {
            let d1 = cur[i + 1] - cur[i];
            let d2 = cur[i + 2] - cur[i + 1];
            let den = d2 - d1;
            let scale = cur[i + 2].abs().max(cur[i + 1].abs()).max(1e-300);
            if den.abs() <= 4.0 * f64::EPSILON * scale {
                // Differences at rounding level: the sums are already flat.
                next.push(cur[i + 2]);
            } else {
                next.push(cur[i + 2] - d2 * d2 / den);
            }
        }
        let new_best = *next.last().expect("next is nonempty when cur.len() >= 3");
        spread = (new_best - best).abs();
        best = new_best;
        cur = next;
    }
    (best, spread)
}

/// ∫_start^∞ phase(freq·ω) env(ω) dω for a smooth envelope with algebraic
/// decay.  Panels run between consecutive zeros of the oscillating factor;
/// the alternating partial sums are then accelerated.  This is the piece
/// that makes borderline tails (1/ω² envelopes, or frequencies produced by
/// nearly coincident lags) affordable.
pub fn oscillatory_tail<F: Fn(f64) -> f64 + ?Sized>(
    env: &F,
    freq: f64,
    phase: Phase,
    start: f64,
    tol_abs: f64,
) -> Result<QuadResult, SpectralError> {
    debug_assert!(freq > 0.0, "zero frequency belongs to half_line");
    let integrand = |w: f64| phase.eval(freq * w) * env(w);
    // First zero strictly beyond `start`.
    let mut k = ((start * freq / PI) as u64).saturating_sub(2);
    while phase.zero(k) / freq <= start {
        k += 1;
    }
    // Floor the per-panel target at the rounding level a Gauss–Kronrod
    // estimate can actually reach; the achieved errors are accumulated
    // honestly either way.
    let panel_tol = (tol_abs / 64.0).max(4e-16);
    let mut lo = start;
    let mut partials: Vec<f64> = Vec::new();
    let mut sum = 0.0f64;
    let mut quad_err = 0.0f64;
    let mut evaluations = 0usize;
    let mut calm = 0usize;
    for _ in 0..MAX_HALF_PERIODS {
        let hi = phase.zero(k) / freq;
        k += 1;
        let piece = adaptive(&integrand, lo, hi, panel_tol, 256)?;
        evaluations += piece.evaluations;
        quad_err += piece.error;
        sum += piece.value;
        partials.push(sum);
        lo = hi;
        if partials.len() >= 5 {
            let (est, aerr) = iterated_aitken(&partials);
            if aerr <= tol_abs * 0.5 {
                calm += 1;
                if calm >= 2 {
                    return Ok(QuadResult {
                        value: est,
                        error: aerr + quad_err,
                        evaluations,
                    });
                }
            } else {
                calm = 0;
            }
        }
    }
    let (_, aerr) = iterated_aitken(&partials);
    Err(SpectralError::NonConvergent { achieved: aerr + quad_err, requested: tol_abs })
}

/// A spectral density written, beyond `valid_from`, as
/// Σ scale·cos(freq·ω)·envelope(ω) with a smooth monotone envelope.
/// Almost every family has the single trivial part (freq 0, scale 1,
/// envelope = density); the triangular density (1−cos ω)/(πω²) is the one
/// that genuinely needs the split, because its own oscillation must be
/// combined with the transform's before the tail cancellation is visible.
pub struct TailDecomposition<'a> {
    pub envelope: &'a dyn Fn(f64) -> f64,
    pub parts: &'a [(f64, f64)],
    pub valid_from: f64,
}

/// ∫_0^∞ cos(x ω) density(ω) dω split into an adaptive head on [0, W] and
/// accelerated oscillatory tails, one per combined frequency
/// cos(xω)cos(aω) = ½cos((x+a)ω) + ½cos(|x−a|ω).
pub fn cosine_transform<F: Fn(f64) -> f64 + ?Sized>(
    density: &F,
    tail: &TailDecomposition<'_>,
    x: f64,
    knots: &[f64],
    tol_abs: f64,
    max_panels: usize,
) -> Result<QuadResult, SpectralError> {
    let x = x.abs();
    let cutoff = knots
        .iter()
        .fold(tail.valid_from.max(2.0), |acc, &kn| acc.max(2.0 * kn.abs()));
    let head_integrand = |w: f64| (x * w).cos() * density(w);
    let mut breaks: Vec<f64> = vec![0.0];
    breaks.extend(knots.iter().map(|kn| kn.abs()).filter(|&kn| kn > 0.0 && kn < cutoff));
    breaks.push(cutoff);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut out = adaptive_segments(&head_integrand, &breaks, tol_abs / 3.0, max_panels)?;
    let n_parts: usize = tail.parts.iter().map(|&(a, _)| if a == 0.0 { 1 } else { 2 }).sum();
    let tail_tol = tol_abs / (3.0 * n_parts.max(1) as f64);
    for &(a, scale) in tail.parts {
        let combos: &[(f64, f64)] = if a == 0.0 {
            &[(0.0, 1.0)]
        } else {
            &[(a, 0.5), (-a, 0.5)]
        };
        for &(shift, half) in combos {
            let freq = (x + shift).abs();
            let piece = if freq == 0.0 {
                half_line(tail.envelope, cutoff, tail_tol, max_panels)?
            } else {
                oscillatory_tail(tail.envelope, freq, Phase::Cos, cutoff, tail_tol)?
            };
            out.absorb_scaled(scale * half, piece);
        }
    }
    Ok(out)
}

/// ∫_0^∞ phase(x ω) env(ω) dω for an envelope whose tail beyond
/// `valid_from` is smooth and algebraically decaying with no oscillation
/// of its own (densities that oscillate need [`cosine_transform`] and a
/// genuine [`TailDecomposition`]).  At x = 0 the sine transform vanishes
/// and the cosine transform is a plain half-line integral.
pub fn oscillatory_transform<F: Fn(f64) -> f64 + ?Sized>(
    env: &F,
    x: f64,
    phase: Phase,
    knots: &[f64],
    valid_from: f64,
    tol_abs: f64,
    max_panels: usize,
) -> Result<QuadResult, SpectralError> {
    let x = x.abs();
    if x == 0.0 && phase == Phase::Sin {
        return Ok(QuadResult::zero());
    }
    let cutoff = knots
        .iter()
        .fold(valid_from.max(2.0), |acc, &kn| acc.max(2.0 * kn.abs()));
    let head_integrand = |w: f64| phase.eval(x * w) * env(w);
    let mut breaks: Vec<f64> = vec![0.0];
    breaks.extend(knots.iter().map(|kn| kn.abs()).filter(|&kn| kn > 0.0 && kn < cutoff));
    breaks.push(cutoff);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut out = adaptive_segments(&head_integrand, &breaks, tol_abs / 2.0, max_panels)?;
    let piece = if x == 0.0 {
        half_line(env, cutoff, tol_abs / 2.0, max_panels)?
    } else {
        oscillatory_tail(env, x, phase, cutoff, tol_abs / 2.0)?
    };
    out.absorb(piece);
    Ok(out)
}
