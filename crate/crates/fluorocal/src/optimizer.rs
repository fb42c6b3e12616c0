//! Quasi-Newton minimization of smooth unconstrained objectives.
//!
//! Dense BFGS on the inverse Hessian with a strong-Wolfe line search
//! (sufficient decrease plus curvature). The parameter count here is at most
//! a few hundred, so the full dense approximation is the right tool; limited
//! memory variants are deliberately out of scope. Runs are exactly
//! deterministic: identical inputs give bit-identical reports.

use crate::error::Error;
use crate::grid::SuperpixelGrid;
use crate::Result;

/// Stopping tolerances and iteration budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Minimum relative parameter-step norm.
    pub tol_step: f64,
    /// Minimum relative objective decrease.
    pub tol_objective: f64,
    pub max_iterations: usize,
    pub max_evaluations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            tol_step: 1e-7,
            tol_objective: 1e-7,
            max_iterations: 100_000,
            max_evaluations: 500_000,
        }
    }
}

impl OptimizerSettings {
    fn validate(&self) -> Result<()> {
        if !(self.tol_step > 0.0 && self.tol_objective > 0.0) {
            return Err(Error::InvalidConfig(
                "optimizer tolerances must be positive".into(),
            ));
        }
        if self.max_iterations == 0 || self.max_evaluations == 0 {
            return Err(Error::InvalidConfig(
                "optimizer limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    StepTolerance,
    ObjectiveTolerance,
    GradientTolerance,
    IterationLimit,
    EvaluationLimit,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::StepTolerance => "step-tolerance",
            Termination::ObjectiveTolerance => "objective-tolerance",
            Termination::GradientTolerance => "gradient-tolerance",
            Termination::IterationLimit => "iteration-limit",
            Termination::EvaluationLimit => "evaluation-limit",
        }
    }
}

/// Outcome of a minimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    /// Bias first, then the per-superpixel weights (for training problems);
    /// in general just the final parameter vector.
    pub final_parameters: Vec<f64>,
    pub final_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

/// Published starting point for training: zero bias, unit weights. Sensible
/// when counts have been pre-scaled to roughly one count per atom.
pub fn initial_beta(grid: &SuperpixelGrid) -> Vec<f64> {
    let mut p = vec![1.0; grid.n() + 1];
    p[0] = 0.0;
    p
}

// Relative gradient-norm stop, strictly tighter than the step/objective
// tolerances on quadratics.
const GRAD_TOL: f64 = 1e-9;
const WOLFE_C1: f64 = 1e-4;
// Tight curvature constant: with the secant interpolation this costs about
// one extra probe per iteration and keeps the steps near the ray minimizer,
// which is what lets BFGS build accurate curvature on quadratics.
const WOLFE_C2: f64 = 0.1;

struct Probe {
    alpha: f64,
    value: f64,
    gradient: Vec<f64>,
    point: Vec<f64>,
}

/// Minimize a value-and-gradient objective from the given starting point.
///
/// Limit hits are reported through the termination tag, not as errors;
/// non-finite objective values or gradients abort with a diagnostic.
pub fn minimize<F>(
    mut objective: F,
    initial: &[f64],
    settings: &OptimizerSettings,
) -> Result<OptimizationReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    settings.validate()?;
    let n = initial.len();
    let mut x = initial.to_vec();
    let (mut fx, mut gx) = objective(&x)?;
    let mut evaluations: usize = 1;
    check_finite(fx, &gx)?;

    let mut h_inv = identity(n);
    let mut scale_pending = true;
    let mut iterations = 0usize;

    let termination = loop {
        let gnorm = norm(&gx);
        if gnorm <= GRAD_TOL * fx.abs().max(1.0) {
            break Termination::GradientTolerance;
        }
        if iterations >= settings.max_iterations {
            break Termination::IterationLimit;
        }
        if evaluations >= settings.max_evaluations {
            break Termination::EvaluationLimit;
        }

        let mut direction = mat_vec_neg(&h_inv, &gx, n);
        let mut slope = dot(&direction, &gx);
        if !(slope < 0.0) {
            // curvature information went bad; restart from steepest descent
            h_inv = identity(n);
            scale_pending = true;
            direction = gx.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
        }

        let probe = line_search(
            &mut objective,
            &x,
            &direction,
            fx,
            slope,
            &mut evaluations,
            settings.max_evaluations,
        )?;
        let Some(probe) = probe else {
            if evaluations >= settings.max_evaluations {
                break Termination::EvaluationLimit;
            }
            // no acceptable step exists at representable sizes
            break Termination::StepTolerance;
        };
        iterations += 1;

        let step: Vec<f64> = direction.iter().map(|d| d * probe.alpha).collect();
        let y: Vec<f64> = probe.gradient.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        if sy > 0.0 {
            if scale_pending {
                let yy = dot(&y, &y);
                if yy > 0.0 {
                    scale_identity(&mut h_inv, sy / yy, n);
                }
                scale_pending = false;
            }
            bfgs_update(&mut h_inv, &step, &y, sy, n);
        }

        let decrease = fx - probe.value;
        let step_norm = norm(&step);
        x = probe.point;
        fx = probe.value;
        gx = probe.gradient;
        check_finite(fx, &gx)?;

        if norm(&gx) <= GRAD_TOL * fx.abs().max(1.0) {
            break Termination::GradientTolerance;
        }
        // a small decrease alone can just mean a long flat traverse, and a
        // short step alone can be a cautious line search; stalling means both
        let step_small = step_norm <= settings.tol_step * (1.0 + norm(&x));
        let decrease_small = decrease <= settings.tol_objective * (1.0 + fx.abs());
        if step_small && decrease_small {
            break if step_norm * settings.tol_objective <= decrease * settings.tol_step {
                Termination::StepTolerance
            } else {
                Termination::ObjectiveTolerance
            };
        }
    };

    Ok(OptimizationReport {
        final_parameters: x,
        final_value: fx,
        iterations,
        evaluations,
        termination,
    })
}

fn check_finite(value: f64, gradient: &[f64]) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite {
            what: "objective value",
            value,
        });
    }
    if let Some(&bad) = gradient.iter().find(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            what: "objective gradient",
            value: bad,
        });
    }
    Ok(())
}

/// Strong-Wolfe line search (bracket then zoom). Returns the accepted probe,
/// or a plain sufficient-decrease point when the curvature condition is
/// unreachable, or None when no decrease exists at representable step sizes.
fn line_search<F>(
    objective: &mut F,
    x0: &[f64],
    direction: &[f64],
    f0: f64,
    slope0: f64,
    evaluations: &mut usize,
    max_evaluations: usize,
) -> Result<Option<Probe>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut eval_at = |alpha: f64, evaluations: &mut usize| -> Result<Probe> {
        let point: Vec<f64> = x0
            .iter()
            .zip(direction)
            .map(|(x, d)| x + alpha * d)
            .collect();
        let (value, gradient) = objective(&point)?;
        *evaluations += 1;
        Ok(Probe {
            alpha,
            value,
            gradient,
            point,
        })
    };

    let armijo = |p: &Probe| p.value <= f0 + WOLFE_C1 * p.alpha * slope0;
    let curvature = |slope: f64| slope.abs() <= WOLFE_C2 * slope0.abs();

    let mut fallback: Option<Probe> = None;
    let mut prev: Option<(f64, f64, f64)> = None; // (alpha, value, slope)
    let mut alpha = 1.0;
    for iter in 0..64 {
        if *evaluations >= max_evaluations {
            return Ok(fallback);
        }
        let probe = eval_at(alpha, evaluations)?;
        if !probe.value.is_finite() {
            // overshot into bad territory; shrink hard
            alpha *= 0.25;
            continue;
        }
        let slope = dot(&probe.gradient, direction);
        let prev_value = prev.map(|(_, v, _)| v).unwrap_or(f0);
        if !armijo(&probe) || (iter > 0 && probe.value >= prev_value) {
            let bracket_lo = prev.unwrap_or((0.0, f0, slope0));
            return zoom(
                objective,
                x0,
                direction,
                f0,
                slope0,
                bracket_lo,
                (probe.alpha, probe.value, Some(slope)),
                evaluations,
                max_evaluations,
                fallback,
            );
        }
        if curvature(slope) {
            return Ok(Some(probe));
        }
        replace_if_better(&mut fallback, probe_clone(&probe));
        if slope >= 0.0 {
            let hi = prev.unwrap_or((0.0, f0, slope0));
            return zoom(
                objective,
                x0,
                direction,
                f0,
                slope0,
                (probe.alpha, probe.value, slope),
                (hi.0, hi.1, Some(hi.2)),
                evaluations,
                max_evaluations,
                fallback,
            );
        }
        // still descending; extrapolate with the slope secant, which is exact
        // for a quadratic ray, and keep doubling as the safeguard
        let prev_slope = prev.map(|(_, _, s)| s).unwrap_or(slope0);
        let prev_alpha = prev.map(|(a, _, _)| a).unwrap_or(0.0);
        let secant = if slope > prev_slope {
            prev_alpha + (probe.alpha - prev_alpha) * prev_slope / (prev_slope - slope)
        } else {
            f64::INFINITY
        };
        prev = Some((probe.alpha, probe.value, slope));
        let doubled = probe.alpha * 2.0;
        alpha = if secant.is_finite() && secant > probe.alpha {
            secant.min(probe.alpha * 10.0).max(doubled.min(probe.alpha * 1.1))
        } else {
            doubled
        }
        .min(1e12);
    }
    Ok(fallback)
}

/// Candidate step inside a bracket: slope secant when both ends carry slopes,
/// otherwise quadratic interpolation from the low end, safeguarded toward
/// bisection when the estimate falls too close to either end.
fn bracket_candidate(lo: (f64, f64, f64), hi: (f64, f64, Option<f64>)) -> f64 {
    let width = hi.0 - lo.0;
    let guess = match hi.2 {
        Some(hi_slope) if (hi_slope - lo.2).abs() > 0.0 => {
            lo.0 + width * lo.2 / (lo.2 - hi_slope)
        }
        _ => {
            // minimize the quadratic through (lo value, lo slope, hi value)
            let denom = hi.1 - lo.1 - lo.2 * width;
            if denom.abs() > 0.0 {
                lo.0 - 0.5 * lo.2 * width * width / denom
            } else {
                f64::NAN
            }
        }
    };
    let lo_guard = lo.0 + 0.1 * width;
    let hi_guard = hi.0 - 0.1 * width;
    if guess.is_finite() {
        // clamp into the guarded interior whichever way the bracket leans
        let (a, b) = if lo_guard <= hi_guard {
            (lo_guard, hi_guard)
        } else {
            (hi_guard, lo_guard)
        };
        guess.clamp(a, b)
    } else {
        0.5 * (lo.0 + hi.0)
    }
}

/// Refine inside a bracket known to contain a Wolfe point. `lo` always
/// satisfies sufficient decrease; `hi` bounds the other side.
#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    objective: &mut F,
    x0: &[f64],
    direction: &[f64],
    f0: f64,
    slope0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, Option<f64>),
    evaluations: &mut usize,
    max_evaluations: usize,
    mut fallback: Option<Probe>,
) -> Result<Option<Probe>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    for _ in 0..64 {
        if *evaluations >= max_evaluations {
            break;
        }
        let alpha = bracket_candidate(lo, hi);
        if (hi.0 - lo.0).abs() <= 1e-16 * lo.0.abs().max(1.0) || alpha == lo.0 || alpha == hi.0 {
            break;
        }
        let point: Vec<f64> = x0
            .iter()
            .zip(direction)
            .map(|(x, d)| x + alpha * d)
            .collect();
        let (value, gradient) = objective(&point)?;
        *evaluations += 1;
        let probe = Probe {
            alpha,
            value,
            gradient,
            point,
        };
        if !probe.value.is_finite() || probe.value > f0 + WOLFE_C1 * alpha * slope0 || probe.value >= lo.1 {
            hi = (alpha, probe.value, None);
            continue;
        }
        let slope = dot(&probe.gradient, direction);
        if slope.abs() <= WOLFE_C2 * slope0.abs() {
            return Ok(Some(probe));
        }
        replace_if_better(&mut fallback, probe_clone(&probe));
        if slope * (hi.0 - lo.0) >= 0.0 {
            hi = (lo.0, lo.1, Some(lo.2));
        }
        lo = (alpha, probe.value, slope);
    }
    // no curvature-satisfying point found; fall back to the best
    // sufficient-decrease point seen, if any
    if lo.0 > 0.0 && lo.1 < f0 && fallback.as_ref().map_or(true, |b| lo.1 <= b.value) {
        let point: Vec<f64> = x0
            .iter()
            .zip(direction)
            .map(|(x, d)| x + lo.0 * d)
            .collect();
        let (value, gradient) = objective(&point)?;
        *evaluations += 1;
        return Ok(Some(Probe {
            alpha: lo.0,
            value,
            gradient,
            point,
        }));
    }
    Ok(fallback)
}

fn probe_clone(p: &Probe) -> Probe {
    Probe {
        alpha: p.alpha,
        value: p.value,
        gradient: p.gradient.clone(),
        point: p.point.clone(),
    }
}

fn replace_if_better(slot: &mut Option<Probe>, candidate: Probe) {
    if slot.as_ref().map_or(true, |b| candidate.value < b.value) {
        *slot = Some(candidate);
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn scale_identity(m: &mut [f64], factor: f64, n: usize) {
    for i in 0..n {
        m[i * n + i] *= factor;
    }
}

fn mat_vec_neg(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let row = &m[i * n..(i + 1) * n];
            -row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Inverse-Hessian BFGS update:
/// `H <- (I - rho s y') H (I - rho y s') + rho s s'` with `rho = 1 / (s'y)`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let mut hy = vec![0.0; n];
    for i in 0..n {
        let row = &h[i * n..(i + 1) * n];
        hy[i] = row.iter().zip(y).map(|(a, b)| a * b).sum();
    }
    let yhy = dot(y, &hy);
    let coef = rho * (1.0 + rho * yhy);
    for i in 0..n {
        let si = s[i];
        let hyi = hy[i];
        let row = &mut h[i * n..(i + 1) * n];
        for j in 0..n {
            row[j] += coef * si * s[j] - rho * (si * hy[j] + hyi * s[j]);
        }
    }
}
