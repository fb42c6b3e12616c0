//! End-to-end training and evaluation.
//!
//! Training minimizes the regularized objective over a training split and
//! reports the learned weight map in raw count units. Internally the problem
//! is rescaled to natural units first: counts are divided by the dataset's
//! counts-per-atom scale so unit starting weights are sensible, and both
//! counts and targets are divided by the mean weighted cavity magnitude so
//! residuals are order one and the regularization strength has a stable,
//! dataset-independent meaning. The rescaling is exactly inverted on output.
//!
//! Evaluation scores a weight map by the spread of the angle-equivalent
//! disagreement between the image estimate and the frequency-corrected cavity
//! reference, and converts it to decibels below the quantum projection noise
//! of the estimated ensemble size.

use crate::cost::{cost_and_gradient, sample_weight, Hyperparams};
use crate::error::Error;
use crate::grid::{EdgeSet, SuperpixelGrid};
use crate::model::{corrected_cavity_jz, estimate_jz, estimate_n, theta, BetaMap, ShotRecord};
use crate::normal_eq;
use crate::optimizer::{initial_beta, minimize, OptimizationReport, OptimizerSettings};
use crate::stats;
use crate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A set of shots sharing one grid, contrast, and count scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    grid: SuperpixelGrid,
    shots: Vec<ShotRecord>,
    contrast: f64,
    counts_scale: f64,
}

impl Dataset {
    pub fn new(
        grid: SuperpixelGrid,
        shots: Vec<ShotRecord>,
        contrast: f64,
        counts_scale: f64,
    ) -> Result<Self> {
        if !(contrast > 0.0 && contrast <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "contrast must lie in (0, 1] (got {contrast})"
            )));
        }
        if !(counts_scale > 0.0 && counts_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "counts_scale must be positive and finite (got {counts_scale})"
            )));
        }
        for shot in &shots {
            if shot.counts.len() != grid.n() {
                return Err(Error::DimensionMismatch {
                    what: "superpixel counts",
                    expected: format!("{}", grid.n()),
                    got: format!("{}", shot.counts.len()),
                });
            }
            if let Some(&bad) = shot.counts.iter().find(|c| !c.is_finite() || **c < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "shot {} has a negative or non-finite count ({bad})",
                    shot.shot_id
                )));
            }
            if !shot.cavity_jz.is_finite() || !shot.freq_factor.is_finite() {
                return Err(Error::NonFinite {
                    what: "shot record field",
                    value: if shot.cavity_jz.is_finite() {
                        shot.freq_factor
                    } else {
                        shot.cavity_jz
                    },
                });
            }
        }
        Ok(Self {
            grid,
            shots,
            contrast,
            counts_scale,
        })
    }

    pub fn grid(&self) -> &SuperpixelGrid {
        &self.grid
    }

    pub fn shots(&self) -> &[ShotRecord] {
        &self.shots
    }

    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    /// Counts per atom assumed for pre-scaling; 1 when counts are already in
    /// atom-scale units.
    pub fn counts_scale(&self) -> f64 {
        self.counts_scale
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    /// Same metadata, different shots.
    pub fn with_shots(&self, shots: Vec<ShotRecord>) -> Self {
        Self {
            grid: self.grid,
            shots,
            contrast: self.contrast,
            counts_scale: self.counts_scale,
        }
    }
}

/// How shots are ordered before a split is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitOrder {
    InOrder,
    Shuffled(u64),
}

/// Sizes of the training and validation splits; the remainder is the test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_count: usize,
    pub validation_count: usize,
    pub order: SplitOrder,
}

/// Deterministically split a dataset into train, validation, and test sets.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let total = dataset.len();
    if spec.train_count + spec.validation_count > total {
        return Err(Error::OversubscribedSplit {
            train: spec.train_count,
            validation: spec.validation_count,
            total,
        });
    }
    let mut indices: Vec<usize> = (0..total).collect();
    if let SplitOrder::Shuffled(seed) = spec.order {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Fisher-Yates
        for i in (1..total).rev() {
            let j = rng.next_u64_below(i as u64 + 1) as usize;
            indices.swap(i, j);
        }
    }
    let pick = |range: std::ops::Range<usize>| -> Vec<ShotRecord> {
        indices[range]
            .iter()
            .map(|&i| dataset.shots[i].clone())
            .collect()
    };
    let train = dataset.with_shots(pick(0..spec.train_count));
    let validation = dataset.with_shots(pick(
        spec.train_count..spec.train_count + spec.validation_count,
    ));
    let test = dataset.with_shots(pick(spec.train_count + spec.validation_count..total));
    Ok((train, validation, test))
}

trait U64Below {
    fn next_u64_below(&mut self, bound: u64) -> u64;
}

impl U64Below for ChaCha8Rng {
    fn next_u64_below(&mut self, bound: u64) -> u64 {
        // unbiased rejection sampling
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = rand::RngCore::next_u64(self);
            if v < zone {
                return v % bound;
            }
        }
    }
}

/// The training problem in rescaled units, shared by the iterative and the
/// closed-form solution routes so both see bit-identical inputs.
#[derive(Debug, Clone)]
pub struct TrainingProblem {
    grid: SuperpixelGrid,
    edges: EdgeSet,
    scaled_shots: Vec<ShotRecord>,
    hyper: Hyperparams,
    jz_norm: f64,
    counts_scale: f64,
    m_c: usize,
}

impl TrainingProblem {
    pub fn from_dataset(dataset: &Dataset, hyper: &Hyperparams) -> Result<Self> {
        let weighted: Vec<&ShotRecord> = dataset
            .shots
            .iter()
            .filter(|s| sample_weight(s.cavity_jz, hyper.jz_cutoff) > 0.0)
            .collect();
        if weighted.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let m_c = weighted.len();
        let mut jz_norm =
            weighted.iter().map(|s| s.cavity_jz.abs()).sum::<f64>() / m_c as f64;
        if !(jz_norm > 0.0) {
            jz_norm = 1.0;
        }
        let scale = dataset.counts_scale * jz_norm;
        let scaled_shots: Vec<ShotRecord> = dataset
            .shots
            .iter()
            .map(|s| ShotRecord {
                shot_id: s.shot_id,
                cavity_jz: s.cavity_jz / jz_norm,
                freq_factor: s.freq_factor,
                counts: s.counts.iter().map(|c| c / scale).collect(),
            })
            .collect();
        Ok(Self {
            grid: dataset.grid,
            edges: dataset.grid.neighbor_edges(),
            scaled_shots,
            hyper: Hyperparams {
                lambda: hyper.lambda,
                // the cutoff tests raw cavity magnitudes, so it rescales with them
                jz_cutoff: hyper.jz_cutoff / jz_norm,
            },
            jz_norm,
            counts_scale: dataset.counts_scale,
            m_c,
        })
    }

    pub fn grid(&self) -> &SuperpixelGrid {
        &self.grid
    }

    pub fn scaled_shots(&self) -> &[ShotRecord] {
        &self.scaled_shots
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    /// Mean weighted cavity magnitude used for the unit rescaling.
    pub fn jz_norm(&self) -> f64 {
        self.jz_norm
    }

    pub fn m_c(&self) -> usize {
        self.m_c
    }

    /// Objective value and packed gradient (bias first) at packed parameters.
    pub fn eval(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let beta = BetaMap::new(self.grid, params[0], params[1..].to_vec())?;
        let eval = cost_and_gradient(&beta, &self.scaled_shots, &self.hyper, &self.edges)?;
        let mut grad = Vec::with_capacity(params.len());
        grad.push(eval.grad_bias);
        grad.extend_from_slice(&eval.grad_values);
        Ok((eval.value, grad))
    }

    /// Normal-equations form of this problem.
    pub fn assemble(&self) -> Result<normal_eq::QuadraticSystem> {
        normal_eq::assemble(&self.scaled_shots, &self.hyper, &self.grid, &self.edges)
    }

    /// Convert packed scaled parameters back to a raw-unit weight map.
    pub fn raw_beta(&self, params: &[f64]) -> Result<BetaMap> {
        let bias = params[0] * self.jz_norm;
        let values: Vec<f64> = params[1..].iter().map(|v| v / self.counts_scale).collect();
        BetaMap::new(self.grid, bias, values)
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub m_c: usize,
    /// Mean weighted cavity magnitude used for rescaling.
    pub jz_norm: f64,
    /// Final objective value in rescaled units.
    pub final_cost: f64,
    pub optimization: OptimizationReport,
}

/// Train a weight map on a dataset with the quasi-Newton optimizer.
pub fn train(
    dataset: &Dataset,
    hyper: &Hyperparams,
    settings: &OptimizerSettings,
) -> Result<(BetaMap, TrainReport)> {
    let problem = TrainingProblem::from_dataset(dataset, hyper)?;
    let start = initial_beta(&problem.grid);
    let report = minimize(|p| problem.eval(p), &start, settings)?;
    let beta = problem.raw_beta(&report.final_parameters)?;
    Ok((
        beta,
        TrainReport {
            m_c: problem.m_c,
            jz_norm: problem.jz_norm,
            final_cost: report.final_value,
            optimization: report,
        },
    ))
}

/// Train by solving the normal equations instead of iterating. Returns the
/// weight map and the objective value at the solution (rescaled units).
pub fn train_via_normal_equations(dataset: &Dataset, hyper: &Hyperparams) -> Result<(BetaMap, f64)> {
    let problem = TrainingProblem::from_dataset(dataset, hyper)?;
    let system = problem.assemble()?;
    let params = normal_eq::solve(&system)?;
    let beta = problem.raw_beta(&params)?;
    Ok((beta, system.value_at(&params)))
}

/// Evaluation metrics over a set of shots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Sample standard deviation of the angle-equivalent residual, radians.
    pub delta_theta: f64,
    /// Decibels below the quantum projection noise of the mean estimated
    /// atom number.
    pub db_below_qpn: f64,
    /// Mean estimated atom number over the evaluated shots.
    pub mean_n: f64,
    pub sample_count: usize,
    /// Normal-theory standard error of the sample standard deviation.
    pub delta_theta_stderr: f64,
}

/// Decibels below the projection-noise limit `1/sqrt(mean_n)` for a measured
/// angular spread.
pub fn db_below_qpn(delta_theta: f64, mean_n: f64) -> f64 {
    10.0 * ((1.0 / mean_n) / (delta_theta * delta_theta)).log10()
}

/// Score a weight map on a dataset. With `exclude_above_cutoff`, only shots
/// below the cavity cutoff are used, matching how the instrument operates as
/// a sensor; otherwise every shot enters.
pub fn evaluate(
    beta: &BetaMap,
    eval_set: &Dataset,
    exclude_above_cutoff: bool,
    hyper: &Hyperparams,
) -> Result<Metrics> {
    let mut residuals = Vec::new();
    let mut n_estimates = Vec::new();
    for shot in &eval_set.shots {
        if exclude_above_cutoff && sample_weight(shot.cavity_jz, hyper.jz_cutoff) > 0.0 {
            continue;
        }
        let n_est = estimate_n(beta, &shot.counts)?;
        let jz_est = estimate_jz(beta, &shot.counts)?;
        let target = corrected_cavity_jz(shot, n_est)?;
        residuals.push(jz_est - target);
        n_estimates.push(n_est);
    }
    metrics_from_residuals(&residuals, &n_estimates, eval_set.contrast)
}

/// Angle-equivalent metrics from population-difference residuals and their
/// per-shot atom-number estimates.
fn metrics_from_residuals(
    residuals: &[f64],
    n_estimates: &[f64],
    contrast: f64,
) -> Result<Metrics> {
    if residuals.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            have: residuals.len(),
        });
    }
    let thetas = residuals
        .iter()
        .zip(n_estimates)
        .map(|(&r, &n)| theta(r, n, contrast))
        .collect::<Result<Vec<f64>>>()?;
    let delta_theta = stats::sample_std(&thetas);
    let mean_n = stats::mean(n_estimates);
    Ok(Metrics {
        delta_theta,
        db_below_qpn: db_below_qpn(delta_theta, mean_n),
        mean_n,
        sample_count: thetas.len(),
        delta_theta_stderr: delta_theta / (2.0 * (thetas.len() as f64 - 1.0)).sqrt(),
    })
}

/// First term of the objective (the weighted mean squared residual) for a
/// raw-unit weight map over raw shots, in squared atoms.
pub fn mse_term(beta: &BetaMap, shots: &[ShotRecord], cutoff: f64) -> Result<f64> {
    let mut m_c = 0usize;
    let mut sum_sq = 0.0;
    for shot in shots {
        if sample_weight(shot.cavity_jz, cutoff) == 0.0 {
            continue;
        }
        let n_est = estimate_n(beta, &shot.counts)?;
        let r = estimate_jz(beta, &shot.counts)? - corrected_cavity_jz(shot, n_est)?;
        sum_sq += r * r;
        m_c += 1;
    }
    if m_c == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(0.5 * sum_sq / m_c as f64)
}

/// Which hyperparameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Lambda,
    Cutoff,
    SampleSize,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Cutoff => "cutoff",
            SweepAxis::SampleSize => "sample-size",
        }
    }
}

/// One sweep point: the axis value, validation metrics of the model trained
/// there, and the first cost term on the training and validation sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub validation: Metrics,
    pub train_error: f64,
    pub validation_error: f64,
    pub m_c: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

fn check_strictly_increasing(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one value".into()));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig(
            "sweep values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Train once per regularization value; validation metrics keep every
/// validation shot, including those above the cutoff.
pub fn sweep_lambda(
    train_set: &Dataset,
    validation: &Dataset,
    cutoff: f64,
    lambda_values: &[f64],
    settings: &OptimizerSettings,
) -> Result<SweepReport> {
    check_strictly_increasing(lambda_values)?;
    let mut points = Vec::with_capacity(lambda_values.len());
    for &lambda in lambda_values {
        let hyper = Hyperparams::new(lambda, cutoff)?;
        points.push(sweep_point(lambda, train_set, validation, &hyper, settings)?);
    }
    Ok(SweepReport {
        axis: SweepAxis::Lambda,
        points,
    })
}

/// Train once per cutoff value at fixed regularization.
pub fn sweep_cutoff(
    train_set: &Dataset,
    validation: &Dataset,
    lambda: f64,
    cutoff_values: &[f64],
    settings: &OptimizerSettings,
) -> Result<SweepReport> {
    check_strictly_increasing(cutoff_values)?;
    let mut points = Vec::with_capacity(cutoff_values.len());
    for &cutoff in cutoff_values {
        let hyper = Hyperparams::new(lambda, cutoff)?;
        points.push(sweep_point(cutoff, train_set, validation, &hyper, settings)?);
    }
    Ok(SweepReport {
        axis: SweepAxis::Cutoff,
        points,
    })
}

fn sweep_point(
    axis_value: f64,
    train_set: &Dataset,
    validation: &Dataset,
    hyper: &Hyperparams,
    settings: &OptimizerSettings,
) -> Result<SweepPoint> {
    let (beta, report) = train(train_set, hyper, settings)?;
    let validation_metrics = evaluate(&beta, validation, false, hyper)?;
    Ok(SweepPoint {
        axis_value,
        validation: validation_metrics,
        train_error: mse_term(&beta, &train_set.shots, hyper.jz_cutoff)?,
        validation_error: mse_term(&beta, &validation.shots, hyper.jz_cutoff)?,
        m_c: report.m_c,
    })
}

/// Learning curve: train on growing subsets of the nonzero-weight shots and
/// report the first cost term on the training subset and the validation set.
/// Subsets are prefixes of a seeded shuffle, so curves are reproducible.
pub fn learning_curve(
    train_set: &Dataset,
    validation: &Dataset,
    hyper: &Hyperparams,
    sizes: &[usize],
    subsample_seed: u64,
    settings: &OptimizerSettings,
) -> Result<SweepReport> {
    let weighted: Vec<&ShotRecord> = train_set
        .shots
        .iter()
        .filter(|s| sample_weight(s.cavity_jz, hyper.jz_cutoff) > 0.0)
        .collect();
    if sizes.is_empty() {
        return Err(Error::InvalidConfig(
            "learning curve needs at least one size".into(),
        ));
    }
    for &size in sizes {
        if size == 0 || size > weighted.len() {
            return Err(Error::TooFewSamples {
                needed: size.max(1),
                have: weighted.len(),
            });
        }
    }
    let mut order: Vec<usize> = (0..weighted.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(subsample_seed);
    for i in (1..order.len()).rev() {
        let j = rng.next_u64_below(i as u64 + 1) as usize;
        order.swap(i, j);
    }

    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let subset: Vec<ShotRecord> = order[..size].iter().map(|&i| weighted[i].clone()).collect();
        let subset_set = train_set.with_shots(subset);
        let (beta, report) = train(&subset_set, hyper, settings)?;
        points.push(SweepPoint {
            axis_value: size as f64,
            validation: evaluate(&beta, validation, false, hyper)?,
            train_error: mse_term(&beta, &subset_set.shots, hyper.jz_cutoff)?,
            validation_error: mse_term(&beta, &validation.shots, hyper.jz_cutoff)?,
            m_c: report.m_c,
        });
    }
    Ok(SweepReport {
        axis: SweepAxis::SampleSize,
        points,
    })
}

/// No-correction reference: every superpixel converts counts to atoms at the
/// nominal scale.
pub fn baseline_uniform(
    eval_set: &Dataset,
    exclude_above_cutoff: bool,
    hyper: &Hyperparams,
) -> Result<Metrics> {
    let beta = BetaMap::uniform(eval_set.grid, 1.0 / eval_set.counts_scale);
    evaluate(&beta, eval_set, exclude_above_cutoff, hyper)
}

/// Single-weight fit and its evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRatioBaseline {
    /// Fitted upper-state gain at the nominal cloud position, relative to the
    /// nominal lower-state weight.
    pub ratio: f64,
    /// Gain slope per superpixel of upper-cloud centroid motion (column, row).
    pub position_slopes: (f64, f64),
    pub metrics: Metrics,
}

/// Decomposition of one shot used by the single-weight baseline: summed
/// counts per half and the centroid of the upper-state cloud relative to its
/// nominal position.
struct HalfSums {
    left: f64,
    right: f64,
    dc: f64,
    dr: f64,
}

fn half_sums(grid: &SuperpixelGrid, counts: &[f64]) -> HalfSums {
    let mut left = 0.0;
    let mut right = 0.0;
    let mut row_acc = 0.0;
    let mut col_acc = 0.0;
    for j in 0..grid.n() {
        let c = counts[j];
        if grid.side_sign_unchecked(j) < 0.0 {
            left += c;
        } else {
            right += c;
            row_acc += c * (grid.row_of(j) as f64 + 0.5);
            col_acc += c * (grid.col_of(j) as f64 + 0.5);
        }
    }
    let nominal_row = grid.rows() as f64 / 2.0;
    let nominal_col = grid.left_cols() as f64 + (grid.cols() - grid.left_cols()) as f64 / 2.0;
    let (dr, dc) = if right > 0.0 {
        (row_acc / right - nominal_row, col_acc / right - nominal_col)
    } else {
        (0.0, 0.0)
    };
    HalfSums {
        left,
        right,
        dc,
        dr,
    }
}

/// Prior-method reference: a single weight on all upper-state counts,
/// determined by the measured mean position of the upper cloud (the gain is
/// affine in the cloud centroid), with the lower state fixed at the nominal
/// scale. Fitted on the weighted training shots by least squares against the
/// corrected cavity target; worlds without centroid variation fall back to
/// one constant gain.
pub fn baseline_single_ratio(
    train_set: &Dataset,
    eval_set: &Dataset,
    cutoff: f64,
    exclude_above_cutoff: bool,
    hyper: &Hyperparams,
) -> Result<SingleRatioBaseline> {
    let grid = train_set.grid;
    let u = 1.0 / train_set.counts_scale;

    // accumulate the 3x3 normal equations for gain = g0 + g1 dc + g2 dr
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    let mut m_c = 0usize;
    for shot in &train_set.shots {
        if sample_weight(shot.cavity_jz, cutoff) == 0.0 {
            continue;
        }
        m_c += 1;
        let sums = half_sums(&grid, &shot.counts);
        let f = shot.freq_factor;
        // residual = gain(position) * (1/2 - f) right - u (1/2 + f) left - cavity
        let a = (0.5 - f) * sums.right;
        let t = shot.cavity_jz + u * (0.5 + f) * sums.left;
        let phi = [a, a * sums.dc, a * sums.dr];
        for i in 0..3 {
            for k in 0..3 {
                m[i][k] += phi[i] * phi[k];
            }
            v[i] += phi[i] * t;
        }
    }
    if m_c == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if !(m[0][0] > 0.0) {
        return Err(Error::SingularSystem {
            diagnostic: "single-weight fit has no upper-state counts".into(),
        });
    }
    let coeffs = match solve3(&m, &v) {
        Some(c) => c,
        // no usable centroid variation: constant gain only
        None => [v[0] / m[0][0], 0.0, 0.0],
    };

    let mut residuals = Vec::new();
    let mut n_estimates = Vec::new();
    for shot in &eval_set.shots {
        if exclude_above_cutoff && sample_weight(shot.cavity_jz, hyper.jz_cutoff) > 0.0 {
            continue;
        }
        let sums = half_sums(&grid, &shot.counts);
        let gain = coeffs[0] + coeffs[1] * sums.dc + coeffs[2] * sums.dr;
        let f = shot.freq_factor;
        let n_est = gain * sums.right + u * sums.left;
        let jz_est = 0.5 * (gain * sums.right - u * sums.left);
        let target = shot.cavity_jz + f * n_est;
        residuals.push(jz_est - target);
        n_estimates.push(n_est);
    }
    let metrics = metrics_from_residuals(&residuals, &n_estimates, eval_set.contrast)?;
    Ok(SingleRatioBaseline {
        ratio: coeffs[0] / u,
        position_slopes: (coeffs[1] / u, coeffs[2] / u),
        metrics,
    })
}

/// Solve a 3x3 symmetric positive-definite system by Cholesky; None when the
/// matrix is not numerically positive definite.
fn solve3(m: &[[f64; 3]; 3], v: &[f64; 3]) -> Option<[f64; 3]> {
    let mut l = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                // refuse nearly singular pivots so degenerate worlds fall
                // back to the constant-gain fit
                if !(sum > 1e-12 * m[i][i].abs().max(1e-300)) || !sum.is_finite() {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = [0.0f64; 3];
    for i in 0..3 {
        let mut acc = v[i];
        for k in 0..i {
            acc -= l[i][k] * y[k];
        }
        y[i] = acc / l[i][i];
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut acc = y[i];
        for k in (i + 1)..3 {
            acc -= l[k][i] * x[k];
        }
        x[i] = acc / l[i][i];
    }
    Some(x)
}
