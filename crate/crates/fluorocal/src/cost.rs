//! Training objective: weighted least squares with a nearest-neighbor
//! smoothness penalty, plus its exact analytic gradient.
//!
//! Shots are weighted 0/1 by a Heaviside cutoff on the magnitude of the raw
//! cavity measurement, so the weights never depend on the parameters and the
//! objective stays an exact quadratic. The gradient includes the small term
//! arising from the frequency correction's dependence on the estimated atom
//! number.

use crate::error::Error;
use crate::grid::EdgeSet;
use crate::model::{BetaMap, ShotRecord};
use crate::Result;

/// Regularization strength and cavity-magnitude cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    /// Nearest-neighbor penalty weight, >= 0.
    pub lambda: f64,
    /// Heaviside threshold on |cavity_jz|, in atoms, >= 0.
    pub jz_cutoff: f64,
}

impl Hyperparams {
    pub fn new(lambda: f64, jz_cutoff: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and nonnegative (got {lambda})"
            )));
        }
        if !(jz_cutoff.is_finite() && jz_cutoff >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "jz_cutoff must be finite and nonnegative (got {jz_cutoff})"
            )));
        }
        Ok(Self { lambda, jz_cutoff })
    }
}

/// Objective value and gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEval {
    pub value: f64,
    pub grad_bias: f64,
    pub grad_values: Vec<f64>,
    /// Number of shots with nonzero weight.
    pub m_c: usize,
}

/// Binary sample weight: 1 when the raw cavity magnitude reaches the cutoff.
/// The boundary counts as included, H(0) = 1.
pub fn sample_weight(cavity_jz: f64, cutoff: f64) -> f64 {
    if cavity_jz.abs() >= cutoff {
        1.0
    } else {
        0.0
    }
}

/// Sum of squared weight differences over all neighbor edges; the bias is
/// excluded. Equal to the graph-Laplacian quadratic form of the edge set.
pub fn nn_penalty(values: &[f64], edges: &EdgeSet) -> f64 {
    edges
        .edges()
        .iter()
        .map(|&(a, b)| {
            let d = values[b] - values[a];
            d * d
        })
        .sum()
}

/// Graph Laplacian applied to the weight vector: `(L v)[j] = sum over
/// neighbors k of (v[j] - v[k])`. Half the gradient of [`nn_penalty`].
pub fn laplacian_apply(values: &[f64], edges: &EdgeSet) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for &(a, b) in edges.edges() {
        let d = values[a] - values[b];
        out[a] += d;
        out[b] -= d;
    }
    out
}

/// Objective value and exact gradient over a set of shots.
///
/// The residual of shot `i` expands to
/// `bias + sum_j (sign_j/2 - f_i) c_ij beta_j - cavity_jz_i`, which is the
/// model estimate minus the frequency-corrected cavity target.
pub fn cost_and_gradient(
    beta: &BetaMap,
    shots: &[ShotRecord],
    hyper: &Hyperparams,
    edges: &EdgeSet,
) -> Result<CostEval> {
    let n = beta.grid().n();
    let signs = beta.grid().side_signs();
    let values = beta.values();

    let m_c = shots
        .iter()
        .filter(|s| sample_weight(s.cavity_jz, hyper.jz_cutoff) > 0.0)
        .count();
    if m_c == 0 {
        return Err(Error::EmptyTrainingSet);
    }

    let mut sum_sq = 0.0;
    let mut grad_bias = 0.0;
    let mut grad_values = vec![0.0; n];
    for shot in shots {
        if sample_weight(shot.cavity_jz, hyper.jz_cutoff) == 0.0 {
            continue;
        }
        if shot.counts.len() != n {
            return Err(Error::DimensionMismatch {
                what: "superpixel counts",
                expected: format!("{n}"),
                got: format!("{}", shot.counts.len()),
            });
        }
        let f = shot.freq_factor;
        let mut residual = beta.bias() - shot.cavity_jz;
        for j in 0..n {
            residual += (0.5 * signs[j] - f) * shot.counts[j] * values[j];
        }
        sum_sq += residual * residual;
        grad_bias += residual;
        for j in 0..n {
            grad_values[j] += residual * (0.5 * signs[j] - f) * shot.counts[j];
        }
    }

    let inv_m = 1.0 / m_c as f64;
    let penalty = nn_penalty(values, edges);
    let laplacian = laplacian_apply(values, edges);
    for j in 0..n {
        grad_values[j] = inv_m * grad_values[j] + hyper.lambda * inv_m * laplacian[j];
    }
    let value = 0.5 * inv_m * sum_sq + 0.5 * hyper.lambda * inv_m * penalty;

    Ok(CostEval {
        value,
        grad_bias: inv_m * grad_bias,
        grad_values,
        m_c,
    })
}
