//! The linear calibration model.
//!
//! Each superpixel carries a weight converting camera counts into atoms. The
//! population difference is half the weighted right-minus-left count
//! difference plus a bias, and the total atom number is the plain weighted
//! sum. The cavity target is corrected per shot for probe-frequency drift
//! using the model's own atom-number estimate.

use crate::error::Error;
use crate::grid::SuperpixelGrid;
use crate::Result;

/// Learned calibration: a bias (atoms) and one weight per superpixel
/// (atoms per count).
///
/// Weights are not constrained positive; the training is unconstrained and a
/// negative weight on real data is a diagnostic, not an invariant violation.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMap {
    grid: SuperpixelGrid,
    bias: f64,
    values: Vec<f64>,
}

impl BetaMap {
    pub fn new(grid: SuperpixelGrid, bias: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::DimensionMismatch {
                what: "beta values",
                expected: format!("{}", grid.n()),
                got: format!("{}", values.len()),
            });
        }
        if !bias.is_finite() {
            return Err(Error::NonFinite {
                what: "beta bias",
                value: bias,
            });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "beta value",
                value: bad,
            });
        }
        Ok(Self { grid, bias, values })
    }

    /// All weights equal, zero bias.
    pub fn uniform(grid: SuperpixelGrid, value: f64) -> Self {
        Self {
            grid,
            bias: 0.0,
            values: vec![value; grid.n()],
        }
    }

    pub fn grid(&self) -> &SuperpixelGrid {
        &self.grid
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One experimental shot: the cavity reference, the per-shot frequency
/// correction factor (probe detuning over twice the reference detuning), and
/// the binned camera counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub shot_id: u64,
    /// Cavity measurement of the population difference, in atoms.
    pub cavity_jz: f64,
    /// Dimensionless per-shot factor multiplying the estimated atom number in
    /// the corrected cavity target. Small in practice; large values are
    /// flagged at load time, not rejected.
    pub freq_factor: f64,
    /// Counts per superpixel in grid index order, nonnegative.
    pub counts: Vec<f64>,
}

fn check_counts_len(expected: usize, got: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch {
            what: "superpixel counts",
            expected: format!("{expected}"),
            got: format!("{got}"),
        });
    }
    Ok(())
}

/// Estimated population difference: bias plus half the sign-weighted sum of
/// `counts[j] * beta[j]` (right half minus left half).
pub fn estimate_jz(beta: &BetaMap, counts: &[f64]) -> Result<f64> {
    check_counts_len(beta.grid().n(), counts.len())?;
    let mut acc = 0.0;
    for (j, (&c, &b)) in counts.iter().zip(beta.values()).enumerate() {
        acc += beta.grid().side_sign_unchecked(j) * c * b;
    }
    Ok(beta.bias() + 0.5 * acc)
}

/// Estimated total atom number: the weighted sum of all counts. The bias does
/// not enter.
pub fn estimate_n(beta: &BetaMap, counts: &[f64]) -> Result<f64> {
    check_counts_len(beta.grid().n(), counts.len())?;
    Ok(counts.iter().zip(beta.values()).map(|(&c, &b)| c * b).sum())
}

/// Frequency-corrected cavity target: the raw cavity measurement plus the
/// shot's frequency factor times the estimated atom number.
pub fn corrected_cavity_jz(shot: &ShotRecord, n_estimate: f64) -> Result<f64> {
    if !n_estimate.is_finite() {
        return Err(Error::NonFinite {
            what: "atom number estimate",
            value: n_estimate,
        });
    }
    Ok(shot.cavity_jz + shot.freq_factor * n_estimate)
}

/// Angle on the collective Bloch sphere corresponding to a population
/// difference: `jz_diff / (contrast * n / 2)`.
pub fn theta(jz_diff: f64, n: f64, contrast: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "atom number must be positive for theta (got {n})"
        )));
    }
    if !(contrast > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "contrast must be positive for theta (got {contrast})"
        )));
    }
    Ok(jz_diff / (contrast * n / 2.0))
}
