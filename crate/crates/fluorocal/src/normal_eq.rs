//! Closed-form solution of the training objective.
//!
//! The objective is an exact quadratic in (bias, weights), so its minimizer
//! solves a dense symmetric positive-definite linear system. This module
//! assembles that system directly from the shots and solves it with a
//! Cholesky factorization. It serves as an independent cross-check on the
//! iterative optimizer and as a fast alternative solver; the two routes are
//! never allowed to share code beyond the shot data itself.

use crate::cost::Hyperparams;
use crate::error::Error;
use crate::grid::{EdgeSet, SuperpixelGrid};
use crate::model::ShotRecord;
use crate::Result;

/// Quadratic form `G(p) = 1/2 p' H p - b' p + const` over the packed
/// parameter vector (bias first, then the per-superpixel weights).
#[derive(Debug, Clone)]
pub struct QuadraticSystem {
    dim: usize,
    hessian: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
}

impl QuadraticSystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hessian(&self) -> &[f64] {
        &self.hessian
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Objective value at a packed parameter vector.
    pub fn value_at(&self, p: &[f64]) -> f64 {
        assert_eq!(p.len(), self.dim);
        let mut quad = 0.0;
        for i in 0..self.dim {
            let row = &self.hessian[i * self.dim..(i + 1) * self.dim];
            let mut acc = 0.0;
            for (h, &x) in row.iter().zip(p) {
                acc += h * x;
            }
            quad += p[i] * acc;
        }
        let lin: f64 = self.linear.iter().zip(p).map(|(b, x)| b * x).sum();
        0.5 * quad - lin + self.constant
    }

    /// Gradient `H p - b` at a packed parameter vector.
    pub fn gradient_at(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let row = &self.hessian[i * self.dim..(i + 1) * self.dim];
                let hp: f64 = row.iter().zip(p).map(|(h, &x)| h * x).sum();
                hp - self.linear[i]
            })
            .collect()
    }

    /// Largest relative asymmetry of the assembled Hessian; zero up to
    /// rounding by construction.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let a = self.hessian[i * self.dim + j];
                let b = self.hessian[j * self.dim + i];
                let denom = a.abs().max(b.abs()).max(1.0);
                worst = worst.max((a - b).abs() / denom);
            }
        }
        worst
    }
}

/// Assemble the normal-equations system for a set of shots.
///
/// Each weighted shot contributes the outer product of its design row
/// `(1, (sign_j/2 - f) c_j ...)` against itself and against the raw cavity
/// target; the neighbor penalty adds the graph Laplacian on the weight block,
/// leaving the bias row and column untouched.
pub fn assemble(
    shots: &[ShotRecord],
    hyper: &Hyperparams,
    grid: &SuperpixelGrid,
    edges: &EdgeSet,
) -> Result<QuadraticSystem> {
    let n = grid.n();
    let dim = n + 1;
    let signs = grid.side_signs();

    let m_c = shots
        .iter()
        .filter(|s| crate::cost::sample_weight(s.cavity_jz, hyper.jz_cutoff) > 0.0)
        .count();
    if m_c == 0 {
        return Err(Error::EmptyTrainingSet);
    }

    let mut hessian = vec![0.0; dim * dim];
    let mut linear = vec![0.0; dim];
    let mut constant = 0.0;
    let mut row = vec![0.0; dim];
    for shot in shots {
        if crate::cost::sample_weight(shot.cavity_jz, hyper.jz_cutoff) == 0.0 {
            continue;
        }
        if shot.counts.len() != n {
            return Err(Error::DimensionMismatch {
                what: "superpixel counts",
                expected: format!("{n}"),
                got: format!("{}", shot.counts.len()),
            });
        }
        row[0] = 1.0;
        for j in 0..n {
            row[j + 1] = (0.5 * signs[j] - shot.freq_factor) * shot.counts[j];
        }
        let y = shot.cavity_jz;
        for i in 0..dim {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let out = &mut hessian[i * dim..(i + 1) * dim];
            for (o, &rj) in out.iter_mut().zip(row.iter()) {
                *o += ri * rj;
            }
            linear[i] += ri * y;
        }
        constant += y * y;
    }

    let inv_m = 1.0 / m_c as f64;
    for h in hessian.iter_mut() {
        *h *= inv_m;
    }
    for b in linear.iter_mut() {
        *b *= inv_m;
    }
    constant *= 0.5 * inv_m;

    // graph Laplacian on the weight block, scaled by lambda / m_c
    let w = hyper.lambda * inv_m;
    for &(a, b) in edges.edges() {
        let (ia, ib) = (a + 1, b + 1);
        hessian[ia * dim + ia] += w;
        hessian[ib * dim + ib] += w;
        hessian[ia * dim + ib] -= w;
        hessian[ib * dim + ia] -= w;
    }

    Ok(QuadraticSystem {
        dim,
        hessian,
        linear,
        constant,
    })
}

/// Solve `H p = b` by Cholesky factorization. Refuses singular or indefinite
/// systems rather than pseudo-inverting.
pub fn solve(system: &QuadraticSystem) -> Result<Vec<f64>> {
    let n = system.dim;
    let l = cholesky(n, &system.hessian).ok_or_else(|| Error::SingularSystem {
        diagnostic: conditioning_note(system),
    })?;

    // L L' p = b: forward then backward substitution
    let b = &system.linear;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[i * n + k] * y[k];
        }
        y[i] = acc / l[i * n + i];
    }
    let mut p = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l[k * n + i] * p[k];
        }
        p[i] = acc / l[i * n + i];
    }

    // residual check against the assembled system
    let grad = system.gradient_at(&p);
    let res_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if res_norm > 1e-8 * b_norm.max(1e-300) {
        return Err(Error::SingularSystem {
            diagnostic: format!(
                "solution residual {res_norm:.3e} exceeds 1e-8 * |b| = {:.3e}; {}",
                1e-8 * b_norm,
                conditioning_note(system)
            ),
        });
    }
    Ok(p)
}

fn conditioning_note(system: &QuadraticSystem) -> String {
    let n = system.dim;
    let mut min_d = f64::INFINITY;
    let mut max_d = f64::NEG_INFINITY;
    for i in 0..n {
        let d = system.hessian[i * n + i];
        min_d = min_d.min(d);
        max_d = max_d.max(d);
    }
    format!("diagonal range [{min_d:.3e}, {max_d:.3e}] over dimension {n}")
}

/// Dense lower-triangular Cholesky factor, or None when the matrix is not
/// numerically positive definite.
fn cholesky(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}
