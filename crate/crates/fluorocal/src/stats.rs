//! Small statistics helpers used by the pipeline and its tests.

/// Arithmetic mean. Zero for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Weighted Pearson correlation coefficient. Weights must be nonnegative and
/// not all zero; degenerate inputs return 0.
pub fn weighted_pearson(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), w.len());
    let wsum: f64 = w.iter().sum();
    if wsum <= 0.0 {
        return 0.0;
    }
    let mx: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let my: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        cov += w[i] * dx * dy;
        vx += w[i] * dx * dx;
        vy += w[i] * dy * dy;
    }
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}
