//! Log–log slope fits for convergence-rate studies.

use crate::error::{invalid, Result};

/// Ordinary least squares fit of `ln value` against `ln x`.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    /// The fitted `(ln x, ln value)` pairs.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`; a constant sample
    /// counts as a perfect fit.
    pub r2: f64,
}

/// Fits `value ~ C x^slope` by least squares on `(ln x, ln value)`. Needs at
/// least three points with positive finite coordinates; callers must drop
/// unusable rows (e.g. FEM-limited ones) first.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(invalid(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(x, v) in points {
        if !(x > 0.0 && x.is_finite() && v > 0.0 && v.is_finite()) {
            return Err(invalid(format!(
                "slope fit needs positive finite points, got ({x}, {v})"
            )));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, v)| (x.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in &logs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx <= 0.0 {
        return Err(invalid("slope fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy <= f64::EPSILON * n * mean_y.abs().max(1.0) {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(SlopeFit { points: logs, slope, intercept, r2 })
}
