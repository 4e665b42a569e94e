use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::study::{min_distance_estimate, sort_values, upper_bound};
use crate::error::{CgfdError, Result};
use crate::models::logspline::LinearBSplineBasis;

/// Pointwise fiducial bands for a logspline density, evaluated at the knots.
/// The bands are linear between knots, need not integrate to one, and are
/// zero at knots outside the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceCurves {
    pub knots: Vec<f64>,
    pub level: f64,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    /// Density of the minimum-distance sample at each knot.
    pub estimate: Vec<f64>,
    pub estimate_theta: Vec<f64>,
}

fn densities_at_knots(basis: &LinearBSplineBasis, theta: &DVector<f64>) -> Vec<f64> {
    let g = basis.log_normalizer(theta);
    basis
        .knots()
        .iter()
        .map(|&k| if (0.0..=1.0).contains(&k) { (basis.spline(theta, k) - g).exp() } else { 0.0 })
        .collect()
}

/// Upper curve at the `level` quantile and lower curve at `1 − level` of the
/// per-knot density values.
pub fn confidence_curves(samples: &[DVector<f64>], basis: &LinearBSplineBasis, level: f64) -> Result<ConfidenceCurves> {
    if samples.is_empty() {
        return Err(CgfdError::EmptySamples);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(CgfdError::Config(format!("level must lie in (0, 1), got {level}")));
    }
    let knots = basis.knots().to_vec();
    let mut columns = vec![Vec::with_capacity(samples.len()); knots.len()];
    for s in samples {
        for (c, v) in columns.iter_mut().zip(densities_at_knots(basis, s)) {
            c.push(v);
        }
    }
    let mut upper = Vec::with_capacity(knots.len());
    let mut lower = Vec::with_capacity(knots.len());
    for c in &mut columns {
        sort_values(c);
        upper.push(upper_bound(c, level));
        lower.push(upper_bound(c, 1.0 - level));
    }
    let est = min_distance_estimate(samples)?;
    Ok(ConfidenceCurves {
        estimate: densities_at_knots(basis, &est),
        estimate_theta: est.iter().copied().collect(),
        knots,
        level,
        upper,
        lower,
    })
}

impl ConfidenceCurves {
    /// Linear interpolation of a curve given at the knots.
    pub fn interpolate(&self, values: &[f64], y: f64) -> f64 {
        let k = &self.knots;
        if y <= k[0] {
            return values[0];
        }
        let j = k.partition_point(|&t| t <= y).min(k.len() - 1);
        let w = ((y - k[j - 1]) / (k[j] - k[j - 1])).clamp(0.0, 1.0);
        values[j - 1] * (1.0 - w) + values[j] * w
    }
}
