//! Midpoint-rule integration on a single global chart.

use std::io::Write;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::chart::Chart;
use crate::error::{CgfdError, Result};

/// Normalized cell masses of a density on a tensor grid over a chart.
#[derive(Debug, Clone)]
pub struct GridDensity {
    /// Cells per chart coordinate.
    pub resolution: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    /// Cell midpoints in chart coordinates.
    pub u: Vec<DVector<f64>>,
    /// Cell midpoints on the manifold.
    pub theta: Vec<DVector<f64>>,
    /// Sums to one.
    pub mass: Vec<f64>,
    /// Log of the unnormalized integral of the kernel.
    pub log_normalizer: f64,
}

/// Sum in a fixed binary tree so the result does not depend on thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn grid_nodes(bounds: &[(f64, f64)], resolution: &[usize]) -> Vec<DVector<f64>> {
    let total: usize = resolution.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut u = DVector::zeros(bounds.len());
            // Last coordinate varies fastest.
            for k in (0..bounds.len()).rev() {
                let (lo, hi) = bounds[k];
                let i = idx % resolution[k];
                idx /= resolution[k];
                u[k] = lo + (i as f64 + 0.5) * (hi - lo) / resolution[k] as f64;
            }
            u
        })
        .collect()
}

fn build<C, K>(chart: &C, resolution: usize, log_weight: K) -> Result<GridDensity>
where
    C: Chart + ?Sized,
    K: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Sync,
{
    if resolution == 0 {
        return Err(CgfdError::Config("resolution must be positive".into()));
    }
    let bounds = chart.domain();
    if bounds.iter().any(|&(lo, hi)| !lo.is_finite() || !hi.is_finite()) {
        return Err(CgfdError::Config("chart domain must be bounded for grid quadrature".into()));
    }
    let res = vec![resolution; bounds.len()];
    let cell: f64 = bounds.iter().map(|&(lo, hi)| (hi - lo) / resolution as f64).product();
    let u = grid_nodes(&bounds, &res);
    let theta: Vec<DVector<f64>> = u.par_iter().map(|u| chart.point(u)).collect();
    let logs: Vec<f64> = u.par_iter().zip(theta.par_iter()).map(|(u, t)| log_weight(u, t)).collect();
    if let Some(pos) = logs.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(CgfdError::NonFinite(format!("kernel is {} at u = {:?}", logs[pos], u[pos].as_slice())));
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(CgfdError::NonFinite("kernel vanishes on the whole grid".into()));
    }
    let scaled: Vec<f64> = logs.iter().map(|l| (l - max).exp() * cell).collect();
    let total = pairwise_sum(&scaled);
    let mass = scaled.iter().map(|m| m / total).collect();
    Ok(GridDensity { resolution: res, bounds, u, theta, mass, log_normalizer: max + total.ln() })
}

/// Discretize a log-kernel given on the manifold (with respect to its
/// volume measure): cell mass ∝ `exp(log_kernel(θ)) · D(∇_uψ⁻¹) · Δu`.
pub fn normalize_on_chart<C, K>(log_kernel: K, chart: &C, resolution: usize) -> Result<GridDensity>
where
    C: Chart + ?Sized,
    K: Fn(&DVector<f64>) -> f64 + Sync,
{
    build(chart, resolution, |u, t| log_kernel(t) + chart.area_element(u).ln())
}

/// Discretize a log-density already expressed in chart coordinates
/// (no area element): cell mass ∝ `exp(log_density(u)) · Δu`.
pub fn normalize_on_coordinates<C, K>(log_density: K, chart: &C, resolution: usize) -> Result<GridDensity>
where
    C: Chart + ?Sized,
    K: Fn(&DVector<f64>) -> f64 + Sync,
{
    build(chart, resolution, |u, _| log_density(u))
}

/// Total mass of the cells whose midpoint satisfies `region`.
pub fn region_mass<P: Fn(&DVector<f64>) -> bool>(density: &GridDensity, region: P) -> f64 {
    let picked: Vec<f64> =
        density.theta.iter().zip(&density.mass).map(|(t, &m)| if region(t) { m } else { 0.0 }).collect();
    pairwise_sum(&picked).clamp(0.0, 1.0)
}

/// Octant label in `0..8`: bit 0 set for `x < 0`, bit 1 for `y < 0`, bit 2 for `z < 0`.
pub fn octant_index(theta: &DVector<f64>) -> usize {
    (theta[0] < 0.0) as usize | ((theta[1] < 0.0) as usize) << 1 | ((theta[2] < 0.0) as usize) << 2
}

pub fn octant_masses(density: &GridDensity) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (k, o) in out.iter_mut().enumerate() {
        *o = region_mass(density, |t| octant_index(t) == k);
    }
    out
}

/// Fraction of samples in each octant.
pub fn octant_frequencies(samples: &[DVector<f64>]) -> Result<[f64; 8]> {
    if samples.is_empty() {
        return Err(CgfdError::EmptySamples);
    }
    let mut out = [0.0; 8];
    for s in samples {
        out[octant_index(s)] += 1.0;
    }
    for o in &mut out {
        *o /= samples.len() as f64;
    }
    Ok(out)
}

impl GridDensity {
    /// CSV with columns `u0.., theta0.., mass`; `header` lines are written
    /// first, each prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        let k = self.bounds.len();
        let d = self.theta.first().map_or(0, |t| t.len());
        let mut cols: Vec<String> = (0..k).map(|i| format!("u{i}")).collect();
        cols.extend((0..d).map(|i| format!("theta{i}")));
        cols.push("mass".into());
        writeln!(w, "{}", cols.join(","))?;
        for ((u, t), m) in self.u.iter().zip(&self.theta).zip(&self.mass) {
            let fields: Vec<String> = u.iter().chain(t.iter()).chain(std::iter::once(m)).map(|v| v.to_string()).collect();
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}
