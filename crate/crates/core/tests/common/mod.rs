#![allow(dead_code)]

use cgfd::chart::CircleAngleChart;
use cgfd::quadrature::normalize_on_chart;
use nalgebra::DVector;

/// CDF on `(−π, π)` of a circle density given as a log-kernel in the ambient
/// point, by midpoint quadrature with linear interpolation inside cells.
pub struct AngleCdf {
    edges: Vec<f64>,
    cum: Vec<f64>,
}

impl AngleCdf {
    pub fn new<K: Fn(&DVector<f64>) -> f64 + Sync>(log_kernel: K, resolution: usize) -> Self {
        let g = normalize_on_chart(log_kernel, &CircleAngleChart, resolution).unwrap();
        let (lo, hi) = g.bounds[0];
        let w = (hi - lo) / resolution as f64;
        let edges = (0..=resolution).map(|i| lo + i as f64 * w).collect();
        let mut cum = vec![0.0];
        for m in &g.mass {
            cum.push(cum.last().unwrap() + m);
        }
        Self { edges, cum }
    }

    pub fn at(&self, a: f64) -> f64 {
        let n = self.edges.len() - 1;
        let (lo, hi) = (self.edges[0], self.edges[n]);
        if a <= lo {
            return 0.0;
        }
        if a >= hi {
            return 1.0;
        }
        let x = (a - lo) / (hi - lo) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let f = x - i as f64;
        self.cum[i] + f * (self.cum[i + 1] - self.cum[i])
    }
}

pub fn angle(theta: &DVector<f64>) -> f64 {
    theta[1].atan2(theta[0])
}

/// Two-sided Kolmogorov–Smirnov distance of angle samples from `cdf`.
pub fn ks_distance(samples: &[DVector<f64>], cdf: &AngleCdf) -> f64 {
    let mut a: Vec<f64> = samples.iter().map(angle).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    a.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.at(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Pearson chi-square p-value of angle samples against the uniform law on `bins` bins.
pub fn uniform_angle_p_value(samples: &[DVector<f64>], bins: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let mut counts = vec![0.0; bins];
    for s in samples {
        let u = (angle(s) + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let expected = samples.len() as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}
