//! Two bivariate normal observations with a common mean, `μ₁ = μ₂`.
//!
//! Parameter order is `θ = (μ₁, μ₂, σ₁, σ₂)`.

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::error::{CgfdError, Result};
use crate::fiducial::FiducialModel;
use crate::geometry::ImplicitManifold;

/// Two constraint functions with the same zero set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualMeansConstraint {
    /// `g(θ) = μ₂ − μ₁`
    Linear,
    /// `h(θ) = μ₂³ − μ₁³`
    Cubic,
}

impl ImplicitManifold for EqualMeansConstraint {
    fn ambient_dim(&self) -> usize {
        4
    }
    fn codim(&self) -> usize {
        1
    }
    fn constraint(&self, t: &DVector<f64>) -> DVector<f64> {
        let v = match self {
            Self::Linear => t[1] - t[0],
            Self::Cubic => t[1].powi(3) - t[0].powi(3),
        };
        DVector::from_element(1, v)
    }
    fn constraint_jacobian(&self, t: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Self::Linear => DMatrix::from_row_slice(1, 4, &[-1.0, 1.0, 0.0, 0.0]),
            Self::Cubic => DMatrix::from_row_slice(1, 4, &[-3.0 * t[0] * t[0], 3.0 * t[1] * t[1], 0.0, 0.0]),
        }
    }
    fn constraint_jacobian_partial(&self, t: &DVector<f64>, i: usize) -> Option<DMatrix<f64>> {
        let mut out = DMatrix::zeros(1, 4);
        if *self == Self::Cubic {
            match i {
                0 => out[(0, 0)] = -6.0 * t[0],
                1 => out[(0, 1)] = 6.0 * t[1],
                _ => {}
            }
        }
        Some(out)
    }
}

/// `X_i = μ + diag(σ₁, σ₂) Z_i`, `i = 1, 2`.
#[derive(Debug, Clone)]
pub struct EqualMeansModel {
    /// `2 × 2`: row `i` is observation `X_i`.
    pub data: DMatrix<f64>,
}

pub fn equal_means_model(data: DMatrix<f64>, constraint: EqualMeansConstraint) -> Result<(EqualMeansModel, EqualMeansConstraint)> {
    if data.nrows() != 2 || data.ncols() != 2 {
        return Err(CgfdError::BadShape(format!(
            "equal-means data must be 2 × 2, got {} × {}",
            data.nrows(),
            data.ncols()
        )));
    }
    Ok((EqualMeansModel { data }, constraint))
}

impl FiducialModel for EqualMeansModel {
    fn dim(&self) -> usize {
        4
    }

    fn log_likelihood(&self, t: &DVector<f64>) -> f64 {
        let sig = [t[2], t[3]];
        if sig.iter().any(|&s| !(s > 0.0)) {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let z = (self.data[(i, j)] - t[j]) / sig[j];
                acc += -0.5 * z * z - sig[j].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
            }
        }
        acc
    }

    /// Rows ordered `(x₁₁, x₁₂, x₂₁, x₂₂)`.
    fn dga_gradient(&self, t: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let row = 2 * i + j;
                m[(row, j)] = 1.0;
                m[(row, 2 + j)] = (self.data[(i, j)] - t[j]) / t[2 + j];
            }
        }
        m
    }

    fn dga_gradient_partial(&self, t: &DVector<f64>, k: usize) -> Option<DMatrix<f64>> {
        let mut m = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let row = 2 * i + j;
                if k == j {
                    m[(row, 2 + j)] = -1.0 / t[2 + j];
                } else if k == 2 + j {
                    m[(row, 2 + j)] = -(self.data[(i, j)] - t[j]) / (t[2 + j] * t[2 + j]);
                }
            }
        }
        Some(m)
    }

    fn log_likelihood_gradient(&self, t: &DVector<f64>) -> Option<DVector<f64>> {
        let mut g = DVector::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                let s = t[2 + j];
                let r = self.data[(i, j)] - t[j];
                g[j] += r / (s * s);
                g[2 + j] += -1.0 / s + r * r / (s * s * s);
            }
        }
        Some(g)
    }
}

/// Direct parameterization `(μ, σ₁, σ₂) ↦ (μ, μ, σ₁, σ₂)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EqualMeansChart;

impl Chart for EqualMeansChart {
    fn intrinsic_dim(&self) -> usize {
        3
    }
    fn ambient_dim(&self) -> usize {
        4
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY), (0.0, f64::INFINITY), (0.0, f64::INFINITY)]
    }
    fn point(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![u[0], u[0], u[1], u[2]])
    }
    fn point_jacobian(&self, _u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    }
}
