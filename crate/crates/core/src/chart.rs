//! Global coordinate charts `u ↦ ψ⁻¹(u)` for manifolds that admit one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::geometry::log_gram_det_sqrt;

pub trait Chart: Send + Sync {
    fn intrinsic_dim(&self) -> usize;

    fn ambient_dim(&self) -> usize;

    /// Open axis-aligned box `(lower_i, upper_i)` of admissible coordinates.
    fn domain(&self) -> Vec<(f64, f64)>;

    /// `ψ⁻¹(u)`.
    fn point(&self, u: &DVector<f64>) -> DVector<f64>;

    /// `∇_u ψ⁻¹(u)`, a `d × (d − t)` matrix.
    fn point_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64>;

    fn contains(&self, u: &DVector<f64>) -> bool {
        u.len() == self.intrinsic_dim()
            && self.domain().iter().zip(u.iter()).all(|(&(lo, hi), &x)| x > lo && x < hi)
    }

    /// Area element `D(∇_u ψ⁻¹(u))`.
    fn area_element(&self, u: &DVector<f64>) -> f64 {
        log_gram_det_sqrt(&self.point_jacobian(u)).exp()
    }
}

/// Polar coordinates `(θ, φ) ↦ (cos θ sin φ, sin θ sin φ, cos φ)` on the
/// unit sphere minus the poles, `θ ∈ (0, 2π)`, `φ ∈ (0, π)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpherePolarChart;

impl Chart for SpherePolarChart {
    fn intrinsic_dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        3
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 2.0 * PI), (0.0, PI)]
    }
    fn point(&self, u: &DVector<f64>) -> DVector<f64> {
        let (az, pol) = (u[0], u[1]);
        DVector::from_vec(vec![az.cos() * pol.sin(), az.sin() * pol.sin(), pol.cos()])
    }
    fn point_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let (az, pol) = (u[0], u[1]);
        DMatrix::from_row_slice(
            3,
            2,
            &[
                -az.sin() * pol.sin(), az.cos() * pol.cos(),
                az.cos() * pol.sin(), az.sin() * pol.cos(),
                0.0, -pol.sin(),
            ],
        )
    }
    fn area_element(&self, u: &DVector<f64>) -> f64 {
        u[1].sin().abs()
    }
}

/// Angle chart `α ↦ (cos α, sin α)` on the unit circle, `α ∈ (−π, π)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircleAngleChart;

impl Chart for CircleAngleChart {
    fn intrinsic_dim(&self) -> usize {
        1
    }
    fn ambient_dim(&self) -> usize {
        2
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-PI, PI)]
    }
    fn point(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![u[0].cos(), u[0].sin()])
    }
    fn point_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(2, 1, &[-u[0].sin(), u[0].cos()])
    }
    fn area_element(&self, _u: &DVector<f64>) -> f64 {
        1.0
    }
}

/// The identity map on a box; turns an unconstrained model into a chart.
#[derive(Debug, Clone)]
pub struct IdentityChart {
    pub domain: Vec<(f64, f64)>,
}

impl IdentityChart {
    pub fn unbounded(dim: usize) -> Self {
        Self { domain: vec![(f64::NEG_INFINITY, f64::INFINITY); dim] }
    }
}

impl Chart for IdentityChart {
    fn intrinsic_dim(&self) -> usize {
        self.domain.len()
    }
    fn ambient_dim(&self) -> usize {
        self.domain.len()
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        self.domain.clone()
    }
    fn point(&self, u: &DVector<f64>) -> DVector<f64> {
        u.clone()
    }
    fn point_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(u.len(), u.len())
    }
}
