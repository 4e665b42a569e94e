//! Multivariate normal `N₃(μ, I₃)` with `μ` on the unit sphere.

use nalgebra::{DMatrix, DVector};

use crate::error::{CgfdError, Result};
use crate::fiducial::FiducialModel;
use crate::geometry::ImplicitManifold;

/// Unit sphere `{x ∈ ℝ^d : ‖x‖₂ − 1 = 0}`; `d = 2` gives the unit circle.
#[derive(Debug, Clone, Copy)]
pub struct UnitSphere {
    pub dim: usize,
}

impl UnitSphere {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2);
        Self { dim }
    }
}

impl ImplicitManifold for UnitSphere {
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn codim(&self) -> usize {
        1
    }
    fn constraint(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, theta.norm() - 1.0)
    }
    fn constraint_jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let r = theta.norm();
        DMatrix::from_row_slice(1, self.dim, (theta / r).as_slice())
    }
    fn constraint_jacobian_partial(&self, theta: &DVector<f64>, i: usize) -> Option<DMatrix<f64>> {
        let r = theta.norm();
        let mut row = theta * (-theta[i] / (r * r * r));
        row[i] += 1.0 / r;
        Some(DMatrix::from_row_slice(1, self.dim, row.as_slice()))
    }
}

/// The unit circle written as `g(θ) = (‖θ‖² − 1)·exp(β tanh(γ(θ₁ + θ₂)))`.
///
/// Same zero set and CGFD as [`UnitSphere`] with `dim = 2`, but Newton
/// iterations along a fixed normal no longer behave symmetrically between a
/// point and its proposal, so a projection can return somewhere other than
/// where it started.
#[derive(Debug, Clone, Copy)]
pub struct WarpedCircle {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for WarpedCircle {
    fn default() -> Self {
        Self { beta: 8.0, gamma: 1.0 }
    }
}

impl WarpedCircle {
    fn weight(&self, t: &DVector<f64>) -> (f64, f64) {
        let th = (self.gamma * (t[0] + t[1])).tanh();
        let w = (self.beta * th).exp();
        (w, w * self.beta * self.gamma * (1.0 - th * th))
    }
}

impl ImplicitManifold for WarpedCircle {
    fn ambient_dim(&self) -> usize {
        2
    }
    fn codim(&self) -> usize {
        1
    }
    fn constraint(&self, t: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, (t.norm_squared() - 1.0) * self.weight(t).0)
    }
    fn constraint_jacobian(&self, t: &DVector<f64>) -> DMatrix<f64> {
        let (w, dw) = self.weight(t);
        let h = t.norm_squared() - 1.0;
        DMatrix::from_row_slice(1, 2, &[2.0 * t[0] * w + h * dw, 2.0 * t[1] * w + h * dw])
    }
}

/// `X_i = μ + Z_i`, `Z_i ~ N₃(0, I₃)`.
#[derive(Debug, Clone)]
pub struct SphereMvnModel {
    /// `n × 3`, one observation per row.
    pub data: DMatrix<f64>,
    sum: DVector<f64>,
}

impl SphereMvnModel {
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Sample mean projected onto the sphere; the CGFD mode since the
    /// Jacobian factor is constant.
    pub fn projected_mean(&self) -> DVector<f64> {
        let m = &self.sum / self.n() as f64;
        let r = m.norm();
        if r > 0.0 {
            m / r
        } else {
            let mut e = DVector::zeros(3);
            e[2] = 1.0;
            e
        }
    }
}

/// Build the sphere model and its constraint `g(μ) = ‖μ‖₂ − 1`.
pub fn sphere_model(data: DMatrix<f64>) -> Result<(SphereMvnModel, UnitSphere)> {
    if data.nrows() == 0 {
        return Err(CgfdError::EmptyData);
    }
    if data.ncols() != 3 {
        return Err(CgfdError::BadShape(format!("sphere data needs 3 columns, got {}", data.ncols())));
    }
    let sum = data.row_sum().transpose();
    Ok((SphereMvnModel { data, sum }, UnitSphere::new(3)))
}

impl FiducialModel for SphereMvnModel {
    fn dim(&self) -> usize {
        3
    }
    fn log_likelihood(&self, mu: &DVector<f64>) -> f64 {
        let mut ss = 0.0;
        for row in self.data.row_iter() {
            ss += (row.transpose() - mu).norm_squared();
        }
        -0.5 * ss - 1.5 * self.n() as f64 * (2.0 * std::f64::consts::PI).ln()
    }
    fn dga_gradient(&self, _mu: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(3 * n, 3);
        for i in 0..n {
            for j in 0..3 {
                m[(3 * i + j, j)] = 1.0;
            }
        }
        m
    }
    fn dga_gradient_partial(&self, _mu: &DVector<f64>, _i: usize) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(3 * self.n(), 3))
    }
    fn log_likelihood_gradient(&self, mu: &DVector<f64>) -> Option<DVector<f64>> {
        Some(&self.sum - mu * self.n() as f64)
    }
}
