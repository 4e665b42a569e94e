//! Fiducial log-kernels: the unconstrained GFD, the constrained CGFD,
//! its gradient, the chart-parameterized GFD and the extrinsic (Hwang)
//! concentration. All kernels are unnormalized log-densities.

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::error::{CgfdError, Result};
use crate::geometry::{
    constraint_gram_inverse, fd_step, log_gram_det_sqrt, log_pseudo_det_scale, projection_from_jacobian,
    projection_partial, sorted_symmetric_eigen, ImplicitManifold, TangentFrame, RANK_EPS, TOL_ON,
};

/// A data-generating algorithm `y = A(w, θ)` together with its likelihood.
///
/// `dga_gradient` is `∇_θ A(w, θ)` evaluated at `w = A⁻¹(y, θ)`.
pub trait FiducialModel: Send + Sync {
    fn dim(&self) -> usize;

    /// `log f(y | θ)`.
    fn log_likelihood(&self, theta: &DVector<f64>) -> f64;

    /// `n_out × d` gradient of the data-generating algorithm.
    fn dga_gradient(&self, theta: &DVector<f64>) -> DMatrix<f64>;

    /// `∂/∂θ_i` of [`FiducialModel::dga_gradient`], when known in closed form.
    fn dga_gradient_partial(&self, _theta: &DVector<f64>, _i: usize) -> Option<DMatrix<f64>> {
        None
    }

    fn log_likelihood_gradient(&self, _theta: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
}

impl<F: FiducialModel + ?Sized> FiducialModel for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_likelihood(&self, theta: &DVector<f64>) -> f64 {
        (**self).log_likelihood(theta)
    }
    fn dga_gradient(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        (**self).dga_gradient(theta)
    }
    fn dga_gradient_partial(&self, theta: &DVector<f64>, i: usize) -> Option<DMatrix<f64>> {
        (**self).dga_gradient_partial(theta, i)
    }
    fn log_likelihood_gradient(&self, theta: &DVector<f64>) -> Option<DVector<f64>> {
        (**self).log_likelihood_gradient(theta)
    }
}

fn dga_partial_or_fd<F: FiducialModel + ?Sized>(model: &F, theta: &DVector<f64>, i: usize) -> DMatrix<f64> {
    if let Some(p) = model.dga_gradient_partial(theta, i) {
        return p;
    }
    let h = fd_step(theta[i]);
    let mut plus = theta.clone();
    plus[i] += h;
    let mut minus = theta.clone();
    minus[i] -= h;
    (model.dga_gradient(&plus) - model.dga_gradient(&minus)) / (2.0 * h)
}

fn log_likelihood_gradient_or_fd<F: FiducialModel + ?Sized>(model: &F, theta: &DVector<f64>) -> DVector<f64> {
    if let Some(g) = model.log_likelihood_gradient(theta) {
        return g;
    }
    DVector::from_iterator(
        theta.len(),
        (0..theta.len()).map(|i| {
            let h = fd_step(theta[i]);
            let mut plus = theta.clone();
            plus[i] += h;
            let mut minus = theta.clone();
            minus[i] -= h;
            (model.log_likelihood(&plus) - model.log_likelihood(&minus)) / (2.0 * h)
        }),
    )
}

fn check_feasible<M: ImplicitManifold + ?Sized>(m: &M, theta: &DVector<f64>) -> Result<()> {
    let residual = m.residual(theta);
    if residual <= TOL_ON {
        Ok(())
    } else {
        Err(CgfdError::OffManifold { residual })
    }
}

/// Unconstrained GFD: `log f(y|θ) + log D(∇_θA)`, `D(M) = det(MᵀM)^{1/2}`.
pub fn gfd_log_kernel<F: FiducialModel + ?Sized>(model: &F, theta: &DVector<f64>) -> Result<f64> {
    let log_jac = log_gram_det_sqrt(&model.dga_gradient(theta));
    if !log_jac.is_finite() {
        return Err(CgfdError::DegenerateJacobian);
    }
    Ok(model.log_likelihood(theta) + log_jac)
}

/// CGFD log-kernel using an already computed frame at `frame.point`.
///
/// Feasibility is the caller's responsibility here.
pub fn cgfd_log_kernel_at<F: FiducialModel + ?Sized>(model: &F, frame: &TangentFrame) -> Result<f64> {
    let log_jac = log_pseudo_det_scale(&model.dga_gradient(&frame.point), frame);
    if !log_jac.is_finite() {
        return Err(CgfdError::DegenerateJacobian);
    }
    Ok(model.log_likelihood(&frame.point) + log_jac)
}

/// CGFD: `log f(y|θ) + log D*(∇_θA · P_θ)` for `θ` on the manifold.
pub fn cgfd_log_kernel<F, M>(model: &F, m: &M, theta: &DVector<f64>) -> Result<f64>
where
    F: FiducialModel + ?Sized,
    M: ImplicitManifold + ?Sized,
{
    check_feasible(m, theta)?;
    let frame = TangentFrame::from_jacobian(theta.clone(), m.constraint_jacobian(theta))?;
    cgfd_log_kernel_at(model, &frame)
}

/// Ambient gradient of the CGFD log-kernel:
/// `∂ log f/∂θ_i + ½ Tr[(∇A P ∇Aᵀ)⁺ ∂(∇A P ∇Aᵀ)/∂θ_i]`.
///
/// The trace is evaluated in the `(d − t)`-dimensional tangent coordinates:
/// with `B = ∇A Q` and `G = BᵀB`, the nonzero spectrum of `∇A P ∇Aᵀ = BBᵀ`
/// is that of `G`, and the trace reduces to
/// `Tr[G⁻¹ Bᵀ ∂∇A Q] + ½ Tr[G⁻² Qᵀ H ∂P H Q]` with `H = ∇Aᵀ∇A`.
/// Only the tangential components are intrinsic.
pub fn cgfd_grad_log<F, M>(model: &F, m: &M, theta: &DVector<f64>) -> Result<DVector<f64>>
where
    F: FiducialModel + ?Sized,
    M: ImplicitManifold + ?Sized,
{
    check_feasible(m, theta)?;
    let d = theta.len();
    let jac = m.constraint_jacobian(theta);
    let frame = TangentFrame::from_jacobian(theta.clone(), jac.clone())?;
    let p = projection_from_jacobian(&jac)?;
    let gram_inv_g = constraint_gram_inverse(&jac)?;

    let a = model.dga_gradient(theta);
    let q = &frame.q;
    let b = &a * q;
    let g = b.transpose() * &b;
    let (values, vectors) = sorted_symmetric_eigen(&g);
    let k = values.len();
    if k > 0 {
        let largest = values[0];
        let smallest = values[k - 1];
        if !(largest > 0.0) || smallest < RANK_EPS * largest {
            let gap = if largest > 0.0 { smallest / largest } else { 0.0 };
            return Err(CgfdError::PseudoinverseFailure { gap });
        }
    }
    let inv = values.map(|v| 1.0 / v);
    let inv2 = values.map(|v| 1.0 / (v * v));
    let g_inv = &vectors * DMatrix::from_diagonal(&inv) * vectors.transpose();
    let g_inv2 = &vectors * DMatrix::from_diagonal(&inv2) * vectors.transpose();
    let h = a.transpose() * &a;
    let r = &h * q;
    let bt = b.transpose();

    let mut grad = log_likelihood_gradient_or_fd(model, theta);
    for i in 0..d {
        let da = dga_partial_or_fd(model, theta, i);
        let dp = projection_partial(m, theta, &p, &jac, &gram_inv_g, i)?;
        let first = (&g_inv * (&bt * (&da * q))).trace();
        let second = (&g_inv2 * (r.transpose() * &dp * &r)).trace();
        grad[i] += first + 0.5 * second;
    }
    Ok(grad)
}

/// GFD of the chart-reparameterized model:
/// `log f(y|ψ⁻¹(u)) + log D(∇_θA · ∇_uψ⁻¹)`.
pub fn parameterized_gfd_log_kernel<F, C>(model: &F, chart: &C, u: &DVector<f64>) -> Result<f64>
where
    F: FiducialModel + ?Sized,
    C: Chart + ?Sized,
{
    if !chart.contains(u) {
        return Err(CgfdError::OutOfDomain);
    }
    let theta = chart.point(u);
    let composed = model.dga_gradient(&theta) * chart.point_jacobian(u);
    let log_jac = log_gram_det_sqrt(&composed);
    if !log_jac.is_finite() {
        return Err(CgfdError::DegenerateJacobian);
    }
    Ok(model.log_likelihood(&theta) + log_jac)
}

/// Extrinsic density of an ambient GFD concentrated onto the level set:
/// `gfd_log_kernel(θ) − ½ log det(∇g ∇gᵀ)`. Depends on the form of `g`.
pub fn hwang_log_kernel<F, M>(model: &F, m: &M, theta: &DVector<f64>) -> Result<f64>
where
    F: FiducialModel + ?Sized,
    M: ImplicitManifold + ?Sized,
{
    check_feasible(m, theta)?;
    let jac = m.constraint_jacobian(theta);
    // Fails on rank deficiency.
    constraint_gram_inverse(&jac)?;
    let log_sqrt_det = log_gram_det_sqrt(&jac.transpose());
    if !log_sqrt_det.is_finite() {
        return Err(CgfdError::RankDeficient { condition: f64::INFINITY });
    }
    Ok(gfd_log_kernel(model, theta)? - log_sqrt_det)
}
