//! Level-set geometry: projection matrices, tangent/normal frames,
//! pseudodeterminant scales and Newton projection onto `g(θ) = 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CgfdError, ProjectionFailure, Result};

/// Feasibility tolerance on `‖g(θ)‖`.
pub const TOL_ON: f64 = 1e-8;
/// Newton target for `‖g(y)‖` when projecting onto the manifold.
pub const TOL_PROJECT: f64 = 1e-10;
pub const MAX_NEWTON_ITERS: usize = 50;
/// Newton gives up once `‖g‖` exceeds this multiple of its starting value.
pub const NEWTON_DIVERGENCE: f64 = 1e8;
/// Relative spectral threshold separating "nonzero" from "zero" eigenvalues.
pub const RANK_EPS: f64 = 1e-10;
/// Largest admissible condition number of `∇g ∇gᵀ`.
pub const COND_MAX: f64 = 1e12;

/// A manifold `{θ ∈ ℝ^d : g(θ) = 0}` with `g: ℝ^d → ℝ^t`.
pub trait ImplicitManifold: Send + Sync {
    fn ambient_dim(&self) -> usize;

    fn codim(&self) -> usize;

    /// `g(θ)`, a vector of length `codim()`.
    fn constraint(&self, theta: &DVector<f64>) -> DVector<f64>;

    /// `∇g(θ)`, a `codim() × ambient_dim()` matrix whose rows are `∂g_k/∂θ`.
    fn constraint_jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64>;

    /// `∂(∇g)/∂θ_i` when a closed form is available.
    fn constraint_jacobian_partial(&self, _theta: &DVector<f64>, _i: usize) -> Option<DMatrix<f64>> {
        None
    }

    fn intrinsic_dim(&self) -> usize {
        self.ambient_dim() - self.codim()
    }

    fn residual(&self, theta: &DVector<f64>) -> f64 {
        self.constraint(theta).norm()
    }

    fn is_feasible(&self, theta: &DVector<f64>) -> bool {
        self.residual(theta) <= TOL_ON
    }
}

impl<M: ImplicitManifold + ?Sized> ImplicitManifold for &M {
    fn ambient_dim(&self) -> usize {
        (**self).ambient_dim()
    }
    fn codim(&self) -> usize {
        (**self).codim()
    }
    fn constraint(&self, theta: &DVector<f64>) -> DVector<f64> {
        (**self).constraint(theta)
    }
    fn constraint_jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        (**self).constraint_jacobian(theta)
    }
    fn constraint_jacobian_partial(&self, theta: &DVector<f64>, i: usize) -> Option<DMatrix<f64>> {
        (**self).constraint_jacobian_partial(theta, i)
    }
}

type VecFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type MatFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A manifold assembled from closures.
pub struct FnManifold {
    ambient_dim: usize,
    codim: usize,
    g: Box<VecFn>,
    grad_g: Box<MatFn>,
}

impl FnManifold {
    pub fn new<G, J>(ambient_dim: usize, codim: usize, g: G, grad_g: J) -> Self
    where
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        assert!(codim >= 1 && codim < ambient_dim, "need 0 < t < d");
        Self { ambient_dim, codim, g: Box::new(g), grad_g: Box::new(grad_g) }
    }
}

impl ImplicitManifold for FnManifold {
    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }
    fn codim(&self) -> usize {
        self.codim
    }
    fn constraint(&self, theta: &DVector<f64>) -> DVector<f64> {
        (self.g)(theta)
    }
    fn constraint_jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        (self.grad_g)(theta)
    }
}

/// Symmetric eigendecomposition with eigenpairs sorted by decreasing eigenvalue.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Flip column signs so the first non-negligible entry of each column is nonnegative.
fn canonical_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let scale = col.amax();
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-12 * scale.max(1e-300)) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Rows of `∇g` scaled to unit length. The row space, and with it `P`, is
/// unchanged; the conditioning test then ignores the scale of each component
/// of `g`.
fn equilibrate_rows(jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = jac.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(CgfdError::RankDeficient { condition: f64::INFINITY });
        }
        row /= norm;
    }
    Ok(out)
}

/// `(∇g ∇gᵀ)⁻¹` of the row-equilibrated Jacobian, failing when that Gram
/// matrix is too ill-conditioned.
fn inverse_constraint_gram(jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = jac * jac.transpose();
    let (values, vectors) = sorted_symmetric_eigen(&gram);
    let largest = values[0];
    let smallest = values[values.len() - 1];
    let condition = if smallest > 0.0 { largest / smallest } else { f64::INFINITY };
    if !(largest > 0.0) || !(condition <= COND_MAX) {
        return Err(CgfdError::RankDeficient { condition });
    }
    let inv_values = values.map(|v| 1.0 / v);
    Ok(&vectors * DMatrix::from_diagonal(&inv_values) * vectors.transpose())
}

/// Full orthogonal factor of a Householder QR of `[∇gᵀ | 0]` for the
/// row-equilibrated `∇g`: the first `t` columns span `row(∇g)` and the
/// remaining `d − t` span its complement. The `R` diagonal estimates the
/// condition number of `∇g∇gᵀ` as `(max |r_ii| / min |r_ii|)²`.
fn orthogonal_split(jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (t, d) = jac.shape();
    if t > d {
        return Err(CgfdError::RankDeficient { condition: f64::INFINITY });
    }
    if t == 0 {
        return Ok(DMatrix::identity(d, d));
    }
    let mut m = DMatrix::zeros(d, d);
    m.columns_mut(0, t).copy_from(&equilibrate_rows(jac)?.transpose());
    let qr = m.qr();
    let diag = qr.r().diagonal().rows(0, t).abs();
    let (largest, smallest) = (diag.max(), diag.min());
    let condition = if smallest > 0.0 { (largest / smallest).powi(2) } else { f64::INFINITY };
    if !(largest > 0.0) || !(condition <= COND_MAX) {
        return Err(CgfdError::RankDeficient { condition });
    }
    Ok(qr.q())
}

fn complement_projection(n: &DMatrix<f64>) -> DMatrix<f64> {
    let d = n.nrows();
    let p = DMatrix::identity(d, d) - n * n.transpose();
    (&p + p.transpose()) * 0.5
}

/// `P = I − ∇gᵀ(∇g∇gᵀ)⁻¹∇g` for a given constraint Jacobian.
pub fn projection_from_jacobian(jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let t = jac.nrows();
    Ok(complement_projection(&orthogonal_split(jac)?.columns(0, t).into_owned()))
}

/// Projection onto the null space of `∇g(θ)`.
///
/// Feasibility of `θ` is not checked here, so the matrix can also be
/// evaluated at perturbed points (finite differences).
pub fn projection_matrix<M: ImplicitManifold + ?Sized>(m: &M, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
    projection_from_jacobian(&m.constraint_jacobian(theta))
}

/// Orthonormal tangent basis `Q` and normal basis `Q⊥` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub point: DVector<f64>,
    /// `d × (d − t)`, spans `null(∇g)`.
    pub q: DMatrix<f64>,
    /// `d × t`, spans `row(∇g)`.
    pub q_perp: DMatrix<f64>,
    /// The constraint Jacobian at `point`, kept for reuse.
    pub jacobian: DMatrix<f64>,
}

impl TangentFrame {
    /// Split the orthogonal factor of a QR of `∇gᵀ` into `Q⊥` and `Q`.
    pub fn from_jacobian(point: DVector<f64>, jacobian: DMatrix<f64>) -> Result<Self> {
        let (t, d) = jacobian.shape();
        let full = orthogonal_split(&jacobian)?;
        let mut q_perp = full.columns(0, t).into_owned();
        let mut q = full.columns(t, d - t).into_owned();
        canonical_signs(&mut q);
        canonical_signs(&mut q_perp);
        Ok(Self { point, q, q_perp, jacobian })
    }

    pub fn projection(&self) -> DMatrix<f64> {
        &self.q * self.q.transpose()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.q.ncols()
    }
}

pub fn tangent_frame<M: ImplicitManifold + ?Sized>(m: &M, theta: &DVector<f64>) -> Result<TangentFrame> {
    TangentFrame::from_jacobian(theta.clone(), m.constraint_jacobian(theta))
}

/// `log D(M Q) = ½ log det(Qᵀ Mᵀ M Q)`; `-∞` when the Gram matrix is degenerate.
pub fn log_pseudo_det_scale(m: &DMatrix<f64>, frame: &TangentFrame) -> f64 {
    log_gram_det_sqrt(&(m * &frame.q))
}

/// `D*(M P) = D(M Q)`, the square root of the product of the `d − t`
/// eigenvalues of `(MQ)ᵀ(MQ)`. Never negative.
pub fn pseudo_det_scale(m: &DMatrix<f64>, frame: &TangentFrame) -> f64 {
    log_pseudo_det_scale(m, frame).exp()
}

/// `½ log det(BᵀB)` via Cholesky; `-∞` if `BᵀB` is not positive definite.
pub(crate) fn log_gram_det_sqrt(b: &DMatrix<f64>) -> f64 {
    let gram = b.transpose() * b;
    let gram = (&gram + gram.transpose()) * 0.5;
    if gram.nrows() == 0 {
        return 0.0;
    }
    match gram.cholesky() {
        Some(chol) => {
            let l = chol.l_dirty();
            let mut acc = 0.0;
            for i in 0..l.nrows() {
                let v = l[(i, i)];
                if !(v > 0.0) {
                    return f64::NEG_INFINITY;
                }
                acc += v.ln();
            }
            acc
        }
        None => f64::NEG_INFINITY,
    }
}

/// Solve `g(y0 + N a) = 0` for `a ∈ ℝ^t` by full-step Newton iteration,
/// where the columns of `directions` (`d × t`) span the search space.
pub fn newton_along<M: ImplicitManifold + ?Sized>(
    m: &M,
    y0: &DVector<f64>,
    directions: &DMatrix<f64>,
) -> std::result::Result<DVector<f64>, ProjectionFailure> {
    let t = directions.ncols();
    let mut a = DVector::zeros(t);
    let mut y = y0.clone();
    let mut residual = m.constraint(&y);
    let limit = NEWTON_DIVERGENCE * residual.norm().max(TOL_PROJECT);
    for iteration in 0..=MAX_NEWTON_ITERS {
        let norm = residual.norm();
        if !norm.is_finite() {
            break;
        }
        if norm > limit {
            return Err(ProjectionFailure::NoConvergence { iterations: iteration, residual: norm });
        }
        let jac = m.constraint_jacobian(&y);
        if distance_estimate(&residual, &jac) <= TOL_PROJECT {
            return Ok(y);
        }
        if iteration == MAX_NEWTON_ITERS {
            return Err(ProjectionFailure::NoConvergence { iterations: iteration, residual: norm });
        }
        let system = jac * directions;
        let step = match system.lu().solve(&residual) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => return Err(ProjectionFailure::SingularSystem),
        };
        a -= step;
        y = y0 + directions * &a;
        residual = m.constraint(&y);
    }
    Err(ProjectionFailure::NoConvergence { iterations: MAX_NEWTON_ITERS, residual: residual.norm() })
}

/// First-order distance to the level set: each residual over the norm of
/// its gradient row. Rows whose gradient vanishes keep their raw residual.
fn distance_estimate(residual: &DVector<f64>, jac: &DMatrix<f64>) -> f64 {
    residual
        .iter()
        .zip(jac.row_iter())
        .map(|(r, row)| {
            let n = row.norm();
            if n > 0.0 && n.is_finite() { r / n } else { *r }
        })
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Move `y0` back onto the manifold along the normal space of the frame at
/// the proposal origin (not an ℓ₂ projection).
pub fn project_to_manifold<M: ImplicitManifold + ?Sized>(
    m: &M,
    y0: &DVector<f64>,
    frame_at_x: &TangentFrame,
) -> std::result::Result<DVector<f64>, ProjectionFailure> {
    newton_along(m, y0, &frame_at_x.q_perp)
}

/// Central-difference step `cbrt(ε)·max(1, |x|)`.
pub(crate) fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// `∂P/∂θ_i` from the closed-form Jacobian partial when available,
/// otherwise by central differences of the projection matrix.
pub fn projection_partial<M: ImplicitManifold + ?Sized>(
    m: &M,
    theta: &DVector<f64>,
    p: &DMatrix<f64>,
    jac: &DMatrix<f64>,
    gram_inv: &DMatrix<f64>,
    i: usize,
) -> Result<DMatrix<f64>> {
    if let Some(djac) = m.constraint_jacobian_partial(theta, i) {
        // ∂P = −(P ∂Gᵀ (G⁺)ᵀ + G⁺ ∂G P), G⁺ = Gᵀ(GGᵀ)⁻¹
        let pinv = jac.transpose() * gram_inv;
        let term = pinv.clone() * &djac * p;
        return Ok(-(&term + term.transpose()));
    }
    let h = fd_step(theta[i]);
    let mut plus = theta.clone();
    plus[i] += h;
    let mut minus = theta.clone();
    minus[i] -= h;
    let pp = projection_matrix(m, &plus)?;
    let pm = projection_matrix(m, &minus)?;
    Ok((pp - pm) / (2.0 * h))
}

pub(crate) fn constraint_gram_inverse(jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    inverse_constraint_gram(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn circle() -> FnManifold {
        FnManifold::new(
            2,
            1,
            |x| DVector::from_element(1, x.norm() - 1.0),
            |x| DMatrix::from_row_slice(1, 2, &[x[0] / x.norm(), x[1] / x.norm()]),
        )
    }

    fn hyperplane(d: usize) -> FnManifold {
        FnManifold::new(
            d,
            1,
            move |x| DVector::from_element(1, x[d - 1]),
            move |_| {
                let mut j = DMatrix::zeros(1, d);
                j[(0, d - 1)] = 1.0;
                j
            },
        )
    }

    #[test]
    fn hyperplane_projection_is_axis_aligned() {
        let m = hyperplane(4);
        let theta = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.0]);
        let p = projection_matrix(&m, &theta).unwrap();
        let mut expected = DMatrix::identity(4, 4);
        expected[(3, 3)] = 0.0;
        assert_relative_eq!(p, expected, epsilon = 1e-14);

        let frame = tangent_frame(&m, &theta).unwrap();
        assert_relative_eq!(&frame.q * frame.q.transpose(), expected, epsilon = 1e-12);
        let mut e4 = DMatrix::zeros(4, 1);
        e4[(3, 0)] = 1.0;
        assert_relative_eq!(frame.q_perp, e4, epsilon = 1e-12);
    }

    #[test]
    fn sphere_projection_matches_closed_form() {
        let m = FnManifold::new(
            3,
            1,
            |x| DVector::from_element(1, x.norm() - 1.0),
            |x| DMatrix::from_row_slice(1, 3, &[x[0] / x.norm(), x[1] / x.norm(), x[2] / x.norm()]),
        );
        let mu = DVector::from_vec(vec![0.48, -0.6, 0.64]);
        let p = projection_matrix(&m, &mu).unwrap();
        let (a, b, c) = (mu[0], mu[1], mu[2]);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                b * b + c * c, -a * b, -a * c,
                -a * b, a * a + c * c, -b * c,
                -a * c, -b * c, a * a + b * b,
            ],
        );
        assert_relative_eq!(p, expected, epsilon = 1e-14);
    }

    #[test]
    fn orthonormal_frame_has_unit_pseudo_det() {
        let m = circle();
        let frame = tangent_frame(&m, &DVector::from_vec(vec![0.6, 0.8])).unwrap();
        assert_relative_eq!(pseudo_det_scale(&DMatrix::identity(2, 2), &frame), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_matrix_has_zero_pseudo_det() {
        let m = circle();
        let frame = tangent_frame(&m, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        // Rows only see the normal direction.
        let mm = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        assert_eq!(pseudo_det_scale(&mm, &frame), 0.0);
    }

    #[test]
    fn redundant_constraints_are_rank_deficient() {
        let m = FnManifold::new(
            3,
            2,
            |x| DVector::from_vec(vec![x[2], 2.0 * x[2]]),
            |_| DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0]),
        );
        let err = projection_matrix(&m, &DVector::zeros(3)).unwrap_err();
        assert!(matches!(err, CgfdError::RankDeficient { .. }));
    }

    #[test]
    fn projection_of_point_already_on_manifold_is_identity() {
        let m = circle();
        let x = DVector::from_vec(vec![0.6, 0.8]);
        let frame = tangent_frame(&m, &x).unwrap();
        let y = project_to_manifold(&m, &x, &frame).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn circle_projection_lands_on_normal_line() {
        let m = circle();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let frame = tangent_frame(&m, &x).unwrap();
        let y0 = DVector::from_vec(vec![1.0, 0.3]);
        let y = project_to_manifold(&m, &y0, &frame).unwrap();
        // Bisection on the normal line y = (1 + a, 0.3).
        let (mut lo, mut hi) = (-0.5_f64, 0.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = ((1.0 + mid).powi(2) + 0.09).sqrt() - 1.0;
            if v > 0.0 { hi = mid } else { lo = mid }
        }
        assert_relative_eq!(y[0], 1.0 + 0.5 * (lo + hi), epsilon = 1e-10);
        assert_relative_eq!(y[0], 0.91_f64.sqrt(), epsilon = 1e-10);
        assert_eq!(y[1], 0.3);
    }

    #[test]
    fn far_preproposal_fails_to_project() {
        let m = circle();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let frame = tangent_frame(&m, &x).unwrap();
        let y0 = DVector::from_vec(vec![-1.0, 2.0]);
        assert!(project_to_manifold(&m, &y0, &frame).is_err());
    }

    #[test]
    fn analytic_projection_partial_matches_differences() {
        struct Sphere;
        impl ImplicitManifold for Sphere {
            fn ambient_dim(&self) -> usize { 3 }
            fn codim(&self) -> usize { 1 }
            fn constraint(&self, x: &DVector<f64>) -> DVector<f64> {
                DVector::from_element(1, x.norm() - 1.0)
            }
            fn constraint_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
                DMatrix::from_row_slice(1, 3, (x / x.norm()).as_slice())
            }
            fn constraint_jacobian_partial(&self, x: &DVector<f64>, i: usize) -> Option<DMatrix<f64>> {
                let r = x.norm();
                let mut e = DVector::zeros(3);
                e[i] = 1.0;
                let row = e / r - x * (x[i] / r.powi(3));
                Some(DMatrix::from_row_slice(1, 3, row.as_slice()))
            }
        }
        let x = DVector::from_vec(vec![0.3, -0.4, 0.866_025_403_784_438_6]);
        let jac = Sphere.constraint_jacobian(&x);
        let p = projection_from_jacobian(&jac).unwrap();
        let gi = constraint_gram_inverse(&jac).unwrap();
        for i in 0..3 {
            let analytic = projection_partial(&Sphere, &x, &p, &jac, &gi, i).unwrap();
            let numeric = projection_partial(&sphere_fd(), &x, &p, &jac, &gi, i).unwrap();
            assert_relative_eq!(analytic, numeric, epsilon = 1e-7);
        }

        fn sphere_fd() -> FnManifold {
            FnManifold::new(
                3,
                1,
                |x| DVector::from_element(1, x.norm() - 1.0),
                |x| DMatrix::from_row_slice(1, 3, (x / x.norm()).as_slice()),
            )
        }
    }
}
