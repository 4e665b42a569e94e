//! Linear logspline density on (0, 1) with fixed knots:
//! `f(y|θ) = exp{Σ θ_j B_j(y)}` restricted to `log ∫₀¹ f = 0`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{CgfdError, Result};
use crate::fiducial::FiducialModel;
use crate::geometry::{newton_along, ImplicitManifold, MAX_NEWTON_ITERS};

/// `φ_m(δ) = ∫₀¹ τ^{m−1} e^{δτ} dτ` for `m = 1, 2, 3`.
fn phi123(delta: f64) -> [f64; 3] {
    if delta.abs() <= 1.0 {
        // Σ_k δ^k / (k! (k + m))
        let mut out = [0.0; 3];
        let mut term = 1.0;
        for k in 0..30 {
            let kf = k as f64;
            for (m, o) in out.iter_mut().enumerate() {
                *o += term / (kf + m as f64 + 1.0);
            }
            term *= delta / (kf + 1.0);
            if term.abs() < 1e-18 {
                break;
            }
        }
        out
    } else {
        let e = delta.exp();
        let p1 = (e - 1.0) / delta;
        let p2 = (e - p1) / delta;
        let p3 = (e - 2.0 * p2) / delta;
        [p1, p2, p3]
    }
}

/// Evenly spaced knots with one exterior knot on each side of (0, 1):
/// `−0.15, 0, 0.15, …, 1.05`.
pub fn default_knots() -> Vec<f64> {
    (0..9).map(|k| -0.15 + 0.15 * k as f64).collect()
}

/// Linear B-spline (hat) basis: `B_j` rises on `[t_j, t_{j+1}]` and falls on
/// `[t_{j+1}, t_{j+2}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBSplineBasis {
    knots: Vec<f64>,
    /// Breakpoints of every `B_j` restricted to `[0, 1]`.
    breaks: Vec<f64>,
}

impl LinearBSplineBasis {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 3 {
            return Err(CgfdError::KnotsInvalid(format!("need at least 3 knots, got {}", knots.len())));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(CgfdError::KnotsInvalid("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CgfdError::KnotsInvalid("knots must be strictly increasing".into()));
        }
        if knots[0] > 0.0 || *knots.last().unwrap() < 1.0 {
            return Err(CgfdError::KnotsInvalid("knots must cover [0, 1]".into()));
        }
        let mut breaks = vec![0.0];
        breaks.extend(knots.iter().copied().filter(|&k| k > 0.0 && k < 1.0));
        breaks.push(1.0);
        Ok(Self { knots, breaks })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn dim(&self) -> usize {
        self.knots.len() - 2
    }

    pub fn basis(&self, j: usize, y: f64) -> f64 {
        let (a, b, c) = (self.knots[j], self.knots[j + 1], self.knots[j + 2]);
        if y <= a || y >= c {
            0.0
        } else if y <= b {
            (y - a) / (b - a)
        } else {
            (c - y) / (c - b)
        }
    }

    pub fn eval_all(&self, y: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), (0..self.dim()).map(|j| self.basis(j, y)))
    }

    /// Basis functions nonzero somewhere in `(l, r)`.
    fn active(&self, l: f64, r: f64) -> std::ops::Range<usize> {
        let lo = (0..self.dim()).find(|&j| self.knots[j + 2] > l).unwrap_or(self.dim());
        let hi = (0..self.dim()).rev().find(|&j| self.knots[j] < r).map_or(0, |j| j + 1);
        lo..hi.max(lo)
    }
}

/// Integrals of the form `∫ B_j e^{s}` and `∫ B_j B_k e^{s}` over a range,
/// all scaled by `e^{−shift}`.
struct Moments {
    zeroth: f64,
    first: DVector<f64>,
    second: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct LogsplineModel {
    pub basis: LinearBSplineBasis,
    pub data: Vec<f64>,
    /// `Σ_i B(y_i)`.
    basis_sum: DVector<f64>,
}

/// The log-normalizer constraint `g(θ) = log ∫₀¹ exp{Σ θ_j B_j}`.
#[derive(Debug, Clone)]
pub struct LogsplineConstraint {
    pub basis: LinearBSplineBasis,
}

pub fn logspline_model(data: Vec<f64>, knots: Vec<f64>) -> Result<(LogsplineModel, LogsplineConstraint)> {
    let basis = LinearBSplineBasis::new(knots)?;
    if data.is_empty() {
        return Err(CgfdError::EmptyData);
    }
    if let Some(&value) = data.iter().find(|&&y| !(y > 0.0 && y < 1.0)) {
        return Err(CgfdError::DataOutOfRange { value });
    }
    let mut basis_sum = DVector::zeros(basis.dim());
    for &y in &data {
        basis_sum += basis.eval_all(y);
    }
    Ok((LogsplineModel { basis: basis.clone(), data, basis_sum }, LogsplineConstraint { basis }))
}

impl LinearBSplineBasis {
    /// `s(y) = Σ θ_j B_j(y)`.
    pub fn spline(&self, theta: &DVector<f64>, y: f64) -> f64 {
        self.active(y, y).map(|j| theta[j] * self.basis(j, y)).sum()
    }

    /// Moments over `[0, upper]`, scaled by `e^{−shift}`.
    fn moments(&self, theta: &DVector<f64>, upper: f64, shift: f64, second: bool) -> Moments {
        let d = self.dim();
        let mut zeroth = 0.0;
        let mut first = DVector::zeros(d);
        let mut sec = if second { Some(DMatrix::zeros(d, d)) } else { None };
        for w in self.breaks.windows(2) {
            let l = w[0];
            if l >= upper {
                break;
            }
            let r = w[1].min(upper);
            let width = r - l;
            if width <= 0.0 {
                continue;
            }
            let (sl, sr) = (self.spline(theta, l), self.spline(theta, r));
            let [p1, p2, p3] = phi123(sr - sl);
            let scale = width * (sl - shift).exp();
            zeroth += scale * p1;
            let range = self.active(l, r);
            let vals: Vec<(usize, f64, f64)> =
                range.map(|j| (j, self.basis(j, l), self.basis(j, r))).collect();
            for &(j, bl, br) in &vals {
                first[j] += scale * (bl * (p1 - p2) + br * p2);
            }
            if let Some(s) = sec.as_mut() {
                let (c00, c01, c11) = (p1 - 2.0 * p2 + p3, p2 - p3, p3);
                for &(j, jl, jr) in &vals {
                    for &(k, kl, kr) in &vals {
                        s[(j, k)] += scale * (jl * kl * c00 + (jl * kr + jr * kl) * c01 + jr * kr * c11);
                    }
                }
            }
        }
        Moments { zeroth, first, second: sec }
    }

    fn max_on_unit(&self, theta: &DVector<f64>) -> f64 {
        self.breaks.iter().map(|&b| self.spline(theta, b)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `log ∫₀¹ exp{s}`.
    pub fn log_normalizer(&self, theta: &DVector<f64>) -> f64 {
        let shift = self.max_on_unit(theta);
        shift + self.moments(theta, 1.0, shift, false).zeroth.ln()
    }

    /// `E[B_j]` under the normalized density.
    pub fn mean_basis(&self, theta: &DVector<f64>) -> DVector<f64> {
        let shift = self.max_on_unit(theta);
        let m = self.moments(theta, 1.0, shift, false);
        m.first / m.zeroth
    }

    /// `Cov[B]` under the normalized density; the Hessian of the log-normalizer.
    pub fn basis_covariance(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let shift = self.max_on_unit(theta);
        let m = self.moments(theta, 1.0, shift, true);
        let mean = &m.first / m.zeroth;
        m.second.unwrap() / m.zeroth - &mean * mean.transpose()
    }

    /// Normalized density `exp{s(y) − g(θ)}` on `[0, 1]`, zero elsewhere.
    pub fn density(&self, theta: &DVector<f64>, y: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        (self.spline(theta, y) - self.log_normalizer(theta)).exp()
    }

    /// Inverse CDF of the normalized density, by closed-form inversion on
    /// each linear segment of `s`.
    pub fn quantile(&self, theta: &DVector<f64>, u: f64) -> f64 {
        let shift = self.max_on_unit(theta);
        let mut masses = Vec::with_capacity(self.breaks.len() - 1);
        for w in self.breaks.windows(2) {
            let (l, r) = (w[0], w[1]);
            let (sl, sr) = (self.spline(theta, l), self.spline(theta, r));
            masses.push((r - l) * (sl - shift).exp() * phi123(sr - sl)[0]);
        }
        let total: f64 = masses.iter().sum();
        let mut target = u.clamp(0.0, 1.0) * total;
        for (i, w) in self.breaks.windows(2).enumerate() {
            if target > masses[i] && i + 1 < masses.len() {
                target -= masses[i];
                continue;
            }
            let (l, r) = (w[0], w[1]);
            let (sl, sr) = (self.spline(theta, l), self.spline(theta, r));
            let delta = sr - sl;
            let scale = (r - l) * (sl - shift).exp();
            // Solve scale · (e^{δτ} − 1)/δ = target for τ.
            let x = target.min(masses[i]) / scale;
            let tau = if delta.abs() < 1e-12 { x } else { (delta * x).ln_1p() / delta };
            return l + tau.clamp(0.0, 1.0) * (r - l);
        }
        1.0
    }
}

impl ImplicitManifold for LogsplineConstraint {
    fn ambient_dim(&self) -> usize {
        self.basis.dim()
    }
    fn codim(&self) -> usize {
        1
    }
    fn constraint(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, self.basis.log_normalizer(theta))
    }
    fn constraint_jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let grad = self.basis.mean_basis(theta);
        DMatrix::from_row_slice(1, grad.len(), grad.as_slice())
    }
    fn constraint_jacobian_partial(&self, theta: &DVector<f64>, i: usize) -> Option<DMatrix<f64>> {
        let hess = self.basis.basis_covariance(theta);
        Some(DMatrix::from_fn(1, hess.ncols(), |_, j| hess[(i, j)]))
    }
}

impl LogsplineModel {
    pub fn n(&self) -> usize {
        self.data.len()
    }

    /// Empirical mean of `B(y_i)`.
    pub fn mean_basis_data(&self) -> DVector<f64> {
        &self.basis_sum / self.data.len() as f64
    }
}

impl FiducialModel for LogsplineModel {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn log_likelihood(&self, theta: &DVector<f64>) -> f64 {
        theta.dot(&self.basis_sum)
    }

    /// Row `i` is `∂y_i/∂θ = −∫₀^{y_i} B e^{s} / e^{s(y_i)}`.
    fn dga_gradient(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let d = self.basis.dim();
        let mut out = DMatrix::zeros(self.data.len(), d);
        for (i, &y) in self.data.iter().enumerate() {
            let m = self.basis.moments(theta, y, self.basis.spline(theta, y), false);
            for j in 0..d {
                out[(i, j)] = -m.first[j];
            }
        }
        out
    }

    fn dga_gradient_partial(&self, theta: &DVector<f64>, k: usize) -> Option<DMatrix<f64>> {
        let d = self.basis.dim();
        let mut out = DMatrix::zeros(self.data.len(), d);
        for (i, &y) in self.data.iter().enumerate() {
            let m = self.basis.moments(theta, y, self.basis.spline(theta, y), true);
            let sec = m.second.unwrap();
            let bk = self.basis.basis(k, y);
            for j in 0..d {
                out[(i, j)] = -sec[(j, k)] + m.first[j] * bk;
            }
        }
        Some(out)
    }

    fn log_likelihood_gradient(&self, _theta: &DVector<f64>) -> Option<DVector<f64>> {
        Some(self.basis_sum.clone())
    }
}

/// Feasible `θ` maximizing `θ·m` subject to `g(θ) = 0`; solves
/// `m = λ∇g(θ)`, `g(θ) = 0` by damped Newton.
///
/// With `m` the empirical basis mean this is the constrained MLE; with
/// `m = E_p[B]` for a density `p` it minimizes `KL(p ‖ f_θ)`.
pub fn fit_moment_target(basis: &LinearBSplineBasis, target: &DVector<f64>) -> Result<DVector<f64>> {
    let d = basis.dim();
    let constraint = LogsplineConstraint { basis: basis.clone() };
    let residual = |theta: &DVector<f64>, lambda: f64| -> DVector<f64> {
        let grad = basis.mean_basis(theta);
        let mut r = DVector::zeros(d + 1);
        r.rows_mut(0, d).copy_from(&(target - grad * lambda));
        r[d] = basis.log_normalizer(theta);
        r
    };
    let mut theta = DVector::zeros(d);
    let mut lambda = 1.0;
    let mut r = residual(&theta, lambda);
    for _ in 0..10 * MAX_NEWTON_ITERS {
        let norm = r.norm();
        if norm < 1e-12 {
            break;
        }
        let grad = basis.mean_basis(&theta);
        let hess = basis.basis_covariance(&theta);
        let mut jac = DMatrix::zeros(d + 1, d + 1);
        jac.view_mut((0, 0), (d, d)).copy_from(&(-hess * lambda));
        jac.view_mut((0, d), (d, 1)).copy_from(&(-&grad));
        jac.view_mut((d, 0), (1, d)).copy_from(&grad.transpose());
        let step = jac.lu().solve(&(-&r)).ok_or(CgfdError::InfeasibleInit("singular KKT system".into()))?;
        let mut t = 1.0;
        loop {
            let cand_theta = &theta + step.rows(0, d) * t;
            let cand_lambda = lambda + step[d] * t;
            let cand_r = residual(&cand_theta, cand_lambda);
            if cand_r.norm() < (1.0 - 1e-4 * t) * norm || t < 1e-8 {
                theta = cand_theta;
                lambda = cand_lambda;
                r = cand_r;
                break;
            }
            t *= 0.5;
        }
    }
    if r.norm() > 1e-8 {
        return Err(CgfdError::InfeasibleInit(format!("moment fit did not converge (residual {:e})", r.norm())));
    }
    // Final polish onto the constraint surface.
    let dir = constraint.constraint_jacobian(&theta).transpose();
    Ok(newton_along(&constraint, &theta, &dir).unwrap_or(theta))
}

/// Constrained maximum likelihood estimate.
pub fn logspline_mle(model: &LogsplineModel) -> Result<DVector<f64>> {
    fit_moment_target(&model.basis, &model.mean_basis_data())
}

/// Triangular distribution on `[lower, upper]` with the given mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangular {
    pub lower: f64,
    pub mode: f64,
    pub upper: f64,
}

impl Default for Triangular {
    fn default() -> Self {
        Self { lower: 0.0, mode: 0.2, upper: 1.0 }
    }
}

impl Triangular {
    pub fn pdf(&self, y: f64) -> f64 {
        let Self { lower: a, mode: c, upper: b } = *self;
        if y < a || y > b {
            0.0
        } else if y < c {
            2.0 * (y - a) / ((b - a) * (c - a))
        } else if y > c {
            2.0 * (b - y) / ((b - a) * (b - c))
        } else {
            2.0 / (b - a)
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let Self { lower: a, mode: c, upper: b } = *self;
        let split = (c - a) / (b - a);
        if u < split {
            a + (u * (b - a) * (c - a)).sqrt()
        } else {
            b - ((1.0 - u) * (b - a) * (b - c)).sqrt()
        }
    }

    /// Draws strictly inside `(lower, upper)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| loop {
                let y = self.quantile(rng.random::<f64>());
                if y > self.lower && y < self.upper {
                    break y;
                }
            })
            .collect()
    }

    /// `E[B_j(Y)]`, exact: the integrand is piecewise quadratic and is
    /// integrated by 3-point Gauss–Legendre on each piece.
    pub fn mean_basis(&self, basis: &LinearBSplineBasis) -> DVector<f64> {
        let mut cuts: Vec<f64> = basis
            .knots()
            .iter()
            .copied()
            .chain([self.lower, self.mode, self.upper])
            .filter(|&x| x >= self.lower && x <= self.upper)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let mut out = DVector::zeros(basis.dim());
        for w in cuts.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (x, wt) in nodes.iter().zip(weights) {
                let y = mid + half * x;
                out += basis.eval_all(y) * (wt * half * self.pdf(y));
            }
        }
        out
    }
}

/// Logspline closest in KL divergence to the triangular law.
pub fn kl_optimal_logspline(basis: &LinearBSplineBasis, truth: &Triangular) -> Result<DVector<f64>> {
    fit_moment_target(basis, &truth.mean_basis(basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    /// Piecewise Simpson over the breakpoints so kinks do not cost accuracy.
    fn integrate<F: Fn(f64) -> f64>(basis: &LinearBSplineBasis, f: F, upper: f64) -> f64 {
        let mut total = 0.0;
        for w in basis.breaks.windows(2) {
            let (l, r) = (w[0], w[1].min(upper));
            if r > l {
                total += simpson(&f, l, r, 2000);
            }
        }
        total
    }

    fn theta() -> DVector<f64> {
        DVector::from_vec(vec![0.3, -1.2, 2.0, 0.5, -0.7, 1.1, -2.5])
    }

    #[test]
    fn phi_branches_agree() {
        for &d in &[-1.0, -0.999_999, 1.0, 1.000_001] {
            let a = phi123(d);
            let b = [
                simpson(|t| (d * t).exp(), 0.0, 1.0, 2000),
                simpson(|t| t * (d * t).exp(), 0.0, 1.0, 2000),
                simpson(|t| t * t * (d * t).exp(), 0.0, 1.0, 2000),
            ];
            for m in 0..3 {
                assert_relative_eq!(a[m], b[m], max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn zero_is_feasible() {
        let basis = LinearBSplineBasis::new(default_knots()).unwrap();
        assert_eq!(basis.dim(), 7);
        assert_relative_eq!(basis.log_normalizer(&DVector::zeros(7)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constraint_gradient_matches_quadrature() {
        let basis = LinearBSplineBasis::new(default_knots()).unwrap();
        let t = theta();
        let z = integrate(&basis, |y| basis.spline(&t, y).exp(), 1.0);
        assert_relative_eq!(basis.log_normalizer(&t), z.ln(), epsilon = 1e-10);
        let grad = basis.mean_basis(&t);
        for j in 0..7 {
            let e = integrate(&basis, |y| basis.basis(j, y) * basis.spline(&t, y).exp(), 1.0) / z;
            assert_relative_eq!(grad[j], e, epsilon = 1e-8);
        }
    }

    #[test]
    fn dga_matches_implicit_differentiation() {
        let data = vec![0.05, 0.2, 0.47, 0.93];
        let (model, _) = logspline_model(data.clone(), default_knots()).unwrap();
        let t = theta();
        let j = model.dga_gradient(&t);
        for (i, &y) in data.iter().enumerate() {
            for k in 0..7 {
                let num = integrate(&model.basis, |x| model.basis.basis(k, x) * model.basis.spline(&t, x).exp(), y);
                assert_relative_eq!(j[(i, k)], -num / model.basis.spline(&t, y).exp(), epsilon = 1e-8);
            }
        }
        for k in 0..7 {
            let h = 1e-6;
            let mut tp = t.clone();
            tp[k] += h;
            let mut tm = t.clone();
            tm[k] -= h;
            let fd = (model.dga_gradient(&tp) - model.dga_gradient(&tm)) / (2.0 * h);
            assert_relative_eq!(model.dga_gradient_partial(&t, k).unwrap(), fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let basis = LinearBSplineBasis::new(default_knots()).unwrap();
        let t = theta();
        let z = integrate(&basis, |y| basis.spline(&t, y).exp(), 1.0);
        for &u in &[0.01, 0.2, 0.5, 0.77, 0.99] {
            let y = basis.quantile(&t, u);
            let cdf = integrate(&basis, |x| basis.spline(&t, x).exp(), y) / z;
            assert_relative_eq!(cdf, u, epsilon = 1e-8);
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(logspline_model(vec![], default_knots()), Err(CgfdError::EmptyData)));
        assert!(matches!(
            logspline_model(vec![0.5, 1.0], default_knots()),
            Err(CgfdError::DataOutOfRange { .. })
        ));
        assert!(matches!(
            logspline_model(vec![0.5], vec![0.1, 0.5, 1.2]),
            Err(CgfdError::KnotsInvalid(_))
        ));
        assert!(matches!(
            logspline_model(vec![0.5], vec![-0.1, 0.5, 0.4, 1.2]),
            Err(CgfdError::KnotsInvalid(_))
        ));
    }

    #[test]
    fn triangular_moments_match_sampling() {
        let basis = LinearBSplineBasis::new(default_knots()).unwrap();
        let tri = Triangular::default();
        let exact = tri.mean_basis(&basis);
        assert_relative_eq!(simpson(|y| tri.pdf(y), 0.0, 0.2, 10) + simpson(|y| tri.pdf(y), 0.2, 1.0, 10), 1.0, epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = tri.sample(&mut rng, 200_000);
        let mut emp = DVector::zeros(7);
        for &y in &draws {
            emp += basis.eval_all(y);
        }
        emp /= draws.len() as f64;
        assert_relative_eq!(exact, emp, epsilon = 5e-3);
    }

    #[test]
    fn kl_fit_is_feasible_and_optimal_on_a_lattice() {
        let basis = LinearBSplineBasis::new(default_knots()).unwrap();
        let tri = Triangular::default();
        let m = tri.mean_basis(&basis);
        let opt = kl_optimal_logspline(&basis, &tri).unwrap();
        assert!(basis.log_normalizer(&opt).abs() < 1e-10);
        // On the constraint surface KL(p‖f_θ) = const − θ·m.
        let constraint = LogsplineConstraint { basis: basis.clone() };
        let frame = crate::geometry::tangent_frame(&constraint, &opt).unwrap();
        let best = opt.dot(&m);
        for a in -2..=2 {
            for b in -2..=2 {
                for c in -2..=2 {
                    if a == 0 && b == 0 && c == 0 {
                        continue;
                    }
                    let v = DVector::from_vec(vec![a as f64, b as f64, c as f64, 0.5, -0.5, 0.0]) * 0.05;
                    let y0 = &opt + &frame.q * v;
                    let y = newton_along(&constraint, &y0, &frame.q_perp).unwrap();
                    assert!(y.dot(&m) < best);
                }
            }
        }
    }
}
