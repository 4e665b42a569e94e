//! Stationary AR(1) covariance learned through a Cayley-transform DGA,
//! `X = (I − A)(I + A)⁻¹ Λ Z`, with Toeplitz and geometric-decay constraints
//! on `Σ = C Λ² Cᵀ`.
//!
//! Parameter layout: the strictly upper entries `a_{qr}` (`q < r`, row-major)
//! of the skew-symmetric `A`, followed by `λ_1, …, λ_n`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CgfdError, Result};
use crate::fiducial::FiducialModel;
use crate::geometry::{sorted_symmetric_eigen, ImplicitManifold};

/// Lookup between the flat parameter vector and `(A, Λ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyLayout {
    pub n: usize,
    pairs: Vec<(usize, usize)>,
}

impl CayleyLayout {
    pub fn new(n: usize) -> Self {
        let pairs = (0..n).flat_map(|q| (q + 1..n).map(move |r| (q, r))).collect();
        Self { n, pairs }
    }

    pub fn dim(&self) -> usize {
        self.pairs.len() + self.n
    }

    pub fn skew_len(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn skew(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (idx, &(q, r)) in self.pairs.iter().enumerate() {
            a[(q, r)] = theta[idx];
            a[(r, q)] = -theta[idx];
        }
        a
    }

    pub fn lambdas(&self, theta: &DVector<f64>) -> DVector<f64> {
        theta.rows(self.pairs.len(), self.n).into_owned()
    }

    pub fn pack(&self, a: &DMatrix<f64>, lambdas: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (idx, &(q, r)) in self.pairs.iter().enumerate() {
            out[idx] = a[(q, r)];
        }
        out.rows_mut(self.pairs.len(), self.n).copy_from(lambdas);
        out
    }

    /// `W = (I + A)⁻¹`, `C = (I − A) W`.
    pub fn cayley(&self, theta: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let a = self.skew(theta);
        let id = DMatrix::<f64>::identity(self.n, self.n);
        let w = (&id + &a).try_inverse().ok_or(CgfdError::CayleySingular)?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(CgfdError::CayleySingular);
        }
        let c = (&id - &a) * &w;
        Ok((w, c))
    }

    /// `Σ(A, Λ) = C Λ² Cᵀ`.
    pub fn covariance(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (_, c) = self.cayley(theta)?;
        let lam = self.lambdas(theta);
        if lam.iter().any(|&l| !(l.abs() > 0.0) || !l.is_finite()) {
            return Err(CgfdError::CovarianceNotSpd);
        }
        let lam2 = DMatrix::from_diagonal(&lam.map(|l| l * l));
        Ok(&c * lam2 * c.transpose())
    }

    /// `∂Σ/∂θ_k` for every parameter.
    pub fn covariance_partials(&self, theta: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        let (w, c) = self.cayley(theta)?;
        let lam = self.lambdas(theta);
        let lam2 = DMatrix::from_diagonal(&lam.map(|l| l * l));
        let x = &w * lam2 * c.transpose();
        let mut out = Vec::with_capacity(self.dim());
        for &(q, r) in &self.pairs {
            let b = w.column(r) * x.row(q) - w.column(q) * x.row(r);
            out.push((&b + b.transpose()) * 2.0);
        }
        for s in 0..self.n {
            out.push(c.column(s) * c.column(s).transpose() * (2.0 * lam[s]));
        }
        Ok(out)
    }
}

/// `(ρ, σ)` read off the first row of a covariance matrix.
pub fn ar1_functionals(sigma: &DMatrix<f64>) -> (f64, f64) {
    let rho = sigma[(0, 1)] / sigma[(0, 0)];
    let s2 = sigma[(0, 0)] * (1.0 - rho * rho);
    (rho, s2.max(0.0).sqrt())
}

/// Stationary AR(1) covariance `σ²/(1−ρ²) · ρ^{|i−j|}`.
pub fn ar1_covariance(n: usize, rho: f64, sigma: f64) -> DMatrix<f64> {
    let v = sigma * sigma / (1.0 - rho * rho);
    DMatrix::from_fn(n, n, |i, j| v * rho.powi((i as i32 - j as i32).abs()))
}

/// Toeplitz (`𝔖¹`) and geometric-decay (`𝔖²`) constraints on `Σ(A, Λ)`.
#[derive(Debug, Clone)]
pub struct Ar1Constraint {
    pub layout: CayleyLayout,
}

impl Ar1Constraint {
    fn toeplitz_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.layout.n - 1;
        (0..m).flat_map(move |i| (i..m).map(move |j| (i, j)))
    }

    fn from_covariance(&self, s: &DMatrix<f64>) -> DVector<f64> {
        let n = self.layout.n;
        let mut out: Vec<f64> = self.toeplitz_pairs().map(|(i, j)| s[(i, j)] - s[(i + 1, j + 1)]).collect();
        out.extend((0..n - 2).map(|k| s[(0, k + 1)].powi(2) - s[(0, k)] * s[(0, k + 2)]));
        DVector::from_vec(out)
    }
}

impl ImplicitManifold for Ar1Constraint {
    fn ambient_dim(&self) -> usize {
        self.layout.dim()
    }

    fn codim(&self) -> usize {
        self.layout.dim() - 2
    }

    fn constraint(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self.layout.covariance(theta) {
            Ok(s) => self.from_covariance(&s),
            Err(_) => DVector::from_element(self.codim(), f64::NAN),
        }
    }

    fn constraint_jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let d = self.layout.dim();
        let n = self.layout.n;
        let (s, partials) = match (self.layout.covariance(theta), self.layout.covariance_partials(theta)) {
            (Ok(s), Ok(p)) => (s, p),
            _ => return DMatrix::from_element(self.codim(), d, f64::NAN),
        };
        let mut jac = DMatrix::zeros(self.codim(), d);
        for (k, ds) in partials.iter().enumerate() {
            let mut row = 0;
            for (i, j) in self.toeplitz_pairs() {
                jac[(row, k)] = ds[(i, j)] - ds[(i + 1, j + 1)];
                row += 1;
            }
            for m in 0..n - 2 {
                jac[(row, k)] = 2.0 * s[(0, m + 1)] * ds[(0, m + 1)]
                    - ds[(0, m)] * s[(0, m + 2)]
                    - s[(0, m)] * ds[(0, m + 2)];
                row += 1;
            }
        }
        jac
    }
}

#[derive(Debug, Clone)]
pub struct Ar1CayleyModel {
    pub layout: CayleyLayout,
    pub data: DVector<f64>,
    /// Reject `|a_{qr}| > 1` when set.
    pub restrict_to_box: bool,
}

pub fn ar1_model(data: DVector<f64>) -> Result<(Ar1CayleyModel, Ar1Constraint)> {
    let n = data.len();
    if n < 3 {
        return Err(CgfdError::BadShape(format!("AR(1) model needs at least 3 observations, got {n}")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(CgfdError::NonFinite("AR(1) data".into()));
    }
    let layout = CayleyLayout::new(n);
    Ok((Ar1CayleyModel { layout: layout.clone(), data, restrict_to_box: false }, Ar1Constraint { layout }))
}

impl FiducialModel for Ar1CayleyModel {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_likelihood(&self, theta: &DVector<f64>) -> f64 {
        let n = self.layout.n;
        let lam = self.layout.lambdas(theta);
        if lam.iter().any(|&l| !(l > 0.0)) {
            return f64::NEG_INFINITY;
        }
        if self.restrict_to_box && theta.rows(0, self.layout.skew_len()).iter().any(|a| a.abs() > 1.0) {
            return f64::NEG_INFINITY;
        }
        let Ok((_, c)) = self.layout.cayley(theta) else {
            return f64::NEG_INFINITY;
        };
        let z = (c.transpose() * &self.data).component_div(&lam);
        -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - lam.map(f64::ln).sum() - 0.5 * z.norm_squared()
    }

    fn dga_gradient(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let n = self.layout.n;
        let d = self.layout.dim();
        let Ok((w, c)) = self.layout.cayley(theta) else {
            return DMatrix::from_element(n, d, f64::NAN);
        };
        let lam = self.layout.lambdas(theta);
        let ctx = c.transpose() * &self.data;
        let y = &w * &ctx;
        let mut out = DMatrix::zeros(n, d);
        for (idx, &(q, r)) in self.layout.pairs().iter().enumerate() {
            out.set_column(idx, &((w.column(r) * y[q] - w.column(q) * y[r]) * 2.0));
        }
        let off = self.layout.skew_len();
        for s in 0..n {
            out.set_column(off + s, &(c.column(s) * (ctx[s] / lam[s])));
        }
        out
    }
}

/// Feasible `(A, Λ)` reproducing `Σ(ρ, σ)`: eigendecompose `Σ = V D Vᵀ`,
/// orient `V` into a rotation with a dominant positive diagonal, and invert
/// the Cayley transform.
pub fn ar1_feasible_point(n: usize, rho: f64, sigma: f64) -> Result<DVector<f64>> {
    if !(rho.abs() < 1.0) || !(sigma > 0.0) {
        return Err(CgfdError::InfeasibleInit(format!("need |ρ| < 1 and σ > 0, got ρ = {rho}, σ = {sigma}")));
    }
    let target = ar1_covariance(n, rho, sigma);
    let (values, vectors) = sorted_symmetric_eigen(&target);
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(CgfdError::CovarianceNotSpd);
    }
    // Greedy assignment of eigenvectors to coordinate axes.
    let mut c = DMatrix::zeros(n, n);
    let mut lam = DVector::zeros(n);
    let mut used_row = vec![false; n];
    let mut used_col = vec![false; n];
    for _ in 0..n {
        let mut best = (0, 0, -1.0);
        for col in (0..n).filter(|&j| !used_col[j]) {
            for row in (0..n).filter(|&i| !used_row[i]) {
                let v = vectors[(row, col)].abs();
                if v > best.2 {
                    best = (row, col, v);
                }
            }
        }
        let (row, col, _) = best;
        used_row[row] = true;
        used_col[col] = true;
        let sign = if vectors[(row, col)] < 0.0 { -1.0 } else { 1.0 };
        c.set_column(row, &(vectors.column(col) * sign));
        lam[row] = values[col].sqrt();
    }
    if c.determinant() < 0.0 {
        let weakest = (0..n).min_by(|&i, &j| c[(i, i)].partial_cmp(&c[(j, j)]).unwrap()).unwrap();
        c.column_mut(weakest).neg_mut();
    }
    let id = DMatrix::<f64>::identity(n, n);
    let a = (&id + &c).try_inverse().ok_or(CgfdError::CayleySingular)? * (&id - &c);
    let a = (&a - a.transpose()) * 0.5;
    Ok(CayleyLayout::new(n).pack(&a, &lam))
}

/// Lag-one Yule–Walker estimates `(ρ̂, σ̂)`, with `|ρ̂|` kept in `[0.05, 0.95]`
/// so the starting point avoids the rank-deficient white-noise corner.
pub fn yule_walker(data: &DVector<f64>) -> (f64, f64) {
    let n = data.len();
    let c0 = data.norm_squared() / n as f64;
    let c1 = (0..n - 1).map(|t| data[t] * data[t + 1]).sum::<f64>() / n as f64;
    let raw = if c0 > 0.0 { c1 / c0 } else { 0.0 };
    let sign = if raw < 0.0 { -1.0 } else { 1.0 };
    let rho = sign * raw.abs().clamp(0.05, 0.95);
    let sigma = (c0 * (1.0 - rho * rho)).sqrt().max(1e-3);
    (rho, sigma)
}

/// One realization of length `n` from the stationary process.
pub fn simulate_ar1<R: Rng + ?Sized>(rng: &mut R, n: usize, rho: f64, sigma: f64) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    let mut prev: f64 = rng.sample::<f64, _>(StandardNormal) * sigma / (1.0 - rho * rho).sqrt();
    out[0] = prev;
    for t in 1..n {
        prev = rho * prev + sigma * rng.sample::<f64, _>(StandardNormal);
        out[t] = prev;
    }
    out
}
