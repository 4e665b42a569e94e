use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ChainState, Target};
use crate::error::{CgfdError, ProjectionFailure, Result};
use crate::geometry::{newton_along, tangent_frame, TangentFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub step_size: f64,
    pub n_leapfrog: usize,
    /// Constant mass matrix; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<Vec<Vec<f64>>>,
}

impl HmcConfig {
    /// `ε = 0.1/√d`, 20 leapfrog steps, identity mass.
    pub fn default_for(d: usize) -> Self {
        Self { step_size: 0.1 / (d as f64).sqrt(), n_leapfrog: 20, mass: None }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(CgfdError::Config(format!("step_size must be positive, got {}", self.step_size)));
        }
        if self.mass.is_some() {
            self.mass_parts(d)?;
        }
        Ok(())
    }

    fn mass_matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        match &self.mass {
            None => Ok(DMatrix::identity(d, d)),
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(CgfdError::Config(format!("mass matrix must be {d} × {d}")));
                }
                let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                    return Err(CgfdError::Config("mass matrix is not symmetric".into()));
                }
                Ok(m)
            }
        }
    }

    /// `(M, M⁻¹, chol(M), ½ log|M|)`.
    fn mass_parts(&self, d: usize) -> Result<MassParts> {
        let m = self.mass_matrix(d)?;
        let chol = m.clone().cholesky().ok_or_else(|| CgfdError::Config("mass matrix is not positive definite".into()))?;
        let half_log_det = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        Ok(MassParts { inv: chol.inverse(), lower: chol.l(), m, half_log_det })
    }
}

struct MassParts {
    m: DMatrix<f64>,
    inv: DMatrix<f64>,
    lower: DMatrix<f64>,
    half_log_det: f64,
}

/// Remove the component of `p` violating `∇g M⁻¹ p = 0`.
fn project_momentum(jac: &DMatrix<f64>, minv: &DMatrix<f64>, p: &DVector<f64>) -> Option<DVector<f64>> {
    let jm = jac * minv;
    let gram = &jm * jac.transpose();
    let mult = gram.lu().solve(&(&jm * p))?;
    Some(p - jac.transpose() * mult)
}

/// End point of a RATTLE trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frame: TangentFrame,
    pub momentum: DVector<f64>,
}

fn failed(_: impl std::fmt::Debug) -> ProjectionFailure {
    ProjectionFailure::SingularSystem
}

/// Integrate `n_leapfrog` RATTLE steps from `(θ, p)`; `p` must already
/// satisfy the hidden constraint `∇g M⁻¹ p = 0`.
pub fn rattle_trajectory<T: Target + ?Sized>(
    target: &T,
    frame: &TangentFrame,
    momentum: &DVector<f64>,
    cfg: &HmcConfig,
) -> std::result::Result<Trajectory, ProjectionFailure> {
    let m = target.manifold();
    let mass = cfg.mass_parts(frame.point.len()).map_err(failed)?;
    rattle_with(target, frame, momentum, cfg, &mass, m)
}

fn rattle_with<T: Target + ?Sized>(
    target: &T,
    frame: &TangentFrame,
    momentum: &DVector<f64>,
    cfg: &HmcConfig,
    mass: &MassParts,
    m: &dyn crate::geometry::ImplicitManifold,
) -> std::result::Result<Trajectory, ProjectionFailure> {
    let eps = cfg.step_size;
    let mut frame = frame.clone();
    let mut p = momentum.clone();
    let mut grad_u = -target.grad_log_kernel(&frame.point).map_err(failed)?;
    for _ in 0..cfg.n_leapfrog {
        let theta = &frame.point;
        let kicked = &p - &grad_u * (0.5 * eps);
        let y0 = theta + &mass.inv * &kicked * eps;
        let dirs = &mass.inv * frame.jacobian.transpose();
        let next = newton_along(m, &y0, &dirs)?;
        let p_half = &mass.m * (&next - theta) / eps;
        let next_frame = tangent_frame(m, &next).map_err(failed)?;
        grad_u = -target.grad_log_kernel(&next).map_err(failed)?;
        let raw = p_half - &grad_u * (0.5 * eps);
        p = project_momentum(&next_frame.jacobian, &mass.inv, &raw).ok_or(ProjectionFailure::SingularSystem)?;
        frame = next_frame;
    }
    Ok(Trajectory { frame, momentum: p })
}

/// One constrained HMC transition.
pub fn hmc_step<T: Target + ?Sized, R: Rng + ?Sized>(target: &T, state: &mut ChainState, cfg: &HmcConfig, rng: &mut R) {
    let m = target.manifold();
    let d = state.theta.len();
    state.stats.proposals += 1;
    let Ok(mass) = cfg.mass_parts(d) else {
        state.stats.projection_failures += 1;
        return;
    };
    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let Some(p0) = project_momentum(&state.frame.jacobian, &mass.inv, &(&mass.lower * z)) else {
        state.stats.projection_failures += 1;
        return;
    };
    let kinetic = |p: &DVector<f64>| 0.5 * p.dot(&(&mass.inv * p));
    let h0 = -state.log_kernel + mass.half_log_det + kinetic(&p0);
    let log_u = rng.random::<f64>().ln();
    let traj = match rattle_with(target, &state.frame, &p0, cfg, &mass, m) {
        Ok(t) => t,
        Err(_) => {
            state.stats.projection_failures += 1;
            return;
        }
    };
    let log_kernel = target.log_kernel_at(&traj.frame);
    if !log_kernel.is_finite() {
        return;
    }
    let h1 = -log_kernel + mass.half_log_det + kinetic(&traj.momentum);
    if log_u < h0 - h1 {
        state.stats.accepts += 1;
        state.moved_to(traj.frame, log_kernel);
    }
}
