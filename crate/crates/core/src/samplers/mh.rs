use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ChainState, Target};
use crate::error::{CgfdError, Result};
use crate::geometry::{newton_along, tangent_frame};

/// Acceptance condition on the reverse projection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverseCheck {
    /// The reverse projection must converge to the current point.
    #[default]
    ReturnToStart,
    /// The reverse projection only has to converge somewhere on the manifold.
    /// Biased; kept for comparison.
    ReachManifold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhConfig {
    /// Standard deviation of each tangent coordinate of the proposal.
    pub tangent_scale: f64,
    #[serde(default = "default_reverse_tol")]
    pub reverse_tol: f64,
    #[serde(default)]
    pub reverse_check: ReverseCheck,
}

fn default_reverse_tol() -> f64 {
    1e-6
}

impl MhConfig {
    /// `tangent_scale = 0.5/√k` for intrinsic dimension `k`.
    pub fn default_for(k: usize) -> Self {
        Self::with_scale(0.5 / (k.max(1) as f64).sqrt())
    }

    pub fn with_scale(tangent_scale: f64) -> Self {
        Self { tangent_scale, reverse_tol: default_reverse_tol(), reverse_check: ReverseCheck::ReturnToStart }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tangent_scale > 0.0) || !self.tangent_scale.is_finite() {
            return Err(CgfdError::Config(format!("tangent_scale must be positive, got {}", self.tangent_scale)));
        }
        if !(self.reverse_tol > 0.0) {
            return Err(CgfdError::Config(format!("reverse_tol must be positive, got {}", self.reverse_tol)));
        }
        Ok(())
    }
}

/// One tangent-space Metropolis–Hastings transition.
pub fn mh_step<T: Target + ?Sized, R: Rng + ?Sized>(target: &T, state: &mut ChainState, cfg: &MhConfig, rng: &mut R) {
    let m = target.manifold();
    let x = &state.theta;
    let qx = &state.frame.q;
    let k = qx.ncols();
    let s = cfg.tangent_scale;
    state.stats.proposals += 1;

    let v = DVector::from_fn(k, |_, _| s * rng.sample::<f64, _>(StandardNormal));
    let log_u = rng.random::<f64>().ln();
    let pre = x + qx * &v;
    let Ok(y) = newton_along(m, &pre, &state.frame.q_perp) else {
        state.stats.projection_failures += 1;
        return;
    };
    let Ok(frame_y) = tangent_frame(m, &y) else {
        state.stats.projection_failures += 1;
        return;
    };
    let v_rev = frame_y.q.transpose() * (x - &y);
    let pre_rev = &y + &frame_y.q * &v_rev;
    let back = newton_along(m, &pre_rev, &frame_y.q_perp);
    let reversible = match (back, cfg.reverse_check) {
        (Ok(b), ReverseCheck::ReturnToStart) => (b - x).norm() <= cfg.reverse_tol,
        (Ok(_), ReverseCheck::ReachManifold) => true,
        (Err(_), _) => false,
    };
    if !reversible {
        state.stats.reverse_check_failures += 1;
        return;
    }
    let log_kernel = target.log_kernel_at(&frame_y);
    if !log_kernel.is_finite() {
        return;
    }
    let log_q_ratio = (v.norm_squared() - v_rev.norm_squared()) / (2.0 * s * s);
    if log_u < log_kernel - state.log_kernel + log_q_ratio {
        state.stats.accepts += 1;
        state.moved_to(frame_y, log_kernel);
    }
}
