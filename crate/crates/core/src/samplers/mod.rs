//! MCMC on implicitly defined manifolds: constrained HMC (RATTLE) and the
//! tangent-space Metropolis–Hastings sampler with a reverse-projection check.

mod hmc;
mod mh;

use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CgfdError, Result};
use crate::fiducial::{cgfd_grad_log, cgfd_log_kernel_at, FiducialModel};
use crate::geometry::{newton_along, tangent_frame, ImplicitManifold, TangentFrame, TOL_ON};

pub use hmc::{hmc_step, rattle_trajectory, HmcConfig, Trajectory};
pub use mh::{mh_step, MhConfig, ReverseCheck};

/// An unnormalized log-density on a manifold, with respect to its
/// Hausdorff measure.
pub trait Target: Send + Sync {
    fn manifold(&self) -> &dyn ImplicitManifold;

    /// `-∞` where the kernel is undefined.
    fn log_kernel_at(&self, frame: &TangentFrame) -> f64;

    /// Ambient gradient; only tangential components are used.
    fn grad_log_kernel(&self, theta: &DVector<f64>) -> Result<DVector<f64>>;
}

impl<T: Target + ?Sized> Target for &T {
    fn manifold(&self) -> &dyn ImplicitManifold {
        (**self).manifold()
    }
    fn log_kernel_at(&self, frame: &TangentFrame) -> f64 {
        (**self).log_kernel_at(frame)
    }
    fn grad_log_kernel(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).grad_log_kernel(theta)
    }
}

/// The CGFD of a fiducial model restricted to a manifold.
#[derive(Debug, Clone)]
pub struct CgfdTarget<F, M> {
    pub model: F,
    pub manifold: M,
}

impl<F: FiducialModel, M: ImplicitManifold> CgfdTarget<F, M> {
    pub fn new(model: F, manifold: M) -> Self {
        Self { model, manifold }
    }
}

impl<F: FiducialModel, M: ImplicitManifold> Target for CgfdTarget<F, M> {
    fn manifold(&self) -> &dyn ImplicitManifold {
        &self.manifold
    }
    fn log_kernel_at(&self, frame: &TangentFrame) -> f64 {
        cgfd_log_kernel_at(&self.model, frame).unwrap_or(f64::NEG_INFINITY)
    }
    fn grad_log_kernel(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        cgfd_grad_log(&self.model, &self.manifold, theta)
    }
}

type LogDensityFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A closed-form log-density given by closures.
#[derive(Clone)]
pub struct DensityTarget<M> {
    pub manifold: M,
    log_density: LogDensityFn,
    grad: GradFn,
}

impl<M: ImplicitManifold> DensityTarget<M> {
    pub fn new<L, G>(manifold: M, log_density: L, grad: G) -> Self
    where
        L: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self { manifold, log_density: Arc::new(log_density), grad: Arc::new(grad) }
    }
}

impl<M: ImplicitManifold> Target for DensityTarget<M> {
    fn manifold(&self) -> &dyn ImplicitManifold {
        &self.manifold
    }
    fn log_kernel_at(&self, frame: &TangentFrame) -> f64 {
        (self.log_density)(&frame.point)
    }
    fn grad_log_kernel(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((self.grad)(theta))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStats {
    pub proposals: u64,
    pub accepts: u64,
    pub projection_failures: u64,
    pub reverse_check_failures: u64,
}

/// Current point of a chain with its cached kernel value and frame.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: DVector<f64>,
    pub log_kernel: f64,
    pub frame: TangentFrame,
    pub stats: ChainStats,
}

impl ChainState {
    pub fn new<T: Target + ?Sized>(target: &T, theta: DVector<f64>) -> Result<Self> {
        let m = target.manifold();
        let residual = m.residual(&theta);
        if !(residual <= TOL_ON) {
            return Err(CgfdError::OffManifold { residual });
        }
        let frame = tangent_frame(m, &theta)?;
        let log_kernel = target.log_kernel_at(&frame);
        if !log_kernel.is_finite() {
            return Err(CgfdError::InfeasibleInit("kernel vanishes at the initial point".into()));
        }
        Ok(Self { theta, log_kernel, frame, stats: ChainStats::default() })
    }

    fn moved_to(&mut self, frame: TangentFrame, log_kernel: f64) {
        debug_assert!(frame.point.iter().all(|v| v.is_finite()));
        self.theta = frame.point.clone();
        self.frame = frame;
        self.log_kernel = log_kernel;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Hmc(HmcConfig),
    Mh(MhConfig),
}

impl Kernel {
    /// Default tuning for an ambient dimension `d` and intrinsic dimension `k`.
    pub fn default_hmc(d: usize) -> Self {
        Kernel::Hmc(HmcConfig::default_for(d))
    }
    pub fn default_mh(k: usize) -> Self {
        Kernel::Mh(MhConfig::default_for(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Total iterations, burn-in included.
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Selects an independent RNG stream under the same seed.
    pub chain_index: u64,
}

impl RunConfig {
    pub fn new(n_samples: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        Self { n_samples, burn_in, thin, seed, chain_index: 0 }
    }

    pub fn retained(&self) -> usize {
        self.n_samples.saturating_sub(self.burn_in) / self.thin.max(1)
    }
}

/// Per-chain RNG: `seed` selects the key, `chain_index` the stream.
pub fn chain_rng(seed: u64, chain_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain_index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: u64,
    pub retained: u64,
    pub acceptance_rate: f64,
    pub projection_failure_rate: f64,
    pub reverse_check_failure_rate: f64,
    /// Mean `‖g(θ)‖` over retained samples.
    pub mean_constraint_residual: f64,
    pub max_constraint_residual: f64,
    pub stats: ChainStats,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub samples: Vec<DVector<f64>>,
    pub diagnostics: Diagnostics,
}

fn rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Advance `state` by one transition of `kernel`.
pub fn step<T: Target + ?Sized, R: rand::Rng + ?Sized>(target: &T, state: &mut ChainState, kernel: &Kernel, rng: &mut R) {
    match kernel {
        Kernel::Hmc(cfg) => hmc_step(target, state, cfg, rng),
        Kernel::Mh(cfg) => mh_step(target, state, cfg, rng),
    }
}

/// Project `init` onto the manifold, then run `run.n_samples` transitions and
/// keep every `thin`-th state after burn-in.
pub fn run_chain<T: Target + ?Sized>(target: &T, init: &DVector<f64>, kernel: &Kernel, run: &RunConfig) -> Result<ChainOutput> {
    let m = target.manifold();
    if init.len() != m.ambient_dim() {
        return Err(CgfdError::BadShape(format!(
            "initial point has length {}, manifold lives in dimension {}",
            init.len(),
            m.ambient_dim()
        )));
    }
    if run.thin == 0 {
        return Err(CgfdError::Config("thin must be positive".into()));
    }
    if run.burn_in > run.n_samples {
        return Err(CgfdError::Config("burn_in exceeds n_samples".into()));
    }
    match kernel {
        Kernel::Hmc(cfg) => cfg.validate(m.ambient_dim())?,
        Kernel::Mh(cfg) => cfg.validate()?,
    }
    let start = if m.residual(init) <= TOL_ON {
        init.clone()
    } else {
        let normal = m.constraint_jacobian(init).transpose();
        newton_along(m, init, &normal).map_err(|e| CgfdError::InfeasibleInit(e.to_string()))?
    };
    let mut state = ChainState::new(target, start).map_err(|e| match e {
        CgfdError::InfeasibleInit(msg) => CgfdError::InfeasibleInit(msg),
        other => CgfdError::InfeasibleInit(other.to_string()),
    })?;
    let mut rng = chain_rng(run.seed, run.chain_index);
    let mut samples = Vec::with_capacity(run.retained());
    let (mut sum_res, mut max_res) = (0.0, 0.0f64);
    for i in 0..run.n_samples {
        step(target, &mut state, kernel, &mut rng);
        if i >= run.burn_in && (i - run.burn_in + 1) % run.thin == 0 {
            let r = m.residual(&state.theta);
            sum_res += r;
            max_res = max_res.max(r);
            samples.push(state.theta.clone());
        }
    }
    let s = state.stats;
    let retained = samples.len() as u64;
    let diagnostics = Diagnostics {
        iterations: run.n_samples as u64,
        retained,
        acceptance_rate: rate(s.accepts, s.proposals),
        projection_failure_rate: rate(s.projection_failures, s.proposals),
        reverse_check_failure_rate: rate(s.reverse_check_failures, s.proposals),
        mean_constraint_residual: if retained > 0 { sum_res / retained as f64 } else { 0.0 },
        max_constraint_residual: max_res,
        stats: s,
    };
    Ok(ChainOutput { samples, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sphere::UnitSphere;

    fn von_mises() -> DensityTarget<UnitSphere> {
        DensityTarget::new(UnitSphere::new(2), |t| t[0], |_| DVector::from_vec(vec![1.0, 0.0]))
    }

    #[test]
    fn burn_in_equal_to_samples_gives_empty_output() {
        let target = von_mises();
        let init = DVector::from_vec(vec![1.0, 0.0]);
        let out = run_chain(&target, &init, &Kernel::default_mh(1), &RunConfig::new(50, 50, 1, 1)).unwrap();
        assert!(out.samples.is_empty());
        assert_eq!(out.diagnostics.retained, 0);
        assert_eq!(out.diagnostics.stats.proposals, 50);
    }

    #[test]
    fn retained_count_and_thinning() {
        let target = von_mises();
        let init = DVector::from_vec(vec![0.0, 2.0]);
        let run = RunConfig::new(103, 10, 7, 5);
        let out = run_chain(&target, &init, &Kernel::default_hmc(2), &run).unwrap();
        assert_eq!(out.samples.len(), 13);
        assert_eq!(run.retained(), 13);
        assert!(out.diagnostics.max_constraint_residual <= 1e-8);
    }

    #[test]
    fn same_seed_same_chain() {
        let target = von_mises();
        let init = DVector::from_vec(vec![0.6, 0.8]);
        for kernel in [Kernel::default_hmc(2), Kernel::default_mh(1)] {
            let run = RunConfig::new(300, 0, 1, 42);
            let a = run_chain(&target, &init, &kernel, &run).unwrap();
            let b = run_chain(&target, &init, &kernel, &run).unwrap();
            assert_eq!(a.samples, b.samples);
            let other = run_chain(&target, &init, &kernel, &RunConfig { chain_index: 1, ..run }).unwrap();
            assert_ne!(a.samples, other.samples);
        }
    }

    #[test]
    fn unprojectable_init_is_reported() {
        let target = von_mises();
        let init = DVector::from_vec(vec![0.0, 0.0]);
        let err = run_chain(&target, &init, &Kernel::default_mh(1), &RunConfig::new(10, 0, 1, 0)).unwrap_err();
        assert!(matches!(err, CgfdError::InfeasibleInit(_)));
    }
}
