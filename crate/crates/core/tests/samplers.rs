mod common;

use cgfd::geometry::tangent_frame;
use cgfd::models::ar1::{ar1_feasible_point, ar1_functionals, ar1_model, simulate_ar1};
use cgfd::models::sphere::UnitSphere;
use cgfd::samplers::{chain_rng, rattle_trajectory, run_chain, CgfdTarget, DensityTarget, HmcConfig, Kernel, RunConfig, Target};
use common::uniform_angle_p_value;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

fn uniform(dim: usize) -> DensityTarget<UnitSphere> {
    DensityTarget::new(UnitSphere::new(dim), |_| 0.0, move |t| DVector::zeros(t.len()))
}

fn circle_start() -> DVector<f64> {
    DVector::from_vec(vec![1.0, 0.0])
}

#[test]
fn hmc_uniform_on_circle() {
    // Thinned so the retained draws are close to independent for the chi-square test.
    let out = run_chain(&uniform(2), &circle_start(), &Kernel::default_hmc(2), &RunConfig::new(51_000, 1_000, 5, 5)).unwrap();
    assert_eq!(out.samples.len(), 10_000);
    let p = uniform_angle_p_value(&out.samples, 20);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn mh_uniform_on_circle() {
    let out = run_chain(&uniform(2), &circle_start(), &Kernel::default_mh(1), &RunConfig::new(101_000, 1_000, 10, 6)).unwrap();
    let p = uniform_angle_p_value(&out.samples, 20);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn rattle_is_reversible_on_circle_and_sphere() {
    for dim in [2, 3] {
        let target = uniform(dim);
        let cfg = HmcConfig::default_for(dim);
        let mut rng = chain_rng(9, dim as u64);
        for _ in 0..50 {
            let x = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            let frame = tangent_frame(target.manifold(), &x).unwrap();
            let z = DVector::from_fn(dim - 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let p = &frame.q * z;
            let fwd = rattle_trajectory(&target, &frame, &p, &cfg).unwrap();
            let back = rattle_trajectory(&target, &fwd.frame, &(-&fwd.momentum), &cfg).unwrap();
            assert!((&back.frame.point - &x).norm() < 1e-6);
            assert!((&back.momentum + &p).norm() < 1e-6);
        }
    }
}

#[test]
fn chains_are_deterministic_and_on_manifold() {
    let target = uniform(3);
    let init = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    for kernel in [Kernel::default_hmc(3), Kernel::default_mh(2)] {
        let run = RunConfig::new(2_000, 100, 1, 77);
        let a = run_chain(&target, &init, &kernel, &run).unwrap();
        let b = run_chain(&target, &init, &kernel, &run).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.diagnostics, b.diagnostics);
        for s in &a.samples {
            assert!(target.manifold().residual(s) <= 1e-8);
        }
        let c = run_chain(&target, &init, &kernel, &RunConfig { chain_index: 1, ..run }).unwrap();
        assert_ne!(a.samples, c.samples);
    }
}

#[test]
fn ar1_draws_are_toeplitz_and_stationary() {
    let n = 5;
    let mut rng = chain_rng(12, 0);
    let data = simulate_ar1(&mut rng, n, 0.5, 1.0);
    let (model, constraint) = ar1_model(data).unwrap();
    let layout = model.layout.clone();
    let init = ar1_feasible_point(n, 0.4, 1.0).unwrap();
    let target = CgfdTarget::new(model, constraint);
    let out = run_chain(&target, &init, &Kernel::default_mh(2), &RunConfig::new(600, 100, 5, 4)).unwrap();
    assert!(!out.samples.is_empty());
    for s in &out.samples {
        let sigma = layout.covariance(s).unwrap();
        for i in 0..n {
            for j in 0..n {
                let k = i.abs_diff(j);
                assert!((sigma[(i, j)] - sigma[(0, k)]).abs() <= 1e-6);
            }
        }
        let (rho, sd) = ar1_functionals(&sigma);
        assert!(rho.abs() <= 1.0 && sd > 0.0);
    }
}
