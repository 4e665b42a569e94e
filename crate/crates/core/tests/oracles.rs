use cgfd::chart::{Chart, SpherePolarChart};
use cgfd::fiducial::{cgfd_log_kernel, parameterized_gfd_log_kernel};
use cgfd::models::equal_means::{equal_means_model, EqualMeansChart, EqualMeansConstraint};
use cgfd::models::sphere::sphere_model;
use cgfd::quadrature::{normalize_on_chart, octant_masses};
use cgfd::samplers::chain_rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

fn sphere_data(n: usize, stream: u64) -> DMatrix<f64> {
    let mut rng = chain_rng(31, stream);
    let mu = [0.6, 0.0, 0.8];
    DMatrix::from_fn(n, 3, |_, j| mu[j] + rng.sample::<f64, _>(StandardNormal))
}

/// With `∂X/∂μ = I` in every row the Jacobian factor is constant on the
/// sphere, so the CGFD is von Mises–Fisher: log-kernel `n x̄·θ` up to a constant.
#[test]
fn sphere_cgfd_is_von_mises_fisher() {
    let data = sphere_data(15, 0);
    let n = data.nrows() as f64;
    let xbar: DVector<f64> = data.row_mean().transpose();
    let (model, sphere) = sphere_model(data).unwrap();
    let mut rng = chain_rng(31, 1);
    let offsets: Vec<f64> = (0..50)
        .map(|_| {
            let t = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            cgfd_log_kernel(&model, &sphere, &t).unwrap() - n * xbar.dot(&t)
        })
        .collect();
    let spread = offsets.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - offsets.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(spread < 1e-9, "spread {spread}");
}

#[test]
fn polar_chart_gfd_differs_by_area_element() {
    let (model, sphere) = sphere_model(sphere_data(10, 2)).unwrap();
    let chart = SpherePolarChart;
    let mut rng = chain_rng(31, 3);
    for _ in 0..30 {
        let u = DVector::from_vec(vec![rng.random_range(0.1..6.2), rng.random_range(0.1..3.0)]);
        let a = parameterized_gfd_log_kernel(&model, &chart, &u).unwrap();
        let b = cgfd_log_kernel(&model, &sphere, &chart.point(&u)).unwrap();
        assert!((a - b - u[1].sin().ln()).abs() < 1e-9);
    }
}

#[test]
fn equal_means_chart_offset_is_log_sqrt_two() {
    let data = DMatrix::from_row_slice(2, 2, &[0.3, -0.4, 1.1, 0.9]);
    let (model, g) = equal_means_model(data, EqualMeansConstraint::Linear).unwrap();
    let mut rng = chain_rng(31, 4);
    for _ in 0..30 {
        let u = DVector::from_vec(vec![rng.random_range(-2.0..2.0), rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)]);
        let a = parameterized_gfd_log_kernel(&model, &EqualMeansChart, &u).unwrap();
        let b = cgfd_log_kernel(&model, &g, &EqualMeansChart.point(&u)).unwrap();
        assert!((a - b - 0.5 * 2f64.ln()).abs() < 1e-10);
    }
}

#[test]
fn octant_masses_are_resolution_stable() {
    let (model, sphere) = sphere_model(sphere_data(20, 5)).unwrap();
    let masses = |r| {
        let g = normalize_on_chart(|t| cgfd_log_kernel(&model, &sphere, t).unwrap(), &SpherePolarChart, r).unwrap();
        octant_masses(&g)
    };
    let coarse = masses(400);
    let fine = masses(800);
    let total: f64 = fine.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a - b).abs() <= 1e-3, "{coarse:?} vs {fine:?}");
    }
}
