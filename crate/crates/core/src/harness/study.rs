use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ModelSpec, SamplerSpec, StudyConfig};
use crate::error::{CgfdError, Result};
use crate::models::ar1::{ar1_feasible_point, ar1_functionals, ar1_model, simulate_ar1, yule_walker};
use crate::models::equal_means::equal_means_model;
use crate::models::logspline::{default_knots, logspline_mle, logspline_model, LinearBSplineBasis, Triangular};
use crate::models::sphere::sphere_model;
use crate::samplers::{chain_rng, run_chain, CgfdTarget, ChainOutput, Kernel, RunConfig, Target};

/// One observed or simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    /// `n × 3`.
    Sphere(DMatrix<f64>),
    Logspline(Vec<f64>),
    Ar1(DVector<f64>),
    /// `2 × 2`, one observation per row.
    EqualMeans(DMatrix<f64>),
}

impl Dataset {
    /// Rows of the dataset, for CSV export.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        match self {
            Dataset::Sphere(m) | Dataset::EqualMeans(m) => m.row_iter().map(|r| r.iter().copied().collect()).collect(),
            Dataset::Logspline(v) => v.iter().map(|&y| vec![y]).collect(),
            Dataset::Ar1(v) => v.iter().map(|&y| vec![y]).collect(),
        }
    }

    /// Interpret rows read from a data file for the given model.
    pub fn from_rows(spec: &ModelSpec, rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = |w: usize| -> Result<()> {
            match rows.iter().find(|r| r.len() != w) {
                Some(r) => Err(CgfdError::BadShape(format!("expected {w} values per line, got {}", r.len()))),
                None => Ok(()),
            }
        };
        let flat = |rows: &[Vec<f64>]| rows.iter().flatten().copied().collect::<Vec<f64>>();
        Ok(match spec {
            ModelSpec::Sphere { .. } => {
                width(3)?;
                Dataset::Sphere(DMatrix::from_row_slice(rows.len(), 3, &flat(&rows)))
            }
            ModelSpec::EqualMeans { .. } => {
                width(2)?;
                Dataset::EqualMeans(DMatrix::from_row_slice(rows.len(), 2, &flat(&rows)))
            }
            ModelSpec::Logspline { .. } => {
                width(1)?;
                Dataset::Logspline(flat(&rows))
            }
            ModelSpec::Ar1 { .. } => {
                width(1)?;
                Dataset::Ar1(DVector::from_vec(flat(&rows)))
            }
        })
    }
}

pub fn sphere_truth(truth: &[f64; 3]) -> DVector<f64> {
    let v = DVector::from_column_slice(truth);
    let r = v.norm();
    v / r
}

pub fn logspline_basis(knots: &Option<Vec<f64>>) -> Result<LinearBSplineBasis> {
    LinearBSplineBasis::new(knots.clone().unwrap_or_else(default_knots))
}

pub fn simulate_dataset<R: Rng + ?Sized>(spec: &ModelSpec, n_obs: usize, rng: &mut R) -> Dataset {
    match spec {
        ModelSpec::Sphere { truth } => {
            let mu = sphere_truth(truth);
            Dataset::Sphere(DMatrix::from_fn(n_obs, 3, |_, j| mu[j] + rng.sample::<f64, _>(StandardNormal)))
        }
        ModelSpec::Logspline { lower, mode, upper, .. } => {
            Dataset::Logspline(Triangular { lower: *lower, mode: *mode, upper: *upper }.sample(rng, n_obs))
        }
        ModelSpec::Ar1 { rho, sigma } => Dataset::Ar1(simulate_ar1(rng, n_obs, *rho, *sigma)),
        ModelSpec::EqualMeans { mu, sigma1, sigma2, .. } => {
            let s = [*sigma1, *sigma2];
            Dataset::EqualMeans(DMatrix::from_fn(2, 2, |_, j| mu + s[j] * rng.sample::<f64, _>(StandardNormal)))
        }
    }
}

/// A scalar summary of the parameter whose coverage is tracked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub name: String,
    pub truth: f64,
    /// Excluded from interior coverage checks.
    pub boundary: bool,
}

type FunctionalEval = Box<dyn Fn(&DVector<f64>) -> Vec<f64> + Send + Sync>;

/// Everything needed to sample one dataset's CGFD.
pub struct Problem {
    pub target: Box<dyn Target>,
    pub init: DVector<f64>,
    pub functionals: Vec<Functional>,
    evaluate: FunctionalEval,
}

impl Problem {
    pub fn evaluate(&self, theta: &DVector<f64>) -> Vec<f64> {
        (self.evaluate)(theta)
    }

    pub fn ambient_dim(&self) -> usize {
        self.target.manifold().ambient_dim()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.target.manifold().intrinsic_dim()
    }

    pub fn kernel(&self, sampler: &SamplerSpec) -> Kernel {
        sampler.kernel(self.ambient_dim(), self.intrinsic_dim())
    }
}

pub fn build_problem(spec: &ModelSpec, data: Dataset) -> Result<Problem> {
    match (spec, data) {
        (ModelSpec::Sphere { truth }, Dataset::Sphere(m)) => {
            let (model, sphere) = sphere_model(m)?;
            let init = model.projected_mean();
            let t = sphere_truth(truth);
            let functionals = ["mu_x", "mu_y", "mu_z"]
                .iter()
                .enumerate()
                .map(|(i, n)| Functional { name: n.to_string(), truth: t[i], boundary: false })
                .collect();
            Ok(Problem {
                target: Box::new(CgfdTarget::new(model, sphere)),
                init,
                functionals,
                evaluate: Box::new(|th| th.iter().copied().collect()),
            })
        }
        (ModelSpec::Logspline { knots, lower, mode, upper }, Dataset::Logspline(y)) => {
            let basis = logspline_basis(knots)?;
            let (model, constraint) = logspline_model(y, basis.knots().to_vec())?;
            let init = logspline_mle(&model).unwrap_or_else(|_| DVector::zeros(basis.dim()));
            let tri = Triangular { lower: *lower, mode: *mode, upper: *upper };
            let inside: Vec<f64> = basis.knots().iter().copied().filter(|k| (0.0..=1.0).contains(k)).collect();
            let last = inside.len().saturating_sub(1);
            let functionals = inside
                .iter()
                .enumerate()
                .map(|(i, &k)| Functional { name: format!("pdf@{k:.4}"), truth: tri.pdf(k), boundary: i == 0 || i == last })
                .collect();
            let eval_basis = basis.clone();
            Ok(Problem {
                target: Box::new(CgfdTarget::new(model, constraint)),
                init,
                functionals,
                evaluate: Box::new(move |th| {
                    let g = eval_basis.log_normalizer(th);
                    inside.iter().map(|&k| (eval_basis.spline(th, k) - g).exp()).collect()
                }),
            })
        }
        (ModelSpec::Ar1 { rho, sigma }, Dataset::Ar1(x)) => {
            let n = x.len();
            let (r0, s0) = yule_walker(&x);
            let (model, constraint) = ar1_model(x)?;
            let init = ar1_feasible_point(n, r0, s0)?;
            let layout = model.layout.clone();
            Ok(Problem {
                target: Box::new(CgfdTarget::new(model, constraint)),
                init,
                functionals: vec![
                    Functional { name: "rho".into(), truth: *rho, boundary: false },
                    Functional { name: "sigma".into(), truth: *sigma, boundary: false },
                ],
                evaluate: Box::new(move |th| match layout.covariance(th) {
                    Ok(s) => {
                        let (r, sg) = ar1_functionals(&s);
                        vec![r, sg]
                    }
                    Err(_) => vec![f64::NAN, f64::NAN],
                }),
            })
        }
        (ModelSpec::EqualMeans { mu, sigma1, sigma2, constraint }, Dataset::EqualMeans(m)) => {
            let mean = m.mean();
            let spread = |j: usize| ((m[(0, j)] - m[(1, j)]).abs() / 2f64.sqrt()).max(1e-3);
            let init = DVector::from_vec(vec![mean, mean, spread(0), spread(1)]);
            let (model, g) = equal_means_model(m, (*constraint).into())?;
            Ok(Problem {
                target: Box::new(CgfdTarget::new(model, g)),
                init,
                functionals: vec![
                    Functional { name: "mu".into(), truth: *mu, boundary: false },
                    Functional { name: "sigma1".into(), truth: *sigma1, boundary: false },
                    Functional { name: "sigma2".into(), truth: *sigma2, boundary: false },
                ],
                evaluate: Box::new(|th| vec![th[0], th[2], th[3]]),
            })
        }
        (spec, _) => Err(CgfdError::BadShape(format!("dataset does not match the {} model", spec.name()))),
    }
}

/// Order statistic `⌈αK⌉` (1-based) of the values: the type-1 sample quantile.
pub fn upper_bound(sorted: &[f64], level: f64) -> f64 {
    let k = sorted.len();
    let idx = ((level * k as f64).ceil() as usize).clamp(1, k);
    sorted[idx - 1]
}

/// Sorts in place, NaN last.
pub fn sort_values(values: &mut [f64]) {
    values.sort_by(|a, b| a.total_cmp(b));
}

/// Sample closest to the ambient mean: `argmin_θ ‖θ − θ̄‖₂`.
pub fn min_distance_estimate(samples: &[DVector<f64>]) -> Result<DVector<f64>> {
    let first = samples.first().ok_or(CgfdError::EmptySamples)?;
    let mut mean = DVector::zeros(first.len());
    for s in samples {
        mean += s;
    }
    mean /= samples.len() as f64;
    let best = samples
        .iter()
        .min_by(|a, b| (*a - &mean).norm_squared().total_cmp(&(*b - &mean).norm_squared()))
        .unwrap();
    Ok(best.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub functional: String,
    pub boundary: bool,
    pub truth: f64,
    pub nominal: f64,
    pub empirical: f64,
    pub covered: usize,
    pub replicates: usize,
    /// `sqrt(e(1−e)/R)`; absent when fewer than two replicates succeeded.
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub error: Option<String>,
    pub acceptance_rate: Option<f64>,
    pub point_estimate: Option<Vec<f64>>,
    /// One entry per functional, then per level, in report order.
    pub upper_bounds: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config_hash: String,
    pub seed: u64,
    pub model: String,
    pub sampler: String,
    pub replicates_requested: usize,
    pub replicates_ok: usize,
    pub replicates_failed: usize,
    pub levels: Vec<f64>,
    pub rows: Vec<CoverageRow>,
    pub replicates: Vec<ReplicateRecord>,
}

impl CoverageReport {
    pub fn row(&self, functional: &str, nominal: f64) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.functional == functional && r.nominal == nominal)
    }
}

/// Stream indices: data for replicate `r` use `2r`, its chain `2r + 1`.
pub fn replicate_dataset(cfg: &StudyConfig, r: usize) -> Dataset {
    let mut rng = chain_rng(cfg.seed, 2 * r as u64);
    simulate_dataset(&cfg.model, cfg.n_obs, &mut rng)
}

pub fn run_config(cfg: &StudyConfig, r: usize) -> RunConfig {
    RunConfig { n_samples: cfg.samples, burn_in: cfg.burn_in, thin: cfg.thin, seed: cfg.seed, chain_index: 2 * r as u64 + 1 }
}

/// Simulate replicate `r`'s dataset and sample its CGFD.
pub fn run_replicate(cfg: &StudyConfig, r: usize) -> Result<(Problem, ChainOutput)> {
    let problem = build_problem(&cfg.model, replicate_dataset(cfg, r))?;
    let out = run_chain(&*problem.target, &problem.init, &problem.kernel(&cfg.sampler), &run_config(cfg, r))?;
    Ok((problem, out))
}

struct Outcome {
    record: ReplicateRecord,
    covered: Option<Vec<Vec<bool>>>,
    functionals: Option<Vec<Functional>>,
}

fn replicate_outcome(cfg: &StudyConfig, r: usize) -> Outcome {
    let failed = |e: CgfdError| Outcome {
        record: ReplicateRecord { index: r, error: Some(format!("{}: {e}", e.kind())), acceptance_rate: None, point_estimate: None, upper_bounds: None },
        covered: None,
        functionals: None,
    };
    let (problem, out) = match run_replicate(cfg, r) {
        Ok(v) => v,
        Err(e) => return failed(e),
    };
    if out.samples.is_empty() {
        return failed(CgfdError::EmptySamples);
    }
    let nf = problem.functionals.len();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(out.samples.len()); nf];
    for s in &out.samples {
        for (f, v) in problem.evaluate(s).into_iter().enumerate() {
            values[f].push(v);
        }
    }
    let mut bounds = Vec::with_capacity(nf);
    let mut covered = Vec::with_capacity(nf);
    for (f, vals) in values.iter_mut().enumerate() {
        sort_values(vals);
        let b: Vec<f64> = cfg.levels.iter().map(|&a| upper_bound(vals, a)).collect();
        covered.push(b.iter().map(|&ub| ub >= problem.functionals[f].truth).collect());
        bounds.push(b);
    }
    let point = min_distance_estimate(&out.samples).ok().map(|p| p.iter().copied().collect());
    Outcome {
        record: ReplicateRecord {
            index: r,
            error: None,
            acceptance_rate: Some(out.diagnostics.acceptance_rate),
            point_estimate: point,
            upper_bounds: Some(bounds),
        },
        covered: Some(covered),
        functionals: Some(problem.functionals),
    }
}

fn sampler_name(s: &SamplerSpec) -> &'static str {
    match s {
        SamplerSpec::Hmc { .. } => "hmc",
        SamplerSpec::Mh { .. } => "mh",
    }
}

/// Replicated coverage of the upper fiducial bounds. Replicates run in
/// parallel; failed replicates are excluded from the denominators and counted.
pub fn coverage_study(cfg: &StudyConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let outcomes: Vec<Outcome> = (0..cfg.replicates).into_par_iter().map(|r| replicate_outcome(cfg, r)).collect();
    let functionals = outcomes.iter().find_map(|o| o.functionals.clone()).unwrap_or_default();
    let ok: Vec<&Vec<Vec<bool>>> = outcomes.iter().filter_map(|o| o.covered.as_ref()).collect();
    let n_ok = ok.len();
    let mut rows = Vec::new();
    for (f, func) in functionals.iter().enumerate() {
        for (l, &level) in cfg.levels.iter().enumerate() {
            let covered = ok.iter().filter(|c| c[f][l]).count();
            let empirical = if n_ok > 0 { covered as f64 / n_ok as f64 } else { f64::NAN };
            let se = (n_ok > 1).then(|| (empirical * (1.0 - empirical) / n_ok as f64).sqrt());
            rows.push(CoverageRow {
                functional: func.name.clone(),
                boundary: func.boundary,
                truth: func.truth,
                nominal: level,
                empirical,
                covered,
                replicates: n_ok,
                se,
            });
        }
    }
    Ok(CoverageReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        model: cfg.model.name().into(),
        sampler: sampler_name(&cfg.sampler).into(),
        replicates_requested: cfg.replicates,
        replicates_ok: n_ok,
        replicates_failed: cfg.replicates - n_ok,
        levels: cfg.levels.clone(),
        rows,
        replicates: outcomes.into_iter().map(|o| o.record).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_one_quantile() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(upper_bound(&v, 0.5), 5.0);
        assert_eq!(upper_bound(&v, 0.95), 10.0);
        assert_eq!(upper_bound(&v, 0.91), 10.0);
        assert_eq!(upper_bound(&v, 0.9), 9.0);
        assert_eq!(upper_bound(&v, 0.01), 1.0);
        assert_eq!(upper_bound(&[3.0], 0.5), 3.0);
    }

    #[test]
    fn min_distance_single_sample() {
        let s = vec![DVector::from_vec(vec![1.0, 2.0])];
        assert_eq!(min_distance_estimate(&s).unwrap(), s[0]);
        assert!(matches!(min_distance_estimate(&[]), Err(CgfdError::EmptySamples)));
    }

    fn small(model: ModelSpec, sampler: SamplerSpec, n_obs: usize, replicates: usize) -> StudyConfig {
        StudyConfig {
            seed: 3,
            n_obs,
            replicates,
            samples: 200,
            burn_in: 50,
            thin: 1,
            levels: vec![0.5, 0.9],
            resolution: 10,
            output_dir: "unused".into(),
            data_file: None,
            model,
            sampler,
        }
    }

    #[test]
    fn single_replicate_has_null_se() {
        let cfg = small(ModelSpec::Sphere { truth: [1.0, 1.0, 1.0] }, SamplerSpec::mh(), 10, 1);
        let rep = coverage_study(&cfg).unwrap();
        assert_eq!(rep.replicates_ok, 1);
        assert_eq!(rep.rows.len(), 6);
        assert!(rep.rows.iter().all(|r| r.se.is_none()));
    }

    #[test]
    fn coverage_is_monotone_in_level_and_deterministic() {
        let cfg = small(ModelSpec::Logspline { knots: None, lower: 0.0, mode: 0.2, upper: 1.0 }, SamplerSpec::mh(), 100, 4);
        let a = coverage_study(&cfg).unwrap();
        let b = coverage_study(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for pair in a.rows.chunks(2) {
            assert!(pair[0].empirical <= pair[1].empirical);
        }
        let boundary: Vec<&str> = a.rows.iter().filter(|r| r.boundary).map(|r| r.functional.as_str()).collect();
        assert!(boundary.contains(&"pdf@0.0000") && boundary.contains(&"pdf@0.9000"));
    }

    #[test]
    fn every_model_runs() {
        let specs = [
            (ModelSpec::Ar1 { rho: 0.5, sigma: 1.0 }, SamplerSpec::mh(), 5),
            (ModelSpec::EqualMeans { mu: 0.0, sigma1: 1.0, sigma2: 2.0, constraint: super::super::config::EmConstraintSpec::Linear }, SamplerSpec::hmc(), 2),
            (ModelSpec::Sphere { truth: [0.0, 0.0, 1.0] }, SamplerSpec::hmc(), 20),
        ];
        for (m, s, n) in specs {
            let rep = coverage_study(&small(m, s, n, 2)).unwrap();
            assert_eq!(rep.replicates_ok, 2, "{:?}", rep.replicates);
        }
    }
}
