//! Four routes to the sphere-model octant probabilities.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::SpherePolarChart;
use crate::error::{CgfdError, Result};
use crate::fiducial::{cgfd_log_kernel, parameterized_gfd_log_kernel};
use crate::models::sphere::sphere_model;
use crate::quadrature::{normalize_on_chart, normalize_on_coordinates, octant_frequencies, octant_masses};
use crate::samplers::{run_chain, Diagnostics, HmcConfig, Kernel, MhConfig, RunConfig};

pub const ROUTES: [&str; 4] = ["cgfd_quadrature", "parameterized_quadrature", "hmc", "mh"];

/// Default step size with the trajectory cut to about a quarter of the
/// oscillation period `2π/√n` of the sphere-model CGFD; the default 20 steps
/// come close to a full period there and mix slowly.
pub fn sphere_hmc(n: usize) -> HmcConfig {
    let base = HmcConfig::default_for(3);
    let quarter = std::f64::consts::FRAC_PI_2 / (n.max(1) as f64).sqrt();
    let steps = (quarter / base.step_size).round().max(1.0) as usize;
    HmcConfig { n_leapfrog: steps.min(base.n_leapfrog), ..base }
}

#[derive(Debug, Clone)]
pub struct CompareSettings {
    pub resolution: usize,
    pub hmc: HmcConfig,
    pub mh: MhConfig,
    /// Chain index is overwritten: HMC uses stream 0, MH stream 1.
    pub hmc_run: RunConfig,
    pub mh_run: RunConfig,
}

impl CompareSettings {
    /// 400×400 grids, 2e4 HMC and 2e5 MH draws with half as burn-in, for a
    /// dataset of `n` observations.
    pub fn standard(n: usize, seed: u64) -> Self {
        Self {
            resolution: 400,
            hmc: sphere_hmc(n),
            mh: MhConfig::default_for(2),
            hmc_run: RunConfig::new(20_000, 10_000, 1, seed),
            mh_run: RunConfig::new(200_000, 100_000, 1, seed),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereComparison {
    /// `table[octant][route]`, routes ordered as [`ROUTES`].
    pub table: Vec<[f64; 4]>,
    pub max_discrepancy: f64,
    /// Between the two quadrature routes only.
    pub quadrature_discrepancy: f64,
    pub hmc: Diagnostics,
    pub mh: Diagnostics,
}

fn max_pairwise(table: &[[f64; 4]], routes: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for row in table {
        for (i, &a) in routes.iter().enumerate() {
            for &b in &routes[i + 1..] {
                worst = worst.max((row[a] - row[b]).abs());
            }
        }
    }
    worst
}

pub fn compare_sphere(data: DMatrix<f64>, settings: &CompareSettings) -> Result<SphereComparison> {
    let (model, sphere) = sphere_model(data)?;
    let chart = SpherePolarChart;
    let kernel = |t: &nalgebra::DVector<f64>| cgfd_log_kernel(&model, &sphere, t).unwrap_or(f64::NAN);
    let cgfd = octant_masses(&normalize_on_chart(kernel, &chart, settings.resolution)?);
    let param = |u: &nalgebra::DVector<f64>| parameterized_gfd_log_kernel(&model, &chart, u).unwrap_or(f64::NAN);
    let pgfd = octant_masses(&normalize_on_coordinates(param, &chart, settings.resolution)?);

    let init = model.projected_mean();
    let target = crate::samplers::CgfdTarget::new(model, sphere);
    let hmc_run = RunConfig { chain_index: 0, ..settings.hmc_run.clone() };
    let mh_run = RunConfig { chain_index: 1, ..settings.mh_run.clone() };
    let (hmc, mh) = rayon::join(
        || run_chain(&target, &init, &Kernel::Hmc(settings.hmc.clone()), &hmc_run),
        || run_chain(&target, &init, &Kernel::Mh(settings.mh.clone()), &mh_run),
    );
    let (hmc, mh) = (hmc?, mh?);
    if hmc.samples.is_empty() || mh.samples.is_empty() {
        return Err(CgfdError::EmptySamples);
    }
    let fh = octant_frequencies(&hmc.samples)?;
    let fm = octant_frequencies(&mh.samples)?;
    let table: Vec<[f64; 4]> = (0..8).map(|k| [cgfd[k], pgfd[k], fh[k], fm[k]]).collect();
    Ok(SphereComparison {
        max_discrepancy: max_pairwise(&table, &[0, 1, 2, 3]),
        quadrature_discrepancy: max_pairwise(&table, &[0, 1]),
        table,
        hmc: hmc.diagnostics,
        mh: mh.diagnostics,
    })
}

impl SphereComparison {
    pub fn write_csv<W: Write>(&self, mut w: W, header: &str) -> Result<()> {
        writeln!(w, "# {header}")?;
        writeln!(w, "# max_discrepancy={} quadrature_discrepancy={}", self.max_discrepancy, self.quadrature_discrepancy)?;
        writeln!(w, "octant,{}", ROUTES.join(","))?;
        for (k, row) in self.table.iter().enumerate() {
            writeln!(w, "{k},{},{},{},{}", row[0], row[1], row[2], row[3])?;
        }
        Ok(())
    }
}
