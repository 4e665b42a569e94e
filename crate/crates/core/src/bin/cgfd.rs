use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cgfd::chart::SpherePolarChart;
use cgfd::error::{CgfdError, Result};
use cgfd::fiducial::cgfd_log_kernel;
use cgfd::harness::io::{create, header_line, read_data_file, write_json, write_report_csv, write_samples_csv};
use cgfd::harness::study::{build_problem, replicate_dataset, run_config};
use cgfd::harness::{compare_sphere, coverage_study, sphere_hmc, CompareSettings, Dataset, ModelSpec, StudyConfig};
use cgfd::models::sphere::sphere_model;
use cgfd::quadrature::normalize_on_chart;
use cgfd::samplers::{run_chain, MhConfig, RunConfig};

#[derive(Parser)]
#[command(name = "cgfd", version, about = "Constrained generalized fiducial distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid density of the sphere-model CGFD on the polar chart.
    Density(Common),
    /// Run one chain on one dataset; writes samples.csv and diagnostics.json.
    Sample(Common),
    /// Replicated coverage study; writes coverage.json and coverage.csv.
    Coverage(Common),
    /// Sphere octant probabilities by quadrature (two routes), HMC and MH.
    /// HMC runs `samples` iterations, MH ten times as many.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "CGFD_OUT_DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(n) = self.samples {
            cfg.samples = n;
            // An explicit chain length shorter than the configured burn-in
            // keeps nothing rather than failing.
            if self.burn_in.is_none() {
                cfg.burn_in = cfg.burn_in.min(n);
            }
        }
        if let Some(b) = self.burn_in {
            cfg.burn_in = b;
        }
        if let Some(t) = self.thin {
            cfg.thin = t;
        }
        if let Some(r) = self.resolution {
            cfg.resolution = r;
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

fn observed_dataset(cfg: &StudyConfig) -> Result<Dataset> {
    match &cfg.data_file {
        Some(path) => Dataset::from_rows(&cfg.model, read_data_file(path)?),
        None => Ok(replicate_dataset(cfg, 0)),
    }
}

fn out_path(cfg: &StudyConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn save_config(cfg: &StudyConfig) -> Result<()> {
    let text = cfg.to_toml()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(out_path(cfg, "config.toml"), format!("# {}\n{text}", header_line(&cfg.hash(), cfg.seed)))?;
    Ok(())
}

fn density(cfg: &StudyConfig) -> Result<Vec<PathBuf>> {
    if cfg.resolution == 0 {
        return Err(CgfdError::Config("resolution must be positive".into()));
    }
    let Dataset::Sphere(data) = observed_dataset(cfg)? else {
        return Err(CgfdError::Config(format!("grid densities are available for the sphere model only, not {}", cfg.model.name())));
    };
    let (model, sphere) = sphere_model(data)?;
    let grid = normalize_on_chart(
        |t| cgfd_log_kernel(&model, &sphere, t).unwrap_or(f64::NAN),
        &SpherePolarChart,
        cfg.resolution,
    )?;
    let path = out_path(cfg, "density.csv");
    grid.write_csv(create(&path)?, &[header_line(&cfg.hash(), cfg.seed)])?;
    Ok(vec![path])
}

fn sample(cfg: &StudyConfig) -> Result<Vec<PathBuf>> {
    cfg.validate_chain()?;
    let problem = build_problem(&cfg.model, observed_dataset(cfg)?)?;
    let kernel = problem.kernel(&cfg.sampler);
    let out = run_chain(&*problem.target, &problem.init, &kernel, &run_config(cfg, 0))?;
    let header = header_line(&cfg.hash(), cfg.seed);
    let samples = out_path(cfg, "samples.csv");
    write_samples_csv(create(&samples)?, &header, &out.samples, problem.ambient_dim())?;
    let diag = out_path(cfg, "diagnostics.json");
    write_json(create(&diag)?, &header, &out.diagnostics)?;
    Ok(vec![samples, diag])
}

fn coverage(cfg: &StudyConfig) -> Result<Vec<PathBuf>> {
    let report = coverage_study(cfg)?;
    let header = header_line(&report.config_hash, report.seed);
    let json = out_path(cfg, "coverage.json");
    write_json(create(&json)?, &header, &report)?;
    let csv = out_path(cfg, "coverage.csv");
    write_report_csv(create(&csv)?, &report)?;
    Ok(vec![json, csv])
}

fn compare(cfg: &StudyConfig) -> Result<Vec<PathBuf>> {
    if !matches!(cfg.model, ModelSpec::Sphere { .. }) {
        return Err(CgfdError::Config("compare needs the sphere model".into()));
    }
    cfg.validate_chain()?;
    let Dataset::Sphere(data) = observed_dataset(cfg)? else { unreachable!() };
    let settings = CompareSettings {
        resolution: cfg.resolution,
        hmc: sphere_hmc(data.nrows()),
        mh: MhConfig::default_for(2),
        hmc_run: RunConfig::new(cfg.samples, cfg.burn_in, cfg.thin, cfg.seed),
        mh_run: RunConfig::new(10 * cfg.samples, 10 * cfg.burn_in, cfg.thin, cfg.seed),
    };
    let result = compare_sphere(data, &settings)?;
    let header = header_line(&cfg.hash(), cfg.seed);
    let csv = out_path(cfg, "compare.csv");
    result.write_csv(create(&csv)?, &header)?;
    let json = out_path(cfg, "compare.json");
    write_json(create(&json)?, &header, &result)?;
    let _ = writeln!(std::io::stdout(), "max pairwise discrepancy: {}", result.max_discrepancy);
    Ok(vec![csv, json])
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let (common, f): (&Common, fn(&StudyConfig) -> Result<Vec<PathBuf>>) = match &cli.command {
        Command::Density(c) => (c, density),
        Command::Sample(c) => (c, sample),
        Command::Coverage(c) => (c, coverage),
        Command::Compare(c) => (c, compare),
    };
    let cfg = common.load()?;
    let files = f(&cfg)?;
    save_config(&cfg)?;
    Ok(files)
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            let mut stdout = std::io::stdout().lock();
            for f in files {
                let _ = writeln!(stdout, "{}", show(&f));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = ErrorReport { error: e.kind(), message: e.to_string() };
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", e.kind())));
            ExitCode::FAILURE
        }
    }
}
