use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CgfdError, Result};
use crate::models::equal_means::EqualMeansConstraint;
use crate::samplers::{HmcConfig, Kernel, MhConfig, ReverseCheck};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `N₃(μ, I₃)` with `μ` on the unit sphere; `truth` is projected.
    Sphere { truth: [f64; 3] },
    /// Triangular truth, fixed knots (default `−0.15, 0, …, 1.05`).
    Logspline {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        knots: Option<Vec<f64>>,
        #[serde(default = "default_lower")]
        lower: f64,
        #[serde(default = "default_mode")]
        mode: f64,
        #[serde(default = "default_upper")]
        upper: f64,
    },
    Ar1 { rho: f64, sigma: f64 },
    EqualMeans {
        mu: f64,
        sigma1: f64,
        sigma2: f64,
        #[serde(default = "default_em_constraint")]
        constraint: EmConstraintSpec,
    },
}

fn default_lower() -> f64 {
    0.0
}
fn default_mode() -> f64 {
    0.2
}
fn default_upper() -> f64 {
    1.0
}
fn default_em_constraint() -> EmConstraintSpec {
    EmConstraintSpec::Linear
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmConstraintSpec {
    Linear,
    Cubic,
}

impl From<EmConstraintSpec> for EqualMeansConstraint {
    fn from(c: EmConstraintSpec) -> Self {
        match c {
            EmConstraintSpec::Linear => EqualMeansConstraint::Linear,
            EmConstraintSpec::Cubic => EqualMeansConstraint::Cubic,
        }
    }
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Sphere { .. } => "sphere",
            ModelSpec::Logspline { .. } => "logspline",
            ModelSpec::Ar1 { .. } => "ar1",
            ModelSpec::EqualMeans { .. } => "equal_means",
        }
    }
}

/// Sampler choice; unset tuning falls back to the dimension-based defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    Hmc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step_size: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_leapfrog: Option<usize>,
    },
    Mh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tangent_scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reverse_tol: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reverse_check: Option<ReverseCheck>,
    },
}

impl SamplerSpec {
    pub fn mh() -> Self {
        SamplerSpec::Mh { tangent_scale: None, reverse_tol: None, reverse_check: None }
    }

    pub fn hmc() -> Self {
        SamplerSpec::Hmc { step_size: None, n_leapfrog: None }
    }

    /// Concrete kernel for ambient dimension `d` and intrinsic dimension `k`.
    pub fn kernel(&self, d: usize, k: usize) -> Kernel {
        match self {
            SamplerSpec::Hmc { step_size, n_leapfrog } => {
                let base = HmcConfig::default_for(d);
                Kernel::Hmc(HmcConfig {
                    step_size: step_size.unwrap_or(base.step_size),
                    n_leapfrog: n_leapfrog.unwrap_or(base.n_leapfrog),
                    mass: None,
                })
            }
            SamplerSpec::Mh { tangent_scale, reverse_tol, reverse_check } => {
                let base = MhConfig::default_for(k);
                Kernel::Mh(MhConfig {
                    tangent_scale: tangent_scale.unwrap_or(base.tangent_scale),
                    reverse_tol: reverse_tol.unwrap_or(base.reverse_tol),
                    reverse_check: reverse_check.unwrap_or(base.reverse_check),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub seed: u64,
    /// Observations per simulated dataset.
    pub n_obs: usize,
    pub replicates: usize,
    /// Chain length per replicate, burn-in included.
    pub samples: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thin: usize,
    pub levels: Vec<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Observed data file (one observation per line, comma-separated);
    /// replaces simulation for single-dataset commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_file: Option<PathBuf>,
    pub model: ModelSpec,
    pub sampler: SamplerSpec,
}

fn one() -> usize {
    1
}
fn default_resolution() -> usize {
    400
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("cgfd-out")
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| CgfdError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CgfdError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Hex SHA-256 of the canonical TOML form, truncated to 16 characters.
    /// The output directory is left out, so moving results keeps the hash.
    pub fn hash(&self) -> String {
        let canonical = StudyConfig { output_dir: PathBuf::new(), ..self.clone() };
        let text = canonical.to_toml().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Chain-length checks shared by every command.
    pub fn validate_chain(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(CgfdError::Config("thin must be positive".into()));
        }
        if self.burn_in > self.samples {
            return Err(CgfdError::Config(format!("burn_in ({}) exceeds samples ({})", self.burn_in, self.samples)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_chain()?;
        for (name, v) in [("n_obs", self.n_obs), ("replicates", self.replicates), ("samples", self.samples), ("resolution", self.resolution)] {
            if v == 0 {
                return Err(CgfdError::Config(format!("{name} must be positive")));
            }
        }
        if (self.samples - self.burn_in) / self.thin == 0 {
            return Err(CgfdError::Config("no samples retained after burn-in and thinning".into()));
        }
        if self.levels.is_empty() {
            return Err(CgfdError::Config("at least one coverage level is required".into()));
        }
        if let Some(l) = self.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(CgfdError::Config(format!("coverage levels must lie in (0, 1), got {l}")));
        }
        match &self.model {
            ModelSpec::Sphere { truth } => {
                if !(truth.iter().map(|v| v * v).sum::<f64>() > 0.0) {
                    return Err(CgfdError::Config("sphere truth must be nonzero".into()));
                }
            }
            ModelSpec::Logspline { lower, mode, upper, .. } => {
                if !(0.0 <= *lower && lower <= mode && mode <= upper && *upper <= 1.0 && lower < upper) {
                    return Err(CgfdError::Config("triangular truth needs 0 ≤ lower ≤ mode ≤ upper ≤ 1".into()));
                }
            }
            ModelSpec::Ar1 { rho, sigma } => {
                if !(rho.abs() < 1.0 && *sigma > 0.0) {
                    return Err(CgfdError::Config("AR(1) truth needs |rho| < 1 and sigma > 0".into()));
                }
                if self.n_obs < 3 {
                    return Err(CgfdError::Config("AR(1) needs n_obs ≥ 3".into()));
                }
                if matches!(self.sampler, SamplerSpec::Hmc { .. }) {
                    return Err(CgfdError::Config("the AR(1) model is sampled with MH only".into()));
                }
            }
            ModelSpec::EqualMeans { sigma1, sigma2, .. } => {
                if !(*sigma1 > 0.0 && *sigma2 > 0.0) {
                    return Err(CgfdError::Config("equal-means truth needs positive scales".into()));
                }
                if self.n_obs != 2 {
                    return Err(CgfdError::Config("the equal-means model takes exactly two observations".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 7
n_obs = 500
replicates = 100
samples = 15000
burn_in = 5000
levels = [0.5, 0.8, 0.9, 0.95]

[model]
kind = "logspline"

[sampler]
kind = "mh"
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = StudyConfig::from_toml(EXAMPLE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.thin, 1);
        assert_eq!(cfg.model, ModelSpec::Logspline { knots: None, lower: 0.0, mode: 0.2, upper: 1.0 });
        let again = StudyConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn rejects_bad_levels_and_counts() {
        let mut cfg = StudyConfig::from_toml(EXAMPLE).unwrap();
        cfg.levels = vec![0.5, 1.0];
        assert!(cfg.validate().is_err());
        cfg.levels = vec![0.5];
        cfg.replicates = 0;
        assert!(cfg.validate().is_err());
        cfg.replicates = 1;
        cfg.burn_in = cfg.samples + 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = EXAMPLE.replace("seed = 7", "seed = 7\nsed = 3");
        assert!(matches!(StudyConfig::from_toml(&text), Err(CgfdError::Config(_))));
    }

    #[test]
    fn ar1_refuses_hmc() {
        let text = EXAMPLE
            .replace("kind = \"logspline\"", "kind = \"ar1\"\nrho = 0.5\nsigma = 1.0")
            .replace("kind = \"mh\"", "kind = \"hmc\"");
        let cfg = StudyConfig::from_toml(&text).unwrap();
        assert!(cfg.validate().is_err());
    }
}
