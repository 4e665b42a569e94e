//! Configuration, replicated coverage studies and output files.

pub mod compare;
pub mod config;
pub mod curves;
pub mod io;
pub mod study;

pub use compare::{compare_sphere, sphere_hmc, CompareSettings, SphereComparison};
pub use config::{EmConstraintSpec, ModelSpec, SamplerSpec, StudyConfig};
pub use curves::{confidence_curves, ConfidenceCurves};
pub use study::{build_problem, coverage_study, CoverageReport, CoverageRow, Dataset, Problem};
