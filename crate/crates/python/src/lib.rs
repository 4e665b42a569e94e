use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use cgfd::chart::SpherePolarChart;
use cgfd::error::CgfdError;
use cgfd::fiducial::{cgfd_grad_log, cgfd_log_kernel, hwang_log_kernel};
use cgfd::geometry::{projection_matrix, tangent_frame};
use cgfd::harness::study::{build_problem, run_replicate, Dataset};
use cgfd::harness::{compare_sphere, confidence_curves, coverage_study, CompareSettings, StudyConfig};
use cgfd::models::logspline::LinearBSplineBasis;
use cgfd::models::sphere::{sphere_model, UnitSphere};
use cgfd::quadrature::{normalize_on_chart, octant_masses};

fn err(e: CgfdError) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.kind()))
}

fn matrix(rows: &[Vec<f64>], width: usize) -> PyResult<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err(format!("every row needs {width} values")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), width, &flat))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn json_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Study configuration, read from TOML.
#[pyclass(name = "StudyConfig", module = "cgfd_py")]
struct PyStudyConfig {
    inner: StudyConfig,
}

#[pymethods]
impl PyStudyConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = StudyConfig::from_toml(text).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(err)
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    /// Run replicate `index`; returns `(samples, diagnostics)`.
    #[pyo3(signature = (index=0))]
    fn sample(&self, py: Python<'_>, index: usize) -> PyResult<(Vec<Vec<f64>>, Py<PyAny>)> {
        self.inner.validate_chain().map_err(err)?;
        let cfg = self.inner.clone();
        let (_, out) = py.detach(|| run_replicate(&cfg, index)).map_err(err)?;
        let samples = out.samples.iter().map(|s| s.iter().copied().collect()).collect();
        Ok((samples, json_to_py(py, &out.diagnostics)?))
    }

    /// Replicated coverage study, returned as a dict.
    fn coverage(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let cfg = self.inner.clone();
        let report = py.detach(|| coverage_study(&cfg)).map_err(err)?;
        json_to_py(py, &report)
    }

    /// Log-kernel of the CGFD for an observed dataset at `theta`.
    fn log_kernel(&self, data: Vec<Vec<f64>>, theta: Vec<f64>) -> PyResult<f64> {
        let problem = build_problem(&self.inner.model, Dataset::from_rows(&self.inner.model, data).map_err(err)?).map_err(err)?;
        let theta = DVector::from_vec(theta);
        let frame = tangent_frame(problem.target.manifold(), &theta).map_err(err)?;
        Ok(problem.target.log_kernel_at(&frame))
    }

    fn __repr__(&self) -> String {
        format!("StudyConfig(model={}, hash={})", self.inner.model.name(), self.inner.hash())
    }
}

/// Projection onto the tangent space of the unit sphere in `len(theta)` dimensions.
#[pyfunction]
fn sphere_projection(theta: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let m = UnitSphere::new(theta.len());
    Ok(rows(&projection_matrix(&m, &DVector::from_vec(theta)).map_err(err)?))
}

/// CGFD log-kernel, its gradient, and the extrinsic log-density for the
/// sphere model with `n × 3` data.
#[pyfunction]
fn sphere_kernels(data: Vec<Vec<f64>>, theta: Vec<f64>) -> PyResult<(f64, Vec<f64>, f64)> {
    let (model, sphere) = sphere_model(matrix(&data, 3)?).map_err(err)?;
    let theta = DVector::from_vec(theta);
    let lk = cgfd_log_kernel(&model, &sphere, &theta).map_err(err)?;
    let grad = cgfd_grad_log(&model, &sphere, &theta).map_err(err)?;
    let hw = hwang_log_kernel(&model, &sphere, &theta).map_err(err)?;
    Ok((lk, grad.iter().copied().collect(), hw))
}

/// Octant probabilities of the sphere-model CGFD by grid quadrature.
#[pyfunction]
#[pyo3(signature = (data, resolution=400))]
fn sphere_octants(py: Python<'_>, data: Vec<Vec<f64>>, resolution: usize) -> PyResult<Vec<f64>> {
    let (model, sphere) = sphere_model(matrix(&data, 3)?).map_err(err)?;
    let grid = py
        .detach(|| normalize_on_chart(|t| cgfd_log_kernel(&model, &sphere, t).unwrap_or(f64::NAN), &SpherePolarChart, resolution))
        .map_err(err)?;
    Ok(octant_masses(&grid).to_vec())
}

/// Four-way octant comparison on the sphere model.
#[pyfunction]
#[pyo3(signature = (data, seed=0, resolution=400, hmc_samples=20_000, mh_samples=200_000))]
fn compare(py: Python<'_>, data: Vec<Vec<f64>>, seed: u64, resolution: usize, hmc_samples: usize, mh_samples: usize) -> PyResult<Py<PyAny>> {
    let m = matrix(&data, 3)?;
    let mut s = CompareSettings::standard(m.nrows(), seed);
    s.resolution = resolution;
    s.hmc_run.n_samples = hmc_samples;
    s.hmc_run.burn_in = hmc_samples / 2;
    s.mh_run.n_samples = mh_samples;
    s.mh_run.burn_in = mh_samples / 2;
    let out = py.detach(|| compare_sphere(m, &s)).map_err(err)?;
    json_to_py(py, &out)
}

/// Pointwise logspline density bands at the knots.
#[pyfunction]
fn logspline_curves(py: Python<'_>, samples: Vec<Vec<f64>>, knots: Vec<f64>, level: f64) -> PyResult<Py<PyAny>> {
    let basis = LinearBSplineBasis::new(knots).map_err(err)?;
    let samples: Vec<DVector<f64>> = samples.into_iter().map(DVector::from_vec).collect();
    let c = confidence_curves(&samples, &basis, level).map_err(err)?;
    json_to_py(py, &c)
}

#[pymodule]
fn cgfd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStudyConfig>()?;
    m.add_function(wrap_pyfunction!(sphere_projection, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_kernels, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_octants, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(logspline_curves, m)?)?;
    Ok(())
}
