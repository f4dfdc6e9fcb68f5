//! Python bindings: grids, fields, the Hilbert-scale operations, noise
//! increments, the inequality verifier and the batch runner.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use hilbert_spde::analysis::{verify_inequalities, FieldSampler};
use hilbert_spde::cli::{execute, inspect as inspect_snapshot, replay as replay_manifest, RunConfig};
use hilbert_spde::dynamics::{leray_project, taming_eval as taming};
use hilbert_spde::noise::NoisePath;
use hilbert_spde::{Error, ScaleOperator};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Json(_) | Error::BlowUp { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Periodic grid `[0, length)^dim` with `modes` points per axis.
#[pyclass(frozen, name = "Grid")]
pub struct PyGrid(hilbert_spde::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (dim, modes, length = std::f64::consts::TAU, components = 1))]
    fn new(dim: usize, modes: usize, length: f64, components: usize) -> PyResult<Self> {
        hilbert_spde::Grid::new(dim, modes, length, components).map(PyGrid).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn modes(&self) -> usize {
        self.0.modes()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.period()
    }

    #[getter]
    fn components(&self) -> usize {
        self.0.n_components()
    }

    #[getter]
    fn points(&self) -> usize {
        self.0.points()
    }

    #[getter]
    fn dealias_cutoff(&self) -> i64 {
        self.0.dealias_cutoff()
    }

    /// Collocation coordinates, one `[x, y, z]` triple per point.
    fn coordinates(&self) -> Vec<[f64; 3]> {
        (0..self.0.points()).map(|p| self.0.coordinate(p)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(dim={}, modes={}, length={}, components={})",
            self.0.dim(),
            self.0.modes(),
            self.0.period(),
            self.0.n_components()
        )
    }
}

/// Real field stored by its Fourier coefficients.
#[pyclass(frozen, name = "Field")]
pub struct PyField(hilbert_spde::SpectralField);

#[pymethods]
impl PyField {
    /// Field from collocation values, component blocks one after another.
    #[staticmethod]
    fn from_values(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        hilbert_spde::SpectralField::from_physical(&grid.0, &values)
            .map(PyField)
            .map_err(err)
    }

    #[staticmethod]
    fn zeros(grid: &PyGrid) -> Self {
        PyField(hilbert_spde::SpectralField::zeros(&grid.0))
    }

    /// Random band-limited field, as drawn by the inequality verifier.
    #[staticmethod]
    #[pyo3(signature = (grid, seed, index = 0, amplitude = 1.0))]
    fn random(grid: &PyGrid, seed: u64, index: u64, amplitude: f64) -> PyResult<Self> {
        let sampler = FieldSampler {
            amplitude,
            ..FieldSampler::new(&grid.0, seed)
        };
        sampler.sample(index, 0).map(PyField).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let file = File::open(path)?;
        hilbert_spde::SpectralField::read_snapshot(BufReader::new(file))
            .map(PyField)
            .map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.0.write_snapshot(&mut w).map_err(err)?;
        w.flush()?;
        Ok(())
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    fn values(&self) -> Vec<f64> {
        self.0.to_physical()
    }

    /// Fourier coefficients as `(re, im)` pairs.
    fn coefficients(&self) -> Vec<(f64, f64)> {
        self.0.coeffs().iter().map(|c| (c.re, c.im)).collect()
    }

    /// `‖f‖_α = ‖(I − Δ)^{α/2} f‖_0`.
    fn norm(&self, alpha: f64) -> f64 {
        hilbert_spde::sobolev_norm(&self.0, alpha)
    }

    #[pyo3(signature = (other, alpha = 0.0))]
    fn inner(&self, other: &PyField, alpha: f64) -> f64 {
        ScaleOperator::for_field(&self.0).inner(&self.0, &other.0, alpha)
    }

    /// `(I − Δ)^{α/2} f`.
    fn power(&self, alpha: f64) -> Self {
        PyField(ScaleOperator::for_field(&self.0).fractional_power(&self.0, alpha))
    }

    /// `T_ε f = e^{εΔ} f`.
    fn semigroup(&self, eps: f64) -> PyResult<Self> {
        hilbert_spde::apply_semigroup(&self.0, eps).map(PyField).map_err(err)
    }

    fn leray(&self) -> PyResult<Self> {
        leray_project(&self.0).map(PyField).map_err(err)
    }

    fn divergence(&self) -> PyResult<Self> {
        self.0.divergence().map(PyField).map_err(err)
    }

    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    fn __add__(&self, other: &PyField) -> Self {
        PyField(self.0.add(&other.0))
    }

    fn __sub__(&self, other: &PyField) -> Self {
        PyField(self.0.sub(&other.0))
    }

    fn __mul__(&self, s: f64) -> Self {
        PyField(self.0.scaled(s))
    }

    fn __rmul__(&self, s: f64) -> Self {
        PyField(self.0.scaled(s))
    }
}

/// `(g_N(r), g_N'(r))` of the taming function.
#[pyfunction]
fn taming_eval(r: f64, level: f64) -> PyResult<(f64, f64)> {
    taming(r, level).map_err(err)
}

/// Brownian increments of `steps` consecutive steps starting at `start`;
/// `level` halves the step `level` times by bridge refinement.
#[pyfunction]
#[pyo3(signature = (seed, components, dt, start, steps, level = 0))]
fn noise_increments(seed: u64, components: usize, dt: f64, start: u64, steps: usize, level: u32) -> PyResult<Vec<Vec<f64>>> {
    let path = NoisePath::new(seed, components, dt).and_then(|p| p.at_level(level)).map_err(err)?;
    Ok(path.increments_block(start, steps))
}

/// Ensemble maxima of the functional inequalities:
/// `{name: (max over first half, max, drift, pass)}`.
#[pyfunction]
#[pyo3(signature = (grid, seed, samples = 1000))]
fn verify(grid: &PyGrid, seed: u64, samples: usize) -> PyResult<BTreeMap<String, (f64, f64, f64, bool)>> {
    let report = verify_inequalities(&FieldSampler::new(&grid.0, seed), samples).map_err(err)?;
    Ok(report
        .checks
        .iter()
        .map(|c| (c.name.clone(), (c.max_half, c.max, c.drift, c.pass)))
        .collect())
}

/// Runs a config (file text) into `out_dir`; returns the manifest as JSON.
#[pyfunction]
#[pyo3(signature = (config_text, out_dir, threads = None))]
fn run(py: Python<'_>, config_text: &str, out_dir: PathBuf, threads: Option<usize>) -> PyResult<String> {
    let cfg = RunConfig::parse(config_text).map_err(err)?;
    let outcome = py.detach(|| execute(&cfg, &out_dir, threads)).map_err(err)?;
    serde_json::to_string_pretty(&outcome.manifest).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Replays a manifest; returns the names of divergent artifacts.
#[pyfunction]
#[pyo3(signature = (manifest, threads = None))]
fn replay(py: Python<'_>, manifest: PathBuf, threads: Option<usize>) -> PyResult<Vec<String>> {
    let r = py.detach(|| replay_manifest(&manifest, threads)).map_err(err)?;
    Ok(r.divergent)
}

/// Grid metadata and `‖u‖_0, ‖u‖_1, ‖u‖_2` of a snapshot file.
#[pyfunction]
fn inspect(path: PathBuf) -> PyResult<BTreeMap<String, f64>> {
    let s = inspect_snapshot(&path).map_err(err)?;
    Ok(BTreeMap::from([
        ("dim".to_string(), s.dim as f64),
        ("modes".to_string(), s.modes as f64),
        ("length".to_string(), s.length),
        ("components".to_string(), s.components as f64),
        ("h0".to_string(), s.h0),
        ("h1".to_string(), s.h1),
        ("h2".to_string(), s.h2),
    ]))
}

#[pymodule]
fn pyhspde(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(taming_eval, m)?)?;
    m.add_function(wrap_pyfunction!(noise_increments, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(inspect, m)?)?;
    Ok(())
}
