//! Python bindings for the netform lab: meshes, source projections,
//! Kirchhoff solves, energies, minimization and the permeability algebra.
//!
//! Build with `cargo build -p netform-py --release`; the produced
//! `libnetform_py.so` imports as `netform_py` once renamed (see
//! `python/smoke_test.py`).

use netform_core::error::Error;
use netform_core::kirchhoff::{DiscreteSources, SolverConfig, SourceDim};
use netform_core::mesh::EdgeConductivities;
use netform_core::quadrature::TriQuad;
use netform_core::source::SourceSpec;
use netform_core::{dynamics, energy, fem, harness, kirchhoff, mesh};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn report_dict<'py>(py: Python<'py>, rep: &energy::EnergyReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("pumping", rep.pumping)?;
    d.set_item("metabolic", rep.metabolic)?;
    d.set_item("diffusive", rep.diffusive)?;
    d.set_item("total", rep.total)?;
    d.set_item("mode", rep.variant.to_string())?;
    Ok(d)
}

/// Model parameters (gamma, nu, r, d2).
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: energy::Params,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (gamma, nu, r, d2 = 0.0))]
    fn new(gamma: f64, nu: f64, r: f64, d2: f64) -> PyResult<Self> {
        Ok(Self {
            inner: energy::Params::new(gamma, nu, r, d2).map_err(err)?,
        })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn d2(&self) -> f64 {
        self.inner.d2
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(gamma={}, nu={}, r={}, d2={})",
            self.inner.gamma, self.inner.nu, self.inner.r, self.inner.d2
        )
    }
}

fn parse_source(family: &str, params: Vec<f64>) -> PyResult<SourceSpec> {
    SourceSpec::parse(family, &params).map_err(err)
}

/// Equidistant 1D mesh on [0,1].
#[pyclass(name = "Mesh1D")]
struct PyMesh1D {
    inner: mesh::Mesh1D,
}

#[pymethods]
impl PyMesh1D {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::Mesh1D::new(n).map_err(err)?,
        })
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    /// Hat-basis projection of a named source; returns per-node values S_i.
    #[pyo3(signature = (family, params = vec![]))]
    fn project_source(&self, family: &str, params: Vec<f64>) -> PyResult<Vec<f64>> {
        let spec = parse_source(family, params)?;
        if !spec.supports_1d() {
            return Err(PyValueError::new_err(format!(
                "source '{family}' is 2D-only"
            )));
        }
        Ok(fem::project_source_1d(&self.inner, |x| spec.eval_1d(x)).values)
    }

    /// Zero-average pressures of the Kirchhoff law.
    fn solve_pressures(
        &self,
        conductivities: Vec<f64>,
        r: f64,
        sources: Vec<f64>,
    ) -> PyResult<Vec<f64>> {
        let c = EdgeConductivities::from_values(conductivities);
        let s = DiscreteSources::from_values(SourceDim::OneD, sources);
        Ok(kirchhoff::solve_pressures_1d(&self.inner, &c, r, &s)
            .map_err(err)?
            .values)
    }

    /// Oriented edge fluxes for given pressures.
    fn edge_fluxes(
        &self,
        conductivities: Vec<f64>,
        r: f64,
        pressures: Vec<f64>,
    ) -> PyResult<Vec<f64>> {
        let c = EdgeConductivities::from_values(conductivities);
        let p = kirchhoff::PressureField { values: pressures };
        Ok(kirchhoff::edge_fluxes_1d(&self.inner, &c, r, &p)
            .map_err(err)?
            .values)
    }

    /// The explicit conductivity-independent 1D fluxes.
    fn fluxes_explicit(&self, sources: Vec<f64>) -> PyResult<Vec<f64>> {
        let s = DiscreteSources::from_values(SourceDim::OneD, sources);
        Ok(kirchhoff::fluxes_1d_explicit(&self.inner, &s)
            .map_err(err)?
            .values)
    }

    /// Discrete energy report (with the diffusive part) as a dict.
    fn discrete_energy<'py>(
        &self,
        py: Python<'py>,
        conductivities: Vec<f64>,
        params: &PyParams,
        sources: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let c = EdgeConductivities::from_values(conductivities);
        let s = DiscreteSources::from_values(SourceDim::OneD, sources);
        let rep = energy::total_energy_with_diffusion_1d(
            &self.inner,
            &c,
            &params.inner,
            &s,
            &SolverConfig::with_tol(1e-12),
        )
        .map_err(err)?;
        report_dict(py, &rep)
    }

    /// The closed-form global minimizer (requires d2 = 0).
    fn closed_form_minimizer(&self, params: &PyParams, sources: Vec<f64>) -> PyResult<Vec<f64>> {
        let s = DiscreteSources::from_values(SourceDim::OneD, sources);
        Ok(
            dynamics::closed_form_minimizer_1d(&self.inner, &params.inner, &s)
                .map_err(err)?
                .values,
        )
    }

    /// Projected-gradient minimization; returns a dict with the minimizer and
    /// convergence data.
    #[pyo3(signature = (c0, params, sources, tol = 1e-7, max_iter = 100_000))]
    fn minimize<'py>(
        &self,
        py: Python<'py>,
        c0: Vec<f64>,
        params: &PyParams,
        sources: Vec<f64>,
        tol: f64,
        max_iter: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let s = DiscreteSources::from_values(SourceDim::OneD, sources);
        let res = dynamics::minimize_1d(
            &self.inner,
            EdgeConductivities::from_values(c0),
            &params.inner,
            &s,
            tol,
            max_iter,
            &SolverConfig::with_tol(1e-13),
        )
        .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("conductivities", res.conductivities.values)?;
        d.set_item("iterations", res.iterations)?;
        d.set_item("grad_norm", res.grad_norm)?;
        d.set_item("converged", res.converged)?;
        d.set_item("energy", report_dict(py, &res.energy)?)?;
        Ok(d)
    }
}

/// Equidistant 2D mesh on [0,1]^2 with the Courant triangulation.
#[pyclass(name = "Mesh2D")]
struct PyMesh2D {
    inner: mesh::Mesh2D,
}

#[pymethods]
impl PyMesh2D {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: mesh::Mesh2D::new(n).map_err(err)?,
        })
    }

    #[getter]
    fn n_cells_per_side(&self) -> usize {
        self.inner.n_cells_per_side()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    fn node_xy(&self, idx: usize) -> (f64, f64) {
        self.inner.node_xy(idx)
    }

    /// Per-triangle (c1, c2) of the piecewise-constant tensor built from edge
    /// conductivities.
    fn q0(&self, conductivities: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let field = mesh::q0_2d(
            &self.inner,
            &EdgeConductivities::from_values(conductivities),
        )
        .map_err(err)?;
        Ok((field.c1, field.c2))
    }

    /// Test-function projection of a named source; returns per-node S_i.
    #[pyo3(signature = (family, params = vec![]))]
    fn project_source(&self, family: &str, params: Vec<f64>) -> PyResult<Vec<f64>> {
        let spec = parse_source(family, params)?;
        if !spec.supports_2d() {
            return Err(PyValueError::new_err(format!(
                "source '{family}' is 1D-only"
            )));
        }
        Ok(
            fem::project_source_2d(&self.inner, |x, y| spec.eval_2d(x, y), &TriQuad::default())
                .values,
        )
    }

    /// Zero-average pressures of the FEM-consistent Kirchhoff law.
    fn solve_pressures(
        &self,
        conductivities: Vec<f64>,
        r: f64,
        sources: Vec<f64>,
    ) -> PyResult<Vec<f64>> {
        let c = EdgeConductivities::from_values(conductivities);
        let s = DiscreteSources::from_values(SourceDim::TwoD, sources);
        Ok(kirchhoff::solve_pressures_2d(&self.inner, &c, r, &s)
            .map_err(err)?
            .values)
    }

    /// Discrete energy (integral boundary mode) plus the diffusive part.
    fn discrete_energy<'py>(
        &self,
        py: Python<'py>,
        conductivities: Vec<f64>,
        params: &PyParams,
        sources: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let c = EdgeConductivities::from_values(conductivities);
        let s = DiscreteSources::from_values(SourceDim::TwoD, sources);
        let rep = energy::total_energy_with_diffusion_2d(
            &self.inner,
            &c,
            &params.inner,
            &s,
            &SolverConfig::with_tol(1e-12),
        )
        .map_err(err)?;
        report_dict(py, &rep)
    }

    /// Maximum interior-node residual of the Kirchhoff identity against the
    /// FEM solution.
    fn kirchhoff_equivalence_residual(
        &self,
        conductivities: Vec<f64>,
        r: f64,
        sources: Vec<f64>,
    ) -> PyResult<f64> {
        let c = EdgeConductivities::from_values(conductivities);
        let s = DiscreteSources::from_values(SourceDim::TwoD, sources);
        fem::verify_kirchhoff_equivalence(&self.inner, &c, r, &s, &SolverConfig::with_tol(1e-12))
            .map_err(err)
    }

    #[pyo3(signature = (c0, params, sources, tol = 1e-6, max_iter = 200_000))]
    fn minimize<'py>(
        &self,
        py: Python<'py>,
        c0: Vec<f64>,
        params: &PyParams,
        sources: Vec<f64>,
        tol: f64,
        max_iter: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let s = DiscreteSources::from_values(SourceDim::TwoD, sources);
        let res = dynamics::minimize_2d(
            &self.inner,
            EdgeConductivities::from_values(c0),
            &params.inner,
            &s,
            tol,
            max_iter,
            &SolverConfig::with_tol(1e-13),
        )
        .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("conductivities", res.conductivities.values)?;
        d.set_item("iterations", res.iterations)?;
        d.set_item("grad_norm", res.grad_norm)?;
        d.set_item("converged", res.converged)?;
        d.set_item("energy", report_dict(py, &res.energy)?)?;
        Ok(d)
    }
}

/// Effective permeability of a parallelogram grid: tensor, principal
/// permeabilities and principal directions.
#[pyfunction]
fn permeability<'py>(
    py: Python<'py>,
    c1: f64,
    c2: f64,
    theta1: [f64; 2],
    theta2: [f64; 2],
    r: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = energy::permeability_tensor(c1, c2, theta1, theta2, r).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("tensor", p.tensor.to_vec())?;
    d.set_item("eigenvalues", p.eigenvalues.to_vec())?;
    d.set_item("eigenvectors", p.eigenvectors.to_vec())?;
    Ok(d)
}

/// Run the built-in verification suite; returns (name, passed, detail) rows.
#[pyfunction]
fn run_checks() -> Vec<(String, bool, String)> {
    harness::run_all_checks()
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail))
        .collect()
}

#[pymodule]
fn netform_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyMesh1D>()?;
    m.add_class::<PyMesh2D>()?;
    m.add_function(wrap_pyfunction!(permeability, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
