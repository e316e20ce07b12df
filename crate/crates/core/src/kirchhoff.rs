//! Discrete Kirchhoff laws on the equidistant meshes: assembly, pressure
//! solves and edge fluxes.
//!
//! The 1D system is the literal three-point law with its terminal-node
//! equations. The 2D system is assembled per triangle through the finite
//! element bilinear form with the Q0-aligned tensor, which reproduces the
//! interior four-point stencil exactly and gives boundary rows with
//! half-weights on boundary-tangential edges (the row a P1 test function
//! actually produces there; the literal stencil is only consistent at
//! interior nodes).

use crate::error::{Error, Result};
use crate::fem;
use crate::linsolve::{self, SolveOptions, SolveReport, SparseSymSystem, SymCsrBuilder};
use crate::mesh::{q0_2d, EdgeConductivities, Mesh1D, Mesh2D};

/// Per-node pressures with zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    pub values: Vec<f64>,
}

impl PressureField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Oriented edge fluxes: positive means flow from x_{i-1} to x_i in 1D and
/// W->E (horizontal) / S->N (vertical) in 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFluxes {
    pub values: Vec<f64>,
}

/// Which rescaled Kirchhoff law a source vector feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceDim {
    /// Right-hand side enters as `h * S_i`.
    OneD,
    /// Right-hand side enters as `h^2 * S_i` (the FEM load `int S psi_i`).
    TwoD,
}

/// Per-node source/sink strengths together with their scale convention.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSources {
    pub values: Vec<f64>,
    pub dim: SourceDim,
}

impl DiscreteSources {
    pub fn from_values(dim: SourceDim, values: Vec<f64>) -> Self {
        Self { values, dim }
    }

    /// Build a compatible source vector by subtracting the node mean (for the
    /// equidistant meshes the weighted sum vanishes iff the plain sum does).
    pub fn zero_mean_from_values(dim: SourceDim, mut values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        for v in values.iter_mut() {
            *v -= mean;
        }
        Self { values, dim }
    }

    /// The mass-conservation defect: sum of h * S_i (1D) or h^2 * S_i (2D).
    pub fn weighted_sum(&self, h: f64) -> f64 {
        let s: f64 = self.values.iter().sum();
        match self.dim {
            SourceDim::OneD => h * s,
            SourceDim::TwoD => h * h * s,
        }
    }

    fn check_len(&self, expected: usize) -> Result<()> {
        if self.values.len() != expected {
            return Err(Error::SizeMismatch {
                what: "discrete sources",
                expected,
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Linear-solver knobs threaded through the pressure solves.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub max_iter: Option<usize>,
    pub jacobi: bool,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: None,
            jacobi: false,
            warm_start: None,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

fn check_r(r: f64) -> Result<()> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::NonPositiveR(r));
    }
    Ok(())
}

/// Assemble the 1D Kirchhoff law: rows are the literal three-point stencil
/// (terminal rows one-sided), right-hand side `h * S_i`.
pub fn assemble_kirchhoff_1d(
    mesh: &Mesh1D,
    c: &EdgeConductivities,
    r: f64,
    sources: &DiscreteSources,
) -> Result<SparseSymSystem> {
    check_r(r)?;
    c.check(mesh.n_edges())?;
    sources.check_len(mesh.n_nodes())?;
    let h = mesh.h();
    let mut builder = SymCsrBuilder::new(mesh.n_nodes());
    for (i, &ci) in c.values.iter().enumerate() {
        builder.add_edge(i, i + 1, (r + ci) / h);
    }
    let rhs = sources.values.iter().map(|&s| h * s).collect();
    Ok(SparseSymSystem {
        matrix: builder.build(),
        rhs,
    })
}

/// Assemble the 2D Kirchhoff law through the FEM bilinear form with the
/// Q0-aligned tensor; right-hand side `h^2 * S_i`.
pub fn assemble_kirchhoff_2d(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    r: f64,
    sources: &DiscreteSources,
) -> Result<SparseSymSystem> {
    check_r(r)?;
    c.check(mesh.n_edges())?;
    sources.check_len(mesh.n_nodes())?;
    let field = q0_2d(mesh, c)?;
    let matrix = fem::assemble_stiffness_2d(mesh, &field, r)?;
    let h2 = mesh.h() * mesh.h();
    let rhs = sources.values.iter().map(|&s| h2 * s).collect();
    Ok(SparseSymSystem { matrix, rhs })
}

/// Solve the 1D Kirchhoff law for the zero-average pressures.
pub fn solve_pressures_1d(
    mesh: &Mesh1D,
    c: &EdgeConductivities,
    r: f64,
    sources: &DiscreteSources,
) -> Result<PressureField> {
    solve_pressures_1d_with(mesh, c, r, sources, &SolverConfig::default()).map(|(p, _)| p)
}

pub fn solve_pressures_1d_with(
    mesh: &Mesh1D,
    c: &EdgeConductivities,
    r: f64,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<(PressureField, SolveReport)> {
    let system = assemble_kirchhoff_1d(mesh, c, r, sources)?;
    let report = linsolve::solve_zero_mean_with(
        &system,
        cfg.rel_tol,
        cfg.max_iter,
        &SolveOptions {
            jacobi: cfg.jacobi,
            warm_start: cfg.warm_start.clone(),
        },
    )?;
    Ok((
        PressureField {
            values: report.solution.clone(),
        },
        report,
    ))
}

/// Solve the 2D Kirchhoff law for the zero-average pressures.
pub fn solve_pressures_2d(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    r: f64,
    sources: &DiscreteSources,
) -> Result<PressureField> {
    solve_pressures_2d_with(mesh, c, r, sources, &SolverConfig::default()).map(|(p, _)| p)
}

pub fn solve_pressures_2d_with(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    r: f64,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<(PressureField, SolveReport)> {
    let system = assemble_kirchhoff_2d(mesh, c, r, sources)?;
    let report = linsolve::solve_zero_mean_with(
        &system,
        cfg.rel_tol,
        cfg.max_iter,
        &SolveOptions {
            jacobi: cfg.jacobi,
            warm_start: cfg.warm_start.clone(),
        },
    )?;
    Ok((
        PressureField {
            values: report.solution.clone(),
        },
        report,
    ))
}

/// 1D edge fluxes `Q_i = (r + C_i)(P_{i-1} - P_i)/h`.
pub fn edge_fluxes_1d(
    mesh: &Mesh1D,
    c: &EdgeConductivities,
    r: f64,
    p: &PressureField,
) -> Result<EdgeFluxes> {
    c.check(mesh.n_edges())?;
    if p.values.len() != mesh.n_nodes() {
        return Err(Error::SizeMismatch {
            what: "pressure field",
            expected: mesh.n_nodes(),
            got: p.values.len(),
        });
    }
    let h = mesh.h();
    let values = (0..mesh.n_edges())
        .map(|i| (r + c.values[i]) * (p.values[i] - p.values[i + 1]) / h)
        .collect();
    Ok(EdgeFluxes { values })
}

/// 2D edge fluxes, W->E positive on horizontal edges and S->N positive on
/// vertical ones: `Q_e = (r + C_e)(P_tail - P_head)/h`.
pub fn edge_fluxes_2d(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    r: f64,
    p: &PressureField,
) -> Result<EdgeFluxes> {
    c.check(mesh.n_edges())?;
    if p.values.len() != mesh.n_nodes() {
        return Err(Error::SizeMismatch {
            what: "pressure field",
            expected: mesh.n_nodes(),
            got: p.values.len(),
        });
    }
    let h = mesh.h();
    let values = (0..mesh.n_edges())
        .map(|e| {
            let (a, b) = mesh.edge_nodes(e);
            (r + c.values[e]) * (p.values[a] - p.values[b]) / h
        })
        .collect();
    Ok(EdgeFluxes { values })
}

/// The explicit 1D flux solution `Q_i = h * sum_{j<i} S_j`; conductivities do
/// not enter. The terminal identity `-Q_N = h S_N` holds automatically for
/// compatible sources.
pub fn fluxes_1d_explicit(mesh: &Mesh1D, sources: &DiscreteSources) -> Result<EdgeFluxes> {
    sources.check_len(mesh.n_nodes())?;
    let h = mesh.h();
    let sum_abs: f64 = sources.values.iter().map(|v| v.abs()).sum();
    let defect = sources.weighted_sum(h).abs();
    if defect > linsolve::COMPAT_TOL * (h * sum_abs).max(f64::MIN_POSITIVE) {
        return Err(Error::IncompatibleRhs {
            defect,
            tol: linsolve::COMPAT_TOL * h * sum_abs,
        });
    }
    let mut values = Vec::with_capacity(mesh.n_edges());
    let mut running = 0.0;
    for i in 0..mesh.n_edges() {
        running += sources.values[i];
        values.push(h * running);
    }
    Ok(EdgeFluxes { values })
}
