//! Numerical lab for discrete transport-network formation on equidistant
//! meshes.
//!
//! The model optimizes nonnegative edge conductivities of a grid graph under
//! a Kirchhoff node balance, trading pumping power against metabolic cost
//! with an optional diffusive penalty on conductivity differences. The crate
//! provides:
//!
//! - [`mesh`]: the 1D mesh and the 2D Courant triangulation together with the
//!   reconstruction operators Q0 (piecewise-constant diagonal tensor) and
//!   Q1/Q2 (piecewise-linear interpolants through edge midpoints);
//! - [`linsolve`]: conjugate gradients on the zero-mean subspace for the
//!   graph-Laplacian systems;
//! - [`kirchhoff`]: assembly and solves of the rescaled Kirchhoff laws, edge
//!   fluxes and the explicit 1D flux formula;
//! - [`fem`]: the P1 finite-element bridge (stiffness with a diagonal tensor,
//!   hat-basis source projection, per-triangle gradients) and the numerical
//!   Kirchhoff/FEM equivalence check;
//! - [`energy`]: discrete, reformulated and diffusion-augmented energy
//!   functionals plus the parallelogram permeability algebra;
//! - [`dynamics`]: the constrained gradient flow, projected-gradient
//!   minimization and the closed-form 1D minimizer;
//! - [`harness`]: scenario files, refinement / weak-strong / recovery /
//!   minimizer-convergence studies, the built-in verification suite and file
//!   outputs (CSV, JSON, SVG).

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod fem;
pub mod harness;
pub mod kirchhoff;
pub mod linsolve;
pub mod mesh;
pub mod quadrature;
pub mod rng;
pub mod source;

pub use energy::{EnergyReport, Params};
pub use error::{Error, Result};
pub use kirchhoff::{DiscreteSources, PressureField, SolverConfig};
pub use mesh::{EdgeConductivities, Mesh1D, Mesh2D, TensorField};
pub use source::SourceSpec;
