//! Constrained gradient-flow dynamics of the conductivities and projected
//! gradient minimization.
//!
//! The per-edge adaptation law is the r-regularized form
//! `dC_e/dt = (dP_e/h)^2 - nu (r + C_e)^{gamma-1} - (diffusive gradient)/w_e`,
//! i.e. the energy gradient with the triangle-area metric weight `w_e`
//! absorbed, clamped at the constraint `C >= 0`. Time stepping is explicit
//! Euler with energy backtracking: a step is accepted only when the total
//! energy does not increase, the step size halves on rejection and grows by
//! 1.2 after acceptance. Linear solves warm-start from the previous pressures
//! inside a trajectory; everything is deterministic for fixed inputs.

use crate::energy::{
    self, diffusive_gradient_1d, diffusive_gradient_2d, EnergyReport, EnergyVariant, Params,
};
use crate::error::{Error, Result};
use crate::fem;
use crate::kirchhoff::{
    assemble_kirchhoff_1d, assemble_kirchhoff_2d, fluxes_1d_explicit, DiscreteSources, SolverConfig,
};
use crate::linsolve::{self, SolveOptions};
use crate::mesh::{EdgeConductivities, Mesh1D, Mesh2D, TensorField};

/// Smallest admissible backtracking step before the flow is declared stuck.
pub const DT_FLOOR: f64 = 1e-14;

/// Growth factor applied to the step size after an accepted step.
const DT_GROWTH: f64 = 1.2;

/// One point of a discrete conductivity trajectory.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub conductivities: EdgeConductivities,
    pub energy: EnergyReport,
    pub dt: f64,
}

/// Outcome of projected-gradient minimization.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub conductivities: EdgeConductivities,
    pub iterations: usize,
    pub energy: EnergyReport,
    /// Infinity norm of the projected, metric-scaled gradient at exit.
    pub grad_norm: f64,
    pub converged: bool,
}

/// Dimension-erased driver holding the problem data and the warm-start cache.
pub struct Descent<'a> {
    model: Model<'a>,
    warm: Option<Vec<f64>>,
}

enum Model<'a> {
    OneD {
        mesh: &'a Mesh1D,
        params: &'a Params,
        sources: &'a DiscreteSources,
        cfg: SolverConfig,
    },
    TwoD {
        mesh: &'a Mesh2D,
        params: &'a Params,
        sources: &'a DiscreteSources,
        cfg: SolverConfig,
        weights: Vec<f64>,
    },
}

impl<'a> Descent<'a> {
    pub fn new_1d(
        mesh: &'a Mesh1D,
        params: &'a Params,
        sources: &'a DiscreteSources,
        cfg: &SolverConfig,
    ) -> Self {
        Self {
            model: Model::OneD {
                mesh,
                params,
                sources,
                cfg: cfg.clone(),
            },
            warm: None,
        }
    }

    pub fn new_2d(
        mesh: &'a Mesh2D,
        params: &'a Params,
        sources: &'a DiscreteSources,
        cfg: &SolverConfig,
    ) -> Self {
        let weights = (0..mesh.n_edges()).map(|e| mesh.edge_weight(e)).collect();
        Self {
            model: Model::TwoD {
                mesh,
                params,
                sources,
                cfg: cfg.clone(),
                weights,
            },
            warm: None,
        }
    }

    pub fn n_edges(&self) -> usize {
        match &self.model {
            Model::OneD { mesh, .. } => mesh.n_edges(),
            Model::TwoD { mesh, .. } => mesh.n_edges(),
        }
    }

    fn params(&self) -> &Params {
        match &self.model {
            Model::OneD { params, .. } => params,
            Model::TwoD { params, .. } => params,
        }
    }

    /// Metric weight w_e of an edge (h in 1D, triangle-area weight in 2D).
    fn weight(&self, e: usize) -> f64 {
        match &self.model {
            Model::OneD { mesh, .. } => mesh.h(),
            Model::TwoD { weights, .. } => weights[e],
        }
    }

    /// Solve the Kirchhoff system at `c`, warm-starting from the cached
    /// pressures, and return the energy report (with diffusion) plus the
    /// pressures.
    pub fn energy_with_pressure(
        &mut self,
        c: &EdgeConductivities,
    ) -> Result<(EnergyReport, Vec<f64>)> {
        let (system, variant) = match &self.model {
            Model::OneD {
                mesh,
                params,
                sources,
                ..
            } => (
                assemble_kirchhoff_1d(mesh, c, params.r, sources)?,
                EnergyVariant::Diffusive1d,
            ),
            Model::TwoD {
                mesh,
                params,
                sources,
                ..
            } => (
                assemble_kirchhoff_2d(mesh, c, params.r, sources)?,
                EnergyVariant::Diffusive2d,
            ),
        };
        let cfg = match &self.model {
            Model::OneD { cfg, .. } => cfg,
            Model::TwoD { cfg, .. } => cfg,
        };
        let report = linsolve::solve_zero_mean_with(
            &system,
            cfg.rel_tol,
            cfg.max_iter,
            &SolveOptions {
                jacobi: cfg.jacobi,
                warm_start: self.warm.clone(),
            },
        )?;
        let p = report.solution;
        self.warm = Some(p.clone());
        let (pumping, metabolic, diffusive) = match &self.model {
            Model::OneD { mesh, params, .. } => {
                let (pu, me) = energy::energy_parts_1d(mesh, c, params, &p);
                (pu, me, energy::diffusive_term_1d(mesh, c, params.d2)?)
            }
            Model::TwoD { mesh, params, .. } => {
                let (pu, me) =
                    energy::energy_parts_2d(mesh, c, params, &p, energy::BoundaryMode::Integral);
                (pu, me, energy::diffusive_term_2d(mesh, c, params.d2)?)
            }
        };
        let energy = EnergyReport {
            pumping,
            metabolic,
            diffusive,
            total: pumping + metabolic + diffusive,
            variant,
        };
        Ok((energy, p))
    }

    /// Full energy gradient dE/dC_e at given pressures.
    pub fn gradient_from_pressure(&self, c: &EdgeConductivities, p: &[f64]) -> Result<Vec<f64>> {
        let params = self.params();
        let mut grad = match &self.model {
            Model::OneD { mesh, .. } => {
                let h = mesh.h();
                let mut g = vec![0.0; mesh.n_edges()];
                for (i, gi) in g.iter_mut().enumerate() {
                    let dp = (p[i + 1] - p[i]) / h;
                    *gi = h
                        * (-dp * dp
                            + params.nu * (params.r + c.values[i]).powf(params.gamma - 1.0));
                }
                g
            }
            Model::TwoD { mesh, weights, .. } => {
                let h = mesh.h();
                let mut g = vec![0.0; mesh.n_edges()];
                for (e, ge) in g.iter_mut().enumerate() {
                    let (a, b) = mesh.edge_nodes(e);
                    let dp = (p[b] - p[a]) / h;
                    *ge = weights[e]
                        * (-dp * dp
                            + params.nu * (params.r + c.values[e]).powf(params.gamma - 1.0));
                }
                g
            }
        };
        let diff = match &self.model {
            Model::OneD { mesh, .. } => diffusive_gradient_1d(mesh, c, params.d2)?,
            Model::TwoD { mesh, .. } => diffusive_gradient_2d(mesh, c, params.d2)?,
        };
        for (ge, de) in grad.iter_mut().zip(diff) {
            *ge += de;
        }
        Ok(grad)
    }

    /// Metric-scaled descent direction g_e / w_e.
    fn scaled_direction(&self, grad: &[f64]) -> Vec<f64> {
        grad.iter()
            .enumerate()
            .map(|(e, &g)| g / self.weight(e))
            .collect()
    }

    /// Infinity norm of the projected (feasible) metric-scaled gradient.
    fn projected_norm(&self, c: &EdgeConductivities, scaled: &[f64]) -> f64 {
        scaled
            .iter()
            .zip(&c.values)
            .map(|(&d, &ce)| if ce > 0.0 { d.abs() } else { (-d).max(0.0) })
            .fold(0.0, f64::max)
    }

    fn candidate(c: &EdgeConductivities, scaled: &[f64], dt: f64) -> EdgeConductivities {
        EdgeConductivities::from_values(
            c.values
                .iter()
                .zip(scaled)
                .map(|(&ce, &d)| (ce - dt * d).max(0.0))
                .collect(),
        )
    }
}

/// Energy gradient dE/dC per edge (1D), via the constraint-adjoint identity.
pub fn energy_gradient_1d(
    mesh: &Mesh1D,
    c: &EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let mut descent = Descent::new_1d(mesh, params, sources, cfg);
    let (_, p) = descent.energy_with_pressure(c)?;
    descent.gradient_from_pressure(c, &p)
}

/// Energy gradient dE/dC per edge (2D).
pub fn energy_gradient_2d(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let mut descent = Descent::new_2d(mesh, params, sources, cfg);
    let (_, p) = descent.energy_with_pressure(c)?;
    descent.gradient_from_pressure(c, &p)
}

/// Construct the initial flow state (t = 0) for given conductivities.
pub fn initial_state_1d(
    mesh: &Mesh1D,
    c0: EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    dt0: f64,
    cfg: &SolverConfig,
) -> Result<FlowState> {
    let mut descent = Descent::new_1d(mesh, params, sources, cfg);
    let (energy, _) = descent.energy_with_pressure(&c0)?;
    Ok(FlowState {
        t: 0.0,
        conductivities: c0,
        energy,
        dt: dt0,
    })
}

pub fn initial_state_2d(
    mesh: &Mesh2D,
    c0: EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    dt0: f64,
    cfg: &SolverConfig,
) -> Result<FlowState> {
    let mut descent = Descent::new_2d(mesh, params, sources, cfg);
    let (energy, _) = descent.energy_with_pressure(&c0)?;
    Ok(FlowState {
        t: 0.0,
        conductivities: c0,
        energy,
        dt: dt0,
    })
}

fn step_with(descent: &mut Descent<'_>, state: &FlowState) -> Result<FlowState> {
    let (energy_here, p) = descent.energy_with_pressure(&state.conductivities)?;
    let grad = descent.gradient_from_pressure(&state.conductivities, &p)?;
    let scaled = descent.scaled_direction(&grad);
    let mut dt = state.dt;
    loop {
        let cand = Descent::candidate(&state.conductivities, &scaled, dt);
        let (energy_cand, _) = descent.energy_with_pressure(&cand)?;
        if energy_cand.total <= energy_here.total {
            return Ok(FlowState {
                t: state.t + dt,
                conductivities: cand,
                energy: energy_cand,
                dt: dt * DT_GROWTH,
            });
        }
        dt *= 0.5;
        if dt < DT_FLOOR {
            return Err(Error::StepCollapse {
                t: state.t,
                floor: DT_FLOOR,
            });
        }
    }
}

/// One accepted explicit-Euler step of the 1D conductivity flow.
pub fn flow_step_1d(
    state: &FlowState,
    mesh: &Mesh1D,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<FlowState> {
    let mut descent = Descent::new_1d(mesh, params, sources, cfg);
    step_with(&mut descent, state)
}

/// One accepted explicit-Euler step of the 2D conductivity flow.
pub fn flow_step_2d(
    state: &FlowState,
    mesh: &Mesh2D,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<FlowState> {
    let mut descent = Descent::new_2d(mesh, params, sources, cfg);
    step_with(&mut descent, state)
}

/// Accepted steps shorter than this end a [`run_flow`] trajectory: the
/// backtracking has shrunk to the scale where the update underflows against
/// the conductivities, i.e. the flow is stationary for all practical
/// purposes.
pub const PROGRESS_FLOOR: f64 = 1e-11;

/// Run the flow until `t_end`, reporting every accepted state. Ends early
/// (without error) when the step size collapses or stops making progress at
/// stationarity.
pub fn run_flow(
    descent: &mut Descent<'_>,
    c0: EdgeConductivities,
    dt0: f64,
    t_end: f64,
    mut on_state: impl FnMut(&FlowState),
) -> Result<FlowState> {
    let (energy, _) = descent.energy_with_pressure(&c0)?;
    let mut state = FlowState {
        t: 0.0,
        conductivities: c0,
        energy,
        dt: dt0,
    };
    on_state(&state);
    while state.t < t_end {
        match step_with(descent, &state) {
            Ok(next) => {
                let advanced = next.t - state.t;
                let frozen = next.energy.total == state.energy.total;
                state = next;
                on_state(&state);
                if advanced < PROGRESS_FLOOR || (frozen && advanced < 1e-6 * state.t.max(1.0)) {
                    break; // stationary up to solver resolution
                }
            }
            Err(Error::StepCollapse { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}

fn minimize_with(
    descent: &mut Descent<'_>,
    c0: EdgeConductivities,
    tol: f64,
    max_iter: usize,
    dt0: f64,
) -> Result<MinimizeResult> {
    c0.check(descent.n_edges())?;
    let mut c = c0;
    let (mut energy, mut p) = descent.energy_with_pressure(&c)?;
    let mut dt = dt0;
    let mut iterations = 0usize;
    loop {
        let grad = descent.gradient_from_pressure(&c, &p)?;
        let scaled = descent.scaled_direction(&grad);
        let pg = descent.projected_norm(&c, &scaled);
        if pg <= tol {
            return Ok(MinimizeResult {
                conductivities: c,
                iterations,
                energy,
                grad_norm: pg,
                converged: true,
            });
        }
        if iterations >= max_iter {
            return Ok(MinimizeResult {
                conductivities: c,
                iterations,
                energy,
                grad_norm: pg,
                converged: false,
            });
        }
        // backtracking line search on the projected step
        let mut accepted = false;
        let mut stagnant = false;
        while dt >= DT_FLOOR {
            let cand = Descent::candidate(&c, &scaled, dt);
            let (energy_cand, p_cand) = descent.energy_with_pressure(&cand)?;
            if energy_cand.total <= energy.total {
                stagnant = energy_cand.total == energy.total && dt < 1e-9;
                c = cand;
                energy = energy_cand;
                p = p_cand;
                dt *= DT_GROWTH;
                accepted = true;
                break;
            }
            dt *= 0.5;
        }
        iterations += 1;
        if !accepted || stagnant {
            // stalled against solver noise or the constraint boundary
            return Ok(MinimizeResult {
                conductivities: c,
                iterations,
                energy,
                grad_norm: pg,
                converged: pg <= tol,
            });
        }
    }
}

/// Projected-gradient descent with backtracking to
/// `||projected gradient||_inf <= tol` (1D).
pub fn minimize_1d(
    mesh: &Mesh1D,
    c0: EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    tol: f64,
    max_iter: usize,
    cfg: &SolverConfig,
) -> Result<MinimizeResult> {
    let mut descent = Descent::new_1d(mesh, params, sources, cfg);
    minimize_with(&mut descent, c0, tol, max_iter, 0.05)
}

/// Projected-gradient descent with backtracking (2D).
pub fn minimize_2d(
    mesh: &Mesh2D,
    c0: EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    tol: f64,
    max_iter: usize,
    cfg: &SolverConfig,
) -> Result<MinimizeResult> {
    let mut descent = Descent::new_2d(mesh, params, sources, cfg);
    minimize_with(&mut descent, c0, tol, max_iter, 0.05)
}

/// The 1D global optimum `(r + C_i)^{gamma+1} = Q_i^2 / nu`, clamped at the
/// nonnegativity constraint; fluxes are conductivity-independent in 1D, so
/// this is closed-form. Requires D^2 = 0.
pub fn closed_form_minimizer_1d(
    mesh: &Mesh1D,
    params: &Params,
    sources: &DiscreteSources,
) -> Result<EdgeConductivities> {
    if params.d2 != 0.0 {
        return Err(Error::InvalidParams(format!(
            "closed-form 1D minimizer requires d2 = 0, got {}",
            params.d2
        )));
    }
    let fluxes = fluxes_1d_explicit(mesh, sources)?;
    let values = fluxes
        .values
        .iter()
        .map(|&q| {
            let target = (q * q / params.nu).powf(1.0 / (params.gamma + 1.0));
            (target - params.r).max(0.0)
        })
        .collect();
    Ok(EdgeConductivities::from_values(values))
}

/// One accepted step of the *unregularized* adaptation law
/// `dC_e/dt = Q_e^2/C_e^2 - nu C_e^{gamma-1}` with `Q_e = C_e dP_e/h`,
/// keeping `C >= eps` so the Kirchhoff system stays solvable. This is the
/// historical form of the dynamics; the canonical flow in this crate is the
/// r-regularized one, which matches the energies the convergence studies use.
pub fn flow_step_unregularized_2d(
    state: &FlowState,
    mesh: &Mesh2D,
    params: &Params,
    sources: &DiscreteSources,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<FlowState> {
    if eps <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "the unregularized law needs a positive conductivity floor, got {eps}"
        )));
    }
    // energy of the unregularized model: sum_e w_e [C (dP/h)^2 + (nu/gamma) C^gamma]
    let evaluate = |c: &EdgeConductivities| -> Result<(EnergyReport, Vec<f64>)> {
        // conductivity C >= eps realized as baseline eps plus the excess
        let excess =
            EdgeConductivities::from_values(c.values.iter().map(|&v| (v - eps).max(0.0)).collect());
        let system = assemble_kirchhoff_2d(mesh, &excess, eps, sources)?;
        let report = linsolve::solve_zero_mean_with(
            &system,
            cfg.rel_tol,
            cfg.max_iter,
            &SolveOptions::default(),
        )?;
        let p = report.solution;
        let h = mesh.h();
        let mut pumping = 0.0;
        let mut metabolic = 0.0;
        for e in 0..mesh.n_edges() {
            let w = mesh.edge_weight(e);
            let (a, b) = mesh.edge_nodes(e);
            let dp = (p[b] - p[a]) / h;
            pumping += w * c.values[e] * dp * dp;
            metabolic += w * params.nu / params.gamma * c.values[e].powf(params.gamma);
        }
        let energy = EnergyReport {
            pumping,
            metabolic,
            diffusive: 0.0,
            total: pumping + metabolic,
            variant: EnergyVariant::Discrete2dIntegral,
        };
        Ok((energy, p))
    };

    let (energy_here, p) = evaluate(&state.conductivities)?;
    let h = mesh.h();
    let mut dt = state.dt;
    loop {
        let cand = EdgeConductivities::from_values(
            (0..mesh.n_edges())
                .map(|e| {
                    let c = state.conductivities.values[e];
                    let (a, b) = mesh.edge_nodes(e);
                    let dp = (p[b] - p[a]) / h;
                    let q = c * dp;
                    let rate = q * q / (c * c) - params.nu * c.powf(params.gamma - 1.0);
                    (c + dt * rate).max(eps)
                })
                .collect(),
        );
        let (energy_cand, _) = evaluate(&cand)?;
        if energy_cand.total <= energy_here.total {
            return Ok(FlowState {
                t: state.t + dt,
                conductivities: cand,
                energy: energy_cand,
                dt: dt * DT_GROWTH,
            });
        }
        dt *= 0.5;
        if dt < DT_FLOOR {
            return Err(Error::StepCollapse {
                t: state.t,
                floor: DT_FLOOR,
            });
        }
    }
}

/// One point of a continuum (tensor-field) trajectory.
#[derive(Debug, Clone)]
pub struct TensorFlowState {
    pub t: f64,
    pub field: TensorField,
    pub energy: EnergyReport,
    pub dt: f64,
}

/// Construct the initial continuum flow state (t = 0; D^2 must be 0).
pub fn initial_tensor_state(
    mesh: &Mesh2D,
    field: TensorField,
    params: &Params,
    sources: &DiscreteSources,
    dt0: f64,
    cfg: &SolverConfig,
) -> Result<TensorFlowState> {
    if params.d2 != 0.0 {
        return Err(Error::InvalidParams(format!(
            "the continuum flow carries no diffusion; d2 must be 0, got {}",
            params.d2
        )));
    }
    let energy = energy::continuum_energy_2d(mesh, &field, params, sources, cfg)?;
    Ok(TensorFlowState {
        t: 0.0,
        field,
        energy,
        dt: dt0,
    })
}

/// One accepted explicit-Euler step of the per-triangle continuum flow
/// `dc1/dt = (dp/dx)^2 - nu (r+c1)^{gamma-1}` (c2 analogous), with the
/// pressure refreshed by a FEM solve and the same energy backtracking.
pub fn continuum_flow_step(
    state: &TensorFlowState,
    mesh: &Mesh2D,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<TensorFlowState> {
    if params.d2 != 0.0 {
        return Err(Error::InvalidParams(format!(
            "the continuum flow carries no diffusion; d2 must be 0, got {}",
            params.d2
        )));
    }
    let sol = fem::solve_poisson_fem(mesh, &state.field, params.r, sources, cfg)?;
    let rate =
        |grad: f64, c: f64| grad * grad - params.nu * (params.r + c).powf(params.gamma - 1.0);
    let mut dt = state.dt;
    loop {
        let mut cand = state.field.clone();
        for t in 0..mesh.n_triangles() {
            cand.c1[t] = (cand.c1[t] + dt * rate(sol.grad_x[t], cand.c1[t])).max(0.0);
            cand.c2[t] = (cand.c2[t] + dt * rate(sol.grad_y[t], cand.c2[t])).max(0.0);
        }
        let energy = energy::continuum_energy_2d(mesh, &cand, params, sources, cfg)?;
        if energy.total <= state.energy.total {
            return Ok(TensorFlowState {
                t: state.t + dt,
                field: cand,
                energy,
                dt: dt * DT_GROWTH,
            });
        }
        dt *= 0.5;
        if dt < DT_FLOOR {
            return Err(Error::StepCollapse {
                t: state.t,
                floor: DT_FLOOR,
            });
        }
    }
}
