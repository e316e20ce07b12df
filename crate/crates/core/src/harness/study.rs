//! Desk-scale numerical studies: refinement of the reformulated energies,
//! the weak-strong perturbation check, recovery-sequence convergence and the
//! minimizer-convergence runs.
//!
//! Every study is deterministic given the scenario (seeds are part of it) and
//! a fixed thread count; mesh levels run in parallel and results merge in
//! level order.

use crate::dynamics::{self, MinimizeResult};
use crate::energy::{self, EnergyReport, Params};
use crate::error::{Error, Result};
use crate::fem;
use crate::harness::scenario::Scenario;
use crate::kirchhoff::SolverConfig;
use crate::mesh::{q1_1d, q1_2d, q2_2d, EdgeConductivities, Interpolant2D, Mesh1D, Mesh2D};
use rayon::prelude::*;
use serde::Serialize;

/// Default perturbation amplitudes of the weak-strong check.
pub const DEFAULT_EPS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

/// Default common-grid resolution for minimizer comparisons.
pub const DEFAULT_RESAMPLE: usize = 256;

/// Per-level outcome of a refinement-type study.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub energy: EnergyReport,
    /// |total - reference|; absent on the reference level.
    pub error: Option<f64>,
    /// Observed order between this level and the previous one.
    pub order: Option<f64>,
}

/// Refinement-study outcome: per-level energies, errors against the finest
/// level and observed orders.
#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub records: Vec<LevelRecord>,
    pub reference: f64,
    pub reference_kind: String,
    pub passed: bool,
    pub failures: Vec<String>,
}

fn require_levels(scenario: &Scenario, min: usize) -> Result<()> {
    if scenario.levels.len() < min {
        return Err(Error::BadScenario(format!(
            "study needs at least {min} mesh levels, got {}",
            scenario.levels.len()
        )));
    }
    Ok(())
}

/// Evaluate the reformulated energy of the scenario's fixed field per level
/// and check monotone error decay (order >= 1) against the finest level.
pub fn refinement_study(scenario: &Scenario) -> Result<StudyResult> {
    require_levels(scenario, 3)?;
    let params = scenario.params()?;
    let cfg = scenario.solver_config();
    let totals: Vec<Result<(usize, EnergyReport)>> = scenario
        .levels
        .par_iter()
        .map(|&n| {
            let report = evaluate_reformulated_energy(scenario, &params, &cfg, n)?;
            Ok((n, report))
        })
        .collect();
    let mut evaluated = Vec::with_capacity(totals.len());
    for item in totals {
        evaluated.push(item?);
    }

    let reference = evaluated.last().unwrap().1.total;
    let mut records = Vec::with_capacity(evaluated.len());
    let mut errors: Vec<f64> = Vec::new();
    for (level, (n, energy)) in evaluated.iter().enumerate() {
        let is_reference = level + 1 == evaluated.len();
        let error = (!is_reference).then(|| (energy.total - reference).abs());
        if let Some(e) = error {
            errors.push(e);
        }
        records.push(LevelRecord {
            level,
            n: *n,
            h: 1.0 / *n as f64,
            energy: *energy,
            error,
            order: None,
        });
    }
    // observed orders between consecutive error-bearing levels
    for i in 1..errors.len() {
        let h_prev = records[i - 1].h;
        let h_here = records[i].h;
        if errors[i - 1] > 0.0 && errors[i] > 0.0 {
            records[i].order = Some((errors[i - 1] / errors[i]).ln() / (h_prev / h_here).ln());
        }
    }

    let scale = reference.abs().max(1.0);
    let degenerate = errors.iter().all(|&e| e <= 1e-13 * scale);
    let mut failures = Vec::new();
    if !degenerate {
        for w in errors.windows(2) {
            if w[1] >= w[0] {
                failures.push(format!("error did not decay: {} -> {}", w[0], w[1]));
            }
        }
        for rec in &records {
            if let Some(order) = rec.order {
                if order < 1.0 {
                    failures.push(format!("observed order {order:.3} < 1 at N = {}", rec.n));
                }
            }
        }
    }
    Ok(StudyResult {
        records,
        reference,
        reference_kind: "finest".into(),
        passed: failures.is_empty(),
        failures,
    })
}

fn evaluate_reformulated_energy(
    scenario: &Scenario,
    params: &Params,
    cfg: &SolverConfig,
    n: usize,
) -> Result<EnergyReport> {
    if scenario.dimension == 1 {
        let mesh = Mesh1D::new(n)?;
        let field = scenario.target_cell_field(&mesh)?;
        let sources = scenario.project_source_1d(&mesh)?;
        energy::continuum_energy_1d(&mesh, &field, params, &sources, cfg)
    } else {
        let mesh = Mesh2D::new(n)?;
        let field = scenario.target_tensor_field(&mesh)?;
        let sources = scenario.project_source_2d(&mesh)?;
        energy::continuum_energy_2d(&mesh, &field, params, &sources, cfg)
    }
}

/// One amplitude of the weak-strong check.
#[derive(Debug, Clone, Serialize)]
pub struct WeakStrongRow {
    pub eps: f64,
    pub perturbed_energy: f64,
    pub base_energy: f64,
    pub energy_diff: f64,
    pub grad_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakStrongTable {
    pub n: usize,
    pub rows: Vec<WeakStrongRow>,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Perturb the fixed conductivity field by a clamped bounded oscillation and
/// report the weighted-Dirichlet-energy difference and the L2 distance of the
/// pressure gradients per amplitude; both must decay with the amplitude.
pub fn weak_strong_check(scenario: &Scenario) -> Result<WeakStrongTable> {
    let params = scenario.params()?;
    let cfg = scenario.solver_config();
    let mut eps = scenario.eps.clone().unwrap_or_else(|| DEFAULT_EPS.to_vec());
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let n = *scenario.levels.last().unwrap();

    let rows = if scenario.dimension == 1 {
        weak_strong_rows_1d(scenario, &params, &cfg, n, &eps)?
    } else {
        weak_strong_rows_2d(scenario, &params, &cfg, n, &eps)?
    };

    let mut failures = Vec::new();
    for w in rows.windows(2) {
        if w[0].eps > w[1].eps {
            if w[1].energy_diff >= w[0].energy_diff {
                failures.push(format!(
                    "energy difference did not decrease: eps {} -> {}",
                    w[0].eps, w[1].eps
                ));
            }
            if w[1].grad_distance >= w[0].grad_distance {
                failures.push(format!(
                    "gradient distance did not decrease: eps {} -> {}",
                    w[0].eps, w[1].eps
                ));
            }
        }
    }
    Ok(WeakStrongTable {
        n,
        rows,
        passed: failures.is_empty(),
        failures,
    })
}

/// Deterministic bounded oscillation used for the perturbations. A positive
/// mean keeps the leading-order energy response proportional to the
/// amplitude.
fn oscillation_2d(x: f64, y: f64, component: usize) -> f64 {
    use std::f64::consts::PI;
    match component {
        0 => 0.6 + 0.4 * (5.0 * PI * x).sin() * (3.0 * PI * y).sin(),
        _ => 0.6 + 0.4 * (3.0 * PI * x).cos() * (5.0 * PI * y).sin(),
    }
}

fn weak_strong_rows_2d(
    scenario: &Scenario,
    params: &Params,
    cfg: &SolverConfig,
    n: usize,
    eps: &[f64],
) -> Result<Vec<WeakStrongRow>> {
    let mesh = Mesh2D::new(n)?;
    let base = scenario.target_tensor_field(&mesh)?;
    let sources = scenario.project_source_2d(&mesh)?;
    let base_sol = fem::solve_poisson_fem(&mesh, &base, params.r, &sources, cfg)?;
    let base_energy = base_sol.weighted_dirichlet_energy(&mesh, &base, params.r);
    let area = mesh.triangle_area();

    let centroids: Vec<(f64, f64)> = (0..mesh.n_triangles())
        .map(|t| {
            let c = mesh.triangle_coords(t);
            (
                (c[0].0 + c[1].0 + c[2].0) / 3.0,
                (c[0].1 + c[1].1 + c[2].1) / 3.0,
            )
        })
        .collect();

    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let mut perturbed = base.clone();
        for t in 0..mesh.n_triangles() {
            let (cx, cy) = centroids[t];
            perturbed.c1[t] = (perturbed.c1[t] + e * oscillation_2d(cx, cy, 0)).max(0.0);
            perturbed.c2[t] = (perturbed.c2[t] + e * oscillation_2d(cx, cy, 1)).max(0.0);
        }
        let sol = fem::solve_poisson_fem(&mesh, &perturbed, params.r, &sources, cfg)?;
        let energy = sol.weighted_dirichlet_energy(&mesh, &perturbed, params.r);
        let grad_distance = (0..mesh.n_triangles())
            .map(|t| {
                let dx = sol.grad_x[t] - base_sol.grad_x[t];
                let dy = sol.grad_y[t] - base_sol.grad_y[t];
                area * (dx * dx + dy * dy)
            })
            .sum::<f64>()
            .sqrt();
        rows.push(WeakStrongRow {
            eps: e,
            perturbed_energy: energy,
            base_energy,
            energy_diff: (energy - base_energy).abs(),
            grad_distance,
        });
    }
    Ok(rows)
}

fn weak_strong_rows_1d(
    scenario: &Scenario,
    params: &Params,
    cfg: &SolverConfig,
    n: usize,
    eps: &[f64],
) -> Result<Vec<WeakStrongRow>> {
    use std::f64::consts::PI;
    let mesh = Mesh1D::new(n)?;
    let base = scenario.target_cell_field(&mesh)?;
    let sources = scenario.project_source_1d(&mesh)?;
    let h = mesh.h();

    let solve_grad = |field: &crate::mesh::CellField| -> Result<(Vec<f64>, f64)> {
        let c = EdgeConductivities {
            values: field.values.clone(),
        };
        let (p, _) = crate::kirchhoff::solve_pressures_1d_with(&mesh, &c, params.r, &sources, cfg)?;
        let grads: Vec<f64> = (0..mesh.n_edges())
            .map(|i| (p.values[i + 1] - p.values[i]) / h)
            .collect();
        let energy = grads
            .iter()
            .enumerate()
            .map(|(i, g)| h * (params.r + field.values[i]) * g * g)
            .sum();
        Ok((grads, energy))
    };

    let (base_grads, base_energy) = solve_grad(&base)?;
    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let perturbed = crate::mesh::CellField {
            values: base
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let osc = 0.6 + 0.4 * (5.0 * PI * mesh.cell_midpoint(i)).sin();
                    (v + e * osc).max(0.0)
                })
                .collect(),
        };
        let (grads, energy) = solve_grad(&perturbed)?;
        let grad_distance = grads
            .iter()
            .zip(&base_grads)
            .map(|(a, b)| h * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        rows.push(WeakStrongRow {
            eps: e,
            perturbed_energy: energy,
            base_energy,
            energy_diff: (energy - base_energy).abs(),
            grad_distance,
        });
    }
    Ok(rows)
}

/// One level of the recovery-sequence check.
#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub value: f64,
    pub diff: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaTable {
    pub rows: Vec<GammaRow>,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Evaluate the reformulated energy of the constant recovery sequence
/// (the fixed field itself) per level and require the successive differences
/// to shrink by at least 1.5x. Requires gamma > 1 and dimension 2.
pub fn gamma_recovery_check(scenario: &Scenario) -> Result<GammaTable> {
    if scenario.gamma <= 1.0 {
        return Err(Error::HypothesisViolation(format!(
            "the 2D convergence theorem requires gamma > 1; scenario has gamma = {}",
            scenario.gamma
        )));
    }
    if scenario.dimension != 2 {
        return Err(Error::BadScenario(
            "the recovery-sequence check is a 2D study".into(),
        ));
    }
    require_levels(scenario, 3)?;
    let params = scenario.params()?;
    let cfg = scenario.solver_config();
    let values: Vec<Result<(usize, f64)>> = scenario
        .levels
        .par_iter()
        .map(|&n| {
            let report = evaluate_reformulated_energy(scenario, &params, &cfg, n)?;
            Ok((n, report.total))
        })
        .collect();
    let mut evaluated = Vec::new();
    for item in values {
        evaluated.push(item?);
    }

    let scale = evaluated
        .iter()
        .map(|(_, v)| v.abs())
        .fold(1.0f64, f64::max);
    let mut rows: Vec<GammaRow> = Vec::with_capacity(evaluated.len());
    for (level, (n, value)) in evaluated.iter().enumerate() {
        let diff = (level > 0).then(|| (value - rows[level - 1].value).abs());
        rows.push(GammaRow {
            level,
            n: *n,
            h: 1.0 / *n as f64,
            value: *value,
            diff,
            ratio: None,
        });
    }
    for i in 2..rows.len() {
        if let (Some(prev), Some(here)) = (rows[i - 1].diff, rows[i].diff) {
            if here > 1e-13 * scale {
                rows[i].ratio = Some(prev / here);
            }
        }
    }

    let mut failures = Vec::new();
    for row in &rows {
        if let Some(ratio) = row.ratio {
            if ratio < 1.5 {
                failures.push(format!(
                    "successive differences shrank only by {ratio:.3} at N = {}",
                    row.n
                ));
            }
        }
    }
    Ok(GammaTable {
        rows,
        passed: failures.is_empty(),
        failures,
    })
}

/// One level of the minimizer-convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct MinimizerLevel {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub energy: EnergyReport,
    /// E^h_diff[0], the zero-conductivity upper bound.
    pub zero_candidate_total: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerStudy {
    pub levels: Vec<MinimizerLevel>,
    /// L2 distances of the reconstructed fields between consecutive levels,
    /// on the common resampling lattice.
    pub field_distances: Vec<f64>,
    /// |E_{l+1} - E_l| between consecutive levels.
    pub energy_diffs: Vec<f64>,
    pub resample: usize,
    pub passed: bool,
    pub failures: Vec<String>,
}

struct MinimizedLevel {
    n: usize,
    result: MinimizeResult,
    zero_total: f64,
    resampled: Vec<f64>,
}

/// Minimize E^h_diff per level and compare the reconstructed minimizers
/// across levels on a common lattice. Requires D^2 > 0 (and gamma > 1 in 2D).
pub fn minimizer_convergence_study(scenario: &Scenario) -> Result<MinimizerStudy> {
    if scenario.d2 <= 0.0 {
        return Err(Error::HypothesisViolation(format!(
            "minimizer convergence needs the diffusive term: d2 > 0, got {}",
            scenario.d2
        )));
    }
    if scenario.dimension == 2 && scenario.gamma <= 1.0 {
        return Err(Error::HypothesisViolation(format!(
            "the 2D minimizer-convergence theorem requires gamma > 1; got {}",
            scenario.gamma
        )));
    }
    require_levels(scenario, 2)?;
    let params = scenario.params()?;
    // the descent loop resolves energy differences down to the solver noise,
    // so minimization wants much tighter solves than plain evaluations
    let cfg = match scenario.rel_tol {
        Some(tol) => SolverConfig::with_tol(tol),
        None => SolverConfig::with_tol(1e-13),
    };
    let tol = scenario.tol.unwrap_or(1e-6);
    let max_iter = scenario.max_iter.unwrap_or(200_000);
    let resample = scenario.resample.unwrap_or(DEFAULT_RESAMPLE);

    let outcomes: Vec<Result<MinimizedLevel>> = scenario
        .levels
        .par_iter()
        .map(|&n| minimize_level(scenario, &params, &cfg, n, tol, max_iter, resample))
        .collect();
    let mut levels_out = Vec::new();
    for item in outcomes {
        levels_out.push(item?);
    }

    let mut records = Vec::with_capacity(levels_out.len());
    let mut failures = Vec::new();
    for (level, item) in levels_out.iter().enumerate() {
        if !item.result.converged {
            failures.push(format!(
                "optimizer did not converge at N = {} (grad norm {:.3e} after {} iterations)",
                item.n, item.result.grad_norm, item.result.iterations
            ));
        }
        if item.result.energy.total > item.zero_total * (1.0 + 1e-12) {
            failures.push(format!(
                "minimizer energy exceeds the zero-candidate bound at N = {}",
                item.n
            ));
        }
        records.push(MinimizerLevel {
            level,
            n: item.n,
            h: 1.0 / item.n as f64,
            energy: item.result.energy,
            zero_candidate_total: item.zero_total,
            iterations: item.result.iterations,
            grad_norm: item.result.grad_norm,
            converged: item.result.converged,
        });
    }

    let field_distances: Vec<f64> = levels_out
        .windows(2)
        .map(|w| l2_lattice_distance(&w[0].resampled, &w[1].resampled))
        .collect();
    for w in field_distances.windows(2) {
        if w[1] >= w[0] {
            failures.push(format!(
                "resampled-field distances did not decrease: {} -> {}",
                w[0], w[1]
            ));
        }
    }
    let energy_diffs: Vec<f64> = records
        .windows(2)
        .map(|w| (w[1].energy.total - w[0].energy.total).abs())
        .collect();
    for w in energy_diffs.windows(2) {
        if w[1] > w[0] {
            failures.push(format!(
                "energy oscillation grew between levels: {} -> {}",
                w[0], w[1]
            ));
        }
    }

    Ok(MinimizerStudy {
        levels: records,
        field_distances,
        energy_diffs,
        resample,
        passed: failures.is_empty(),
        failures,
    })
}

fn minimize_level(
    scenario: &Scenario,
    params: &Params,
    cfg: &SolverConfig,
    n: usize,
    tol: f64,
    max_iter: usize,
    resample: usize,
) -> Result<MinimizedLevel> {
    if scenario.dimension == 1 {
        let mesh = Mesh1D::new(n)?;
        let sources = scenario.project_source_1d(&mesh)?;
        let c0 = scenario.init_conductivities_1d(&mesh)?;
        let result = dynamics::minimize_1d(&mesh, c0, params, &sources, tol, max_iter, cfg)?;
        let zero = EdgeConductivities::zeros(mesh.n_edges());
        let zero_total =
            energy::total_energy_with_diffusion_1d(&mesh, &zero, params, &sources, cfg)?.total;
        let interp = q1_1d(&mesh, &result.conductivities)?;
        let resampled: Vec<f64> = (0..resample)
            .map(|k| interp.eval((k as f64 + 0.5) / resample as f64))
            .collect();
        Ok(MinimizedLevel {
            n,
            result,
            zero_total,
            resampled,
        })
    } else {
        let mesh = Mesh2D::new(n)?;
        let sources = scenario.project_source_2d(&mesh)?;
        let c0 = scenario.init_conductivities_2d(&mesh)?;
        let result = dynamics::minimize_2d(&mesh, c0, params, &sources, tol, max_iter, cfg)?;
        let zero = EdgeConductivities::zeros(mesh.n_edges());
        let zero_total =
            energy::total_energy_with_diffusion_2d(&mesh, &zero, params, &sources, cfg)?.total;
        let q1 = q1_2d(&mesh, &result.conductivities)?;
        let q2 = q2_2d(&mesh, &result.conductivities)?;
        let mut resampled = resample_lattice(&q1, resample);
        resampled.extend(resample_lattice(&q2, resample));
        Ok(MinimizedLevel {
            n,
            result,
            zero_total,
            resampled,
        })
    }
}

/// Evaluate an interpolant at the cell centers of an m x m lattice.
pub fn resample_lattice(interp: &Interpolant2D, m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m * m);
    for j in 0..m {
        let y = (j as f64 + 0.5) / m as f64;
        for i in 0..m {
            let x = (i as f64 + 0.5) / m as f64;
            out.push(interp.eval(x, y));
        }
    }
    out
}

/// Root-mean-square distance of two equally sized lattice samplings.
pub fn l2_lattice_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}
