//! netform-lab: command-line front end for the network-formation lab.
//!
//! Subcommands: solve, minimize, flow, refine, weakstrong, gamma, check.
//! Exit status: 0 on success, 1 on a failed study or check, 2 on bad
//! configuration.

use clap::{Parser, Subcommand};
use netform_core::dynamics::{self, Descent};
use netform_core::energy::{self};
use netform_core::error::Error;
use netform_core::harness::output::{self, StudyCsvRow, TrajectoryCsvRow};
use netform_core::harness::{self, scenario::Scenario};
use netform_core::kirchhoff;
use netform_core::mesh::{q0_2d, EdgeConductivities, Mesh1D, Mesh2D};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "netform-lab",
    about = "Numerical lab for discrete transport-network formation on equidistant meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Kirchhoff/Poisson problem at the finest scenario level.
    Solve(RunArgs),
    /// Minimize the (diffusion-augmented) energy at the finest level.
    Minimize(RunArgs),
    /// Integrate the conductivity gradient flow at the finest level.
    Flow(RunArgs),
    /// Refinement study of the reformulated energy across levels.
    Refine(RunArgs),
    /// Weak-strong perturbation check at the finest level.
    Weakstrong(RunArgs),
    /// Recovery-sequence convergence check across levels (gamma > 1).
    Gamma(RunArgs),
    /// Run the built-in verification suite.
    Check {
        /// Also write checks.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    harness::init_thread_pool();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => with_scenario(args, cmd_solve),
        Command::Minimize(args) => with_scenario(args, cmd_minimize),
        Command::Flow(args) => with_scenario(args, cmd_flow),
        Command::Refine(args) => with_scenario(args, cmd_refine),
        Command::Weakstrong(args) => with_scenario(args, cmd_weakstrong),
        Command::Gamma(args) => with_scenario(args, cmd_gamma),
        Command::Check { out } => cmd_check(out.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::BadScenario(_)
        | Error::HypothesisViolation(_)
        | Error::InvalidParams(_)
        | Error::InvalidMeshSize(_)
        | Error::NonPositiveR(_) => 2,
        _ => 1,
    }
}

fn with_scenario(
    args: &RunArgs,
    run: impl Fn(&Scenario, &Path) -> Result<bool, Error>,
) -> Result<bool, Error> {
    let scenario = Scenario::load(&args.scenario)?;
    std::fs::create_dir_all(&args.out)?;
    run(&scenario, &args.out)
}

fn plots_enabled(scenario: &Scenario) -> bool {
    scenario.plots.unwrap_or(true)
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    scenario: &'a Scenario,
    n: usize,
    energy: energy::FlatEnergyRecord,
    solver_iterations: usize,
    solver_rel_residual: f64,
}

fn cmd_solve(scenario: &Scenario, out: &Path) -> Result<bool, Error> {
    let params = scenario.params()?;
    let cfg = scenario.solver_config();
    let n = *scenario.levels.last().unwrap();
    if scenario.dimension == 1 {
        let mesh = Mesh1D::new(n)?;
        let sources = scenario.project_source_1d(&mesh)?;
        let c = scenario.init_conductivities_1d(&mesh)?;
        let (p, report) = kirchhoff::solve_pressures_1d_with(&mesh, &c, params.r, &sources, &cfg)?;
        let energy = energy::total_energy_with_diffusion_1d(&mesh, &c, &params, &sources, &cfg)?;
        output::write_summary_json(
            &out.join("summary.json"),
            &SolveSummary {
                scenario,
                n,
                energy: energy.flat_record(n, &params),
                solver_iterations: report.iterations,
                solver_rel_residual: report.rel_residual,
            },
        )?;
        write_pressures_csv_1d(&out.join("pressure.csv"), &mesh, &p.values)?;
    } else {
        let mesh = Mesh2D::new(n)?;
        let sources = scenario.project_source_2d(&mesh)?;
        let c = scenario.init_conductivities_2d(&mesh)?;
        let (p, report) = kirchhoff::solve_pressures_2d_with(&mesh, &c, params.r, &sources, &cfg)?;
        let energy = energy::total_energy_with_diffusion_2d(&mesh, &c, &params, &sources, &cfg)?;
        output::write_summary_json(
            &out.join("summary.json"),
            &SolveSummary {
                scenario,
                n,
                energy: energy.flat_record(n, &params),
                solver_iterations: report.iterations,
                solver_rel_residual: report.rel_residual,
            },
        )?;
        write_conductivities_csv(&out.join("conductivities.csv"), &mesh, &c)?;
        if plots_enabled(scenario) {
            write_field_svgs(out, &mesh, &c, Some(&p.values))?;
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct MinimizeSummary<'a> {
    scenario: &'a Scenario,
    n: usize,
    energy: energy::FlatEnergyRecord,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

fn cmd_minimize(scenario: &Scenario, out: &Path) -> Result<bool, Error> {
    let params = scenario.params()?;
    let cfg = match scenario.rel_tol {
        Some(tol) => kirchhoff::SolverConfig::with_tol(tol),
        None => kirchhoff::SolverConfig::with_tol(1e-13),
    };
    let n = *scenario.levels.last().unwrap();
    let tol = scenario.tol.unwrap_or(1e-6);
    let max_iter = scenario.max_iter.unwrap_or(200_000);
    if scenario.dimension == 1 {
        let mesh = Mesh1D::new(n)?;
        let sources = scenario.project_source_1d(&mesh)?;
        let c0 = scenario.init_conductivities_1d(&mesh)?;
        let res = dynamics::minimize_1d(&mesh, c0, &params, &sources, tol, max_iter, &cfg)?;
        output::write_summary_json(
            &out.join("summary.json"),
            &MinimizeSummary {
                scenario,
                n,
                energy: res.energy.flat_record(n, &params),
                iterations: res.iterations,
                grad_norm: res.grad_norm,
                converged: res.converged,
            },
        )?;
        write_conductivities_csv_1d(&out.join("conductivities.csv"), &mesh, &res.conductivities)?;
        Ok(res.converged)
    } else {
        let mesh = Mesh2D::new(n)?;
        let sources = scenario.project_source_2d(&mesh)?;
        let c0 = scenario.init_conductivities_2d(&mesh)?;
        let res = dynamics::minimize_2d(&mesh, c0, &params, &sources, tol, max_iter, &cfg)?;
        output::write_summary_json(
            &out.join("summary.json"),
            &MinimizeSummary {
                scenario,
                n,
                energy: res.energy.flat_record(n, &params),
                iterations: res.iterations,
                grad_norm: res.grad_norm,
                converged: res.converged,
            },
        )?;
        write_conductivities_csv(&out.join("conductivities.csv"), &mesh, &res.conductivities)?;
        if plots_enabled(scenario) {
            let (p, _) = kirchhoff::solve_pressures_2d_with(
                &mesh,
                &res.conductivities,
                params.r,
                &sources,
                &cfg,
            )?;
            write_field_svgs(out, &mesh, &res.conductivities, Some(&p.values))?;
        }
        Ok(res.converged)
    }
}

#[derive(Serialize)]
struct FlowSummary<'a> {
    scenario: &'a Scenario,
    n: usize,
    t_final: f64,
    steps: usize,
    energy: energy::FlatEnergyRecord,
}

fn cmd_flow(scenario: &Scenario, out: &Path) -> Result<bool, Error> {
    let params = scenario.params()?;
    let cfg = match scenario.rel_tol {
        Some(tol) => kirchhoff::SolverConfig::with_tol(tol),
        None => kirchhoff::SolverConfig::with_tol(1e-12),
    };
    let n = *scenario.levels.last().unwrap();
    let t_end = scenario.t_end.unwrap_or(5.0);
    let dt0 = scenario.dt0.unwrap_or(0.01);
    let mut rows: Vec<TrajectoryCsvRow> = Vec::new();
    let mut record = |state: &dynamics::FlowState| {
        let min_c = state
            .conductivities
            .values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let max_c = state
            .conductivities
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(TrajectoryCsvRow {
            t: state.t,
            pumping: state.energy.pumping,
            metabolic: state.energy.metabolic,
            diffusive: state.energy.diffusive,
            total: state.energy.total,
            min_c,
            max_c,
        });
    };
    let (final_state, mesh2d) = if scenario.dimension == 1 {
        let mesh = Mesh1D::new(n)?;
        let sources = scenario.project_source_1d(&mesh)?;
        let c0 = scenario.init_conductivities_1d(&mesh)?;
        let mut descent = Descent::new_1d(&mesh, &params, &sources, &cfg);
        let state = dynamics::run_flow(&mut descent, c0, dt0, t_end, &mut record)?;
        (state, None)
    } else {
        let mesh = Mesh2D::new(n)?;
        let sources = scenario.project_source_2d(&mesh)?;
        let c0 = scenario.init_conductivities_2d(&mesh)?;
        let mut descent = Descent::new_2d(&mesh, &params, &sources, &cfg);
        let state = dynamics::run_flow(&mut descent, c0, dt0, t_end, &mut record)?;
        (state, Some(mesh))
    };
    output::write_csv(&out.join("trajectory.csv"), &rows)?;
    output::write_summary_json(
        &out.join("summary.json"),
        &FlowSummary {
            scenario,
            n,
            t_final: final_state.t,
            steps: rows.len().saturating_sub(1),
            energy: final_state.energy.flat_record(n, &params),
        },
    )?;
    if let Some(mesh) = mesh2d {
        write_conductivities_csv(
            &out.join("conductivities.csv"),
            &mesh,
            &final_state.conductivities,
        )?;
        if plots_enabled(scenario) {
            write_field_svgs(out, &mesh, &final_state.conductivities, None)?;
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct RefineSummary<'a> {
    scenario: &'a Scenario,
    result: &'a harness::StudyResult,
}

fn cmd_refine(scenario: &Scenario, out: &Path) -> Result<bool, Error> {
    let result = harness::refinement_study(scenario)?;
    output::write_csv(&out.join("study.csv"), &StudyCsvRow::from_study(&result))?;
    output::write_summary_json(
        &out.join("summary.json"),
        &RefineSummary {
            scenario,
            result: &result,
        },
    )?;
    report_failures("refine", &result.failures);
    Ok(result.passed)
}

#[derive(Serialize)]
struct WeakStrongSummary<'a> {
    scenario: &'a Scenario,
    result: &'a harness::WeakStrongTable,
}

fn cmd_weakstrong(scenario: &Scenario, out: &Path) -> Result<bool, Error> {
    let result = harness::weak_strong_check(scenario)?;
    output::write_csv(&out.join("weakstrong.csv"), &result.rows)?;
    output::write_summary_json(
        &out.join("summary.json"),
        &WeakStrongSummary {
            scenario,
            result: &result,
        },
    )?;
    report_failures("weakstrong", &result.failures);
    Ok(result.passed)
}

#[derive(Serialize)]
struct GammaSummary<'a> {
    scenario: &'a Scenario,
    result: &'a harness::GammaTable,
}

fn cmd_gamma(scenario: &Scenario, out: &Path) -> Result<bool, Error> {
    let result = harness::gamma_recovery_check(scenario)?;
    output::write_csv(&out.join("gamma.csv"), &result.rows)?;
    output::write_summary_json(
        &out.join("summary.json"),
        &GammaSummary {
            scenario,
            result: &result,
        },
    )?;
    report_failures("gamma", &result.failures);
    Ok(result.passed)
}

fn cmd_check(out: Option<&Path>) -> Result<bool, Error> {
    let results = harness::run_all_checks();
    let mut all_passed = true;
    for check in &results {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<28} {}", check.name, check.detail);
        all_passed &= check.passed;
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        output::write_summary_json(&dir.join("checks.json"), &results)?;
    }
    Ok(all_passed)
}

fn report_failures(what: &str, failures: &[String]) {
    for failure in failures {
        eprintln!("{what}: {failure}");
    }
}

#[derive(Serialize)]
struct EdgeCsvRow {
    edge: usize,
    kind: &'static str,
    i: usize,
    j: usize,
    value: f64,
}

fn write_conductivities_csv(
    path: &Path,
    mesh: &Mesh2D,
    c: &EdgeConductivities,
) -> Result<(), Error> {
    let rows: Vec<EdgeCsvRow> = (0..mesh.n_edges())
        .map(|e| {
            let (kind, i, j) = mesh.edge_decode(e);
            EdgeCsvRow {
                edge: e,
                kind: match kind {
                    netform_core::mesh::EdgeKind::Horizontal => "horizontal",
                    netform_core::mesh::EdgeKind::Vertical => "vertical",
                },
                i,
                j,
                value: c.values[e],
            }
        })
        .collect();
    output::write_csv(path, &rows)
}

fn write_conductivities_csv_1d(
    path: &Path,
    mesh: &Mesh1D,
    c: &EdgeConductivities,
) -> Result<(), Error> {
    #[derive(Serialize)]
    struct Row {
        edge: usize,
        x_mid: f64,
        value: f64,
    }
    let rows: Vec<Row> = (0..mesh.n_edges())
        .map(|e| Row {
            edge: e,
            x_mid: mesh.cell_midpoint(e),
            value: c.values[e],
        })
        .collect();
    output::write_csv(path, &rows)
}

fn write_pressures_csv_1d(path: &Path, mesh: &Mesh1D, p: &[f64]) -> Result<(), Error> {
    #[derive(Serialize)]
    struct Row {
        node: usize,
        x: f64,
        pressure: f64,
    }
    let rows: Vec<Row> = (0..mesh.n_nodes())
        .map(|i| Row {
            node: i,
            x: mesh.node_x(i),
            pressure: p[i],
        })
        .collect();
    output::write_csv(path, &rows)
}

fn write_field_svgs(
    out: &Path,
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    pressure: Option<&[f64]>,
) -> Result<(), Error> {
    let field = q0_2d(mesh, c)?;
    output::write_svg(
        &out.join("field_c1.svg"),
        &output::triangle_heatmap_svg(mesh, &field.c1, "c1 (horizontal-edge conductivity)"),
    )?;
    output::write_svg(
        &out.join("field_c2.svg"),
        &output::triangle_heatmap_svg(mesh, &field.c2, "c2 (vertical-edge conductivity)"),
    )?;
    if let Some(p) = pressure {
        output::write_svg(
            &out.join("pressure.svg"),
            &output::node_heatmap_svg(mesh, p, "pressure"),
        )?;
    }
    Ok(())
}
