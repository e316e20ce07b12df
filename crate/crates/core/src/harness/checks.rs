//! The built-in verification suite behind `netform-lab check`: fast runtime
//! re-checks of the module invariants, one pass/fail line each.

use crate::dynamics;
use crate::energy::{self, BoundaryMode, Params};
use crate::fem;
use crate::kirchhoff::{self, DiscreteSources, SolverConfig, SourceDim};
use crate::mesh::{self, EdgeConductivities, Mesh1D, Mesh2D};
use crate::quadrature::TriQuad;
use crate::rng;
use crate::source::SourceSpec;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn dipole() -> SourceSpec {
    SourceSpec::Dipole {
        xp: 0.25,
        yp: 0.25,
        xm: 0.75,
        ym: 0.75,
        sigma: 0.12,
        amplitude: 8.0,
    }
}

/// Run the whole suite. Returns one result per check.
pub fn run_all_checks() -> Vec<CheckResult> {
    vec![
        mesh_counting(),
        basis_gradients(),
        partition_of_unity(),
        source_conservation(),
        kirchhoff_equivalence(),
        flux_oracle_1d(),
        reformulation_identities(),
        diffusive_identity(),
        gradient_vs_finite_differences(),
        closed_form_oracle(),
        permeability_cross_check(),
        solver_contract(),
    ]
}

fn mesh_counting() -> CheckResult {
    for n in 1..=64usize {
        let m = match Mesh2D::new(n) {
            Ok(m) => m,
            Err(e) => return check("mesh-counting", false, format!("N={n}: {e}")),
        };
        let ok = m.n_nodes() == (n + 1) * (n + 1)
            && m.n_horizontal_edges() == n * (n + 1)
            && m.n_vertical_edges() == n * (n + 1)
            && m.n_triangles() == 2 * n * n
            && (m.n_triangles() as f64 * m.triangle_area() - 1.0).abs() < 1e-12;
        if !ok {
            return check("mesh-counting", false, format!("identities fail at N={n}"));
        }
        for v in 0..m.n_nodes() {
            let adj = m.node_triangles(v).len();
            let (i, j) = m.node_ij(v);
            let expected = match ((i == 0 || i == n), (j == 0 || j == n)) {
                (false, false) => 6,
                (true, true) => {
                    if (i == 0) == (j == 0) {
                        1
                    } else {
                        2
                    }
                }
                _ => 3,
            };
            if adj != expected {
                return check(
                    "mesh-counting",
                    false,
                    format!("node ({i},{j}) of N={n} has {adj} adjacent triangles"),
                );
            }
        }
    }
    check("mesh-counting", true, "N = 1..=64 enumerated".into())
}

fn basis_gradients() -> CheckResult {
    let m = Mesh2D::new(4).unwrap();
    let node = m.node_index(2, 2);
    let h = m.h();
    let mut worst: f64 = 0.0;
    for (_, t) in m.node_triangles(node) {
        let coords = m.triangle_coords(t);
        let grads = fem::hat_gradients(coords);
        let centroid = (
            (coords[0].0 + coords[1].0 + coords[2].0) / 3.0,
            (coords[0].1 + coords[1].1 + coords[2].1) / 3.0,
        );
        let delta = 1e-6 * h;
        for k in 0..3 {
            let f = |x: f64, y: f64| fem::hat_values(coords, x, y)[k];
            let fd = [
                (f(centroid.0 + delta, centroid.1) - f(centroid.0 - delta, centroid.1))
                    / (2.0 * delta),
                (f(centroid.0, centroid.1 + delta) - f(centroid.0, centroid.1 - delta))
                    / (2.0 * delta),
            ];
            for d in 0..2 {
                worst = worst.max((fd[d] - grads[k][d]).abs() * h);
            }
        }
    }
    check(
        "basis-gradients",
        worst <= 1e-8,
        format!("max |fd - analytic| * h = {worst:.3e} (tol 1e-8)"),
    )
}

fn partition_of_unity() -> CheckResult {
    let m = Mesh2D::new(3).unwrap();
    let quad = TriQuad::new(1);
    let mut worst: f64 = 0.0;
    for t in 0..m.n_triangles() {
        let coords = m.triangle_coords(t);
        quad.for_each_point(coords[0], coords[1], coords[2], &mut |x, y, _| {
            let l = fem::hat_values(coords, x, y);
            worst = worst.max((l[0] + l[1] + l[2] - 1.0).abs());
        });
    }
    check(
        "partition-of-unity",
        worst <= 1e-14,
        format!("max |sum hats - 1| = {worst:.3e} at quadrature points (tol 1e-14)"),
    )
}

fn source_conservation() -> CheckResult {
    let mut worst: f64 = 0.0;
    let mesh1 = Mesh1D::new(16).unwrap();
    for spec in [SourceSpec::Zero, SourceSpec::Sine1d { k: 2 }, dipole()] {
        let s = fem::project_source_1d(&mesh1, |x| spec.eval_1d(x));
        worst = worst.max(s.weighted_sum(mesh1.h()).abs());
    }
    let mesh2 = Mesh2D::new(8).unwrap();
    for spec in [
        SourceSpec::Zero,
        SourceSpec::Sine2d { kx: 1, ky: 2 },
        dipole(),
    ] {
        let s = fem::project_source_2d(&mesh2, |x, y| spec.eval_2d(x, y), &TriQuad::default());
        worst = worst.max(s.weighted_sum(mesh2.h()).abs());
    }
    check(
        "source-conservation",
        worst <= 1e-10,
        format!("max |weighted sum| = {worst:.3e} over built-in families (tol 1e-10)"),
    )
}

fn kirchhoff_equivalence() -> CheckResult {
    let cfg = SolverConfig::with_tol(1e-12);
    let mut worst: f64 = 0.0;
    for n in [4usize, 8] {
        let mesh = Mesh2D::new(n).unwrap();
        let spec = dipole();
        let s = fem::project_source_2d(&mesh, |x, y| spec.eval_2d(x, y), &TriQuad::default());
        let scale = s
            .values
            .iter()
            .map(|v| (mesh.h() * v).abs())
            .fold(1e-300, f64::max);
        for seed in [1u64, 2] {
            let c = EdgeConductivities::random(mesh.n_edges(), seed, 0.0, 5.0);
            match fem::verify_kirchhoff_equivalence(&mesh, &c, 1.0, &s, &cfg) {
                Ok(res) => worst = worst.max(res / scale),
                Err(e) => return check("kirchhoff-fem-equivalence", false, e.to_string()),
            }
        }
    }
    check(
        "kirchhoff-fem-equivalence",
        worst <= 1e-8,
        format!("max relative interior residual = {worst:.3e} (tol 1e-8)"),
    )
}

fn flux_oracle_1d() -> CheckResult {
    let cfg = SolverConfig::with_tol(1e-13);
    let mut worst: f64 = 0.0;
    for n in [2usize, 8, 32] {
        let mesh = Mesh1D::new(n).unwrap();
        for seed in [11u64, 12] {
            let s = DiscreteSources::zero_mean_from_values(
                SourceDim::OneD,
                rng::uniform_vec(seed, 0, mesh.n_nodes(), -2.0, 2.0),
            );
            let c = EdgeConductivities::random(mesh.n_edges(), seed + 100, 0.0, 5.0);
            let explicit = kirchhoff::fluxes_1d_explicit(&mesh, &s).unwrap();
            let (p, _) = kirchhoff::solve_pressures_1d_with(&mesh, &c, 1.0, &s, &cfg).unwrap();
            let q = kirchhoff::edge_fluxes_1d(&mesh, &c, 1.0, &p).unwrap();
            for i in 0..mesh.n_edges() {
                worst = worst.max((q.values[i] - explicit.values[i]).abs());
            }
        }
    }
    check(
        "flux-oracle-1d",
        worst <= 1e-10,
        format!("max |solved - explicit| = {worst:.3e} (tol 1e-10)"),
    )
}

fn reformulation_identities() -> CheckResult {
    let cfg = SolverConfig::with_tol(1e-13);
    // 1D
    let mesh1 = Mesh1D::new(8).unwrap();
    let pr = Params::new(1.5, 1.0, 0.4, 0.0).unwrap();
    let s1 = DiscreteSources::zero_mean_from_values(
        SourceDim::OneD,
        rng::uniform_vec(5, 0, 9, -1.0, 1.0),
    );
    let c1 = EdgeConductivities::random(8, 6, 0.0, 4.0);
    let d1 = energy::discrete_energy_1d(&mesh1, &c1, &pr, &s1, &cfg).unwrap();
    let i1 =
        energy::continuum_energy_1d(&mesh1, &mesh::q0_1d(&mesh1, &c1).unwrap(), &pr, &s1, &cfg)
            .unwrap();
    let gap1 = (d1.total - i1.total).abs() / d1.total.abs();
    // 2D
    let mesh2 = Mesh2D::new(4).unwrap();
    let spec = dipole();
    let s2 = fem::project_source_2d(&mesh2, |x, y| spec.eval_2d(x, y), &TriQuad::default());
    let c2 = EdgeConductivities::random(mesh2.n_edges(), 7, 0.0, 5.0);
    let d2 =
        energy::discrete_energy_2d(&mesh2, &c2, &pr, &s2, BoundaryMode::Integral, &cfg).unwrap();
    let i2 =
        energy::continuum_energy_2d(&mesh2, &mesh::q0_2d(&mesh2, &c2).unwrap(), &pr, &s2, &cfg)
            .unwrap();
    let gap2 = (d2.total - i2.total).abs() / d2.total.abs();
    let worst = gap1.max(gap2);
    check(
        "energy-reformulation",
        worst <= 1e-12,
        format!("max relative identity gap = {worst:.3e} (tol 1e-12)"),
    )
}

/// Dirichlet energy of a midpoint interpolant, integrated region by region
/// with centered differences of the evaluator (independent of the index sums).
fn interpolant_dirichlet(interp: &crate::mesh::Interpolant2D, horizontal: bool) -> f64 {
    let n = interp.n();
    let h = interp.h();
    let delta = h / 8.0;
    let grad_sq = |x: f64, y: f64| {
        let gx = (interp.eval(x + delta, y) - interp.eval(x - delta, y)) / (2.0 * delta);
        let gy = (interp.eval(x, y + delta) - interp.eval(x, y - delta)) / (2.0 * delta);
        gx * gx + gy * gy
    };
    let to_xy = |u: f64, v: f64| if horizontal { (u, v) } else { (v, u) };
    let mut acc = 0.0;
    for j in 0..n {
        let vc = (j as f64 + 0.5) * h;
        for uc in [0.25 * h, 1.0 - 0.25 * h] {
            let (x, y) = to_xy(uc, vc);
            acc += 0.5 * h * h * grad_sq(x, y);
        }
    }
    for i in 1..n {
        for j in 0..n {
            let u0 = (i as f64 - 0.5) * h;
            let v0 = j as f64 * h;
            let (x, y) = to_xy(u0 + h / 3.0, v0 + h / 3.0);
            acc += 0.5 * h * h * grad_sq(x, y);
            let (x, y) = to_xy(u0 + 2.0 * h / 3.0, v0 + 2.0 * h / 3.0);
            acc += 0.5 * h * h * grad_sq(x, y);
        }
    }
    acc
}

fn diffusive_identity() -> CheckResult {
    // exact index-range spot value of the single-edge configuration
    let mesh = Mesh2D::new(2).unwrap();
    let mut c = EdgeConductivities::zeros(mesh.n_edges());
    c.values[mesh.horizontal_edge(0, 0)] = 1.0;
    let spot = energy::diffusive_term_2d(&mesh, &c, 1.0).unwrap();
    if (spot - 1.5).abs() > 1e-14 {
        return check(
            "diffusive-form",
            false,
            format!("single-edge spot value {spot} != 1.5"),
        );
    }
    // index sums vs the interpolant Dirichlet energies
    let mut worst: f64 = 0.0;
    for n in [2usize, 3] {
        let mesh = Mesh2D::new(n).unwrap();
        let c = EdgeConductivities::random(mesh.n_edges(), 9 + n as u64, 0.0, 3.0);
        let form = energy::diffusive_term_2d(&mesh, &c, 1.0).unwrap();
        let oracle = interpolant_dirichlet(&mesh::q1_2d(&mesh, &c).unwrap(), true)
            + interpolant_dirichlet(&mesh::q2_2d(&mesh, &c).unwrap(), false);
        worst = worst.max((form - oracle).abs() / form.max(1.0));
    }
    check(
        "diffusive-form",
        worst <= 1e-10,
        format!("max |index sums - interpolant energy| = {worst:.3e} (tol 1e-10)"),
    )
}

fn gradient_vs_finite_differences() -> CheckResult {
    let cfg = SolverConfig::with_tol(1e-13);
    let mesh = Mesh2D::new(4).unwrap();
    let spec = dipole();
    let s = fem::project_source_2d(&mesh, |x, y| spec.eval_2d(x, y), &TriQuad::default());
    let mut worst: f64 = 0.0;
    for (trial, gamma) in [(0u64, 0.75), (1, 1.5)] {
        let pr = Params::new(gamma, 1.0, 0.4, 0.02).unwrap();
        let c = EdgeConductivities::random(mesh.n_edges(), 60 + trial, 0.5, 3.0);
        let grad = dynamics::energy_gradient_2d(&mesh, &c, &pr, &s, &cfg).unwrap();
        let scale = grad.iter().fold(1e-300f64, |m, g| m.max(g.abs()));
        let eps = 1e-6;
        for e in (0..mesh.n_edges()).step_by(7) {
            let mut plus = c.clone();
            plus.values[e] += eps;
            let mut minus = c.clone();
            minus.values[e] -= eps;
            let ep = energy::total_energy_with_diffusion_2d(&mesh, &plus, &pr, &s, &cfg).unwrap();
            let em = energy::total_energy_with_diffusion_2d(&mesh, &minus, &pr, &s, &cfg).unwrap();
            let fd = (ep.total - em.total) / (2.0 * eps);
            worst = worst.max((fd - grad[e]).abs() / scale);
        }
    }
    check(
        "gradient-vs-fd",
        worst <= 1e-5,
        format!("max relative gradient error = {worst:.3e} (tol 1e-5)"),
    )
}

fn closed_form_oracle() -> CheckResult {
    let mesh = Mesh1D::new(8).unwrap();
    let s = DiscreteSources::zero_mean_from_values(
        SourceDim::OneD,
        rng::uniform_vec(21, 0, 9, -2.0, 2.0),
    );
    let pr = Params::new(1.5, 1.0, 0.15, 0.0).unwrap();
    let oracle = dynamics::closed_form_minimizer_1d(&mesh, &pr, &s).unwrap();
    let c0 = EdgeConductivities::constant(mesh.n_edges(), 0.5);
    let cfg = SolverConfig::with_tol(1e-13);
    let res = match dynamics::minimize_1d(&mesh, c0, &pr, &s, 1e-7, 50_000, &cfg) {
        Ok(res) => res,
        Err(e) => return check("closed-form-1d", false, e.to_string()),
    };
    let worst = res
        .conductivities
        .values
        .iter()
        .zip(&oracle.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    check(
        "closed-form-1d",
        res.converged && worst <= 1e-6,
        format!("max |minimize - closed form| = {worst:.3e} (tol 1e-6)"),
    )
}

fn permeability_cross_check() -> CheckResult {
    let mut worst: f64 = 0.0;
    for k in 0..1000u64 {
        let c1 = rng::uniform(31, 4 * k, 0.0, 5.0);
        let c2 = rng::uniform(31, 4 * k + 1, 0.0, 5.0);
        let a1 = rng::uniform(31, 4 * k + 2, 0.0, std::f64::consts::TAU);
        let mut a2 = rng::uniform(31, 4 * k + 3, 0.0, std::f64::consts::TAU);
        if (a1 - a2).sin().abs() < 1e-3 {
            a2 += 0.5;
        }
        let p = match energy::permeability_tensor(
            c1,
            c2,
            [a1.cos(), a1.sin()],
            [a2.cos(), a2.sin()],
            0.3,
        ) {
            Ok(p) => p,
            Err(e) => return check("permeability", false, e.to_string()),
        };
        let [a, b] = [p.tensor[0][0], p.tensor[0][1]];
        let d = p.tensor[1][1];
        let tr = a + d;
        let det = a * d - b * b;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        worst = worst
            .max((p.eigenvalues[0] - (tr / 2.0 + disc)).abs())
            .max((p.eigenvalues[1] - (tr / 2.0 - disc)).abs());
    }
    check(
        "permeability",
        worst <= 1e-12,
        format!("max eigenvalue deviation = {worst:.3e} over 1000 draws (tol 1e-12)"),
    )
}

fn solver_contract() -> CheckResult {
    let cfg = SolverConfig::with_tol(1e-11);
    let mesh = Mesh2D::new(6).unwrap();
    let spec = dipole();
    let s = fem::project_source_2d(&mesh, |x, y| spec.eval_2d(x, y), &TriQuad::default());
    let c = EdgeConductivities::random(mesh.n_edges(), 77, 0.0, 5.0);
    let (p, report) = match kirchhoff::solve_pressures_2d_with(&mesh, &c, 1.0, &s, &cfg) {
        Ok(x) => x,
        Err(e) => return check("solver-contract", false, e.to_string()),
    };
    let mean: f64 = p.values.iter().sum();
    let inf = p.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let ok = report.rel_residual <= 1e-11 && mean.abs() <= 1e-14 * inf.max(1.0);
    check(
        "solver-contract",
        ok,
        format!(
            "relative residual {:.3e} (tol 1e-11), |mean|/||P||inf = {:.3e} (tol 1e-14)",
            report.rel_residual,
            mean.abs() / inf.max(1e-300)
        ),
    )
}
