//! P1 finite elements on the Courant triangulation: stiffness assembly for
//! the anisotropic diagonal tensor, source projection against the hat basis,
//! Poisson solves with per-triangle gradients, and the numerical
//! Kirchhoff-equivalence check.
//!
//! On each triangle the basis gradients are constant and axis-aligned up to
//! the diagonal direction, so the local bilinear form with a diagonal tensor
//! collapses to weighted squared differences along the triangle's horizontal
//! and vertical edges: each edge receives `(r + c)/2` per adjacent triangle.
//! That makes the assembled matrix a weighted graph Laplacian and is exactly
//! why the discrete system coincides with the Kirchhoff law.

use crate::error::{Error, Result};
use crate::kirchhoff::{DiscreteSources, SolverConfig, SourceDim};
use crate::linsolve::{self, SolveOptions, SymCsr, SymCsrBuilder};
use crate::mesh::{q0_2d, CellField, EdgeConductivities, Mesh1D, Mesh2D, TensorField};
use crate::quadrature::{gauss16, TriQuad};

/// Barycentric (hat-function) values of a point in a triangle.
pub fn hat_values(coords: [(f64, f64); 3], x: f64, y: f64) -> [f64; 3] {
    let [(x1, y1), (x2, y2), (x3, y3)] = coords;
    let det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
    let l2 = ((x - x1) * (y3 - y1) - (x3 - x1) * (y - y1)) / det;
    let l3 = ((x2 - x1) * (y - y1) - (x - x1) * (y2 - y1)) / det;
    [1.0 - l2 - l3, l2, l3]
}

/// Constant gradients of the three hat functions on a triangle.
pub fn hat_gradients(coords: [(f64, f64); 3]) -> [[f64; 2]; 3] {
    let [(x1, y1), (x2, y2), (x3, y3)] = coords;
    let det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
    let g2 = [(y3 - y1) / det, (x1 - x3) / det];
    let g3 = [(y1 - y2) / det, (x2 - x1) / det];
    [[-g2[0] - g3[0], -g2[1] - g3[1]], g2, g3]
}

/// Stiffness matrix of `-d/dx((r + c) dp/dx)` with P1 elements on [0,1]:
/// edge `i` of the mesh carries the weight `(r + c_i)/h`.
pub fn assemble_stiffness_1d(mesh: &Mesh1D, c: &CellField, r: f64) -> Result<SymCsr> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::NonPositiveR(r));
    }
    c.check(mesh)?;
    for (index, &value) in c.values.iter().enumerate() {
        if value < 0.0 || !value.is_finite() {
            return Err(Error::NegativeConductivity { index, value });
        }
    }
    let h = mesh.h();
    let mut builder = SymCsrBuilder::new(mesh.n_nodes());
    for (i, &ci) in c.values.iter().enumerate() {
        builder.add_edge(i, i + 1, (r + ci) / h);
    }
    Ok(builder.build())
}

/// Stiffness matrix of `-div((rI + c) grad p)` with P1 elements on the
/// Courant triangulation: every triangle adds `(r + c1)/2` on its horizontal
/// edge pair and `(r + c2)/2` on its vertical edge pair.
pub fn assemble_stiffness_2d(mesh: &Mesh2D, c: &TensorField, r: f64) -> Result<SymCsr> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::NonPositiveR(r));
    }
    c.check(mesh)?;
    let mut builder = SymCsrBuilder::new(mesh.n_nodes());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        builder.add_edge(tri.hnodes.0, tri.hnodes.1, 0.5 * (r + c.c1[t]));
        builder.add_edge(tri.vnodes.0, tri.vnodes.1, 0.5 * (r + c.c2[t]));
    }
    Ok(builder.build())
}

/// Project a 1D source onto the hat basis: `S_i = (1/h) int (S - mean) phi_i`,
/// 16-point Gauss-Legendre per cell (endpoint hats are half-hats).
pub fn project_source_1d(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> DiscreteSources {
    let h = mesh.h();
    let n = mesh.n_cells();
    // quadrature mean with the same rule, so the projected sums cancel exactly
    let mut total = 0.0;
    let mut length = 0.0;
    for i in 0..n {
        total += gauss16(mesh.node_x(i), mesh.node_x(i + 1), &mut |x| f(x));
        length += gauss16(mesh.node_x(i), mesh.node_x(i + 1), &mut |_| 1.0);
    }
    let mean = total / length;
    let mut values = vec![0.0; mesh.n_nodes()];
    for i in 0..n {
        let (a, b) = (mesh.node_x(i), mesh.node_x(i + 1));
        let left = gauss16(a, b, &mut |x| (f(x) - mean) * (1.0 - (x - a) / h));
        let right = gauss16(a, b, &mut |x| (f(x) - mean) * ((x - a) / h));
        values[i] += left / h;
        values[i + 1] += right / h;
    }
    DiscreteSources::from_values(SourceDim::OneD, values)
}

/// Project a 2D source onto the node test functions psi_i (sums of the
/// adjacent hats): `S_i = (1/h^2) int (S - mean) psi_i`, composite triangle
/// quadrature.
pub fn project_source_2d(
    mesh: &Mesh2D,
    f: impl Fn(f64, f64) -> f64,
    quad: &TriQuad,
) -> DiscreteSources {
    // pass 1: quadrature mean
    let mut total = 0.0;
    let mut area = 0.0;
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.triangle_coords(t);
        quad.for_each_point(a, b, c, &mut |x, y, w| {
            total += w * f(x, y);
            area += w;
        });
    }
    let mean = total / area;
    // pass 2: loads against the three vertex hats of each triangle
    let inv_h2 = 1.0 / (mesh.h() * mesh.h());
    let mut values = vec![0.0; mesh.n_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let coords = mesh.triangle_coords(t);
        let mut acc = [0.0; 3];
        quad.for_each_point(coords[0], coords[1], coords[2], &mut |x, y, w| {
            let lambda = hat_values(coords, x, y);
            let g = w * (f(x, y) - mean);
            acc[0] += g * lambda[0];
            acc[1] += g * lambda[1];
            acc[2] += g * lambda[2];
        });
        for (k, &v) in tri.vertices.iter().enumerate() {
            values[v] += inv_h2 * acc[k];
        }
    }
    DiscreteSources::from_values(SourceDim::TwoD, values)
}

/// A discrete Poisson solution: zero-average vertex values plus the constant
/// gradient on every triangle.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub pressure: crate::kirchhoff::PressureField,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
    pub solve_iterations: usize,
    pub rel_residual: f64,
}

impl FemSolution {
    /// `int grad p . (rI + c) grad p` evaluated exactly from the per-triangle
    /// constants.
    pub fn weighted_dirichlet_energy(&self, mesh: &Mesh2D, c: &TensorField, r: f64) -> f64 {
        let area = mesh.triangle_area();
        (0..mesh.n_triangles())
            .map(|t| {
                area * ((r + c.c1[t]) * self.grad_x[t] * self.grad_x[t]
                    + (r + c.c2[t]) * self.grad_y[t] * self.grad_y[t])
            })
            .sum()
    }
}

/// Solve the FEM-discretized Poisson equation with diagonal tensor `c`.
pub fn solve_poisson_fem(
    mesh: &Mesh2D,
    c: &TensorField,
    r: f64,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<FemSolution> {
    if sources.values.len() != mesh.n_nodes() {
        return Err(Error::SizeMismatch {
            what: "discrete sources",
            expected: mesh.n_nodes(),
            got: sources.values.len(),
        });
    }
    let matrix = assemble_stiffness_2d(mesh, c, r)?;
    let h2 = mesh.h() * mesh.h();
    let rhs: Vec<f64> = sources.values.iter().map(|&s| h2 * s).collect();
    let system = linsolve::SparseSymSystem { matrix, rhs };
    let report = linsolve::solve_zero_mean_with(
        &system,
        cfg.rel_tol,
        cfg.max_iter,
        &SolveOptions {
            jacobi: cfg.jacobi,
            warm_start: cfg.warm_start.clone(),
        },
    )?;
    let p = report.solution;
    let h = mesh.h();
    let mut grad_x = Vec::with_capacity(mesh.n_triangles());
    let mut grad_y = Vec::with_capacity(mesh.n_triangles());
    for tri in mesh.triangles() {
        grad_x.push((p[tri.hnodes.1] - p[tri.hnodes.0]) / h);
        grad_y.push((p[tri.vnodes.1] - p[tri.vnodes.0]) / h);
    }
    Ok(FemSolution {
        pressure: crate::kirchhoff::PressureField { values: p },
        grad_x,
        grad_y,
        solve_iterations: report.iterations,
        rel_residual: report.rel_residual,
    })
}

/// Residual of the literal Kirchhoff stencil at one node against given vertex
/// values: `sum_star (r + C_star)(P_i - P_star)/h - h S_i`.
pub fn kirchhoff_node_residual(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    r: f64,
    p: &[f64],
    sources: &DiscreteSources,
    node: usize,
) -> f64 {
    let h = mesh.h();
    let mut acc = 0.0;
    for (edge, neighbor) in mesh.node_neighbors(node) {
        acc += (r + c.values[edge]) * (p[node] - p[neighbor]) / h;
    }
    acc - h * sources.values[node]
}

/// Solve the FEM problem with the Q0-aligned tensor and return the maximum
/// interior-node residual of the literal Kirchhoff law.
pub fn verify_kirchhoff_equivalence(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    r: f64,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<f64> {
    let field = q0_2d(mesh, c)?;
    let sol = solve_poisson_fem(mesh, &field, r, sources, cfg)?;
    let p = &sol.pressure.values;
    let mut max_res: f64 = 0.0;
    for node in 0..mesh.n_nodes() {
        if mesh.is_interior_node(node) {
            let res = kirchhoff_node_residual(mesh, c, r, p, sources, node).abs();
            max_res = max_res.max(res);
        }
    }
    Ok(max_res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriOrientation;
    use crate::quadrature::DEFAULT_TRI_LEVEL;
    use std::f64::consts::PI;

    #[test]
    fn hat_values_partition_of_unity_and_vertex_interpolation() {
        let m = Mesh2D::new(3).unwrap();
        let quad = TriQuad::new(1);
        for t in 0..m.n_triangles() {
            let coords = m.triangle_coords(t);
            for (k, &(vx, vy)) in coords.iter().enumerate() {
                let l = hat_values(coords, vx, vy);
                for (j, &lv) in l.iter().enumerate() {
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert!((lv - expect).abs() < 1e-13);
                }
            }
            quad.for_each_point(coords[0], coords[1], coords[2], &mut |x, y, _| {
                let l = hat_values(coords, x, y);
                assert!((l[0] + l[1] + l[2] - 1.0).abs() < 1e-14);
                assert!(l.iter().all(|&v| (-1e-14..=1.0 + 1e-14).contains(&v)));
            });
        }
    }

    /// The 18 basis gradients around an interior node, checked against both
    /// the analytic table and finite differences of the hat evaluations.
    #[test]
    fn basis_gradient_table() {
        let m = Mesh2D::new(4).unwrap();
        let h = m.h();
        let node = m.node_index(2, 2);
        // expected gradients (x h) for basis (phi_1, phi_2, phi_3) per orientation
        let table: [(TriOrientation, [[f64; 2]; 3]); 6] = [
            (TriOrientation::NE, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]),
            (TriOrientation::SE, [[-1.0, 0.0], [1.0, 1.0], [0.0, -1.0]]),
            (TriOrientation::S, [[0.0, 1.0], [1.0, 0.0], [-1.0, -1.0]]),
            (TriOrientation::SW, [[1.0, 1.0], [0.0, -1.0], [-1.0, 0.0]]),
            (TriOrientation::NW, [[1.0, 0.0], [-1.0, -1.0], [0.0, 1.0]]),
            (TriOrientation::N, [[0.0, -1.0], [-1.0, 0.0], [1.0, 1.0]]),
        ];
        // vertex order of the appendix lists: (X_i, then the two others CCW or
        // as listed); map from our [anchor-independent] vertex storage by
        // matching coordinates.
        let (xi, yi) = m.node_xy(node);
        let offsets: [(TriOrientation, [(f64, f64); 3]); 6] = [
            (TriOrientation::NE, [(0.0, 0.0), (h, 0.0), (0.0, h)]),
            (TriOrientation::SE, [(0.0, 0.0), (h, 0.0), (h, -h)]),
            (TriOrientation::S, [(0.0, 0.0), (h, -h), (0.0, -h)]),
            (TriOrientation::SW, [(0.0, 0.0), (0.0, -h), (-h, 0.0)]),
            (TriOrientation::NW, [(0.0, 0.0), (-h, 0.0), (-h, h)]),
            (TriOrientation::N, [(0.0, 0.0), (-h, h), (0.0, h)]),
        ];
        let tris = m.node_triangles(node);
        assert_eq!(tris.len(), 6);
        for (orient, expected) in table.iter() {
            let (_, t) = tris.iter().find(|(o, _)| o == orient).unwrap();
            let stored = m.triangle_coords(*t);
            // coordinates in the appendix vertex order
            let want = offsets
                .iter()
                .find(|(o, _)| o == orient)
                .map(|(_, offs)| {
                    [
                        (xi + offs[0].0, yi + offs[0].1),
                        (xi + offs[1].0, yi + offs[1].1),
                        (xi + offs[2].0, yi + offs[2].1),
                    ]
                })
                .unwrap();
            // the stored triangle must have the same vertex set
            for w in want.iter() {
                assert!(
                    stored
                        .iter()
                        .any(|s| (s.0 - w.0).abs() < 1e-14 && (s.1 - w.1).abs() < 1e-14),
                    "{orient:?}: vertex {w:?} missing"
                );
            }
            let grads = hat_gradients(want);
            let centroid = (
                (want[0].0 + want[1].0 + want[2].0) / 3.0,
                (want[0].1 + want[1].1 + want[2].1) / 3.0,
            );
            let delta = 1e-6 * h;
            for k in 0..3 {
                // analytic table
                assert!(
                    (grads[k][0] - expected[k][0] / h).abs() < 1e-9,
                    "{orient:?} {k}"
                );
                assert!(
                    (grads[k][1] - expected[k][1] / h).abs() < 1e-9,
                    "{orient:?} {k}"
                );
                // finite differences of the hat evaluation at the centroid
                let f = |x: f64, y: f64| hat_values(want, x, y)[k];
                let fd_x = (f(centroid.0 + delta, centroid.1) - f(centroid.0 - delta, centroid.1))
                    / (2.0 * delta);
                let fd_y = (f(centroid.0, centroid.1 + delta) - f(centroid.0, centroid.1 - delta))
                    / (2.0 * delta);
                assert!((fd_x - grads[k][0]).abs() < 1e-8 / h);
                assert!((fd_y - grads[k][1]).abs() < 1e-8 / h);
            }
        }
    }

    #[test]
    fn interior_stencil_for_zero_c() {
        let m = Mesh2D::new(2).unwrap();
        let c = TensorField::zeros(m.n_triangles());
        let r = 1.75;
        let a = assemble_stiffness_2d(&m, &c, r).unwrap();
        let center = m.node_index(1, 1);
        assert!((a.get(center, center) - 4.0 * r).abs() < 1e-14);
        for (_, neighbor) in m.node_neighbors(center) {
            assert!((a.get(center, neighbor) + r).abs() < 1e-14);
        }
    }

    #[test]
    fn interior_row_matches_kirchhoff_stencil_for_random_c() {
        let m = Mesh2D::new(3).unwrap();
        let c = EdgeConductivities::random(m.n_edges(), 21, 0.0, 5.0);
        let field = q0_2d(&m, &c).unwrap();
        let r = 0.3;
        let a = assemble_stiffness_2d(&m, &field, r).unwrap();
        for node in 0..m.n_nodes() {
            if !m.is_interior_node(node) {
                continue;
            }
            let mut diag = 0.0;
            for (edge, neighbor) in m.node_neighbors(node) {
                let w = r + c.values[edge];
                assert!(
                    (a.get(node, neighbor) + w).abs() < 1e-13,
                    "node {node} neighbor {neighbor}"
                );
                diag += w;
            }
            assert!((a.get(node, node) - diag).abs() < 1e-13);
        }
    }

    #[test]
    fn stiffness_is_exactly_symmetric() {
        let m = Mesh2D::new(4).unwrap();
        let c = EdgeConductivities::random(m.n_edges(), 5, 0.0, 4.0);
        let field = q0_2d(&m, &c).unwrap();
        let a = assemble_stiffness_2d(&m, &field, 1.0).unwrap();
        let dense = a.to_dense();
        for i in 0..m.n_nodes() {
            for j in 0..m.n_nodes() {
                assert_eq!(dense[i][j].to_bits(), dense[j][i].to_bits());
            }
        }
    }

    #[test]
    fn project_source_1d_partition_and_oracle() {
        let mesh = Mesh1D::new(8).unwrap();
        let f = |x: f64| (2.0 * PI * x).sin();
        let s = project_source_1d(&mesh, f);
        // conservation
        assert!(s.weighted_sum(mesh.h()).abs() < 1e-12);
        // high-resolution composite oracle: 10^4 panels
        let h = mesh.h();
        for i in 0..=8usize {
            let phi = |x: f64| {
                let xi = mesh.node_x(i);
                let d = (x - xi).abs() / h;
                if d >= 1.0 {
                    0.0
                } else {
                    1.0 - d
                }
            };
            let mut oracle = 0.0;
            let panels = 10_000;
            for k in 0..panels {
                let a = k as f64 / panels as f64;
                let b = (k + 1) as f64 / panels as f64;
                let mid = 0.5 * (a + b);
                oracle += (b - a) * f(mid) * phi(mid);
            }
            oracle /= h;
            assert!(
                (s.values[i] - oracle).abs() < 1e-6,
                "node {i}: {} vs {}",
                s.values[i],
                oracle
            );
        }
        // zero source projects to zero
        let z = project_source_1d(&mesh, |_| 0.0);
        assert!(z.values.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn project_source_2d_partition_and_oracle() {
        let mesh = Mesh2D::new(8).unwrap();
        let f = |x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
        let quad = TriQuad::new(DEFAULT_TRI_LEVEL);
        let s = project_source_2d(&mesh, f, &quad);
        assert!(s.weighted_sum(mesh.h()).abs() < 1e-10);
        // oracle: same construction at a much finer subdivision
        let fine = project_source_2d(&mesh, f, &TriQuad::new(DEFAULT_TRI_LEVEL + 2));
        for i in 0..mesh.n_nodes() {
            assert!(
                (s.values[i] - fine.values[i]).abs() < 1e-6,
                "node {i}: {} vs {}",
                s.values[i],
                fine.values[i]
            );
        }
        let z = project_source_2d(&mesh, |_, _| 0.0, &quad);
        assert!(z.values.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_source_solves_to_zero() {
        let mesh = Mesh2D::new(3).unwrap();
        let c = TensorField::zeros(mesh.n_triangles());
        let s = DiscreteSources::from_values(SourceDim::TwoD, vec![0.0; mesh.n_nodes()]);
        let sol = solve_poisson_fem(&mesh, &c, 1.0, &s, &SolverConfig::default()).unwrap();
        assert!(sol.pressure.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn manufactured_solution_second_order() {
        // -Delta p = 2 pi^2 cos(pi x) cos(pi y), no-flux compatible;
        // p = cos(pi x) cos(pi y)
        let exact = |x: f64, y: f64| (PI * x).cos() * (PI * y).cos();
        let rhs = |x: f64, y: f64| 2.0 * PI * PI * exact(x, y);
        let quad = TriQuad::new(3);
        let mut errors = Vec::new();
        for n in [4usize, 8, 16, 32] {
            let mesh = Mesh2D::new(n).unwrap();
            let c = TensorField::zeros(mesh.n_triangles());
            let s = project_source_2d(&mesh, rhs, &quad);
            let sol =
                solve_poisson_fem(&mesh, &c, 1.0, &s, &SolverConfig::with_tol(1e-12)).unwrap();
            // compare against the zero-average exact solution at the vertices
            let mut exact_vals: Vec<f64> = (0..mesh.n_nodes())
                .map(|v| {
                    let (x, y) = mesh.node_xy(v);
                    exact(x, y)
                })
                .collect();
            let mean = exact_vals.iter().sum::<f64>() / exact_vals.len() as f64;
            for v in exact_vals.iter_mut() {
                *v -= mean;
            }
            let err = sol
                .pressure
                .values
                .iter()
                .zip(&exact_vals)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            errors.push(err);
        }
        // vertex max-error decays at second order up to the usual log factor;
        // per-step orders climb toward 2 as the mesh refines
        let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        for (k, w) in orders.windows(2).enumerate() {
            assert!(w[1] > w[0], "orders not increasing at {k}: {orders:?}");
        }
        assert!(orders.iter().all(|&o| o > 1.35), "orders {orders:?}");
        assert!(*orders.last().unwrap() > 1.65, "orders {orders:?}");
    }

    #[test]
    fn galerkin_energy_identity() {
        let mesh = Mesh2D::new(8).unwrap();
        let c_edges = EdgeConductivities::random(mesh.n_edges(), 3, 0.0, 2.0);
        let field = q0_2d(&mesh, &c_edges).unwrap();
        let quad = TriQuad::default();
        let s = project_source_2d(
            &mesh,
            |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin(),
            &quad,
        );
        let sol =
            solve_poisson_fem(&mesh, &field, 1.0, &s, &SolverConfig::with_tol(1e-12)).unwrap();
        let energy = sol.weighted_dirichlet_energy(&mesh, &field, 1.0);
        let h2 = mesh.h() * mesh.h();
        let load: f64 = s
            .values
            .iter()
            .zip(&sol.pressure.values)
            .map(|(&si, &pi)| h2 * si * pi)
            .sum();
        assert!(
            (energy - load).abs() <= 1e-8 * energy.abs().max(1.0),
            "{energy} vs {load}"
        );
    }

    #[test]
    fn kirchhoff_equivalence_interior_and_literal_boundary_mismatch() {
        let quad = TriQuad::default();
        for n in [4usize, 8] {
            let mesh = Mesh2D::new(n).unwrap();
            let c = EdgeConductivities::random(mesh.n_edges(), 17, 0.0, 5.0);
            let s = project_source_2d(
                &mesh,
                |x, y| {
                    let g =
                        |cx: f64, cy: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / 0.02).exp();
                    10.0 * (g(0.25, 0.25) - g(0.75, 0.75))
                },
                &quad,
            );
            let res =
                verify_kirchhoff_equivalence(&mesh, &c, 1.0, &s, &SolverConfig::with_tol(1e-12))
                    .unwrap();
            let scale = s
                .values
                .iter()
                .map(|v| (mesh.h() * v).abs())
                .fold(0.0f64, f64::max);
            assert!(res <= 1e-8 * scale, "n={n}: residual {res}, scale {scale}");

            // the literal stencil does NOT hold at boundary nodes: O(1) residual
            let field = q0_2d(&mesh, &c).unwrap();
            let sol =
                solve_poisson_fem(&mesh, &field, 1.0, &s, &SolverConfig::with_tol(1e-12)).unwrap();
            let mut max_boundary = 0.0f64;
            for node in 0..mesh.n_nodes() {
                if !mesh.is_interior_node(node) {
                    let r = kirchhoff_node_residual(&mesh, &c, 1.0, &sol.pressure.values, &s, node)
                        .abs();
                    max_boundary = max_boundary.max(r);
                }
            }
            assert!(
                max_boundary > 1e-3 * scale.max(1e-300),
                "boundary residual unexpectedly small: {max_boundary}"
            );
        }
    }

    #[test]
    fn zero_c_zero_s_equivalence_residual_is_zero() {
        let mesh = Mesh2D::new(4).unwrap();
        let c = EdgeConductivities::zeros(mesh.n_edges());
        let s = DiscreteSources::from_values(SourceDim::TwoD, vec![0.0; mesh.n_nodes()]);
        let res =
            verify_kirchhoff_equivalence(&mesh, &c, 1.0, &s, &SolverConfig::default()).unwrap();
        assert_eq!(res, 0.0);
    }
}
