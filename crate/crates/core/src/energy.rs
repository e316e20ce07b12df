//! Energy functionals of the network-formation model: discrete edge sums,
//! their integral (per-triangle) reformulations, the continuum targets on a
//! given mesh, the diffusive penalty, and the parallelogram permeability
//! algebra.
//!
//! The canonical 2D discrete energy is the integral (per-triangle) form: only
//! with triangle-area weights does the discrete sum coincide exactly with the
//! reformulated functional. The literal double-sum over nodes weights every
//! edge by h^2 and therefore double-counts the missing triangle of each
//! boundary edge; it stays available behind [`BoundaryMode::Literal`] and the
//! deviation is pure boundary baseline.

use crate::error::{Error, Result};
use crate::fem;
use crate::kirchhoff::{
    solve_pressures_1d_with, solve_pressures_2d_with, DiscreteSources, SolverConfig,
};
use crate::mesh::{CellField, EdgeConductivities, Mesh1D, Mesh2D, TensorField};
use serde::{Deserialize, Serialize};

/// Model parameters: metabolic exponent gamma, metabolic coefficient nu,
/// baseline conductivity r and diffusion constant D^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub gamma: f64,
    pub nu: f64,
    pub r: f64,
    pub d2: f64,
}

impl Params {
    pub fn new(gamma: f64, nu: f64, r: f64, d2: f64) -> Result<Self> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "nu must be positive, got {nu}"
            )));
        }
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::NonPositiveR(r));
        }
        if !d2.is_finite() || d2 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "d2 must be nonnegative, got {d2}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gamma must be finite, got {gamma}"
            )));
        }
        Ok(Self { gamma, nu, r, d2 })
    }

    /// Metabolic density (nu/gamma) (r + c)^gamma.
    pub fn metabolic_density(&self, c: f64) -> f64 {
        self.nu / self.gamma * (self.r + c).powf(self.gamma)
    }
}

/// Which formula variant produced an [`EnergyReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyVariant {
    Discrete1d,
    Discrete2dIntegral,
    Discrete2dLiteral,
    Continuum1d,
    Continuum2d,
    Diffusive1d,
    Diffusive2d,
}

impl std::fmt::Display for EnergyVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EnergyVariant::Discrete1d => "discrete_1d",
            EnergyVariant::Discrete2dIntegral => "discrete_2d_integral",
            EnergyVariant::Discrete2dLiteral => "discrete_2d_literal",
            EnergyVariant::Continuum1d => "continuum_1d",
            EnergyVariant::Continuum2d => "continuum_2d",
            EnergyVariant::Diffusive1d => "diffusive_1d",
            EnergyVariant::Diffusive2d => "diffusive_2d",
        };
        f.write_str(s)
    }
}

/// Pumping / metabolic / diffusive split of an energy value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub pumping: f64,
    pub metabolic: f64,
    pub diffusive: f64,
    pub total: f64,
    pub variant: EnergyVariant,
}

impl EnergyReport {
    fn new(pumping: f64, metabolic: f64, diffusive: f64, variant: EnergyVariant) -> Self {
        Self {
            pumping,
            metabolic,
            diffusive,
            total: pumping + metabolic + diffusive,
            variant,
        }
    }

    /// Flat record for CSV/JSON output.
    pub fn flat_record(&self, n: usize, params: &Params) -> FlatEnergyRecord {
        FlatEnergyRecord {
            pumping: self.pumping,
            metabolic: self.metabolic,
            diffusive: self.diffusive,
            total: self.total,
            mode: self.variant,
            n,
            gamma: params.gamma,
            nu: params.nu,
            r: params.r,
            d2: params.d2,
        }
    }
}

/// Fixed-key flat serialization of an energy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatEnergyRecord {
    pub pumping: f64,
    pub metabolic: f64,
    pub diffusive: f64,
    pub total: f64,
    pub mode: EnergyVariant,
    pub n: usize,
    pub gamma: f64,
    pub nu: f64,
    pub r: f64,
    pub d2: f64,
}

/// Boundary handling of the 2D discrete energy sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Per-triangle weights (canonical; exact reformulation identity).
    Integral,
    /// The literal double sum over nodes: every edge weighted h^2.
    Literal,
}

/// Pumping and metabolic parts of the 1D discrete energy for given pressures.
pub(crate) fn energy_parts_1d(
    mesh: &Mesh1D,
    c: &EdgeConductivities,
    params: &Params,
    p: &[f64],
) -> (f64, f64) {
    let h = mesh.h();
    let mut pumping = 0.0;
    let mut metabolic = 0.0;
    for i in 0..mesh.n_edges() {
        let dp = (p[i + 1] - p[i]) / h;
        pumping += h * (params.r + c.values[i]) * dp * dp;
        metabolic += h * params.metabolic_density(c.values[i]);
    }
    (pumping, metabolic)
}

/// Pumping and metabolic parts of the 2D discrete energy for given pressures.
pub(crate) fn energy_parts_2d(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    params: &Params,
    p: &[f64],
    mode: BoundaryMode,
) -> (f64, f64) {
    let h = mesh.h();
    let mut pumping = 0.0;
    let mut metabolic = 0.0;
    for e in 0..mesh.n_edges() {
        let w = match mode {
            BoundaryMode::Integral => mesh.edge_weight(e),
            BoundaryMode::Literal => h * h,
        };
        let (a, b) = mesh.edge_nodes(e);
        let dp = (p[b] - p[a]) / h;
        pumping += w * (params.r + c.values[e]) * dp * dp;
        metabolic += w * params.metabolic_density(c.values[e]);
    }
    (pumping, metabolic)
}

/// E^N in 1D: pumping h sum (r+C_i)((P_i-P_{i-1})/h)^2, metabolic
/// h sum (nu/gamma)(r+C_i)^gamma.
pub fn discrete_energy_1d(
    mesh: &Mesh1D,
    c: &EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<EnergyReport> {
    let (p, _) = solve_pressures_1d_with(mesh, c, params.r, sources, cfg)?;
    let (pumping, metabolic) = energy_parts_1d(mesh, c, params, &p.values);
    Ok(EnergyReport::new(
        pumping,
        metabolic,
        0.0,
        EnergyVariant::Discrete1d,
    ))
}

/// E^h in 2D via edge sums. Integral mode weights each edge by its
/// triangle-area weight (h^2 interior, h^2/2 boundary); literal mode weights
/// every edge by h^2.
pub fn discrete_energy_2d(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    mode: BoundaryMode,
    cfg: &SolverConfig,
) -> Result<EnergyReport> {
    let (p, _) = solve_pressures_2d_with(mesh, c, params.r, sources, cfg)?;
    let (pumping, metabolic) = energy_parts_2d(mesh, c, params, &p.values, mode);
    let variant = match mode {
        BoundaryMode::Integral => EnergyVariant::Discrete2dIntegral,
        BoundaryMode::Literal => EnergyVariant::Discrete2dLiteral,
    };
    Ok(EnergyReport::new(pumping, metabolic, 0.0, variant))
}

/// The reformulated functional in 1D for a piecewise-constant cell field.
pub fn continuum_energy_1d(
    mesh: &Mesh1D,
    field: &CellField,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<EnergyReport> {
    field.check(mesh)?;
    let c = EdgeConductivities {
        values: field.values.clone(),
    };
    let (p, _) = solve_pressures_1d_with(mesh, &c, params.r, sources, cfg)?;
    let h = mesh.h();
    let mut pumping = 0.0;
    let mut metabolic = 0.0;
    for (i, &ci) in field.values.iter().enumerate() {
        let dp = (p.values[i + 1] - p.values[i]) / h;
        pumping += h * (params.r + ci) * dp * dp;
        metabolic += h * params.metabolic_density(ci);
    }
    Ok(EnergyReport::new(
        pumping,
        metabolic,
        0.0,
        EnergyVariant::Continuum1d,
    ))
}

/// The reformulated functional in 2D for a piecewise-constant tensor field:
/// FEM pumping and per-triangle metabolic integral.
pub fn continuum_energy_2d(
    mesh: &Mesh2D,
    field: &TensorField,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<EnergyReport> {
    let sol = fem::solve_poisson_fem(mesh, field, params.r, sources, cfg)?;
    let area = mesh.triangle_area();
    let mut pumping = 0.0;
    let mut metabolic = 0.0;
    for t in 0..mesh.n_triangles() {
        pumping += area
            * ((params.r + field.c1[t]) * sol.grad_x[t] * sol.grad_x[t]
                + (params.r + field.c2[t]) * sol.grad_y[t] * sol.grad_y[t]);
        metabolic +=
            area * (params.metabolic_density(field.c1[t]) + params.metabolic_density(field.c2[t]));
    }
    Ok(EnergyReport::new(
        pumping,
        metabolic,
        0.0,
        EnergyVariant::Continuum2d,
    ))
}

/// Difference terms (a, b, w) of the diffusive quadratic form:
/// value = sum w (C_a - C_b)^2. 1D: D^2 h sum ((C_{i+1}-C_i)/h)^2.
pub(crate) fn diffusion_terms_1d(mesh: &Mesh1D) -> Vec<(usize, usize, f64)> {
    let inv_h = 1.0 / mesh.h();
    (0..mesh.n_edges().saturating_sub(1))
        .map(|i| (i, i + 1, inv_h))
        .collect()
}

/// 2D difference terms of D_x + D_y with the exact index ranges: differences
/// across the edge direction carry weight 1 everywhere; differences along the
/// edge direction carry weight 1 on interior rows/columns and 1/2 on the two
/// boundary ones.
pub(crate) fn diffusion_terms_2d(mesh: &Mesh2D) -> Vec<(usize, usize, f64)> {
    let n = mesh.n_cells_per_side();
    let mut terms = Vec::new();
    // D_x over horizontal-edge conductivities C_{i+1/2, j}
    for j in 0..n {
        for i in 0..n {
            terms.push((
                mesh.horizontal_edge(i, j),
                mesh.horizontal_edge(i, j + 1),
                1.0,
            ));
        }
    }
    for i in 1..n {
        for j in 0..=n {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            terms.push((
                mesh.horizontal_edge(i - 1, j),
                mesh.horizontal_edge(i, j),
                w,
            ));
        }
    }
    // D_y over vertical-edge conductivities C_{i, j+1/2}
    for j in 0..n {
        for i in 0..n {
            terms.push((mesh.vertical_edge(i, j), mesh.vertical_edge(i + 1, j), 1.0));
        }
    }
    for j in 1..n {
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            terms.push((mesh.vertical_edge(i, j - 1), mesh.vertical_edge(i, j), w));
        }
    }
    terms
}

fn quadratic_form(terms: &[(usize, usize, f64)], values: &[f64]) -> f64 {
    terms
        .iter()
        .map(|&(a, b, w)| {
            let d = values[a] - values[b];
            w * d * d
        })
        .sum()
}

fn quadratic_gradient(terms: &[(usize, usize, f64)], values: &[f64], scale: f64, out: &mut [f64]) {
    for &(a, b, w) in terms {
        let d = values[a] - values[b];
        out[a] += 2.0 * scale * w * d;
        out[b] -= 2.0 * scale * w * d;
    }
}

/// D^2 h sum ((C_{i+1}-C_i)/h)^2.
pub fn diffusive_term_1d(mesh: &Mesh1D, c: &EdgeConductivities, d2: f64) -> Result<f64> {
    c.check(mesh.n_edges())?;
    Ok(d2 * quadratic_form(&diffusion_terms_1d(mesh), &c.values))
}

/// D^2 (D_x[C] + D_y[C]).
pub fn diffusive_term_2d(mesh: &Mesh2D, c: &EdgeConductivities, d2: f64) -> Result<f64> {
    c.check(mesh.n_edges())?;
    Ok(d2 * quadratic_form(&diffusion_terms_2d(mesh), &c.values))
}

/// Gradient of [`diffusive_term_1d`] with respect to the conductivities.
pub fn diffusive_gradient_1d(mesh: &Mesh1D, c: &EdgeConductivities, d2: f64) -> Result<Vec<f64>> {
    c.check(mesh.n_edges())?;
    let mut out = vec![0.0; c.len()];
    quadratic_gradient(&diffusion_terms_1d(mesh), &c.values, d2, &mut out);
    Ok(out)
}

/// Gradient of [`diffusive_term_2d`] with respect to the conductivities.
pub fn diffusive_gradient_2d(mesh: &Mesh2D, c: &EdgeConductivities, d2: f64) -> Result<Vec<f64>> {
    c.check(mesh.n_edges())?;
    let mut out = vec![0.0; c.len()];
    quadratic_gradient(&diffusion_terms_2d(mesh), &c.values, d2, &mut out);
    Ok(out)
}

/// E^N_diff in 1D: diffusive penalty plus the discrete energy.
pub fn total_energy_with_diffusion_1d(
    mesh: &Mesh1D,
    c: &EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<EnergyReport> {
    let base = discrete_energy_1d(mesh, c, params, sources, cfg)?;
    let diffusive = diffusive_term_1d(mesh, c, params.d2)?;
    Ok(EnergyReport::new(
        base.pumping,
        base.metabolic,
        diffusive,
        EnergyVariant::Diffusive1d,
    ))
}

/// E^h_diff in 2D: diffusive penalty plus the discrete energy in integral
/// boundary mode.
pub fn total_energy_with_diffusion_2d(
    mesh: &Mesh2D,
    c: &EdgeConductivities,
    params: &Params,
    sources: &DiscreteSources,
    cfg: &SolverConfig,
) -> Result<EnergyReport> {
    let base = discrete_energy_2d(mesh, c, params, sources, BoundaryMode::Integral, cfg)?;
    let diffusive = diffusive_term_2d(mesh, c, params.d2)?;
    Ok(EnergyReport::new(
        base.pumping,
        base.metabolic,
        diffusive,
        EnergyVariant::Diffusive2d,
    ))
}

/// Effective permeability of a parallelogram grid with principal axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Permeability {
    pub tensor: [[f64; 2]; 2],
    /// Principal permeabilities, descending.
    pub eigenvalues: [f64; 2],
    /// Unit eigenvectors, matching `eigenvalues` order.
    pub eigenvectors: [[f64; 2]; 2],
}

/// P = rI + c1 theta1 (x) theta1 + c2 theta2 (x) theta2 for unit directions
/// theta1, theta2; eigenvalues from trace/determinant,
/// lambda = r + (c1+c2)/2 +- sqrt((c1-c2)^2 + 4 c1 c2 (theta1.theta2)^2)/2.
pub fn permeability_tensor(
    c1: f64,
    c2: f64,
    theta1: [f64; 2],
    theta2: [f64; 2],
    r: f64,
) -> Result<Permeability> {
    if c1 < 0.0 || c2 < 0.0 || !c1.is_finite() || !c2.is_finite() {
        return Err(Error::InvalidParams(format!(
            "conductivities must be nonnegative, got ({c1}, {c2})"
        )));
    }
    if r < 0.0 || !r.is_finite() {
        return Err(Error::InvalidParams(format!(
            "r must be nonnegative, got {r}"
        )));
    }
    for (name, th) in [("theta1", theta1), ("theta2", theta2)] {
        let len = (th[0] * th[0] + th[1] * th[1]).sqrt();
        if (len - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "{name} must be a unit vector, |{name}| = {len}"
            )));
        }
    }
    let cross = theta1[0] * theta2[1] - theta1[1] * theta2[0];
    if cross.abs() < 1e-12 {
        return Err(Error::ParallelDirections);
    }
    let dot = theta1[0] * theta2[0] + theta1[1] * theta2[1];

    let tensor = [
        [
            r + c1 * theta1[0] * theta1[0] + c2 * theta2[0] * theta2[0],
            c1 * theta1[0] * theta1[1] + c2 * theta2[0] * theta2[1],
        ],
        [
            c1 * theta1[0] * theta1[1] + c2 * theta2[0] * theta2[1],
            r + c1 * theta1[1] * theta1[1] + c2 * theta2[1] * theta2[1],
        ],
    ];

    if dot == 0.0 {
        // orthogonal axes: exact reduction
        let (evals, evecs) = if c1 >= c2 {
            ([r + c1, r + c2], [theta1, theta2])
        } else {
            ([r + c2, r + c1], [theta2, theta1])
        };
        return Ok(Permeability {
            tensor,
            eigenvalues: evals,
            eigenvectors: evecs,
        });
    }

    let radical = ((c1 - c2) * (c1 - c2) + 4.0 * c1 * c2 * dot * dot).sqrt();
    let lam1 = r + 0.5 * ((c1 + c2) + radical);
    let lam2 = r + 0.5 * ((c1 + c2) - radical);

    let eigenvector_for = |lam: f64| -> [f64; 2] {
        let a = tensor[0][0];
        let b = tensor[0][1];
        let d = tensor[1][1];
        // rows of (P - lam I) are both orthogonal to the eigenvector
        let cand1 = [b, lam - a];
        let cand2 = [lam - d, b];
        let n1 = cand1[0] * cand1[0] + cand1[1] * cand1[1];
        let n2 = cand2[0] * cand2[0] + cand2[1] * cand2[1];
        let (v, n) = if n1 >= n2 { (cand1, n1) } else { (cand2, n2) };
        if n.sqrt() < 1e-14 * (a.abs() + d.abs() + b.abs()).max(1.0) {
            return [1.0, 0.0]; // multiple eigenvalue: any direction works
        }
        let inv = 1.0 / n.sqrt();
        [v[0] * inv, v[1] * inv]
    };

    Ok(Permeability {
        tensor,
        eigenvalues: [lam1, lam2],
        eigenvectors: [eigenvector_for(lam1), eigenvector_for(lam2)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kirchhoff::{DiscreteSources, SourceDim};
    use crate::mesh::{q0_1d, q0_2d, q1_2d, q2_2d, Interpolant2D};

    fn params(gamma: f64, nu: f64, r: f64, d2: f64) -> Params {
        Params::new(gamma, nu, r, d2).unwrap()
    }

    fn tight() -> SolverConfig {
        SolverConfig::with_tol(1e-13)
    }

    #[test]
    fn baseline_energies_without_sources() {
        // 1D: C=0, S=0 -> total = (nu/gamma) r^gamma
        let mesh = Mesh1D::new(5).unwrap();
        let pr = params(1.7, 2.0, 0.5, 0.0);
        let s = DiscreteSources::from_values(SourceDim::OneD, vec![0.0; 6]);
        let c = EdgeConductivities::zeros(5);
        let rep = discrete_energy_1d(&mesh, &c, &pr, &s, &tight()).unwrap();
        assert!(rep.pumping == 0.0);
        let expect = pr.nu / pr.gamma * pr.r.powf(pr.gamma);
        assert!((rep.total - expect).abs() < 1e-14);

        // 2D integral: 2 (nu/gamma) r^gamma; literal: x (1 + h)
        let mesh2 = Mesh2D::new(4).unwrap();
        let s2 = DiscreteSources::from_values(SourceDim::TwoD, vec![0.0; mesh2.n_nodes()]);
        let c2 = EdgeConductivities::zeros(mesh2.n_edges());
        let int =
            discrete_energy_2d(&mesh2, &c2, &pr, &s2, BoundaryMode::Integral, &tight()).unwrap();
        assert!((int.total - 2.0 * expect).abs() < 1e-13);
        let lit =
            discrete_energy_2d(&mesh2, &c2, &pr, &s2, BoundaryMode::Literal, &tight()).unwrap();
        assert!((lit.total - 2.0 * expect * (1.0 + mesh2.h())).abs() < 1e-13);

        // continuum with zero tensor
        let f = TensorField::zeros(mesh2.n_triangles());
        let cont = continuum_energy_2d(&mesh2, &f, &pr, &s2, &tight()).unwrap();
        assert!((cont.total - 2.0 * expect).abs() < 1e-13);
    }

    #[test]
    fn hand_computed_1d_energy() {
        // N=2, S=(1,0,-1), r=1, C=0, nu=gamma=1: pumping 0.25, total 1.25
        let mesh = Mesh1D::new(2).unwrap();
        let pr = params(1.0, 1.0, 1.0, 0.0);
        let s = DiscreteSources::from_values(SourceDim::OneD, vec![1.0, 0.0, -1.0]);
        let c = EdgeConductivities::zeros(2);
        let rep = discrete_energy_1d(&mesh, &c, &pr, &s, &tight()).unwrap();
        assert!((rep.pumping - 0.25).abs() < 1e-12);
        assert!((rep.metabolic - 1.0).abs() < 1e-12);
        assert!((rep.total - 1.25).abs() < 1e-12);
    }

    #[test]
    fn reformulation_identity_1d() {
        let mesh = Mesh1D::new(8).unwrap();
        let pr = params(1.5, 0.8, 0.4, 0.0);
        let s = DiscreteSources::zero_mean_from_values(
            SourceDim::OneD,
            (0..9)
                .map(|k| crate::rng::uniform(31, k, -1.0, 1.0))
                .collect(),
        );
        let c = EdgeConductivities::random(8, 32, 0.0, 4.0);
        let discrete = discrete_energy_1d(&mesh, &c, &pr, &s, &tight()).unwrap();
        let integral =
            continuum_energy_1d(&mesh, &q0_1d(&mesh, &c).unwrap(), &pr, &s, &tight()).unwrap();
        assert!((discrete.total - integral.total).abs() <= 1e-12 * discrete.total.abs());
    }

    #[test]
    fn reformulation_identity_2d_and_literal_discrepancy() {
        let mesh = Mesh2D::new(4).unwrap();
        let pr = params(2.0, 1.0, 0.5, 0.0);
        let quad = crate::quadrature::TriQuad::default();
        let s = crate::fem::project_source_2d(
            &mesh,
            |x, y| (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).sin(),
            &quad,
        );
        let c = EdgeConductivities::random(mesh.n_edges(), 7, 0.0, 5.0);
        let discrete =
            discrete_energy_2d(&mesh, &c, &pr, &s, BoundaryMode::Integral, &tight()).unwrap();
        let field = q0_2d(&mesh, &c).unwrap();
        let cont = continuum_energy_2d(&mesh, &field, &pr, &s, &tight()).unwrap();
        assert!(
            (discrete.total - cont.total).abs() <= 1e-12 * discrete.total.abs(),
            "{} vs {}",
            discrete.total,
            cont.total
        );

        // literal - integral = boundary-edge half-weights, computable directly
        let lit = discrete_energy_2d(&mesh, &c, &pr, &s, BoundaryMode::Literal, &tight()).unwrap();
        let (p, _) = solve_pressures_2d_with(&mesh, &c, pr.r, &s, &tight()).unwrap();
        let h = mesh.h();
        let mut expected_gap = 0.0;
        for e in 0..mesh.n_edges() {
            if mesh.edge_triangles(e).len() == 1 {
                let (a, b) = mesh.edge_nodes(e);
                let dp = (p.values[b] - p.values[a]) / h;
                expected_gap += 0.5
                    * h
                    * h
                    * ((pr.r + c.values[e]) * dp * dp + pr.metabolic_density(c.values[e]));
            }
        }
        let gap = lit.total - discrete.total;
        assert!(
            (gap - expected_gap).abs() <= 1e-12 * lit.total.abs(),
            "{gap} vs {expected_gap}"
        );
    }

    #[test]
    fn modes_differ_only_in_boundary_baseline_when_interior_supported() {
        let mesh = Mesh2D::new(4).unwrap();
        let pr = params(1.5, 1.0, 0.25, 0.0);
        let s = DiscreteSources::from_values(SourceDim::TwoD, vec![0.0; mesh.n_nodes()]);
        // conductivities supported away from the boundary edges
        let mut c = EdgeConductivities::zeros(mesh.n_edges());
        for e in 0..mesh.n_edges() {
            if mesh.edge_triangles(e).len() == 2 {
                c.values[e] = crate::rng::uniform(3, e as u64, 0.0, 2.0);
            }
        }
        let int = discrete_energy_2d(&mesh, &c, &pr, &s, BoundaryMode::Integral, &tight()).unwrap();
        let lit = discrete_energy_2d(&mesh, &c, &pr, &s, BoundaryMode::Literal, &tight()).unwrap();
        // S=0: pumping vanishes; gap is the r-baseline over boundary edges
        let n_boundary = (0..mesh.n_edges())
            .filter(|&e| mesh.edge_triangles(e).len() == 1)
            .count();
        let h = mesh.h();
        let expect = n_boundary as f64 * 0.5 * h * h * pr.metabolic_density(0.0);
        assert!(((lit.total - int.total) - expect).abs() < 1e-14);
    }

    #[test]
    fn diffusive_term_values() {
        // constant field -> 0
        let mesh = Mesh2D::new(3).unwrap();
        let c = EdgeConductivities::constant(mesh.n_edges(), 2.0);
        assert_eq!(diffusive_term_2d(&mesh, &c, 1.0).unwrap(), 0.0);

        // N=2, only C_{1/2,0}=1 among horizontal edges -> D_x = 1.5
        let mesh = Mesh2D::new(2).unwrap();
        let mut c = EdgeConductivities::zeros(mesh.n_edges());
        c.values[mesh.horizontal_edge(0, 0)] = 1.0;
        assert!((diffusive_term_2d(&mesh, &c, 1.0).unwrap() - 1.5).abs() < 1e-15);

        // 1D
        let mesh1 = Mesh1D::new(4).unwrap();
        let c1 = EdgeConductivities::from_values(vec![0.0, 1.0, 1.0, 3.0]);
        // h sum ((dC)/h)^2 = (1/h)(1 + 0 + 4) = 20
        assert!((diffusive_term_1d(&mesh1, &c1, 1.0).unwrap() - 20.0).abs() < 1e-13);
        assert!((diffusive_term_1d(&mesh1, &c1, 0.25).unwrap() - 5.0).abs() < 1e-13);
    }

    /// Independent oracle: integrate |grad Q|^2 region by region, with the
    /// gradient taken by centered differences of the interpolant evaluations
    /// strictly inside each linear piece.
    fn interpolant_dirichlet_energy(interp: &Interpolant2D, horizontal: bool) -> f64 {
        let n = interp.n();
        let h = interp.h();
        let delta = h / 8.0;
        let grad_sq = |x: f64, y: f64| {
            let gx = (interp.eval(x + delta, y) - interp.eval(x - delta, y)) / (2.0 * delta);
            let gy = (interp.eval(x, y + delta) - interp.eval(x, y - delta)) / (2.0 * delta);
            gx * gx + gy * gy
        };
        // canonical coordinates: u across the midpoint columns, v along them;
        // map to (x, y) depending on the axis
        let to_xy = |u: f64, v: f64| if horizontal { (u, v) } else { (v, u) };
        let mut acc = 0.0;
        // stripes: u in (0, h/2) and (1-h/2, 1), one cell per v-interval
        for j in 0..n {
            let vc = (j as f64 + 0.5) * h;
            for uc in [0.25 * h, 1.0 - 0.25 * h] {
                let (x, y) = to_xy(uc, vc);
                acc += 0.5 * h * h * grad_sq(x, y);
            }
        }
        // midpoint squares, two triangles each
        for i in 1..n {
            for j in 0..n {
                let u0 = (i as f64 - 0.5) * h;
                let v0 = j as f64 * h;
                // lower-left triangle centroid
                let (x, y) = to_xy(u0 + h / 3.0, v0 + h / 3.0);
                acc += 0.5 * h * h * grad_sq(x, y);
                // upper-right triangle centroid
                let (x, y) = to_xy(u0 + 2.0 * h / 3.0, v0 + 2.0 * h / 3.0);
                acc += 0.5 * h * h * grad_sq(x, y);
            }
        }
        acc
    }

    #[test]
    fn diffusive_equals_interpolant_dirichlet_energy() {
        for n in [1usize, 2, 3, 5] {
            let mesh = Mesh2D::new(n).unwrap();
            let c = EdgeConductivities::random(mesh.n_edges(), 100 + n as u64, 0.0, 3.0);
            let q1 = q1_2d(&mesh, &c).unwrap();
            let q2 = q2_2d(&mesh, &c).unwrap();
            let oracle =
                interpolant_dirichlet_energy(&q1, true) + interpolant_dirichlet_energy(&q2, false);
            let form = diffusive_term_2d(&mesh, &c, 1.0).unwrap();
            assert!(
                (oracle - form).abs() < 1e-10 * form.max(1.0),
                "n={n}: {form} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn diffusive_1d_equals_interpolant_energy() {
        let mesh = Mesh1D::new(6).unwrap();
        let c = EdgeConductivities::random(6, 55, 0.0, 2.0);
        let interp = crate::mesh::q1_1d(&mesh, &c).unwrap();
        let breaks = interp.breakpoints();
        let mut oracle = 0.0;
        for w in breaks.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let delta = 0.125 * (w[1] - w[0]);
            let g = (interp.eval(mid + delta) - interp.eval(mid - delta)) / (2.0 * delta);
            oracle += (w[1] - w[0]) * g * g;
        }
        let form = diffusive_term_1d(&mesh, &c, 1.0).unwrap();
        assert!((oracle - form).abs() < 1e-10 * form.max(1.0));
    }

    #[test]
    fn diffusive_gradient_matches_finite_differences() {
        let mesh = Mesh2D::new(3).unwrap();
        let c = EdgeConductivities::random(mesh.n_edges(), 8, 0.5, 2.0);
        let d2 = 0.7;
        let grad = diffusive_gradient_2d(&mesh, &c, d2).unwrap();
        let eps = 1e-6;
        for e in 0..mesh.n_edges() {
            let mut plus = c.clone();
            plus.values[e] += eps;
            let mut minus = c.clone();
            minus.values[e] -= eps;
            let fd = (diffusive_term_2d(&mesh, &plus, d2).unwrap()
                - diffusive_term_2d(&mesh, &minus, d2).unwrap())
                / (2.0 * eps);
            assert!((fd - grad[e]).abs() < 1e-6, "edge {e}: {fd} vs {}", grad[e]);
        }
    }

    #[test]
    fn smoothing_toward_mean_contracts_diffusive_part() {
        let mesh = Mesh2D::new(4).unwrap();
        let c = EdgeConductivities::random(mesh.n_edges(), 12, 0.0, 4.0);
        let mean = c.values.iter().sum::<f64>() / c.len() as f64;
        let base = diffusive_term_2d(&mesh, &c, 1.0).unwrap();
        for step in 1..=4 {
            let alpha = step as f64 / 4.0;
            let smoothed = EdgeConductivities::from_values(
                c.values.iter().map(|&v| v + alpha * (mean - v)).collect(),
            );
            let val = diffusive_term_2d(&mesh, &smoothed, 1.0).unwrap();
            assert!(val <= base + 1e-12, "alpha={alpha}: {val} > {base}");
        }
    }

    #[test]
    fn total_with_diffusion_reduces_to_discrete_when_d2_zero() {
        let mesh = Mesh2D::new(3).unwrap();
        let pr = params(1.5, 1.0, 0.5, 0.0);
        let quad = crate::quadrature::TriQuad::default();
        let s = crate::fem::project_source_2d(&mesh, |x, y| x - y, &quad);
        let c = EdgeConductivities::random(mesh.n_edges(), 2, 0.0, 2.0);
        let with = total_energy_with_diffusion_2d(&mesh, &c, &pr, &s, &tight()).unwrap();
        let without =
            discrete_energy_2d(&mesh, &c, &pr, &s, BoundaryMode::Integral, &tight()).unwrap();
        assert_eq!(with.diffusive, 0.0);
        assert!((with.total - without.total).abs() < 1e-14);
    }

    #[test]
    fn pumping_scales_quadratically_in_sources() {
        let mesh = Mesh1D::new(6).unwrap();
        let pr = params(1.2, 1.0, 0.3, 0.0);
        let base: Vec<f64> = (0..7)
            .map(|k| crate::rng::uniform(14, k, -1.0, 1.0))
            .collect();
        let s1 = DiscreteSources::zero_mean_from_values(SourceDim::OneD, base.clone());
        let s3 = DiscreteSources::zero_mean_from_values(
            SourceDim::OneD,
            base.iter().map(|v| 3.0 * v).collect(),
        );
        let c = EdgeConductivities::random(6, 15, 0.0, 2.0);
        let e1 = discrete_energy_1d(&mesh, &c, &pr, &s1, &tight()).unwrap();
        let e3 = discrete_energy_1d(&mesh, &c, &pr, &s3, &tight()).unwrap();
        assert!((e3.pumping - 9.0 * e1.pumping).abs() < 1e-9 * e3.pumping.max(1.0));
        assert!((e3.metabolic - e1.metabolic).abs() < 1e-13);
    }

    #[test]
    fn permeability_orthogonal_case_exact() {
        let p = permeability_tensor(0.1, 0.2, [1.0, 0.0], [0.0, 1.0], 0.7).unwrap();
        assert_eq!(p.eigenvalues[0], 0.7 + 0.2);
        assert_eq!(p.eigenvalues[1], 0.7 + 0.1);
        assert_eq!(p.eigenvectors[0], [0.0, 1.0]);
        assert_eq!(p.eigenvectors[1], [1.0, 0.0]);
    }

    #[test]
    fn permeability_sixty_degree_example() {
        let p = permeability_tensor(1.0, 1.0, [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0], 0.0).unwrap();
        assert!((p.eigenvalues[0] - 1.5).abs() < 1e-12);
        assert!((p.eigenvalues[1] - 0.5).abs() < 1e-12);
        let s3 = 3f64.sqrt() / 4.0;
        assert!((p.tensor[0][0] - 1.25).abs() < 1e-15);
        assert!((p.tensor[0][1] - s3).abs() < 1e-15);
        assert!((p.tensor[1][1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn permeability_eigen_cross_check_random() {
        for k in 0..10_000u64 {
            let c1 = crate::rng::uniform(1, 4 * k, 0.0, 5.0);
            let c2 = crate::rng::uniform(1, 4 * k + 1, 0.0, 5.0);
            let a1 = crate::rng::uniform(1, 4 * k + 2, 0.0, std::f64::consts::TAU);
            let mut a2 = crate::rng::uniform(1, 4 * k + 3, 0.0, std::f64::consts::TAU);
            if ((a1 - a2).sin()).abs() < 1e-3 {
                a2 += 0.5;
            }
            let th1 = [a1.cos(), a1.sin()];
            let th2 = [a2.cos(), a2.sin()];
            let r = crate::rng::uniform(2, k, 0.0, 1.0);
            let p = permeability_tensor(c1, c2, th1, th2, r).unwrap();
            // independent route: characteristic roots of the assembled tensor
            let [a, b] = [p.tensor[0][0], p.tensor[0][1]];
            let d = p.tensor[1][1];
            let tr = a + d;
            let det = a * d - b * b;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let lam1 = tr / 2.0 + disc;
            let lam2 = tr / 2.0 - disc;
            let scale = lam1.abs().max(1.0);
            assert!((p.eigenvalues[0] - lam1).abs() < 1e-12 * scale, "k={k}");
            assert!((p.eigenvalues[1] - lam2).abs() < 1e-12 * scale, "k={k}");
            // eigenvalues real and >= r
            assert!(p.eigenvalues[1] >= r - 1e-12 * scale);
            // eigenvector residual
            for (lam, v) in p.eigenvalues.iter().zip(p.eigenvectors.iter()) {
                let rx = a * v[0] + b * v[1] - lam * v[0];
                let ry = b * v[0] + d * v[1] - lam * v[1];
                assert!(rx.abs() < 1e-9 * scale && ry.abs() < 1e-9 * scale, "k={k}");
            }
        }
    }

    #[test]
    fn permeability_rejects_bad_input() {
        assert!(matches!(
            permeability_tensor(1.0, 1.0, [1.0, 0.0], [1.0, 0.0], 0.5),
            Err(Error::ParallelDirections)
        ));
        assert!(permeability_tensor(1.0, 1.0, [2.0, 0.0], [0.0, 1.0], 0.5).is_err());
        assert!(permeability_tensor(-1.0, 1.0, [1.0, 0.0], [0.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn flat_record_round_trips_through_json() {
        let rep = EnergyReport::new(1.5, 2.25, 0.125, EnergyVariant::Discrete2dIntegral);
        let pr = params(1.5, 1.0, 0.1, 0.01);
        let rec = rep.flat_record(8, &pr);
        let text = serde_json::to_string(&rec).unwrap();
        let back: FlatEnergyRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(rec, back);
    }
}
