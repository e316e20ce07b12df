//! Scenario files: the JSON experiment description shared by every CLI
//! subcommand. Unknown keys are rejected so a typo cannot silently change an
//! experiment.

use crate::energy::Params;
use crate::error::{Error, Result};
use crate::mesh::{q0_2d, EdgeConductivities, Mesh1D, Mesh2D, TensorField};
use crate::quadrature::TriQuad;
use crate::source::SourceSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Experiment description: problem data, mesh levels, conductivity
/// initializer and study-specific knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// 1 or 2.
    pub dimension: u8,
    pub source: SourceConfig,
    pub gamma: f64,
    pub nu: f64,
    pub r: f64,
    pub d2: f64,
    /// Mesh sizes, strictly increasing.
    pub levels: Vec<usize>,
    pub init: InitSpec,
    /// Perturbation amplitudes for the weak-strong check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    /// Projected-gradient tolerance for minimization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Final time for `flow`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Initial step size for `flow`/`minimize`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt0: Option<f64>,
    /// Common-grid resolution for minimizer-convergence comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample: Option<usize>,
    /// Emit SVG heatmaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plots: Option<bool>,
    /// Linear-solver relative tolerance override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

/// Conductivity initializer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Zero,
    Constant {
        value: f64,
    },
    Random {
        seed: u64,
        lo: f64,
        hi: f64,
    },
    /// A named smooth field; also the fixed target of refinement / recovery
    /// studies.
    Smooth {
        name: String,
    },
}

/// The closed family of named smooth conductivity fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothField {
    /// 1 + x (both tensor entries in 2D).
    OnePlusX,
    /// c1 = 1 + x^2, c2 = 1 + y^2 (1D: 1 + x^2).
    OnePlusSquares,
    /// c1 = c2 = 1 + x y (2D only).
    OnePlusXy,
}

impl SmoothField {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "one_plus_x" => Ok(SmoothField::OnePlusX),
            "one_plus_squares" => Ok(SmoothField::OnePlusSquares),
            "one_plus_xy" => Ok(SmoothField::OnePlusXy),
            other => Err(Error::BadScenario(format!(
                "unknown smooth field '{other}' (expected one_plus_x | one_plus_squares | one_plus_xy)"
            ))),
        }
    }

    pub fn supports_1d(&self) -> bool {
        !matches!(self, SmoothField::OnePlusXy)
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        match self {
            SmoothField::OnePlusX => 1.0 + x,
            SmoothField::OnePlusSquares => 1.0 + x * x,
            SmoothField::OnePlusXy => 1.0,
        }
    }

    pub fn c1(&self, x: f64, y: f64) -> f64 {
        match self {
            SmoothField::OnePlusX => 1.0 + x,
            SmoothField::OnePlusSquares => 1.0 + x * x,
            SmoothField::OnePlusXy => 1.0 + x * y,
        }
    }

    pub fn c2(&self, x: f64, y: f64) -> f64 {
        match self {
            SmoothField::OnePlusX => 1.0 + x,
            SmoothField::OnePlusSquares => 1.0 + y * y,
            SmoothField::OnePlusXy => 1.0 + x * y,
        }
    }
}

/// Per-triangle averages of a smooth diagonal tensor.
pub fn project_tensor_field(
    mesh: &Mesh2D,
    c1: impl Fn(f64, f64) -> f64,
    c2: impl Fn(f64, f64) -> f64,
    quad: &TriQuad,
) -> TensorField {
    let inv_area = 1.0 / mesh.triangle_area();
    let mut out = TensorField::zeros(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.triangle_coords(t);
        out.c1[t] = inv_area * quad.integrate(a, b, c, &c1);
        out.c2[t] = inv_area * quad.integrate(a, b, c, &c2);
    }
    out
}

/// Per-cell averages of a smooth 1D conductivity.
pub fn project_cell_field(mesh: &Mesh1D, c: impl Fn(f64) -> f64) -> crate::mesh::CellField {
    let h = mesh.h();
    let values = (0..mesh.n_cells())
        .map(|i| crate::quadrature::gauss16(mesh.node_x(i), mesh.node_x(i + 1), &mut |x| c(x)) / h)
        .collect();
    crate::mesh::CellField { values }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::BadScenario(format!("cannot read scenario file {}: {e}", path.display()))
        })?;
        let scenario: Scenario = serde_json::from_str(&text)
            .map_err(|e| Error::BadScenario(format!("{}: {e}", path.display())))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(Error::BadScenario(format!(
                "dimension must be 1 or 2, got {}",
                self.dimension
            )));
        }
        self.params()?;
        let spec = self.source_spec()?;
        if self.dimension == 1 && !spec.supports_1d() {
            return Err(Error::BadScenario(format!(
                "source family '{}' is 2D-only",
                self.source.family
            )));
        }
        if self.dimension == 2 && !spec.supports_2d() {
            return Err(Error::BadScenario(format!(
                "source family '{}' is 1D-only",
                self.source.family
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::BadScenario("levels must not be empty".into()));
        }
        if self.levels.iter().any(|&n| n == 0) {
            return Err(Error::BadScenario("levels must be positive".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadScenario(
                "levels must be strictly increasing".into(),
            ));
        }
        match &self.init {
            InitSpec::Constant { value } if *value < 0.0 => {
                return Err(Error::BadScenario(format!(
                    "constant initializer must be nonnegative, got {value}"
                )));
            }
            InitSpec::Random { lo, hi, .. } => {
                if *lo < 0.0 || hi < lo {
                    return Err(Error::BadScenario(format!(
                        "random initializer needs 0 <= lo <= hi, got [{lo}, {hi})"
                    )));
                }
            }
            InitSpec::Smooth { name } => {
                let field = SmoothField::parse(name)?;
                if self.dimension == 1 && !field.supports_1d() {
                    return Err(Error::BadScenario(format!(
                        "smooth field '{name}' is 2D-only"
                    )));
                }
            }
            _ => {}
        }
        if let Some(eps) = &self.eps {
            if eps.is_empty() || eps.iter().any(|&e| e < 0.0) {
                return Err(Error::BadScenario(
                    "eps must be a non-empty list of nonnegative amplitudes".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<Params> {
        Params::new(self.gamma, self.nu, self.r, self.d2)
    }

    pub fn source_spec(&self) -> Result<SourceSpec> {
        SourceSpec::parse(&self.source.family, &self.source.params)
    }

    pub fn smooth_field(&self) -> Result<SmoothField> {
        match &self.init {
            InitSpec::Smooth { name } => SmoothField::parse(name),
            other => Err(Error::BadScenario(format!(
                "this study needs init.kind = \"smooth\", got {other:?}"
            ))),
        }
    }

    /// Initial conductivities on a 1D mesh.
    pub fn init_conductivities_1d(&self, mesh: &Mesh1D) -> Result<EdgeConductivities> {
        let n = mesh.n_edges();
        Ok(match &self.init {
            InitSpec::Zero => EdgeConductivities::zeros(n),
            InitSpec::Constant { value } => EdgeConductivities::constant(n, *value),
            InitSpec::Random { seed, lo, hi } => EdgeConductivities::random(n, *seed, *lo, *hi),
            InitSpec::Smooth { name } => {
                let field = SmoothField::parse(name)?;
                let cell = project_cell_field(mesh, |x| field.eval_1d(x));
                crate::mesh::average_onto_edges_1d(mesh, &cell)?
            }
        })
    }

    /// Initial conductivities on a 2D mesh.
    pub fn init_conductivities_2d(&self, mesh: &Mesh2D) -> Result<EdgeConductivities> {
        let n = mesh.n_edges();
        Ok(match &self.init {
            InitSpec::Zero => EdgeConductivities::zeros(n),
            InitSpec::Constant { value } => EdgeConductivities::constant(n, *value),
            InitSpec::Random { seed, lo, hi } => EdgeConductivities::random(n, *seed, *lo, *hi),
            InitSpec::Smooth { name } => {
                let field = SmoothField::parse(name)?;
                let tensor = project_tensor_field(
                    mesh,
                    |x, y| field.c1(x, y),
                    |x, y| field.c2(x, y),
                    &TriQuad::default(),
                );
                crate::mesh::average_onto_edges_2d(mesh, &tensor)?
            }
        })
    }

    /// The fixed tensor field of refinement / recovery / weak-strong studies.
    pub fn target_tensor_field(&self, mesh: &Mesh2D) -> Result<TensorField> {
        Ok(match &self.init {
            InitSpec::Zero => TensorField::zeros(mesh.n_triangles()),
            InitSpec::Constant { value } => TensorField::constant(mesh.n_triangles(), *value),
            InitSpec::Random { seed, lo, hi } => {
                let c = EdgeConductivities::random(mesh.n_edges(), *seed, *lo, *hi);
                q0_2d(mesh, &c)?
            }
            InitSpec::Smooth { name } => {
                let field = SmoothField::parse(name)?;
                project_tensor_field(
                    mesh,
                    |x, y| field.c1(x, y),
                    |x, y| field.c2(x, y),
                    &TriQuad::default(),
                )
            }
        })
    }

    /// The fixed 1D cell field of refinement studies.
    pub fn target_cell_field(&self, mesh: &Mesh1D) -> Result<crate::mesh::CellField> {
        Ok(match &self.init {
            InitSpec::Zero => crate::mesh::CellField {
                values: vec![0.0; mesh.n_cells()],
            },
            InitSpec::Constant { value } => crate::mesh::CellField {
                values: vec![*value; mesh.n_cells()],
            },
            InitSpec::Random { seed, lo, hi } => crate::mesh::CellField {
                values: crate::rng::uniform_vec(*seed, 0, mesh.n_cells(), *lo, *hi),
            },
            InitSpec::Smooth { name } => {
                let field = SmoothField::parse(name)?;
                project_cell_field(mesh, |x| field.eval_1d(x))
            }
        })
    }

    /// Project the scenario source onto a 1D mesh.
    pub fn project_source_1d(&self, mesh: &Mesh1D) -> Result<crate::kirchhoff::DiscreteSources> {
        let spec = self.source_spec()?;
        Ok(crate::fem::project_source_1d(mesh, |x| spec.eval_1d(x)))
    }

    /// Project the scenario source onto a 2D mesh.
    pub fn project_source_2d(&self, mesh: &Mesh2D) -> Result<crate::kirchhoff::DiscreteSources> {
        let spec = self.source_spec()?;
        Ok(crate::fem::project_source_2d(
            mesh,
            |x, y| spec.eval_2d(x, y),
            &TriQuad::default(),
        ))
    }

    pub fn solver_config(&self) -> crate::kirchhoff::SolverConfig {
        match self.rel_tol {
            Some(tol) => crate::kirchhoff::SolverConfig::with_tol(tol),
            None => crate::kirchhoff::SolverConfig::default(),
        }
    }
}
