//! Equidistant meshes on [0,1] and [0,1]^2 and the discrete <-> field
//! reconstruction operators.
//!
//! The 2D mesh is the uniform Courant triangulation: every unit-square cell of
//! the N x N grid is split along its NW->SE diagonal into a *lower* triangle
//! (vertices SW, SE, NW of the cell) and an *upper* triangle (vertices NE, SE,
//! NW). Every triangle has exactly one horizontal and one vertical graph edge
//! among its sides; the diagonal is not a graph edge. Around an interior node
//! the six adjacent triangles carry the orientation labels NE, SE, S, SW, NW, N.
//!
//! Edge indexing is global and deterministic: horizontal edges first in
//! row-major order, then vertical edges in row-major order.

use crate::error::{Error, Result};
use crate::rng;

/// Equidistant mesh on [0,1] with `n_cells` cells of width `h = 1/n_cells`.
///
/// Nodes are `x_i = i*h` for `i = 0..=n_cells`; edge `i` (1-based in the
/// formulas, 0-based here) connects `x_i` and `x_{i+1}` and doubles as cell
/// `(x_i, x_{i+1})`.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    n_cells: usize,
    h: f64,
}

impl Mesh1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidMeshSize(0));
        }
        Ok(Self {
            n_cells,
            h: 1.0 / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn n_edges(&self) -> usize {
        self.n_cells
    }

    pub fn node_x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Midpoint of cell `i`, i.e. `x_{i+1} - h/2`.
    pub fn cell_midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }
}

/// Orientation of a triangle relative to one of its vertices.
///
/// The canonical tag stored on each triangle uses `NE` (lower triangle,
/// anchored at the cell's SW corner) or `SW` (upper triangle, anchored at the
/// cell's NE corner); the full set appears when enumerating the triangles
/// around a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriOrientation {
    NE,
    SE,
    S,
    SW,
    NW,
    N,
}

/// One triangle of the Courant triangulation.
///
/// `hnodes` stores the horizontal edge's endpoints as (west, east) and
/// `vnodes` the vertical edge's as (south, north), so the constant gradient of
/// a P1 function `u` on the triangle is
/// `((u[east]-u[west])/h, (u[north]-u[south])/h)`.
#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    /// Node this triangle is canonically attached to (SW corner for lower
    /// triangles, NE corner for upper ones).
    pub anchor: usize,
    /// `NE` for lower triangles, `SW` for upper ones.
    pub orientation: TriOrientation,
    pub vertices: [usize; 3],
    /// Global index of the horizontal edge.
    pub hedge: usize,
    /// Global index of the vertical edge.
    pub vedge: usize,
    /// Horizontal edge endpoints (west, east).
    pub hnodes: (usize, usize),
    /// Vertical edge endpoints (south, north).
    pub vnodes: (usize, usize),
}

/// Which family a global edge index decodes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

/// Equidistant rectangular mesh on [0,1]^2 with its Courant triangulation.
///
/// Node `i` sits at `((i mod N+1)h, (i div N+1)h)`. There are `(N+1)^2` nodes,
/// `N(N+1)` horizontal and `N(N+1)` vertical edges, and `2N^2` triangles of
/// area `h^2/2` each.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    n: usize,
    h: f64,
    triangles: Vec<Triangle>,
}

impl Mesh2D {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMeshSize(0));
        }
        let h = 1.0 / n as f64;
        let node = |i: usize, j: usize| j * (n + 1) + i;
        let hedge = |i: usize, j: usize| j * n + i;
        let vedge = |i: usize, j: usize| n * (n + 1) + j * (n + 1) + i;

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                // Lower triangle of cell (i,j): SW, SE, NW corners.
                triangles.push(Triangle {
                    anchor: node(i, j),
                    orientation: TriOrientation::NE,
                    vertices: [node(i, j), node(i + 1, j), node(i, j + 1)],
                    hedge: hedge(i, j),
                    vedge: vedge(i, j),
                    hnodes: (node(i, j), node(i + 1, j)),
                    vnodes: (node(i, j), node(i, j + 1)),
                });
                // Upper triangle of cell (i,j): NE, SE, NW corners.
                triangles.push(Triangle {
                    anchor: node(i + 1, j + 1),
                    orientation: TriOrientation::SW,
                    vertices: [node(i + 1, j + 1), node(i + 1, j), node(i, j + 1)],
                    hedge: hedge(i, j + 1),
                    vedge: vedge(i + 1, j),
                    hnodes: (node(i, j + 1), node(i + 1, j + 1)),
                    vnodes: (node(i + 1, j), node(i + 1, j + 1)),
                });
            }
        }
        Ok(Self { n, h, triangles })
    }

    pub fn n_cells_per_side(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn n_horizontal_edges(&self) -> usize {
        self.n * (self.n + 1)
    }

    pub fn n_vertical_edges(&self) -> usize {
        self.n * (self.n + 1)
    }

    pub fn n_edges(&self) -> usize {
        2 * self.n * (self.n + 1)
    }

    pub fn n_triangles(&self) -> usize {
        2 * self.n * self.n
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Area of every triangle, `h^2/2`.
    pub fn triangle_area(&self) -> f64 {
        0.5 * self.h * self.h
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Grid coordinates (i, j) of a node index.
    pub fn node_ij(&self, idx: usize) -> (usize, usize) {
        (idx % (self.n + 1), idx / (self.n + 1))
    }

    pub fn node_xy(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(idx);
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// Global index of the horizontal edge from node (i,j) to (i+1,j).
    pub fn horizontal_edge(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j <= self.n);
        j * self.n + i
    }

    /// Global index of the vertical edge from node (i,j) to (i,j+1).
    pub fn vertical_edge(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n && j < self.n);
        self.n * (self.n + 1) + j * (self.n + 1) + i
    }

    /// Decode a global edge index into (kind, i, j).
    pub fn edge_decode(&self, e: usize) -> (EdgeKind, usize, usize) {
        let nh = self.n_horizontal_edges();
        if e < nh {
            (EdgeKind::Horizontal, e % self.n, e / self.n)
        } else {
            let k = e - nh;
            (EdgeKind::Vertical, k % (self.n + 1), k / (self.n + 1))
        }
    }

    /// Endpoints of a global edge, oriented (west, east) or (south, north).
    pub fn edge_nodes(&self, e: usize) -> (usize, usize) {
        let (kind, i, j) = self.edge_decode(e);
        match kind {
            EdgeKind::Horizontal => (self.node_index(i, j), self.node_index(i + 1, j)),
            EdgeKind::Vertical => (self.node_index(i, j), self.node_index(i, j + 1)),
        }
    }

    /// Midpoint coordinates of a global edge.
    pub fn edge_midpoint(&self, e: usize) -> (f64, f64) {
        let (kind, i, j) = self.edge_decode(e);
        match kind {
            EdgeKind::Horizontal => ((i as f64 + 0.5) * self.h, j as f64 * self.h),
            EdgeKind::Vertical => (i as f64 * self.h, (j as f64 + 0.5) * self.h),
        }
    }

    /// Triangle indices adjacent to a global edge (1 for boundary-tangential
    /// edges, 2 otherwise). The triangle at index `2*(j*n+i)` is the lower
    /// triangle of cell (i,j), at `+1` the upper one.
    pub fn edge_triangles(&self, e: usize) -> Vec<usize> {
        let lower = |i: usize, j: usize| 2 * (j * self.n + i);
        let upper = |i: usize, j: usize| 2 * (j * self.n + i) + 1;
        let (kind, i, j) = self.edge_decode(e);
        let mut out = Vec::with_capacity(2);
        match kind {
            EdgeKind::Horizontal => {
                if j < self.n {
                    out.push(lower(i, j));
                }
                if j > 0 {
                    out.push(upper(i, j - 1));
                }
            }
            EdgeKind::Vertical => {
                if i < self.n {
                    out.push(lower(i, j));
                }
                if i > 0 {
                    out.push(upper(i - 1, j));
                }
            }
        }
        out
    }

    /// Triangle-area weight of an edge: `h^2` when two triangles share it,
    /// `h^2/2` on the boundary.
    pub fn edge_weight(&self, e: usize) -> f64 {
        self.edge_triangles(e).len() as f64 * 0.5 * self.h * self.h
    }

    /// The up-to-six triangles adjacent to a node, labeled by their
    /// orientation relative to that node.
    pub fn node_triangles(&self, idx: usize) -> Vec<(TriOrientation, usize)> {
        let n = self.n;
        let (i, j) = self.node_ij(idx);
        let lower = |i: usize, j: usize| 2 * (j * n + i);
        let upper = |i: usize, j: usize| 2 * (j * n + i) + 1;
        let mut out = Vec::with_capacity(6);
        if i < n && j < n {
            out.push((TriOrientation::NE, lower(i, j)));
        }
        if i < n && j > 0 {
            out.push((TriOrientation::SE, upper(i, j - 1)));
            out.push((TriOrientation::S, lower(i, j - 1)));
        }
        if i > 0 && j > 0 {
            out.push((TriOrientation::SW, upper(i - 1, j - 1)));
        }
        if i > 0 && j < n {
            out.push((TriOrientation::NW, lower(i - 1, j)));
            out.push((TriOrientation::N, upper(i - 1, j)));
        }
        out
    }

    /// Edges incident to a node as (edge index, neighbor node) pairs, in
    /// E, W, N, S order (absent directions skipped).
    pub fn node_neighbors(&self, idx: usize) -> Vec<(usize, usize)> {
        let n = self.n;
        let (i, j) = self.node_ij(idx);
        let mut out = Vec::with_capacity(4);
        if i < n {
            out.push((self.horizontal_edge(i, j), self.node_index(i + 1, j)));
        }
        if i > 0 {
            out.push((self.horizontal_edge(i - 1, j), self.node_index(i - 1, j)));
        }
        if j < n {
            out.push((self.vertical_edge(i, j), self.node_index(i, j + 1)));
        }
        if j > 0 {
            out.push((self.vertical_edge(i, j - 1), self.node_index(i, j - 1)));
        }
        out
    }

    /// Whether a node lies strictly inside the domain.
    pub fn is_interior_node(&self, idx: usize) -> bool {
        let (i, j) = self.node_ij(idx);
        i > 0 && i < self.n && j > 0 && j < self.n
    }

    /// Coordinates of a triangle's vertices.
    pub fn triangle_coords(&self, t: usize) -> [(f64, f64); 3] {
        let tri = &self.triangles[t];
        [
            self.node_xy(tri.vertices[0]),
            self.node_xy(tri.vertices[1]),
            self.node_xy(tri.vertices[2]),
        ]
    }
}

/// One nonnegative conductivity per graph edge, in global edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeConductivities {
    pub values: Vec<f64>,
}

impl EdgeConductivities {
    pub fn zeros(n_edges: usize) -> Self {
        Self {
            values: vec![0.0; n_edges],
        }
    }

    pub fn constant(n_edges: usize, value: f64) -> Self {
        Self {
            values: vec![value; n_edges],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Seeded counter-based uniform draws in `[lo, hi)`.
    pub fn random(n_edges: usize, seed: u64, lo: f64, hi: f64) -> Self {
        Self {
            values: rng::uniform_vec(seed, 0, n_edges, lo, hi),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Validate length against the expected edge count and nonnegativity.
    pub fn check(&self, n_edges: usize) -> Result<()> {
        if self.values.len() != n_edges {
            return Err(Error::SizeMismatch {
                what: "edge conductivities",
                expected: n_edges,
                got: self.values.len(),
            });
        }
        for (index, &value) in self.values.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeConductivity { index, value });
            }
        }
        Ok(())
    }
}

/// Piecewise-constant scalar conductivity per 1D cell (the 1D degeneration of
/// the diagonal tensor field).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub values: Vec<f64>,
}

impl CellField {
    pub fn check(&self, mesh: &Mesh1D) -> Result<()> {
        if self.values.len() != mesh.n_cells() {
            return Err(Error::SizeMismatch {
                what: "cell field",
                expected: mesh.n_cells(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Piecewise-constant diagonal 2x2 tensor field: one (c1, c2) pair per
/// triangle, in triangle order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl TensorField {
    pub fn zeros(n_triangles: usize) -> Self {
        Self {
            c1: vec![0.0; n_triangles],
            c2: vec![0.0; n_triangles],
        }
    }

    pub fn constant(n_triangles: usize, value: f64) -> Self {
        Self {
            c1: vec![value; n_triangles],
            c2: vec![value; n_triangles],
        }
    }

    pub fn check(&self, mesh: &Mesh2D) -> Result<()> {
        let nt = mesh.n_triangles();
        if self.c1.len() != nt || self.c2.len() != nt {
            return Err(Error::SizeMismatch {
                what: "tensor field",
                expected: nt,
                got: self.c1.len().min(self.c2.len()),
            });
        }
        for (index, &value) in self.c1.iter().chain(self.c2.iter()).enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeConductivity {
                    index: index % nt,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Q0 in 1D: conductivities become the piecewise-constant cell field.
pub fn q0_1d(mesh: &Mesh1D, c: &EdgeConductivities) -> Result<CellField> {
    c.check(mesh.n_edges())?;
    Ok(CellField {
        values: c.values.clone(),
    })
}

/// Q0 in 2D: on every triangle, c1 takes the conductivity of the triangle's
/// horizontal edge and c2 that of its vertical edge.
pub fn q0_2d(mesh: &Mesh2D, c: &EdgeConductivities) -> Result<TensorField> {
    c.check(mesh.n_edges())?;
    let mut c1 = Vec::with_capacity(mesh.n_triangles());
    let mut c2 = Vec::with_capacity(mesh.n_triangles());
    for tri in mesh.triangles() {
        c1.push(c.values[tri.hedge]);
        c2.push(c.values[tri.vedge]);
    }
    Ok(TensorField { c1, c2 })
}

/// Adjoint-direction projection: each edge receives the mean of the relevant
/// tensor entry over its adjacent triangles (single triangle on the boundary).
pub fn average_onto_edges_2d(mesh: &Mesh2D, field: &TensorField) -> Result<EdgeConductivities> {
    field.check(mesh)?;
    let nh = mesh.n_horizontal_edges();
    let mut values = vec![0.0; mesh.n_edges()];
    for (e, value) in values.iter_mut().enumerate() {
        let tris = mesh.edge_triangles(e);
        let comp = if e < nh { &field.c1 } else { &field.c2 };
        *value = tris.iter().map(|&t| comp[t]).sum::<f64>() / tris.len() as f64;
    }
    Ok(EdgeConductivities { values })
}

/// 1D counterpart: cells coincide with edges, so this is the cell average.
pub fn average_onto_edges_1d(mesh: &Mesh1D, field: &CellField) -> Result<EdgeConductivities> {
    field.check(mesh)?;
    Ok(EdgeConductivities {
        values: field.values.clone(),
    })
}

/// Continuous piecewise-linear interpolant of 1D conductivities through the
/// cell midpoints, constant on the two boundary half-cells.
#[derive(Debug, Clone)]
pub struct Interpolant1D {
    h: f64,
    values: Vec<f64>,
}

impl Interpolant1D {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let half = 0.5 * self.h;
        if x <= half {
            return self.values[0];
        }
        if x >= 1.0 - half {
            return self.values[n - 1];
        }
        // between midpoints m_i = (i + 1/2) h, i = 0..n-1
        let s = (x - half) / self.h;
        let i = (s.floor() as usize).min(n - 2);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Breakpoints of the piecewise-linear structure (for quadrature
    /// partitioning): 0, the midpoints, 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let n = self.values.len();
        let mut out = Vec::with_capacity(n + 2);
        out.push(0.0);
        for i in 0..n {
            out.push((i as f64 + 0.5) * self.h);
        }
        out.push(1.0);
        out
    }
}

/// Q1 in 1D.
pub fn q1_1d(mesh: &Mesh1D, c: &EdgeConductivities) -> Result<Interpolant1D> {
    c.check(mesh.n_edges())?;
    Ok(Interpolant1D {
        h: mesh.h(),
        values: c.values.clone(),
    })
}

/// Which edge family a 2D midpoint interpolant runs through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolantAxis {
    /// Horizontal-edge midpoints; boundary stripes at x in (0,h/2) and (1-h/2,1).
    Horizontal,
    /// Vertical-edge midpoints; boundary stripes at y in (0,h/2) and (1-h/2,1).
    Vertical,
}

/// Continuous piecewise-linear interpolant of 2D edge conductivities through
/// edge midpoints (Q1 for horizontal edges, Q2 for vertical ones).
///
/// Between midpoints the function is linear on the two NW->SE-split triangles
/// of each midpoint square; on the two boundary stripes it is constant across
/// the stripe and linear along it.
#[derive(Debug, Clone)]
pub struct Interpolant2D {
    n: usize,
    h: f64,
    axis: InterpolantAxis,
    /// Horizontal axis: value at M_{i+1/2, j} = c[j*n + i], i < n, j <= n.
    /// Vertical axis: value at M_{i, j+1/2} = c[j*(n+1) + i], i <= n, j < n.
    values: Vec<f64>,
}

impl Interpolant2D {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn axis(&self) -> InterpolantAxis {
        self.axis
    }

    fn value_at(&self, i: usize, j: usize) -> f64 {
        match self.axis {
            InterpolantAxis::Horizontal => self.values[j * self.n + i],
            InterpolantAxis::Vertical => self.values[j * (self.n + 1) + i],
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.axis {
            InterpolantAxis::Horizontal => self.eval_canonical(x, y),
            // The vertical construction is the x<->y swap of the horizontal one.
            InterpolantAxis::Vertical => self.eval_canonical(y, x),
        }
    }

    /// Evaluate in canonical coordinates where `u` runs across the midpoint
    /// rows (stripes at u in (0,h/2) and (1-h/2,1)) and `v` along them.
    fn eval_canonical(&self, u: f64, v: f64) -> f64 {
        let n = self.n;
        let h = self.h;
        let half = 0.5 * h;
        // midpoint lattice value, canonical (a, b): a in 0..n across, b in 0..=n along
        let val = |a: usize, b: usize| match self.axis {
            InterpolantAxis::Horizontal => self.value_at(a, b),
            InterpolantAxis::Vertical => self.value_at(b, a),
        };
        let clamp_cell = |t: f64, cells: usize| -> (usize, f64) {
            let s = t.clamp(0.0, cells as f64 * h) / h;
            let k = (s.floor() as usize).min(cells - 1);
            (k, s - k as f64)
        };
        if u <= half {
            let (j, eta) = clamp_cell(v, n);
            return val(0, j) * (1.0 - eta) + val(0, j + 1) * eta;
        }
        if u >= 1.0 - half {
            let (j, eta) = clamp_cell(v, n);
            return val(n - 1, j) * (1.0 - eta) + val(n - 1, j + 1) * eta;
        }
        // midpoint square W_{ij} = [(i-1/2)h, (i+1/2)h] x [jh, (j+1)h], i in 1..n-1
        let s = (u - half) / h;
        let i = (s.floor() as usize).min(n - 2); // left midpoint column index i-1/2 -> (i-1) in 0-based
        let xi = s - i as f64;
        let (j, eta) = clamp_cell(v, n);
        let a = val(i, j); // SW corner of the midpoint square
        let b = val(i + 1, j); // SE
        let c = val(i, j + 1); // NW
        let d = val(i + 1, j + 1); // NE
        if xi + eta <= 1.0 {
            a + (b - a) * xi + (c - a) * eta
        } else {
            d + (c - d) * (1.0 - xi) + (b - d) * (1.0 - eta)
        }
    }
}

/// Q1 in 2D: interpolant through horizontal-edge midpoints.
pub fn q1_2d(mesh: &Mesh2D, c: &EdgeConductivities) -> Result<Interpolant2D> {
    c.check(mesh.n_edges())?;
    Ok(Interpolant2D {
        n: mesh.n_cells_per_side(),
        h: mesh.h(),
        axis: InterpolantAxis::Horizontal,
        values: c.values[..mesh.n_horizontal_edges()].to_vec(),
    })
}

/// Q2 in 2D: interpolant through vertical-edge midpoints.
pub fn q2_2d(mesh: &Mesh2D, c: &EdgeConductivities) -> Result<Interpolant2D> {
    c.check(mesh.n_edges())?;
    Ok(Interpolant2D {
        n: mesh.n_cells_per_side(),
        h: mesh.h(),
        axis: InterpolantAxis::Vertical,
        values: c.values[mesh.n_horizontal_edges()..].to_vec(),
    })
}
