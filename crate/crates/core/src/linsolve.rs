//! Conjugate-gradient solver for symmetric positive-semidefinite systems
//! whose null space is spanned by the all-ones vector.
//!
//! Every system assembled in this crate is a weighted graph Laplacian: rows
//! sum to zero, so compatibility of the right-hand side means zero sum, and
//! the solution is pinned down by the zero-average normalization. The CG
//! iteration is restricted to the zero-mean subspace by projecting the
//! right-hand side up front and re-projecting iterates every block of
//! iterations (and on exit) so roundoff cannot drift along the null vector.
//!
//! All inner products and matrix-vector products accumulate serially in index
//! order; results are bit-reproducible regardless of thread count.

use crate::error::{Error, Result};

/// Relative tolerance on |sum rhs| / ||rhs|| beyond which a right-hand side is
/// rejected as violating global mass conservation.
pub const COMPAT_TOL: f64 = 1e-8;

/// Iterations between explicit re-projections onto the zero-mean subspace.
const PROJECT_EVERY: usize = 50;

/// Symmetric sparse matrix in CSR form. Symmetry is exact by construction:
/// entries are only ever added through [`SymCsrBuilder::add_edge`] /
/// `add_diag`, which write both triangles.
#[derive(Debug, Clone)]
pub struct SymCsr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymCsr {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            out[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.matvec_into(x, &mut out);
        out
    }

    /// Entry (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col_idx[k] == j {
                return self.values[k];
            }
        }
        0.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Max absolute row sum of |entries|; upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.values[k].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                dense[i][self.col_idx[k]] += self.values[k];
            }
        }
        dense
    }
}

/// Accumulates symmetric edge contributions and produces a [`SymCsr`].
#[derive(Debug, Clone)]
pub struct SymCsrBuilder {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SymCsrBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
        }
    }

    /// Add the weighted graph-Laplacian block of an edge (a, b):
    /// `+w` on both diagonals, `-w` on both off-diagonals.
    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        self.triplets.push((a, a, w));
        self.triplets.push((b, b, w));
        self.triplets.push((a, b, -w));
        self.triplets.push((b, a, -w));
    }

    pub fn build(self) -> SymCsr {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in &self.triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut col_idx = vec![0usize; self.triplets.len()];
        let mut values = vec![0.0; self.triplets.len()];
        let mut cursor = counts.clone();
        for &(i, j, v) in &self.triplets {
            let k = cursor[i];
            col_idx[k] = j;
            values[k] = v;
            cursor[i] += 1;
        }
        // sort each row by column and merge duplicates
        let mut out_ptr = vec![0usize; n + 1];
        let mut out_col = Vec::with_capacity(col_idx.len());
        let mut out_val = Vec::with_capacity(values.len());
        for i in 0..n {
            let lo = counts[i];
            let hi = counts[i + 1];
            let mut row: Vec<(usize, f64)> = (lo..hi).map(|k| (col_idx[k], values[k])).collect();
            row.sort_by_key(|&(c, _)| c);
            let row_start = out_col.len();
            for (c, v) in row {
                if out_col.len() > row_start && *out_col.last().unwrap() == c {
                    *out_val.last_mut().unwrap() += v;
                } else {
                    out_col.push(c);
                    out_val.push(v);
                }
            }
            out_ptr[i + 1] = out_col.len();
        }
        SymCsr {
            n,
            row_ptr: out_ptr,
            col_idx: out_col,
            values: out_val,
        }
    }
}

/// A symmetric positive-semidefinite system with zero row sums and its
/// right-hand side.
#[derive(Debug, Clone)]
pub struct SparseSymSystem {
    pub matrix: SymCsr,
    pub rhs: Vec<f64>,
}

impl SparseSymSystem {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

/// Outcome of a zero-mean solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// ||A x - b|| / ||b|| at exit (0 when b = 0).
    pub rel_residual: f64,
    /// |sum rhs| as supplied, before projection.
    pub compat_defect: f64,
}

/// Options for [`solve_zero_mean_with`].
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Jacobi (diagonal) preconditioning.
    pub jacobi: bool,
    /// Initial guess (projected to zero mean internally).
    pub warm_start: Option<Vec<f64>>,
}

fn subtract_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` on the zero-mean subspace by conjugate gradients.
///
/// `max_iter = None` defaults to `20 n`. Returns the zero-average solution;
/// errors with [`Error::IncompatibleRhs`] when the right-hand side has a
/// nonzero sum and with [`Error::NoConvergence`] (carrying a rough condition
/// estimate) when the iteration cap is reached.
pub fn solve_zero_mean(
    system: &SparseSymSystem,
    rel_tol: f64,
    max_iter: Option<usize>,
) -> Result<SolveReport> {
    solve_zero_mean_with(system, rel_tol, max_iter, &SolveOptions::default())
}

pub fn solve_zero_mean_with(
    system: &SparseSymSystem,
    rel_tol: f64,
    max_iter: Option<usize>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let a = &system.matrix;
    let n = a.n();
    let max_iter = max_iter.unwrap_or(20 * n);

    let rhs_norm = norm(&system.rhs);
    let compat_defect = system.rhs.iter().sum::<f64>().abs();
    if rhs_norm == 0.0 {
        return Ok(SolveReport {
            solution: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
            compat_defect,
        });
    }
    if compat_defect > COMPAT_TOL * rhs_norm {
        return Err(Error::IncompatibleRhs {
            defect: compat_defect,
            tol: COMPAT_TOL * rhs_norm,
        });
    }

    let mut b = system.rhs.clone();
    subtract_mean(&mut b);

    let inv_diag: Option<Vec<f64>> = if opts.jacobi {
        Some(
            a.diagonal()
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        )
    } else {
        None
    };
    let precondition = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            Some(inv) => r.iter().zip(inv).map(|(x, m)| x * m).collect(),
            None => r.to_vec(),
        }
    };

    let mut x = match &opts.warm_start {
        Some(x0) if x0.len() == n => {
            let mut x = x0.clone();
            subtract_mean(&mut x);
            x
        }
        _ => vec![0.0; n],
    };

    let target = rel_tol * rhs_norm;
    let mut iterations = 0usize;
    let mut ap = vec![0.0; n];
    let mut r = vec![0.0; n];
    // track extremal Rayleigh quotients p'Ap / p'p for a cheap condition estimate
    let mut ray_min = f64::INFINITY;
    let mut ray_max: f64 = 0.0;

    // restart from the recomputed true residual: the recurrence residual
    // drifts from it near the attainable floor
    for _restart in 0..4 {
        a.matvec_into(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        subtract_mean(&mut r);
        if norm(&r) / rhs_norm <= rel_tol || iterations >= max_iter {
            break;
        }

        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut res = norm(&r);
        while res > target && iterations < max_iter {
            a.matvec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break; // numerically lost positivity on the subspace
            }
            let pp = dot(&p, &p);
            let ray = pap / pp;
            ray_min = ray_min.min(ray);
            ray_max = ray_max.max(ray);
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            if iterations.is_multiple_of(PROJECT_EVERY) {
                subtract_mean(&mut x);
                subtract_mean(&mut r);
            }
            z = precondition(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            res = norm(&r);
        }
        subtract_mean(&mut x);
    }

    // final true residual against the supplied (projected) rhs
    a.matvec_into(&x, &mut ap);
    let true_res = (0..n)
        .map(|i| (b[i] - ap[i]) * (b[i] - ap[i]))
        .sum::<f64>()
        .sqrt();
    let rel_residual = true_res / rhs_norm;

    if rel_residual > rel_tol {
        let cond_estimate = if ray_min.is_finite() && ray_min > 0.0 {
            a.gershgorin_bound() / ray_min
        } else {
            f64::INFINITY
        };
        return Err(Error::NoConvergence {
            iterations,
            rel_residual,
            cond_estimate,
        });
    }

    Ok(SolveReport {
        solution: x,
        iterations,
        rel_residual,
        compat_defect,
    })
}
