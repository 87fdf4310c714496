//! Global sparse system over the interior centers.
//!
//! Boundary centers carry no unknowns: their Dirichlet values are moved to
//! the right-hand side. Rows follow increasing interior center id.

use crate::centers::CenterSet;
use crate::rbf::StencilWeights;
use crate::stencil::Stencil;
use crate::{Point2, Real};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use rayon::prelude::*;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("no stencil for interior center {center}")]
    MissingStencil { center: usize },
    #[error("weight row of center {center} has {got} entries, stencil has {expected}")]
    WeightMismatch { center: usize, got: usize, expected: usize },
    #[error("empty system (no interior centers)")]
    Empty,
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("solution not accurate: relative residual {residual:e} (max |x| {max_abs:e})")]
    Residual { residual: f64, max_abs: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseSystem<T> {
    /// `rows[r]` is the center id of row `r`.
    rows: Vec<usize>,
    /// `row_of[id]` is the row of an interior center.
    row_of: Vec<Option<usize>>,
    /// `(row, column, value)`, grouped by row in stencil order.
    entries: Vec<(usize, usize, T)>,
    rhs: Vec<T>,
    /// `g` at every boundary center, `None` for interior ones.
    boundary_values: Vec<Option<T>>,
}

impl<T: Real> SparseSystem<T> {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_centers(&self) -> &[usize] {
        &self.rows
    }

    pub fn row_of(&self, center: usize) -> Option<usize> {
        self.row_of.get(center).copied().flatten()
    }

    pub fn entries(&self) -> &[(usize, usize, T)] {
        &self.entries
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn boundary_value(&self, center: usize) -> Option<T> {
        self.boundary_values.get(center).copied().flatten()
    }

    /// Dense copy of the matrix (small systems only).
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.n_rows();
        let mut a = vec![vec![T::zero(); n]; n];
        for &(r, c, v) in &self.entries {
            a[r][c] += v;
        }
        a
    }

    /// `A x`
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n_rows()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Writes `row col value` lines, zero-based, one entry per line.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "% {} {} {}", self.n_rows(), self.n_rows(), self.entries.len())?;
        for &(r, c, v) in &self.entries {
            writeln!(out, "{} {} {:.17e}", r, c, v.as_f64())?;
        }
        Ok(())
    }
}

/// Entries of one row and its right-hand side.
type RowEntries<T> = (Vec<(usize, usize, T)>, T);

/// Builds `A û_int = b` with `A[ζ,ξ] = w_{ζ,ξ}` for interior ξ and
/// `b_ζ = f(ζ) − Σ_{ξ ∈ ∂Ξ ∩ Ξ_ζ} w_{ζ,ξ} g(ξ)`.
///
/// `weights[i]` belongs to `stencils[i]`; stencils may come in any order.
pub fn assemble<T, F, G>(
    set: &CenterSet<T>,
    stencils: &[Stencil<T>],
    weights: &[StencilWeights<T>],
    f: F,
    g: G,
) -> Result<SparseSystem<T>, SystemError>
where
    T: Real,
    F: Fn(Point2<T>) -> T + Sync,
    G: Fn(Point2<T>) -> T + Sync,
{
    let rows: Vec<usize> = set.interior_ids().collect();
    if rows.is_empty() {
        return Err(SystemError::Empty);
    }
    let mut row_of = vec![None; set.len()];
    for (r, &id) in rows.iter().enumerate() {
        row_of[id] = Some(r);
    }
    let mut by_center = vec![None; set.len()];
    for (i, s) in stencils.iter().enumerate() {
        if s.center < set.len() {
            by_center[s.center] = Some(i);
        }
    }
    let boundary_values: Vec<Option<T>> = (0..set.len())
        .into_par_iter()
        .map(|id| set.is_boundary(id).then(|| g(set.point(id))))
        .collect();

    let built: Result<Vec<RowEntries<T>>, SystemError> = rows
        .par_iter()
        .enumerate()
        .map(|(r, &id)| {
            let si = by_center[id].ok_or(SystemError::MissingStencil { center: id })?;
            let stencil = &stencils[si];
            let w = weights
                .get(si)
                .ok_or(SystemError::MissingStencil { center: id })?;
            let support: Vec<usize> = stencil.support().collect();
            if w.weights.len() != support.len() {
                return Err(SystemError::WeightMismatch {
                    center: id,
                    got: w.weights.len(),
                    expected: support.len(),
                });
            }
            let mut entries = Vec::with_capacity(support.len());
            let mut b = f(set.point(id));
            for (&xi, &wi) in support.iter().zip(&w.weights) {
                match (row_of[xi], boundary_values[xi]) {
                    (Some(c), _) => entries.push((r, c, wi)),
                    (None, Some(gv)) => b -= wi * gv,
                    (None, None) => unreachable!("center is neither interior nor boundary"),
                }
            }
            Ok((entries, b))
        })
        .collect();

    let mut entries = Vec::new();
    let mut rhs = Vec::with_capacity(rows.len());
    for (e, b) in built? {
        entries.extend(e);
        rhs.push(b);
    }
    Ok(SparseSystem {
        rows,
        row_of,
        entries,
        rhs,
        boundary_values,
    })
}

/// Values `û_ξ` for every center, interior ones from the solve and boundary
/// ones equal to `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSolution<T> {
    pub values: Vec<T>,
    /// Relative residual `‖Aû − b‖ / ‖b‖`, or `‖Aû‖` when `b = 0`.
    pub residual: T,
}

impl<T: Real> DiscreteSolution<T> {
    pub fn value(&self, id: usize) -> T {
        self.values[id]
    }
}

const RESIDUAL_TOL: f64 = 1e-10;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse LU with partial pivoting, computed in double precision, followed by
/// up to three steps of iterative refinement.
pub fn solve<T: Real>(system: &SparseSystem<T>) -> Result<DiscreteSolution<T>, SystemError> {
    let n = system.n_rows();
    if n == 0 {
        return Err(SystemError::Empty);
    }
    let triplets: Vec<Triplet<usize, usize, f64>> = system
        .entries
        .iter()
        .map(|&(r, c, v)| Triplet::new(r, c, v.as_f64()))
        .collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| SystemError::Factorization(format!("{e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| SystemError::Factorization(format!("{e:?}")))?;
    let b: Vec<f64> = system.rhs.iter().map(|v| v.as_f64()).collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for t in &triplets {
            y[t.row] += t.val * x[t.col];
        }
        y
    };
    let solve_col = |rhs: &[f64]| -> Vec<f64> {
        let x = lu.solve(&Col::from_fn(n, |i| rhs[i]));
        (0..n).map(|i| x[i]).collect()
    };

    let b_norm = norm2(&b);
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut x = solve_col(&b);
    let residual_of = |x: &[f64]| -> (Vec<f64>, f64) {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rn = norm2(&r) / scale;
        (r, rn)
    };
    let (mut r, mut rel) = residual_of(&x);
    for _ in 0..3 {
        if !rel.is_finite() || rel <= RESIDUAL_TOL * 1e-2 {
            break;
        }
        let dx = solve_col(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let (r2, rel2) = residual_of(&candidate);
        if !(rel2 < rel) {
            break;
        }
        x = candidate;
        r = r2;
        rel = rel2;
    }
    let _ = r;
    let max_abs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !rel.is_finite() || !max_abs.is_finite() || rel > RESIDUAL_TOL {
        return Err(SystemError::Residual {
            residual: rel,
            max_abs,
        });
    }

    let values = system
        .boundary_values
        .iter()
        .enumerate()
        .map(|(id, g)| match (g, system.row_of[id]) {
            (Some(v), _) => *v,
            (None, Some(row)) => T::lit(x[row]),
            (None, None) => T::nan(),
        })
        .collect();
    Ok(DiscreteSolution {
        values,
        residual: T::lit(rel),
    })
}
