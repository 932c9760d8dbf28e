//! Compressed sparse row storage and a conjugate-gradient solver.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { nrows: n, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|(j, _)| *j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.get(r, r)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec(x, &mut y);
        y
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub rel_tol: f64,
    /// Defaults to ten times the number of unknowns when `None`.
    pub max_iter: Option<usize>,
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { rel_tol: 1e-10, max_iter: None, jacobi: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
    /// Smallest observed `p·Ap / p·p`; positive for an SPD matrix.
    pub min_curvature: f64,
}

/// Solve `A x = b` for symmetric positive definite `A`, starting from zero.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], opts: CgOptions) -> Result<CgOutcome> {
    let n = a.nrows();
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, rel_residual: 0.0, min_curvature: f64::INFINITY });
    }
    let inv_diag: Option<Vec<f64>> = opts.jacobi.then(|| a.diagonal().iter().map(|d| 1.0 / d).collect());
    let precondition = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            Some(d) => r.iter().zip(d).map(|(r, d)| r * d).collect(),
            None => r.to_vec(),
        }
    };

    let mut r = b.to_vec();
    let mut zr = precondition(&r);
    let mut p = zr.clone();
    let mut rz = dot(&r, &zr);
    let mut ap = vec![0.0; n];
    let mut min_curvature = f64::INFINITY;

    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        min_curvature = min_curvature.min(pap / dot(&p, &p));
        if pap <= 0.0 {
            return Err(Error::SolverFailure { iterations: it, residual: norm(&r) / b_norm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / b_norm;
        if rel <= opts.rel_tol {
            return Ok(CgOutcome { x, iterations: it, rel_residual: rel, min_curvature });
        }
        zr = precondition(&r);
        let rz_new = dot(&r, &zr);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = zr[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure { iterations: max_iter, residual: norm(&r) / b_norm })
}
