//! Sparse symmetric positive-definite systems and the two solvers used on
//! them: Jacobi-preconditioned conjugate gradients and a banded Cholesky
//! factorization. Both are checked against the same relative residual
//! contract on return.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the matrix from per-row `(column, value)` lists.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < dim);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { dim, row_ptr, cols, vals }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Largest `|r - c|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim).flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c))).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| {
            self.row(r).all(|(c, v)| {
                let t = self.row(c).find(|&(cc, _)| cc == r).map(|(_, v)| v).unwrap_or(0.0);
                (t - v).abs() <= tol * v.abs().max(1.0)
            })
        })
    }

    /// `‖Ax − b‖₂ / ‖b‖₂`, or the absolute residual when `b = 0`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        let r: f64 = ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let nb = norm(b);
        if nb > 0.0 {
            r / nb
        } else {
            r
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let nb = norm(b);
    if nb == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = (0..n)
        .map(|r| {
            let d = a.row(r).find(|&(c, _)| c == r).map(|(_, v)| v).unwrap_or(0.0);
            if d > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);

    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverFailure { iterations: it, residual: norm(&r) / nb });
        }
        let step = rz / pap;
        for k in 0..n {
            x[k] += step * p[k];
            r[k] -= step * ap[k];
        }
        if norm(&r) <= tol * nb {
            // The recursive residual drifts; confirm against the true one.
            let true_res = a.relative_residual(&x, b);
            if true_res <= tol {
                return Ok((x, SolveStats { iterations: it, relative_residual: true_res }));
            }
            r = b.iter().zip(a.mul_vec(&x)).map(|(b, ax)| b - ax).collect();
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::SolverFailure { iterations: max_iter, residual: a.relative_residual(&x, b) })
}

/// Cholesky factor `L` of a banded SPD matrix, stored row by row over the
/// columns `i - bandwidth ..= i`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    dim: usize,
    band: usize,
    lower: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let dim = a.dim();
        let band = a.bandwidth();
        let width = band + 1;
        let mut lower = vec![0.0; dim * width];
        // Column c of row r lives at r * width + (c + band - r).
        for r in 0..dim {
            for (c, v) in a.row(r) {
                if c <= r {
                    lower[r * width + c + band - r] = v;
                }
            }
        }
        for i in 0..dim {
            let lo_i = i.saturating_sub(band);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(band));
                let row_i = &lower[i * width + lo + band - i..i * width + j + band - i];
                let row_j = &lower[j * width + lo + band - j..j * width + band];
                let s = lower[i * width + j + band - i] - dot(row_i, row_j);
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::SolverFailure { iterations: i, residual: f64::NAN });
                    }
                    lower[i * width + band] = s.sqrt();
                } else {
                    lower[i * width + j + band - i] = s / lower[j * width + band];
                }
            }
        }
        Ok(BandedCholesky { dim, band, lower })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, band, width) = (self.dim, self.band, self.band + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(band);
            let row = &self.lower[i * width + lo + band - i..i * width + band];
            let s = y[i] - dot(row, &y[lo..i]);
            y[i] = s / self.lower[i * width + band];
        }
        for i in (0..n).rev() {
            y[i] /= self.lower[i * width + band];
            let lo = i.saturating_sub(band);
            let yi = y[i];
            for (k, l) in (lo..i).zip(&self.lower[i * width + lo + band - i..i * width + band]) {
                y[k] -= l * yi;
            }
        }
        y
    }
}
