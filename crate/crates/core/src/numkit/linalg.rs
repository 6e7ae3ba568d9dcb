use serde::{Deserialize, Serialize};

use super::{dot, norm, NumError};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ · self`, i.e. a row vector times the matrix.
    pub fn vecmat(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `(A + ridge·I) x = b` for symmetric positive definite `A` by
/// Cholesky factorization.
pub fn solve_spd(a: &Matrix, b: &[f64], ridge: f64) -> Result<Vec<f64>, NumError> {
    let n = a.rows;
    if a.cols != n {
        return Err(NumError::DimMismatch {
            expected: n,
            got: a.cols,
        });
    }
    if b.len() != n {
        return Err(NumError::DimMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let diag_ratio = {
        let d: Vec<f64> = (0..n).map(|i| a[(i, i)] + ridge).collect();
        let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    };
    // lower-triangular factor L with A + ridge·I = L Lᵀ
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut s = a[(j, j)] + ridge;
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(NumError::NotPositiveDefinite {
                pivot: j,
                value: s,
                ridge,
                diag_ratio,
            });
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

const EIG_MAX_ITERS: usize = 100_000;
const EIG_RESIDUAL: f64 = 1e-10;

/// Top-`k` eigenvectors (by eigenvalue magnitude) of a symmetric matrix via
/// power iteration with deflation.
///
/// Each vector is iterated until `‖Av − (vᵀAv)v‖ ≤ 1e-10·max(1, |λ|)` or
/// 100000 iterations. Returned vectors are orthonormal.
pub fn top_eigvecs(a: &Matrix, k: usize) -> Result<Vec<Vec<f64>>, NumError> {
    let d = a.rows;
    if a.cols != d {
        return Err(NumError::DimMismatch {
            expected: d,
            got: a.cols,
        });
    }
    if k > d {
        return Err(NumError::TooManyEigvecs { k, d });
    }
    let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(k);
    for idx in 0..k {
        // deterministic start: not orthogonal to any basis direction
        let mut v: Vec<f64> = (0..d)
            .map(|i| 1.0 + 0.1 * ((i * 7 + idx * 13) % 11) as f64)
            .collect();
        orthonormalize(&mut v, &found);
        if norm(&v) == 0.0 {
            v = (0..d).map(|i| if i == idx { 1.0 } else { 0.0 }).collect();
            orthonormalize(&mut v, &found);
        }
        for it in 0..EIG_MAX_ITERS {
            let mut w = a.matvec(&v);
            orthonormalize_against(&mut w, &found);
            let lambda = dot(&v, &w);
            let resid: f64 = w
                .iter()
                .zip(&v)
                .map(|(wi, vi)| (wi - lambda * vi).powi(2))
                .sum::<f64>()
                .sqrt();
            let wn = norm(&w);
            if wn <= 1e-300 * scale || wn == 0.0 {
                // remaining spectrum is zero; any orthonormal completion will do
                break;
            }
            for x in &mut w {
                *x /= wn;
            }
            // power iteration converges up to sign flips when λ < 0
            if dot(&w, &v) < 0.0 {
                for x in &mut w {
                    *x = -*x;
                }
            }
            v = w;
            if resid <= EIG_RESIDUAL * lambda.abs().max(1.0) {
                break;
            }
            if it + 1 == EIG_MAX_ITERS {
                log::warn!("power iteration for eigenvector {idx} stopped at residual {resid:e}");
            }
        }
        orthonormalize(&mut v, &found);
        found.push(v);
    }
    Ok(found)
}

fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            for (x, bi) in v.iter_mut().zip(b) {
                *x -= p * bi;
            }
        }
    }
}

fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) {
    orthonormalize_against(v, basis);
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}
