//! Dense row-major matrices and a cyclic Jacobi eigensolver for small
//! symmetric problems.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Eigengap below which the leading subspace is reported as ill-defined.
pub const MIN_EIGENGAP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch("matrix difference".into()));
        }
        Ok(Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// `(A + Aᵀ)/2`, exactly symmetric.
    pub fn symmetrize(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenpairs sorted by decreasing eigenvalue; `vectors` holds them as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Cyclic Jacobi rotations until the off-diagonal norm is below
/// `1e-14·max(1, ‖A‖_F)`.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymEigen> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", a.rows, a.cols)));
    }
    let n = a.rows;
    let mut m = a.symmetrize();
    let mut v = Matrix::identity(n);
    let target = 1e-14 * a.frobenius().max(1.0);
    let off = |m: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&m) > target {
        sweeps += 1;
        if sweeps > 100 {
            return Err(Error::NonConvergent { estimate: off(&m), error: target });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Orthonormal `n×r` basis of the eigenvectors of the `r` largest eigenvalues.
pub fn top_r_subspace(g: &Matrix, r: usize) -> Result<Matrix> {
    if r == 0 || r > g.rows {
        return Err(Error::DimensionMismatch(format!("r = {r} for a {}x{} matrix", g.rows, g.cols)));
    }
    let eig = symmetric_eigen(g)?;
    if r < g.rows {
        let gap = eig.values[r - 1] - eig.values[r];
        if gap < MIN_EIGENGAP {
            return Err(Error::DegenerateSpectrum(gap));
        }
    }
    Ok(Matrix::from_fn(g.rows, r, |i, j| eig.vectors[(i, j)]))
}

/// `‖P_A − P_B‖_F` for column-orthonormal `A`, `B`.
pub fn subspace_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch(format!("{} vs {} rows", a.rows, b.rows)));
    }
    let pa = a.matmul(&a.transpose())?;
    let pb = b.matmul(&b.transpose())?;
    Ok(pa.sub(&pb)?.frobenius())
}

/// Gram–Schmidt orthonormalisation of the columns (rank assumed full).
pub fn orthonormalize(a: &Matrix) -> Result<Matrix> {
    let mut q = a.clone();
    for j in 0..a.cols {
        for k in 0..j {
            let dot: f64 = (0..a.rows).map(|i| q[(i, j)] * q[(i, k)]).sum();
            for i in 0..a.rows {
                q[(i, j)] -= dot * q[(i, k)];
            }
        }
        let norm: f64 = (0..a.rows).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
        if !(norm > 1e-12) {
            return Err(Error::DegenerateSpectrum(norm));
        }
        for i in 0..a.rows {
            q[(i, j)] /= norm;
        }
    }
    Ok(q)
}
