//! Dense row-major matrices and Cholesky factorization.
//!
//! Dimensions here are tens to low hundreds, so everything is dense and
//! straightforward. Closed forms elsewhere in the crate supply the fast paths;
//! these routines are the reference route they are checked against.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// General dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from a 0-based index function.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += aik * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entrywise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }
}

/// Dense symmetric covariance matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawCov", into = "RawCov"))]
pub struct CovMatrix {
    dim: usize,
    entries: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCov {
    dim: usize,
    entries: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<RawCov> for CovMatrix {
    type Error = Error;
    fn try_from(raw: RawCov) -> Result<Self> {
        CovMatrix::from_row_major(raw.dim, raw.entries)
    }
}

#[cfg(feature = "serde")]
impl From<CovMatrix> for RawCov {
    fn from(c: CovMatrix) -> Self {
        RawCov {
            dim: c.dim,
            entries: c.entries,
        }
    }
}

/// Relative symmetry tolerance accepted by [`CovMatrix`] constructors.
pub const SYMMETRY_TOL: f64 = 1e-12;

impl CovMatrix {
    /// Builds a symmetric matrix from a 0-based index function evaluated on
    /// the upper triangle and mirrored.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
            }
        }
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_upper_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Checks squareness and symmetry to [`SYMMETRY_TOL`] relative.
    pub fn from_row_major(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                rule: "dim >= 1",
                value: 0.0,
            });
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (entries[i * dim + j], entries[j * dim + i]);
                let scale = libm::fmax(libm::fabs(a), libm::fabs(b));
                if !(libm::fabs(a - b) <= SYMMETRY_TOL * scale) {
                    return Err(Error::InvalidParameter {
                        name: "covariance entry",
                        rule: "symmetric to 1e-12 relative",
                        value: a - b,
                    });
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// Symmetrizes a square [`Matrix`] by averaging it with its transpose.
    pub fn from_matrix_symmetrized(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let n = m.rows();
        Ok(Self::from_upper_fn(n, |i, j| {
            0.5 * (m.get(i, j) + m.get(j, i))
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.entries.clone(),
        }
    }

    /// Block-diagonal `diag(self, other)`.
    pub fn block_diag(&self, other: &CovMatrix) -> CovMatrix {
        let n = self.dim + other.dim;
        let k = self.dim;
        Self::from_upper_fn(n, |i, j| {
            if i < k && j < k {
                self.get(i, j)
            } else if i >= k && j >= k {
                other.get(i - k, j - k)
            } else {
                0.0
            }
        })
    }

    /// `y^T Sigma y`.
    pub fn quad_form(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = &self.entries[i * self.dim..(i + 1) * self.dim];
            let ri: f64 = row.iter().zip(y).map(|(a, b)| a * b).sum();
            acc += y[i] * ri;
        }
        Ok(acc)
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::factor(self)
    }

    pub fn max_abs_diff(&self, other: &CovMatrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }
}

/// Lower-triangular factor `L` with `Sigma = L L^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(cov: &CovMatrix) -> Result<Self> {
        let n = cov.dim;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = cov.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let djj = libm::sqrt(d);
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = cov.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { dim: n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// `log det Sigma = 2 sum log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| libm::log(self.l(i, i))).sum::<f64>()
    }

    /// Solves `L y = b` in place.
    pub fn forward_solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    /// Solves `L^T x = y` in place.
    pub fn backward_solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    /// `Sigma^{-1} b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let mut x = b.to_vec();
        self.forward_solve_in_place(&mut x);
        self.backward_solve_in_place(&mut x);
        Ok(x)
    }

    /// `b^T Sigma^{-1} b = |L^{-1} b|^2`.
    pub fn inv_quad_form(&self, b: &[f64]) -> Result<f64> {
        self.check_len(b.len())?;
        let mut y = b.to_vec();
        self.forward_solve_in_place(&mut y);
        Ok(y.iter().map(|v| v * v).sum())
    }

    /// `L z`, mapping standard normal draws to `N(0, Sigma)`.
    pub fn mul_lower(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z.len())?;
        let n = self.dim;
        Ok((0..n)
            .map(|i| (0..=i).map(|k| self.lower[i * n + k] * z[k]).sum())
            .collect())
    }

    /// Dense inverse, column by column.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim;
        let mut inv = Matrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            self.forward_solve_in_place(&mut col);
            self.backward_solve_in_place(&mut col);
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }

    /// `tr(Sigma^{-1} A)`, one solve per column of `A`.
    pub fn trace_solve(&self, a: &Matrix) -> Result<f64> {
        self.check_len(a.rows())?;
        self.check_len(a.cols())?;
        let n = self.dim;
        let mut col = vec![0.0; n];
        let mut tr = 0.0;
        for j in 0..n {
            for i in 0..n {
                col[i] = a.get(i, j);
            }
            self.forward_solve_in_place(&mut col);
            self.backward_solve_in_place(&mut col);
            tr += col[j];
        }
        Ok(tr)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: len,
            });
        }
        Ok(())
    }
}
