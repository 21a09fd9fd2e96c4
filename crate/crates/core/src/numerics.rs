//! Dense linear algebra used by the learner: a row-major [`Matrix`], the
//! singular value decomposition, tolerance-based numeric rank, and least
//! squares through a cut-off pseudoinverse.
//!
//! The decomposition itself is delegated to `faer`; everything around it
//! (ordering, rank counting, the cut-off) lives here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix stored in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a list of rows. An empty list gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "ragged rows: expected {cols} columns, got {}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
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

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `x · self`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("matrix difference of unequal shapes".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// Stacks `extra` below `self` as one additional row.
    pub fn with_row(&self, extra: &[f64]) -> Result<Matrix> {
        if self.rows > 0 && extra.len() != self.cols {
            return Err(Error::Dimension("appended row has wrong width".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(extra);
        Ok(Matrix { rows: self.rows + 1, cols: extra.len(), data })
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin SVD `m = U · diag(S) · Vt` with singular values sorted descending.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let us = self.u.matmul(&Matrix::diag(&self.singular_values)).expect("thin svd shapes");
        us.matmul(&self.vt).expect("thin svd shapes")
    }
}

/// Thin SVD with singular values sorted descending. Factors that do not
/// reproduce `m` to 1e-9 relative accuracy are reported as non-convergence.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd input".into()));
    }
    let k = m.rows.min(m.cols);
    if k == 0 {
        return Ok(SvdResult {
            u: Matrix::zeros(m.rows, 0),
            singular_values: Vec::new(),
            vt: Matrix::zeros(0, m.cols),
        });
    }
    let fm = faer::Mat::<f64>::from_fn(m.rows, m.cols, |i, j| m[(i, j)]);
    let dec = fm.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let (u, s, v) = (dec.U(), dec.S(), dec.V());
    let values: Vec<f64> = (0..k).map(|i| s[i]).collect();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let mut su = Matrix::zeros(m.rows, k);
    let mut svt = Matrix::zeros(k, m.cols);
    let mut sv = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        sv.push(values[src].max(0.0));
        for i in 0..m.rows {
            su[(i, dst)] = u[(i, src)];
        }
        for j in 0..m.cols {
            svt[(dst, j)] = v[(j, src)];
        }
    }
    let out = SvdResult { u: su, singular_values: sv, vt: svt };
    let scale = m.frobenius_norm();
    if out.reconstruct().sub(m)?.frobenius_norm() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SvdNoConvergence);
    }
    Ok(out)
}

/// Number of singular values strictly above `tau · σ₁`.
///
/// `singular_values` must be sorted descending. An all-zero spectrum has
/// rank 0 whatever `tau` is.
pub fn numeric_rank(singular_values: &[f64], tau: f64) -> usize {
    debug_assert!(tau > 0.0);
    let Some(&largest) = singular_values.first() else {
        return 0;
    };
    if largest <= 0.0 {
        return 0;
    }
    let cutoff = tau * largest;
    singular_values.iter().take_while(|&&s| s > cutoff).count()
}

/// Solution of a cut-off least-squares problem.
#[derive(Clone, Debug)]
pub struct LstsqSolution {
    pub x: Matrix,
    pub residual: f64,
    pub rank: usize,
}

/// Minimum-norm least-squares solution of `a · x = b` through the SVD
/// pseudoinverse, with singular values `≤ tau · σ₁` treated as zero.
pub fn lstsq_cutoff(a: &Matrix, b: &Matrix, tau: f64) -> Result<LstsqSolution> {
    if a.rows != b.rows {
        return Err(Error::Dimension(format!(
            "lstsq: a has {} rows, b has {}",
            a.rows, b.rows
        )));
    }
    let dec = svd(a)?;
    let rank = numeric_rank(&dec.singular_values, tau);

    // x = V_r · S_r⁻¹ · U_rᵀ · b
    let mut utb = Matrix::zeros(rank, b.cols);
    for r in 0..rank {
        let s = dec.singular_values[r];
        for j in 0..b.cols {
            let mut acc = 0.0;
            for i in 0..a.rows {
                acc += dec.u[(i, r)] * b[(i, j)];
            }
            utb[(r, j)] = acc / s;
        }
    }
    let mut x = Matrix::zeros(a.cols, b.cols);
    for i in 0..a.cols {
        for j in 0..b.cols {
            let mut acc = 0.0;
            for r in 0..rank {
                acc += dec.vt[(r, i)] * utb[(r, j)];
            }
            x[(i, j)] = acc;
        }
    }
    let residual = a.matmul(&x)?.sub(b)?.frobenius_norm();
    Ok(LstsqSolution { x, residual, rank })
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}
