//! Row-major dense matrices.

use rayon::prelude::*;

use crate::error::{dim_err, Result};
use crate::scalar::Scalar;

/// Work (rows × inner × cols) above which matrix products split rows across
/// the rayon pool. Each output row is produced by exactly one task, so the
/// result does not depend on the thread count.
const PAR_WORK: usize = 1 << 21;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<T>,
}

impl<T: std::fmt::Debug> std::fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.n_rows, self.n_cols)?;
        for r in 0..self.n_rows.min(8) {
            let row = &self.data[r * self.n_cols..(r + 1) * self.n_cols];
            writeln!(f, "  {:?}", &row[..self.n_cols.min(8)])?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![T::zero(); n_rows * n_cols],
        }
    }

    pub fn filled(n_rows: usize, n_cols: usize, v: T) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![v; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(dim_err(
                "DenseMatrix::from_vec",
                format!("{} values for {}x{}", data.len(), n_rows, n_cols),
            ));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(dim_err("DenseMatrix::from_rows", "ragged rows"));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data: rows.concat(),
        })
    }

    /// Convenience for tests and literals written in `f64`.
    pub fn from_f64_rows(rows: &[&[f64]]) -> Self {
        let owned: Vec<Vec<T>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| T::of(v)).collect())
            .collect();
        Self::from_rows(&owned).expect("rectangular literal")
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for c in 0..n_cols {
                data.push(f(r, c));
            }
        }
        Self {
            n_rows,
            n_cols,
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.n_cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.n_cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let n = self.n_cols;
        &mut self.data[r * n..(r + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same(other, "zip_map")?;
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.n_cols, self.n_rows);
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                out.data[c * self.n_rows + r] = self.data[r * self.n_cols + c];
            }
        }
        out
    }

    fn check_same(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(dim_err(
                op,
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        Ok(())
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.n_cols != rhs.n_rows {
            return Err(dim_err(
                "matmul",
                format!("{:?} · {:?}", self.shape(), rhs.shape()),
            ));
        }
        let (n, m) = (self.n_rows, rhs.n_cols);
        let mut out = Self::zeros(n, m);
        let kernel = |(r, out_row): (usize, &mut [T])| {
            let a_row = self.row(r);
            for (k, &a) in a_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let b_row = rhs.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if m == 0 {
            return Ok(out);
        }
        if n * m * self.n_cols >= PAR_WORK {
            out.data.par_chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.data.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `self · rhsᵀ`: every output entry is a dot product of two rows.
    pub fn matmul_t(&self, rhs: &Self) -> Result<Self> {
        if self.n_cols != rhs.n_cols {
            return Err(dim_err(
                "matmul_t",
                format!("{:?} · {:?}ᵀ", self.shape(), rhs.shape()),
            ));
        }
        let (n, m) = (self.n_rows, rhs.n_rows);
        let mut out = Self::zeros(n, m);
        if m == 0 {
            return Ok(out);
        }
        let kernel = |(r, out_row): (usize, &mut [T])| {
            let a_row = self.row(r);
            for (c, o) in out_row.iter_mut().enumerate() {
                *o = dot(a_row, rhs.row(c));
            }
        };
        if n * m * self.n_cols >= PAR_WORK {
            out.data.par_chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.data.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `selfᵀ · rhs`.
    pub fn t_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.n_rows != rhs.n_rows {
            return Err(dim_err(
                "t_matmul",
                format!("{:?}ᵀ · {:?}", self.shape(), rhs.shape()),
            ));
        }
        let (n, m) = (self.n_cols, rhs.n_cols);
        let mut out = Self::zeros(n, m);
        for k in 0..self.n_rows {
            let a_row = self.row(k);
            let b_row = rhs.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let out_row = &mut out.data[i * m..(i + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Column-wise concatenation `[a | b | …]`.
    pub fn hcat(parts: &[&Self]) -> Result<Self> {
        let n_rows = parts.first().map_or(0, |p| p.n_rows);
        if parts.iter().any(|p| p.n_rows != n_rows) {
            return Err(dim_err("hcat", "row counts differ"));
        }
        let n_cols: usize = parts.iter().map(|p| p.n_cols).sum();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for p in parts {
                data.extend_from_slice(p.row(r));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    /// Columns `[start, start + width)` as a new matrix.
    pub fn columns(&self, start: usize, width: usize) -> Result<Self> {
        if start + width > self.n_cols {
            return Err(dim_err("columns", "slice exceeds column count"));
        }
        let mut data = Vec::with_capacity(self.n_rows * width);
        for r in 0..self.n_rows {
            data.extend_from_slice(&self.row(r)[start..start + width]);
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: width,
            data,
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            n_rows: idx.len(),
            n_cols: self.n_cols,
            data,
        }
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Sequential dot product; the fixed summation order keeps results
/// reproducible wherever the same pair of rows is compared.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_agree_with_transposes() {
        let a = DenseMatrix::<f64>::from_fn(3, 4, |r, c| (r * 4 + c) as f64 * 0.5 - 2.0);
        let b = DenseMatrix::<f64>::from_fn(4, 2, |r, c| (r as f64 - c as f64).sin());
        let ab = a.matmul(&b).unwrap();
        let abt = a.matmul_t(&b.transpose()).unwrap();
        let atb = a.transpose().t_matmul(&b).unwrap();
        assert!(ab.max_abs_diff(&abt) < 1e-12);
        assert!(ab.max_abs_diff(&atb) < 1e-12);
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn hcat_then_columns_is_identity() {
        let a = DenseMatrix::<f64>::from_fn(3, 2, |r, c| (r + c) as f64);
        let b = DenseMatrix::<f64>::from_fn(3, 1, |r, _| r as f64 * 7.0);
        let h = DenseMatrix::hcat(&[&a, &b]).unwrap();
        assert_eq!(h.columns(0, 2).unwrap(), a);
        assert_eq!(h.columns(2, 1).unwrap(), b);
    }
}
