//! Owning and sharing dense containers over a prime field.
//!
//! `DenseMatrix` and `DenseVector` own their storage: the buffer is
//! allocated at construction and released at destruction, never
//! reallocated behind a sharer's back. `MatrixView` / `MatrixViewMut`
//! (and the vector counterparts) borrow a rectangular window of an
//! owner and cannot outlive it.

use crate::error::{Error, Result};
use crate::field::PrimeField;

/// Owning row-major dense matrix with an explicit stride.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl DenseMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        DenseMatrix {
            field,
            rows,
            cols,
            stride: cols,
            data: vec![0; rows * cols],
        }
    }

    /// Builds from row-major entries, normalizing each into the field.
    pub fn from_rows(field: PrimeField, rows: usize, cols: usize, entries: &[i64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let data = entries.iter().map(|&x| field.normalize(x)).collect();
        Ok(DenseMatrix {
            field,
            rows,
            cols,
            stride: cols,
            data,
        })
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
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
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.stride + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        debug_assert!(i < self.rows && j < self.cols);
        debug_assert!(v < self.field.modulus());
        self.data[i * self.stride + j] = v;
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..i * self.stride + self.cols]
    }

    /// Shared view of the `m x n` window at `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, m: usize, n: usize) -> Result<MatrixView<'_>> {
        self.check_window(r0, c0, m, n)?;
        Ok(MatrixView {
            field: self.field,
            rows: m,
            cols: n,
            stride: self.stride,
            data: &self.data[r0 * self.stride + c0..],
        })
    }

    /// Mutable view of the `m x n` window at `(r0, c0)`.
    pub fn submatrix_mut(
        &mut self,
        r0: usize,
        c0: usize,
        m: usize,
        n: usize,
    ) -> Result<MatrixViewMut<'_>> {
        self.check_window(r0, c0, m, n)?;
        let stride = self.stride;
        Ok(MatrixViewMut {
            field: self.field,
            rows: m,
            cols: n,
            stride,
            data: &mut self.data[r0 * stride + c0..],
        })
    }

    fn check_window(&self, r0: usize, c0: usize, m: usize, n: usize) -> Result<()> {
        if r0 + m > self.rows || c0 + n > self.cols {
            return Err(Error::OutOfBounds(format!(
                "window ({r0},{c0})+{m}x{n} exceeds {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Lifts every entry to its canonical integer and renormalizes into
    /// the destination field.
    pub fn rebind(&self, dst: PrimeField) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(dst, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j) % dst.modulus());
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        (0..self.rows).all(|i| self.row(i).iter().all(|&v| v == 0))
    }
}

impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        if self.field != other.field || self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        (0..self.rows).all(|i| self.row(i) == other.row(i))
    }
}

impl Eq for DenseMatrix {}

/// Shared (read-only) window into a `DenseMatrix`.
#[derive(Clone, Copy, Debug)]
pub struct MatrixView<'a> {
    field: PrimeField,
    rows: usize,
    cols: usize,
    stride: usize,
    data: &'a [u64],
}

impl<'a> MatrixView<'a> {
    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
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
    pub fn get(&self, i: usize, j: usize) -> u64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.stride + j]
    }

    pub fn to_owned(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.field, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }
}

/// Mutable window into a `DenseMatrix`; writes are visible in the owner.
#[derive(Debug)]
pub struct MatrixViewMut<'a> {
    field: PrimeField,
    rows: usize,
    cols: usize,
    stride: usize,
    data: &'a mut [u64],
}

impl<'a> MatrixViewMut<'a> {
    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
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
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.stride + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.stride + j] = v;
    }
}

/// Owning dense vector with an element increment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseVector {
    field: PrimeField,
    len: usize,
    inc: usize,
    data: Vec<u64>,
}

impl DenseVector {
    pub fn zeros(field: PrimeField, len: usize) -> Self {
        DenseVector {
            field,
            len,
            inc: 1,
            data: vec![0; len],
        }
    }

    pub fn from_slice(field: PrimeField, entries: &[i64]) -> Self {
        DenseVector {
            field,
            len: entries.len(),
            inc: 1,
            data: entries.iter().map(|&x| field.normalize(x)).collect(),
        }
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        self.data[i * self.inc]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: u64) {
        self.data[i * self.inc] = v;
    }

    pub fn as_slice(&self) -> &[u64] {
        debug_assert_eq!(self.inc, 1);
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [u64] {
        debug_assert_eq!(self.inc, 1);
        &mut self.data
    }

    pub fn rebind(&self, dst: PrimeField) -> DenseVector {
        let mut out = DenseVector::zeros(dst, self.len);
        for i in 0..self.len {
            out.set(i, self.get(i) % dst.modulus());
        }
        out
    }
}
