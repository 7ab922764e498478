//! Sparse matrix containers (COO and CSR) and the CSR "star" conversions:
//! any format converts to any other by going through CSR.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::field::PrimeField;

/// Coordinate format: parallel (row, col, value) triples, sorted row-major,
/// no duplicates, no stored zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseCoo {
    field: PrimeField,
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, u64)>,
}

impl SparseCoo {
    /// Canonicalizes arbitrary triples: sorts row-major, merges duplicates
    /// by field addition, drops zeros.
    pub fn from_triplets(
        field: PrimeField,
        rows: usize,
        cols: usize,
        triples: &[(usize, usize, u64)],
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, u64)> = Vec::with_capacity(triples.len());
        let mut sorted = triples.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        for (i, j, v) in sorted {
            if i >= rows || j >= cols {
                return Err(Error::OutOfBounds(format!(
                    "entry ({i},{j}) outside {rows}x{cols}"
                )));
            }
            let v = v % field.modulus();
            match entries.last_mut() {
                Some(last) if last.0 == i && last.1 == j => {
                    last.2 = field.add(last.2, v);
                }
                _ => entries.push((i, j, v)),
            }
        }
        entries.retain(|&(_, _, v)| v != 0);
        Ok(SparseCoo {
            field,
            rows,
            cols,
            entries,
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, u64)] {
        &self.entries
    }

    /// Storage slots assuming same-width index and value fields.
    pub fn storage_slots(&self) -> usize {
        3 * self.nnz()
    }

    pub fn to_csr(&self) -> SparseCsr {
        let mut row_ptr = vec![0usize; self.rows + 1];
        for &(i, _, _) in &self.entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..self.rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = self.entries.iter().map(|&(_, j, _)| j).collect();
        let values = self.entries.iter().map(|&(_, _, v)| v).collect();
        SparseCsr {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rebind(&self, dst: PrimeField) -> SparseCoo {
        let triples: Vec<(usize, usize, u64)> = self
            .entries
            .iter()
            .map(|&(i, j, v)| (i, j, v % dst.modulus()))
            .collect();
        SparseCoo::from_triplets(dst, self.rows, self.cols, &triples).unwrap()
    }
}

/// Compressed sparse row format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseCsr {
    field: PrimeField,
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<u64>,
}

impl SparseCsr {
    pub fn from_parts(
        field: PrimeField,
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<u64>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 || row_ptr[rows] != col_idx.len() {
            return Err(Error::InvalidArgument("malformed CSR row_ptr".into()));
        }
        if col_idx.len() != values.len() {
            return Err(Error::InvalidArgument("CSR index/value length mismatch".into()));
        }
        for i in 0..rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidArgument("CSR row_ptr not nondecreasing".into()));
            }
            let r = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for w in r.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidArgument(
                        "CSR column indices not strictly increasing within a row".into(),
                    ));
                }
            }
            if let Some(&last) = r.last() {
                if last >= cols {
                    return Err(Error::OutOfBounds(format!("column {last} >= {cols}")));
                }
            }
        }
        if values.iter().any(|&v| v == 0 || v >= field.modulus()) {
            return Err(Error::InvalidArgument(
                "CSR stores a zero or non-canonical value".into(),
            ));
        }
        Ok(SparseCsr {
            field,
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Index/value pairs of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[u64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Storage slots assuming same-width index and value fields.
    pub fn storage_slots(&self) -> usize {
        2 * self.nnz() + self.rows + 1
    }

    pub fn to_coo(&self) -> SparseCoo {
        let mut entries = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                entries.push((i, j, v));
            }
        }
        SparseCoo {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.field, self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    pub fn transpose(&self) -> SparseCsr {
        let mut triples = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                triples.push((j, i, v));
            }
        }
        SparseCoo::from_triplets(self.field, self.cols, self.rows, &triples)
            .unwrap()
            .to_csr()
    }

    pub fn rebind(&self, dst: PrimeField) -> SparseCsr {
        self.to_coo().rebind(dst).to_csr()
    }
}

/// Dense to CSR, dropping explicit zeros.
pub fn dense_to_csr(a: &DenseMatrix) -> SparseCsr {
    let mut triples = Vec::new();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let v = a.get(i, j);
            if v != 0 {
                triples.push((i, j, v));
            }
        }
    }
    SparseCoo::from_triplets(a.field(), a.rows(), a.cols(), &triples)
        .unwrap()
        .to_csr()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn identity_layout() {
        let coo =
            SparseCoo::from_triplets(f(7), 2, 2, &[(0, 0, 1), (1, 1, 1)]).unwrap();
        let csr = coo.to_csr();
        assert_eq!(csr.row_ptr(), &[0, 1, 2]);
        assert_eq!(csr.col_idx(), &[0, 1]);
        assert_eq!(csr.values(), &[1, 1]);
    }

    #[test]
    fn duplicate_merge_and_zero_drop() {
        // 3 + 4 = 0 mod 7: the entry disappears
        let coo =
            SparseCoo::from_triplets(f(7), 2, 2, &[(0, 0, 3), (0, 0, 4), (1, 0, 2)]).unwrap();
        assert_eq!(coo.nnz(), 1);
        assert_eq!(coo.entries(), &[(1, 0, 2)]);
    }

    #[test]
    fn round_trip_through_csr() {
        let mut state = 42u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            state >> 33
        };
        for _ in 0..20 {
            let m = 1 + (next() as usize % 12);
            let n = 1 + (next() as usize % 12);
            let field = f(97);
            let mut triples = Vec::new();
            for _ in 0..(m * n / 3) {
                triples.push((
                    next() as usize % m,
                    next() as usize % n,
                    next() % 97,
                ));
            }
            let coo = SparseCoo::from_triplets(field, m, n, &triples).unwrap();
            // entry-map oracle: CSR round-trip preserves the dense image
            let csr = coo.to_csr();
            assert_eq!(csr.to_coo(), coo);
            assert_eq!(csr.to_dense(), dense_to_csr(&csr.to_dense()).to_dense());
        }
    }

    #[test]
    fn storage_accounting() {
        let mut triples = Vec::new();
        for k in 0..500usize {
            triples.push((k % 100, (k * 7) % 100, 1 + (k as u64 % 96)));
        }
        let coo = SparseCoo::from_triplets(f(97), 100, 100, &triples).unwrap();
        let csr = coo.to_csr();
        assert_eq!(coo.storage_slots(), 3 * coo.nnz());
        assert_eq!(csr.storage_slots(), 2 * csr.nnz() + 101);
    }

    #[test]
    fn out_of_bounds_entry() {
        assert!(SparseCoo::from_triplets(f(7), 2, 2, &[(0, 5, 1)]).is_err());
    }
}
