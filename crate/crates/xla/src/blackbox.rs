//! The common blackbox interface: a linear operator known through its
//! apply action, plus the structured and compound containers that
//! demonstrate it (Diagonal, Permutation, Compose).

use crate::dense::{DenseMatrix, MatrixView};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matmul::{apply_dense, MulHelper, Side};

/// Minimal matrix interface: dimensions plus the generalized apply
/// `y <- alpha A x + beta y` (`Side::Left` applies the transpose).
pub trait Blackbox {
    fn field(&self) -> PrimeField;
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()>;

    /// Dense image reconstructed column by column through `apply`; the
    /// equivalence oracle for every container type.
    fn to_dense(&self) -> DenseMatrix {
        let f = self.field();
        let mut out = DenseMatrix::zeros(f, self.rows(), self.cols());
        let mut e = vec![0u64; self.cols()];
        let mut col = vec![0u64; self.rows()];
        for j in 0..self.cols() {
            e[j] = f.one();
            col.iter_mut().for_each(|v| *v = 0);
            self.apply(&mut col, &e, Side::Right, 1, 0)
                .expect("basis apply");
            for i in 0..self.rows() {
                out.set(i, j, col[i]);
            }
            e[j] = 0;
        }
        out
    }
}

pub(crate) fn check_apply_dims(
    rows: usize,
    cols: usize,
    y_len: usize,
    x_len: usize,
    side: Side,
) -> Result<()> {
    let (in_dim, out_dim) = match side {
        Side::Right => (cols, rows),
        Side::Left => (rows, cols),
    };
    if x_len != in_dim || y_len != out_dim {
        return Err(Error::DimensionMismatch(format!(
            "apply: |x|={x_len} |y|={y_len} for a {rows}x{cols} operand"
        )));
    }
    Ok(())
}

impl Blackbox for DenseMatrix {
    fn field(&self) -> PrimeField {
        DenseMatrix::field(self)
    }

    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }

    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()> {
        apply_dense(self, y, x, side, alpha, beta, &mut MulHelper::new())
    }
}

impl<'a> Blackbox for MatrixView<'a> {
    fn field(&self) -> PrimeField {
        MatrixView::field(self)
    }

    fn rows(&self) -> usize {
        MatrixView::rows(self)
    }

    fn cols(&self) -> usize {
        MatrixView::cols(self)
    }

    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()> {
        apply_dense(&self.to_owned(), y, x, side, alpha, beta, &mut MulHelper::new())
    }
}

/// Diagonal matrix stored as its diagonal vector.
#[derive(Clone, Debug)]
pub struct Diagonal {
    field: PrimeField,
    diag: Vec<u64>,
}

impl Diagonal {
    pub fn new(field: PrimeField, diag: Vec<u64>) -> Self {
        let diag = diag.into_iter().map(|v| v % field.modulus()).collect();
        Diagonal { field, diag }
    }

    pub fn diag(&self) -> &[u64] {
        &self.diag
    }
}

impl Blackbox for Diagonal {
    fn field(&self) -> PrimeField {
        self.field
    }

    fn rows(&self) -> usize {
        self.diag.len()
    }

    fn cols(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()> {
        check_apply_dims(self.rows(), self.cols(), y.len(), x.len(), side)?;
        let f = self.field;
        for i in 0..self.diag.len() {
            let t = f.mul(alpha % f.modulus(), f.mul(self.diag[i], x[i] % f.modulus()));
            y[i] = f.add(t, f.mul(beta % f.modulus(), y[i] % f.modulus()));
        }
        Ok(())
    }
}

/// Permutation of `{0..n-1}` stored as a compressed LAPACK-style
/// transposition array (1-based `ipiv`): applying swaps `(i, ipiv[i]-1)`
/// for `i = 0..n-1` in order realizes the bijection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    ipiv: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            ipiv: (1..=n).collect(),
        }
    }

    pub fn from_ipiv(ipiv: Vec<usize>) -> Result<Self> {
        let n = ipiv.len();
        for (i, &t) in ipiv.iter().enumerate() {
            if t < i + 1 || t > n {
                return Err(Error::InvalidPermutation(format!(
                    "ipiv[{i}] = {t} outside [{}, {n}]",
                    i + 1
                )));
            }
        }
        Ok(Permutation { ipiv })
    }

    pub fn size(&self) -> usize {
        self.ipiv.len()
    }

    pub fn ipiv(&self) -> &[usize] {
        &self.ipiv
    }

    /// Image array of the bijection: position `i` of the permuted object
    /// receives element `perm[i]` of the original.
    pub fn images(&self) -> Vec<usize> {
        let n = self.ipiv.len();
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..n {
            idx.swap(i, self.ipiv[i] - 1);
        }
        idx
    }

    /// Nontrivial cycles of the bijection, each rotated to start at its
    /// smallest element, sorted by that element. Zero-based indices.
    pub fn to_cycles(&self) -> Vec<Vec<usize>> {
        let images = self.images();
        let n = images.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] || images[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cycle.push(cur);
                cur = images[cur];
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// Rebuilds the compressed representation from a cycle list.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut used = vec![false; n];
        for cycle in cycles {
            if cycle.is_empty() {
                continue;
            }
            for &e in cycle {
                if e >= n {
                    return Err(Error::InvalidPermutation(format!("index {e} >= {n}")));
                }
                if used[e] {
                    return Err(Error::InvalidPermutation(format!(
                        "index {e} appears in two cycles"
                    )));
                }
                used[e] = true;
            }
            for w in 0..cycle.len() {
                images[cycle[w]] = cycle[(w + 1) % cycle.len()];
            }
        }
        Self::from_images(&images)
    }

    /// Factors an image array into the swap sequence.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        let mut check = images.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidPermutation("image array is not a bijection".into()));
        }
        let mut work: Vec<usize> = (0..n).collect();
        let mut ipiv = vec![0usize; n];
        for i in 0..n {
            let j = (i..n)
                .find(|&j| work[j] == images[i])
                .expect("bijection guarantees a match");
            ipiv[i] = j + 1;
            work.swap(i, j);
        }
        Ok(Permutation { ipiv })
    }

    /// Permutes a matrix in place: `Left` maps `A <- P A` (rows),
    /// `Right` maps `A <- A P` (columns).
    pub fn permute(&self, a: &mut DenseMatrix, side: Side) -> Result<()> {
        let n = self.size();
        match side {
            Side::Left => {
                if a.rows() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "permutation size {n} vs {} rows",
                        a.rows()
                    )));
                }
                for i in 0..n {
                    let j = self.ipiv[i] - 1;
                    if i != j {
                        for col in 0..a.cols() {
                            let (x, y) = (a.get(i, col), a.get(j, col));
                            a.set(i, col, y);
                            a.set(j, col, x);
                        }
                    }
                }
            }
            Side::Right => {
                if a.cols() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "permutation size {n} vs {} cols",
                        a.cols()
                    )));
                }
                for i in 0..n {
                    let j = self.ipiv[i] - 1;
                    if i != j {
                        for row in 0..a.rows() {
                            let (x, y) = (a.get(row, i), a.get(row, j));
                            a.set(row, i, y);
                            a.set(row, j, x);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

impl Blackbox for (PrimeField, Permutation) {
    fn field(&self) -> PrimeField {
        self.0
    }

    fn rows(&self) -> usize {
        self.1.size()
    }

    fn cols(&self) -> usize {
        self.1.size()
    }

    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()> {
        check_apply_dims(self.rows(), self.cols(), y.len(), x.len(), side)?;
        let f = self.0;
        let images = self.1.images();
        let n = images.len();
        let mut permuted = vec![0u64; n];
        match side {
            // (P x)_i = x_{images(i)}
            Side::Right => {
                for i in 0..n {
                    permuted[i] = x[images[i]] % f.modulus();
                }
            }
            // (P^T x)_{images(i)} = x_i
            Side::Left => {
                for i in 0..n {
                    permuted[images[i]] = x[i] % f.modulus();
                }
            }
        }
        for i in 0..n {
            y[i] = f.add(
                f.mul(alpha % f.modulus(), permuted[i]),
                f.mul(beta % f.modulus(), y[i] % f.modulus()),
            );
        }
        Ok(())
    }
}

/// Product-of-operators container: `Compose(A, B)` applies as `A (B x)`.
pub struct Compose<'a> {
    a: &'a dyn Blackbox,
    b: &'a dyn Blackbox,
}

impl<'a> Compose<'a> {
    pub fn new(a: &'a dyn Blackbox, b: &'a dyn Blackbox) -> Result<Self> {
        if a.cols() != b.rows() {
            return Err(Error::DimensionMismatch(format!(
                "compose: {}x{} after {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if a.field() != b.field() {
            return Err(Error::DimensionMismatch("compose over different fields".into()));
        }
        Ok(Compose { a, b })
    }
}

impl<'a> Blackbox for Compose<'a> {
    fn field(&self) -> PrimeField {
        self.a.field()
    }

    fn rows(&self) -> usize {
        self.a.rows()
    }

    fn cols(&self) -> usize {
        self.b.cols()
    }

    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()> {
        check_apply_dims(self.rows(), self.cols(), y.len(), x.len(), side)?;
        match side {
            Side::Right => {
                let mut t = vec![0u64; self.b.rows()];
                self.b.apply(&mut t, x, Side::Right, 1, 0)?;
                self.a.apply(y, &t, Side::Right, alpha, beta)
            }
            Side::Left => {
                // (AB)^T x = B^T (A^T x)
                let mut t = vec![0u64; self.a.cols()];
                self.a.apply(&mut t, x, Side::Left, 1, 0)?;
                self.b.apply(y, &t, Side::Left, alpha, beta)
            }
        }
    }
}
