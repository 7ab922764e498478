//! Exact multiplication of integer matrices: multimodular reduction,
//! per-prime modular gemm through the `mul` controller, and Chinese
//! remainder reconstruction in the balanced range.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::field::{big_mod_u64, crt_reconstruct, rns_build, PrimeField, RnsBasis};
use crate::matmul::{mul_controller, MulHelper};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

/// Digit base for the reduction-as-gemm strategy: 2^16 digits keep
/// digit x (26-bit residue) products comfortably inside a 64-bit
/// accumulator for any practical digit count.
pub const DIGIT_BITS: u32 = 16;

/// Dense matrix of signed arbitrary-precision integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
    max_abs: BigUint,
}

impl IntegerMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntegerMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
            max_abs: BigUint::zero(),
        }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let max_abs = entries
            .iter()
            .map(|e| e.magnitude().clone())
            .max()
            .unwrap_or_else(BigUint::zero);
        Ok(IntegerMatrix {
            rows,
            cols,
            data: entries,
            max_abs,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        if v.magnitude() > &self.max_abs {
            self.max_abs = v.magnitude().clone();
        }
        self.data[i * self.cols + j] = v;
    }

    /// Cached magnitude bound; at least the absolute value of every entry.
    pub fn max_abs(&self) -> &BigUint {
        &self.max_abs
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }
}

/// Bound `k * max|A| * max|B|` on the entries of the product.
pub fn result_bound(a: &IntegerMatrix, b: &IntegerMatrix) -> Result<BigUint> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} * {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(a.max_abs() * b.max_abs() * a.cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceStrategy {
    /// Direct big-integer modulus per entry.
    PerEntry,
    /// Digit decomposition times a precomputed powers table, one integer
    /// gemm per operand over a wide accumulator.
    MatrixProduct,
}

/// Base-2^16 digit decomposition of the magnitudes, signs kept apart.
/// Row `e` of `digits` holds the `digit_count` digits of entry `e`
/// (row-major entry order, least significant digit first).
pub struct DigitDecomposition {
    pub digit_count: usize,
    pub digits: Vec<u64>,
    pub negative: Vec<bool>,
}

pub fn digit_decompose(a: &IntegerMatrix) -> DigitDecomposition {
    let d = ((a.max_abs().bits() as usize).div_ceil(DIGIT_BITS as usize)).max(1);
    let mask = BigUint::from((1u64 << DIGIT_BITS) - 1);
    let mut digits = vec![0u64; a.rows * a.cols * d];
    let mut negative = vec![false; a.rows * a.cols];
    for (e, v) in a.entries().iter().enumerate() {
        negative[e] = v.is_negative();
        let mut mag = v.magnitude().clone();
        for j in 0..d {
            if mag.is_zero() {
                break;
            }
            digits[e * d + j] = u64::try_from(&mag & &mask).unwrap();
            mag >>= DIGIT_BITS;
        }
    }
    DigitDecomposition {
        digit_count: d,
        digits,
        negative,
    }
}

/// Recombines a decomposition; the inverse used to pin the layout.
pub fn digit_recompose(rows: usize, cols: usize, d: &DigitDecomposition) -> IntegerMatrix {
    let mut entries = Vec::with_capacity(rows * cols);
    for e in 0..rows * cols {
        let mut v = BigUint::zero();
        for j in (0..d.digit_count).rev() {
            v = (v << DIGIT_BITS) + d.digits[e * d.digit_count + j];
        }
        let mut s = BigInt::from(v);
        if d.negative[e] {
            s = -s;
        }
        entries.push(s);
    }
    IntegerMatrix::from_entries(rows, cols, entries).unwrap()
}

/// Residue matrices of `A` modulo each basis prime, canonical entries.
pub fn multimodular_reduce(
    a: &IntegerMatrix,
    basis: &RnsBasis,
    strategy: ReduceStrategy,
) -> Result<Vec<DenseMatrix>> {
    match strategy {
        ReduceStrategy::PerEntry => basis
            .primes()
            .iter()
            .map(|&q| {
                let f = PrimeField::new(q)?;
                let mut out = DenseMatrix::zeros(f, a.rows, a.cols);
                for i in 0..a.rows {
                    for j in 0..a.cols {
                        out.set(i, j, big_mod_u64(a.get(i, j), q));
                    }
                }
                Ok(out)
            })
            .collect(),
        ReduceStrategy::MatrixProduct => {
            let dec = digit_decompose(a);
            let d = dec.digit_count;
            let s = basis.len();
            // powers table: pow[j*s + i] = 2^(DIGIT_BITS * j) mod q_i
            let mut pow = vec![0u64; d * s];
            for (i, &q) in basis.primes().iter().enumerate() {
                let step = (1u64 << DIGIT_BITS) % q;
                let mut cur = 1u64 % q;
                for j in 0..d {
                    pow[j * s + i] = cur;
                    cur = cur * step % q;
                }
            }
            // (entries x d) digit matrix times (d x s) table, wide accumulator:
            // digits < 2^16 and table entries < 2^26, so d may reach 2^22
            // before the u64 accumulator could overflow
            let entries = a.rows * a.cols;
            let mut acc = vec![0u64; entries * s];
            for e in 0..entries {
                for j in 0..d {
                    let dig = dec.digits[e * d + j];
                    if dig == 0 {
                        continue;
                    }
                    for i in 0..s {
                        acc[e * s + i] += dig * pow[j * s + i];
                    }
                }
            }
            basis
                .primes()
                .iter()
                .enumerate()
                .map(|(i, &q)| {
                    let f = PrimeField::new(q)?;
                    let mut out = DenseMatrix::zeros(f, a.rows, a.cols);
                    for e in 0..entries {
                        let mut r = acc[e * s + i] % q;
                        if dec.negative[e] {
                            r = f.neg(r);
                        }
                        out.set(e / a.cols, e % a.cols, r);
                    }
                    Ok(out)
                })
                .collect()
        }
    }
}

/// Exact `C = A * B` by multimodular reduction, per-prime gemm and
/// balanced CRT reconstruction.
pub fn mul_crt(a: &IntegerMatrix, b: &IntegerMatrix) -> Result<IntegerMatrix> {
    mul_crt_with(a, b, &MulHelper::new(), ReduceStrategy::MatrixProduct)
}

pub fn mul_crt_with(
    a: &IntegerMatrix,
    b: &IntegerMatrix,
    helper: &MulHelper,
    strategy: ReduceStrategy,
) -> Result<IntegerMatrix> {
    let bound = result_bound(a, b)?.max(BigUint::one());
    let basis = rns_build(&bound, 26)?;
    debug_assert!(basis.product() > &(&bound * 2u32));
    let ra = multimodular_reduce(a, &basis, strategy)?;
    let rb = multimodular_reduce(b, &basis, strategy)?;
    let mut residues = Vec::with_capacity(basis.len());
    for (ma, mb) in ra.iter().zip(&rb) {
        let mut c = DenseMatrix::zeros(ma.field(), a.rows, b.cols);
        let mut h = helper.clone().with_scalars(1, 0);
        mul_controller(&mut c, ma, mb, &mut h)?;
        residues.push(c);
    }
    let mut out = IntegerMatrix::zeros(a.rows, b.cols);
    let mut per_entry = vec![0u64; basis.len()];
    for i in 0..a.rows {
        for j in 0..b.cols {
            for (t, rc) in residues.iter().enumerate() {
                per_entry[t] = rc.get(i, j);
            }
            out.set(i, j, crt_reconstruct(&per_entry, &basis)?);
        }
    }
    Ok(out)
}

/// Schoolbook big-integer gemm; the exactness oracle.
pub fn naive_mul(a: &IntegerMatrix, b: &IntegerMatrix) -> Result<IntegerMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} * {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = IntegerMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = BigInt::zero();
            for t in 0..a.cols {
                acc += a.get(i, t) * b.get(t, j);
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}
