//! Matrices of polynomials over a prime field, multiplied by evaluation at
//! roots of unity, pointwise matrix products through the multiplication
//! controller, and interpolation. Fields without a root of the required
//! 2-power order go through an exact CRT detour over transform-friendly
//! primes.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::field::{self, PrimeField, RnsBasis};
use crate::matmul::{mul_controller, naive_gemm_per_step, MulHelper};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// Polynomial matrix as a list of coefficient matrices; index = power of x.
/// The stored degree is a bound, not the exact degree: the leading
/// coefficient matrix may be zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    coeffs: Vec<DenseMatrix>,
}

impl PolyMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize, degree: usize) -> Self {
        PolyMatrix {
            field,
            rows,
            cols,
            coeffs: (0..=degree)
                .map(|_| DenseMatrix::zeros(field, rows, cols))
                .collect(),
        }
    }

    pub fn from_coeffs(coeffs: Vec<DenseMatrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::DimensionMismatch("polynomial needs >= 1 coefficient".into()))?;
        let (field, rows, cols) = (first.field(), first.rows(), first.cols());
        for c in &coeffs {
            if c.rows() != rows || c.cols() != cols || c.field().modulus() != field.modulus() {
                return Err(Error::DimensionMismatch(
                    "coefficient matrices must share shape and field".into(),
                ));
            }
        }
        Ok(PolyMatrix {
            field,
            rows,
            cols,
            coeffs,
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

    /// Storage degree bound (number of coefficients minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, t: usize) -> &DenseMatrix {
        &self.coeffs[t]
    }

    pub fn coeff_mut(&mut self, t: usize) -> &mut DenseMatrix {
        &mut self.coeffs[t]
    }
}

/// Precomputed data for length-N transforms over one field.
#[derive(Clone, Debug)]
pub struct NttPlan {
    field: PrimeField,
    n: usize,
    root: u64,
    /// powers of the root and of its inverse, 0..N
    fwd_pow: Vec<u64>,
    inv_pow: Vec<u64>,
    n_inv: u64,
}

/// Root of exact multiplicative order `n` (a power of two), found as
/// g^((p-1)/n) over candidate g with an order check.
pub fn find_root(field: &PrimeField, n: usize) -> Result<u64> {
    let p = field.modulus();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "transform length {n} is not a power of two"
        )));
    }
    if (p - 1) % n as u64 != 0 {
        return Err(Error::NoRoot {
            p,
            order: n as u64,
        });
    }
    if n == 1 {
        return Ok(1);
    }
    for g in 2..p {
        let w = field.pow(g, (p - 1) / n as u64);
        // order divides n; exact order n iff w^(n/2) = -1
        if field.pow(w, n as u64 / 2) == p - 1 {
            return Ok(w);
        }
    }
    Err(Error::NoRoot {
        p,
        order: n as u64,
    })
}

impl NttPlan {
    pub fn new(field: PrimeField, n: usize) -> Result<Self> {
        let root = find_root(&field, n)?;
        let root_inv = field.inv(root)?;
        let mut fwd_pow = Vec::with_capacity(n);
        let mut inv_pow = Vec::with_capacity(n);
        let (mut a, mut b) = (1u64, 1u64);
        for _ in 0..n {
            fwd_pow.push(a);
            inv_pow.push(b);
            a = field.mul(a, root);
            b = field.mul(b, root_inv);
        }
        let n_inv = field.inv(field.normalize(n as i64))?;
        Ok(NttPlan {
            field,
            n,
            root,
            fwd_pow,
            inv_pow,
            n_inv,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    fn check_len(&self, v: &[u64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "transform length {} != plan length {}",
                v.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// In-place iterative radix-2 transform with bit-reversal; `pow` holds
    /// the powers of the root for the chosen direction.
    fn transform(&self, v: &mut [u64], pow: &[u64]) {
        let f = self.field;
        let n = self.n;
        // bit-reversal permutation
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = (i.reverse_bits() >> (usize::BITS - bits)) as usize;
            if j > i {
                v.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let w = pow[k * stride];
                    let (x, y) = (v[start + k], f.mul(w, v[start + k + len / 2]));
                    v[start + k] = f.add(x, y);
                    v[start + k + len / 2] = f.sub(x, y);
                }
            }
            len *= 2;
        }
    }
}

/// v̂[j] = Σ_i v[i]·ω^(ij).
pub fn ntt_forward(v: &[u64], plan: &NttPlan) -> Result<Vec<u64>> {
    plan.check_len(v)?;
    let mut out: Vec<u64> = v.iter().map(|&x| x % plan.field.modulus()).collect();
    if plan.n > 1 {
        plan.transform(&mut out, &plan.fwd_pow);
    }
    Ok(out)
}

pub fn ntt_inverse(v: &[u64], plan: &NttPlan) -> Result<Vec<u64>> {
    plan.check_len(v)?;
    let mut out: Vec<u64> = v.iter().map(|&x| x % plan.field.modulus()).collect();
    if plan.n > 1 {
        plan.transform(&mut out, &plan.inv_pow);
    }
    for x in &mut out {
        *x = plan.field.mul(*x, plan.n_inv);
    }
    Ok(out)
}

fn check_poly_dims(a: &PolyMatrix, b: &PolyMatrix) -> Result<()> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "polynomial product {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if a.field.modulus() != b.field.modulus() {
        return Err(Error::DimensionMismatch(
            "polynomial operands over different fields".into(),
        ));
    }
    Ok(())
}

/// Evaluate / pointwise-multiply / interpolate over one field that has the
/// required root. Output has exactly `d + 1` coefficient matrices.
fn poly_mul_direct(a: &PolyMatrix, b: &PolyMatrix, plan: &NttPlan) -> Result<PolyMatrix> {
    let field = a.field;
    let n = plan.len();
    let d = a.degree() + b.degree();
    let eval = |p: &PolyMatrix| -> Result<Vec<DenseMatrix>> {
        let mut mats: Vec<DenseMatrix> =
            (0..n).map(|_| DenseMatrix::zeros(field, p.rows, p.cols)).collect();
        let mut v = vec![0u64; n];
        for i in 0..p.rows {
            for j in 0..p.cols {
                v.iter_mut().for_each(|x| *x = 0);
                for (t, c) in p.coeffs.iter().enumerate() {
                    v[t] = c.get(i, j);
                }
                let vh = ntt_forward(&v, plan)?;
                for (t, m) in mats.iter_mut().enumerate() {
                    m.set(i, j, vh[t]);
                }
            }
        }
        Ok(mats)
    };
    let a_hat = eval(a)?;
    let b_hat = eval(b)?;
    let mut c_hat = Vec::with_capacity(n);
    for t in 0..n {
        let mut c = DenseMatrix::zeros(field, a.rows, b.cols);
        let mut h = MulHelper::new();
        mul_controller(&mut c, &a_hat[t], &b_hat[t], &mut h)?;
        c_hat.push(c);
    }
    let mut out = PolyMatrix::zeros(field, a.rows, b.cols, d);
    let mut v = vec![0u64; n];
    for i in 0..a.rows {
        for j in 0..b.cols {
            for (t, m) in c_hat.iter().enumerate() {
                v[t] = m.get(i, j);
            }
            let vc = ntt_inverse(&v, plan)?;
            for t in 0..=d {
                out.coeffs[t].set(i, j, vc[t]);
            }
        }
    }
    Ok(out)
}

/// Primes q < 2^26 with q ≡ 1 (mod n), largest first, until their product
/// exceeds twice `bound` (so balanced reconstruction is exact on [0, bound]).
fn ntt_prime_basis(bound: &BigUint, n: usize) -> Result<RnsBasis> {
    let limit = (1u64 << field::MAX_MODULUS_BITS) - 1;
    let step = n as u64;
    let mut q = (limit - 1) / step * step + 1;
    let mut primes = Vec::new();
    let mut product = BigUint::from(1u32);
    let target = bound * 2u32;
    while product <= target {
        while q > step && !field::is_prime(q) {
            q -= step;
        }
        if q <= step && !field::is_prime(q) {
            return Err(Error::PrimeBitsTooSmall(field::MAX_MODULUS_BITS));
        }
        product *= q;
        primes.push(q);
        if q <= step {
            break;
        }
        q -= step;
    }
    if product <= target {
        return Err(Error::PrimeBitsTooSmall(field::MAX_MODULUS_BITS));
    }
    RnsBasis::from_primes(primes)
}

/// Exact product of two polynomial matrices; output degree is the sum of
/// the operand storage degrees. Uses direct transforms when the field has
/// a root of the needed order, otherwise lifts to the integers and runs
/// the same scheme modulo enough transform-friendly primes.
pub fn poly_mul(a: &PolyMatrix, b: &PolyMatrix) -> Result<PolyMatrix> {
    check_poly_dims(a, b)?;
    let field = a.field;
    let p = field.modulus();
    let d = a.degree() + b.degree();
    let n = (d + 1).next_power_of_two();
    match NttPlan::new(field, n) {
        Ok(plan) => poly_mul_direct(a, b, &plan),
        Err(Error::NoRoot { .. }) => {
            // every product coefficient entry, as an integer, is at most
            // k * (p-1)^2 * (min(dA,dB)+1)
            let terms = a.degree().min(b.degree()) as u64 + 1;
            let bound = BigUint::from(a.cols as u64)
                * BigUint::from((p - 1) * (p - 1))
                * BigUint::from(terms);
            let basis = ntt_prime_basis(&bound.max(BigUint::from(1u32)), n)?;
            let mut per_prime = Vec::with_capacity(basis.len());
            for &q in basis.primes() {
                let fq = PrimeField::new(q)?;
                let aq = PolyMatrix::from_coeffs(
                    a.coeffs.iter().map(|c| c.rebind(fq)).collect(),
                )?;
                let bq = PolyMatrix::from_coeffs(
                    b.coeffs.iter().map(|c| c.rebind(fq)).collect(),
                )?;
                let plan = NttPlan::new(fq, n)?;
                per_prime.push(poly_mul_direct(&aq, &bq, &plan)?);
            }
            let mut out = PolyMatrix::zeros(field, a.rows, b.cols, d);
            let mut residues = vec![0u64; basis.len()];
            for t in 0..=d {
                for i in 0..a.rows {
                    for j in 0..b.cols {
                        for (s, cq) in per_prime.iter().enumerate() {
                            residues[s] = cq.coeffs[t].get(i, j);
                        }
                        let v = field::crt_reconstruct(&residues, &basis)?;
                        // nonnegative and below half the basis product
                        let v = v.to_u64().map(|x| x % p).unwrap_or_else(|| {
                            field.normalize_big(&v.into())
                        });
                        out.coeffs[t].set(i, j, v);
                    }
                }
            }
            Ok(out)
        }
        Err(e) => Err(e),
    }
}

/// Coefficient-wise schoolbook convolution: C_t = Σ_{i+j=t} A_i·B_j with a
/// per-step-reduced gemm. The exactness oracle for `poly_mul`.
pub fn poly_mul_schoolbook(a: &PolyMatrix, b: &PolyMatrix) -> Result<PolyMatrix> {
    check_poly_dims(a, b)?;
    let d = a.degree() + b.degree();
    let mut out = PolyMatrix::zeros(a.field, a.rows, b.cols, d);
    for (i, ca) in a.coeffs.iter().enumerate() {
        for (j, cb) in b.coeffs.iter().enumerate() {
            naive_gemm_per_step(&mut out.coeffs[i + j], ca, cb, 1, 1)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> u64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            self.0 >> 33
        }
    }

    fn random_poly(field: PrimeField, m: usize, n: usize, d: usize, rng: &mut Lcg) -> PolyMatrix {
        let mut p = PolyMatrix::zeros(field, m, n, d);
        for t in 0..=d {
            for i in 0..m {
                for j in 0..n {
                    p.coeff_mut(t).set(i, j, rng.next() % field.modulus());
                }
            }
        }
        p
    }

    #[test]
    fn root_order_four_mod_17() {
        let field = f(17);
        let w = find_root(&field, 4).unwrap();
        assert_eq!(field.pow(w, 4), 1);
        assert_eq!(field.pow(w, 2), 16);
        // agreement with exhaustive order check
        let all: Vec<u64> = (1..17)
            .filter(|&x| field.pow(x, 4) == 1 && field.pow(x, 2) != 1)
            .collect();
        assert!(all.contains(&w));
    }

    #[test]
    fn no_root_mod_7() {
        match find_root(&f(7), 4) {
            Err(Error::NoRoot { p: 7, order: 4 }) => {}
            other => panic!("expected NoRoot, got {other:?}"),
        }
    }

    #[test]
    fn fermat_prime_full_length_root() {
        let field = f(257);
        let w = find_root(&field, 256).unwrap();
        assert_eq!(field.pow(w, 256), 1);
        assert_eq!(field.pow(w, 128), 256);
        for e in 1..256 {
            if 256 % e == 0 && e != 256 {
                assert_ne!(field.pow(w, e), 1, "order divides {e}");
            }
        }
    }

    #[test]
    fn delta_transforms_to_constant() {
        let field = f(257);
        let plan = NttPlan::new(field, 8).unwrap();
        let mut v = vec![0u64; 8];
        v[0] = 42;
        assert_eq!(ntt_forward(&v, &plan).unwrap(), vec![42; 8]);
    }

    #[test]
    fn two_point_butterfly() {
        let field = f(17);
        let plan = NttPlan::new(field, 2).unwrap();
        let out = ntt_forward(&[5, 3], &plan).unwrap();
        assert_eq!(out, vec![8, 2]); // (a+b, a-b) mod 17
    }

    #[test]
    fn forward_matches_direct_sum() {
        let field = f(97);
        let plan = NttPlan::new(field, 8).unwrap();
        let v = [3u64, 1, 4, 1, 5, 9, 2, 6];
        let vh = ntt_forward(&v, &plan).unwrap();
        for j in 0..8 {
            let mut acc = 0u64;
            for (i, &x) in v.iter().enumerate() {
                acc = field.add(acc, field.mul(x, field.pow(plan.root(), (i * j) as u64)));
            }
            assert_eq!(vh[j], acc, "component {j}");
        }
    }

    #[test]
    fn round_trip_up_to_4096() {
        let field = f(786433); // 3 * 2^18 + 1
        let mut rng = Lcg(7);
        let mut n = 2usize;
        while n <= 4096 {
            let plan = NttPlan::new(field, n).unwrap();
            let v: Vec<u64> = (0..n).map(|_| rng.next() % field.modulus()).collect();
            let back = ntt_inverse(&ntt_forward(&v, &plan).unwrap(), &plan).unwrap();
            assert_eq!(back, v, "length {n}");
            n *= 2;
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let plan = NttPlan::new(f(17), 4).unwrap();
        assert!(matches!(
            ntt_forward(&[1, 2, 3], &plan),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn constant_times_constant_is_plain_product() {
        let field = f(101);
        let mut rng = Lcg(11);
        let a = random_poly(field, 3, 4, 0, &mut rng);
        let b = random_poly(field, 4, 2, 0, &mut rng);
        let c = poly_mul(&a, &b).unwrap();
        assert_eq!(c.degree(), 0);
        let mut expect = DenseMatrix::zeros(field, 3, 2);
        naive_gemm_per_step(&mut expect, a.coeff(0), b.coeff(0), 1, 0).unwrap();
        assert_eq!(*c.coeff(0), expect);
    }

    #[test]
    fn difference_of_squares_identity() {
        let field = f(17);
        let eye = DenseMatrix::identity(field, 2);
        let mut neg = DenseMatrix::zeros(field, 2, 2);
        for i in 0..2 {
            neg.set(i, i, field.neg(1));
        }
        // (xI + I)(xI - I) = x^2 I - I
        let a = PolyMatrix::from_coeffs(vec![eye.clone(), eye.clone()]).unwrap();
        let b = PolyMatrix::from_coeffs(vec![neg.clone(), eye.clone()]).unwrap();
        let c = poly_mul(&a, &b).unwrap();
        assert_eq!(c.degree(), 2);
        assert_eq!(*c.coeff(0), neg);
        assert_eq!(*c.coeff(1), DenseMatrix::zeros(field, 2, 2));
        assert_eq!(*c.coeff(2), eye);
    }

    #[test]
    fn fallback_path_matches_schoolbook() {
        let field = f(7);
        let mut rng = Lcg(23);
        let a = random_poly(field, 3, 3, 7, &mut rng);
        let b = random_poly(field, 3, 3, 6, &mut rng);
        let fast = poly_mul(&a, &b).unwrap();
        let slow = poly_mul_schoolbook(&a, &b).unwrap();
        assert_eq!(fast, slow);
    }

    #[test]
    fn random_instances_match_schoolbook() {
        let mut rng = Lcg(99);
        for &p in &[7u64, 257, 65537, 786433] {
            let field = f(p);
            for case in 0..4 {
                let (m, k, n) = (
                    1 + (rng.next() as usize % 8),
                    1 + (rng.next() as usize % 8),
                    1 + (rng.next() as usize % 8),
                );
                let (da, db) = (rng.next() as usize % 33, rng.next() as usize % 33);
                let a = random_poly(field, m, k, da, &mut rng);
                let b = random_poly(field, k, n, db, &mut rng);
                let fast = poly_mul(&a, &b).unwrap();
                let slow = poly_mul_schoolbook(&a, &b).unwrap();
                assert_eq!(fast, slow, "p={p} case={case}");
                assert_eq!(fast.degree(), da + db);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let field = f(17);
        let a = PolyMatrix::zeros(field, 2, 3, 1);
        let b = PolyMatrix::zeros(field, 2, 2, 1);
        assert!(matches!(poly_mul(&a, &b), Err(Error::DimensionMismatch(_))));
    }
}
