//! Word-size prime field arithmetic, delayed-reduction bounds and
//! residue number system (CRT) support.

use crate::error::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Hard policy limit on the modulus: products of canonical elements must
/// stay well inside a 64-bit accumulator.
pub const MAX_MODULUS_BITS: u32 = 26;

/// A word-size prime field Z/pZ with a precomputed delayed-reduction bound.
///
/// Elements are canonical representatives stored as `u64` in `[0, p)`.
/// The field object is immutable and `Copy`; it is passed by value wherever
/// a container or kernel needs element arithmetic.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PrimeField {
    p: u64,
    acc_capacity: u64,
    k_max: u64,
}

impl PrimeField {
    /// Builds the field for a prime `p < 2^26` with the full 64-bit
    /// accumulator capacity.
    pub fn new(p: u64) -> Result<Self> {
        Self::with_capacity(p, u64::MAX)
    }

    /// Builds the field with an explicit accumulator capacity `C`.
    pub fn with_capacity(p: u64, capacity: u64) -> Result<Self> {
        if p >= 1u64 << MAX_MODULUS_BITS {
            return Err(Error::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let k_max = delayed_bound_raw(p, capacity)?;
        Ok(PrimeField {
            p,
            acc_capacity: capacity,
            k_max,
        })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn acc_capacity(&self) -> u64 {
        self.acc_capacity
    }

    /// Maximum number of products of canonical elements that can be
    /// accumulated on top of one canonical value without reduction.
    #[inline]
    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    #[inline]
    pub fn zero(&self) -> u64 {
        0
    }

    #[inline]
    pub fn one(&self) -> u64 {
        1 % self.p
    }

    /// Canonical representative of a signed integer.
    #[inline]
    pub fn normalize(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.p as i64);
        r as u64
    }

    /// Canonical representative of an arbitrary-precision integer.
    pub fn normalize_big(&self, x: &BigInt) -> u64 {
        let r = x.mod_floor(&BigInt::from(self.p));
        r.to_u64().expect("residue fits u64")
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        // products of 26-bit values fit u64 with room to spare
        (a * b) % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = self.one();
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by extended Euclid.
    pub fn inv(&self, x: u64) -> Result<u64> {
        if x == 0 {
            return Err(Error::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.p as i64, x as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.normalize(t0))
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.mul(a, self.inv(b)?))
    }
}

/// `k_max = floor((C - (p-1)) / (p-1)^2)`: the number of products of
/// canonical elements that fit on top of an initial canonical value
/// without exceeding the accumulator capacity `C`.
pub fn delayed_bound(field: &PrimeField, capacity: u64) -> Result<u64> {
    delayed_bound_raw(field.modulus(), capacity)
}

fn delayed_bound_raw(p: u64, capacity: u64) -> Result<u64> {
    let pm1 = (p - 1) as u128;
    let c = capacity as u128;
    if c < pm1 * pm1 + pm1 {
        return Err(Error::CapacityTooSmall { p, capacity });
    }
    if pm1 == 0 {
        // p = 1 is rejected by primality before we get here
        unreachable!();
    }
    let k = (c - pm1) / (pm1 * pm1);
    Ok(u64::try_from(k).unwrap_or(u64::MAX))
}

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for all 64-bit inputs with this
/// witness set.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Largest prime strictly below `limit`, if any.
pub fn prev_prime(limit: u64) -> Option<u64> {
    let mut c = limit.checked_sub(1)?;
    while c >= 2 {
        if is_prime(c) {
            return Some(c);
        }
        c -= 1;
    }
    None
}

/// A residue number system basis: pairwise-distinct word-size primes with
/// precomputed Lagrange reconstruction constants.
#[derive(Clone, Debug)]
pub struct RnsBasis {
    primes: Vec<u64>,
    product: BigUint,
    // crt_coeffs[i] = ((M/q_i)^{-1} mod q_i) * (M/q_i), ready to scale a residue
    crt_terms: Vec<BigUint>,
}

impl RnsBasis {
    /// Builds a basis from an explicit list of distinct primes.
    pub fn from_primes(primes: Vec<u64>) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidArgument("empty RNS basis".into()));
        }
        let mut seen = primes.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != primes.len() {
            return Err(Error::InvalidArgument("duplicate prime in RNS basis".into()));
        }
        for &q in &primes {
            if !is_prime(q) {
                return Err(Error::NotPrime(q));
            }
        }
        let product: BigUint = primes.iter().map(|&q| BigUint::from(q)).product();
        let crt_terms = primes
            .iter()
            .map(|&q| {
                let mi = &product / q;
                let mi_mod_q = (&mi % q).to_u64().unwrap();
                let inv = inv_mod(mi_mod_q, q).unwrap();
                mi * inv
            })
            .collect();
        Ok(RnsBasis {
            primes,
            product,
            crt_terms,
        })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Product of the basis primes.
    pub fn product(&self) -> &BigUint {
        &self.product
    }
}

fn inv_mod(x: u64, m: u64) -> Result<u64> {
    if x == 0 {
        return Err(Error::DivisionByZero);
    }
    let (mut r0, mut r1) = (m as i128, x as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    Ok(t0.rem_euclid(m as i128) as u64)
}

/// Builds the smallest basis of distinct primes, each below `2^prime_bits`,
/// chosen in decreasing order, whose product exceeds `2 * bound` (the factor
/// two admits balanced signed reconstruction).
pub fn rns_build(bound: &BigUint, prime_bits: u32) -> Result<RnsBasis> {
    if prime_bits < 2 {
        return Err(Error::PrimeBitsTooSmall(prime_bits));
    }
    let target = bound * 2u32;
    let mut primes = Vec::new();
    let mut product = BigUint::one();
    let mut candidate = 1u64 << prime_bits;
    while product <= target {
        let q = prev_prime(candidate).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "not enough primes below 2^{prime_bits} to reach the bound"
            ))
        })?;
        primes.push(q);
        product *= q;
        candidate = q;
    }
    RnsBasis::from_primes(primes)
}

/// Reconstructs the unique integer in the balanced range `(-M/2, M/2]`
/// congruent to each residue modulo its prime.
pub fn crt_reconstruct(residues: &[u64], basis: &RnsBasis) -> Result<BigInt> {
    if residues.len() != basis.len() {
        return Err(Error::ResidueCountMismatch {
            expected: basis.len(),
            got: residues.len(),
        });
    }
    let mut acc = BigUint::zero();
    for (&r, term) in residues.iter().zip(&basis.crt_terms) {
        acc += term * r;
    }
    acc %= &basis.product;
    let m = BigInt::from(basis.product.clone());
    let r = BigInt::from(acc);
    // balanced range (-M/2, M/2]: keep r iff 2r <= M
    if &r * 2 <= m {
        Ok(r)
    } else {
        Ok(r - m)
    }
}

/// Residue of a signed big integer modulo `q`, canonical in `[0, q)`.
pub fn big_mod_u64(x: &BigInt, q: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(q));
    debug_assert!(!r.is_negative());
    r.to_u64().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn normalize_examples() {
        let f7 = PrimeField::new(7).unwrap();
        assert_eq!(f7.normalize(0), 0);
        assert_eq!(f7.normalize(-1), 6);
        let f5 = PrimeField::new(5).unwrap();
        // brute-force subtraction oracle
        let mut x = 23i64;
        while x >= 5 {
            x -= 5;
        }
        assert_eq!(f5.normalize(23), x as u64);
        assert_eq!(f5.normalize(23), 3);
    }

    #[test]
    fn invert_examples() {
        let f7 = PrimeField::new(7).unwrap();
        assert_eq!(f7.inv(1).unwrap(), 1);
        // exhaustive search oracle over [1, 7)
        let expected = (1..7).find(|&y| (3 * y) % 7 == 1).unwrap();
        assert_eq!(f7.inv(3).unwrap(), expected);
        assert_eq!(f7.inv(3).unwrap(), 5);
        let f5 = PrimeField::new(5).unwrap();
        assert!(matches!(f5.inv(0), Err(Error::DivisionByZero)));
    }

    #[test]
    fn invert_exhaustive_small_primes() {
        let mut p = 2u64;
        while p < 1000 {
            if is_prime(p) {
                let f = PrimeField::new(p).unwrap();
                for x in 1..p {
                    assert_eq!(f.mul(f.inv(x).unwrap(), x), 1, "p={p} x={x}");
                }
            }
            p += 1;
        }
    }

    #[test]
    fn delayed_bound_examples() {
        let f3 = PrimeField::new(3).unwrap();
        assert_eq!(delayed_bound(&f3, u64::MAX).unwrap(), 4611686018427387903);

        let p = 67108859u64;
        let f = PrimeField::new(p).unwrap();
        let k = delayed_bound(&f, u64::MAX).unwrap();
        // formula evaluated with exact 128-bit integers
        let pm1 = (p - 1) as u128;
        let expect = ((u64::MAX as u128 - pm1) / (pm1 * pm1)) as u64;
        assert_eq!(k, expect);
        assert!((4000..5000).contains(&k), "k_max={k}");

        let f2 = PrimeField::with_capacity(2, 2).unwrap();
        assert_eq!(f2.k_max(), 1);
        assert!(matches!(
            PrimeField::with_capacity(3, 3),
            Err(Error::CapacityTooSmall { .. })
        ));
    }

    #[test]
    fn delayed_bound_tightness() {
        for p in [2u64, 3, 101, 65537, 67108859] {
            let f = PrimeField::new(p).unwrap();
            let c = u64::MAX as u128;
            let k = f.k_max() as u128;
            let pm1 = (p - 1) as u128;
            assert!(pm1 + k * pm1 * pm1 <= c);
            assert!(pm1 + (k + 1) * pm1 * pm1 > c);
        }
    }

    #[test]
    fn field_rejects_bad_moduli() {
        assert!(matches!(PrimeField::new(6), Err(Error::NotPrime(6))));
        assert!(matches!(
            PrimeField::new(1 << 26),
            Err(Error::ModulusTooLarge(_))
        ));
    }

    #[test]
    fn rns_build_examples() {
        let b = rns_build(&BigUint::from(1u32), 26).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.product() > &BigUint::from(2u32));

        let bound = BigUint::parse_bytes(b"100000000000000000000", 10).unwrap();
        let b = rns_build(&bound, 26).unwrap();
        let target = &bound * 2u32;
        assert!(b.product() > &target);
        // minimality: dropping the largest prime must break the bound
        let largest = *b.primes().iter().max().unwrap();
        assert!(b.product() / largest <= target);

        let b = rns_build(&BigUint::from(7u32), 4).unwrap();
        assert_eq!(b.primes(), &[13, 11]);

        assert!(matches!(
            rns_build(&BigUint::from(7u32), 1),
            Err(Error::PrimeBitsTooSmall(1))
        ));
    }

    #[test]
    fn crt_examples() {
        let b = RnsBasis::from_primes(vec![3, 5]).unwrap();
        // exhaustive scan oracle over (-7..7]
        let mut oracle = None;
        for r in -7i64..=7 {
            if r.rem_euclid(3) == 2 && r.rem_euclid(5) == 3 {
                oracle = Some(r);
            }
        }
        assert_eq!(oracle, Some(-7));
        assert_eq!(crt_reconstruct(&[2, 3], &b).unwrap(), BigInt::from(-7));
        assert_eq!(crt_reconstruct(&[0, 0], &b).unwrap(), BigInt::from(0));

        let b7 = RnsBasis::from_primes(vec![7]).unwrap();
        assert_eq!(crt_reconstruct(&[6], &b7).unwrap(), BigInt::from(-1));

        assert!(matches!(
            crt_reconstruct(&[1], &b),
            Err(Error::ResidueCountMismatch { .. })
        ));
    }

    #[test]
    fn crt_round_trip_exhaustive_small() {
        // every basis with M <= 10^4 formed from a few small primes
        for primes in [vec![3u64, 5], vec![7, 11], vec![2, 3, 5, 7], vec![97, 101]] {
            let b = RnsBasis::from_primes(primes.clone()).unwrap();
            let m = b.product().to_u64().unwrap();
            assert!(m <= 10_000);
            let half = (m / 2) as i64;
            for r in (-(half as i64) + 1)..=half {
                let residues: Vec<u64> =
                    primes.iter().map(|&q| r.rem_euclid(q as i64) as u64).collect();
                assert_eq!(crt_reconstruct(&residues, &b).unwrap(), BigInt::from(r));
            }
        }
    }

    #[test]
    fn arithmetic_matches_bignum() {
        use num_traits::ToPrimitive;
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for p in [2u64, 3, 101, 65537, 67108859] {
            let f = PrimeField::new(p).unwrap();
            for _ in 0..200 {
                let x = next() % p;
                let y = next() % p;
                let bx = BigInt::from(x);
                let by = BigInt::from(y);
                let sum = ((&bx + &by) % p).to_u64().unwrap();
                let prod = ((&bx * &by) % p).to_u64().unwrap();
                assert_eq!(f.add(x, y), sum);
                assert_eq!(f.mul(x, y), prod);
            }
        }
    }
}
