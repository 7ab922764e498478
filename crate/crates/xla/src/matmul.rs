//! The `mul` solution: a controller that dispatches between a
//! delayed-reduction base case and a Strassen-Winograd recursive step.
//! The recursive step issues its seven sub-products back through the
//! controller, so the cascade can re-enter the base case at any depth.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::field::PrimeField;

/// Built-in crossover before tuning; `bench_tuner` overrides it.
pub const DEFAULT_MUL_THRESHOLD: usize = 64;

/// Caller-visible strategy selection.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Method {
    /// Threshold dispatch between the base case and the recursive step.
    Auto,
    /// Force the classic triple loop at every level.
    BaseCase,
    /// Force one recursive step at every level.
    Recursive,
}

/// Method tag, crossover threshold, scalars and instrumentation counters
/// for one multiplication problem. Cheap to copy per call.
#[derive(Clone, Debug)]
pub struct MulHelper {
    pub method: Method,
    pub threshold: usize,
    pub alpha: u64,
    pub beta: u64,
    /// Base-case gemm invocations issued by the controller.
    pub base_case_calls: u64,
    /// Winograd steps entered.
    pub recursive_steps: u64,
}

impl MulHelper {
    pub fn new() -> Self {
        MulHelper {
            method: Method::Auto,
            threshold: DEFAULT_MUL_THRESHOLD,
            alpha: 1,
            beta: 0,
            base_case_calls: 0,
            recursive_steps: 0,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_threshold(mut self, threshold: usize) -> Self {
        assert!(threshold >= 1, "threshold must be at least 1");
        self.threshold = threshold;
        self
    }

    pub fn with_scalars(mut self, alpha: u64, beta: u64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn reset_counters(&mut self) {
        self.base_case_calls = 0;
        self.recursive_steps = 0;
    }
}

impl Default for MulHelper {
    fn default() -> Self {
        Self::new()
    }
}

/// A block inside a row-major buffer.
#[derive(Clone, Copy)]
struct Blk {
    off: usize,
    stride: usize,
}

impl Blk {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        self.off + i * self.stride + j
    }

    fn shift(&self, di: usize, dj: usize) -> Blk {
        Blk {
            off: self.at(di, dj),
            stride: self.stride,
        }
    }
}

/// `C = alpha * A * B + beta * C` over one prime field.
///
/// Dispatch: the caller's method tag short-circuits the strategy; under
/// `Auto` the recursive step is taken only while every halved dimension
/// stays at or above the threshold. Aliasing of `C` with `A` or `B` is
/// impossible through this signature (exclusive borrow of `C`).
pub fn mul_controller(
    c: &mut DenseMatrix,
    a: &DenseMatrix,
    b: &DenseMatrix,
    h: &mut MulHelper,
) -> Result<()> {
    if a.field() != b.field() || a.field() != c.field() {
        return Err(Error::DimensionMismatch("operands over different fields".into()));
    }
    if a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "C {}x{} = A {}x{} * B {}x{}",
            c.rows(),
            c.cols(),
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let f = a.field();
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let (alpha, beta) = (h.alpha % f.modulus(), h.beta % f.modulus());
    let (ab, bb, cb) = (
        Blk { off: 0, stride: a.stride() },
        Blk { off: 0, stride: b.stride() },
        Blk { off: 0, stride: c.stride() },
    );
    let a_data = a.data();
    let b_data = b.data();
    ctrl(f, m, k, n, c.data_mut(), cb, a_data, ab, b_data, bb, alpha, beta, h);
    Ok(())
}

fn ctrl(
    f: PrimeField,
    m: usize,
    k: usize,
    n: usize,
    c: &mut [u64],
    cb: Blk,
    a: &[u64],
    ab: Blk,
    b: &[u64],
    bb: Blk,
    alpha: u64,
    beta: u64,
    h: &mut MulHelper,
) {
    if m == 0 || n == 0 {
        return;
    }
    let go_base = match h.method {
        Method::BaseCase => true,
        Method::Recursive => false,
        Method::Auto => m.min(k).min(n) < h.threshold.saturating_mul(2),
    };
    if go_base {
        h.base_case_calls += 1;
        base_gemm(f, m, k, n, c, cb, a, ab, b, bb, alpha, beta);
    } else {
        winograd_step(f, m, k, n, c, cb, a, ab, b, bb, alpha, beta, h);
    }
}

/// Classic triple loop. Inner dot products accumulate without modular
/// reduction in blocks of at most `k_max` terms; the result is identical
/// to per-step-reduced arithmetic.
fn base_gemm(
    f: PrimeField,
    m: usize,
    k: usize,
    n: usize,
    c: &mut [u64],
    cb: Blk,
    a: &[u64],
    ab: Blk,
    b: &[u64],
    bb: Blk,
    alpha: u64,
    beta: u64,
) {
    let p = f.modulus();
    let kmax = usize::try_from(f.k_max()).unwrap_or(usize::MAX);
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0u64;
            let mut pending = 0usize;
            for t in 0..k {
                acc += a[ab.at(i, t)] * b[bb.at(t, j)];
                pending += 1;
                if pending == kmax {
                    acc %= p;
                    pending = 0;
                }
            }
            acc %= p;
            let idx = cb.at(i, j);
            c[idx] = (alpha * acc % p + beta * c[idx] % p) % p;
        }
    }
}

/// Delayed-reduction dot product of a row of `A` against a column of `B`.
fn dot(
    f: PrimeField,
    k: usize,
    a: &[u64],
    ab: Blk,
    i: usize,
    b: &[u64],
    bb: Blk,
    j: usize,
) -> u64 {
    let p = f.modulus();
    let kmax = usize::try_from(f.k_max()).unwrap_or(usize::MAX);
    let mut acc = 0u64;
    let mut pending = 0usize;
    for t in 0..k {
        acc += a[ab.at(i, t)] * b[bb.at(t, j)];
        pending += 1;
        if pending == kmax {
            acc %= p;
            pending = 0;
        }
    }
    acc % p
}

/// One Strassen-Winograd level with dynamic peeling for odd dimensions.
#[allow(clippy::too_many_arguments)]
fn winograd_step(
    f: PrimeField,
    m: usize,
    k: usize,
    n: usize,
    c: &mut [u64],
    cb: Blk,
    a: &[u64],
    ab: Blk,
    b: &[u64],
    bb: Blk,
    alpha: u64,
    beta: u64,
    h: &mut MulHelper,
) {
    h.recursive_steps += 1;
    let p = f.modulus();
    let (me, ke, ne) = (m & !1, k & !1, n & !1);

    if me > 0 && ne > 0 {
        if ke > 0 {
            wino_core(f, me, ke, ne, c, cb, a, ab, b, bb, alpha, beta, h);
        } else {
            scale_block(f, me, ne, c, cb, beta);
        }
        if k & 1 == 1 {
            // rank-1 fixup with the peeled column of A and row of B
            for i in 0..me {
                let av = a[ab.at(i, k - 1)];
                if av == 0 {
                    continue;
                }
                let s = alpha * av % p;
                for j in 0..ne {
                    let idx = cb.at(i, j);
                    c[idx] = (c[idx] + s * b[bb.at(k - 1, j)]) % p;
                }
            }
        }
    }
    if n & 1 == 1 {
        // peeled last column, full inner dimension
        for i in 0..m {
            let d = dot(f, k, a, ab, i, b, bb, n - 1);
            let idx = cb.at(i, n - 1);
            c[idx] = (alpha * d % p + beta * c[idx] % p) % p;
        }
    }
    if m & 1 == 1 {
        let jmax = if n & 1 == 1 { n - 1 } else { n };
        for j in 0..jmax {
            let d = dot(f, k, a, ab, m - 1, b, bb, j);
            let idx = cb.at(m - 1, j);
            c[idx] = (alpha * d % p + beta * c[idx] % p) % p;
        }
    }
}

fn scale_block(f: PrimeField, m: usize, n: usize, c: &mut [u64], cb: Blk, beta: u64) {
    let p = f.modulus();
    for i in 0..m {
        for j in 0..n {
            let idx = cb.at(i, j);
            c[idx] = beta * c[idx] % p;
        }
    }
}

/// dst[i][j] = x op y over an `r x s` block, dst in its own buffer.
fn temp_combine(
    f: PrimeField,
    r: usize,
    s: usize,
    dst: &mut [u64],
    x: &[u64],
    xb: Blk,
    y: &[u64],
    yb: Blk,
    sub: bool,
) {
    for i in 0..r {
        for j in 0..s {
            let (xv, yv) = (x[xb.at(i, j)], y[yb.at(i, j)]);
            dst[i * s + j] = if sub { f.sub(xv, yv) } else { f.add(xv, yv) };
        }
    }
}

/// dst = src op dst (in place over the temp buffer), src in another buffer.
fn temp_update(
    f: PrimeField,
    r: usize,
    s: usize,
    dst: &mut [u64],
    src: &[u64],
    sb: Blk,
    src_minus_dst: bool,
) {
    for i in 0..r {
        for j in 0..s {
            let idx = i * s + j;
            dst[idx] = if src_minus_dst {
                f.sub(src[sb.at(i, j)], dst[idx])
            } else {
                f.sub(dst[idx], src[sb.at(i, j)])
            };
        }
    }
}

/// c[dst] += sign * c[src]; both blocks live inside the `c` buffer.
fn c_add_assign(f: PrimeField, r: usize, s: usize, c: &mut [u64], dst: Blk, src: Blk, sub: bool) {
    for i in 0..r {
        for j in 0..s {
            let sv = c[src.at(i, j)];
            let d = dst.at(i, j);
            c[d] = if sub { f.sub(c[d], sv) } else { f.add(c[d], sv) };
        }
    }
}

/// c[dst] += t (temp buffer with row stride `s`), optionally subtracting.
fn c_add_temp(
    f: PrimeField,
    r: usize,
    s: usize,
    c: &mut [u64],
    dst: Blk,
    t: &[u64],
    sub: bool,
) {
    for i in 0..r {
        for j in 0..s {
            let d = dst.at(i, j);
            c[d] = if sub {
                f.sub(c[d], t[i * s + j])
            } else {
                f.add(c[d], t[i * s + j])
            };
        }
    }
}

/// The quadrant schedule for even `m, k, n`. The seven sub-products are
/// issued through the controller. `beta == 0` uses the classic schedule
/// with two temporaries (C quadrants double as scratch); `beta != 0`
/// uses the accumulation schedule with three temporaries.
#[allow(clippy::too_many_arguments)]
fn wino_core(
    f: PrimeField,
    m: usize,
    k: usize,
    n: usize,
    c: &mut [u64],
    cb: Blk,
    a: &[u64],
    ab: Blk,
    b: &[u64],
    bb: Blk,
    alpha: u64,
    beta: u64,
    h: &mut MulHelper,
) {
    let (m2, k2, n2) = (m / 2, k / 2, n / 2);
    let (a11, a12, a21, a22) = (ab, ab.shift(0, k2), ab.shift(m2, 0), ab.shift(m2, k2));
    let (b11, b12, b21, b22) = (bb, bb.shift(0, n2), bb.shift(k2, 0), bb.shift(k2, n2));
    let (c11, c12, c21, c22) = (cb, cb.shift(0, n2), cb.shift(m2, 0), cb.shift(m2, n2));
    let tmp_blk = |s: usize| Blk { off: 0, stride: s };

    if beta == 0 {
        // X1 holds the S sums (m2 x k2) and later P1 (m2 x n2)
        let mut x1 = vec![0u64; (m2 * k2).max(m2 * n2)];
        let mut x2 = vec![0u64; k2 * n2];

        // P7 = (A11 - A21)(B22 - B12) -> C21
        temp_combine(f, m2, k2, &mut x1, a, a11, a, a21, true);
        temp_combine(f, k2, n2, &mut x2, b, b22, b, b12, true);
        ctrl(f, m2, k2, n2, c, c21, &x1, tmp_blk(k2), &x2, tmp_blk(n2), alpha, 0, h);
        // P5 = (A21 + A22)(B12 - B11) -> C22
        temp_combine(f, m2, k2, &mut x1, a, a21, a, a22, false);
        temp_combine(f, k2, n2, &mut x2, b, b12, b, b11, true);
        ctrl(f, m2, k2, n2, c, c22, &x1, tmp_blk(k2), &x2, tmp_blk(n2), alpha, 0, h);
        // P6 = (S1 - A11)(B22 - T1) -> C12
        temp_update(f, m2, k2, &mut x1, a, a11, false);
        temp_update(f, k2, n2, &mut x2, b, b22, true);
        ctrl(f, m2, k2, n2, c, c12, &x1, tmp_blk(k2), &x2, tmp_blk(n2), alpha, 0, h);
        // P3 = (A12 - S2) B22 -> C11 (scratch)
        temp_update(f, m2, k2, &mut x1, a, a12, true);
        ctrl(f, m2, k2, n2, c, c11, &x1, tmp_blk(k2), b, b22, alpha, 0, h);
        // T4 = T2 - B21 stays in X2
        temp_update(f, k2, n2, &mut x2, b, b21, false);
        // P1 = A11 B11 -> X1
        {
            let (p1, rest) = x1.split_at_mut(m2 * n2);
            let _ = rest;
            ctrl(f, m2, k2, n2, p1, tmp_blk(n2), a, a11, b, b11, alpha, 0, h);
        }
        // U2 = P1 + P6
        c_add_temp(f, m2, n2, c, c12, &x1[..m2 * n2], false);
        // U3 = U2 + P7
        c_add_assign(f, m2, n2, c, c21, c12, false);
        // U4 = U2 + P5
        c_add_assign(f, m2, n2, c, c12, c22, false);
        // C12 = U4 + P3
        c_add_assign(f, m2, n2, c, c12, c11, false);
        // C22 = U3 + P5
        c_add_assign(f, m2, n2, c, c22, c21, false);
        // P4 = A22 T4 -> C11 (scratch), C21 = U3 - P4
        ctrl(f, m2, k2, n2, c, c11, a, a22, &x2, tmp_blk(n2), alpha, 0, h);
        c_add_assign(f, m2, n2, c, c21, c11, true);
        // C11 = P2 + P1
        ctrl(f, m2, k2, n2, c, c11, a, a12, b, b21, alpha, 0, h);
        c_add_temp(f, m2, n2, c, c11, &x1[..m2 * n2], false);
    } else {
        scale_block(f, m, n, c, cb, beta);
        let mut ts = vec![0u64; m2 * k2];
        let mut tt = vec![0u64; k2 * n2];
        let mut tp = vec![0u64; m2 * n2];
        let product = |ts: &[u64], tt: &[u64], tp: &mut [u64], h: &mut MulHelper| {
            ctrl(f, m2, k2, n2, tp, tmp_blk(n2), ts, tmp_blk(k2), tt, tmp_blk(n2), alpha, 0, h);
        };

        // P7
        temp_combine(f, m2, k2, &mut ts, a, a11, a, a21, true);
        temp_combine(f, k2, n2, &mut tt, b, b22, b, b12, true);
        product(&ts, &tt, &mut tp, h);
        c_add_temp(f, m2, n2, c, c21, &tp, false);
        c_add_temp(f, m2, n2, c, c22, &tp, false);
        // P5
        temp_combine(f, m2, k2, &mut ts, a, a21, a, a22, false);
        temp_combine(f, k2, n2, &mut tt, b, b12, b, b11, true);
        product(&ts, &tt, &mut tp, h);
        c_add_temp(f, m2, n2, c, c12, &tp, false);
        c_add_temp(f, m2, n2, c, c22, &tp, false);
        // P6
        temp_update(f, m2, k2, &mut ts, a, a11, false);
        temp_update(f, k2, n2, &mut tt, b, b22, true);
        product(&ts, &tt, &mut tp, h);
        c_add_temp(f, m2, n2, c, c12, &tp, false);
        c_add_temp(f, m2, n2, c, c21, &tp, false);
        c_add_temp(f, m2, n2, c, c22, &tp, false);
        // P1
        ctrl(f, m2, k2, n2, &mut tp, tmp_blk(n2), a, a11, b, b11, alpha, 0, h);
        c_add_temp(f, m2, n2, c, c11, &tp, false);
        c_add_temp(f, m2, n2, c, c12, &tp, false);
        c_add_temp(f, m2, n2, c, c21, &tp, false);
        c_add_temp(f, m2, n2, c, c22, &tp, false);
        // P2
        ctrl(f, m2, k2, n2, &mut tp, tmp_blk(n2), a, a12, b, b21, alpha, 0, h);
        c_add_temp(f, m2, n2, c, c11, &tp, false);
        // P3 = (A12 - S2) B22
        temp_update(f, m2, k2, &mut ts, a, a12, true);
        ctrl(f, m2, k2, n2, &mut tp, tmp_blk(n2), &ts, tmp_blk(k2), b, b22, alpha, 0, h);
        c_add_temp(f, m2, n2, c, c12, &tp, false);
        // P4 = A22 (T2 - B21)
        temp_update(f, k2, n2, &mut tt, b, b21, false);
        ctrl(f, m2, k2, n2, &mut tp, tmp_blk(n2), a, a22, &tt, tmp_blk(n2), alpha, 0, h);
        c_add_temp(f, m2, n2, c, c21, &tp, true);
    }
}

/// Which product the apply performs: `Right` is `y <- alpha A x + beta y`,
/// `Left` is the transpose apply `y <- alpha A^T x + beta y`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Left,
    Right,
}

/// Dense apply: reshapes the vector as a one-column block and routes
/// through the controller, transposing for `Side::Left`.
pub fn apply_dense(
    a: &DenseMatrix,
    y: &mut [u64],
    x: &[u64],
    side: Side,
    alpha: u64,
    beta: u64,
    h: &mut MulHelper,
) -> Result<()> {
    let (in_dim, out_dim) = match side {
        Side::Right => (a.cols(), a.rows()),
        Side::Left => (a.rows(), a.cols()),
    };
    if x.len() != in_dim || y.len() != out_dim {
        return Err(Error::DimensionMismatch(format!(
            "apply: |x|={} |y|={} for a {}x{} operand",
            x.len(),
            y.len(),
            a.rows(),
            a.cols()
        )));
    }
    let f = a.field();
    let mut xm = DenseMatrix::zeros(f, in_dim, 1);
    for (i, &v) in x.iter().enumerate() {
        xm.set(i, 0, v % f.modulus());
    }
    let mut ym = DenseMatrix::zeros(f, out_dim, 1);
    for (i, &v) in y.iter().enumerate() {
        ym.set(i, 0, v % f.modulus());
    }
    let mut hh = h.clone().with_scalars(alpha, beta);
    match side {
        Side::Right => mul_controller(&mut ym, a, &xm, &mut hh)?,
        Side::Left => mul_controller(&mut ym, &a.transpose(), &xm, &mut hh)?,
    }
    h.base_case_calls = hh.base_case_calls;
    h.recursive_steps = hh.recursive_steps;
    for i in 0..out_dim {
        y[i] = ym.get(i, 0);
    }
    Ok(())
}

/// Block apply: `X` and `Y` are blocks of column vectors.
pub fn apply_dense_block(
    a: &DenseMatrix,
    y: &mut DenseMatrix,
    x: &DenseMatrix,
    side: Side,
    alpha: u64,
    beta: u64,
    h: &mut MulHelper,
) -> Result<()> {
    let (in_dim, out_dim) = match side {
        Side::Right => (a.cols(), a.rows()),
        Side::Left => (a.rows(), a.cols()),
    };
    if x.rows() != in_dim || y.rows() != out_dim || x.cols() != y.cols() {
        return Err(Error::DimensionMismatch("block apply shapes".into()));
    }
    let mut hh = h.clone().with_scalars(alpha, beta);
    match side {
        Side::Right => mul_controller(y, a, x, &mut hh)?,
        Side::Left => mul_controller(y, &a.transpose(), x, &mut hh)?,
    }
    h.base_case_calls = hh.base_case_calls;
    h.recursive_steps = hh.recursive_steps;
    Ok(())
}

/// Schoolbook gemm with a reduction after every multiply-add. Slow and
/// obviously correct; the exactness oracle for every other path.
pub fn naive_gemm_per_step(
    c: &mut DenseMatrix,
    a: &DenseMatrix,
    b: &DenseMatrix,
    alpha: u64,
    beta: u64,
) -> Result<()> {
    if a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols() {
        return Err(Error::DimensionMismatch("naive gemm shapes".into()));
    }
    let f = a.field();
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0u64;
            for t in 0..a.cols() {
                acc = f.add(acc, f.mul(a.get(i, t), b.get(t, j)));
            }
            let v = f.add(f.mul(alpha % f.modulus(), acc), f.mul(beta % f.modulus(), c.get(i, j)));
            c.set(i, j, v);
        }
    }
    Ok(())
}
