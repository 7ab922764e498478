//! Sparse matrix-vector products: CSR/COO kernels with overflow-free
//! segmented accumulation, the HYB plus/minus/general splitting that
//! removes multiplications for unit entries, transpose caching and the
//! ad-hoc plan optimizer.

use crate::blackbox::{check_apply_dims, Blackbox};
use crate::error::Result;
use crate::field::PrimeField;
use crate::matmul::Side;
use crate::sparse::{SparseCoo, SparseCsr};

/// HYB trigger: split when at least this fraction of entries is +1 or -1.
pub const HYB_MIN_PM1_FRACTION: f64 = 0.25;

/// Field-multiplication tallies, split by kernel pass. The plus/minus
/// pattern passes of `hyb_apply` must keep `pm_mults` at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ApplyCounters {
    pub pm_mults: u64,
    pub general_mults: u64,
}

/// Pattern-only CSR: rows of column indices, no value array at all.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternCsr {
    rows: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl PatternCsr {
    fn from_triples(rows: usize, mut cols_by_row: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::new();
        for i in 0..rows {
            cols_by_row[i].sort_unstable();
            row_ptr[i + 1] = row_ptr[i] + cols_by_row[i].len();
            col_idx.extend_from_slice(&cols_by_row[i]);
        }
        PatternCsr {
            rows,
            row_ptr,
            col_idx,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }
}

/// Sum-of-three split: a +1 pattern, a -1 pattern and a general CSR with
/// disjoint supports whose sum is the source matrix.
#[derive(Clone, Debug)]
pub struct SparseHyb {
    field: PrimeField,
    rows: usize,
    cols: usize,
    plus: PatternCsr,
    minus: PatternCsr,
    general: SparseCsr,
}

impl SparseHyb {
    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn plus(&self) -> &PatternCsr {
        &self.plus
    }

    pub fn minus(&self) -> &PatternCsr {
        &self.minus
    }

    pub fn general(&self) -> &SparseCsr {
        &self.general
    }

    /// Reassembles the coordinate form (the serialization path).
    pub fn to_coo(&self) -> SparseCoo {
        let f = self.field;
        let mut triples = Vec::new();
        for i in 0..self.rows {
            for &j in self.plus.row(i) {
                triples.push((i, j, 1u64));
            }
            for &j in self.minus.row(i) {
                triples.push((i, j, f.modulus() - 1));
            }
            let (cols, vals) = self.general.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                triples.push((i, j, v));
            }
        }
        SparseCoo::from_triplets(f, self.rows, self.cols, &triples).unwrap()
    }
}

/// Splits entries with value 1 into the plus pattern, value p-1 into the
/// minus pattern and everything else into the general part. Over GF(2)
/// the single unit value goes to the plus pattern.
pub fn hyb_split(a: &SparseCsr) -> SparseHyb {
    let f = a.field();
    let p = f.modulus();
    let mut plus = vec![Vec::new(); a.rows()];
    let mut minus = vec![Vec::new(); a.rows()];
    let mut general = Vec::new();
    for i in 0..a.rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if v == 1 {
                plus[i].push(j);
            } else if v == p - 1 {
                minus[i].push(j);
            } else {
                general.push((i, j, v));
            }
        }
    }
    SparseHyb {
        field: f,
        rows: a.rows(),
        cols: a.cols(),
        plus: PatternCsr::from_triples(a.rows(), plus),
        minus: PatternCsr::from_triples(a.rows(), minus),
        general: SparseCoo::from_triplets(f, a.rows(), a.cols(), &general)
            .unwrap()
            .to_csr(),
    }
}

fn seg_len(f: PrimeField) -> usize {
    usize::try_from(f.k_max()).unwrap_or(usize::MAX)
}

/// Segmented sum of pattern-selected x entries; addition only.
fn pattern_row_sum(f: PrimeField, cols: &[usize], x: &[u64], seg: usize) -> u64 {
    let p = f.modulus();
    let mut acc = 0u64;
    let mut pending = 0usize;
    for &j in cols {
        acc += x[j] % p;
        pending += 1;
        if pending == seg {
            acc %= p;
            pending = 0;
        }
    }
    acc % p
}

/// Exact `y <- alpha A x + beta y` (Right) or the transpose apply (Left)
/// for a CSR matrix. Accumulation segments never exceed the field's
/// delayed-reduction capacity.
pub fn csr_apply(
    a: &SparseCsr,
    y: &mut [u64],
    x: &[u64],
    side: Side,
    alpha: u64,
    beta: u64,
) -> Result<()> {
    csr_apply_counted(a, y, x, side, alpha, beta, &mut ApplyCounters::default())
}

pub fn csr_apply_counted(
    a: &SparseCsr,
    y: &mut [u64],
    x: &[u64],
    side: Side,
    alpha: u64,
    beta: u64,
    counters: &mut ApplyCounters,
) -> Result<()> {
    check_apply_dims(a.rows(), a.cols(), y.len(), x.len(), side)?;
    let f = a.field();
    let p = f.modulus();
    let (alpha, beta) = (alpha % p, beta % p);
    let seg = seg_len(f);
    match side {
        Side::Right => {
            for i in 0..a.rows() {
                let (cols, vals) = a.row(i);
                let mut acc = 0u64;
                let mut pending = 0usize;
                for (&j, &v) in cols.iter().zip(vals) {
                    acc += v * (x[j] % p);
                    pending += 1;
                    if pending == seg {
                        acc %= p;
                        pending = 0;
                    }
                }
                counters.general_mults += cols.len() as u64;
                acc %= p;
                y[i] = (alpha * acc % p + beta * (y[i] % p) % p) % p;
            }
        }
        Side::Left => {
            // scatter loop with per-write reduction
            for v in y.iter_mut() {
                *v = beta * (*v % p) % p;
            }
            for i in 0..a.rows() {
                let s = alpha * (x[i] % p) % p;
                if s == 0 {
                    continue;
                }
                let (cols, vals) = a.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    y[j] = (y[j] + v * s % p) % p;
                }
                counters.general_mults += cols.len() as u64;
            }
        }
    }
    Ok(())
}

/// COO apply; the interchange format keeps the simple per-entry loop.
pub fn coo_apply(
    a: &SparseCoo,
    y: &mut [u64],
    x: &[u64],
    side: Side,
    alpha: u64,
    beta: u64,
) -> Result<()> {
    check_apply_dims(a.rows(), a.cols(), y.len(), x.len(), side)?;
    let f = a.field();
    let p = f.modulus();
    let (alpha, beta) = (alpha % p, beta % p);
    for v in y.iter_mut() {
        *v = beta * (*v % p) % p;
    }
    for &(i, j, v) in a.entries() {
        match side {
            Side::Right => y[i] = (y[i] + alpha * (v * (x[j] % p) % p) % p) % p,
            Side::Left => y[j] = (y[j] + alpha * (v * (x[i] % p) % p) % p) % p,
        }
    }
    Ok(())
}

/// HYB apply: the plus/minus pattern passes accumulate by addition and
/// subtraction only; alpha is applied once to the accumulated row sum.
pub fn hyb_apply(
    h: &SparseHyb,
    y: &mut [u64],
    x: &[u64],
    side: Side,
    alpha: u64,
    beta: u64,
    counters: &mut ApplyCounters,
) -> Result<()> {
    check_apply_dims(h.rows(), h.cols(), y.len(), x.len(), side)?;
    let f = h.field;
    let p = f.modulus();
    let (alpha, beta) = (alpha % p, beta % p);
    let seg = seg_len(f);
    match side {
        Side::Right => {
            for i in 0..h.rows() {
                let plus = pattern_row_sum(f, h.plus.row(i), x, seg);
                let minus = pattern_row_sum(f, h.minus.row(i), x, seg);
                let (cols, vals) = h.general.row(i);
                let mut gen = 0u64;
                let mut pending = 0usize;
                for (&j, &v) in cols.iter().zip(vals) {
                    gen += v * (x[j] % p);
                    pending += 1;
                    if pending == seg {
                        gen %= p;
                        pending = 0;
                    }
                }
                counters.general_mults += cols.len() as u64;
                gen %= p;
                let total = f.add(f.sub(plus, minus), gen);
                y[i] = (alpha * total % p + beta * (y[i] % p) % p) % p;
            }
        }
        Side::Left => {
            for v in y.iter_mut() {
                *v = beta * (*v % p) % p;
            }
            for i in 0..h.rows() {
                let s = alpha * (x[i] % p) % p;
                if s == 0 {
                    continue;
                }
                for &j in h.plus.row(i) {
                    y[j] = f.add(y[j], s);
                }
                for &j in h.minus.row(i) {
                    y[j] = f.sub(y[j], s);
                }
                let (cols, vals) = h.general.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    y[j] = (y[j] + v * s % p) % p;
                }
                counters.general_mults += cols.len() as u64;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpmvFormat {
    Coo,
    Csr,
    Hyb,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SpmvStats {
    pub nnz: usize,
    pub pm1_count: usize,
    pub rows: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct PlanOptions {
    pub allow_transpose_cache: bool,
    /// Extra storage slots the cached transpose may occupy.
    pub memory_budget: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            allow_transpose_cache: true,
            memory_budget: usize::MAX,
        }
    }
}

/// The chosen apply strategy for one matrix: format, optional cached
/// transpose for Left applies and the segmentation bound.
pub struct SpmvPlan {
    pub format: SpmvFormat,
    pub seg_len: usize,
    pub stats: SpmvStats,
    hyb: Option<SparseHyb>,
    transpose: Option<SparseCsr>,
}

impl SpmvPlan {
    pub fn has_cached_transpose(&self) -> bool {
        self.transpose.is_some()
    }

    pub fn apply(
        &self,
        a: &SparseCsr,
        y: &mut [u64],
        x: &[u64],
        side: Side,
        alpha: u64,
        beta: u64,
        counters: &mut ApplyCounters,
    ) -> Result<()> {
        if side == Side::Left {
            if let Some(t) = &self.transpose {
                return csr_apply_counted(t, y, x, Side::Right, alpha, beta, counters);
            }
        }
        match (&self.hyb, self.format) {
            (Some(h), SpmvFormat::Hyb) => hyb_apply(h, y, x, side, alpha, beta, counters),
            _ => csr_apply_counted(a, y, x, side, alpha, beta, counters),
        }
    }
}

/// Deterministic format chooser:
/// HYB when unit entries exceed a quarter of nnz, CSR otherwise; COO is
/// never chosen automatically. The transpose is cached when allowed and
/// its storage fits the budget.
pub fn optimize_plan(a: &SparseCsr, options: PlanOptions) -> SpmvPlan {
    let f = a.field();
    let p = f.modulus();
    let pm1 = a
        .values()
        .iter()
        .filter(|&&v| v == 1 || v == p - 1)
        .count();
    let stats = SpmvStats {
        nnz: a.nnz(),
        pm1_count: pm1,
        rows: a.rows(),
    };
    let use_hyb = a.nnz() > 0 && (pm1 as f64) > HYB_MIN_PM1_FRACTION * (a.nnz() as f64);
    let transpose = if options.allow_transpose_cache {
        let t = a.transpose();
        if t.storage_slots() <= options.memory_budget {
            Some(t)
        } else {
            None
        }
    } else {
        None
    };
    SpmvPlan {
        format: if use_hyb { SpmvFormat::Hyb } else { SpmvFormat::Csr },
        seg_len: seg_len(f),
        stats,
        hyb: if use_hyb { Some(hyb_split(a)) } else { None },
        transpose,
    }
}

impl Blackbox for SparseCsr {
    fn field(&self) -> PrimeField {
        SparseCsr::field(self)
    }

    fn rows(&self) -> usize {
        SparseCsr::rows(self)
    }

    fn cols(&self) -> usize {
        SparseCsr::cols(self)
    }

    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()> {
        csr_apply(self, y, x, side, alpha, beta)
    }
}

impl Blackbox for SparseCoo {
    fn field(&self) -> PrimeField {
        SparseCoo::field(self)
    }

    fn rows(&self) -> usize {
        SparseCoo::rows(self)
    }

    fn cols(&self) -> usize {
        SparseCoo::cols(self)
    }

    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()> {
        coo_apply(self, y, x, side, alpha, beta)
    }
}

impl Blackbox for SparseHyb {
    fn field(&self) -> PrimeField {
        self.field
    }

    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, y: &mut [u64], x: &[u64], side: Side, alpha: u64, beta: u64) -> Result<()> {
        hyb_apply(self, y, x, side, alpha, beta, &mut ApplyCounters::default())
    }
}
