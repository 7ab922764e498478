//! Automated tuning: crossover discovery by least-squares curve fits and
//! per-operation method selection over a benchmark grid.

use crate::bench::{median, Series};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Exponent of the recursive cost model term.
pub const RECURSIVE_EXPONENT: f64 = 2.8073549220576042; // log2(7)

/// Coefficients and residual of one two-term least-squares fit.
#[derive(Clone, Copy, Debug)]
pub struct CurveFit {
    /// coefficient of the leading term (n^3 or n^log2(7))
    pub lead: f64,
    /// coefficient of the n^2 term
    pub quad: f64,
    /// sum of squared residuals at the grid points
    pub residual: f64,
}

impl CurveFit {
    fn eval(&self, exponent: f64, n: f64) -> f64 {
        self.lead * n.powf(exponent) + self.quad * n * n
    }
}

/// Winner table over (matrix class, measured size); lookups between grid
/// points inherit the nearer measured size.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MethodTable {
    pub operation: String,
    entries: BTreeMap<(String, usize), String>,
}

impl MethodTable {
    pub fn insert(&mut self, class: &str, size: usize, method: &str) {
        self.entries
            .insert((class.to_string(), size), method.to_string());
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, usize, &str)> {
        self.entries
            .iter()
            .map(|((c, n), m)| (c.as_str(), *n, m.as_str()))
    }

    /// Piecewise-constant extension: the method of the measured size
    /// nearest to `n` within the class; midpoint ties take the smaller.
    pub fn lookup(&self, class: &str, n: usize) -> Option<&str> {
        let mut best: Option<(usize, &str)> = None;
        for ((c, size), method) in &self.entries {
            if c != class {
                continue;
            }
            let dist = size.abs_diff(n);
            let better = match best {
                None => true,
                Some((bd, _)) => dist < bd,
            };
            if better {
                best = Some((dist, method));
            }
        }
        best.map(|(_, m)| m)
    }
}

/// Tuner output: the crossover size plus fit diagnostics and any method
/// table produced alongside.
#[derive(Clone, Debug)]
pub struct TuneResult {
    pub threshold: usize,
    pub base_fit: CurveFit,
    pub recursive_fit: CurveFit,
    pub table: MethodTable,
}

/// Least squares for t = lead*n^exponent + quad*n^2 over (n, t) points,
/// via the 2x2 normal equations. Singular systems name the series.
pub fn fit_two_term(points: &[(usize, f64)], exponent: f64, name: &str) -> Result<CurveFit> {
    let mut a11 = 0.0;
    let mut a12 = 0.0;
    let mut a22 = 0.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &(n, t) in points {
        let x1 = (n as f64).powf(exponent);
        let x2 = (n as f64) * (n as f64);
        // relative weighting: every grid point contributes its fractional
        // error, so a single outlier has bounded influence on the fit
        let w = if t > 0.0 { 1.0 / (t * t) } else { 1.0 };
        a11 += w * x1 * x1;
        a12 += w * x1 * x2;
        a22 += w * x2 * x2;
        b1 += w * x1 * t;
        b2 += w * x2 * t;
    }
    let det = a11 * a22 - a12 * a12;
    // scale-relative singularity test
    if det.abs() <= f64::EPSILON * a11.max(a22).max(1.0).powi(2) {
        return Err(Error::DegenerateFit(name.to_string()));
    }
    let lead = (b1 * a22 - b2 * a12) / det;
    let quad = (a11 * b2 - a12 * b1) / det;
    let fit = CurveFit {
        lead,
        quad,
        residual: 0.0,
    };
    let residual = points
        .iter()
        .map(|&(n, t)| {
            let d = fit.eval(exponent, n as f64) - t;
            d * d
        })
        .sum();
    Ok(CurveFit { residual, ..fit })
}

const BASE_EXPONENT: f64 = 3.0;

/// Crossover of the fitted base-case (a*n^3 + b*n^2) and recursive
/// (c*n^log2(7) + e*n^2) cost curves, rounded to the nearest measured grid
/// point. No crossing in range: the recursive curve never winning yields
/// the top of the range, always winning yields the bottom. Identical
/// series yield the bottom with the tie broken toward the base case.
pub fn tune_threshold(base: &Series, recursive: &Series) -> Result<TuneResult> {
    let bm = base.medians();
    let rm = recursive.medians();
    let grid: Vec<usize> = bm.iter().map(|&(n, _)| n).collect();
    let rgrid: Vec<usize> = rm.iter().map(|&(n, _)| n).collect();
    if grid != rgrid {
        return Err(Error::InvalidArgument(
            "tuning series must share one size grid".into(),
        ));
    }
    if grid.len() < 4 {
        return Err(Error::TooFewPoints { need: 4, got: grid.len() });
    }
    let base_fit = fit_two_term(&bm, BASE_EXPONENT, &base.name)?;
    let recursive_fit = fit_two_term(&rm, RECURSIVE_EXPONENT, &recursive.name)?;

    let identical = bm
        .iter()
        .zip(&rm)
        .all(|(&(_, tb), &(_, tr))| tb == tr);
    let lo = *grid.first().unwrap();
    let hi = *grid.last().unwrap();
    // diff < 0 means the recursive curve is strictly faster
    let diff = |n: f64| recursive_fit.eval(RECURSIVE_EXPONENT, n) - base_fit.eval(BASE_EXPONENT, n);

    let threshold = if identical {
        lo
    } else if diff(lo as f64) < 0.0 {
        lo
    } else if diff(hi as f64) >= 0.0 {
        hi
    } else {
        // one sign change in [lo, hi]: bisect, then snap to the grid
        let (mut a, mut b) = (lo as f64, hi as f64);
        for _ in 0..64 {
            let mid = 0.5 * (a + b);
            if diff(mid) >= 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let cross = 0.5 * (a + b);
        *grid
            .iter()
            .min_by(|&&x, &&y| {
                let dx = (x as f64 - cross).abs();
                let dy = (y as f64 - cross).abs();
                dx.partial_cmp(&dy).unwrap().then(x.cmp(&y))
            })
            .unwrap()
    };

    Ok(TuneResult {
        threshold,
        base_fit,
        recursive_fit,
        table: MethodTable::default(),
    })
}

/// Benches every candidate over sizes x classes via `runner` and keeps the
/// per-cell winner by smallest median; ties keep the earlier candidate.
/// A failing candidate is dropped with a warning; losing all is an error.
pub fn select_method(
    operation: &str,
    candidates: &[&str],
    sizes: &[usize],
    classes: &[&str],
    runner: &mut dyn FnMut(&str, usize, &str) -> Result<Vec<f64>>,
    warnings: &mut Vec<String>,
) -> Result<MethodTable> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate methods".into()));
    }
    // candidate -> (class, size) -> median
    let mut timings: Vec<(&str, BTreeMap<(String, usize), f64>)> = Vec::new();
    'cand: for &cand in candidates {
        let mut cells = BTreeMap::new();
        for &class in classes {
            for &n in sizes {
                match runner(cand, n, class) {
                    Ok(samples) if !samples.is_empty() => {
                        cells.insert((class.to_string(), n), median(&samples));
                    }
                    Ok(_) => {
                        warnings.push(format!(
                            "candidate '{cand}' produced no samples at n={n}, class '{class}'; excluded"
                        ));
                        continue 'cand;
                    }
                    Err(e) => {
                        warnings.push(format!(
                            "candidate '{cand}' failed at n={n}, class '{class}': {e}; excluded"
                        ));
                        continue 'cand;
                    }
                }
            }
        }
        timings.push((cand, cells));
    }
    if timings.is_empty() {
        return Err(Error::AllCandidatesFailed);
    }
    let mut table = MethodTable {
        operation: operation.to_string(),
        entries: BTreeMap::new(),
    };
    for &class in classes {
        for &n in sizes {
            let key = (class.to_string(), n);
            let mut best: Option<(&str, f64)> = None;
            for (cand, cells) in &timings {
                let t = cells[&key];
                // strict comparison keeps the earlier candidate on ties
                if best.map_or(true, |(_, bt)| t < bt) {
                    best = Some((cand, t));
                }
            }
            table.insert(class, n, best.unwrap().0);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_from(name: &str, f: impl Fn(f64) -> f64, grid: &[usize]) -> Series {
        let mut s = Series::new(name);
        for &n in grid {
            s.push(n, vec![f(n as f64)]);
        }
        s
    }

    fn pow2_grid(lo: usize, hi: usize) -> Vec<usize> {
        let mut g = Vec::new();
        let mut n = lo;
        while n <= hi {
            g.push(n);
            n *= 2;
        }
        g
    }

    /// Sign change of g - f located directly on the grid, the oracle for
    /// the fitted crossover.
    fn direct_sign_change(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, grid: &[usize]) -> usize {
        for w in grid.windows(2) {
            let (a, b) = (w[0] as f64, w[1] as f64);
            if g(a) - f(a) >= 0.0 && g(b) - f(b) < 0.0 {
                // crossing lies in [a, b]
                return w[1];
            }
        }
        panic!("no sign change on grid");
    }

    #[test]
    fn noiseless_model_crossover() {
        let grid = pow2_grid(8, 4096);
        let f = |n: f64| 2.0 * n.powi(3);
        let g = |n: f64| 1000.0 * n * n + n.powf(RECURSIVE_EXPONENT);
        let base = series_from("base", f, &grid);
        let rec = series_from("recursive", g, &grid);
        let result = tune_threshold(&base, &rec).unwrap();
        let upper = direct_sign_change(f, g, &grid);
        let pos = grid.iter().position(|&n| n == result.threshold).unwrap();
        let upos = grid.iter().position(|&n| n == upper).unwrap();
        assert!(
            pos.abs_diff(upos) <= 1,
            "threshold {} not within one grid point of {}",
            result.threshold,
            upper
        );
        assert!(result.base_fit.residual < 1e-6);
    }

    #[test]
    fn noisy_with_outlier_crossover() {
        let grid = pow2_grid(8, 4096);
        let f = |n: f64| 2.0 * n.powi(3);
        let g = |n: f64| 1000.0 * n * n + n.powf(RECURSIVE_EXPONENT);
        // deterministic +-10% multiplicative noise and one 10x outlier
        let noise = [1.1, 0.9, 1.05, 0.95, 1.08, 0.92, 1.1, 0.9, 1.02, 0.98];
        let mut base = Series::new("base");
        let mut rec = Series::new("recursive");
        for (i, &n) in grid.iter().enumerate() {
            let mut tb = f(n as f64) * noise[i % noise.len()];
            if i == 3 {
                tb *= 10.0;
            }
            base.push(n, vec![tb]);
            rec.push(n, vec![g(n as f64) * noise[(i + 5) % noise.len()]]);
        }
        let result = tune_threshold(&base, &rec).unwrap();
        let upper = direct_sign_change(f, g, &grid);
        let pos = grid.iter().position(|&n| n == result.threshold).unwrap();
        let upos = grid.iter().position(|&n| n == upper).unwrap();
        assert!(
            pos.abs_diff(upos) <= 2,
            "threshold {} not within two grid points of {}",
            result.threshold,
            upper
        );
    }

    #[test]
    fn no_crossing_takes_range_ends() {
        let grid = pow2_grid(8, 512);
        // recursive strictly above base everywhere: never wins
        let base = series_from("base", |n| n.powi(3), &grid);
        let rec = series_from("recursive", |n| 10.0 * n.powf(RECURSIVE_EXPONENT) + n * n, &grid);
        assert_eq!(tune_threshold(&base, &rec).unwrap().threshold, 512);
        // recursive strictly below: always wins
        let base = series_from("base", |n| 10.0 * n.powi(3) + n * n, &grid);
        let rec = series_from("recursive", |n| n.powf(RECURSIVE_EXPONENT), &grid);
        assert_eq!(tune_threshold(&base, &rec).unwrap().threshold, 8);
    }

    #[test]
    fn identical_series_take_min_grid_point() {
        let grid = pow2_grid(16, 256);
        let base = series_from("base", |n| n.powi(3), &grid);
        let rec = series_from("recursive", |n| n.powi(3), &grid);
        assert_eq!(tune_threshold(&base, &rec).unwrap().threshold, 16);
    }

    #[test]
    fn too_few_points_rejected() {
        let grid = [8, 16, 32];
        let base = series_from("base", |n| n.powi(3), &grid);
        let rec = series_from("recursive", |n| n * n, &grid);
        assert!(matches!(
            tune_threshold(&base, &rec),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn degenerate_fit_names_series() {
        // one distinct size makes the basis columns proportional and the
        // normal equations singular
        let points = [(4usize, 1.0), (4, 2.0), (4, 3.0), (4, 4.0)];
        match fit_two_term(&points, 3.0, "flatgrid") {
            Err(Error::DegenerateFit(name)) => assert_eq!(name, "flatgrid"),
            other => panic!("expected degenerate fit, got {other:?}"),
        }
    }

    #[test]
    fn single_candidate_total_table() {
        let mut warnings = Vec::new();
        let table = select_method(
            "mul",
            &["base"],
            &[16, 64, 256],
            &["dense", "sparse"],
            &mut |_, n, _| Ok(vec![n as f64]),
            &mut warnings,
        )
        .unwrap();
        for class in ["dense", "sparse"] {
            for n in [16, 64, 256] {
                assert_eq!(table.lookup(class, n), Some("base"));
            }
        }
        assert!(warnings.is_empty());
    }

    #[test]
    fn two_candidates_single_boundary() {
        let mut warnings = Vec::new();
        // A wins below n=100, B above
        let table = select_method(
            "mul",
            &["A", "B"],
            &[16, 32, 64, 128, 256],
            &["dense"],
            &mut |cand, n, _| {
                let t = if cand == "A" {
                    if n < 100 { 1.0 } else { 3.0 }
                } else if n < 100 {
                    2.0
                } else {
                    1.0
                };
                Ok(vec![t])
            },
            &mut warnings,
        )
        .unwrap();
        let winners: Vec<&str> = [16, 32, 64, 128, 256]
            .iter()
            .map(|&n| table.lookup("dense", n).unwrap())
            .collect();
        assert_eq!(winners, ["A", "A", "A", "B", "B"]);
        // exactly one boundary, at the grid point nearest 100
        let flips = winners.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1);
        // between-grid lookups inherit the nearer point
        assert_eq!(table.lookup("dense", 70), Some("A"));
        assert_eq!(table.lookup("dense", 120), Some("B"));
    }

    #[test]
    fn failing_candidate_excluded_with_warning() {
        let mut warnings = Vec::new();
        let table = select_method(
            "mul",
            &["broken", "ok"],
            &[16, 32],
            &["dense"],
            &mut |cand, _, _| {
                if cand == "broken" {
                    Err(Error::InvalidArgument("synthetic failure".into()))
                } else {
                    Ok(vec![1.0])
                }
            },
            &mut warnings,
        )
        .unwrap();
        assert_eq!(table.lookup("dense", 16), Some("ok"));
        assert_eq!(warnings.len(), 1);

        let all_fail = select_method(
            "mul",
            &["broken"],
            &[16],
            &["dense"],
            &mut |_, _, _| Err(Error::InvalidArgument("synthetic failure".into())),
            &mut Vec::new(),
        );
        assert!(matches!(all_fail, Err(Error::AllCandidatesFailed)));
    }

    #[test]
    fn tie_keeps_earlier_candidate() {
        let table = select_method(
            "mul",
            &["first", "second"],
            &[16, 32],
            &["dense"],
            &mut |_, _, _| Ok(vec![1.0]),
            &mut Vec::new(),
        )
        .unwrap();
        assert_eq!(table.lookup("dense", 16), Some("first"));
    }
}
