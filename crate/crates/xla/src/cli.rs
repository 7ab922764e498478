//! Command-line front end: thin shims over the library modules, Matrix
//! Market files in and out. Exit codes: 0 success, 1 parse/usage error,
//! 2 dimension mismatch, 3 regression failure, 4 degenerate tuner input.

use crate::bench::{
    gnuplot_script, plot_parse_csv, plot_to_csv, regression_check, time_op, PlotData, PlotStyle,
    RegressionBaseline, Series,
};
use crate::config::Config;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::intmul::{mul_crt, IntegerMatrix};
use crate::matmul::{mul_controller, Method, MulHelper, Side, DEFAULT_MUL_THRESHOLD};
use crate::mm::{mm_read, mm_to_string, FieldSpec, MmData};
use crate::sparse::{dense_to_csr, SparseCsr};
use crate::spmv::{
    coo_apply, csr_apply, hyb_apply, hyb_split, optimize_plan, ApplyCounters, PlanOptions,
};
use crate::tune::tune_threshold;
use clap::{Parser, Subcommand, ValueEnum};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "xla", about = "Exact linear algebra over prime fields and the integers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Base,
    Winograd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Auto,
    Coo,
    Csr,
    Hyb,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConvertTarget {
    Coo,
    Csr,
    Dense,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpArg {
    Mul,
    Spmv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Multiply two Matrix Market matrices
    Mul {
        a: PathBuf,
        b: PathBuf,
        /// Entry domain: zp:<p> or int
        #[arg(long)]
        field: String,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        /// Base-case crossover size (overrides the tuned config)
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long, default_value_t = 1)]
        alpha: i64,
        #[arg(long, default_value_t = 0)]
        beta: i64,
        /// Output path, or - for standard output
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sparse matrix-vector product
    Spmv {
        a: PathBuf,
        x: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "right")]
        side: SideArg,
        #[arg(long, default_value_t = 1)]
        alpha: i64,
        #[arg(long, default_value_t = 0)]
        beta: i64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Convert between dense and sparse Matrix Market forms
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: ConvertTarget,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Time an operation over a size grid and emit CSV/gnuplot artifacts
    Bench {
        #[arg(long, value_enum)]
        op: OpArg,
        #[arg(long, default_value = "zp:65521")]
        field: String,
        /// Size grid lo:hi:*k (geometric) or lo:hi:+k (additive)
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Find the multiplication crossover threshold and persist it
    Tune {
        #[arg(long, value_enum)]
        op: OpArg,
        #[arg(long, default_value = "zp:65521")]
        field: String,
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare current timings against a stored baseline
    Regress {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        current: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        tol: f64,
    },
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::DimensionMismatch(_) => 2,
        Error::DegenerateFit(_) | Error::TooFewPoints { .. } => 4,
        _ => 1,
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{e}");
            return 1;
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn parse_field_arg(s: &str) -> Result<FieldSpec> {
    if s == "int" {
        return Ok(FieldSpec::Integer);
    }
    if let Some(p) = s.strip_prefix("zp:") {
        let p: u64 = p
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad modulus in field spec '{s}'")))?;
        PrimeField::new(p)?;
        return Ok(FieldSpec::Modular(p));
    }
    Err(Error::InvalidArgument(format!(
        "field spec '{s}' must be 'zp:<p>' or 'int'"
    )))
}

fn read_mm(path: &Path, expected: Option<FieldSpec>) -> Result<MmData> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    mm_read(BufReader::new(f), expected)
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn as_dense_field(data: MmData) -> Result<DenseMatrix> {
    match data {
        MmData::DenseField(a) => Ok(a),
        MmData::SparseField(a) => Ok(a.to_csr().to_dense()),
        MmData::DenseInt(_) => Err(Error::InvalidArgument(
            "expected a modular matrix, found an integer one".into(),
        )),
    }
}

fn as_csr(data: MmData) -> Result<SparseCsr> {
    match data {
        MmData::DenseField(a) => Ok(dense_to_csr(&a)),
        MmData::SparseField(a) => Ok(a.to_csr()),
        MmData::DenseInt(_) => Err(Error::InvalidArgument(
            "expected a modular matrix, found an integer one".into(),
        )),
    }
}

/// A file holding a column (m x 1) or row (1 x m) shaped operand, as a
/// flat vector.
fn as_vector(data: MmData) -> Result<Vec<u64>> {
    let a = as_dense_field(data)?;
    if a.cols() == 1 {
        Ok((0..a.rows()).map(|i| a.get(i, 0)).collect())
    } else if a.rows() == 1 {
        Ok((0..a.cols()).map(|j| a.get(0, j)).collect())
    } else {
        Err(Error::DimensionMismatch(format!(
            "vector operand must be a single row or column, got {}x{}",
            a.rows(),
            a.cols()
        )))
    }
}

fn vector_to_mm(field: PrimeField, v: &[u64]) -> MmData {
    let mut m = DenseMatrix::zeros(field, v.len(), 1);
    for (i, &x) in v.iter().enumerate() {
        m.set(i, 0, x);
    }
    MmData::DenseField(m)
}

/// Flag beats tuned config beats the built-in default.
fn resolve_threshold(flag: Option<usize>) -> Result<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    let config = Config::load_default()?;
    Ok(config
        .get_usize("mul.threshold")?
        .unwrap_or(DEFAULT_MUL_THRESHOLD))
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Mul {
            a,
            b,
            field,
            method,
            threshold,
            alpha,
            beta,
            output,
        } => {
            let spec = parse_field_arg(&field)?;
            match spec {
                FieldSpec::Integer => {
                    let (MmData::DenseInt(a), MmData::DenseInt(b)) = (
                        read_mm(&a, Some(spec))?,
                        read_mm(&b, Some(spec))?,
                    ) else {
                        unreachable!("reader honors the expected field");
                    };
                    let mut c = mul_crt(&a, &b)?;
                    if alpha != 1 || beta != 0 {
                        // beta scales a zero accumulator; only alpha matters
                        let mut scaled = IntegerMatrix::zeros(c.rows(), c.cols());
                        for i in 0..c.rows() {
                            for j in 0..c.cols() {
                                scaled.set(i, j, c.get(i, j) * alpha);
                            }
                        }
                        c = scaled;
                    }
                    write_output(&output, &mm_to_string(&MmData::DenseInt(c)))?;
                }
                FieldSpec::Modular(p) => {
                    let f = PrimeField::new(p)?;
                    let am = as_dense_field(read_mm(&a, Some(spec))?)?;
                    let bm = as_dense_field(read_mm(&b, Some(spec))?)?;
                    let m = match method {
                        MethodArg::Auto => Method::Auto,
                        MethodArg::Base => Method::BaseCase,
                        MethodArg::Winograd => Method::Recursive,
                    };
                    let mut h = MulHelper::new()
                        .with_method(m)
                        .with_threshold(resolve_threshold(threshold)?)
                        .with_scalars(f.normalize(alpha), f.normalize(beta));
                    let mut c = DenseMatrix::zeros(f, am.rows(), bm.cols());
                    mul_controller(&mut c, &am, &bm, &mut h)?;
                    write_output(&output, &mm_to_string(&MmData::DenseField(c)))?;
                }
            }
            Ok(0)
        }
        Cmd::Spmv {
            a,
            x,
            format,
            side,
            alpha,
            beta,
            output,
        } => {
            let am = as_csr(read_mm(&a, None)?)?;
            let f = am.field();
            let xv = as_vector(read_mm(&x, Some(FieldSpec::Modular(f.modulus())))?)?;
            let side = match side {
                SideArg::Left => Side::Left,
                SideArg::Right => Side::Right,
            };
            let out_dim = match side {
                Side::Right => am.rows(),
                Side::Left => am.cols(),
            };
            let mut y = vec![0u64; out_dim];
            let (alpha, beta) = (f.normalize(alpha), f.normalize(beta));
            let mut counters = ApplyCounters::default();
            match format {
                FormatArg::Auto => {
                    let plan = optimize_plan(&am, PlanOptions::default());
                    plan.apply(&am, &mut y, &xv, side, alpha, beta, &mut counters)?;
                }
                FormatArg::Csr => csr_apply(&am, &mut y, &xv, side, alpha, beta)?,
                FormatArg::Coo => coo_apply(&am.to_coo(), &mut y, &xv, side, alpha, beta)?,
                FormatArg::Hyb => {
                    let h = hyb_split(&am);
                    hyb_apply(&h, &mut y, &xv, side, alpha, beta, &mut counters)?;
                }
            }
            write_output(&output, &mm_to_string(&vector_to_mm(f, &y)))?;
            Ok(0)
        }
        Cmd::Convert { input, to, output } => {
            let data = read_mm(&input, None)?;
            let out = match (to, data) {
                (ConvertTarget::Dense, MmData::DenseInt(a)) => MmData::DenseInt(a),
                (ConvertTarget::Dense, d) => MmData::DenseField(as_dense_field(d)?),
                (ConvertTarget::Coo | ConvertTarget::Csr, d) => {
                    MmData::SparseField(as_csr(d)?.to_coo())
                }
            };
            write_output(&output, &mm_to_string(&out))?;
            Ok(0)
        }
        Cmd::Bench {
            op,
            field,
            sizes,
            reps,
            warmup,
            csv,
            gnuplot,
        } => {
            let FieldSpec::Modular(p) = parse_field_arg(&field)? else {
                return Err(Error::InvalidArgument(
                    "benchmarks run over a prime field; use --field zp:<p>".into(),
                ));
            };
            let f = PrimeField::new(p)?;
            let grid = parse_sizes(&sizes)?;
            let data = bench_grid(op, f, &grid, reps, warmup, &field)?;
            let csv_text = plot_to_csv(&data)?;
            write_output(&csv, &csv_text)?;
            if let Some(script) = gnuplot {
                let style = PlotStyle {
                    kind: crate::bench::PlotKind::Gnuplot,
                    logx: true,
                    logy: true,
                    ..Default::default()
                };
                let name = csv
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| csv.display().to_string());
                write_output(&script, &gnuplot_script(&data, &style, &name)?)?;
            }
            Ok(0)
        }
        Cmd::Tune {
            op,
            field,
            sizes,
            reps,
            out,
        } => {
            if op != OpArg::Mul {
                return Err(Error::InvalidArgument(
                    "only --op mul supports threshold tuning".into(),
                ));
            }
            let FieldSpec::Modular(p) = parse_field_arg(&field)? else {
                return Err(Error::InvalidArgument(
                    "tuning runs over a prime field; use --field zp:<p>".into(),
                ));
            };
            let f = PrimeField::new(p)?;
            let grid = parse_sizes(&sizes)?;
            let data = bench_grid(OpArg::Mul, f, &grid, reps, 1, &field)?;
            let base = data.series_named("base").unwrap();
            let rec = data.series_named("winograd").unwrap();
            let result = tune_threshold(base, rec)?;
            let mut config = Config::new();
            config.set("mul.threshold", result.threshold);
            write_output(&out, &config.render())?;
            println!("mul.threshold = {}", result.threshold);
            Ok(0)
        }
        Cmd::Regress {
            baseline,
            current,
            tol,
        } => {
            let base = RegressionBaseline::from_csv(&std::fs::read_to_string(&baseline)?)?;
            let cur = plot_parse_csv(&std::fs::read_to_string(&current)?)?;
            let report = regression_check(&cur, &base, tol)?;
            for e in &report.entries {
                println!(
                    "{} \"{}\" n={} ratio={:.4}",
                    if e.pass { "PASS" } else { "FAIL" },
                    e.series,
                    e.n,
                    e.ratio
                );
            }
            if !report.comparable {
                eprintln!("machine tags differ; result is not comparable");
                return Ok(3);
            }
            Ok(if report.all_pass { 0 } else { 3 })
        }
    }
}

/// `lo:hi:*k` expands geometrically, `lo:hi:+k` additively, both capped at
/// `hi` inclusive.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("size grid '{s}' must be lo:hi:*k or lo:hi:+k"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: usize = lo.parse().map_err(|_| bad())?;
    let hi: usize = hi.parse().map_err(|_| bad())?;
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    let mut grid = Vec::new();
    if let Some(k) = step.strip_prefix('*') {
        let k: usize = k.parse().map_err(|_| bad())?;
        if k < 2 {
            return Err(bad());
        }
        let mut n = lo;
        while n <= hi {
            grid.push(n);
            match n.checked_mul(k) {
                Some(next) => n = next,
                None => break,
            }
        }
    } else if let Some(k) = step.strip_prefix('+') {
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        let mut n = lo;
        while n <= hi {
            grid.push(n);
            n += k;
        }
    } else {
        return Err(bad());
    }
    Ok(grid)
}

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }
}

fn random_dense(field: PrimeField, n: usize, rng: &mut Lcg) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(field, n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, rng.next() % field.modulus());
        }
    }
    a
}

/// Times the chosen operation on each grid size, one series per method.
fn bench_grid(
    op: OpArg,
    field: PrimeField,
    grid: &[usize],
    reps: usize,
    warmup: usize,
    field_tag: &str,
) -> Result<PlotData> {
    let mut rng = Lcg(0x5eed);
    let mut data = PlotData {
        series: Vec::new(),
        metadata: vec![
            (
                "op".into(),
                match op {
                    OpArg::Mul => "mul".into(),
                    OpArg::Spmv => "spmv".into(),
                },
            ),
            ("field".into(), field_tag.to_string()),
            (
                "machine".into(),
                std::env::var("XLA_MACHINE").unwrap_or_else(|_| "local".into()),
            ),
            (
                "timestamp".into(),
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs().to_string())
                    .unwrap_or_else(|_| "0".into()),
            ),
        ],
    };
    match op {
        OpArg::Mul => {
            let mut base = Series::new("base");
            let mut rec = Series::new("winograd");
            for &n in grid {
                let a = random_dense(field, n, &mut rng);
                let b = random_dense(field, n, &mut rng);
                let mut c = DenseMatrix::zeros(field, n, n);
                for (series, method) in
                    [(&mut base, Method::BaseCase), (&mut rec, Method::Recursive)]
                {
                    let stats = time_op(
                        || {
                            let mut h = MulHelper::new().with_method(method);
                            mul_controller(&mut c, &a, &b, &mut h).expect("bench mul");
                        },
                        reps,
                        warmup,
                    )?;
                    series.push(n, stats.samples);
                }
            }
            data.series.push(base);
            data.series.push(rec);
        }
        OpArg::Spmv => {
            let mut csr = Series::new("csr");
            for &n in grid {
                // ~5% density
                let nnz = (n * n / 20).max(1);
                let triples: Vec<(usize, usize, u64)> = (0..nnz)
                    .map(|_| {
                        (
                            rng.next() as usize % n,
                            rng.next() as usize % n,
                            rng.next() % field.modulus(),
                        )
                    })
                    .collect();
                let a = crate::sparse::SparseCoo::from_triplets(field, n, n, &triples)?.to_csr();
                let x: Vec<u64> = (0..n).map(|_| rng.next() % field.modulus()).collect();
                let mut y = vec![0u64; n];
                let stats = time_op(
                    || csr_apply(&a, &mut y, &x, Side::Right, 1, 0).expect("bench spmv"),
                    reps,
                    warmup,
                )?;
                csr.push(n, stats.samples);
            }
            data.series.push(csr);
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_grammar() {
        assert_eq!(parse_sizes("4:16:*2").unwrap(), vec![4, 8, 16]);
        assert_eq!(parse_sizes("4:20:*2").unwrap(), vec![4, 8, 16]);
        assert_eq!(parse_sizes("10:40:+10").unwrap(), vec![10, 20, 30, 40]);
        assert_eq!(parse_sizes("7:7:*2").unwrap(), vec![7]);
        assert!(parse_sizes("4:16:2").is_err());
        assert!(parse_sizes("0:16:*2").is_err());
        assert!(parse_sizes("16:4:*2").is_err());
        assert!(parse_sizes("4:16:*1").is_err());
        assert!(parse_sizes("4:16:+0").is_err());
    }

    #[test]
    fn field_spec_grammar() {
        assert_eq!(parse_field_arg("zp:101").unwrap(), FieldSpec::Modular(101));
        assert_eq!(parse_field_arg("int").unwrap(), FieldSpec::Integer);
        assert!(parse_field_arg("zp:6").is_err());
        assert!(parse_field_arg("gf:4").is_err());
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(exit_code_for(&Error::DimensionMismatch("x".into())), 2);
        assert_eq!(exit_code_for(&Error::DegenerateFit("s".into())), 4);
        assert_eq!(exit_code_for(&Error::TooFewPoints { need: 4, got: 2 }), 4);
        assert_eq!(
            exit_code_for(&Error::Parse {
                line: 1,
                msg: "x".into()
            }),
            1
        );
    }
}
