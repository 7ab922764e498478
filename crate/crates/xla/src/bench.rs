//! Timing harness and plot/CSV plumbing: wall-clock sampling with warmup,
//! a CSV emitter with a fixed grammar, an optional gnuplot script emitter,
//! and regression comparison against stored baselines.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

/// One named curve: (problem size, wall-time samples in seconds) pairs with
/// strictly increasing sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(usize, Vec<f64>)>,
}

impl Series {
    pub fn new(name: impl Into<String>) -> Self {
        Series {
            name: name.into(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, n: usize, samples: Vec<f64>) {
        self.points.push((n, samples));
    }

    pub fn medians(&self) -> Vec<(usize, f64)> {
        self.points
            .iter()
            .map(|(n, s)| (*n, median(s)))
            .collect()
    }
}

/// Named series plus `key=value` metadata emitted as leading comments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotData {
    pub series: Vec<Series>,
    pub metadata: Vec<(String, String)>,
}

impl PlotData {
    pub fn validate(&self) -> Result<()> {
        for s in &self.series {
            if s.points.is_empty() {
                return Err(Error::InvalidArgument(format!("series '{}' is empty", s.name)));
            }
            if s.name.contains('"') || s.name.contains(',') || s.name.contains('\n') {
                return Err(Error::InvalidArgument(format!(
                    "series name '{}' contains reserved characters",
                    s.name
                )));
            }
            for w in s.points.windows(2) {
                if w[1].0 <= w[0].0 {
                    return Err(Error::InvalidArgument(format!(
                        "series '{}' sizes not strictly increasing",
                        s.name
                    )));
                }
            }
            for (n, samples) in &s.points {
                if samples.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "series '{}' has no samples at n={n}",
                        s.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn series_named(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Csv,
    Gnuplot,
}

#[derive(Clone, Debug)]
pub struct PlotStyle {
    pub kind: PlotKind,
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub logx: bool,
    pub logy: bool,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            kind: PlotKind::Csv,
            title: "timings".into(),
            xlabel: "n".into(),
            ylabel: "seconds".into(),
            logx: false,
            logy: false,
        }
    }
}

/// Min/median/raw samples from a timed run.
#[derive(Clone, Debug)]
pub struct TimingStats {
    pub samples: Vec<f64>,
}

impl TimingStats {
    pub fn min(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn median(&self) -> f64 {
        median(&self.samples)
    }
}

/// Median of the samples; even counts average the middle pair.
pub fn median(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "median of empty sample set");
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = s.len() / 2;
    if s.len() % 2 == 1 {
        s[mid]
    } else {
        (s[mid - 1] + s[mid]) / 2.0
    }
}

/// Runs `warmup` discarded iterations then `reps` timed ones on the
/// monotonic clock.
pub fn time_op<F: FnMut()>(mut task: F, reps: usize, warmup: usize) -> Result<TimingStats> {
    if reps == 0 {
        return Err(Error::InvalidArgument("repetition count must be >= 1".into()));
    }
    for _ in 0..warmup {
        task();
    }
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        task();
        samples.push(t0.elapsed().as_secs_f64());
    }
    Ok(TimingStats { samples })
}

pub const CSV_HEADER: &str = "series,n,sample_idx,seconds";

/// CSV text: `# key=value` metadata comments, the fixed header, then one
/// row per sample. `{}` on f64 prints the shortest decimal that parses
/// back to the same bits, so emit-parse is byte-stable.
pub fn plot_to_csv(data: &PlotData) -> Result<String> {
    data.validate()?;
    let mut out = String::new();
    for (k, v) in &data.metadata {
        writeln!(out, "# {k}={v}").unwrap();
    }
    writeln!(out, "{CSV_HEADER}").unwrap();
    for s in &data.series {
        for (n, samples) in &s.points {
            for (i, t) in samples.iter().enumerate() {
                writeln!(out, "\"{}\",{},{},{}", s.name, n, i, t).unwrap();
            }
        }
    }
    Ok(out)
}

pub fn plot_parse_csv(text: &str) -> Result<PlotData> {
    let mut data = PlotData::default();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            let (k, v) = rest.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("metadata comment '{rest}' is not key=value"),
            })?;
            data.metadata.push((k.to_string(), v.to_string()));
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected header '{CSV_HEADER}'"),
                });
            }
            saw_header = true;
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let rest = line
            .strip_prefix('"')
            .ok_or_else(|| perr("series name must be quoted".into()))?;
        let (name, rest) = rest
            .split_once('"')
            .ok_or_else(|| perr("unterminated series name".into()))?;
        let rest = rest
            .strip_prefix(',')
            .ok_or_else(|| perr("missing ',' after series name".into()))?;
        let fields: Vec<&str> = rest.split(',').collect();
        if fields.len() != 3 {
            return Err(perr("row must be \"series\",n,sample_idx,seconds".into()));
        }
        let n: usize = fields[0]
            .parse()
            .map_err(|_| perr(format!("bad size '{}'", fields[0])))?;
        let i: usize = fields[1]
            .parse()
            .map_err(|_| perr(format!("bad sample index '{}'", fields[1])))?;
        let t: f64 = fields[2]
            .parse()
            .map_err(|_| perr(format!("bad seconds '{}'", fields[2])))?;
        let series = match data.series.iter_mut().find(|s| s.name == name) {
            Some(s) => s,
            None => {
                data.series.push(Series::new(name));
                data.series.last_mut().unwrap()
            }
        };
        match series.points.last_mut() {
            Some((last_n, samples)) if *last_n == n => {
                if i != samples.len() {
                    return Err(perr(format!(
                        "sample index {i} out of order (expected {})",
                        samples.len()
                    )));
                }
                samples.push(t);
            }
            _ => {
                if i != 0 {
                    return Err(perr(format!("first sample at n={n} must have index 0")));
                }
                series.points.push((n, vec![t]));
            }
        }
    }
    if !saw_header {
        return Err(Error::Parse {
            line: text.lines().count() + 1,
            msg: "missing CSV header".into(),
        });
    }
    data.validate()?;
    Ok(data)
}

/// A gnuplot script plotting every series of `csv_name` exactly once.
pub fn gnuplot_script(data: &PlotData, style: &PlotStyle, csv_name: &str) -> Result<String> {
    data.validate()?;
    let mut out = String::new();
    writeln!(out, "set datafile separator ','").unwrap();
    writeln!(out, "set title \"{}\"", style.title).unwrap();
    writeln!(out, "set xlabel \"{}\"", style.xlabel).unwrap();
    writeln!(out, "set ylabel \"{}\"", style.ylabel).unwrap();
    match (style.logx, style.logy) {
        (true, true) => writeln!(out, "set logscale xy").unwrap(),
        (true, false) => writeln!(out, "set logscale x").unwrap(),
        (false, true) => writeln!(out, "set logscale y").unwrap(),
        (false, false) => {}
    }
    let clauses: Vec<String> = data
        .series
        .iter()
        .map(|s| {
            format!(
                "'{csv_name}' using 2:(strcol(1) eq \"{0}\" ? $4 : 1/0) \
                 with linespoints title \"{0}\"",
                s.name
            )
        })
        .collect();
    writeln!(out, "plot {}", clauses.join(", \\\n     ")).unwrap();
    Ok(out)
}

/// Writes the CSV and, for the gnuplot kind, a companion script.
pub fn plot_emit(
    data: &PlotData,
    style: &PlotStyle,
    csv_path: &Path,
    script_path: Option<&Path>,
) -> Result<()> {
    let csv = plot_to_csv(data)?;
    std::fs::File::create(csv_path)?.write_all(csv.as_bytes())?;
    if style.kind == PlotKind::Gnuplot {
        let name = csv_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| csv_path.display().to_string());
        let script = gnuplot_script(data, style, &name)?;
        let script_path = script_path
            .ok_or_else(|| Error::InvalidArgument("gnuplot output needs a script path".into()))?;
        std::fs::File::create(script_path)?.write_all(script.as_bytes())?;
    }
    Ok(())
}

/// Reference timings keyed by (series, size), carrying the machine tag.
#[derive(Clone, Debug)]
pub struct RegressionBaseline {
    pub data: PlotData,
}

impl RegressionBaseline {
    pub fn from_csv(text: &str) -> Result<Self> {
        Ok(RegressionBaseline {
            data: plot_parse_csv(text)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionEntry {
    pub series: String,
    pub n: usize,
    pub current_median: f64,
    pub baseline_median: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct RegressionReport {
    pub entries: Vec<RegressionEntry>,
    /// machine tags matched; when false the status is indeterminate
    pub comparable: bool,
    pub all_pass: bool,
}

impl RegressionReport {
    /// Overall pass only when comparable and every key passed.
    pub fn status_ok(&self) -> bool {
        self.comparable && self.all_pass
    }
}

/// Per shared (series, n) key: PASS iff current_median <= baseline*(1+tol).
pub fn regression_check(
    current: &PlotData,
    baseline: &RegressionBaseline,
    rel_tol: f64,
) -> Result<RegressionReport> {
    current.validate()?;
    baseline.data.validate()?;
    let comparable = match (current.meta("machine"), baseline.data.meta("machine")) {
        (Some(a), Some(b)) => a == b,
        _ => true, // untagged data is assumed local
    };
    let mut entries = Vec::new();
    for cs in &current.series {
        let Some(bs) = baseline.data.series_named(&cs.name) else {
            continue;
        };
        for (n, samples) in &cs.points {
            let Some((_, bsamples)) = bs.points.iter().find(|(bn, _)| bn == n) else {
                continue;
            };
            let cur = median(samples);
            let base = median(bsamples);
            let ratio = cur / base;
            entries.push(RegressionEntry {
                series: cs.name.clone(),
                n: *n,
                current_median: cur,
                baseline_median: base,
                ratio,
                pass: cur <= base * (1.0 + rel_tol),
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::NoComparableKeys);
    }
    let all_pass = entries.iter().all(|e| e.pass);
    Ok(RegressionReport {
        entries,
        comparable,
        all_pass,
    })
}
