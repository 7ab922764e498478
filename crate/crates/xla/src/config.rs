//! Tuned-parameter persistence: a plain-text `<operation>.<key> = <value>`
//! file read at startup. Missing file or key falls back to built-in
//! defaults; explicit caller settings always take precedence over both.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CONFIG_ENV: &str = "XLA_CONFIG";
pub const DEFAULT_CONFIG_PATH: &str = "xla.conf";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    /// Lines `<operation>.<key> = <value>`; blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Config> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("config line '{line}' is not 'key = value'"),
            })?;
            let key = key.trim();
            if key.is_empty() || !key.contains('.') {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("config key '{key}' must be '<operation>.<name>'"),
                });
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn from_file(path: &Path) -> Result<Config> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    /// Path from the environment override, else the working-directory
    /// default.
    pub fn default_path() -> PathBuf {
        std::env::var_os(CONFIG_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG_PATH))
    }

    /// Loads the default location; an absent file is an empty config, a
    /// present-but-malformed one is an error.
    pub fn load_default() -> Result<Config> {
        let path = Config::default_path();
        if path.exists() {
            Config::from_file(&path)
        } else {
            Ok(Config::new())
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_value(key)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_value(key)
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::InvalidArgument(format!("config value '{v}' for '{key}' is malformed"))
            }),
        }
    }

    /// Serialized form, keys sorted; parse(render(c)) == c.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matmul::DEFAULT_MUL_THRESHOLD;

    #[test]
    fn parse_example_lines() {
        let c = Config::parse(
            "# tuned on buildbox\n\
             mul.threshold = 96\n\
             \n\
             spmv.hyb_min_pm1_fraction = 0.25\n",
        )
        .unwrap();
        assert_eq!(c.get_usize("mul.threshold").unwrap(), Some(96));
        assert_eq!(c.get_f64("spmv.hyb_min_pm1_fraction").unwrap(), Some(0.25));
        assert_eq!(c.get("mul.method"), None);
    }

    #[test]
    fn absent_key_falls_back_to_default() {
        let c = Config::new();
        let threshold = c
            .get_usize("mul.threshold")
            .unwrap()
            .unwrap_or(DEFAULT_MUL_THRESHOLD);
        assert_eq!(threshold, DEFAULT_MUL_THRESHOLD);
    }

    #[test]
    fn render_parse_round_trip() {
        let mut c = Config::new();
        c.set("mul.threshold", 96);
        c.set("spmv.hyb_min_pm1_fraction", 0.25);
        let text = c.render();
        assert_eq!(text, "mul.threshold = 96\nspmv.hyb_min_pm1_fraction = 0.25\n");
        assert_eq!(Config::parse(&text).unwrap(), c);
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(matches!(
            Config::parse("threshold 96\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Config::parse("# ok\nnodotkey = 5\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn malformed_value_surfaces_on_typed_get() {
        let c = Config::parse("mul.threshold = ninety\n").unwrap();
        assert!(c.get_usize("mul.threshold").is_err());
    }
}
