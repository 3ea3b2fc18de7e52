use std::collections::HashMap;
use std::fmt::{self, Display};
use std::path::Path;

use anyhow::{anyhow, Context, Result};

/// `key = value unit` lines, in insertion order.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String, &'static str)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.text("command", command);
        r.text("version", env!("CARGO_PKG_VERSION"));
        r
    }

    pub fn text(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string(), ""));
        self
    }

    /// A number in 17 significant digits.
    pub fn num(&mut self, key: &str, value: f64, unit: &'static str) -> &mut Self {
        self.lines.push((key.to_string(), fmt_f64(value), unit));
        self
    }

    pub fn count(&mut self, key: &str, value: usize) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string(), "count"));
        self
    }

    pub fn flag(&mut self, key: &str, value: bool) -> &mut Self {
        self.text(key, value)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()).with_context(|| format!("writing {}", path.display()))
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v, unit) in &self.lines {
            if unit.is_empty() {
                writeln!(f, "{k} = {v}")?;
            } else {
                writeln!(f, "{k} = {v} {unit}")?;
            }
        }
        Ok(())
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".into()
    }
}

/// Parsed `key = value [unit]` file.
pub struct ReportFile {
    values: HashMap<String, String>,
    source: String,
}

impl ReportFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut values = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, rest) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", path.display(), n + 1))?;
            let value = rest.split_whitespace().next().unwrap_or("");
            values.insert(k.trim().to_string(), value.to_string());
        }
        Ok(Self {
            values,
            source: path.display().to_string(),
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self
            .values
            .get(key)
            .ok_or_else(|| anyhow!("{}: missing key `{key}`", self.source))?;
        v.parse()
            .map_err(|_| anyhow!("{}: `{key}` has non-numeric value {v:?}", self.source))
    }
}
