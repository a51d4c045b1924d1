//! CSV writing with the config-echo header.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::rng::fnv1a;

pub const TOOL: &str = concat!("sobolev-nets ", env!("CARGO_PKG_VERSION"));

/// Resolved command line: subcommand plus every flag that affects output.
#[derive(Debug, Clone, Default)]
pub struct Echo {
    parts: Vec<String>,
}

impl Echo {
    pub fn new(subcommand: &str) -> Self {
        Self { parts: vec![subcommand.to_string()] }
    }

    pub fn flag(mut self, name: &str, value: impl std::fmt::Display) -> Self {
        self.parts.push(format!("--{name}"));
        self.parts.push(value.to_string());
        self
    }

    pub fn switch(mut self, name: &str, on: bool) -> Self {
        if on {
            self.parts.push(format!("--{name}"));
        }
        self
    }

    pub fn command(&self) -> String {
        self.parts.join(" ")
    }

    pub fn hash(&self) -> u64 {
        fnv1a(self.command().as_bytes())
    }
}

/// A CSV table with `#` header comments.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(echo: &Echo, columns: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "# {TOOL}").unwrap();
        writeln!(text, "# command: {}", echo.command()).unwrap();
        writeln!(text, "# config-hash: {:016x}", echo.hash()).unwrap();
        writeln!(text, "{}", columns.join(",")).unwrap();
        Self { text }
    }

    /// Extra `# key: value` line; only valid before the first row.
    pub fn comment(&mut self, line: &str) {
        // keep comments above the column line
        let cols_start = self.text.trim_end_matches('\n').rfind('\n').map_or(0, |i| i + 1);
        let columns = self.text.split_off(cols_start);
        writeln!(self.text, "# {line}").unwrap();
        self.text.push_str(&columns);
    }

    pub fn row(&mut self, fields: &[String]) {
        writeln!(self.text, "{}", fields.join(",")).unwrap();
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Writes to `path`, or stdout when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> std::io::Result<()> {
        match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
                fs::write(p, &self.text)
            }
            None => std::io::stdout().write_all(self.text.as_bytes()),
        }
    }
}

/// Parsed CSV: header comments dropped, first non-comment line gives columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Option<Table> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let columns: Vec<String> = lines.next()?.split(',').map(|s| s.trim().to_string()).collect();
        let rows = lines.map(|l| l.split(',').map(|s| s.trim().to_string()).collect()).collect();
        Some(Table { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of column `idx`; unparsable cells become NaN.
    pub fn values(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(idx).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)).collect()
    }
}

/// Arguments recorded in a CSV's `# command:` line.
pub fn echoed_command(text: &str) -> Option<Vec<String>> {
    text.lines()
        .find_map(|l| l.strip_prefix("# command: "))
        .map(|c| c.split_whitespace().map(str::to_string).collect())
}
