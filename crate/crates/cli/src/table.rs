//! Tab-separated output tables and their reader.
//!
//! Layout: `#` comment lines (title, then one `# key = value` per resolved
//! config entry), one header line of column names, then data rows. Floats
//! carry 12 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::Failure;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i128),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Float(x.unwrap_or(f64::NAN))
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<u128> for Cell {
    fn from(x: u128) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        // one zero for both signs keeps output byte-stable
        "0.00000000000e0".into()
    } else {
        format!("{x:.11e}")
    }
}

fn render(c: &Cell) -> String {
    match c {
        Cell::Float(x) => format_float(*x),
        Cell::Int(i) => i.to_string(),
        // tabs and newlines would break the row structure
        Cell::Text(s) => s.replace(['\t', '\n', '\r'], " "),
    }
}

#[derive(Clone, Debug)]
pub struct TableWriter {
    title: String,
    columns: Vec<String>,
    body: String,
    rows: usize,
}

impl TableWriter {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        TableWriter { title: title.into(), columns: columns.iter().map(|c| c.to_string()).collect(), body: String::new(), rows: 0 }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        let line: Vec<String> = cells.iter().map(render).collect();
        self.body.push_str(&line.join("\t"));
        self.body.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn render(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# nvq {} {}", env!("CARGO_PKG_VERSION"), self.title);
        for (k, v) in config.entries() {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.columns.join("\t"));
        out.push('\n');
        out.push_str(&self.body);
        out
    }

    pub fn write(&self, dir: &Path, name: &str, config: &RunConfig) -> Result<(), Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::internal(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(name);
        std::fs::write(&path, self.render(config))
            .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))
    }
}

/// A parsed output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub title: String,
    pub config: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut title = String::new();
        let mut config = BTreeMap::new();
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
            // trailing space is kept: an empty value renders as "key = "
            let body = line.trim_start_matches('#').trim_start();
            match body.split_once(" = ") {
                Some((k, v)) if !title.is_empty() => {
                    config.insert(k.to_string(), v.to_string());
                }
                _ if title.is_empty() => title = body.trim_end().to_string(),
                _ => return Err(format!("malformed comment line '{line}'")),
            }
        }
        let header = lines.next().ok_or("missing header line")?;
        let columns: Vec<String> = header.split('\t').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split('\t').map(str::to_string).collect();
            if row.len() != columns.len() {
                return Err(format!("row {} has {} cells, header has {}", i + 1, row.len(), columns.len()));
            }
            rows.push(row);
        }
        Ok(Table { title, config, columns, rows })
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column `name` parsed as floats (`nan`, `inf` accepted).
    pub fn floats(&self, name: &str) -> Result<Vec<f64>, String> {
        let j = self.column(name).ok_or_else(|| format!("no column '{name}'"))?;
        self.rows.iter().map(|r| r[j].parse::<f64>().map_err(|e| format!("'{}': {e}", r[j]))).collect()
    }
}
