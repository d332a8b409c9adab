use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// A CSV table whose header names each column's unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<(String, String)>,
    rows: Vec<Vec<String>>,
}

pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Flag(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Num)
    }
}

fn render(cell: Cell) -> String {
    match cell {
        Cell::Num(v) if v.is_nan() => "NaN".into(),
        Cell::Num(v) => format!("{v:e}"),
        Cell::Int(v) => v.to_string(),
        Cell::Flag(v) => v.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s,
    }
}

impl Table {
    /// `columns` are `(name, unit)` pairs.
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Table {
            columns: columns
                .iter()
                .map(|(n, u)| (n.to_string(), u.to_string()))
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row.into_iter().map(render).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, config_hash: &str) -> String {
        let mut out = String::new();
        writeln!(out, "# config_hash={config_hash}").unwrap();
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|(n, u)| format!("{n}[{u}]"))
            .collect();
        writeln!(out, "{}", header.join(",")).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.join(",")).unwrap();
        }
        out
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Collects the files a command writes.
#[derive(Debug, Default)]
pub struct Outputs {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn table(&mut self, name: &str, table: &Table, hash: &str) -> Result<(), CliError> {
        self.raw(name, table.render(hash).as_bytes())
    }

    pub fn raw(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_carries_hash_and_units() {
        let mut t = Table::new(&[("decile", "-"), ("cev", "fraction"), ("label", "-")]);
        t.push(vec![1usize.into(), 0.25.into(), "a,b".into()]);
        let s = t.render("abc");
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# config_hash=abc");
        assert_eq!(lines[1], "decile[-],cev[fraction],label[-]");
        assert_eq!(lines[2], "1,2.5e-1,\"a,b\"");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
