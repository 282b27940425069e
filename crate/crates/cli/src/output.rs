use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Collects the files an experiment writes so the manifest can list them.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
        let bytes = contents.as_ref();
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(OutputFile { path: name.to_string(), sha256: hex_digest(bytes), bytes: bytes.len() });
        Ok(())
    }

    /// Writes a CSV meant for plotting together with `<stem>.axes.json`,
    /// which names the axes and the manifest the run belongs to.
    pub fn write_plot(&mut self, name: &str, csv: Csv, axes: Axes) -> anyhow::Result<()> {
        self.write(name, csv.into_string())?;
        let stem = name.strip_suffix(".csv").unwrap_or(name);
        let sidecar = serde_json::json!({
            "data": name,
            "manifest": "manifest.json",
            "x": axes.x,
            "y": axes.y,
            "series": axes.series,
            "log_x": axes.log,
            "log_y": axes.log,
        });
        self.write(&format!("{stem}.axes.json"), serde_json::to_string_pretty(&sidecar)? + "\n")
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }
}

/// Column roles of a plot-ready CSV.
pub struct Axes {
    pub x: &'static str,
    pub y: &'static str,
    /// Column that splits rows into curves, if any.
    pub series: Option<&'static str>,
    pub log: bool,
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Plain CSV builder; every float goes through `{:e}` so reruns are
/// byte-identical.
#[derive(Default)]
pub struct Csv(String);

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv(format!("{header}\n"))
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.0.push_str(&line.join(","));
        self.0.push('\n');
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

pub enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => format!("{x:e}"),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

#[macro_export]
macro_rules! row {
    ($csv:expr, $($cell:expr),+ $(,)?) => {
        $csv.row(&[$($crate::output::Cell::from($cell)),+])
    };
}
