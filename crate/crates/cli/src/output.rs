//! Deterministic CSV emission: fixed 12-significant-digit float formatting,
//! fixed row order, a header row, and a comment line echoing the config.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

/// Formats with 12 significant digits, deterministically.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.11e}")
}

/// Optional cell; empty when absent.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub struct CsvWriter {
    path: PathBuf,
    buffer: String,
}

impl CsvWriter {
    pub fn create(dir: &Path, name: &str, config_echo: &str, header: &[&str]) -> CsvWriter {
        let mut buffer = String::new();
        buffer.push_str(&format!("# config: {config_echo}\n"));
        buffer.push_str(&header.join(","));
        buffer.push('\n');
        CsvWriter { path: dir.join(name), buffer }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buffer.push_str(&cells.join(","));
        self.buffer.push('\n');
    }

    pub fn finish(self) -> anyhow::Result<PathBuf> {
        if let Some(parent) = self.path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        let mut f = std::fs::File::create(&self.path)
            .with_context(|| format!("creating {}", self.path.display()))?;
        f.write_all(self.buffer.as_bytes())
            .with_context(|| format!("writing {}", self.path.display()))?;
        Ok(self.path)
    }
}
