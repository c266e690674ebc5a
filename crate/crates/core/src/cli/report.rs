//! Deterministic file emission: CSV tables, JSON documents, SVG plots.

use super::config::Format;
use crate::error::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Shortest decimal string that parses back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Empty cell for an absent value.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Traceability record: which replications and chain seeds a table row came from.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    table: Option<Table>,
}

impl Manifest {
    pub fn record(&mut self, file: &str, row: usize, task: &str, seeds: &[u64]) {
        let t = self.table.get_or_insert_with(|| Table::new(&["file", "row", "source", "chain_seeds"]));
        let seeds: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
        t.push(vec![file.into(), row.to_string(), task.into(), seeds.join(";")]);
    }
}

/// Writes into one output directory, honouring the requested formats.
pub struct Emitter {
    dir: PathBuf,
    formats: Vec<Format>,
    pub written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, formats: &[Format]) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), formats: formats.to_vec(), written: Vec::new() })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let p = self.path(name)?;
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(&table.header)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let p = self.path(name)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(p, text)?;
        Ok(())
    }

    /// Render only when plots were requested.
    pub fn svg(&mut self, name: &str, render: impl FnOnce() -> String) -> Result<()> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        let p = self.path(name)?;
        std::fs::write(p, render())?;
        Ok(())
    }

    pub fn manifest(&mut self, m: &Manifest) -> Result<()> {
        match &m.table {
            Some(t) if self.wants(Format::Csv) => self.csv("manifest.csv", t),
            Some(t) if self.wants(Format::Json) => {
                let rows: Vec<_> = t.rows.iter().map(|r| t.header.iter().cloned().zip(r.iter().cloned()).collect::<std::collections::BTreeMap<_, _>>()).collect();
                self.json("manifest.json", &rows)
            }
            _ => Ok(()),
        }
    }
}
