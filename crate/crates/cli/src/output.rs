use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

/// A CSV result in memory; rows keep the order they were pushed in.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest decimal text that reads back to the same `f64`; never uses an
/// exponent or a locale.
pub fn num(x: f64) -> String {
    format!("{x}")
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Writes to `path`, creating parent directories, or to stdout.
    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                }
                let f = std::fs::File::create(p).map_err(|e| CliError::io(p, e))?;
                self.write_to(std::io::BufWriter::new(f)).map_err(|source| CliError::Csv { path: p.to_path_buf(), source })
            }
            None => self
                .write_to(std::io::stdout().lock())
                .map_err(|source| CliError::Csv { path: "<stdout>".into(), source }),
        }
    }
}
