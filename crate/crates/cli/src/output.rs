//! CSV emission with a fixed float format, so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Relative rounding of a value printed by [`fmt`]: half a unit in the twelfth digit.
pub const REL_PRECISION: f64 = 5e-12;

/// Twelve significant digits in scientific notation.
pub fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

/// A header row plus numeric rows, all of the header's width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| fmt(v)))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("formatted floats are ASCII"))
    }

    /// Writes `dir/name` and returns the path.
    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, self.to_csv()?)?;
        Ok(path)
    }
}

/// Reads a numeric CSV with a header row.
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let header = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut table = Table { header, rows: Vec::new() };
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("{} row {}: `{s}` is not a number", path.display(), i + 1))
                })
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        table.rows.push(row);
    }
    Ok(table)
}
