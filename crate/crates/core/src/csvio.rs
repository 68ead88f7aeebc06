//! CSV plumbing shared by the file formats: 17-significant-digit floats,
//! mandatory header row, errors that name the offending data row.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Round-trip exact rendering with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// A parsed CSV file. Data rows are numbered from 1 in error messages.
pub struct CsvTable {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

impl CsvTable {
    pub fn read<R: Read>(input: R, path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format {
                path: path.to_path_buf(),
                row: i + 1,
                msg: e.to_string(),
            })?;
            rows.push(rec);
        }
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(Error::Format {
                path: path.to_path_buf(),
                row: 0,
                msg: "missing header row".into(),
            });
        }
        Ok(CsvTable {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    pub fn format_error(&self, row: usize, msg: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.clone(),
            row,
            msg: msg.into(),
        }
    }

    /// Checks the header is `leading.., prefix1..prefixD, trailing..` and
    /// returns `D >= 1`.
    pub fn expect_prefixed_columns(
        &self,
        leading: &[&str],
        prefix: &str,
        trailing: &[&str],
    ) -> Result<usize> {
        let total = self.headers.len();
        let fixed = leading.len() + trailing.len();
        let bad = || {
            self.format_error(
                0,
                format!(
                    "header {:?} does not match {:?} + {prefix}1..{prefix}d + {:?}",
                    self.headers, leading, trailing
                ),
            )
        };
        if total <= fixed {
            return Err(bad());
        }
        let dim = total - fixed;
        let expected = leading
            .iter()
            .map(|s| s.to_string())
            .chain((1..=dim).map(|i| format!("{prefix}{i}")))
            .chain(trailing.iter().map(|s| s.to_string()));
        if !expected.eq(self.headers.iter().cloned()) {
            return Err(bad());
        }
        Ok(dim)
    }

    pub fn expect_columns(&self, names: &[&str]) -> Result<()> {
        if self
            .headers
            .iter()
            .map(String::as_str)
            .ne(names.iter().copied())
        {
            return Err(self.format_error(
                0,
                format!("header {:?} does not match {:?}", self.headers, names),
            ));
        }
        Ok(())
    }

    fn field(&self, i: usize, col: usize) -> Result<&str> {
        let row = &self.rows[i];
        if row.len() != self.headers.len() {
            return Err(self.format_error(
                i + 1,
                format!(
                    "expected {} fields, found {}",
                    self.headers.len(),
                    row.len()
                ),
            ));
        }
        Ok(row.get(col).expect("width checked").trim())
    }

    pub fn parse_f64(&self, i: usize, col: usize) -> Result<f64> {
        let raw = self.field(i, col)?;
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                self.format_error(
                    i + 1,
                    format!(
                        "column {}: {raw:?} is not a finite number",
                        self.headers[col]
                    ),
                )
            })
    }

    /// Empty field reads as `None`.
    pub fn parse_opt_f64(&self, i: usize, col: usize) -> Result<Option<f64>> {
        if self.field(i, col)?.is_empty() {
            return Ok(None);
        }
        self.parse_f64(i, col).map(Some)
    }

    pub fn parse_usize(&self, i: usize, col: usize) -> Result<usize> {
        let raw = self.field(i, col)?;
        raw.parse::<usize>().map_err(|_| {
            self.format_error(
                i + 1,
                format!("column {}: {raw:?} is not an index", self.headers[col]),
            )
        })
    }

    /// Column 0 of data row `i` must equal `i + 1`.
    pub fn expect_index(&self, i: usize) -> Result<()> {
        let t = self.parse_usize(i, 0)?;
        if t != i + 1 {
            return Err(self.format_error(i + 1, format!("expected t = {}, found {t}", i + 1)));
        }
        Ok(())
    }
}
