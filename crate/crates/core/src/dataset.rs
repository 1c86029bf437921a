//! Multivariate time-series container and its CSV file format.
//!
//! A dataset is a rectangular block of `f64` samples: `n` named variables
//! observed over `T` timesteps. On disk it is a plain CSV with one column
//! per variable and one row per timestep, optionally preceded by a header
//! row of variable names. All parsing errors carry 1-based line numbers.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::atomic_write;

/// A named multivariate time series with equal-length variable columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    /// `series[i][t]` is the value of variable `i` at timestep `t`.
    series: Vec<Vec<f64>>,
}

impl Dataset {
    /// Builds a dataset, validating shape and finiteness.
    pub fn new(names: Vec<String>, series: Vec<Vec<f64>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidArgument(
                "dataset needs at least one variable".into(),
            ));
        }
        if names.len() != series.len() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} series",
                names.len(),
                series.len()
            )));
        }
        let len = series[0].len();
        if len == 0 {
            return Err(Error::InvalidArgument(
                "dataset needs at least one timestep".into(),
            ));
        }
        for (i, s) in series.iter().enumerate() {
            if s.len() != len {
                return Err(Error::InvalidArgument(format!(
                    "variable {} has {} timesteps, expected {}",
                    names[i],
                    s.len(),
                    len
                )));
            }
            if let Some(t) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "variable {} has a non-finite value at timestep {}",
                    names[i], t
                )));
            }
        }
        Ok(Dataset { names, series })
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.series.len()
    }

    /// Number of timesteps.
    pub fn len(&self) -> usize {
        self.series[0].len()
    }

    /// True when the dataset has zero timesteps (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Variable names in column order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Full series of variable `i`.
    pub fn series(&self, i: usize) -> &[f64] {
        &self.series[i]
    }

    /// All series, indexed `[variable][timestep]`.
    pub fn all_series(&self) -> &[Vec<f64>] {
        &self.series
    }

    /// Renders the dataset as CSV text with a header row.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.names.join(","));
        out.push('\n');
        for t in 0..self.len() {
            for i in 0..self.n() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", self.series[i][t]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses CSV text. With `has_header == false`, names are synthesized
    /// as `x0..x{n-1}`. `path` is only used to label errors.
    pub fn from_csv_str(text: &str, has_header: bool, path: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(idx, l)| (idx + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());

        let (names, first_data): (Vec<String>, Option<(usize, &str)>) = if has_header {
            let (line_no, header) = lines
                .next()
                .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
            let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
            if names.iter().any(|s| s.is_empty()) {
                return Err(Error::parse(path, line_no, "empty variable name in header"));
            }
            (names, None)
        } else {
            let (line_no, row) = lines
                .next()
                .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
            let n = row.split(',').count();
            ((0..n).map(|i| format!("x{i}")).collect(), Some((line_no, row)))
        };

        let n = names.len();
        let mut series: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut push_row = |line_no: usize, row: &str| -> Result<()> {
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != n {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected {} fields, found {}", n, fields.len()),
                ));
            }
            for (i, field) in fields.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::parse(path, line_no, format!("invalid number {:?}", field.trim()))
                })?;
                series[i].push(v);
            }
            Ok(())
        };

        if let Some((line_no, row)) = first_data {
            push_row(line_no, row)?;
        }
        for (line_no, row) in lines {
            push_row(line_no, row)?;
        }
        if series[0].is_empty() {
            return Err(Error::parse(path, 1, "no data rows"));
        }
        Dataset::new(names, series)
    }

    /// Reads a dataset from a CSV file.
    pub fn read_csv(path: &Path, has_header: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, has_header, path)
    }

    /// Writes the dataset as CSV, atomically replacing any existing file.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_csv_string().as_bytes())
    }
}
