//! Tabular sweep output with a provenance header and a stable CSV form.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub len: usize,
}

impl Axis {
    pub fn new(name: &str, unit: &str, len: usize) -> Self {
        Axis { name: name.into(), unit: unit.into(), len }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub toolkit_version: String,
}

/// Rows hold the axis values first, then one value per metric column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    pub provenance: Option<Provenance>,
}

/// Columns whose values must lie in `[0, 1]`.
fn is_bounded(name: &str) -> bool {
    name.starts_with("probability") || name.starts_with("fidelity") || name.starts_with("concurrence")
}

impl SweepResult {
    pub fn new(axes: Vec<Axis>, columns: Vec<(String, String)>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let out = SweepResult {
            axes,
            columns: columns.into_iter().map(|(name, unit)| Column { name, unit }).collect(),
            rows,
            provenance: None,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn with_provenance(mut self, config_hash: &str) -> Self {
        self.provenance = Some(Provenance {
            config_hash: config_hash.into(),
            toolkit_version: env!("CARGO_PKG_VERSION").into(),
        });
        self
    }

    pub fn grid_size(&self) -> usize {
        self.axes.iter().map(|a| a.len).product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.grid_size() == 0 {
            return Err(Error::InvalidParameter("sweep grid is empty".into()));
        }
        if self.rows.len() != self.grid_size() {
            return Err(Error::DimensionMismatch { expected: self.grid_size(), found: self.rows.len() });
        }
        let width = self.axes.len() + self.columns.len();
        for row in &self.rows {
            if row.len() != width {
                return Err(Error::DimensionMismatch { expected: width, found: row.len() });
            }
            for (col, v) in self.columns.iter().zip(&row[self.axes.len()..]) {
                if is_bounded(&col.name) && !(-1e-12..=1.0 + 1e-12).contains(v) {
                    return Err(Error::InvalidParameter(format!("{} = {v} outside [0, 1]", col.name)));
                }
            }
        }
        Ok(())
    }

    /// Index of a metric column by name, counted within the row.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name).map(|i| i + self.axes.len())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if let Some(p) = &self.provenance {
            let _ = writeln!(s, "# config_hash={} toolkit_version={}", p.config_hash, p.toolkit_version);
        }
        let header: Vec<String> = self
            .axes
            .iter()
            .map(|a| (&a.name, &a.unit))
            .chain(self.columns.iter().map(|c| (&c.name, &c.unit)))
            .map(|(n, u)| format!("{n} [{u}]"))
            .collect();
        let _ = writeln!(s, "{}", header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.11e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepResult {
        SweepResult::new(
            vec![Axis::new("omega_tau", "1/Omega2", 2)],
            vec![("probability".into(), "1".into()), ("residual".into(), "1".into())],
            vec![vec![56.0, 0.9936, 3.2], vec![56.3, 0.99998, 1e-5]],
        )
        .unwrap()
    }

    #[test]
    fn csv_layout() {
        let csv = sample().with_provenance("abc").to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# config_hash=abc toolkit_version="));
        assert_eq!(lines[1], "omega_tau [1/Omega2],probability [1],residual [1]");
        assert_eq!(lines[2], "5.60000000000e1,9.93600000000e-1,3.20000000000e0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn validation() {
        let mut s = sample();
        s.rows.pop();
        assert!(s.validate().is_err());
        let mut s = sample();
        s.rows[0][1] = 1.5;
        assert!(s.validate().is_err());
        // residuals are unbounded
        let mut s = sample();
        s.rows[0][2] = 7.0;
        assert!(s.validate().is_ok());
        assert_eq!(sample().column_index("residual"), Some(2));
    }
}
