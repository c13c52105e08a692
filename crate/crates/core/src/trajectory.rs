//! Time series produced by the evolution backends, and their CSV form.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Rows of observable values sampled at increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    time_label: String,
    columns: Vec<String>,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(columns: Vec<String>) -> Self {
        Self::with_time_label("t_us", columns)
    }

    pub fn with_time_label(label: &str, columns: Vec<String>) -> Self {
        Self { time_label: label.to_string(), columns, times: Vec::new(), rows: Vec::new() }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.times.push(t);
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// All samples of one column.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .column_index(name)
            .ok_or_else(|| Error::Invalid(format!("trajectory has no column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Appends another trajectory's columns sample by sample.
    pub fn join_columns(&mut self, other: &Trajectory) -> Result<()> {
        if other.times != self.times {
            return Err(Error::Shape("trajectories sampled at different times".into()));
        }
        self.columns.extend(other.columns.iter().cloned());
        for (r, o) in self.rows.iter_mut().zip(&other.rows) {
            r.extend_from_slice(o);
        }
        Ok(())
    }

    /// Comma-separated with a header row; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.time_label);
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            write!(out, "{t:?}").unwrap();
            for v in row {
                write!(out, ",{v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Trajectory::new(vec!["a".into(), "b".into()]);
        t.push(0.0, vec![1.0, 0.1]);
        t.push(0.5, vec![2.0, 1e-20]);
        assert_eq!(t.to_csv(), "t_us,a,b\n0.0,1.0,0.1\n0.5,2.0,1e-20\n");
        assert_eq!(t.column("b").unwrap(), vec![0.1, 1e-20]);
        assert!(t.column("c").is_err());
    }
}
