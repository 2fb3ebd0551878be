//! Activation matrix container and its on-disk formats.

mod csv;
pub mod npy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{parse_csv, read_csv};
pub use self::npy::{decode_npy, encode_npy, read_array, write_array, write_raw_f64};

/// S×N activations, one row per sample and one column per neuron.
///
/// Invariants: `rows >= 1`, `cols >= 1` and every entry is finite. They are
/// checked by every constructor, so any value of this type is valid input
/// for the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    neuron_labels: Option<Vec<String>>,
    source: Option<String>,
}

impl ActivationMatrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!(
                "activation matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self {
            rows,
            cols,
            data,
            neuron_labels: None,
            source: None,
        })
    }

    /// Builds a matrix from per-neuron columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::LengthMismatch {
                left: rows,
                right: bad.len(),
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            data.extend(columns.iter().map(|c| c[r]));
        }
        Self::new(rows, cols, data)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.cols {
            return Err(Error::LengthMismatch {
                left: self.cols,
                right: labels.len(),
            });
        }
        self.neuron_labels = Some(labels);
        Ok(self)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    /// Number of samples (S).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of neurons (N).
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn neuron_labels(&self) -> Option<&[String]> {
        self.neuron_labels.as_deref()
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    /// Keeps the given rows in the given order. Labels and source carry over.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            if r >= self.rows {
                return Err(Error::InvalidShape(format!(
                    "row {r} out of range for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(r));
        }
        let mut out = Self::new(rows.len(), self.cols, data)?;
        out.neuron_labels = self.neuron_labels.clone();
        out.source = self.source.clone();
        Ok(out)
    }

    /// Keeps the given columns in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let picked: Vec<Vec<f64>> = cols.iter().map(|&c| self.column(c)).collect();
        let mut out = Self::from_columns(&picked)?;
        if let Some(labels) = &self.neuron_labels {
            out.neuron_labels = Some(cols.iter().map(|&c| labels[c].clone()).collect());
        }
        out.source = self.source.clone();
        Ok(out)
    }
}
