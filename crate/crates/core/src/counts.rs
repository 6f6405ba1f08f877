use nalgebra::DMatrix;

use crate::error::{parameter, shape, Result};

/// Binned counts, one row per bin and one column per realization.
/// Missing observations are stored as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountData {
    counts: DMatrix<f64>,
}

impl CountData {
    pub fn new(counts: DMatrix<f64>) -> Result<Self> {
        if counts.nrows() == 0 || counts.ncols() == 0 {
            return Err(shape(format!(
                "count matrix must be non-empty, got {}x{}",
                counts.nrows(),
                counts.ncols()
            )));
        }
        for (idx, &v) in counts.iter().enumerate() {
            if v.is_nan() {
                continue;
            }
            if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0) {
                let (i, r) = (idx % counts.nrows(), idx / counts.nrows());
                return Err(parameter(format!(
                    "count at bin {i}, realization {r} must be a non-negative integer, got {v}"
                )));
            }
        }
        for (r, col) in counts.column_iter().enumerate() {
            if col.iter().all(|v| v.is_nan()) {
                return Err(parameter(format!("realization {r} has no observed bins")));
            }
        }
        Ok(Self { counts })
    }

    /// A single realization.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(counts.len(), 1, counts))
    }

    pub fn n_bins(&self) -> usize {
        self.counts.nrows()
    }

    pub fn n_realizations(&self) -> usize {
        self.counts.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.counts
    }

    pub fn get(&self, bin: usize, realization: usize) -> Option<f64> {
        let v = self.counts[(bin, realization)];
        (!v.is_nan()).then_some(v)
    }

    /// Total observed count per bin, skipping missing entries.
    pub fn totals(&self) -> Vec<f64> {
        self.counts
            .row_iter()
            .map(|row| row.iter().filter(|v| !v.is_nan()).sum())
            .collect()
    }

    /// Number of observed realizations per bin.
    pub fn exposures(&self) -> Vec<f64> {
        self.counts
            .row_iter()
            .map(|row| row.iter().filter(|v| !v.is_nan()).count() as f64)
            .collect()
    }

    pub fn has_missing(&self) -> bool {
        self.counts.iter().any(|v| v.is_nan())
    }
}
