//! Z-score standardization.
//!
//! Stats are fit on the training split only and then applied unchanged to
//! validation and test features; fitting anywhere else leaks target-split
//! information into the model. The stats travel with the trained model so a
//! scoring run cannot accidentally re-fit them.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{real_of, Scalar};

/// Per-column mean and standard deviation (population, 1/N).
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizerStats<F> {
    pub mean: Vec<F>,
    pub std: Vec<F>,
}

impl<F: Scalar> StandardizerStats<F> {
    /// Fit on training features. A zero-variance column is an error: it
    /// cannot be scaled to unit variance, and it carries no signal anyway
    /// (the pruning step removes such columns before this point).
    pub fn fit(features: &Matrix<F>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::Domain("cannot fit standardizer on 0 rows".into()));
        }
        let n = real_of::<F>(features.rows());
        let mut mean = vec![F::zero(); features.cols()];
        for r in 0..features.rows() {
            for (m, &v) in mean.iter_mut().zip(features.row(r)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m = *m / n;
        }
        let mut var = vec![F::zero(); features.cols()];
        for r in 0..features.rows() {
            for (c, (&v, &m)) in features.row(r).iter().zip(&mean).enumerate() {
                let d = v - m;
                var[c] += d * d;
            }
        }
        let mut std = Vec::with_capacity(var.len());
        for (c, v) in var.iter().enumerate() {
            let s = (*v / n).sqrt();
            if s == F::zero() {
                return Err(Error::Domain(format!("column {c} has zero variance")));
            }
            std.push(s);
        }
        Ok(StandardizerStats { mean, std })
    }

    /// Apply fitted stats: (x - mean) / std, column by column.
    pub fn apply(&self, features: &Matrix<F>) -> Result<Matrix<F>> {
        if features.cols() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "standardizer fit on {} columns, applied to {}",
                self.mean.len(),
                features.cols()
            )));
        }
        let mut out = features.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            for (c, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / self.std[c];
            }
        }
        Ok(out)
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }
}
