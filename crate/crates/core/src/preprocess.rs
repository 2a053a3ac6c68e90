//! Z-score standardization fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ZScoreParams<T> {
    pub names: Vec<String>,
    pub mean: Vec<T>,
    /// Population standard deviation.
    pub std: Vec<T>,
    /// Columns with σ = 0; they transform to 0.
    pub constant: Vec<bool>,
}

pub fn fit_zscore<T: Scalar>(rows: &[Vec<T>], names: &[String]) -> Result<ZScoreParams<T>> {
    if rows.len() < 2 {
        return Err(Error::TooShort {
            what: "z-score training rows",
            required: 2,
            got: rows.len(),
        });
    }
    let m = names.len();
    for r in rows {
        if r.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: r.len(),
            });
        }
    }
    let n = T::from_count(rows.len());
    let mut mean = vec![T::zero(); m];
    for r in rows {
        for (acc, &v) in mean.iter_mut().zip(r) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= n;
    }
    let mut var = vec![T::zero(); m];
    for r in rows {
        for ((acc, &v), &mu) in var.iter_mut().zip(r).zip(&mean) {
            let d = v - mu;
            *acc += d * d;
        }
    }
    let std: Vec<T> = var.into_iter().map(|v| (v / n).sqrt()).collect();
    if mean.iter().chain(&std).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("z-score training data"));
    }
    let constant = std.iter().map(|&s| s == T::zero()).collect();
    Ok(ZScoreParams {
        names: names.to_vec(),
        mean,
        std,
        constant,
    })
}

impl<T: Scalar> ZScoreParams<T> {
    pub fn transform_row(&self, row: &[T]) -> Result<Vec<T>> {
        if row.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.constant[j] {
                    T::zero()
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect())
    }
}

/// Standardizes `rows` whose columns are `names` with previously fitted
/// parameters.
pub fn apply_zscore<T: Scalar>(
    rows: &[Vec<T>],
    names: &[String],
    params: &ZScoreParams<T>,
) -> Result<Vec<Vec<T>>> {
    if names != params.names.as_slice() {
        return Err(Error::ColumnMismatch(
            "columns differ from the fitted parameters".into(),
        ));
    }
    rows.iter().map(|r| params.transform_row(r)).collect()
}
