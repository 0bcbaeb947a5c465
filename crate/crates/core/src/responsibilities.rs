use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Posterior membership probabilities, one row of three per sample.
///
/// Column 0 is the Gaussian noise component, column 1 the positive activation
/// component and column 2 the negative one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Responsibilities {
    rows: Vec<[f64; 3]>,
}

impl Responsibilities {
    pub fn from_rows(rows: Vec<[f64; 3]>) -> Result<Self> {
        for (n, r) in rows.iter().enumerate() {
            let s: f64 = r.iter().sum();
            if r.iter().any(|&g| !(0.0..=1.0).contains(&g)) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "responsibility row {n} = {r:?} is not a probability vector"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub(crate) fn zeroed(n: usize) -> Self {
        Self {
            rows: vec![[0.0; 3]; n],
        }
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.rows
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Soft counts per component.
    pub fn counts(&self) -> [f64; 3] {
        self.rows.iter().fold([0.0; 3], |mut acc, r| {
            acc[0] += r[0];
            acc[1] += r[1];
            acc[2] += r[2];
            acc
        })
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[k])
    }
}

/// Normalizes one row of log weights. Returns `None` when every entry is
/// `-inf`. Entries that are `-inf` come out as exactly zero.
#[inline]
pub(crate) fn normalize_log_row(log_w: [f64; 3]) -> Option<([f64; 3], f64)> {
    let max = log_w[0].max(log_w[1]).max(log_w[2]);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return None;
    }
    let e = log_w.map(|l| (l - max).exp());
    let sum = e[0] + e[1] + e[2];
    Some((e.map(|v| v / sum), max + sum.ln()))
}
