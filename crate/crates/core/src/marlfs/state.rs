//! Fixed-length state for a variable-size feature subset.
//!
//! Each feature is described by eight training-set statistics. The selected
//! features form a graph with edge weights |r_ij| (self loops of weight 1);
//! one symmetric-normalized propagation step `D^-1/2 A D^-1/2 X` is applied
//! and the node rows are mean-pooled into the state.

use serde::{Deserialize, Serialize};

use crate::dataset::DataTable;
use crate::error::Result;
use crate::stats::{self, CorrMatrix};
use crate::subset::FeatureSubset;

pub const STATE_DIM: usize = 8;

/// Per-feature rows of (mean, std, min, q25, median, q75, max, |pearson with label|).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStatistics {
    pub rows: Vec<[f64; STATE_DIM]>,
}

impl FeatureStatistics {
    pub fn compute(train: &DataTable) -> Result<Self> {
        let mut rows = Vec::with_capacity(train.n_features());
        for j in 0..train.n_features() {
            let col = train.x.column(j);
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let label_corr = if col.len() >= 2 {
                stats::pearson(&col, &train.y)?.r.abs()
            } else {
                0.0
            };
            rows.push([
                stats::mean(&col),
                stats::std_dev(&col),
                sorted[0],
                stats::quantile_sorted(&sorted, 0.25),
                stats::quantile_sorted(&sorted, 0.5),
                stats::quantile_sorted(&sorted, 0.75),
                sorted[sorted.len() - 1],
                label_corr,
            ]);
        }
        Ok(FeatureStatistics { rows })
    }
}

/// Aggregated state; the zero vector for an empty subset.
pub fn state_repr(subset: &FeatureSubset, features: &FeatureStatistics, corr: &CorrMatrix) -> Vec<f64> {
    let idx = subset.indices();
    let k = idx.len();
    let mut state = vec![0.0; STATE_DIM];
    if k == 0 {
        return state;
    }
    let adj = |a: usize, b: usize| {
        if a == b {
            1.0
        } else {
            corr.get(idx[a], idx[b]).abs()
        }
    };
    let inv_sqrt_deg: Vec<f64> = (0..k)
        .map(|a| 1.0 / (0..k).map(|b| adj(a, b)).sum::<f64>().sqrt())
        .collect();
    for a in 0..k {
        for b in 0..k {
            let w = inv_sqrt_deg[a] * adj(a, b) * inv_sqrt_deg[b];
            let row = &features.rows[idx[b]];
            for (s, v) in state.iter_mut().zip(row) {
                *s += w * v;
            }
        }
    }
    for s in &mut state {
        *s /= k as f64;
    }
    state
}
