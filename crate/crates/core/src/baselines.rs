//! Comparison methods: variance filter, recursive feature elimination and
//! the dataset's own expert estimates.

use serde::{Deserialize, Serialize};

use crate::dataset::DataTable;
use crate::error::{Error, Result};
use crate::forest::{self, ForestParams};
use crate::matrix::Matrix;
use crate::stats;
use crate::subset::FeatureSubset;

/// Keeps feature `i` iff its population variance is `>= threshold`.
/// Meant for unstandardized features.
pub fn variance_filter(x_raw: &Matrix, threshold: f64) -> Result<FeatureSubset> {
    let keep: Vec<bool> = (0..x_raw.n_cols())
        .map(|j| stats::variance(&x_raw.column(j)) >= threshold)
        .collect();
    let subset = FeatureSubset::from_mask(keep);
    if subset.is_empty() {
        return Err(Error::Degenerate(format!(
            "no feature has variance >= {threshold}"
        )));
    }
    Ok(subset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeRank {
    pub feature: String,
    /// 1-based round in which the feature was removed; `None` if it survived.
    pub eliminated_in: Option<usize>,
    /// Survivors rank 1; the last feature eliminated ranks 2, and so on.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    pub selected: FeatureSubset,
    /// One entry per feature, in the table's feature order.
    pub ranking: Vec<RfeRank>,
    pub rounds: usize,
}

/// Recursive feature elimination with forest importances. Each round refits
/// on the survivors and removes the `min(step, survivors - k)` least
/// important ones; equal importances remove the higher feature index first.
pub fn rfe(train: &DataTable, k: usize, step: usize, params: &ForestParams) -> Result<RfeResult> {
    let n = train.n_features();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must satisfy 1 <= k < {n}"
        )));
    }
    if step == 0 {
        return Err(Error::InvalidParameter("step must be at least 1".into()));
    }
    let mut survivors: Vec<usize> = (0..n).collect();
    let mut eliminated_in: Vec<Option<usize>> = vec![None; n];
    let mut round = 0;
    while survivors.len() > k {
        round += 1;
        let x = train.x.select_columns(&survivors);
        let model = forest::fit_forest(&x, &train.y, params)?;
        let imp = model.importance().values;
        let mut order: Vec<usize> = (0..survivors.len()).collect();
        order.sort_by(|&a, &b| {
            imp[a]
                .total_cmp(&imp[b])
                .then_with(|| survivors[b].cmp(&survivors[a]))
        });
        let n_drop = step.min(survivors.len() - k);
        let mut drop: Vec<usize> = order[..n_drop].iter().map(|&p| survivors[p]).collect();
        drop.sort_unstable();
        for &f in &drop {
            eliminated_in[f] = Some(round);
        }
        survivors.retain(|f| drop.binary_search(f).is_err());
    }
    let ranking = (0..n)
        .map(|f| RfeRank {
            feature: train.feature_names[f].clone(),
            eliminated_in: eliminated_in[f],
            rank: eliminated_in[f].map_or(1, |r| round - r + 2),
        })
        .collect();
    Ok(RfeResult {
        selected: FeatureSubset::from_indices(n, &survivors),
        ranking,
        rounds: round,
    })
}

/// (MSE, MAE) of the expert estimate against the label on `val`.
pub fn expert_metrics(val: &DataTable) -> Result<(f64, f64)> {
    let est = val
        .expert_estimate
        .as_ref()
        .ok_or_else(|| Error::Schema("no expert-estimate column".into()))?;
    Ok((stats::mse(&val.y, est)?, stats::mae(&val.y, est)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverfitProbe {
    pub train_mse: f64,
    pub train_mae: f64,
    pub val_mse: f64,
    pub val_mae: f64,
}

impl OverfitProbe {
    pub fn gap_ratio(&self) -> f64 {
        self.val_mse / self.train_mse
    }
}

/// Fits on the training rows of `subset` and scores both the training
/// rows themselves and the validation rows.
pub fn filter_overfit_probe(
    train: &DataTable,
    val: &DataTable,
    subset: &FeatureSubset,
    params: &ForestParams,
) -> Result<OverfitProbe> {
    let cols = subset.indices();
    if cols.is_empty() {
        return Err(Error::Degenerate("overfit probe needs a nonempty subset".into()));
    }
    let model = forest::fit_forest(&train.x.select_columns(&cols), &train.y, params)?;
    let pt = model.predict_matrix(&train.x.select_columns(&cols))?;
    let pv = model.predict_matrix(&val.x.select_columns(&cols))?;
    Ok(OverfitProbe {
        train_mse: stats::mse(&train.y, &pt)?,
        train_mae: stats::mae(&train.y, &pt)?,
        val_mse: stats::mse(&val.y, &pv)?,
        val_mae: stats::mae(&val.y, &pv)?,
    })
}
