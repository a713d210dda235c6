use std::collections::HashMap;

use super::MarlfsConfig;
use crate::dataset::DataTable;
use crate::error::{Error, Result};
use crate::forest;
use crate::reward;
use crate::stats::{self, CorrMatrix};
use crate::subset::FeatureSubset;

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub subset: FeatureSubset,
    pub reward: f64,
    /// `None` for the empty subset.
    pub mse_cv: Option<f64>,
}

/// Cross-validated MSE of a forest trained on the selected training columns.
pub fn subset_cv_mse(train: &DataTable, subset: &FeatureSubset, cfg: &MarlfsConfig) -> Result<f64> {
    let x = train.x.select_columns(&subset.indices());
    forest::cv_mse(&x, &train.y, cfg.cv_folds, &cfg.forest, cfg.cv_seed)
}

/// Uncached environment transition: turns one action per agent into a subset
/// and scores it.
pub fn env_step(
    actions: &[u8],
    train: &DataTable,
    corr: &CorrMatrix,
    cfg: &MarlfsConfig,
) -> Result<StepOutcome> {
    Environment::new(train, corr, cfg).step(actions)
}

/// Scores subsets, memoizing the cross-validated MSE per subset. The CV
/// evaluation is a pure function of the subset (fixed fold and forest
/// seeds), so the cache never changes results.
pub struct Environment<'a> {
    train: &'a DataTable,
    corr: &'a CorrMatrix,
    cfg: &'a MarlfsConfig,
    cache: HashMap<FeatureSubset, f64>,
}

impl<'a> Environment<'a> {
    pub fn new(train: &'a DataTable, corr: &'a CorrMatrix, cfg: &'a MarlfsConfig) -> Self {
        Environment {
            train,
            corr,
            cfg,
            cache: HashMap::new(),
        }
    }

    pub fn evaluations(&self) -> usize {
        self.cache.len()
    }

    pub fn cv_mse(&mut self, subset: &FeatureSubset) -> Result<f64> {
        if let Some(&v) = self.cache.get(subset) {
            return Ok(v);
        }
        let v = subset_cv_mse(self.train, subset, self.cfg)?;
        self.cache.insert(subset.clone(), v);
        Ok(v)
    }

    pub fn step(&mut self, actions: &[u8]) -> Result<StepOutcome> {
        if actions.len() != self.train.n_features() {
            return Err(Error::LengthMismatch {
                expected: self.train.n_features(),
                actual: actions.len(),
            });
        }
        let subset = FeatureSubset::from_actions(actions);
        if subset.is_empty() {
            return Ok(StepOutcome {
                subset,
                reward: self.cfg.reward.empty_subset_penalty(),
                mse_cv: None,
            });
        }
        let mse = self.cv_mse(&subset)?;
        let rbar = stats::redundancy(&subset, self.corr);
        Ok(StepOutcome {
            reward: reward::compute_reward(mse, rbar, &self.cfg.reward),
            subset,
            mse_cv: Some(mse),
        })
    }
}
