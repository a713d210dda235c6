use std::fmt;

use serde::{Deserialize, Serialize};

/// Selection mask over feature indices; bit `i` set means feature `i` is in the subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureSubset {
    mask: Vec<bool>,
}

impl FeatureSubset {
    pub fn empty(n_features: usize) -> Self {
        FeatureSubset {
            mask: vec![false; n_features],
        }
    }

    pub fn full(n_features: usize) -> Self {
        FeatureSubset {
            mask: vec![true; n_features],
        }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        FeatureSubset { mask }
    }

    /// Indices outside `0..n_features` are ignored.
    pub fn from_indices(n_features: usize, indices: &[usize]) -> Self {
        let mut mask = vec![false; n_features];
        for &i in indices {
            if i < n_features {
                mask[i] = true;
            }
        }
        FeatureSubset { mask }
    }

    /// Subset built from 0/1 actions, one per feature.
    pub fn from_actions(actions: &[u8]) -> Self {
        FeatureSubset {
            mask: actions.iter().map(|&a| a == 1).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.mask.len()
    }

    pub fn cardinality(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, i: usize) {
        self.mask[i] = true;
    }

    pub fn remove(&mut self, i: usize) {
        self.mask[i] = false;
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn is_superset_of(&self, indices: &[usize]) -> bool {
        indices.iter().all(|&i| self.contains(i))
    }

    /// Feature names of the selected indices, in index order.
    pub fn names<'a>(&self, feature_names: &'a [String]) -> Vec<&'a str> {
        self.indices()
            .into_iter()
            .map(|i| feature_names[i].as_str())
            .collect()
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.mask {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}
