//! Scalar statistics: error metrics, correlation and impurity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::subset::FeatureSubset;

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Degenerate("empty vectors".into()));
    }
    Ok(())
}

/// Mean squared error.
pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let sum: f64 = y.iter().zip(yhat).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok(sum / y.len() as f64)
}

/// Mean absolute error.
pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let sum: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / y.len() as f64)
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance (divides by n).
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// Quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty; `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Median; averages the two middle values for even lengths.
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Pearson coefficient plus a flag set when either input is constant
/// (the coefficient is then reported as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub degenerate: bool,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Degenerate(format!(
            "pearson needs at least 2 observations, got {}",
            x.len()
        )));
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation {
            r: 0.0,
            degenerate: true,
        });
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        degenerate: false,
    })
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Class proportions for Gini impurity.
#[derive(Debug, Clone, PartialEq)]
pub struct GiniInput {
    proportions: Vec<f64>,
}

impl GiniInput {
    pub fn new(proportions: Vec<f64>) -> Result<Self> {
        if proportions.is_empty() {
            return Err(Error::InvalidParameter("no classes".into()));
        }
        if proportions.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "class proportions must be non-negative".into(),
            ));
        }
        let total: f64 = proportions.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "class proportions sum to {total}, expected 1"
            )));
        }
        Ok(GiniInput { proportions })
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidParameter("all class counts are zero".into()));
        }
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        // rounding can push the sum a few ulps off
        let s: f64 = p.iter().sum();
        GiniInput::new(p.into_iter().map(|v| v / s).collect())
    }

    pub fn k_classes(&self) -> usize {
        self.proportions.len()
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }
}

/// Gini impurity `1 - Σ p_i²`.
pub fn gini(g: &GiniInput) -> f64 {
    1.0 - g.proportions.iter().map(|p| p * p).sum::<f64>()
}

/// Symmetric matrix of pairwise Pearson coefficients between feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    feature_names: Vec<String>,
    n: usize,
    values: Vec<f64>,
}

impl CorrMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Pairwise Pearson over the columns of `x`. Constant columns get 0 off the diagonal.
pub fn corr_matrix(x: &Matrix, feature_names: &[String]) -> Result<CorrMatrix> {
    if x.n_rows() < 2 {
        return Err(Error::Degenerate(format!(
            "correlation matrix needs at least 2 rows, got {}",
            x.n_rows()
        )));
    }
    if feature_names.len() != x.n_cols() {
        return Err(Error::LengthMismatch {
            expected: x.n_cols(),
            actual: feature_names.len(),
        });
    }
    let n = x.n_cols();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let r = pearson(&cols[i], &cols[j])?.r;
            values[i * n + j] = r;
            values[j * n + i] = r;
        }
    }
    Ok(CorrMatrix {
        feature_names: feature_names.to_vec(),
        n,
        values,
    })
}

/// Sum of |r_ij| over unordered pairs in the subset, divided by the subset size.
/// Zero for subsets with fewer than two features.
pub fn redundancy(subset: &FeatureSubset, corr: &CorrMatrix) -> f64 {
    let idx = subset.indices();
    if idx.len() <= 1 {
        return 0.0;
    }
    let mut total = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            total += corr.get(i, j).abs();
        }
    }
    total / idx.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn mse_and_mae_examples() {
        let y = [2.0, 2.0, 5.0];
        let yhat = [1.0, 2.0, 3.0];
        assert!((mse(&y, &yhat).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(mae(&y, &yhat).unwrap(), 1.0);
        assert_eq!(mse(&y, &y).unwrap(), 0.0);
        assert_eq!(mae(&y, &y).unwrap(), 0.0);
        assert!(mse(&y, &yhat[..2]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn pearson_sign_and_degenerate() {
        let x = [1.0, 2.0, 3.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap().r - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap().r + 1.0).abs() < 1e-15);
        let c = pearson(&x, &[3.0; 4]).unwrap();
        assert_eq!(c.r, 0.0);
        assert!(c.degenerate);
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pearson_hand_value() {
        // x=[1,2,3], y=[1,2,4]: dx=[-1,0,1], dy=[-4/3,-1/3,5/3]
        // sxy = 3, sxx = 2, syy = 42/9
        let expected = 3.0 / (2.0f64.sqrt() * (42.0f64 / 9.0).sqrt());
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap().r;
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&GiniInput::new(vec![1.0]).unwrap()), 0.0);
        assert_eq!(gini(&GiniInput::new(vec![0.5, 0.5]).unwrap()), 0.5);
        assert!((gini(&GiniInput::new(vec![0.25, 0.75]).unwrap()) - 0.375).abs() < 1e-15);
        assert!(GiniInput::new(vec![0.5, 0.6]).is_err());
        assert!(GiniInput::new(vec![-0.5, 1.5]).is_err());
        assert!((gini(&GiniInput::from_counts(&[1, 1, 1]).unwrap()) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gini_max_at_uniform() {
        for k in 2..=4usize {
            let uniform = gini(&GiniInput::new(vec![1.0 / k as f64; k]).unwrap());
            assert!((uniform - (1.0 - 1.0 / k as f64)).abs() < 1e-12);
            // grid over compositions of 12 into k parts
            let steps = 12;
            let mut counts = vec![0usize; k];
            fn rec(counts: &mut Vec<usize>, pos: usize, left: usize, best: f64) {
                if pos == counts.len() - 1 {
                    counts[pos] = left;
                    let g = gini(&GiniInput::from_counts(counts).unwrap());
                    assert!(g <= best + 1e-12, "{counts:?} gives {g} > {best}");
                    return;
                }
                for c in 0..=left {
                    counts[pos] = c;
                    rec(counts, pos + 1, left - c, best);
                }
            }
            rec(&mut counts, 0, steps, uniform);
        }
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn spearman_monotone() {
        let x = [0.3, 1.0, 2.5, 4.0, 9.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        assert!((spearman(&x, &y).unwrap().r - 1.0).abs() < 1e-12);
        let z: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
        assert!((spearman(&x, &z).unwrap().r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn corr_matrix_duplicate_column() {
        let x = Matrix::from_columns(&[
            vec![1.0, 2.0, 3.0, 5.0],
            vec![1.0, 2.0, 3.0, 5.0],
            vec![4.0, 1.0, 0.0, 2.0],
            vec![7.0, 7.0, 7.0, 7.0],
        ])
        .unwrap();
        let c = corr_matrix(&x, &names(4)).unwrap();
        assert!((c.get(0, 1) - 1.0).abs() < 1e-15);
        assert!((0..4).all(|i| c.get(i, i) == 1.0));
        assert_eq!(c.get(0, 3), 0.0);
        assert!(c.is_symmetric());
    }

    #[test]
    fn redundancy_examples() {
        let x = Matrix::from_columns(&[
            vec![1.0, 2.0, 3.0, 5.0],
            vec![1.0, 2.0, 3.0, 5.0],
            vec![1.0, -1.0, 1.0, -1.0],
        ])
        .unwrap();
        let c = corr_matrix(&x, &names(3)).unwrap();
        assert_eq!(redundancy(&FeatureSubset::from_indices(3, &[0]), &c), 0.0);
        assert!((redundancy(&FeatureSubset::from_indices(3, &[0, 1]), &c) - 0.5).abs() < 1e-15);
        assert_eq!(redundancy(&FeatureSubset::empty(3), &c), 0.0);

        // Exactly orthogonal centered columns.
        let o = Matrix::from_columns(&[
            vec![1.0, -1.0, 1.0, -1.0],
            vec![1.0, 1.0, -1.0, -1.0],
            vec![1.0, -1.0, -1.0, 1.0],
        ])
        .unwrap();
        let co = corr_matrix(&o, &names(3)).unwrap();
        assert_eq!(redundancy(&FeatureSubset::full(3), &co), 0.0);
    }
}
