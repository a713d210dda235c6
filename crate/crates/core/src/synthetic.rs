//! Synthetic regression tables with a known set of relevant features.

use rand_distr::{Distribution, StandardNormal};

use crate::dataset::DataTable;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// `y = Σ coef_i * x_i + noise` over the first `coefficients.len()`
/// columns; the remaining columns are independent standard normal noise.
/// Features are named `x1..xp`.
pub fn planted_linear(
    n_rows: usize,
    n_features: usize,
    coefficients: &[f64],
    noise_sd: f64,
    seed: u64,
) -> Result<DataTable> {
    if coefficients.len() > n_features {
        return Err(Error::InvalidParameter(
            "more coefficients than features".into(),
        ));
    }
    let mut r = rng::seeded(seed);
    let mut x = Matrix::zeros(n_rows, n_features);
    let mut y = Vec::with_capacity(n_rows);
    for i in 0..n_rows {
        for j in 0..n_features {
            x.set(i, j, StandardNormal.sample(&mut r));
        }
        let signal: f64 = coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c * x.get(i, j))
            .sum();
        let eps: f64 = StandardNormal.sample(&mut r);
        y.push(signal + noise_sd * eps);
    }
    let names = (1..=n_features).map(|j| format!("x{j}")).collect();
    DataTable::new(names, x, y, None)
}
