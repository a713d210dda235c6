//! MSE-to-reward transforms and the accuracy/redundancy reward.
//!
//! Two candidates map an MSE in `[0, inf)` onto `(0, 1]`: `2(1 - sigmoid(x))`
//! and `exp(-k x)`. The reward uses the exponential one:
//!
//! ```text
//! reward = scale * (alpha * exp(-k * mse) - beta * rbar)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    pub alpha: f64,
    pub beta: f64,
    pub k_decay: f64,
    pub scale: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            alpha: 1.0,
            beta: 0.3,
            k_decay: 0.01,
            scale: 100.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_decay > 0.0) {
            return Err(Error::InvalidParameter("k_decay must be positive".into()));
        }
        if !(self.scale > 0.0) {
            return Err(Error::InvalidParameter("reward scale must be positive".into()));
        }
        Ok(())
    }

    /// Reward assigned when no feature is selected.
    pub fn empty_subset_penalty(&self) -> f64 {
        -self.scale * self.beta
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `2 (1 - sigmoid(x))`, evaluated as `2 sigmoid(-x)` to avoid cancellation.
pub fn transform_sigmoid2(x: f64) -> f64 {
    2.0 * sigmoid(-x)
}

/// `exp(-k x)`
pub fn transform_exp(x: f64, k: f64) -> f64 {
    (-k * x).exp()
}

pub fn d_sigmoid2(x: f64) -> f64 {
    -2.0 * sigmoid(x) * sigmoid(-x)
}

pub fn d_exp(x: f64, k: f64) -> f64 {
    -k * (-k * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub sigmoid2: f64,
    pub exp: f64,
    pub d_sigmoid2: f64,
    pub d_exp: f64,
}

/// Both transforms and their analytic derivatives on `xs`.
pub fn transform_curves(xs: &[f64], k: f64) -> Vec<CurvePoint> {
    xs.iter()
        .map(|&x| CurvePoint {
            x,
            sigmoid2: transform_sigmoid2(x),
            exp: transform_exp(x, k),
            d_sigmoid2: d_sigmoid2(x),
            d_exp: d_exp(x, k),
        })
        .collect()
}

/// Evenly spaced grid `start, start + step, ..` with `n` points.
pub fn grid(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + step * i as f64).collect()
}

pub fn compute_reward(mse: f64, rbar: f64, p: &RewardParams) -> f64 {
    p.scale * (p.alpha * transform_exp(mse, p.k_decay) - p.beta * rbar)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.367_879_441_171_442_3;

    #[test]
    fn transform_values() {
        assert_eq!(transform_sigmoid2(0.0), 1.0);
        assert!(transform_sigmoid2(800.0) < 1e-300);
        assert!((transform_sigmoid2(1.0) - 0.537_882_842_739_990_2).abs() < 1e-12);
        assert_eq!(transform_exp(0.0, 3.0), 1.0);
        assert!((transform_exp(1.0, 1.0) - E_INV).abs() < 1e-15);
        assert!((transform_exp(100.0, 0.01) - E_INV).abs() < 1e-15);
    }

    #[test]
    fn derivatives_at_zero() {
        let c = transform_curves(&[0.0], 1.0);
        assert_eq!(c[0].d_sigmoid2, -0.5);
        assert_eq!(c[0].d_exp, -1.0);
        assert_eq!((c[0].sigmoid2, c[0].exp), (1.0, 1.0));
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-5;
        for k in [1.0, 0.01, 0.3] {
            for p in transform_curves(&grid(0.0, 0.25, 41), k) {
                let fd1 = (transform_sigmoid2(p.x + h) - transform_sigmoid2(p.x - h)) / (2.0 * h);
                let fd2 = (transform_exp(p.x + h, k) - transform_exp(p.x - h, k)) / (2.0 * h);
                assert!((fd1 - p.d_sigmoid2).abs() < 1e-6);
                assert!((fd2 - p.d_exp).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn exp_gradient_dominates_for_large_x() {
        // With the configured decay the exponential's slope is the larger one
        // once 0.99 x > ln(200), i.e. x > 5.35.
        for x in grid(5.5, 0.5, 90) {
            assert!(d_exp(x, 0.01).abs() > d_sigmoid2(x).abs(), "x = {x}");
        }
        // Without decay the sigmoid candidate's slope is ~2e^-x, twice the
        // exponential's, so the comparison flips.
        for x in grid(5.0, 0.5, 91) {
            assert!(d_exp(x, 1.0).abs() < d_sigmoid2(x).abs(), "x = {x}");
        }
    }

    #[test]
    fn reward_examples() {
        let p = RewardParams::default();
        assert_eq!(compute_reward(0.0, 0.0, &p), 100.0);
        assert!((compute_reward(100.0, 0.5, &p) - 100.0 * (E_INV - 0.15)).abs() < 1e-12);
        assert!((compute_reward(100.0, 0.5, &p) - 21.7879).abs() < 1e-4);
        assert!((compute_reward(1e9, 1.0, &p) + 30.0).abs() < 1e-12);
        assert_eq!(p.empty_subset_penalty(), -30.0);
    }

    #[test]
    fn validation() {
        assert!(RewardParams::default().validate().is_ok());
        let bad = RewardParams {
            k_decay: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
