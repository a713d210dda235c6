//! Independent reference implementations shared by the integration tests
//! and the acceptance suite.
#![allow(dead_code)]

use effort_fs::forest::{fit_tree, predict_tree, TreeNode, TreeParams, SPLIT_TOLERANCE};
use effort_fs::marlfs::agent::training_batch;
use effort_fs::marlfs::{QNetwork, Transition, WeightInit};
use effort_fs::{rng, Matrix};
use rand::Rng;

/// Independent reference tree: at every node try every feature and every
/// midpoint between consecutive distinct values, scoring children by a
/// direct two-pass SSE.
#[derive(Debug)]
pub enum Oracle {
    Leaf(f64),
    Split(usize, f64, Box<Oracle>, Box<Oracle>),
}

pub fn sse(ys: &[f64]) -> f64 {
    let m = ys.iter().sum::<f64>() / ys.len() as f64;
    ys.iter().map(|y| (y - m) * (y - m)).sum()
}

pub fn oracle(rows: &[Vec<f64>], ys: &[f64], depth: usize, max_depth: Option<usize>) -> Oracle {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let pure = ys.iter().all(|&y| y == ys[0]);
    if pure || ys.len() < 2 || max_depth.is_some_and(|d| depth >= d) {
        return Oracle::Leaf(if pure { ys[0] } else { mean });
    }
    let parent = sse(ys);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..rows[0].len() {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = w[0] + (w[1] - w[0]) / 2.0;
            let thr = if thr >= w[1] { w[0] } else { thr };
            let (l, r): (Vec<f64>, Vec<f64>) = {
                let mut l = Vec::new();
                let mut r = Vec::new();
                for (row, &y) in rows.iter().zip(ys) {
                    if row[f] <= thr {
                        l.push(y)
                    } else {
                        r.push(y)
                    }
                }
                (l, r)
            };
            let score = sse(&l) + sse(&r);
            if best.is_none_or(|(_, _, b)| score < b - SPLIT_TOLERANCE * parent) {
                best = Some((f, thr, score));
            }
        }
    }
    let Some((f, thr, _)) = best else {
        return Oracle::Leaf(mean);
    };
    let mut lr = (Vec::new(), Vec::new());
    let mut ly = (Vec::new(), Vec::new());
    for (row, &y) in rows.iter().zip(ys) {
        if row[f] <= thr {
            lr.0.push(row.clone());
            ly.0.push(y);
        } else {
            lr.1.push(row.clone());
            ly.1.push(y);
        }
    }
    Oracle::Split(
        f,
        thr,
        Box::new(oracle(&lr.0, &ly.0, depth + 1, max_depth)),
        Box::new(oracle(&lr.1, &ly.1, depth + 1, max_depth)),
    )
}

pub fn oracle_predict(o: &Oracle, x: &[f64]) -> f64 {
    match o {
        Oracle::Leaf(v) => *v,
        Oracle::Split(f, t, l, r) => {
            if x[*f] <= *t {
                oracle_predict(l, x)
            } else {
                oracle_predict(r, x)
            }
        }
    }
}

pub fn same_structure(t: &TreeNode, o: &Oracle) -> bool {
    match (t, o) {
        (TreeNode::Leaf { prediction, .. }, Oracle::Leaf(v)) => (prediction - v).abs() < 1e-12,
        (
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            },
            Oracle::Split(f, th, l, r),
        ) => feature == f && threshold == th && same_structure(left, l) && same_structure(right, r),
        _ => false,
    }
}

pub fn training_mse(pred: impl Fn(&[f64]) -> f64, rows: &[Vec<f64>], ys: &[f64]) -> f64 {
    rows.iter()
        .zip(ys)
        .map(|(r, y)| (pred(r) - y).powi(2))
        .sum::<f64>()
        / ys.len() as f64
}

/// Fits `cases` random tiny datasets (<= 8 rows, <= 3 features, tied
/// values, random depth limit) and compares against [`oracle`]. Returns the
/// number of cases whose training MSE or structure differ.
pub fn tree_oracle_mismatches(cases: u64, seed: u64) -> Vec<String> {
    let mut r = rng::seeded(seed);
    let mut bad = Vec::new();
    for case in 0..cases {
        let n = r.gen_range(1..=8);
        let p = r.gen_range(1..=3);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| r.gen_range(0..4) as f64).collect())
            .collect();
        let ys: Vec<f64> = (0..n)
            .map(|_| {
                if r.gen_bool(0.5) {
                    r.gen_range(0..5) as f64
                } else {
                    r.gen_range(-3.0..3.0)
                }
            })
            .collect();
        let max_depth = [None, Some(1), Some(2), Some(3)][r.gen_range(0..4)];
        let params = TreeParams {
            max_depth,
            ..Default::default()
        };
        let x = Matrix::from_rows(&rows).unwrap();
        let tree = fit_tree(&x, &ys, &params, &mut rng::seeded(case)).unwrap();
        let o = oracle(&rows, &ys, 0, max_depth);
        let mse_tree = training_mse(|v| predict_tree(&tree, v, p).unwrap(), &rows, &ys);
        let mse_oracle = training_mse(|v| oracle_predict(&o, v), &rows, &ys);
        if (mse_tree - mse_oracle).abs() > 1e-12 * (1.0 + mse_oracle) {
            bad.push(format!("case {case}: mse {mse_tree} vs oracle {mse_oracle}"));
        } else if !same_structure(&tree, &o) {
            bad.push(format!("case {case}: structure differs"));
        }
    }
    bad
}

/// Pearson as the mean product of population z-scores.
pub fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sx = (x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / n).sqrt();
    if sx == 0.0 || sy == 0.0 {
        return 0.0;
    }
    x.iter()
        .zip(y)
        .map(|(a, b)| ((a - mx) / sx) * ((b - my) / sy))
        .sum::<f64>()
        / n
}

/// Average rank by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
    brute_pearson(&brute_ranks(x), &brute_ranks(y))
}

/// Random pair of vectors; every fourth pair uses a coarse grid so ranks tie.
pub fn random_pair(r: &mut rng::Rng, idx: usize) -> (Vec<f64>, Vec<f64>) {
    let n = r.gen_range(3..40);
    if idx % 4 == 0 {
        let x = (0..n).map(|_| r.gen_range(0..5) as f64).collect();
        let y = (0..n).map(|_| r.gen_range(0..5) as f64).collect();
        (x, y)
    } else {
        let scale = 10f64.powi(r.gen_range(-3..4));
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0) * scale).collect();
        let y = x
            .iter()
            .map(|v| r.gen_range(-1.0..1.0) * v + r.gen_range(-1.0..1.0) * scale)
            .collect();
        (x, y)
    }
}

/// Batch loss recomputed from forward passes only.
pub fn forward_loss(net: &QNetwork, batch: &[(Vec<f64>, usize, f64)]) -> f64 {
    batch
        .iter()
        .map(|(s, a, t)| (net.forward(s).unwrap()[*a] - t).powi(2))
        .sum::<f64>()
        / batch.len() as f64
}

/// Maximum relative error between the analytic gradient of a training batch
/// (built from random transitions against a target network) and central
/// differences of [`forward_loss`].
pub fn gradient_check(seed: u64, h: f64) -> f64 {
    let mut r = rng::seeded(seed);
    let input = r.gen_range(2..10);
    let hidden: Vec<usize> = (0..r.gen_range(1..3)).map(|_| r.gen_range(2..12)).collect();
    let sizes: Vec<usize> = std::iter::once(input)
        .chain(hidden)
        .chain(std::iter::once(2))
        .collect();
    let mut online = QNetwork::new(&sizes, WeightInit::GlorotUniform, &mut r).unwrap();
    // Zero biases can leave a pre-activation exactly on the ReLU kink, where
    // the loss has no derivative; check at a generic point instead.
    let generic: Vec<f64> = (0..online.n_params()).map(|_| r.gen_range(-0.5..0.5)).collect();
    online.set_params(&generic).unwrap();
    let target = QNetwork::new(&sizes, WeightInit::GlorotUniform, &mut r).unwrap();
    let transitions: Vec<Transition> = (0..r.gen_range(1..33))
        .map(|_| Transition {
            state: (0..input).map(|_| r.gen_range(-2.0..2.0)).collect(),
            action: r.gen_range(0..2),
            reward: r.gen_range(-30.0..100.0),
            next_state: (0..input).map(|_| r.gen_range(-2.0..2.0)).collect(),
            terminal: r.gen_bool(0.2),
        })
        .collect();
    let refs: Vec<&Transition> = transitions.iter().collect();
    let samples = training_batch(&target, &refs, 0.9).unwrap();
    let owned: Vec<(Vec<f64>, usize, f64)> = samples
        .iter()
        .map(|s| (s.state.to_vec(), s.action, s.target))
        .collect();
    let (loss, grads) = online.loss_and_gradient(&samples).unwrap();
    assert!((loss - forward_loss(&online, &owned)).abs() <= 1e-9 * loss.max(1.0));

    // Central differences carry roundoff of order eps * loss / h, so
    // gradients below a loss-scaled floor are compared absolutely.
    let floor = (1e-11 * loss / h).max(1e-6);
    let params = online.params();
    let mut probe = online.clone();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut p = params.clone();
        p[i] = params[i] + h;
        probe.set_params(&p).unwrap();
        let up = forward_loss(&probe, &owned);
        p[i] = params[i] - h;
        probe.set_params(&p).unwrap();
        let down = forward_loss(&probe, &owned);
        let fd = (up - down) / (2.0 * h);
        let denom = grads[i].abs().max(fd.abs()).max(floor);
        worst = worst.max((grads[i] - fd).abs() / denom);
    }
    worst
}
