use effort_fs::baselines::{expert_metrics, filter_overfit_probe, rfe, variance_filter};
use effort_fs::dataset::{split, standardize, DataTable};
use effort_fs::forest::ForestParams;
use effort_fs::synthetic::planted_linear;
use effort_fs::{rng, FeatureSubset, Matrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn planted(seed: u64) -> DataTable {
    let t = planted_linear(120, 20, &[3.0, -2.0, 1.0], 0.1, seed).unwrap();
    let (tr, va) = split(&t, 0.8, seed).unwrap();
    standardize(&tr, &va).unwrap().0
}

#[test]
fn rfe_recovers_planted_features() {
    let params = ForestParams {
        n_trees: 50,
        ..Default::default()
    };
    let mut hits = 0;
    for seed in 0..3 {
        let r = rfe(&planted(seed), 3, 1, &params).unwrap();
        assert_eq!(r.rounds, 17);
        assert_eq!(r.ranking.iter().filter(|k| k.rank == 1).count(), 3);
        let mut ranks: Vec<usize> = r.ranking.iter().map(|k| k.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks[3..], (2..=18).collect::<Vec<_>>()[..]);
        hits += usize::from(r.selected.indices() == [0, 1, 2]);
    }
    assert!(hits >= 2, "{hits}/3");
}

#[test]
fn rfe_step_larger_than_one() {
    let r = rfe(&planted(0), 4, 5, &ForestParams { n_trees: 20, ..Default::default() }).unwrap();
    // 20 -> 15 -> 10 -> 5 -> 4
    assert_eq!(r.rounds, 4);
    assert_eq!(r.selected.cardinality(), 4);
    assert_eq!(r.ranking.iter().filter(|k| k.eliminated_in == Some(4)).count(), 1);
}

#[test]
fn overfit_probe_on_noiseless_data() {
    let t = planted_linear(100, 5, &[1.0, 1.0], 0.0, 3).unwrap();
    let (tr, va) = split(&t, 0.8, 3).unwrap();
    let p = filter_overfit_probe(&tr, &va, &FeatureSubset::full(5), &ForestParams::default()).unwrap();
    assert!(p.train_mse < p.val_mse);
    assert!(p.gap_ratio() > 1.0);
    assert!(filter_overfit_probe(&tr, &va, &FeatureSubset::empty(5), &ForestParams::default()).is_err());
}

#[test]
fn expert_metrics_ignore_training_rows() {
    let t = planted_linear(30, 2, &[1.0], 0.5, 4).unwrap();
    let est: Vec<f64> = t.y.iter().map(|v| v + 1.0).collect();
    let t = DataTable {
        expert_estimate: Some(est),
        ..t
    };
    let (tr, va) = split(&t, 0.5, 1).unwrap();
    let m = expert_metrics(&va).unwrap();
    assert!((m.0 - 1.0).abs() < 1e-12 && (m.1 - 1.0).abs() < 1e-12);
    // rewrite labels and estimates of the training rows only
    let mut changed = t.clone();
    for &i in &tr.row_ids {
        changed.y[i] *= 10.0;
        changed.expert_estimate.as_mut().unwrap()[i] = -5.0;
    }
    let (tr2, va2) = split(&changed, 0.5, 1).unwrap();
    assert_ne!(tr2.y, tr.y);
    assert_eq!(expert_metrics(&va2).unwrap(), m);
}

proptest! {
    #[test]
    fn filter_commutes_with_column_permutation(seed in any::<u64>(), threshold in 0.0..3.0f64) {
        let mut r = rng::seeded(seed);
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|j| (0..10).map(|i| ((i * (j + 1)) % 7) as f64 * 0.3 * j as f64).collect())
            .collect();
        let mut perm: Vec<usize> = (0..6).collect();
        perm.shuffle(&mut r);
        let x = Matrix::from_columns(&cols).unwrap();
        let xp = x.select_columns(&perm);
        match (variance_filter(&x, threshold), variance_filter(&xp, threshold)) {
            (Ok(a), Ok(b)) => {
                for (pos, &orig) in perm.iter().enumerate() {
                    prop_assert_eq!(b.contains(pos), a.contains(orig));
                }
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "filter disagreed on emptiness"),
        }
    }
}
