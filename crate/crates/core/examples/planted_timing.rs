use std::time::Instant;

use effort_fs::dataset::{split, standardize};
use effort_fs::marlfs::{run_marlfs, MarlfsConfig};
use effort_fs::synthetic::planted_linear;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let data = planted_linear(120, 20, &[3.0, -2.0, 1.0], 0.1, seed).unwrap();
    let (tr, va) = split(&data, 0.8, seed).unwrap();
    let (tr, va, _) = standardize(&tr, &va).unwrap();
    let episodes: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(100);
    let cfg = MarlfsConfig {
        seed,
        episodes,
        ..Default::default()
    };
    let t = Instant::now();
    let res = run_marlfs(&tr, &va, &cfg).unwrap();
    println!(
        "seed {seed}: best {:?} cv {:.4} val {:.4} evals {} at {:?} in {:.1}s",
        res.best_subset.indices(),
        res.best_cv_mse,
        res.validation_mse,
        res.distinct_subsets_evaluated,
        res.best_found_at,
        t.elapsed().as_secs_f64()
    );
}
