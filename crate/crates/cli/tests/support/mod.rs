//! Fixtures for the CLI tests: a small effort table and a fast config.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use effort_fs::forest::ForestParams;
use effort_fs::marlfs::MarlfsConfig;
use effort_fs_cli::RunConfig;
use rand::Rng;
use rand::SeedableRng;

/// 60 projects, a few sentinel and blank cells, one unusable column and
/// one unusable row. The label depends on `team` and `complexity`.
pub fn effort_csv() -> String {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut s = String::from(
        "ProjID,Actual duration,Estimated duration,Estimated cost,Actual cost,Team size,\
         Product complexity,Outsourcing impact,Object points,Team contracts,Developer training,\
         Degree of software reuse,Noise A,Noise B\n",
    );
    for i in 0..60 {
        let team: u32 = r.gen_range(2..20);
        let cx: u32 = r.gen_range(1..6);
        let dur = 1.5 * team as f64 + 2.0 * cx as f64 + r.gen_range(-1.0..1.0);
        if i == 30 {
            writeln!(s, "{i},{dur:.2},?,?,?,?,?,?,?,?,?,1,1,1").unwrap();
            continue;
        }
        let outsourcing = if i % 4 == 0 { "?".into() } else { r.gen_range(1..4).to_string() };
        let cx_cell = if i == 9 { "Not exist".into() } else { cx.to_string() };
        writeln!(
            s,
            "{i},{dur:.2},{:.1},{},{},{team},{cx_cell},{outsourcing},{},{},{},{},{:.3},{:.3}",
            dur + r.gen_range(-4.0..4.0),
            r.gen_range(1000..9000),
            r.gen_range(1000..9000),
            r.gen_range(10..500),
            r.gen_range(0..3),
            r.gen_range(0..3),
            r.gen_range(1..5),
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
        )
        .unwrap();
    }
    s
}

/// Writes [`effort_csv`] into `dir` and returns a config that runs every
/// method in well under a second.
pub fn fast_config(dir: &Path) -> RunConfig {
    let input = dir.join("effort.csv");
    std::fs::write(&input, effort_csv()).unwrap();
    let forest = ForestParams {
        n_trees: 10,
        ..Default::default()
    };
    let mut cfg = RunConfig {
        input,
        out_dir: dir.join("out"),
        forest: forest.clone(),
        marlfs: MarlfsConfig {
            episodes: 3,
            steps_per_episode: 8,
            batch_size: 8,
            forest,
            ..Default::default()
        },
        ..Default::default()
    };
    cfg.baselines.rfe_k = vec![2, 4, 6];
    cfg
}
