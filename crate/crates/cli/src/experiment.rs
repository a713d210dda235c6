use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use effort_fs::baselines::{self, OverfitProbe, RfeRank};
use effort_fs::dataset::{
    self, drop_constant_features, spearman_ranking, split, standardize, DataTable,
    PreprocessReport, Preprocessed, SpearmanEntry,
};
use effort_fs::marlfs::{self, SelectionResult};
use effort_fs::reward::transform_curves;
use effort_fs::FeatureSubset;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Method, RunConfig};
use crate::output;

/// Cleaned table plus the train/validation split used by every method.
pub struct Prepared {
    pub pre: Preprocessed,
    /// Training rows before standardization (the Filter's input).
    pub train_raw: DataTable,
    pub train: DataTable,
    pub val: DataTable,
    pub constant_features_dropped: Vec<String>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let pre = dataset::preprocess(&cfg.input, &cfg.preprocess)
        .with_context(|| format!("preprocessing {}", cfg.input.display()))?;
    let (tr, va) = split(&pre.table, cfg.split.train_fraction, cfg.split.seed)?;
    let (train_raw, val_raw, constant_features_dropped) = drop_constant_features(&tr, &va);
    if !constant_features_dropped.is_empty() {
        log::warn!("constant on the training rows, dropped: {constant_features_dropped:?}");
    }
    let (train, val, _) = standardize(&train_raw, &val_raw)?;
    Ok(Prepared {
        pre,
        train_raw,
        train,
        val,
        constant_features_dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub split: u64,
    pub forest: u64,
    pub marlfs: u64,
    pub marlfs_cv: u64,
    pub marlfs_forest: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train_rows: usize,
    pub validation_rows: usize,
    /// Source line numbers of the validation rows.
    pub validation_row_ids: Vec<usize>,
    pub constant_features_dropped: Vec<String>,
    pub features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// Selected features; `None` for the expert estimate.
    pub features: Option<Vec<String>>,
    pub mse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeSummary {
    pub k: usize,
    pub rounds: usize,
    pub ranking: Vec<RfeRank>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarlfsSummary {
    pub best_features: Vec<String>,
    pub best_cv_mse: f64,
    pub best_found_at: (usize, usize),
    pub distinct_subsets_evaluated: usize,
    pub cv_seed: u64,
    pub forest_seed: u64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub input: String,
    pub input_sha256: String,
    pub seeds: Seeds,
    pub preprocess: PreprocessReport,
    pub split: SplitSummary,
    pub methods: Vec<MethodResult>,
    pub filter_probe: Option<OverfitProbe>,
    pub spearman_top: Vec<SpearmanEntry>,
    pub rfe: Vec<RfeSummary>,
    pub marlfs: Option<MarlfsSummary>,
}

impl ExperimentReport {
    pub fn method(&self, label: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == label)
    }
}

/// Everything `cmd_run` computes, before it is written out.
pub struct RunOutput {
    pub report: ExperimentReport,
    pub marlfs: Option<SelectionResult>,
    pub spearman: Vec<SpearmanEntry>,
    pub feature_names: Vec<String>,
}

fn names(subset: &FeatureSubset, t: &DataTable) -> Vec<String> {
    subset.names(&t.feature_names).into_iter().map(String::from).collect()
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Runs every configured method on one split.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutput> {
    let methods = cfg.resolved_methods()?;
    if methods.is_empty() {
        bail!("no methods selected");
    }
    let p = prepare(cfg)?;
    let (train, val) = (&p.train, &p.val);
    let spearman = spearman_ranking(&p.pre.table)?;

    let mut results = Vec::new();
    let mut filter_probe = None;
    let mut rfe = Vec::new();
    let mut selection = None;
    for &method in &methods {
        let label = method.label();
        log::info!("running {label}");
        let res = match method {
            Method::Expert => {
                let (mse, mae) = baselines::expert_metrics(val)?;
                MethodResult {
                    method: label.clone(),
                    features: None,
                    mse,
                    mae,
                }
            }
            Method::RawRf => {
                let all = FeatureSubset::full(train.n_features());
                let (mse, mae) = marlfs::evaluate_subset(train, val, &all, &cfg.forest)?;
                MethodResult {
                    method: label.clone(),
                    features: Some(names(&all, train)),
                    mse,
                    mae,
                }
            }
            Method::Filter => {
                let subset = baselines::variance_filter(&p.train_raw.x, cfg.baselines.filter_threshold)?;
                let probe = baselines::filter_overfit_probe(train, val, &subset, &cfg.forest)?;
                filter_probe = Some(probe);
                MethodResult {
                    method: label.clone(),
                    features: Some(names(&subset, train)),
                    mse: probe.val_mse,
                    mae: probe.val_mae,
                }
            }
            Method::Wrapper(k) => {
                let r = baselines::rfe(train, k, cfg.baselines.rfe_step, &cfg.forest)
                    .with_context(|| format!("{label} failed"))?;
                let (mse, mae) = marlfs::evaluate_subset(train, val, &r.selected, &cfg.forest)?;
                rfe.push(RfeSummary {
                    k,
                    rounds: r.rounds,
                    ranking: r.ranking,
                });
                MethodResult {
                    method: label.clone(),
                    features: Some(names(&r.selected, train)),
                    mse,
                    mae,
                }
            }
            Method::Marlfs => {
                let s = marlfs::run_marlfs(train, val, &cfg.marlfs)?;
                let res = MethodResult {
                    method: label.clone(),
                    features: Some(names(&s.best_subset, train)),
                    mse: s.validation_mse,
                    mae: s.validation_mae,
                };
                selection = Some(s);
                res
            }
        };
        log::info!("{label}: mse {} mae {}", res.mse, res.mae);
        results.push(res);
    }

    let marlfs_summary = selection.as_ref().map(|s| MarlfsSummary {
        best_features: names(&s.best_subset, train),
        best_cv_mse: s.best_cv_mse,
        best_found_at: s.best_found_at,
        distinct_subsets_evaluated: s.distinct_subsets_evaluated,
        cv_seed: s.cv_seed,
        forest_seed: s.forest_seed,
        steps: s.trace.len(),
    });
    let top_k = cfg.baselines.spearman_top_k.min(spearman.len());
    let report = ExperimentReport {
        config_hash: cfg.hash(),
        input: cfg.input.display().to_string(),
        input_sha256: file_sha256(&cfg.input)?,
        seeds: Seeds {
            split: cfg.split.seed,
            forest: cfg.forest.seed,
            marlfs: cfg.marlfs.seed,
            marlfs_cv: cfg.marlfs.cv_seed,
            marlfs_forest: cfg.marlfs.forest.seed,
        },
        preprocess: p.pre.report.clone(),
        split: SplitSummary {
            train_rows: train.n_rows(),
            validation_rows: val.n_rows(),
            validation_row_ids: val.row_ids.clone(),
            constant_features_dropped: p.constant_features_dropped.clone(),
            features: train.n_features(),
        },
        methods: results,
        filter_probe,
        spearman_top: spearman[..top_k].to_vec(),
        rfe,
        marlfs: marlfs_summary,
    };
    Ok(RunOutput {
        report,
        marlfs: selection,
        spearman,
        feature_names: train.feature_names.clone(),
    })
}

pub fn cmd_preprocess(cfg: &RunConfig, out: &Path) -> Result<PreprocessReport> {
    let pre = dataset::preprocess(&cfg.input, &cfg.preprocess)
        .with_context(|| format!("preprocessing {}", cfg.input.display()))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    output::write_cleaned(&out.join("cleaned.csv"), &pre.table, &cfg.preprocess)?;
    output::write_json(&out.join("preprocess_report.json"), &pre.report)?;
    output::write_spearman(&out.join("spearman.csv"), &spearman_ranking(&pre.table)?)?;
    Ok(pre.report)
}

pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<ExperimentReport> {
    let run = run_experiment(cfg)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    output::write_run(out, cfg, &run)?;
    Ok(run.report)
}

pub fn cmd_curves(cfg: &RunConfig, out: &Path) -> Result<usize> {
    let c = &cfg.curves;
    if c.points_per_unit == 0 || !(c.x_max >= 0.0) {
        bail!("curve grid needs points_per_unit > 0 and x_max >= 0");
    }
    let n = (c.x_max * c.points_per_unit as f64).round() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / c.points_per_unit as f64).collect();
    let points = transform_curves(&xs, c.k);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    output::write_curves(&out.join("curves.csv"), &points)?;
    Ok(points.len())
}

/// Recomputes every reported metric from the persisted feature lists and
/// seeds. Returns one message per disagreement.
pub fn audit(cfg: &RunConfig, report: &ExperimentReport) -> Result<Vec<String>> {
    let p = prepare(cfg)?;
    let mut problems = Vec::new();
    for m in &report.methods {
        let (mse, mae) = match &m.features {
            None => baselines::expert_metrics(&p.val)?,
            Some(features) => {
                let idx = features
                    .iter()
                    .map(|f| {
                        p.train
                            .feature_index(f)
                            .with_context(|| format!("{}: unknown feature '{f}'", m.method))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let subset = FeatureSubset::from_indices(p.train.n_features(), &idx);
                let params = if m.method == "MARLFS" {
                    &cfg.marlfs.forest
                } else {
                    &cfg.forest
                };
                marlfs::evaluate_subset(&p.train, &p.val, &subset, params)?
            }
        };
        if (mse, mae) != (m.mse, m.mae) {
            problems.push(format!(
                "{}: reported ({}, {}), recomputed ({mse}, {mae})",
                m.method, m.mse, m.mae
            ));
        }
    }
    if let Some(s) = &report.marlfs {
        let idx: Vec<usize> = s
            .best_features
            .iter()
            .filter_map(|f| p.train.feature_index(f))
            .collect();
        let subset = FeatureSubset::from_indices(p.train.n_features(), &idx);
        let cv = marlfs::subset_cv_mse(&p.train, &subset, &cfg.marlfs)?;
        if cv != s.best_cv_mse {
            problems.push(format!(
                "MARLFS cv mse: reported {}, recomputed {cv}",
                s.best_cv_mse
            ));
        }
    }
    Ok(problems)
}
