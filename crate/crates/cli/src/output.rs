//! CSV and JSON writers. Floats use Rust's shortest round-trip formatting,
//! so identical runs give identical bytes.

use std::fs::{self, File};
use std::path::Path;

use anyhow::{Context, Result};
use effort_fs::dataset::{DataTable, PreprocessConfig, SpearmanEntry};
use effort_fs::reward::CurvePoint;
use serde::Serialize;

use crate::config::RunConfig;
use crate::experiment::RunOutput;

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_cleaned(path: &Path, t: &DataTable, cfg: &PreprocessConfig) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["row_id".to_string()];
    header.extend(t.feature_names.iter().cloned());
    header.push(cfg.label.clone());
    if let (Some(_), Some(name)) = (&t.expert_estimate, &cfg.expert_column) {
        header.push(name.clone());
    }
    w.write_record(&header)?;
    for i in 0..t.n_rows() {
        let mut rec = vec![t.row_ids[i].to_string()];
        rec.extend(t.x.row(i).iter().map(f64::to_string));
        rec.push(t.y[i].to_string());
        if let Some(e) = &t.expert_estimate {
            rec.push(e[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spearman(path: &Path, entries: &[SpearmanEntry]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["rank", "feature", "rho", "abs_rho"])?;
    for (i, e) in entries.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            e.feature.clone(),
            e.rho.to_string(),
            e.abs_rho.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x", "sigmoid2", "exp", "d_sigmoid2", "d_exp"])?;
    for p in points {
        w.write_record([p.x, p.sigmoid2, p.exp, p.d_sigmoid2, p.d_exp].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the metrics table, Filter probe, feature comparison, RFE
/// ranking, MARLFS trace and the JSON report.
pub fn write_run(out: &Path, cfg: &RunConfig, run: &RunOutput) -> Result<()> {
    let report = &run.report;

    let mut w = writer(&out.join("metrics.csv"))?;
    let mut header = vec!["metric".to_string()];
    header.extend(report.methods.iter().map(|m| m.method.clone()));
    w.write_record(&header)?;
    let mut mse = vec!["MSE".to_string()];
    mse.extend(report.methods.iter().map(|m| m.mse.to_string()));
    w.write_record(&mse)?;
    let mut mae = vec!["MAE".to_string()];
    mae.extend(report.methods.iter().map(|m| m.mae.to_string()));
    w.write_record(&mae)?;
    w.flush()?;

    if let Some(p) = &report.filter_probe {
        let mut w = writer(&out.join("filter_probe.csv"))?;
        w.write_record(["metric", "Filter", "Filter-train"])?;
        w.write_record(["MSE".to_string(), p.val_mse.to_string(), p.train_mse.to_string()])?;
        w.write_record(["MAE".to_string(), p.val_mae.to_string(), p.train_mae.to_string()])?;
        w.flush()?;
    }

    // Membership of every feature in each method's subset.
    let selected: Vec<(&str, &Vec<String>)> = report
        .methods
        .iter()
        .filter_map(|m| m.features.as_ref().map(|f| (m.method.as_str(), f)))
        .collect();
    let top: Vec<&str> = report.spearman_top.iter().map(|e| e.feature.as_str()).collect();
    let mut w = writer(&out.join("features.csv"))?;
    let mut header = vec!["feature".to_string(), "spearman_rho".to_string(), "spearman_top".to_string()];
    header.extend(selected.iter().map(|(m, _)| m.to_string()));
    w.write_record(&header)?;
    for f in &run.feature_names {
        let rho = run
            .spearman
            .iter()
            .find(|e| &e.feature == f)
            .map(|e| e.rho);
        let mut rec = vec![f.clone(), opt(rho), u8::from(top.contains(&f.as_str())).to_string()];
        rec.extend(selected.iter().map(|(_, s)| u8::from(s.contains(f)).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;

    if let Some(s) = &report.marlfs {
        let mut w = writer(&out.join("marlfs_vs_spearman.csv"))?;
        w.write_record(["sequence", "marlfs_feature", "spearman_feature"])?;
        for (i, f) in s.best_features.iter().enumerate() {
            let matched = if top.contains(&f.as_str()) { f.as_str() } else { "-" };
            w.write_record([(i + 1).to_string(), f.clone(), matched.to_string()])?;
        }
        w.flush()?;
        fs::write(out.join("marlfs_subset.txt"), s.best_features.join("\n") + "\n")?;
    }

    if !report.rfe.is_empty() {
        let mut w = writer(&out.join("rfe_ranking.csv"))?;
        let mut header = vec!["feature".to_string()];
        header.extend(report.rfe.iter().map(|r| format!("rank_k{}", r.k)));
        w.write_record(&header)?;
        for (i, f) in run.feature_names.iter().enumerate() {
            let mut rec = vec![f.clone()];
            rec.extend(report.rfe.iter().map(|r| r.ranking[i].rank.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }

    if let Some(sel) = &run.marlfs {
        let mut w = writer(&out.join("marlfs_trace.csv"))?;
        w.write_record(["episode", "step", "reward", "mse_cv", "subset_size", "mean_loss"])?;
        for r in &sel.trace {
            w.write_record([
                r.episode.to_string(),
                r.step.to_string(),
                r.reward.to_string(),
                opt(r.mse_cv),
                r.subset_size.to_string(),
                opt(r.mean_loss),
            ])?;
        }
        w.flush()?;
    }

    fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    write_json(&out.join("report.json"), report)
}
