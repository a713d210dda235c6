//! Effort dataset ingestion and preprocessing.
//!
//! The pipeline is: [`load_raw`] → [`clean_sentinels`] → [`drop_sparse`] →
//! [`impute`] → [`select_label_and_features`] → [`split`] →
//! [`standardize`]. [`preprocess`] runs the first five steps and collects
//! a [`PreprocessReport`].
//!
//! Column names are matched case-insensitively with runs of whitespace
//! collapsed, so configuration does not need to reproduce the exact
//! spacing of a CSV header.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::stats;
use crate::subset::FeatureSubset;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
    Missing,
}

impl Cell {
    fn parse(raw: &str) -> Cell {
        let s = raw.trim();
        if s.is_empty() {
            return Cell::Missing;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Number(v),
            _ => Cell::Text(s.to_string()),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// Lower-cased, whitespace-collapsed form used for column lookups.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Rectangular grid of raw cells. `row_ids` holds the source line number of
/// each row (the header is line 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub column_names: Vec<String>,
    pub row_ids: Vec<usize>,
    pub cells: Vec<Vec<Cell>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn missing_count(&self, col: usize) -> usize {
        self.cells.iter().filter(|r| r[col].is_missing()).count()
    }

    pub fn total_missing(&self) -> usize {
        self.cells
            .iter()
            .map(|r| r.iter().filter(|c| c.is_missing()).count())
            .sum()
    }
}

pub fn load_raw(path: impl AsRef<Path>, delimiter: char) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_raw(file, delimiter)
}

pub fn parse_raw<R: Read>(reader: R, delimiter: char) -> Result<RawTable> {
    if !delimiter.is_ascii() {
        return Err(Error::InvalidParameter(format!(
            "delimiter '{delimiter}' is not ASCII"
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        row: 1,
        message: e.to_string(),
    })?;
    let column_names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for name in &column_names {
        if !seen.insert(normalize_name(name)) {
            return Err(Error::Schema(format!("duplicate column name '{name}'")));
        }
    }

    let mut cells = Vec::new();
    let mut row_ids = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != column_names.len() {
            return Err(Error::Parse {
                row: line,
                message: format!(
                    "expected {} fields, found {}",
                    column_names.len(),
                    record.len()
                ),
            });
        }
        cells.push(record.iter().map(Cell::parse).collect());
        row_ids.push(line);
    }
    Ok(RawTable {
        column_names,
        row_ids,
        cells,
    })
}

/// Replaces every text cell equal (after trimming) to a sentinel by a missing cell.
pub fn clean_sentinels(mut t: RawTable, sentinels: &[String]) -> RawTable {
    let set: HashSet<&str> = sentinels.iter().map(|s| s.trim()).collect();
    for row in &mut t.cells {
        for cell in row.iter_mut() {
            if let Cell::Text(s) = cell {
                if set.contains(s.as_str()) {
                    *cell = Cell::Missing;
                }
            }
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub name: String,
    pub missing_count: usize,
    pub missing_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    pub dropped_columns: Vec<DroppedColumn>,
    /// Source line numbers of dropped rows.
    pub dropped_rows: Vec<usize>,
}

/// Drops columns whose missing fraction is `>= col_ratio`, then rows whose
/// missing fraction over the remaining columns is `> row_ratio`.
pub fn drop_sparse(t: RawTable, col_ratio: f64, row_ratio: f64) -> Result<(RawTable, DropReport)> {
    for (name, r) in [("col_ratio", col_ratio), ("row_ratio", row_ratio)] {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParameter(format!("{name} = {r} outside (0, 1]")));
        }
    }
    if t.n_rows() == 0 {
        return Err(Error::Degenerate("table has no rows".into()));
    }
    let n = t.n_rows() as f64;
    let mut report = DropReport::default();
    let mut keep_cols = Vec::new();
    for c in 0..t.n_cols() {
        let missing = t.missing_count(c);
        let fraction = missing as f64 / n;
        if fraction >= col_ratio {
            report.dropped_columns.push(DroppedColumn {
                name: t.column_names[c].clone(),
                missing_count: missing,
                missing_fraction: fraction,
            });
        } else {
            keep_cols.push(c);
        }
    }
    if keep_cols.is_empty() {
        return Err(Error::Degenerate(
            "every column exceeds the missing-value ratio".into(),
        ));
    }

    let n_kept = keep_cols.len() as f64;
    let mut cells = Vec::new();
    let mut row_ids = Vec::new();
    for (row, &id) in t.cells.into_iter().zip(&t.row_ids) {
        let missing = keep_cols.iter().filter(|&&c| row[c].is_missing()).count();
        if missing as f64 / n_kept > row_ratio {
            report.dropped_rows.push(id);
            continue;
        }
        let mut row = row;
        let kept: Vec<Cell> = keep_cols
            .iter()
            .map(|&c| std::mem::replace(&mut row[c], Cell::Missing))
            .collect();
        cells.push(kept);
        row_ids.push(id);
    }
    if cells.is_empty() {
        return Err(Error::Degenerate(
            "every row exceeds the missing-value ratio".into(),
        ));
    }
    let column_names = keep_cols.iter().map(|&c| t.column_names[c].clone()).collect();
    Ok((
        RawTable {
            column_names,
            row_ids,
            cells,
        },
        report,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputeStrategy {
    Mode,
    Mean,
    Median,
}

impl ImputeStrategy {
    /// Fill value from the observed (non-missing) values of a column.
    pub fn fill_value(self, observed: &[f64]) -> f64 {
        match self {
            ImputeStrategy::Mean => stats::mean(observed),
            ImputeStrategy::Median => stats::median(observed),
            ImputeStrategy::Mode => mode(observed),
        }
    }
}

/// Most frequent value; ties go to the smallest value.
pub fn mode(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = sorted[0];
    let mut best_count = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > best_count {
            best_count = j - i;
            best = sorted[i];
        }
        i = j;
    }
    best
}

/// Per-column imputation strategies keyed by column name, with an optional
/// strategy for columns the map does not mention.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputationPlan {
    pub columns: BTreeMap<String, ImputeStrategy>,
    pub fallback: Option<ImputeStrategy>,
}

impl ImputationPlan {
    pub fn strategy_for(&self, column: &str) -> Option<(ImputeStrategy, bool)> {
        let key = normalize_name(column);
        self.columns
            .iter()
            .find(|(name, _)| normalize_name(name) == key)
            .map(|(_, &s)| (s, false))
            .or(self.fallback.map(|s| (s, true)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationRecord {
    pub column: String,
    pub strategy: ImputeStrategy,
    pub from_fallback: bool,
    pub missing_count: usize,
    pub fill_value: f64,
}

/// Fully numeric table produced by [`impute`].
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub column_names: Vec<String>,
    pub row_ids: Vec<usize>,
    pub values: Matrix,
}

impl NumericTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        let key = normalize_name(name);
        self.column_names.iter().position(|c| normalize_name(c) == key)
    }
}

pub fn impute(t: &RawTable, plan: &ImputationPlan) -> Result<(NumericTable, Vec<ImputationRecord>)> {
    let mut values = Matrix::zeros(t.n_rows(), t.n_cols());
    let mut log = Vec::new();
    for c in 0..t.n_cols() {
        let name = &t.column_names[c];
        let mut observed = Vec::with_capacity(t.n_rows());
        for (r, row) in t.cells.iter().enumerate() {
            match &row[c] {
                Cell::Number(v) => observed.push(*v),
                Cell::Missing => {}
                Cell::Text(s) => {
                    return Err(Error::NonNumeric {
                        column: name.clone(),
                        row: t.row_ids[r],
                        value: s.clone(),
                    })
                }
            }
        }
        let missing = t.n_rows() - observed.len();
        let fill = if missing > 0 {
            let (strategy, from_fallback) = plan.strategy_for(name).ok_or_else(|| {
                Error::Schema(format!(
                    "column '{name}' has {missing} missing values but no imputation strategy"
                ))
            })?;
            if observed.is_empty() {
                return Err(Error::Degenerate(format!(
                    "column '{name}' has no observed values to impute from"
                )));
            }
            let fill = strategy.fill_value(&observed);
            log.push(ImputationRecord {
                column: name.clone(),
                strategy,
                from_fallback,
                missing_count: missing,
                fill_value: fill,
            });
            fill
        } else {
            0.0
        };
        for (r, row) in t.cells.iter().enumerate() {
            let v = match &row[c] {
                Cell::Number(v) => *v,
                _ => fill,
            };
            values.set(r, c, v);
        }
    }
    Ok((
        NumericTable {
            column_names: t.column_names.clone(),
            row_ids: t.row_ids.clone(),
            values,
        },
        log,
    ))
}

/// Cleaned dataset: feature matrix, label and the optional expert estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub expert_estimate: Option<Vec<f64>>,
    pub row_ids: Vec<usize>,
}

impl DataTable {
    pub fn new(
        feature_names: Vec<String>,
        x: Matrix,
        y: Vec<f64>,
        expert_estimate: Option<Vec<f64>>,
    ) -> Result<Self> {
        let row_ids = (0..y.len()).collect();
        let t = DataTable {
            feature_names,
            x,
            y,
            expert_estimate,
            row_ids,
        };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        if self.x.n_rows() != self.y.len() {
            return Err(Error::LengthMismatch {
                expected: self.x.n_rows(),
                actual: self.y.len(),
            });
        }
        if self.feature_names.len() != self.x.n_cols() {
            return Err(Error::LengthMismatch {
                expected: self.x.n_cols(),
                actual: self.feature_names.len(),
            });
        }
        if let Some(e) = &self.expert_estimate {
            if e.len() != self.y.len() {
                return Err(Error::LengthMismatch {
                    expected: self.y.len(),
                    actual: e.len(),
                });
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        let key = normalize_name(name);
        self.feature_names.iter().position(|f| normalize_name(f) == key)
    }

    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        DataTable {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            expert_estimate: self
                .expert_estimate
                .as_ref()
                .map(|e| rows.iter().map(|&r| e[r]).collect()),
            row_ids: rows.iter().map(|&r| self.row_ids[r]).collect(),
        }
    }

    pub fn select_features(&self, cols: &[usize]) -> DataTable {
        DataTable {
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            x: self.x.select_columns(cols),
            y: self.y.clone(),
            expert_estimate: self.expert_estimate.clone(),
            row_ids: self.row_ids.clone(),
        }
    }

    pub fn select_subset(&self, subset: &FeatureSubset) -> DataTable {
        self.select_features(&subset.indices())
    }
}

/// Picks the label column, the optional expert-estimate column, and drops
/// every name in `exclude` from the features. Exclusions that match no
/// column are ignored (and logged).
pub fn select_label_and_features(
    t: &NumericTable,
    label: &str,
    expert_column: Option<&str>,
    exclude: &[String],
) -> Result<DataTable> {
    let label_idx = t
        .column_index(label)
        .ok_or_else(|| Error::Schema(format!("label column '{label}' not found")))?;
    let expert_idx = expert_column.and_then(|name| {
        let idx = t.column_index(name);
        if idx.is_none() {
            log::warn!("expert-estimate column '{name}' not found");
        }
        idx
    });
    let mut dropped: HashSet<usize> = [label_idx].into_iter().chain(expert_idx).collect();
    for name in exclude {
        match t.column_index(name) {
            Some(i) => {
                dropped.insert(i);
            }
            None => log::warn!("excluded column '{name}' not present"),
        }
    }
    let features: Vec<usize> = (0..t.column_names.len())
        .filter(|c| !dropped.contains(c))
        .collect();
    if features.is_empty() {
        return Err(Error::Degenerate("no feature columns left".into()));
    }
    Ok(DataTable {
        feature_names: features.iter().map(|&c| t.column_names[c].clone()).collect(),
        x: t.values.select_columns(&features),
        y: t.values.column(label_idx),
        expert_estimate: expert_idx.map(|i| t.values.column(i)),
        row_ids: t.row_ids.clone(),
    })
}

/// Seeded shuffle, then the first `floor(n * train_fraction)` rows go to training.
pub fn split(t: &DataTable, train_fraction: f64, seed: u64) -> Result<(DataTable, DataTable)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = t.n_rows();
    if n < 2 {
        return Err(Error::Degenerate(format!("cannot split {n} rows")));
    }
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Degenerate(format!(
            "split of {n} rows at {train_fraction} leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    Ok((t.select_rows(&idx[..n_train]), t.select_rows(&idx[n_train..])))
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

/// Removes features that are constant on the training rows from both tables.
pub fn drop_constant_features(train: &DataTable, val: &DataTable) -> (DataTable, DataTable, Vec<String>) {
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..train.n_features() {
        if is_constant(&train.x.column(j)) {
            dropped.push(train.feature_names[j].clone());
        } else {
            keep.push(j);
        }
    }
    (train.select_features(&keep), val.select_features(&keep), dropped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalerParams {
    pub fn fit(train: &DataTable) -> Result<Self> {
        let mut mean = Vec::with_capacity(train.n_features());
        let mut std = Vec::with_capacity(train.n_features());
        for j in 0..train.n_features() {
            let col = train.x.column(j);
            let s = stats::std_dev(&col);
            if col.is_empty() || is_constant(&col) || s == 0.0 {
                return Err(Error::ZeroVariance(train.feature_names[j].clone()));
            }
            mean.push(stats::mean(&col));
            std.push(s);
        }
        Ok(ScalerParams {
            feature_names: train.feature_names.clone(),
            mean,
            std,
        })
    }

    pub fn transform(&self, t: &DataTable) -> Result<DataTable> {
        if t.feature_names != self.feature_names {
            return Err(Error::Schema(
                "feature columns differ from the fitted scaler".into(),
            ));
        }
        let mut out = t.clone();
        for i in 0..t.n_rows() {
            for j in 0..t.n_features() {
                out.x.set(i, j, (t.x.get(i, j) - self.mean[j]) / self.std[j]);
            }
        }
        Ok(out)
    }
}

/// Z-scores features with the training mean and population std; `y` is untouched.
pub fn standardize(train: &DataTable, val: &DataTable) -> Result<(DataTable, DataTable, ScalerParams)> {
    let params = ScalerParams::fit(train)?;
    Ok((params.transform(train)?, params.transform(val)?, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanEntry {
    pub feature: String,
    pub rho: f64,
    pub abs_rho: f64,
}

/// Spearman coefficient of every feature against the label, sorted by
/// |rho| descending with ties broken by feature name.
pub fn spearman_ranking(t: &DataTable) -> Result<Vec<SpearmanEntry>> {
    let mut out = Vec::with_capacity(t.n_features());
    for j in 0..t.n_features() {
        let c = stats::spearman(&t.x.column(j), &t.y)?;
        if c.degenerate {
            log::warn!(
                "spearman: '{}' or the label is constant; rho set to 0",
                t.feature_names[j]
            );
        }
        out.push(SpearmanEntry {
            feature: t.feature_names[j].clone(),
            rho: c.r,
            abs_rho: c.r.abs(),
        });
    }
    out.sort_by(|a, b| {
        b.abs_rho
            .total_cmp(&a.abs_rho)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    Ok(out)
}

pub fn spearman_top_k(t: &DataTable, k: usize) -> Result<Vec<SpearmanEntry>> {
    if k > t.n_features() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds {} features",
            t.n_features()
        )));
    }
    let mut all = spearman_ranking(t)?;
    all.truncate(k);
    Ok(all)
}

/// Settings for [`preprocess`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub delimiter: char,
    pub sentinels: Vec<String>,
    pub col_missing_ratio: f64,
    pub row_missing_ratio: f64,
    pub label: String,
    pub expert_column: Option<String>,
    pub exclude: Vec<String>,
    pub imputation: ImputationPlan,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        let mut columns = BTreeMap::new();
        for name in [
            "Team contracts",
            "Requirement accuracy level",
            "Income satisfaction",
            "Organization management structure clarity",
            "Product complexity",
            "Developer training",
        ] {
            columns.insert(name.to_string(), ImputeStrategy::Mode);
        }
        columns.insert("Process reengineering".to_string(), ImputeStrategy::Mean);
        for name in [
            "Reliability requirements",
            "Comments within the code",
            "Degree of software reuse",
            "Team selection",
            "Object points",
            "Clarity of manual system",
            "Development team management",
            "Developer incentives policy",
            "Developer hiring policy",
            "Government policy impact",
            "Specified H/W",
        ] {
            columns.insert(name.to_string(), ImputeStrategy::Median);
        }
        PreprocessConfig {
            delimiter: ',',
            sentinels: vec!["?".to_string(), "Not exist".to_string()],
            col_missing_ratio: 0.10,
            row_missing_ratio: 0.10,
            label: "Actual duration".to_string(),
            expert_column: Some("Estimated duration".to_string()),
            exclude: vec!["Estimated cost".to_string(), "Actual cost".to_string()],
            imputation: ImputationPlan {
                columns,
                fallback: Some(ImputeStrategy::Median),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub raw_rows: usize,
    pub raw_columns: usize,
    pub dropped_columns: Vec<DroppedColumn>,
    pub dropped_rows: Vec<usize>,
    pub imputation: Vec<ImputationRecord>,
    pub label: String,
    pub expert_column: Option<String>,
    pub excluded_columns: Vec<String>,
    pub unmatched_exclusions: Vec<String>,
    pub rows: usize,
    pub features: usize,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub table: DataTable,
    pub report: PreprocessReport,
}

pub fn preprocess(path: impl AsRef<Path>, cfg: &PreprocessConfig) -> Result<Preprocessed> {
    let raw = load_raw(path, cfg.delimiter)?;
    preprocess_raw(raw, cfg)
}

pub fn preprocess_raw(raw: RawTable, cfg: &PreprocessConfig) -> Result<Preprocessed> {
    let raw_rows = raw.n_rows();
    let raw_columns = raw.n_cols();
    let cleaned = clean_sentinels(raw, &cfg.sentinels);
    let (kept, drops) = drop_sparse(cleaned, cfg.col_missing_ratio, cfg.row_missing_ratio)?;
    let (numeric, imputation) = impute(&kept, &cfg.imputation)?;
    let table = select_label_and_features(
        &numeric,
        &cfg.label,
        cfg.expert_column.as_deref(),
        &cfg.exclude,
    )?;
    let (excluded_columns, unmatched_exclusions): (Vec<String>, Vec<String>) = cfg
        .exclude
        .iter()
        .cloned()
        .partition(|name| numeric.column_index(name).is_some());
    let report = PreprocessReport {
        raw_rows,
        raw_columns,
        dropped_columns: drops.dropped_columns,
        dropped_rows: drops.dropped_rows,
        imputation,
        label: cfg.label.clone(),
        expert_column: cfg
            .expert_column
            .clone()
            .filter(|name| numeric.column_index(name).is_some()),
        excluded_columns,
        unmatched_exclusions,
        rows: table.n_rows(),
        features: table.n_features(),
    };
    Ok(Preprocessed { table, report })
}
