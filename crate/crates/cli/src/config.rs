use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use effort_fs::dataset::PreprocessConfig;
use effort_fs::forest::ForestParams;
use effort_fs::marlfs::MarlfsConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Whole experiment in one TOML document. Every field has a default, so an
/// empty file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset path; relative paths resolve against the config file's directory.
    pub input: PathBuf,
    pub out_dir: PathBuf,
    /// Any of MARLFS, Expert, raw-RF, Filter, Wrapper (every k in
    /// `baselines.rfe_k`) or Wrapper-<k>.
    pub methods: Vec<String>,
    pub preprocess: PreprocessConfig,
    pub split: SplitConfig,
    /// Regressor for raw-RF, Filter and the Wrapper runs.
    pub forest: ForestParams,
    pub marlfs: MarlfsConfig,
    pub baselines: BaselineConfig,
    pub curves: CurveConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub filter_threshold: f64,
    pub rfe_k: Vec<usize>,
    pub rfe_step: usize,
    pub spearman_top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub k: f64,
    pub x_max: f64,
    /// Grid points per unit of x; 100 gives a step of 0.01.
    pub points_per_unit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::from("data/seera.csv"),
            out_dir: PathBuf::from("out"),
            methods: ["MARLFS", "Expert", "raw-RF", "Filter", "Wrapper"]
                .map(String::from)
                .to_vec(),
            preprocess: PreprocessConfig::default(),
            split: SplitConfig::default(),
            forest: ForestParams::default(),
            marlfs: MarlfsConfig::default(),
            baselines: BaselineConfig::default(),
            curves: CurveConfig::default(),
        }
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            filter_threshold: 1.0,
            rfe_k: vec![10, 20, 30],
            rfe_step: 1,
            spearman_top_k: 10,
        }
    }
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            k: 1.0,
            x_max: 10.0,
            points_per_unit: 100,
        }
    }
}

impl RunConfig {
    /// Reads a config file and resolves `input` against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.input.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.input = dir.join(&cfg.input);
            }
        }
        Ok(cfg)
    }

    /// Overrides every seed in the config.
    pub fn set_seed(&mut self, seed: u64) {
        self.split.seed = seed;
        self.forest.seed = seed;
        self.marlfs.seed = seed;
        self.marlfs.cv_seed = seed;
        self.marlfs.forest.seed = seed;
    }

    /// SHA-256 over the canonical JSON form, leaving out the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn resolved_methods(&self) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for name in &self.methods {
            match Method::parse(name)? {
                None => out.extend(self.baselines.rfe_k.iter().map(|&k| Method::Wrapper(k))),
                Some(m) => out.push(m),
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

/// Comparison columns, ordered as they appear in the metrics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Marlfs,
    Expert,
    RawRf,
    Filter,
    Wrapper(usize),
}

impl Method {
    /// `Ok(None)` stands for the bare "Wrapper", i.e. every configured k.
    pub fn parse(name: &str) -> Result<Option<Method>> {
        let lower = name.trim().to_ascii_lowercase();
        let m = match lower.as_str() {
            "marlfs" => Method::Marlfs,
            "expert" => Method::Expert,
            "raw-rf" | "raw_rf" | "rawrf" => Method::RawRf,
            "filter" => Method::Filter,
            "wrapper" => return Ok(None),
            other => match other.strip_prefix("wrapper-").map(str::parse::<usize>) {
                Some(Ok(k)) if k > 0 => Method::Wrapper(k),
                _ => bail!("unknown method '{name}'"),
            },
        };
        Ok(Some(m))
    }

    pub fn label(&self) -> String {
        match self {
            Method::Marlfs => "MARLFS".into(),
            Method::Expert => "Expert".into(),
            Method::RawRf => "raw-RF".into(),
            Method::Filter => "Filter".into(),
            Method::Wrapper(k) => format!("Wrapper-{k}"),
        }
    }
}
