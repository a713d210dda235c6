//! Feature selection for software effort estimation.
//!
//! The crate bundles everything needed to reproduce a multi-agent
//! reinforcement-learning feature selection experiment on tabular effort
//! data:
//!
//! - [`dataset`]: CSV ingestion, sentinel cleaning, sparse column/row removal,
//!   imputation, splitting, standardization and Spearman ranking.
//! - [`stats`]: MSE, MAE, Pearson, Gini, correlation matrices and subset redundancy.
//! - [`forest`]: CART regression trees and a bagged random forest.
//! - [`reward`]: the MSE transforms and the accuracy/redundancy reward.
//! - [`marlfs`]: one DQN agent per feature, replay buffers and the training loop.
//! - [`baselines`]: variance filter, recursive feature elimination and expert estimates.
//!
//! Tree fitting inside a forest runs on rayon when the `parallel` feature is
//! enabled (the default). Results are bitwise identical to sequential
//! execution because every tree draws from its own seed.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod forest;
pub mod marlfs;
pub mod matrix;
pub mod reward;
pub mod rng;
pub mod stats;
pub mod subset;
pub mod synthetic;

pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::Matrix;
pub use subset::FeatureSubset;
