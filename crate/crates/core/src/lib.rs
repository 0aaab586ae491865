//! Prime adjacency matrices for multi-relational graphs.
//!
//! Relations are mapped to distinct primes so that a whole multi-relational
//! graph fits in one sparse integer matrix. Powers of that matrix summarize
//! k-hop relation chains, a lossless variant keeps every chain recoverable,
//! and bags of the resulting values serve as features for node, pair and
//! graph level tasks and for rule mining.

pub mod bop;
pub mod error;
pub mod ingest;
pub mod lossless;
pub mod pam;
pub mod primes;
pub mod rules;
pub mod tasks;

pub use bop::{BopVector, FeatureMatrix, SparseRow, TfIdfParams, Weighting};
pub use error::{Error, Result};
pub use ingest::{GraphCollection, RelGraph, SplitBundle, Triple};
pub use lossless::{LosslessLevel, LosslessOptions, LosslessPam, PrimeAllocation};
pub use pam::{BigPam, CellValue, Pam, PamMode, ValueHistogram};
pub use primes::{Chain, PathDict, PrimeStream, RelId};
pub use rules::{Rule, RuleSet, RuleThresholds};
pub use tasks::{Model, RankingResult, RegressionResult};
