//! Fair binary classification when features have missing values.
//!
//! Data loading and missingness simulation live in [`data`] and
//! [`missingness`]; [`impute`] and [`encode`] turn incomplete rows into
//! model inputs; [`fairclf`] trains fair linear classifiers and ensembles;
//! [`metrics`] evaluates them; [`harness`] runs configured experiments.

pub mod data;
pub mod encode;
pub mod error;
pub mod fairclf;
pub mod harness;
pub mod impute;
pub mod linalg;
pub mod lp;
pub mod metrics;
pub mod missingness;
pub mod rng;

pub use data::{Dataset, GroupId, MissingMask, Sample, Schema};
pub use encode::{ClusterConfig, ClusterPartition, EncodedDataset, Encoder, EncoderKind};
pub use error::{Error, Result};
pub use fairclf::{FairEnsemble, Intervention, LinearModel, OptimizerSettings, PenaltyConfig, PostprocessRates};
pub use impute::{ImputeMethod, Imputer};
pub use metrics::{DisparityKind, GroupRates, JointTable, TradeoffPoint};
pub use missingness::{Mechanism, MissingnessSpec, Theorem1Distribution};
