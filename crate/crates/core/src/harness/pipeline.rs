//! Method pipelines: everything between a training split and hard test
//! predictions.

use crate::data::{split_train_test, Dataset};
use crate::encode::{assign_cluster, cluster_missing_patterns, cluster_missing_patterns_validated, ClusterConfig};
use crate::encode::{ClusterPartition, EncodedDataset, Encoder, EncoderKind};
use crate::error::{Error, Result};
use crate::fairclf::{fair_miss_bag, train_intervention, FairEnsemble, FairModel, Intervention};
use crate::impute::Imputer;
use crate::rng::seeded;

use super::config::{MethodConfig, MethodKind};

#[derive(Debug, Clone, PartialEq)]
pub enum FittedPipeline {
    Single { imputer: Imputer, encoder: Encoder, model: FairModel },
    Clustered { partition: ClusterPartition, encoder: Encoder, models: Vec<FairModel> },
    Bagged(FairEnsemble),
}

/// Trains on one cluster's rows, degrading gracefully when the rows cannot
/// support the intervention: a constant model for a single label, plain
/// logistic regression when a group or cell is absent.
fn train_cluster_model(enc: &EncodedDataset, intervention: &Intervention) -> Result<FairModel> {
    let positives = enc.labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == enc.n_rows() {
        return Ok(FairModel::constant(enc.n_cols(), u8::from(positives > 0)));
    }
    match train_intervention(enc, intervention) {
        Err(Error::TooFewGroups(_) | Error::Cell { .. } | Error::Parameter(_)) => {
            log::warn!("cluster of {} rows cannot support the intervention; using plain logistic regression", enc.n_rows());
            train_intervention(enc, &Intervention::None(*intervention.optimizer()))
        }
        other => other,
    }
}

pub fn fit_pipeline(train: &Dataset, method: &MethodConfig, intervention: &Intervention, seed: u64) -> Result<FittedPipeline> {
    let single = |kind: EncoderKind| -> Result<FittedPipeline> {
        let imputer = Imputer::fit_new(method.imputer, train)?;
        let encoder = Encoder::fit(kind, train);
        let model = train_intervention(&encoder.encode_imputed(train, &imputer)?, intervention)?;
        Ok(FittedPipeline::Single { imputer, encoder, model })
    };
    match method.kind {
        MethodKind::ImputeThenClassify => single(EncoderKind::Plain),
        MethodKind::Indicators => single(EncoderKind::Indicators),
        MethodKind::Affine => single(EncoderKind::Affine),
        MethodKind::Clustering => {
            let mut cfg = ClusterConfig::new(method.k_min, method.alpha, method.beta);
            cfg.optimizer = *intervention.optimizer();
            let partition = if method.validation {
                let (fit, val) = split_train_test(train, 0.2, seed)?;
                cluster_missing_patterns_validated(&fit, &val, &cfg)?
            } else {
                cluster_missing_patterns(train, &cfg)?
            };
            let encoder = Encoder::fit(EncoderKind::Plain, train);
            let enc = encoder.encode(train)?;
            let masks = train.masks();
            let q = partition.n_clusters();
            let mut rows = vec![Vec::new(); q];
            for (i, m) in masks.iter().enumerate() {
                rows[assign_cluster(&partition, m)].push(i);
            }
            let models = rows
                .iter()
                .map(|r| {
                    if r.is_empty() {
                        Ok(FairModel::constant(enc.n_cols(), 0))
                    } else {
                        train_cluster_model(&enc.select(r), intervention)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            log::info!("clustering: {q} clusters");
            Ok(FittedPipeline::Clustered { partition, encoder, models })
        }
        MethodKind::FairMissBag => Ok(FittedPipeline::Bagged(fair_miss_bag(
            train,
            method.bags,
            intervention,
            method.imputer,
            method.ensemble,
            seed,
        )?)),
    }
}

impl FittedPipeline {
    /// Hard predictions; randomized models draw from `seed`.
    pub fn predict(&self, ds: &Dataset, seed: u64) -> Result<Vec<u8>> {
        let groups = ds.groups();
        match self {
            FittedPipeline::Single { imputer, encoder, model } => {
                let enc = encoder.encode_imputed(ds, imputer)?;
                let mut rng = seeded(seed);
                Ok(enc.rows().zip(&groups).map(|(r, &g)| model.predict(r, g, &mut rng)).collect())
            }
            FittedPipeline::Clustered { partition, encoder, models } => {
                let enc = encoder.encode(ds)?;
                let mut rng = seeded(seed);
                Ok(ds
                    .masks()
                    .iter()
                    .enumerate()
                    .map(|(i, m)| models[assign_cluster(partition, m)].predict(enc.row(i), groups[i], &mut rng))
                    .collect())
            }
            FittedPipeline::Bagged(ens) => ens.predict_dataset(ds, seed),
        }
    }
}
