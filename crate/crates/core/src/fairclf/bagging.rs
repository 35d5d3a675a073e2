//! Fair bagging: per-bag (s, y)-uniform resampling, per-bag imputation with
//! missingness indicators, one intervention model per bag.

use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;

use super::intervention::{train_intervention, FairModel, Intervention};
use crate::data::{fair_resample, Dataset, Sample};
use crate::encode::{Encoder, EncoderKind};
use crate::error::{Error, Result};
use crate::impute::{ImputeMethod, Imputer};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleMode {
    RandomPick,
    ScoreAverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BagMember {
    pub imputer: Imputer,
    pub encoder: Encoder,
    pub model: FairModel,
}

impl BagMember {
    fn encode(&self, ds: &Dataset) -> Result<crate::encode::EncodedDataset> {
        self.encoder.encode_imputed(ds, &self.imputer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairEnsemble {
    pub members: Vec<BagMember>,
    pub mode: EnsembleMode,
    feature_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleOutput {
    Label(u8),
    Score(f64),
}

/// One bag: resample with `seed`, fit the imputer on the bag, encode with
/// indicators, train.
pub fn train_bag_member(train: &Dataset, intervention: &Intervention, imputer: ImputeMethod, seed: u64) -> Result<BagMember> {
    let bag = fair_resample(train, seed)?;
    let imputer = Imputer::fit_new(imputer, &bag)?;
    let encoder = Encoder::fit(EncoderKind::Indicators, &bag);
    let enc = encoder.encode_imputed(&bag, &imputer)?;
    let model = train_intervention(&enc, intervention)?;
    Ok(BagMember { imputer, encoder, model })
}

/// Bag `b` uses seed `seed + b`. Bags train in parallel; the result does not
/// depend on scheduling.
pub fn fair_miss_bag(
    train: &Dataset,
    bags: usize,
    intervention: &Intervention,
    imputer: ImputeMethod,
    mode: EnsembleMode,
    seed: u64,
) -> Result<FairEnsemble> {
    if bags == 0 {
        return Err(Error::Parameter("bag count must be at least 1".into()));
    }
    let members = (0..bags as u64)
        .into_par_iter()
        .map(|b| train_bag_member(train, intervention, imputer, seed.wrapping_add(b)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FairEnsemble { members, mode, feature_names: train.feature_names().to_vec() })
}

impl FairEnsemble {
    pub fn from_members(members: Vec<BagMember>, mode: EnsembleMode, feature_names: Vec<String>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Parameter("an ensemble needs at least one member".into()));
        }
        Ok(Self { members, mode, feature_names })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Row `i` is predicted exactly as `ensemble_predict(sample_i, seed + i)`;
    /// score-average output is thresholded at 0.5.
    pub fn predict_dataset(&self, ds: &Dataset, seed: u64) -> Result<Vec<u8>> {
        let encoded = self.members.iter().map(|m| m.encode(ds)).collect::<Result<Vec<_>>>()?;
        let groups = ds.groups();
        Ok((0..ds.len())
            .map(|i| {
                let rows: Vec<&[f64]> = encoded.iter().map(|e| e.row(i)).collect();
                match self.combine(&rows, groups[i], seed.wrapping_add(i as u64)) {
                    EnsembleOutput::Label(y) => y,
                    EnsembleOutput::Score(s) => u8::from(s >= 0.5),
                }
            })
            .collect())
    }

    fn combine(&self, rows: &[&[f64]], group: u32, seed: u64) -> EnsembleOutput {
        match self.mode {
            EnsembleMode::RandomPick => {
                let mut rng = seeded(seed);
                let b = rng.random_range(0..self.members.len());
                EnsembleOutput::Label(self.members[b].model.predict(rows[b], group, &mut rng))
            }
            EnsembleMode::ScoreAverage => {
                let total: f64 = self.members.iter().zip(rows).map(|(m, r)| m.model.score(r, group)).sum();
                EnsembleOutput::Score(total / self.members.len() as f64)
            }
        }
    }

    /// Audit dump: one block per member with tagged weights.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ensemble bags={} mode={:?}", self.members.len(), self.mode);
        for (b, m) in self.members.iter().enumerate() {
            let _ = writeln!(s, "member {b} imputer={}", m.imputer.method());
            s.push_str(&m.model.linear.to_text(&m.encoder.columns()));
            if let Some(p) = &m.model.post {
                for (g, f) in p.groups.iter().zip(&p.flip) {
                    let _ = writeln!(s, "flip s={g} {:e} {:e}", f[0], f[1]);
                }
            }
        }
        s
    }
}

pub fn ensemble_predict(ens: &FairEnsemble, sample: &Sample, seed: u64) -> Result<EnsembleOutput> {
    let rows = ens
        .members
        .iter()
        .map(|m| m.encoder.encode_sample(sample, Some(&m.imputer), &ens.feature_names))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(ens.combine(&refs, sample.sensitive, seed))
}
