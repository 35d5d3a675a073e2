//! A trained classifier plus whatever fairness intervention wraps it.

use super::linear::{train_logreg, LinearModel, OptimizerSettings};
use super::penalty::{train_fair_penalty, PenaltyConfig};
use super::postprocess::{postprocess_eqodds_raw, PostprocessRates};
use crate::data::GroupId;
use crate::encode::EncodedDataset;
use crate::error::Result;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intervention {
    /// Plain logistic regression.
    None(OptimizerSettings),
    /// In-processing: logistic loss plus a disparity penalty.
    Penalty(PenaltyConfig),
    /// Post-processing: logistic regression, then randomized flips.
    EqOdds { epsilon: f64, optimizer: OptimizerSettings },
}

impl Intervention {
    pub fn optimizer(&self) -> &OptimizerSettings {
        match self {
            Intervention::None(o) | Intervention::EqOdds { optimizer: o, .. } => o,
            Intervention::Penalty(c) => &c.optimizer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairModel {
    pub linear: LinearModel,
    pub post: Option<PostprocessRates>,
}

impl FairModel {
    /// Always predicts `label`.
    pub fn constant(dim: usize, label: u8) -> Self {
        let mut linear = LinearModel::zeros(dim);
        linear.bias = if label == 1 { 40.0 } else { -40.0 };
        Self { linear, post: None }
    }

    /// Sigmoid score, or the post-mixing positive probability.
    pub fn score(&self, row: &[f64], group: GroupId) -> f64 {
        match &self.post {
            None => self.linear.score(row),
            Some(p) => p.positive_probability(group, self.linear.predict(row)),
        }
    }

    /// Hard label; consumes randomness only when post-processing is active.
    pub fn predict(&self, row: &[f64], group: GroupId, rng: &mut Rng) -> u8 {
        let base = self.linear.predict(row);
        match &self.post {
            None => base,
            Some(p) => p.apply(group, base, rng),
        }
    }
}

pub fn train_intervention(enc: &EncodedDataset, intervention: &Intervention) -> Result<FairModel> {
    match intervention {
        Intervention::None(o) => Ok(FairModel { linear: train_logreg(enc, o)?, post: None }),
        Intervention::Penalty(c) => Ok(FairModel { linear: train_fair_penalty(enc, c)?, post: None }),
        Intervention::EqOdds { epsilon, optimizer } => {
            let linear = train_logreg(enc, optimizer)?;
            let post = postprocess_eqodds_raw(&linear.scores(enc), &enc.labels, &enc.groups, *epsilon)?;
            Ok(FairModel { linear, post: Some(post) })
        }
    }
}
