use std::collections::BTreeMap;

use crate::data::{Dataset, GroupId};
use crate::error::{Error, Result};

/// Confusion rates of one sensitive group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupRate {
    pub group: GroupId,
    pub fpr: f64,
    pub fnr: f64,
    pub tpr: f64,
    pub tnr: f64,
    pub negatives: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRates {
    pub groups: Vec<GroupRate>,
}

impl GroupRates {
    /// `Pr(ŷ = yhat | y, s)` for group at position `g`.
    fn rate(&self, g: usize, y: u8, yhat: u8) -> f64 {
        let r = &self.groups[g];
        match (y, yhat) {
            (0, 0) => r.tnr,
            (0, _) => r.fpr,
            (_, 0) => r.fnr,
            _ => r.tpr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DisparityKind {
    FnrDiff,
    FprDiff,
    /// Mean equalized odds: average of the FNR and FPR gaps.
    Meo,
    /// Largest gap of `Pr(ŷ | y, s)` over `y`, `ŷ` and group pairs.
    EqOddsMax,
}

impl DisparityKind {
    pub fn name(self) -> &'static str {
        match self {
            DisparityKind::FnrDiff => "fnr-diff",
            DisparityKind::FprDiff => "fpr-diff",
            DisparityKind::Meo => "meo",
            DisparityKind::EqOddsMax => "eqodds-max",
        }
    }
}

impl std::str::FromStr for DisparityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fnr-diff" => Ok(DisparityKind::FnrDiff),
            "fpr-diff" => Ok(DisparityKind::FprDiff),
            "meo" => Ok(DisparityKind::Meo),
            "eqodds-max" => Ok(DisparityKind::EqOddsMax),
            other => Err(Error::Parameter(format!("unknown disparity `{other}`"))),
        }
    }
}

/// Plug-in group rates for (possibly randomized) predictions, where
/// `positive[i]` is the probability of predicting 1 on row `i`.
pub fn group_rates_soft(positive: &[f64], labels: &[u8], groups: &[GroupId]) -> Result<GroupRates> {
    if positive.len() != labels.len() || labels.len() != groups.len() {
        return Err(Error::Dimension { expected: labels.len(), found: positive.len() });
    }
    // (sum of predicted-positive mass, count) per (group, label).
    let mut acc: BTreeMap<GroupId, [(f64, usize); 2]> = BTreeMap::new();
    for ((&p, &y), &g) in positive.iter().zip(labels).zip(groups) {
        let cell = &mut acc.entry(g).or_insert([(0.0, 0); 2])[y as usize];
        cell.0 += p;
        cell.1 += 1;
    }
    let mut out = Vec::with_capacity(acc.len());
    for (g, [neg, pos]) in acc {
        if neg.1 == 0 {
            return Err(Error::cell(g, 0, "is empty"));
        }
        if pos.1 == 0 {
            return Err(Error::cell(g, 1, "is empty"));
        }
        let fpr = neg.0 / neg.1 as f64;
        let tpr = pos.0 / pos.1 as f64;
        out.push(GroupRate {
            group: g,
            fpr,
            fnr: 1.0 - tpr,
            tpr,
            tnr: 1.0 - fpr,
            negatives: neg.1,
            positives: pos.1,
        });
    }
    Ok(GroupRates { groups: out })
}

pub fn group_rates_raw(predictions: &[u8], labels: &[u8], groups: &[GroupId]) -> Result<GroupRates> {
    let soft: Vec<f64> = predictions.iter().map(|&p| p as f64).collect();
    group_rates_soft(&soft, labels, groups)
}

pub fn group_rates(predictions: &[u8], ds: &Dataset) -> Result<GroupRates> {
    group_rates_raw(predictions, &ds.labels(), &ds.groups())
}

pub fn accuracy_raw(predictions: &[u8], labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

pub fn accuracy(predictions: &[u8], ds: &Dataset) -> f64 {
    accuracy_raw(predictions, &ds.labels())
}

fn max_gap(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.fold(f64::INFINITY, f64::min);
    hi - lo
}

pub fn disparity(rates: &GroupRates, kind: DisparityKind) -> Result<f64> {
    let n = rates.groups.len();
    if n < 2 {
        return Err(Error::TooFewGroups(n));
    }
    let fnr = max_gap(rates.groups.iter().map(|r| r.fnr));
    let fpr = max_gap(rates.groups.iter().map(|r| r.fpr));
    Ok(match kind {
        DisparityKind::FnrDiff => fnr,
        DisparityKind::FprDiff => fpr,
        DisparityKind::Meo => 0.5 * (fnr + fpr),
        DisparityKind::EqOddsMax => {
            let mut worst = 0.0f64;
            for y in 0..2 {
                for yhat in 0..2 {
                    worst = worst.max(max_gap((0..n).map(|g| rates.rate(g, y, yhat))));
                }
            }
            worst
        }
    })
}
