//! Logistic regression with a smooth equalized-odds penalty.
//!
//! The penalty is `tau * sum_y sum_{s<s'} (mu_{s,y} - mu_{s',y})^2`, where
//! `mu_{s,y}` is the mean sigmoid score over rows with group `s` and label `y`.
//! Mean-equalized-odds uses both labels; the FNR variant uses `y = 1` only.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::linear::{
    accumulate, check_trainable, initial_params, l2_term, minimize, sigmoid, unpack, LinearModel,
    LogisticObjective, Objective, OptimizerSettings,
};
use crate::data::GroupId;
use crate::encode::EncodedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyConstraint {
    MeanEqualizedOdds,
    FnrDifference,
}

impl PenaltyConstraint {
    fn labels(self) -> &'static [u8] {
        match self {
            PenaltyConstraint::MeanEqualizedOdds => &[0, 1],
            PenaltyConstraint::FnrDifference => &[1],
        }
    }
}

impl FromStr for PenaltyConstraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "meo" | "mean-equalized-odds" => Ok(Self::MeanEqualizedOdds),
            "fnr-diff" | "fnr-difference" => Ok(Self::FnrDifference),
            other => Err(Error::Parameter(format!("unknown penalty constraint `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub tau: f64,
    pub constraint: PenaltyConstraint,
    pub optimizer: OptimizerSettings,
}

impl PenaltyConfig {
    pub fn new(tau: f64) -> Self {
        Self { tau, constraint: PenaltyConstraint::MeanEqualizedOdds, optimizer: OptimizerSettings::default() }
    }
}

/// Penalized objective. Rows are bucketed by `(group, label)` once.
pub struct PenaltyObjective<'a> {
    base: LogisticObjective<'a>,
    tau: f64,
    /// Per penalized label: the rows of each group that has any.
    cells: Vec<Vec<Vec<usize>>>,
}

impl<'a> PenaltyObjective<'a> {
    pub fn new(data: &'a EncodedDataset, cfg: &PenaltyConfig) -> Self {
        let mut by_cell: BTreeMap<(u8, GroupId), Vec<usize>> = BTreeMap::new();
        for (i, (&y, &g)) in data.labels.iter().zip(&data.groups).enumerate() {
            by_cell.entry((y, g)).or_default().push(i);
        }
        let cells = cfg
            .constraint
            .labels()
            .iter()
            .map(|&y| by_cell.iter().filter(|((ly, _), _)| *ly == y).map(|(_, rows)| rows.clone()).collect())
            .collect();
        Self { base: LogisticObjective { data, l2: cfg.optimizer.l2 }, tau: cfg.tau, cells }
    }

    /// Penalty value for the scores implied by `z`, and its gradient in `z`.
    fn penalty(&self, z: &[f64], dz: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for groups in &self.cells {
            let means: Vec<f64> =
                groups.iter().map(|rows| rows.iter().map(|&i| sigmoid(z[i])).sum::<f64>() / rows.len() as f64).collect();
            for (a, rows) in groups.iter().enumerate() {
                let mut pull = 0.0;
                for b in 0..means.len() {
                    if b != a {
                        pull += means[a] - means[b];
                        if b > a {
                            total += (means[a] - means[b]).powi(2);
                        }
                    }
                }
                let coef = 2.0 * pull / rows.len() as f64;
                for &i in rows {
                    let s = sigmoid(z[i]);
                    dz[i] += self.tau * coef * s * (1.0 - s);
                }
            }
        }
        total
    }
}

impl Objective for PenaltyObjective<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        if self.tau == 0.0 {
            return self.base.eval(params, grad);
        }
        let data = self.base.data;
        let n = data.n_rows();
        let mut dz = vec![0.0; n];
        let mut z = vec![0.0; n];
        let inv = 1.0 / n as f64;
        let loss = self.base.loss_and_dz(params, &mut dz, &mut z);
        dz.iter_mut().for_each(|v| *v *= inv);
        let pen = self.penalty(&z, &mut dz);
        accumulate(data, &dz, self.base.l2, params, grad);
        loss * inv + l2_term(self.base.l2, params, data.n_cols()) + self.tau * pen
    }
}

pub fn train_fair_penalty(enc: &EncodedDataset, cfg: &PenaltyConfig) -> Result<LinearModel> {
    if !(cfg.tau >= 0.0) {
        return Err(Error::Parameter(format!("tau must be >= 0, got {}", cfg.tau)));
    }
    check_trainable(enc)?;
    let mut groups: Vec<GroupId> = enc.groups.clone();
    groups.sort_unstable();
    groups.dedup();
    if groups.len() < 2 {
        return Err(Error::TooFewGroups(groups.len()));
    }
    let obj = PenaltyObjective::new(enc, cfg);
    let min = minimize(&obj, initial_params(enc), &cfg.optimizer);
    log::debug!("penalty tau={}: {} iterations, |grad| = {:.3e}", cfg.tau, min.iterations, min.grad_norm);
    Ok(unpack(min.params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairclf::linear::tests::{gradient_error, toy};
    use crate::fairclf::train_logreg;
    use crate::metrics::{disparity, group_rates_raw, DisparityKind};
    use rand::Rng as _;
    use rand_distr::{Distribution, StandardNormal};

    fn random_data(seed: u64, n: usize) -> EncodedDataset {
        let mut rng = crate::rng::seeded(seed);
        let mut rows = Vec::new();
        let (mut labels, mut groups) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let g: u32 = rng.random_range(0..2);
            let y: u8 = rng.random_range(0..2);
            let x: f64 = StandardNormal.sample(&mut rng);
            rows.push(vec![x + f64::from(y) + f64::from(g), f64::from(g)]);
            labels.push(y);
            groups.push(g);
        }
        toy(rows, labels, groups)
    }

    #[test]
    fn tau_zero_is_plain_logreg() {
        let enc = random_data(1, 300);
        let cfg = PenaltyConfig::new(0.0);
        assert_eq!(train_fair_penalty(&enc, &cfg).unwrap(), train_logreg(&enc, &cfg.optimizer).unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let enc = random_data(2, 60);
        let mut rng = crate::rng::seeded(3);
        for constraint in [PenaltyConstraint::MeanEqualizedOdds, PenaltyConstraint::FnrDifference] {
            let cfg = PenaltyConfig { tau: 3.0, constraint, optimizer: OptimizerSettings { l2: 0.01, ..Default::default() } };
            let obj = PenaltyObjective::new(&enc, &cfg);
            for _ in 0..20 {
                let at: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                assert!(gradient_error(&obj, &at) <= 1e-5);
            }
        }
    }

    #[test]
    fn larger_tau_reduces_training_meo() {
        let enc = random_data(4, 800);
        let meo = |tau: f64| {
            let m = train_fair_penalty(&enc, &PenaltyConfig::new(tau)).unwrap();
            let r = group_rates_raw(&m.predictions(&enc), &enc.labels, &enc.groups).unwrap();
            disparity(&r, DisparityKind::Meo).unwrap()
        };
        let values: Vec<f64> = [0.01, 0.1, 1.0, 10.0, 100.0].into_iter().map(meo).collect();
        assert!(values[4] <= values[0] + 0.02, "{values:?}");
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 0.03, "{values:?}");
        }
    }

    #[test]
    fn symmetric_data_leaves_model_unchanged() {
        // Features independent of the group: mirror every row into both groups.
        let base = random_data(6, 200);
        let mut rows = Vec::new();
        let (mut labels, mut groups) = (Vec::new(), Vec::new());
        for (r, &y) in base.rows().zip(&base.labels) {
            for g in 0..2u32 {
                rows.push(vec![r[0]]);
                labels.push(y);
                groups.push(g);
            }
        }
        let enc = toy(rows, labels, groups);
        let plain = train_fair_penalty(&enc, &PenaltyConfig::new(0.0)).unwrap();
        let fair = train_fair_penalty(&enc, &PenaltyConfig::new(10.0)).unwrap();
        let dist: f64 = plain
            .weights
            .iter()
            .chain([&plain.bias])
            .zip(fair.weights.iter().chain([&fair.bias]))
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 1e-3, "{dist}");
    }

    #[test]
    fn one_group_rejected() {
        let enc = toy(vec![vec![0.0], vec![1.0]], vec![0, 1], vec![0, 0]);
        assert!(matches!(train_fair_penalty(&enc, &PenaltyConfig::new(1.0)), Err(Error::TooFewGroups(1))));
    }
}
