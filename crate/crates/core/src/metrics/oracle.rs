//! Exact fairness-constrained optimum over randomized classifiers on a finite
//! feature domain.
//!
//! A randomized classifier is a vector `h[x] = Pr(ŷ = 1 | x)`. Accuracy and
//! every conditional rate `Pr(ŷ = 1 | y, s)` are linear in `h`, so the best
//! accuracy under equalized-odds gaps of at most `epsilon` is a small LP.

use std::collections::BTreeMap;

use crate::data::GroupId;
use crate::error::{Error, Result};
use crate::lp::simplex;

/// Largest feature domain the oracle accepts.
pub const MAX_DOMAIN: usize = 16;

/// Joint probability table over `(s, x, y)` with `x` in a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    groups: Vec<GroupId>,
    domain: Vec<String>,
    prob: Vec<f64>,
}

impl JointTable {
    pub fn zeros(groups: Vec<GroupId>, domain: Vec<String>) -> Self {
        let len = groups.len() * domain.len() * 2;
        Self { groups, domain, prob: vec![0.0; len] }
    }

    fn idx(&self, g: usize, x: usize, y: u8) -> usize {
        (g * self.domain.len() + x) * 2 + y as usize
    }

    pub fn groups(&self) -> &[GroupId] {
        &self.groups
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    /// Probability of `(group position g, domain index x, label y)`.
    pub fn get(&self, g: usize, x: usize, y: u8) -> f64 {
        self.prob[self.idx(g, x, y)]
    }

    pub fn set(&mut self, g: usize, x: usize, y: u8, p: f64) {
        let i = self.idx(g, x, y);
        self.prob[i] = p;
    }

    pub fn add(&mut self, g: usize, x: usize, y: u8, p: f64) {
        let i = self.idx(g, x, y);
        self.prob[i] += p;
    }

    pub fn total(&self) -> f64 {
        self.prob.iter().sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u8, f64)> + '_ {
        let nx = self.domain.len();
        (0..self.groups.len())
            .flat_map(move |g| (0..nx).flat_map(move |x| [0u8, 1].map(|y| (g, x, y))))
            .map(|(g, x, y)| (g, x, y, self.get(g, x, y)))
    }

    /// `Pr(Y = y, S = g)`.
    pub fn label_group_mass(&self, g: usize, y: u8) -> f64 {
        (0..self.domain.len()).map(|x| self.get(g, x, y)).sum()
    }

    /// Pushes each domain point through a stochastic map: `f(x)` lists
    /// `(new index, weight)` pairs whose weights sum to one.
    pub fn remap(&self, new_domain: Vec<String>, f: impl Fn(usize) -> Vec<(usize, f64)>) -> Self {
        let mut out = JointTable::zeros(self.groups.clone(), new_domain);
        for (g, x, y, p) in self.cells() {
            for (nx, w) in f(x) {
                out.add(g, nx, y, p * w);
            }
        }
        out
    }

    /// Joint of `(key(x), y)` after marginalizing the group.
    pub fn joint_with_label<K: Ord>(&self, key: impl Fn(usize) -> K) -> BTreeMap<(K, u8), f64> {
        let mut out = BTreeMap::new();
        for (_, x, y, p) in self.cells() {
            *out.entry((key(x), y)).or_insert(0.0) += p;
        }
        out
    }
}

/// Optimal accuracy and a classifier attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct FairOptimum {
    pub accuracy: f64,
    /// `Pr(ŷ = 1 | x)` per domain point.
    pub classifier: Vec<f64>,
}

/// Best accuracy over randomized classifiers `x -> ŷ` subject to
/// `|Pr(ŷ=1 | y, s) - Pr(ŷ=1 | y, s')| <= epsilon` for all `y, s, s'`.
/// Cells `(s, y)` with zero mass impose no constraint.
pub fn brute_force_fair_optimal(table: &JointTable, epsilon: f64) -> Result<FairOptimum> {
    let nx = table.domain().len();
    if nx == 0 || nx > MAX_DOMAIN {
        return Err(Error::Parameter(format!("feature domain size {nx} outside 1..={MAX_DOMAIN}")));
    }
    if (table.total() - 1.0).abs() > 1e-9 || table.prob.iter().any(|&p| p < 0.0) {
        return Err(Error::Parameter(format!("table is not a distribution (total {})", table.total())));
    }
    if epsilon < 0.0 {
        return Err(Error::Parameter(format!("epsilon {epsilon} < 0")));
    }
    let ng = table.groups().len();

    // Accuracy = sum_x P(x, y=0) + sum_x h[x] (P(x, y=1) - P(x, y=0)).
    let base: f64 = table.cells().filter(|c| c.2 == 0).map(|c| c.3).sum();
    let gain: Vec<f64> =
        (0..nx).map(|x| (0..ng).map(|g| table.get(g, x, 1) - table.get(g, x, 0)).sum()).collect();

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for x in 0..nx {
        let mut r = vec![0.0; nx];
        r[x] = 1.0;
        rows.push(r);
        rhs.push(1.0);
    }
    for y in 0..2u8 {
        for g in 0..ng {
            for h in g + 1..ng {
                let (mg, mh) = (table.label_group_mass(g, y), table.label_group_mass(h, y));
                if mg <= 0.0 || mh <= 0.0 {
                    continue;
                }
                let gap: Vec<f64> = (0..nx).map(|x| table.get(g, x, y) / mg - table.get(h, x, y) / mh).collect();
                rows.push(gap.iter().map(|v| -v).collect());
                rows.push(gap);
                rhs.push(epsilon);
                rhs.push(epsilon);
            }
        }
    }
    let sol = simplex(&gain, &rows, &rhs).expect("box-constrained program is bounded");
    Ok(FairOptimum { accuracy: base + sol.objective, classifier: sol.x })
}

/// `Pr(ŷ = 1 | y, s)` for classifier `h` on `table`, indexed `[group][y]`;
/// `None` for zero-mass cells.
pub fn classifier_rates(table: &JointTable, h: &[f64]) -> Vec<[Option<f64>; 2]> {
    (0..table.groups().len())
        .map(|g| {
            [0u8, 1].map(|y| {
                let mass = table.label_group_mass(g, y);
                (mass > 0.0).then(|| (0..h.len()).map(|x| h[x] * table.get(g, x, y)).sum::<f64>() / mass)
            })
        })
        .collect()
}

/// Largest `|Pr(ŷ=1 | y, s) - Pr(ŷ=1 | y, s')|` over labels and group pairs.
pub fn eqodds_violation(table: &JointTable, h: &[f64]) -> f64 {
    let rates = classifier_rates(table, h);
    let mut worst: f64 = 0.0;
    for y in 0..2 {
        let present: Vec<f64> = rates.iter().filter_map(|r| r[y]).collect();
        for (i, a) in present.iter().enumerate() {
            for b in &present[i + 1..] {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_table() -> JointTable {
        let mut t = JointTable::zeros(vec![0, 1], vec!["a".into(), "b".into()]);
        t.set(0, 0, 1, 0.3);
        t.set(0, 1, 0, 0.2);
        t.set(1, 0, 0, 0.25);
        t.set(1, 1, 1, 0.25);
        t
    }

    #[test]
    fn rejects_non_distribution() {
        let t = JointTable::zeros(vec![0, 1], vec!["a".into()]);
        assert!(brute_force_fair_optimal(&t, 0.0).is_err());
    }

    #[test]
    fn constant_classifier_always_feasible() {
        let f = brute_force_fair_optimal(&two_point_table(), 0.0).unwrap();
        // Both constant classifiers are fair; the majority label has mass 0.55.
        assert!(f.accuracy >= 0.55 - 1e-12);
    }

    #[test]
    fn remap_preserves_mass() {
        let t = two_point_table().remap(vec!["z".into()], |_| vec![(0, 1.0)]);
        assert!((t.total() - 1.0).abs() < 1e-15);
        assert!((t.label_group_mass(0, 1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn optimum_respects_epsilon() {
        let t = two_point_table();
        for eps in [0.0, 0.1, 0.5] {
            let f = brute_force_fair_optimal(&t, eps).unwrap();
            assert!(eqodds_violation(&t, &f.classifier) <= eps + 1e-9);
        }
    }

    #[test]
    fn vacuous_epsilon_gives_bayes_accuracy() {
        let t = two_point_table();
        let bayes: f64 = (0..2).map(|x| (0..2).map(|g| t.get(g, x, 0)).sum::<f64>().max((0..2).map(|g| t.get(g, x, 1)).sum())).sum();
        assert!((brute_force_fair_optimal(&t, 1.0).unwrap().accuracy - bayes).abs() < 1e-9);
    }
}
