//! Randomized equalized-odds post-processing for two groups.
//!
//! Each group `s` gets flip probabilities `f[s][yhat]`: a base prediction
//! `yhat` is flipped with probability `f[s][yhat]`. Rates after mixing are
//! linear in the four flips, so the error-minimizing feasible choice is a
//! vertex of a 4-dimensional polytope and is found by enumeration.

use std::collections::BTreeMap;

use rand::Rng as _;

use crate::data::{Dataset, GroupId};
use crate::error::{Error, Result};
use crate::lp::vertex_enumerate;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PostprocessRates {
    pub groups: [GroupId; 2],
    /// `flip[position of s][yhat]`.
    pub flip: [[f64; 2]; 2],
}

impl PostprocessRates {
    pub fn identity(groups: [GroupId; 2]) -> Self {
        Self { groups, flip: [[0.0; 2]; 2] }
    }

    /// `Pr(final = 1)` for a row of `group` whose base prediction is `base`.
    /// Groups not seen at fit time pass through unchanged.
    pub fn positive_probability(&self, group: GroupId, base: u8) -> f64 {
        let b = f64::from(base);
        match self.groups.iter().position(|&g| g == group) {
            Some(p) => {
                let f = self.flip[p][base as usize];
                b * (1.0 - f) + (1.0 - b) * f
            }
            None => b,
        }
    }

    pub fn apply(&self, group: GroupId, base: u8, rng: &mut Rng) -> u8 {
        let p = self.positive_probability(group, base);
        u8::from(rng.random::<f64>() < p)
    }
}

/// Fits flips on `scores` thresholded at 0.5 so that post-mixing FPR and FNR
/// gaps are at most `epsilon` on the fitting data, with minimal expected
/// error and, among optima, minimal total flip mass.
pub fn postprocess_eqodds_raw(scores: &[f64], labels: &[u8], groups: &[GroupId], epsilon: f64) -> Result<PostprocessRates> {
    if scores.len() != labels.len() || labels.len() != groups.len() {
        return Err(Error::Dimension { expected: labels.len(), found: scores.len() });
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::Parameter(format!("score {s} outside [0, 1]")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Parameter(format!("epsilon {epsilon} < 0")));
    }
    // (count, base positives) per (group, label).
    let mut cells: BTreeMap<GroupId, [(f64, f64); 2]> = BTreeMap::new();
    for ((&s, &y), &g) in scores.iter().zip(labels).zip(groups) {
        let c = &mut cells.entry(g).or_insert([(0.0, 0.0); 2])[y as usize];
        c.0 += 1.0;
        c.1 += f64::from(u8::from(s >= 0.5));
    }
    if cells.len() != 2 {
        return Err(Error::Parameter(format!("post-processing needs exactly 2 groups, found {}", cells.len())));
    }
    let ids: Vec<GroupId> = cells.keys().copied().collect();
    let n = scores.len() as f64;
    // a[p][y]: base positive rate; w[p][y]: cell mass.
    let mut a = [[0.0; 2]; 2];
    let mut w = [[0.0; 2]; 2];
    for (p, (g, c)) in cells.iter().enumerate() {
        for y in 0..2 {
            if c[y].0 == 0.0 {
                return Err(Error::cell(*g, y as u8, "is empty"));
            }
            a[p][y] = c[y].1 / c[y].0;
            w[p][y] = c[y].0 / n;
        }
    }
    // Variables x = [f00, f01, f10, f11]; rate r[p][y] = a + (1-a) f[p][0] - a f[p][1].
    let var = |p: usize, yhat: usize| 2 * p + yhat;
    let rate_coef = |p: usize, y: usize| {
        let mut r = [0.0; 4];
        r[var(p, 0)] = 1.0 - a[p][y];
        r[var(p, 1)] = -a[p][y];
        r
    };
    // Maximize accuracy = const + sum w (2y-1) (rate terms).
    let mut c = [0.0; 4];
    for p in 0..2 {
        for y in 0..2 {
            let sign = if y == 1 { 1.0 } else { -1.0 };
            for (ci, ri) in c.iter_mut().zip(rate_coef(p, y)) {
                *ci += sign * w[p][y] * ri;
            }
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for v in 0..4 {
        let mut up = vec![0.0; 4];
        up[v] = 1.0;
        rows.push(up);
        rhs.push(1.0);
        let mut lo = vec![0.0; 4];
        lo[v] = -1.0;
        rows.push(lo);
        rhs.push(0.0);
    }
    for y in 0..2 {
        let (r0, r1) = (rate_coef(0, y), rate_coef(1, y));
        let gap_const = a[0][y] - a[1][y];
        let gap: Vec<f64> = r0.iter().zip(&r1).map(|(u, v)| u - v).collect();
        rows.push(gap.clone());
        rhs.push(epsilon - gap_const);
        rows.push(gap.iter().map(|v| -v).collect());
        rhs.push(epsilon + gap_const);
    }
    let sol = vertex_enumerate(&c, &rows, &rhs, Some(&[1.0; 4])).expect("flipping every prediction to 0 is feasible");
    let x = sol.x.iter().map(|v| v.clamp(0.0, 1.0)).collect::<Vec<_>>();
    Ok(PostprocessRates { groups: [ids[0], ids[1]], flip: [[x[0], x[1]], [x[2], x[3]]] })
}

pub fn postprocess_eqodds(scores: &[f64], ds: &Dataset, epsilon: f64) -> Result<PostprocessRates> {
    postprocess_eqodds_raw(scores, &ds.labels(), &ds.groups(), epsilon)
}
