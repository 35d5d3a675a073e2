//! Imputation mechanisms mapping masked features to complete features.

use std::fmt;
use std::str::FromStr;

use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::linalg::ridge;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImputeMethod {
    Zero,
    Mean,
    Knn { k: usize },
    Iterative { rounds: usize, lambda: f64 },
}

impl ImputeMethod {
    pub fn iterative() -> Self {
        ImputeMethod::Iterative { rounds: 10, lambda: 1e-3 }
    }
}

/// `zero`, `mean`, `knn:K`, `iterative` or `iterative:ROUNDS:LAMBDA`.
impl FromStr for ImputeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Parameter(format!("bad imputer `{s}`"));
        match parts.as_slice() {
            ["zero"] => Ok(ImputeMethod::Zero),
            ["mean"] => Ok(ImputeMethod::Mean),
            ["knn"] => Ok(ImputeMethod::Knn { k: 5 }),
            ["knn", k] => Ok(ImputeMethod::Knn { k: k.parse().map_err(|_| bad())? }),
            ["iterative"] => Ok(ImputeMethod::iterative()),
            ["iterative", r, l] => Ok(ImputeMethod::Iterative {
                rounds: r.parse().map_err(|_| bad())?,
                lambda: l.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ImputeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImputeMethod::Zero => f.write_str("zero"),
            ImputeMethod::Mean => f.write_str("mean"),
            ImputeMethod::Knn { k } => write!(f, "knn:{k}"),
            ImputeMethod::Iterative { rounds, lambda } => write!(f, "iterative:{rounds}:{lambda}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct FeatureModel {
    intercept: f64,
    /// Coefficients on all other features, in index order.
    coef: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Fitted {
    Zero,
    Mean(Vec<f64>),
    Knn { k: usize, train: Vec<Vec<Option<f64>>>, means: Vec<f64> },
    Iterative { means: Vec<f64>, rounds: Vec<Vec<FeatureModel>> },
}

/// Fitted imputation state. Zero imputation needs no fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputer {
    method: ImputeMethod,
    fitted: Option<Fitted>,
    /// Largest absolute change of an imputed training cell per round
    /// (iterative only).
    pub round_changes: Vec<f64>,
}

impl Imputer {
    pub fn new(method: ImputeMethod) -> Self {
        let fitted = matches!(method, ImputeMethod::Zero).then_some(Fitted::Zero);
        Self { method, fitted, round_changes: Vec::new() }
    }

    pub fn method(&self) -> ImputeMethod {
        self.method
    }

    pub fn fit_new(method: ImputeMethod, train: &Dataset) -> Result<Self> {
        let mut imp = Self::new(method);
        imp.fit(train)?;
        Ok(imp)
    }

    pub fn fit(&mut self, train: &Dataset) -> Result<()> {
        if let ImputeMethod::Zero = self.method {
            return Ok(());
        }
        let means = feature_means(train)?;
        self.fitted = Some(match self.method {
            ImputeMethod::Zero => unreachable!(),
            ImputeMethod::Mean => Fitted::Mean(means),
            ImputeMethod::Knn { k } => {
                if k == 0 || k > train.len() {
                    return Err(Error::Parameter(format!("knn k = {k} must be in 1..={}", train.len())));
                }
                Fitted::Knn { k, train: train.samples().iter().map(|s| s.features.clone()).collect(), means }
            }
            ImputeMethod::Iterative { rounds, lambda } => {
                let (models, changes) = fit_iterative(train, &means, rounds, lambda);
                for w in changes.windows(2) {
                    if w[1] > w[0] * (1.0 + 1e-6) + 1e-9 {
                        log::warn!("iterative imputation change grew from {} to {}", w[0], w[1]);
                    }
                }
                self.round_changes = changes;
                Fitted::Iterative { means, rounds: models }
            }
        });
        Ok(())
    }

    /// Fills every NA cell. Observed cells are copied unchanged.
    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        let fitted = self.fitted.as_ref().ok_or(Error::NotFitted)?;
        let rows: Vec<Vec<Option<f64>>> = ds.samples().iter().map(|s| s.features.clone()).collect();
        if let Some(r) = rows.iter().find(|r| r.len() != ds.dimension()) {
            return Err(Error::Dimension { expected: ds.dimension(), found: r.len() });
        }
        let filled = match fitted {
            Fitted::Zero => rows.iter().map(|r| r.iter().map(|v| v.unwrap_or(0.0)).collect()).collect(),
            Fitted::Mean(means) => fill_with(&rows, means),
            Fitted::Knn { k, train, means } => rows.iter().map(|r| knn_fill(r, train, *k, means)).collect(),
            Fitted::Iterative { means, rounds } => {
                let mut cur = fill_with(&rows, means);
                for models in rounds {
                    iterate_round(&rows, &mut cur, models);
                }
                cur
            }
        };
        let samples = ds
            .samples()
            .iter()
            .zip(filled)
            .map(|(s, x)| Sample::new(x.into_iter().map(Some).collect(), s.sensitive, s.label))
            .collect();
        Ok(ds.with_samples(samples))
    }

    /// Complete feature rows (same values as [`Self::transform`]).
    pub fn transform_rows(&self, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
        Ok(self.transform(ds)?.samples().iter().map(|s| s.features.iter().map(|v| v.unwrap()).collect()).collect())
    }
}

fn feature_means(ds: &Dataset) -> Result<Vec<f64>> {
    let d = ds.dimension();
    let mut sum = vec![0.0; d];
    let mut count = vec![0usize; d];
    for s in ds.samples() {
        for (j, v) in s.features.iter().enumerate() {
            if let Some(x) = v {
                sum[j] += x;
                count[j] += 1;
            }
        }
    }
    (0..d)
        .map(|j| {
            if count[j] == 0 {
                Err(Error::EmptyFeature(ds.feature_names()[j].clone()))
            } else {
                Ok(sum[j] / count[j] as f64)
            }
        })
        .collect()
}

fn fill_with(rows: &[Vec<Option<f64>>], values: &[f64]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().zip(values).map(|(v, m)| v.unwrap_or(*m)).collect()).collect()
}

/// Squared partial Euclidean distance over mutually observed coordinates,
/// rescaled by `d / used`. `None` when no coordinate is shared.
pub fn partial_distance(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut used = 0usize;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            sum += (x - y) * (x - y);
            used += 1;
        }
    }
    (used > 0).then(|| sum * a.len() as f64 / used as f64)
}

fn knn_fill(row: &[Option<f64>], train: &[Vec<Option<f64>>], k: usize, means: &[f64]) -> Vec<f64> {
    if row.iter().all(Option::is_some) {
        return row.iter().map(|v| v.unwrap()).collect();
    }
    let mut dist: Vec<(f64, usize)> =
        train.iter().enumerate().filter_map(|(i, t)| partial_distance(row, t).map(|d| (d, i))).collect();
    // Ties broken by training-row index.
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    row.iter()
        .enumerate()
        .map(|(j, v)| {
            v.unwrap_or_else(|| {
                let donors: Vec<f64> = dist.iter().filter_map(|&(_, i)| train[i][j]).take(k).collect();
                if donors.is_empty() {
                    means[j]
                } else {
                    donors.iter().sum::<f64>() / donors.len() as f64
                }
            })
        })
        .collect()
}

fn others(row: &[f64], j: usize) -> Vec<f64> {
    row.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect()
}

fn predict(m: &FeatureModel, row: &[f64], j: usize) -> f64 {
    m.intercept + m.coef.iter().zip(others(row, j)).map(|(c, v)| c * v).sum::<f64>()
}

/// One round-robin pass: refresh the missing cells of each feature in index
/// order from the round's regression on the other (current) features.
fn iterate_round(rows: &[Vec<Option<f64>>], cur: &mut [Vec<f64>], models: &[FeatureModel]) -> f64 {
    let mut change = 0.0f64;
    for (j, m) in models.iter().enumerate() {
        for (orig, row) in rows.iter().zip(cur.iter_mut()) {
            if orig[j].is_none() {
                let v = predict(m, row, j);
                change = change.max((v - row[j]).abs());
                row[j] = v;
            }
        }
    }
    change
}

fn fit_iterative(train: &Dataset, means: &[f64], rounds: usize, lambda: f64) -> (Vec<Vec<FeatureModel>>, Vec<f64>) {
    let rows: Vec<Vec<Option<f64>>> = train.samples().iter().map(|s| s.features.clone()).collect();
    let d = train.dimension();
    let mut cur = fill_with(&rows, means);
    let mut all = Vec::with_capacity(rounds);
    let mut changes = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut models = Vec::with_capacity(d);
        let mut change = 0.0f64;
        for j in 0..d {
            let observed: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][j].is_some()).collect();
            let design: Vec<Vec<f64>> = observed.iter().map(|&i| others(&cur[i], j)).collect();
            let target: Vec<f64> = observed.iter().map(|&i| cur[i][j]).collect();
            let (intercept, coef) = ridge(&design, &target, lambda);
            let m = FeatureModel { intercept, coef };
            for (orig, row) in rows.iter().zip(cur.iter_mut()) {
                if orig[j].is_none() {
                    let v = predict(&m, row, j);
                    change = change.max((v - row[j]).abs());
                    row[j] = v;
                }
            }
            models.push(m);
        }
        all.push(models);
        changes.push(change);
    }
    (all, changes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[&[Option<f64>]]) -> Dataset {
        let d = rows[0].len();
        let samples = rows.iter().enumerate().map(|(i, r)| Sample::new(r.to_vec(), (i % 2) as u32, 0)).collect();
        Dataset::new((0..d).map(|j| format!("f{j}")).collect(), samples).unwrap()
    }

    fn values(ds: &Dataset) -> Vec<Vec<f64>> {
        ds.samples().iter().map(|s| s.features.iter().map(|v| v.unwrap()).collect()).collect()
    }

    #[test]
    fn zero_fills_without_fit() {
        let data = ds(&[&[None, Some(1.5)]]);
        let out = Imputer::new(ImputeMethod::Zero).transform(&data).unwrap();
        assert_eq!(values(&out), vec![vec![0.0, 1.5]]);
    }

    #[test]
    fn mean_imputation() {
        let train = ds(&[&[Some(1.0)], &[Some(3.0)], &[None]]);
        let imp = Imputer::fit_new(ImputeMethod::Mean, &train).unwrap();
        assert_eq!(values(&imp.transform(&ds(&[&[None]])).unwrap()), vec![vec![2.0]]);
    }

    #[test]
    fn transform_before_fit() {
        let data = ds(&[&[None]]);
        assert!(matches!(Imputer::new(ImputeMethod::Mean).transform(&data), Err(Error::NotFitted)));
    }

    #[test]
    fn fully_missing_feature_named() {
        let train = ds(&[&[Some(1.0), None], &[Some(2.0), None]]);
        assert!(matches!(Imputer::fit_new(ImputeMethod::Mean, &train), Err(Error::EmptyFeature(n)) if n == "f1"));
    }

    #[test]
    fn knn_k_bounds() {
        let train = ds(&[&[Some(1.0)], &[Some(2.0)]]);
        assert!(Imputer::fit_new(ImputeMethod::Knn { k: 3 }, &train).is_err());
        assert!(Imputer::fit_new(ImputeMethod::Knn { k: 0 }, &train).is_err());
    }

    #[test]
    fn knn_copies_matching_neighbor() {
        let train = ds(&[
            &[Some(0.0), Some(0.0), Some(10.0)],
            &[Some(5.0), Some(5.0), Some(20.0)],
            &[Some(9.0), Some(1.0), Some(30.0)],
        ]);
        let imp = Imputer::fit_new(ImputeMethod::Knn { k: 1 }, &train).unwrap();
        let out = imp.transform(&ds(&[&[Some(5.0), Some(5.0), None]])).unwrap();
        assert_eq!(values(&out), vec![vec![5.0, 5.0, 20.0]]);
    }

    #[test]
    fn partial_distance_conventions() {
        let a = [Some(1.0), None, Some(3.0)];
        assert_eq!(partial_distance(&a, &a), Some(0.0));
        // One shared coordinate, difference 2, rescaled by 3/1.
        assert_eq!(partial_distance(&a, &[Some(3.0), Some(0.0), None]), Some(12.0));
        assert_eq!(partial_distance(&[None], &[Some(1.0)]), None);
    }

    #[test]
    fn iterative_learns_linear_relation() {
        let rows: Vec<Vec<Option<f64>>> = (0..40)
            .map(|i| {
                let x = i as f64 / 10.0;
                let y = 2.0 * x + 1.0;
                if i % 5 == 0 {
                    vec![Some(x), None]
                } else {
                    vec![Some(x), Some(y)]
                }
            })
            .collect();
        let refs: Vec<&[Option<f64>]> = rows.iter().map(Vec::as_slice).collect();
        let train = ds(&refs);
        let imp = Imputer::fit_new(ImputeMethod::iterative(), &train).unwrap();
        let out = imp.transform(&ds(&[&[Some(1.5), None]])).unwrap();
        assert!((values(&out)[0][1] - 4.0).abs() < 1e-3);
        assert_eq!(imp.round_changes.len(), 10);
        for w in imp.round_changes.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn every_method_completes_and_keeps_observed() {
        let train = ds(&[
            &[Some(1.0), None, Some(2.0)],
            &[Some(2.0), Some(1.0), None],
            &[None, Some(3.0), Some(1.0)],
            &[Some(4.0), Some(2.0), Some(0.0)],
        ]);
        for m in [ImputeMethod::Zero, ImputeMethod::Mean, ImputeMethod::Knn { k: 2 }, ImputeMethod::iterative()] {
            let imp = Imputer::fit_new(m, &train).unwrap();
            let out = imp.transform(&train).unwrap();
            assert_eq!(out.count_missing(), 0, "{m}");
            for (a, b) in train.samples().iter().zip(out.samples()) {
                for (x, y) in a.features.iter().zip(&b.features) {
                    if x.is_some() {
                        assert_eq!(x, y);
                    }
                }
            }
            assert_eq!(imp.transform(&out).unwrap(), out, "idempotence for {m}");
        }
    }

    #[test]
    fn method_strings() {
        for s in ["zero", "mean", "knn:3", "iterative:4:0.01"] {
            assert_eq!(s.parse::<ImputeMethod>().unwrap().to_string(), s);
        }
        assert!("median".parse::<ImputeMethod>().is_err());
    }
}
