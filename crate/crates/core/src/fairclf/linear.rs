//! Logistic regression trained by full-batch gradient descent.

use std::fmt::Write as _;

use crate::encode::EncodedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// L2 weight on `w` (the bias is not penalized).
    pub l2: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls to this value.
    pub tolerance: f64,
    pub initial_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { l2: 1e-4, max_iters: 5000, tolerance: 1e-6, initial_step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Threshold on the sigmoid score.
    pub threshold: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim], bias: 0.0, threshold: 0.5 }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.score(row) >= self.threshold)
    }

    pub fn scores(&self, enc: &EncodedDataset) -> Vec<f64> {
        enc.rows().map(|r| self.score(r)).collect()
    }

    pub fn predictions(&self, enc: &EncodedDataset) -> Vec<u8> {
        enc.rows().map(|r| self.predict(r)).collect()
    }

    /// One `tag value` line per weight, then bias and threshold.
    pub fn to_text(&self, enc_columns: &[crate::encode::Column]) -> String {
        let mut s = String::new();
        for (c, w) in enc_columns.iter().zip(&self.weights) {
            let _ = writeln!(s, "{c} {w:e}");
        }
        let _ = writeln!(s, "bias {:e}", self.bias);
        let _ = writeln!(s, "threshold {:e}", self.threshold);
        s
    }

    /// Inverse of [`LinearModel::to_text`]; column tags are not checked.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut model = LinearModel::zeros(0);
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (tag, value) = line
                .rsplit_once(' ')
                .ok_or_else(|| Error::Parse { row: i + 1, message: format!("expected `tag value`, got `{line}`") })?;
            let v: f64 = value
                .parse()
                .map_err(|_| Error::Parse { row: i + 1, message: format!("bad number `{value}`") })?;
            match tag {
                "bias" => model.bias = v,
                "threshold" => model.threshold = v,
                _ => model.weights.push(v),
            }
        }
        Ok(model)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smooth objective over the packed parameter vector `[w..., b]`.
pub trait Objective {
    fn dim(&self) -> usize;
    /// Returns the value and writes the gradient into `grad`.
    fn eval(&self, params: &[f64], grad: &mut [f64]) -> f64;
}

/// Mean logistic loss plus `l2/2 * |w|^2`.
pub struct LogisticObjective<'a> {
    pub data: &'a EncodedDataset,
    pub l2: f64,
}

impl LogisticObjective<'_> {
    /// Adds the gradient with respect to `z_i` of the unscaled loss sum to
    /// `dz` and returns the loss sum.
    pub(crate) fn loss_and_dz(&self, params: &[f64], dz: &mut [f64], z: &mut [f64]) -> f64 {
        let d = self.data.n_cols();
        let (w, b) = (&params[..d], params[d]);
        let mut total = 0.0;
        for (i, row) in self.data.rows().enumerate() {
            let zi = dot(w, row) + b;
            z[i] = zi;
            let y = f64::from(self.data.labels[i]);
            total += softplus(zi) - y * zi;
            dz[i] = sigmoid(zi) - y;
        }
        total
    }
}

/// Back-propagates per-row `dL/dz` into `grad`, then adds the L2 term.
pub(crate) fn accumulate(data: &EncodedDataset, dz: &[f64], l2: f64, params: &[f64], grad: &mut [f64]) {
    let d = data.n_cols();
    grad.iter_mut().for_each(|g| *g = 0.0);
    for (row, &g) in data.rows().zip(dz) {
        if g == 0.0 {
            continue;
        }
        for (acc, x) in grad[..d].iter_mut().zip(row) {
            *acc += g * x;
        }
        grad[d] += g;
    }
    for j in 0..d {
        grad[j] += l2 * params[j];
    }
}

pub(crate) fn l2_term(l2: f64, params: &[f64], d: usize) -> f64 {
    0.5 * l2 * params[..d].iter().map(|w| w * w).sum::<f64>()
}

impl Objective for LogisticObjective<'_> {
    fn dim(&self) -> usize {
        self.data.n_cols() + 1
    }

    fn eval(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.data.n_rows();
        let d = self.data.n_cols();
        let mut dz = vec![0.0; n];
        let mut z = vec![0.0; n];
        let inv = 1.0 / n as f64;
        let total = self.loss_and_dz(params, &mut dz, &mut z);
        dz.iter_mut().for_each(|v| *v *= inv);
        accumulate(self.data, &dz, self.l2, params, grad);
        total * inv + l2_term(self.l2, params, d)
    }
}

/// Result of a descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub params: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Gradient descent with Armijo backtracking. The step grows by 2 after an
/// accepted move and halves until the sufficient-decrease test passes.
pub fn minimize(obj: &dyn Objective, start: Vec<f64>, settings: &OptimizerSettings) -> Minimum {
    let mut x = start;
    let mut grad = vec![0.0; obj.dim()];
    let mut value = obj.eval(&x, &mut grad);
    let mut gnorm = norm(&grad);
    let mut step = settings.initial_step;
    let mut trial = vec![0.0; x.len()];
    let mut trial_grad = vec![0.0; x.len()];
    let mut iterations = 0;
    while iterations < settings.max_iters && gnorm > settings.tolerance {
        let g2 = gnorm * gnorm;
        let mut accepted = false;
        while step > 1e-20 {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&grad) {
                *t = xi - step * gi;
            }
            let v = obj.eval(&trial, &mut trial_grad);
            if v.is_finite() && v <= value - 0.5 * step * g2 {
                accepted = true;
                value = v;
                std::mem::swap(&mut x, &mut trial);
                std::mem::swap(&mut grad, &mut trial_grad);
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        gnorm = norm(&grad);
        step = (step * 2.0).min(1e6);
    }
    Minimum { params: x, value, grad_norm: gnorm, iterations }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Zero weights with the bias at the log-odds of the positive rate (clamped
/// away from 0 and 1 so single-label data stays finite).
pub(crate) fn initial_params(enc: &EncodedDataset) -> Vec<f64> {
    let n = enc.n_rows().max(1) as f64;
    let rate = (enc.labels.iter().filter(|&&y| y == 1).count() as f64 / n).clamp(1e-6, 1.0 - 1e-6);
    let mut p = vec![0.0; enc.n_cols() + 1];
    p[enc.n_cols()] = (rate / (1.0 - rate)).ln();
    p
}

pub(crate) fn unpack(params: Vec<f64>) -> LinearModel {
    let mut weights = params;
    let bias = weights.pop().unwrap_or(0.0);
    LinearModel { weights, bias, threshold: 0.5 }
}

pub(crate) fn check_trainable(enc: &EncodedDataset) -> Result<()> {
    if enc.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    enc.check_finite()?;
    let pos = enc.labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == enc.n_rows() {
        return Err(Error::SingleLabel);
    }
    Ok(())
}

/// L2-regularized logistic regression.
pub fn train_logreg(enc: &EncodedDataset, settings: &OptimizerSettings) -> Result<LinearModel> {
    check_trainable(enc)?;
    let obj = LogisticObjective { data: enc, l2: settings.l2 };
    let min = minimize(&obj, initial_params(enc), settings);
    log::debug!("logreg: {} iterations, |grad| = {:.3e}", min.iterations, min.grad_norm);
    Ok(unpack(min.params))
}

/// `min_w sum_i loss_i + l2/2 |w|^2` on `enc`, fitted model included. Works
/// on single-label data (the optimum then drifts toward the boundary).
pub(crate) fn minimized_sum_loss(enc: &EncodedDataset, l2: f64, settings: &OptimizerSettings) -> (f64, LinearModel) {
    let n = enc.n_rows() as f64;
    let obj = LogisticObjective { data: enc, l2: l2 / n };
    let min = minimize(&obj, initial_params(enc), settings);
    (min.value * n, unpack(min.params))
}

/// Unregularized summed logistic loss of `model` on `enc`.
pub(crate) fn sum_loss(model: &LinearModel, enc: &EncodedDataset) -> f64 {
    enc.rows()
        .zip(&enc.labels)
        .map(|(r, &y)| {
            let z = model.decision(r);
            softplus(z) - f64::from(y) * z
        })
        .sum()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::encode::Column;
    use rand::Rng as _;

    pub(crate) fn toy(rows: Vec<Vec<f64>>, labels: Vec<u8>, groups: Vec<u32>) -> EncodedDataset {
        let d = rows[0].len();
        EncodedDataset::new((0..d).map(Column::Original).collect(), rows, labels, groups).unwrap()
    }

    /// Largest relative error between the analytic and a central-difference
    /// gradient.
    pub(crate) fn gradient_error(obj: &dyn Objective, at: &[f64]) -> f64 {
        let mut grad = vec![0.0; obj.dim()];
        obj.eval(at, &mut grad);
        let mut scratch = vec![0.0; obj.dim()];
        let mut worst: f64 = 0.0;
        for j in 0..at.len() {
            let h = 1e-6 * at[j].abs().max(1.0);
            let (mut up, mut dn) = (at.to_vec(), at.to_vec());
            up[j] += h;
            dn[j] -= h;
            let fd = (obj.eval(&up, &mut scratch) - obj.eval(&dn, &mut scratch)) / (2.0 * h);
            let rel = (fd - grad[j]).abs() / fd.abs().max(grad[j].abs()).max(1e-3);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn separable_line_is_learned() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![f64::from(i % 2)]).collect();
        let labels: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let enc = toy(rows, labels.clone(), vec![0; 200]);
        let m = train_logreg(&enc, &OptimizerSettings::default()).unwrap();
        let acc = m.predictions(&enc).iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / 200.0;
        assert!(acc >= 0.99);
    }

    #[test]
    fn zero_iterations_predicts_majority() {
        let labels = vec![1, 1, 1, 0];
        let enc = toy(vec![vec![0.3], vec![-1.0], vec![2.0], vec![0.5]], labels, vec![0; 4]);
        let s = OptimizerSettings { max_iters: 0, ..Default::default() };
        let m = train_logreg(&enc, &s).unwrap();
        assert_eq!(m.weights, vec![0.0]);
        assert_eq!(m.predictions(&enc), vec![1, 1, 1, 1]);
    }

    #[test]
    fn single_label_rejected() {
        let enc = toy(vec![vec![1.0], vec![2.0]], vec![1, 1], vec![0, 0]);
        assert!(matches!(train_logreg(&enc, &OptimizerSettings::default()), Err(Error::SingleLabel)));
    }

    #[test]
    fn non_finite_rejected() {
        let enc = toy(vec![vec![f64::NAN], vec![2.0]], vec![0, 1], vec![0, 0]);
        assert!(matches!(train_logreg(&enc, &OptimizerSettings::default()), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = crate::rng::seeded(5);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let labels: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
        let enc = toy(rows, labels, vec![0; 40]);
        let obj = LogisticObjective { data: &enc, l2: 0.1 };
        for _ in 0..20 {
            let at: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            assert!(gradient_error(&obj, &at) <= 1e-5);
        }
    }

    #[test]
    fn text_round_trip() {
        let m = LinearModel { weights: vec![0.25, -1.5], bias: 0.125, threshold: 0.5 };
        let cols = [Column::Original(0), Column::Indicator(0)];
        assert_eq!(LinearModel::from_text(&m.to_text(&cols)).unwrap(), m);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-9);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
