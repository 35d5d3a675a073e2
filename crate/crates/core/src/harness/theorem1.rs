//! Exact accuracy loss from imputation on the three-point construction.

use std::fmt;

use crate::error::Result;
use crate::metrics::{binary_entropy, brute_force_fair_optimal, mutual_information};
use crate::missingness::{impute_table, Theorem1Distribution, X_NA};

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub alpha: f64,
    pub q0: f64,
    pub epsilon: f64,
    /// Best fair accuracy with missingness visible.
    pub f_original: f64,
    /// `(lambda, best fair accuracy)` after imputing `NA -> 1` with
    /// probability `lambda` (so `0` and `1` are the deterministic choices).
    pub imputed: Vec<(f64, f64)>,
    pub f_imputed_best: f64,
    /// Plug-in `I(M; Y)` on the exact table, in bits.
    pub mi_my: f64,
    pub binary_entropy: f64,
}

impl Theorem1Report {
    pub fn gap(&self) -> f64 {
        self.f_original - self.f_imputed_best
    }
}

/// Mixture weights `0, 0.1, ..., 1`.
pub fn mixture_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

pub fn theorem1_report(alpha: f64, q0: f64, epsilon: f64) -> Result<Theorem1Report> {
    let dist = Theorem1Distribution::symmetric(alpha, q0)?;
    let table = dist.exact_table();
    let f_original = brute_force_fair_optimal(&table, epsilon)?.accuracy;
    let imputed = mixture_grid()
        .into_iter()
        .map(|l| Ok((l, brute_force_fair_optimal(&impute_table(&table, l), epsilon)?.accuracy)))
        .collect::<Result<Vec<_>>>()?;
    let f_imputed_best = imputed.iter().map(|&(_, f)| f).fold(f64::NEG_INFINITY, f64::max);
    let mi_my = mutual_information(&table.joint_with_label(|x| x == X_NA));
    Ok(Theorem1Report {
        alpha: dist.alpha(),
        q0,
        epsilon,
        f_original,
        imputed,
        f_imputed_best,
        mi_my,
        binary_entropy: binary_entropy(dist.alpha()),
    })
}

impl fmt::Display for Theorem1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha = {:.6}, q0 = {:.6}, epsilon = {:.6}", self.alpha, self.q0, self.epsilon)?;
        writeln!(f, "F(original)       = {:.6}", self.f_original)?;
        for (l, v) in &self.imputed {
            writeln!(f, "F(imputed, P(NA->1) = {l:.1}) = {v:.6}")?;
        }
        writeln!(f, "F(imputed, best)  = {:.6}", self.f_imputed_best)?;
        writeln!(f, "gap               = {:.6}", self.gap())?;
        writeln!(f, "I(M;Y)            = {:.6} bits", self.mi_my)?;
        write!(f, "g(alpha)          = {:.6} bits", self.binary_entropy)
    }
}
