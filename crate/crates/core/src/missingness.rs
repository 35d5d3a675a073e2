//! Synthetic data generators and MCAR/MAR/MNAR missingness injection.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::metrics::JointTable;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Mcar,
    Mar,
    Mnar,
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MCAR" => Ok(Mechanism::Mcar),
            "MAR" => Ok(Mechanism::Mar),
            "MNAR" => Ok(Mechanism::Mnar),
            _ => Err(Error::Spec(format!("unknown mechanism `{s}`"))),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Mcar => "MCAR",
            Mechanism::Mar => "MAR",
            Mechanism::Mnar => "MNAR",
        })
    }
}

/// The binary indicator `I` a missingness probability depends on.
///
/// A plain column indicator is 1 when the column value is non-zero. Columns
/// are looked up among the features, then the sensitive and label columns.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// No dependence (MCAR).
    None,
    /// The label column, regardless of its name.
    Label,
    Column(String),
    Below(String, f64),
    Above(String, f64),
}

impl Condition {
    fn column(&self) -> Option<&str> {
        match self {
            Condition::Column(c) | Condition::Below(c, _) | Condition::Above(c, _) => Some(c),
            _ => None,
        }
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let threshold = |name: &str, value: &str| -> Result<(String, f64)> {
            let v = value.trim().parse::<f64>().map_err(|_| Error::Spec(format!("bad threshold in `{s}`")))?;
            Ok((name.trim().to_string(), v))
        };
        Ok(match s.trim() {
            "none" | "N/A" => Condition::None,
            "label" => Condition::Label,
            t if t.contains('<') => {
                let (n, v) = t.split_once('<').unwrap();
                let (n, v) = threshold(n, v)?;
                Condition::Below(n, v)
            }
            t if t.contains('>') => {
                let (n, v) = t.split_once('>').unwrap();
                let (n, v) = threshold(n, v)?;
                Condition::Above(n, v)
            }
            t => Condition::Column(t.to_string()),
        })
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::None => f.write_str("none"),
            Condition::Label => f.write_str("label"),
            Condition::Column(c) => f.write_str(c),
            Condition::Below(c, v) => write!(f, "{c}<{v}"),
            Condition::Above(c, v) => write!(f, "{c}>{v}"),
        }
    }
}

/// Feature `target` goes missing with probability `p0` when the indicator is
/// 0 and `p1` when it is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingEntry {
    pub target: String,
    pub condition: Condition,
    pub p0: f64,
    pub p1: f64,
}

impl MissingEntry {
    pub fn new(target: impl Into<String>, condition: Condition, p0: f64, p1: f64) -> Self {
        Self { target: target.into(), condition, p0, p1 }
    }
}

/// Parses `target condition p0 p1`, whitespace separated.
impl FromStr for MissingEntry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let [target, cond, p0, p1] = parts.as_slice() else {
            return Err(Error::Spec(format!("expected `target condition p0 p1`, got `{s}`")));
        };
        let prob = |t: &str| t.parse::<f64>().map_err(|_| Error::Spec(format!("bad probability `{t}`")));
        Ok(MissingEntry::new(*target, cond.parse()?, prob(p0)?, prob(p1)?))
    }
}

impl fmt::Display for MissingEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.target, self.condition, self.p0, self.p1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessSpec {
    pub mechanism: Mechanism,
    pub entries: Vec<MissingEntry>,
}

impl MissingnessSpec {
    pub fn new(mechanism: Mechanism, entries: Vec<MissingEntry>) -> Result<Self> {
        let spec = Self { mechanism, entries };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks that do not need a dataset.
    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            for p in [e.p0, e.p1] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Spec(format!("probability {p} for `{}` outside [0, 1]", e.target)));
                }
            }
            if e.condition == Condition::None && e.p0 != e.p1 {
                return Err(Error::Spec(format!("unconditioned entry for `{}` needs p0 = p1", e.target)));
            }
            match self.mechanism {
                Mechanism::Mcar if e.condition != Condition::None || e.p0 != e.p1 => {
                    return Err(Error::Spec(format!("MCAR entry for `{}` must be unconditioned with p0 = p1", e.target)));
                }
                Mechanism::Mar if e.condition == Condition::Label => {
                    return Err(Error::Spec(format!("MAR entry for `{}` cannot condition on the label", e.target)));
                }
                Mechanism::Mar if e.condition.column() == Some(e.target.as_str()) => {
                    return Err(Error::Spec(format!("MAR entry for `{}` cannot condition on itself", e.target)));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

enum Source {
    Never,
    Feature(usize),
    Sensitive,
    Label,
}

struct ResolvedEntry {
    target: usize,
    source: Source,
    test: Box<dyn Fn(f64) -> bool>,
    p0: f64,
    p1: f64,
}

fn resolve(ds: &Dataset, spec: &MissingnessSpec) -> Result<Vec<ResolvedEntry>> {
    spec.validate()?;
    let mut out = Vec::new();
    for e in &spec.entries {
        let target = ds
            .feature_index(&e.target)
            .ok_or_else(|| Error::Spec(format!("target `{}` is not a feature", e.target)))?;
        let lookup = |name: &str| -> Result<Source> {
            if let Some(j) = ds.feature_index(name) {
                Ok(Source::Feature(j))
            } else if name == ds.sensitive_name() {
                Ok(Source::Sensitive)
            } else if name == ds.label_name() {
                Ok(Source::Label)
            } else {
                Err(Error::Spec(format!("unknown column `{name}`")))
            }
        };
        let (source, test): (Source, Box<dyn Fn(f64) -> bool>) = match &e.condition {
            Condition::None => (Source::Never, Box::new(|_| false)),
            Condition::Label => (Source::Label, Box::new(|v| v != 0.0)),
            Condition::Column(c) => (lookup(c)?, Box::new(|v| v != 0.0)),
            Condition::Below(c, t) => {
                let t = *t;
                (lookup(c)?, Box::new(move |v| v < t))
            }
            Condition::Above(c, t) => {
                let t = *t;
                (lookup(c)?, Box::new(move |v| v > t))
            }
        };
        if spec.mechanism == Mechanism::Mar && matches!(source, Source::Label) {
            return Err(Error::Spec(format!("MAR entry for `{}` conditions on the label column", e.target)));
        }
        if let Source::Feature(j) = source {
            if spec.mechanism == Mechanism::Mar && j == target {
                return Err(Error::Spec(format!("MAR entry for `{}` cannot condition on itself", e.target)));
            }
            if ds.samples().iter().any(|s| s.features[j].is_none()) {
                return Err(Error::Spec(format!("conditioning column `{}` has missing values", ds.feature_names()[j])));
            }
        }
        out.push(ResolvedEntry { target, source, test, p0: e.p0, p1: e.p1 });
    }
    Ok(out)
}

/// Hides targeted cells independently with the probability selected by each
/// row's indicator. Indicators are evaluated on the input before any masking.
pub fn inject_missing(ds: &Dataset, spec: &MissingnessSpec, seed: u64) -> Result<Dataset> {
    let entries = resolve(ds, spec)?;
    let indicators: Vec<Vec<bool>> = ds
        .samples()
        .iter()
        .map(|s| {
            entries
                .iter()
                .map(|e| match e.source {
                    Source::Never => false,
                    Source::Feature(j) => (e.test)(s.features[j].expect("checked observed")),
                    Source::Sensitive => (e.test)(s.sensitive as f64),
                    Source::Label => (e.test)(s.label as f64),
                })
                .collect()
        })
        .collect();

    let mut rng = seeded(seed);
    let samples = ds
        .samples()
        .iter()
        .zip(&indicators)
        .map(|(s, ind)| {
            let mut out = s.clone();
            for (e, &on) in entries.iter().zip(ind) {
                // One draw per (row, entry) keeps the stream aligned across inputs.
                let u: f64 = rng.random();
                if u < if on { e.p1 } else { e.p0 } {
                    out.features[e.target] = None;
                }
            }
            out
        })
        .collect();
    Ok(ds.with_samples(samples))
}

/// Two-feature dataset of 2400 rows: 1600 complete rows from four bivariate
/// normals and 800 rows with `X2` missing whose `X1` has the opposite
/// label-sign relation.
pub fn gen_synthetic(seed: u64) -> Dataset {
    let mut rng = seeded(seed);
    let present = Normal::new(0.0, 2.0f64.sqrt()).unwrap();
    let absent = Normal::new(0.0, 3.0f64.sqrt()).unwrap();
    let mut samples = Vec::with_capacity(2400);
    // (y, s, mean x1, mean x2, n)
    for (y, s, m1, m2, n) in [(1, 1, -3.0, -3.0, 400), (1, 0, -3.0, 3.0, 400), (0, 1, 3.0, -3.0, 400), (0, 0, 3.0, 3.0, 400)]
    {
        for _ in 0..n {
            let x1 = m1 + present.sample(&mut rng);
            let x2 = m2 + present.sample(&mut rng);
            samples.push(Sample::new(vec![Some(x1), Some(x2)], s, y));
        }
    }
    for (y, s, m1, n) in [(1, 1, 3.0, 100), (1, 0, 3.0, 300), (0, 1, -3.0, 100), (0, 0, -3.0, 300)] {
        for _ in 0..n {
            samples.push(Sample::new(vec![Some(m1 + absent.sample(&mut rng)), None], s, y));
        }
    }
    Dataset::new(vec!["X1".into(), "X2".into()], samples).expect("well-formed").with_column_names("S", "Y")
}

/// Parameters of [`gen_gaussian_classes`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClasses {
    pub n: usize,
    pub dimension: usize,
    /// Class means are `±separation / 2` on every feature.
    pub separation: f64,
    /// `Pr(Y = 1 | S = s)` for `s = 0, 1`.
    pub positive_rate: [f64; 2],
    /// Added to the mean of feature 1 for group 1.
    pub group_shift: f64,
}

impl Default for GaussianClasses {
    fn default() -> Self {
        Self { n: 4000, dimension: 5, separation: 0.5, positive_rate: [0.4, 0.6], group_shift: 0.5 }
    }
}

/// Complete dataset with unit-variance Gaussian features whose mean depends
/// on the label (all features) and the group (feature 1).
pub fn gen_gaussian_classes(params: &GaussianClasses, seed: u64) -> Dataset {
    let mut rng = seeded(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let samples = (0..params.n)
        .map(|_| {
            let s: u32 = u32::from(rng.random::<f64>() < 0.5);
            let y: u8 = u8::from(rng.random::<f64>() < params.positive_rate[s as usize]);
            let sign = if y == 1 { 0.5 } else { -0.5 };
            let x = (0..params.dimension)
                .map(|j| {
                    let shift = if j == 1 && s == 1 { params.group_shift } else { 0.0 };
                    Some(sign * params.separation + shift + noise.sample(&mut rng))
                })
                .collect();
            Sample::new(x, s, y)
        })
        .collect();
    let names = (0..params.dimension).map(|j| format!("x{j}")).collect();
    Dataset::new(names, samples).expect("well-formed")
}

/// Single-feature distribution on `{0, 1, NA}` in which the label is
/// determined by missingness, while any imputation of `NA` collapses it onto
/// an observed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Distribution {
    pub alpha_s: Vec<f64>,
    pub q_s: Vec<f64>,
}

/// Domain indices of [`Theorem1Distribution::exact_table`].
pub const X_ZERO: usize = 0;
pub const X_ONE: usize = 1;
pub const X_NA: usize = 2;

impl Theorem1Distribution {
    pub fn new(alpha_s: Vec<f64>, q_s: Vec<f64>) -> Result<Self> {
        if alpha_s.is_empty() || alpha_s.len() != q_s.len() {
            return Err(Error::Parameter("alpha_s and q_s must be non-empty and of equal length".into()));
        }
        if q_s.iter().any(|&q| q < 0.0) || (q_s.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter("group priors q_s must be non-negative and sum to 1".into()));
        }
        if alpha_s.iter().any(|&a| !(0.0..1.0).contains(&a)) {
            return Err(Error::Parameter("each alpha_s must lie in [0, 1)".into()));
        }
        let dist = Self { alpha_s, q_s };
        if dist.alpha() >= 1.0 / 3.0 {
            return Err(Error::Parameter(format!(
                "mixture alpha = {} violates the hypothesis alpha < 1/3",
                dist.alpha()
            )));
        }
        Ok(dist)
    }

    /// Symmetric two-group instance.
    pub fn symmetric(alpha: f64, q0: f64) -> Result<Self> {
        Self::new(vec![alpha, alpha], vec![q0, 1.0 - q0])
    }

    /// `alpha = sum_s alpha_s q_s`.
    pub fn alpha(&self) -> f64 {
        self.alpha_s.iter().zip(&self.q_s).map(|(a, q)| a * q).sum()
    }

    /// `Pr(Y=0, X=0 | s) = Pr(Y=0, X=1 | s) = (1 - alpha_s) / 2`,
    /// `Pr(Y=1, X=NA | s) = alpha_s`, every other cell zero.
    pub fn exact_table(&self) -> JointTable {
        let groups = (0..self.alpha_s.len() as u32).collect();
        let mut t = JointTable::zeros(groups, vec!["0".into(), "1".into(), "NA".into()]);
        for (g, (&a, &q)) in self.alpha_s.iter().zip(&self.q_s).enumerate() {
            t.set(g, X_ZERO, 0, q * (1.0 - a) / 2.0);
            t.set(g, X_ONE, 0, q * (1.0 - a) / 2.0);
            t.set(g, X_NA, 1, q * a);
        }
        t
    }

    /// `n` i.i.d. draws from [`Self::exact_table`] as a one-feature dataset.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let table = self.exact_table();
        let cells: Vec<_> = table.cells().filter(|c| c.3 > 0.0).collect();
        let mut rng = seeded(seed);
        let samples = (0..n)
            .map(|_| {
                let mut u: f64 = rng.random();
                let mut pick = cells[cells.len() - 1];
                for &c in &cells {
                    if u < c.3 {
                        pick = c;
                        break;
                    }
                    u -= c.3;
                }
                let (g, x, y, _) = pick;
                let value = match x {
                    X_ZERO => Some(0.0),
                    X_ONE => Some(1.0),
                    _ => None,
                };
                Sample::new(vec![value], g as u32, y)
            })
            .collect();
        Dataset::new(vec!["X".into()], samples).expect("well-formed")
    }
}

/// Table after imputing `NA -> 1` with probability `lambda` and `NA -> 0`
/// otherwise, on the domain `{0, 1}`.
pub fn impute_table(table: &JointTable, lambda: f64) -> JointTable {
    table.remap(vec!["0".into(), "1".into()], |x| match x {
        X_ZERO => vec![(0, 1.0)],
        X_ONE => vec![(1, 1.0)],
        _ => vec![(0, 1.0 - lambda), (1, lambda)],
    })
}

pub fn gen_theorem1(dist: &Theorem1Distribution, n: usize, seed: u64) -> Dataset {
    dist.sample(n, seed)
}
