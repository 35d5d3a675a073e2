//! Plain-text experiment configuration.
//!
//! ```text
//! [data]
//! source = synthetic
//!
//! [method]
//! name = clustering
//! k_min = 1
//!
//! [intervention]
//! kind = penalty
//!
//! [sweep]
//! tau = 0.01, 0.1, 1, 10, 100
//! repeats = 5
//!
//! [output]
//! dir = out
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fairclf::{EnsembleMode, Intervention, OptimizerSettings, PenaltyConfig, PenaltyConstraint};
use crate::impute::ImputeMethod;
use crate::missingness::{GaussianClasses, Mechanism, MissingEntry, MissingnessSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv { path: PathBuf, schema: PathBuf },
    Synthetic,
    Gaussian(GaussianClasses),
    /// `samples = None` means exact-table mode (no training).
    Theorem1 { alpha: f64, q0: f64, samples: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    ImputeThenClassify,
    Indicators,
    Affine,
    Clustering,
    FairMissBag,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::ImputeThenClassify => "impute-then-classify",
            MethodKind::Indicators => "indicators",
            MethodKind::Affine => "affine",
            MethodKind::Clustering => "clustering",
            MethodKind::FairMissBag => "fairmissbag",
        }
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            MethodKind::ImputeThenClassify,
            MethodKind::Indicators,
            MethodKind::Affine,
            MethodKind::Clustering,
            MethodKind::FairMissBag,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Parameter(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub kind: MethodKind,
    pub imputer: ImputeMethod,
    pub k_min: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Hold out 20% of training rows to score cluster splits.
    pub validation: bool,
    pub bags: usize,
    pub ensemble: EnsembleMode,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            kind: MethodKind::ImputeThenClassify,
            imputer: ImputeMethod::Zero,
            k_min: 1,
            alpha: 1.0,
            beta: 0.0,
            validation: false,
            bags: 10,
            ensemble: EnsembleMode::RandomPick,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterventionKind {
    None,
    Penalty,
    EqOdds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionConfig {
    pub kind: InterventionKind,
    pub constraint: PenaltyConstraint,
    pub tau: f64,
    pub epsilon: f64,
    pub optimizer: OptimizerSettings,
}

impl Default for InterventionConfig {
    fn default() -> Self {
        Self {
            kind: InterventionKind::None,
            constraint: PenaltyConstraint::MeanEqualizedOdds,
            tau: 1.0,
            epsilon: 0.0,
            optimizer: OptimizerSettings::default(),
        }
    }
}

impl InterventionConfig {
    pub fn build(&self) -> Intervention {
        match self.kind {
            InterventionKind::None => Intervention::None(self.optimizer),
            InterventionKind::Penalty => Intervention::Penalty(PenaltyConfig {
                tau: self.tau,
                constraint: self.constraint,
                optimizer: self.optimizer,
            }),
            InterventionKind::EqOdds => Intervention::EqOdds { epsilon: self.epsilon, optimizer: self.optimizer },
        }
    }
}

/// Keys that may carry a list of values in `[sweep]`.
pub const GRID_KEYS: &[&str] = &["tau", "epsilon", "alpha", "beta", "k_min", "bags", "imputer"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// In file order; the grid is their cartesian product.
    pub grid: Vec<(String, Vec<String>)>,
    pub repeats: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { grid: Vec::new(), repeats: 10, test_fraction: 0.3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub scale: bool,
    pub missingness: Option<MissingnessSpec>,
    pub inject_before_split: bool,
    pub method: MethodConfig,
    pub intervention: InterventionConfig,
    pub sweep: SweepConfig,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(data: DataSource) -> Self {
        Self {
            data,
            scale: false,
            missingness: None,
            inject_before_split: false,
            method: MethodConfig::default(),
            intervention: InterventionConfig::default(),
            sweep: SweepConfig::default(),
            output: None,
        }
    }

    /// Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        Parser::default().run(text, base)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Semantic checks beyond syntax: files exist, grid values parse, etc.
    pub fn validate(&self) -> Result<()> {
        if let DataSource::Csv { path, schema } = &self.data {
            for p in [path, schema] {
                if !p.exists() {
                    return Err(Error::Io {
                        path: p.clone(),
                        source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                    });
                }
            }
        }
        if self.sweep.repeats == 0 {
            return Err(Error::Parameter("repeats must be at least 1".into()));
        }
        if !(self.sweep.test_fraction > 0.0 && self.sweep.test_fraction < 1.0) {
            return Err(Error::Parameter(format!("test_fraction {} outside (0, 1)", self.sweep.test_fraction)));
        }
        for (k, values) in &self.sweep.grid {
            if values.is_empty() {
                return Err(Error::Parameter(format!("grid `{k}` is empty")));
            }
        }
        for point in super::grid_points(&self.sweep) {
            super::apply_point(self, &point)?;
        }
        if let Some(spec) = &self.missingness {
            spec.validate()?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Parser {
    section: String,
    mechanism: Option<Mechanism>,
    entries: Vec<MissingEntry>,
    source: Option<String>,
    kv_data: Vec<(usize, String, String)>,
}

fn num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config { line, message: format!("bad value `{value}` for `{key}`") })
}

fn flag(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config { line, message: format!("`{key}` expects true or false") }),
    }
}

impl Parser {
    fn run(mut self, text: &str, base: &Path) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(DataSource::Synthetic);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !["data", "missingness", "method", "intervention", "sweep", "output"].contains(&name) {
                    return Err(Error::Config { line, message: format!("unknown section `{name}`") });
                }
                self.section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config { line, message: format!("expected `key = value`, got `{content}`") })?;
            self.assign(&mut cfg, line, key, value, base)?;
        }
        cfg.data = self.build_source(base)?;
        if let Some(mechanism) = self.mechanism {
            cfg.missingness = Some(MissingnessSpec::new(mechanism, std::mem::take(&mut self.entries))?);
        } else if !self.entries.is_empty() {
            return Err(Error::Config { line: 0, message: "missingness entries without a mechanism".into() });
        }
        Ok(cfg)
    }

    fn assign(&mut self, cfg: &mut ExperimentConfig, line: usize, key: &str, value: &str, base: &Path) -> Result<()> {
        let unknown = || Error::Config { line, message: format!("unknown key `{key}` in [{}]", self.section) };
        match self.section.as_str() {
            "data" => match key {
                "source" => self.source = Some(value.to_string()),
                "scale" => cfg.scale = flag(line, key, value)?,
                "path" | "schema" | "alpha" | "q0" | "samples" | "n" | "dimension" | "separation" | "group_shift"
                | "positive_rate_0" | "positive_rate_1" => self.kv_data.push((line, key.into(), value.into())),
                _ => return Err(unknown()),
            },
            "missingness" => match key {
                "mechanism" => self.mechanism = Some(value.parse()?),
                "entry" => self.entries.push(value.parse()?),
                "inject_before_split" => cfg.inject_before_split = flag(line, key, value)?,
                _ => return Err(unknown()),
            },
            "method" => {
                let m = &mut cfg.method;
                match key {
                    "name" => m.kind = value.parse()?,
                    "imputer" => m.imputer = value.parse()?,
                    "k_min" => m.k_min = num(line, key, value)?,
                    "alpha" => m.alpha = num(line, key, value)?,
                    "beta" => m.beta = num(line, key, value)?,
                    "validation" => m.validation = flag(line, key, value)?,
                    "bags" => m.bags = num(line, key, value)?,
                    "ensemble" => {
                        m.ensemble = match value {
                            "random-pick" => EnsembleMode::RandomPick,
                            "score-average" => EnsembleMode::ScoreAverage,
                            _ => return Err(Error::Config { line, message: format!("unknown ensemble `{value}`") }),
                        }
                    }
                    _ => return Err(unknown()),
                }
            }
            "intervention" => {
                let iv = &mut cfg.intervention;
                match key {
                    "kind" => {
                        iv.kind = match value {
                            "none" => InterventionKind::None,
                            "penalty" => InterventionKind::Penalty,
                            "eqodds" => InterventionKind::EqOdds,
                            _ => return Err(Error::Config { line, message: format!("unknown intervention `{value}`") }),
                        }
                    }
                    "constraint" => iv.constraint = value.parse()?,
                    "tau" => iv.tau = num(line, key, value)?,
                    "epsilon" => iv.epsilon = num(line, key, value)?,
                    "l2" => iv.optimizer.l2 = num(line, key, value)?,
                    "max_iters" => iv.optimizer.max_iters = num(line, key, value)?,
                    "tolerance" => iv.optimizer.tolerance = num(line, key, value)?,
                    _ => return Err(unknown()),
                }
            }
            "sweep" => match key {
                "repeats" => cfg.sweep.repeats = num(line, key, value)?,
                "test_fraction" => cfg.sweep.test_fraction = num(line, key, value)?,
                "seed" => cfg.sweep.seed = num(line, key, value)?,
                k if GRID_KEYS.contains(&k) => {
                    let values: Vec<String> =
                        value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
                    if values.is_empty() {
                        return Err(Error::Config { line, message: format!("grid `{k}` is empty") });
                    }
                    cfg.sweep.grid.retain(|(existing, _)| existing != k);
                    cfg.sweep.grid.push((k.to_string(), values));
                }
                _ => return Err(unknown()),
            },
            "output" => match key {
                "dir" => cfg.output = Some(base.join(value)),
                _ => return Err(unknown()),
            },
            _ => return Err(Error::Config { line, message: "key outside of any section".into() }),
        }
        Ok(())
    }

    fn build_source(&self, base: &Path) -> Result<DataSource> {
        let get = |k: &str| self.kv_data.iter().rev().find(|(_, key, _)| key == k).map(|(l, _, v)| (*l, v.as_str()));
        let req = |k: &str| get(k).ok_or_else(|| Error::Config { line: 0, message: format!("[data] needs `{k}`") });
        match self.source.as_deref().unwrap_or("synthetic") {
            "synthetic" => Ok(DataSource::Synthetic),
            "csv" => Ok(DataSource::Csv { path: base.join(req("path")?.1), schema: base.join(req("schema")?.1) }),
            "gaussian" => {
                let mut g = GaussianClasses::default();
                if let Some((l, v)) = get("n") {
                    g.n = num(l, "n", v)?;
                }
                if let Some((l, v)) = get("dimension") {
                    g.dimension = num(l, "dimension", v)?;
                }
                if let Some((l, v)) = get("separation") {
                    g.separation = num(l, "separation", v)?;
                }
                if let Some((l, v)) = get("group_shift") {
                    g.group_shift = num(l, "group_shift", v)?;
                }
                if let Some((l, v)) = get("positive_rate_0") {
                    g.positive_rate[0] = num(l, "positive_rate_0", v)?;
                }
                if let Some((l, v)) = get("positive_rate_1") {
                    g.positive_rate[1] = num(l, "positive_rate_1", v)?;
                }
                Ok(DataSource::Gaussian(g))
            }
            "theorem1" => {
                let (la, a) = req("alpha")?;
                let q0 = match get("q0") {
                    Some((l, v)) => num(l, "q0", v)?,
                    None => 0.5,
                };
                let samples = match get("samples") {
                    Some((l, v)) => Some(num(l, "samples", v)?),
                    None => None,
                };
                Ok(DataSource::Theorem1 { alpha: num(la, "alpha", a)?, q0, samples })
            }
            other => Err(Error::Config { line: 0, message: format!("unknown data source `{other}`") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
[data]
source = gaussian
n = 500
[missingness]
mechanism = mnar
entry = x0 label 0.1 0.4
[method]
name = indicators
imputer = mean
[intervention]
kind = penalty
constraint = fnr-diff
[sweep]
tau = 0.1, 1
repeats = 3
seed = 7
[output]
dir = out
";
        let cfg = ExperimentConfig::parse(text, Path::new("/tmp")).unwrap();
        assert!(matches!(cfg.data, DataSource::Gaussian(ref g) if g.n == 500));
        assert_eq!(cfg.method.kind, MethodKind::Indicators);
        assert_eq!(cfg.intervention.kind, InterventionKind::Penalty);
        assert_eq!(cfg.intervention.constraint, PenaltyConstraint::FnrDifference);
        assert_eq!(cfg.sweep.grid, vec![("tau".to_string(), vec!["0.1".to_string(), "1".to_string()])]);
        assert_eq!(cfg.sweep.repeats, 3);
        assert_eq!(cfg.output, Some(PathBuf::from("/tmp/out")));
        assert_eq!(cfg.missingness.unwrap().entries.len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ExperimentConfig::parse("[data]\nsource = synthetic\nbogus = 1\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }));
        let err = ExperimentConfig::parse("[nope]\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
    }

    #[test]
    fn validate_catches_missing_file_and_bad_grid() {
        let cfg = ExperimentConfig::parse("[data]\nsource = csv\npath = nope.csv\nschema = nope.txt\n", Path::new("/nonexistent")).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::parse("[sweep]\ntau = a, b\n", Path::new(".")).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::parse("[sweep]\nrepeats = 0\n", Path::new(".")).unwrap();
        assert!(cfg.validate().is_err());
    }
}
