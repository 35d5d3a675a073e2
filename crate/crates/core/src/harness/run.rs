//! Repeated train/test runs over a hyperparameter grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::{DataSource, ExperimentConfig, InterventionConfig, MethodConfig};
use super::pipeline::fit_pipeline;
use super::theorem1::{theorem1_report, Theorem1Report};
use crate::data::{load_csv, split_train_test, Dataset, Scaler, Schema};
use crate::error::{Error, Result};
use crate::fairclf::Intervention;
use crate::metrics::{accuracy, disparity, group_rates, pareto_indices, DisparityKind, TradeoffPoint};
use crate::missingness::{gen_gaussian_classes, gen_synthetic, inject_missing, Theorem1Distribution};

pub type GridPoint = Vec<(String, String)>;

/// Metric names in output order.
pub const METRICS: &[&str] = &["accuracy", "train_accuracy", "fnr_diff", "fpr_diff", "meo"];

/// Cartesian product of the sweep grid, first key varying slowest.
pub fn grid_points(sweep: &super::config::SweepConfig) -> Vec<GridPoint> {
    let mut points: Vec<GridPoint> = vec![Vec::new()];
    for (key, values) in &sweep.grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

/// Method and intervention settings with `point` applied.
pub fn apply_point(cfg: &ExperimentConfig, point: &GridPoint) -> Result<(MethodConfig, Intervention)> {
    let mut method = cfg.method.clone();
    let mut iv: InterventionConfig = cfg.intervention.clone();
    for (k, v) in point {
        let bad = || Error::Parameter(format!("bad grid value `{v}` for `{k}`"));
        let real = || v.parse::<f64>().map_err(|_| bad());
        match k.as_str() {
            "tau" => iv.tau = real()?,
            "epsilon" => iv.epsilon = real()?,
            "alpha" => method.alpha = real()?,
            "beta" => method.beta = real()?,
            "k_min" => method.k_min = v.parse().map_err(|_| bad())?,
            "bags" => method.bags = v.parse().map_err(|_| bad())?,
            "imputer" => method.imputer = v.parse()?,
            _ => return Err(Error::Parameter(format!("`{k}` cannot be swept"))),
        }
    }
    Ok((method, iv.build()))
}

pub fn format_params(point: &GridPoint) -> String {
    point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub grid_point: usize,
    pub params: GridPoint,
    pub repeat: usize,
    /// Values in [`METRICS`] order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub grid_point: usize,
    pub params: GridPoint,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub grid_point: Option<usize>,
    pub repeat: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunResult {
    pub method: String,
    pub grid: Vec<GridPoint>,
    pub raw: Vec<RawRecord>,
    pub summary: Vec<SummaryRow>,
    /// Grid points on the accuracy/MEO frontier of the means.
    pub pareto: Vec<usize>,
    pub failures: Vec<Failure>,
    pub theorem1: Vec<Theorem1Report>,
}

impl RunResult {
    /// True when every grid point has at least one successful repeat.
    pub fn succeeded(&self) -> bool {
        if !self.theorem1.is_empty() {
            return true;
        }
        (0..self.grid.len()).all(|g| self.raw.iter().any(|r| r.grid_point == g))
    }

    pub fn mean(&self, grid_point: usize, metric: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.grid_point == grid_point && s.metric == metric).map(|s| s.mean)
    }
}

/// Mean and standard error (`sample sd / sqrt(n)`, zero for `n = 1`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per grid point and metric: mean and standard error across repeats.
pub fn sweep_and_aggregate(records: &[RawRecord]) -> Result<Vec<SummaryRow>> {
    let mut by_point: BTreeMap<usize, (&GridPoint, Vec<&RawRecord>)> = BTreeMap::new();
    for r in records {
        let entry = by_point.entry(r.grid_point).or_insert((&r.params, Vec::new()));
        if entry.0 != &r.params {
            return Err(Error::Experiment(format!("grid point {} has mismatched parameters across repeats", r.grid_point)));
        }
        if r.values.len() != METRICS.len() {
            return Err(Error::Dimension { expected: METRICS.len(), found: r.values.len() });
        }
        entry.1.push(r);
    }
    let mut out = Vec::new();
    for (gp, (params, rows)) in by_point {
        for (m, name) in METRICS.iter().enumerate() {
            let values: Vec<f64> = rows.iter().map(|r| r.values[m]).collect();
            let (mean, stderr) = mean_stderr(&values);
            out.push(SummaryRow {
                grid_point: gp,
                params: params.clone(),
                metric: (*name).to_string(),
                mean,
                stderr,
                count: values.len(),
            });
        }
    }
    Ok(out)
}

fn load_source(cfg: &ExperimentConfig, repeat: usize, cached: Option<&Dataset>) -> Result<Dataset> {
    let seed = cfg.sweep.seed.wrapping_add(repeat as u64);
    match &cfg.data {
        DataSource::Csv { .. } => Ok(cached.expect("csv loaded up front").clone()),
        DataSource::Synthetic => Ok(gen_synthetic(seed)),
        DataSource::Gaussian(g) => Ok(gen_gaussian_classes(g, seed)),
        DataSource::Theorem1 { alpha, q0, samples } => {
            let n = samples.ok_or_else(|| Error::Experiment("exact theorem1 mode has no samples".into()))?;
            Ok(Theorem1Distribution::symmetric(*alpha, *q0)?.sample(n, seed))
        }
    }
}

/// Seed streams derived from the repeat seed.
const TEST_INJECTION_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const PREDICTION_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

fn prepare_repeat(cfg: &ExperimentConfig, repeat: usize, cached: Option<&Dataset>) -> Result<(Dataset, Dataset)> {
    let seed = cfg.sweep.seed.wrapping_add(repeat as u64);
    let mut data = load_source(cfg, repeat, cached)?;
    if let (Some(spec), true) = (&cfg.missingness, cfg.inject_before_split) {
        data = inject_missing(&data, spec, seed)?;
    }
    let (mut train, mut test) = split_train_test(&data, cfg.sweep.test_fraction, seed)?;
    if let (Some(spec), false) = (&cfg.missingness, cfg.inject_before_split) {
        train = inject_missing(&train, spec, seed)?;
        test = inject_missing(&test, spec, seed ^ TEST_INJECTION_STREAM)?;
    }
    if cfg.scale {
        let scaler = Scaler::fit(&train)?;
        train = scaler.apply(&train);
        test = scaler.apply(&test);
    }
    Ok((train, test))
}

fn evaluate(
    cfg: &ExperimentConfig,
    point: &GridPoint,
    train: &Dataset,
    test: &Dataset,
    repeat: usize,
) -> Result<Vec<f64>> {
    let seed = cfg.sweep.seed.wrapping_add(repeat as u64);
    let (method, intervention) = apply_point(cfg, point)?;
    let fitted = fit_pipeline(train, &method, &intervention, seed)?;
    let test_pred = fitted.predict(test, seed ^ PREDICTION_STREAM)?;
    let train_pred = fitted.predict(train, seed ^ PREDICTION_STREAM)?;
    let rates = group_rates(&test_pred, test)?;
    Ok(vec![
        accuracy(&test_pred, test),
        accuracy(&train_pred, train),
        disparity(&rates, DisparityKind::FnrDiff)?,
        disparity(&rates, DisparityKind::FprDiff)?,
        disparity(&rates, DisparityKind::Meo)?,
    ])
}

/// Runs every (repeat, grid point) job; failed jobs are recorded, not fatal.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let grid = grid_points(&cfg.sweep);
    let mut result = RunResult { method: cfg.method.kind.name().to_string(), grid: grid.clone(), ..Default::default() };

    if let DataSource::Theorem1 { alpha, q0, samples: None } = cfg.data {
        let epsilons: Vec<f64> = match cfg.sweep.grid.iter().find(|(k, _)| k == "epsilon") {
            Some((_, vs)) => vs.iter().map(|v| v.parse().map_err(|_| Error::Parameter(format!("bad epsilon `{v}`")))).collect::<Result<_>>()?,
            None => vec![cfg.intervention.epsilon],
        };
        result.theorem1 = epsilons.into_iter().map(|e| theorem1_report(alpha, q0, e)).collect::<Result<_>>()?;
        result.method = "theorem1".into();
        if let Some(dir) = &cfg.output {
            write_theorem1(dir, &result.theorem1)?;
        }
        return Ok(result);
    }

    let cached = match &cfg.data {
        DataSource::Csv { path, schema } => Some(load_csv(path, &Schema::from_file(schema)?)?),
        _ => None,
    };
    let repeats: Vec<Result<(Dataset, Dataset)>> =
        (0..cfg.sweep.repeats).into_par_iter().map(|r| prepare_repeat(cfg, r, cached.as_ref())).collect();
    for (r, prepared) in repeats.iter().enumerate() {
        if let Err(e) = prepared {
            log::warn!("repeat {r} failed during preparation: {e}");
            result.failures.push(Failure { grid_point: None, repeat: r, message: e.to_string() });
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.sweep.repeats)
        .filter(|&r| repeats[r].is_ok())
        .flat_map(|r| (0..grid.len()).map(move |g| (g, r)))
        .collect();
    let outcomes: Vec<(usize, usize, Result<Vec<f64>>)> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let (train, test) = repeats[r].as_ref().expect("filtered");
            (g, r, evaluate(cfg, &grid[g], train, test, r))
        })
        .collect();
    for (g, r, outcome) in outcomes {
        match outcome {
            Ok(values) => result.raw.push(RawRecord { grid_point: g, params: grid[g].clone(), repeat: r, values }),
            Err(e) => {
                log::warn!("grid point {g} ({}) repeat {r} failed: {e}", format_params(&grid[g]));
                result.failures.push(Failure { grid_point: Some(g), repeat: r, message: e.to_string() });
            }
        }
    }
    result.raw.sort_by_key(|r| (r.grid_point, r.repeat));
    result.failures.sort_by_key(|f| (f.grid_point, f.repeat));
    result.summary = sweep_and_aggregate(&result.raw)?;
    let points: Vec<(usize, TradeoffPoint)> = (0..grid.len())
        .filter_map(|g| Some((g, TradeoffPoint::new(result.mean(g, "accuracy")?, result.mean(g, "meo")?))))
        .collect();
    let tradeoffs: Vec<TradeoffPoint> = points.iter().map(|(_, p)| p.clone()).collect();
    result.pareto = pareto_indices(&tradeoffs).into_iter().map(|i| points[i].0).collect();
    if let Some(dir) = &cfg.output {
        write_outputs(dir, &result)?;
    }
    Ok(result)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) }
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `raw.csv`, `summary.csv` and `pareto.csv` into `dir`.
pub fn write_outputs(dir: &Path, result: &RunResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let method = &result.method;
    let raw_rows = result.raw.iter().flat_map(|r| {
        METRICS.iter().zip(&r.values).map(move |(m, v)| {
            vec![method.clone(), r.grid_point.to_string(), format_params(&r.params), r.repeat.to_string(), (*m).into(), v.to_string()]
        })
    });
    write_rows(&dir.join("raw.csv"), &["method", "grid_point", "params", "repeat", "metric", "value"], raw_rows)?;
    let summary_row = |s: &SummaryRow| {
        vec![method.clone(), s.grid_point.to_string(), format_params(&s.params), s.metric.clone(), s.mean.to_string(), s.stderr.to_string()]
    };
    let header = ["method", "grid_point", "params", "metric", "mean", "stderr"];
    write_rows(&dir.join("summary.csv"), &header, result.summary.iter().map(summary_row))?;
    let frontier = result.summary.iter().filter(|s| result.pareto.contains(&s.grid_point)).map(summary_row);
    write_rows(&dir.join("pareto.csv"), &header, frontier)
}

pub fn write_theorem1(dir: &Path, reports: &[Theorem1Report]) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows = reports.iter().map(|r| {
        [r.alpha, r.q0, r.epsilon, r.f_original, r.f_imputed_best, r.gap(), r.mi_my, r.binary_entropy]
            .iter()
            .map(f64::to_string)
            .collect()
    });
    write_rows(
        &dir.join("theorem1.csv"),
        &["alpha", "q0", "epsilon", "f_original", "f_imputed_best", "gap", "mi_my", "binary_entropy"],
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SweepConfig;

    fn record(gp: usize, repeat: usize, acc: f64) -> RawRecord {
        RawRecord { grid_point: gp, params: vec![("tau".into(), gp.to_string())], repeat, values: vec![acc, 0.0, 0.0, 0.0, 0.0] }
    }

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr(&[0.8, 0.9]);
        assert!((m - 0.85).abs() < 1e-12);
        assert!((s - 0.05).abs() < 1e-12);
        assert_eq!(mean_stderr(&[0.7]), (0.7, 0.0));
        assert_eq!(mean_stderr(&[0.3; 10]).1, 0.0);
    }

    #[test]
    fn aggregate_rejects_mismatched_grid() {
        let mut b = record(0, 1, 0.5);
        b.params = vec![("tau".into(), "other".into())];
        assert!(sweep_and_aggregate(&[record(0, 0, 0.5), b]).is_err());
        let rows = sweep_and_aggregate(&[record(0, 0, 0.8), record(0, 1, 0.9), record(1, 0, 0.1)]).unwrap();
        assert_eq!(rows.len(), 2 * METRICS.len());
        assert_eq!(rows[0].count, 2);
    }

    #[test]
    fn grid_is_cartesian() {
        let sweep = SweepConfig {
            grid: vec![("alpha".into(), vec!["1".into(), "0.8".into()]), ("tau".into(), vec!["0".into(), "1".into(), "2".into()])],
            ..Default::default()
        };
        let pts = grid_points(&sweep);
        assert_eq!(pts.len(), 6);
        assert_eq!(format_params(&pts[1]), "alpha=1;tau=1");
        assert_eq!(grid_points(&SweepConfig::default()), vec![Vec::new()]);
    }
}
