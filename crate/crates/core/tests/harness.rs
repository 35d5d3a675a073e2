use std::io::Cursor;

use fairmiss::data::{read_csv, split_train_test, Schema};
use fairmiss::harness::{fit_pipeline, run_experiment, DataSource, ExperimentConfig, InterventionKind, MethodKind};
use fairmiss::metrics::TradeoffPoint;
use fairmiss::missingness::{gen_synthetic, inject_missing, MissingnessSpec};

fn compas_like() -> String {
    let mut csv = String::from("id,priors,age,sex,race,recid\n");
    for i in 0..400u32 {
        let race = i % 2;
        let priors = (i * 7 + race * 3) % 11;
        let age = 20 + (i * 13) % 40;
        let sex = (i / 3) % 2;
        let recid = u32::from(priors > 5) ^ u32::from(i % 9 == 0);
        csv.push_str(&format!("{i},{priors},{age},{sex},{race},{recid}\n"));
    }
    csv
}

const SCHEMA: &str = "id = ignore\npriors = feature\nage = feature\nsex = feature\nrace = sensitive\nrecid = label\n";

#[test]
fn csv_pipeline_with_mar_missingness() {
    let ds = read_csv(Cursor::new(compas_like()), &Schema::parse(SCHEMA).unwrap()).unwrap();
    assert_eq!(ds.feature_names(), ["priors", "age", "sex"]);
    let spec = MissingnessSpec::new("mar".parse().unwrap(), vec!["priors sex 0.1 0.4".parse().unwrap()]).unwrap();
    let injected = inject_missing(&ds, &spec, 0).unwrap();
    assert!(injected.missing_per_feature()[0] > 0);
    assert_eq!(injected.missing_per_feature()[1..], [0, 0]);

    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("d.csv"), compas_like()).unwrap();
    std::fs::write(tmp.path().join("schema.txt"), SCHEMA).unwrap();
    let text = "\
[data]
source = csv
path = d.csv
schema = schema.txt
scale = true
[missingness]
mechanism = mar
entry = priors sex 0.1 0.4
[method]
name = affine
[intervention]
kind = eqodds
[sweep]
epsilon = 0, 0.1
repeats = 3
[output]
dir = out
";
    std::fs::write(tmp.path().join("exp.cfg"), text).unwrap();
    let cfg = ExperimentConfig::from_file(&tmp.path().join("exp.cfg")).unwrap();
    let result = run_experiment(&cfg).unwrap();
    assert!(result.succeeded());
    assert_eq!(result.raw.len(), 6);
    for name in ["raw.csv", "summary.csv", "pareto.csv"] {
        assert!(tmp.path().join("out").join(name).exists());
    }
}

#[test]
fn pareto_rows_are_summary_rows_and_non_dominating() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(DataSource::Synthetic);
    cfg.method.kind = MethodKind::Indicators;
    cfg.intervention.kind = InterventionKind::EqOdds;
    cfg.sweep.grid = vec![("epsilon".into(), ["0", "0.05", "0.1", "0.3"].map(String::from).to_vec())];
    cfg.sweep.repeats = 2;
    cfg.output = Some(tmp.path().to_path_buf());
    let result = run_experiment(&cfg).unwrap();

    let read = |f: &str| std::fs::read_to_string(tmp.path().join(f)).unwrap();
    let summary: Vec<String> = read("summary.csv").lines().map(String::from).collect();
    let pareto = read("pareto.csv");
    assert_eq!(summary[0], "method,grid_point,params,metric,mean,stderr");
    for line in pareto.lines() {
        assert!(summary.contains(&line.to_string()), "{line}");
    }
    let front: Vec<TradeoffPoint> = result
        .pareto
        .iter()
        .map(|&g| TradeoffPoint::new(result.mean(g, "accuracy").unwrap(), result.mean(g, "meo").unwrap()))
        .collect();
    assert!(!front.is_empty());
    for p in &front {
        assert!(!front.iter().any(|q| q.dominates(p)));
    }
    let raw = read("raw.csv");
    assert_eq!(raw.lines().count(), 1 + 4 * 2 * fairmiss::harness::METRICS.len());
}

#[test]
fn fitted_state_ignores_test_rows() {
    let ds = gen_synthetic(4);
    let (train, test) = split_train_test(&ds, 0.3, 4).unwrap();
    let mut cfg = ExperimentConfig::new(DataSource::Synthetic);
    cfg.intervention.kind = InterventionKind::Penalty;
    for kind in [MethodKind::ImputeThenClassify, MethodKind::Affine, MethodKind::Clustering] {
        cfg.method.kind = kind;
        cfg.method.imputer = "mean".parse().unwrap();
        let (method, iv) = fairmiss::harness::apply_point(&cfg, &Vec::new()).unwrap();
        let fitted = fit_pipeline(&train, &method, &iv, 1).unwrap();
        let before = fitted.predict(&test, 9).unwrap();
        // Perturb every test row except the first; its prediction must not move.
        let mut samples = test.samples().to_vec();
        for s in samples.iter_mut().skip(1) {
            s.features = vec![Some(1e3), None];
        }
        let after = fitted.predict(&test.with_samples(samples), 9).unwrap();
        assert_eq!(before[0], after[0], "{kind:?}");
        assert_eq!(fit_pipeline(&train, &method, &iv, 1).unwrap(), fitted);
    }
}

#[test]
fn repeats_differ_but_reruns_match() {
    let mut cfg = ExperimentConfig::new(DataSource::Synthetic);
    cfg.method.kind = MethodKind::FairMissBag;
    cfg.method.bags = 2;
    cfg.intervention.optimizer.max_iters = 300;
    cfg.sweep.repeats = 3;
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    let accs: Vec<f64> = a.raw.iter().map(|r| r.values[0]).collect();
    assert!(accs.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn theorem1_exact_mode_report() {
    let cfg = ExperimentConfig::new(DataSource::Theorem1 { alpha: 0.25, q0: 0.5, samples: None });
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.theorem1.len(), 1);
    assert!((r.theorem1[0].f_original - 1.0).abs() < 1e-9);
    assert!((r.theorem1[0].f_imputed_best - 0.75).abs() < 1e-6);
}

#[test]
fn theorem1_sampled_mode_trains() {
    let mut cfg = ExperimentConfig::new(DataSource::Theorem1 { alpha: 0.25, q0: 0.5, samples: Some(2000) });
    cfg.method.kind = MethodKind::Indicators;
    cfg.sweep.repeats = 2;
    let r = run_experiment(&cfg).unwrap();
    // The mask determines the label, so indicator encoding is near perfect.
    assert!(r.mean(0, "accuracy").unwrap() > 0.99);
}
