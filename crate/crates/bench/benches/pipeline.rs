use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fairmiss::encode::{cluster_missing_patterns, encode_indicators, ClusterConfig};
use fairmiss::fairclf::{fair_miss_bag, train_fair_penalty, train_logreg, EnsembleMode, Intervention, OptimizerSettings, PenaltyConfig};
use fairmiss::harness::theorem1_report;
use fairmiss::impute::{ImputeMethod, Imputer};
use fairmiss::missingness::{gen_gaussian_classes, gen_synthetic, inject_missing, GaussianClasses, Mechanism, MissingEntry, MissingnessSpec};

fn mnar_data() -> fairmiss::Dataset {
    let ds = gen_gaussian_classes(&GaussianClasses { n: 2000, ..Default::default() }, 1);
    let spec = MissingnessSpec::new(Mechanism::Mnar, vec![MissingEntry::new("x0", "label".parse().unwrap(), 0.1, 0.4)]).unwrap();
    inject_missing(&ds, &spec, 1).unwrap()
}

fn training(c: &mut Criterion) {
    let enc = encode_indicators(&mnar_data());
    let opt = OptimizerSettings::default();
    c.bench_function("logreg 2000x10", |b| b.iter(|| train_logreg(black_box(&enc), &opt).unwrap()));
    let cfg = PenaltyConfig::new(10.0);
    c.bench_function("penalty tau=10 2000x10", |b| b.iter(|| train_fair_penalty(black_box(&enc), &cfg).unwrap()));
}

fn clustering(c: &mut Criterion) {
    let ds = gen_synthetic(0);
    let cfg = ClusterConfig::new(1, 1.0, 0.0);
    c.bench_function("cluster synthetic 2400", |b| b.iter(|| cluster_missing_patterns(black_box(&ds), &cfg).unwrap()));
}

fn imputation(c: &mut Criterion) {
    let ds = mnar_data();
    for method in [ImputeMethod::Mean, ImputeMethod::Knn { k: 5 }, ImputeMethod::iterative()] {
        c.bench_function(&format!("impute {method} 2000x5"), |b| {
            b.iter(|| Imputer::fit_new(method, black_box(&ds)).unwrap().transform(&ds).unwrap())
        });
    }
}

fn bagging(c: &mut Criterion) {
    let ds = mnar_data();
    let iv = Intervention::None(OptimizerSettings { max_iters: 500, ..Default::default() });
    c.bench_function("fair bag B=5", |b| {
        b.iter(|| fair_miss_bag(black_box(&ds), 5, &iv, ImputeMethod::Mean, EnsembleMode::RandomPick, 0).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    c.bench_function("theorem1 report", |b| b.iter(|| theorem1_report(black_box(0.25), 0.5, 0.0).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = training, clustering, imputation, bagging, oracle
}
criterion_main!(benches);
