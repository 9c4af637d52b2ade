use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mixvol::dcc::{correlation_path, dcc_midas_log_likelihood};
use mixvol::garch_midas::{log_likelihood, simulate, CovariateGenerator, GarchMidasModel, GarchMidasParams, Link};
use mixvol::WeightScheme;

fn params() -> GarchMidasParams {
    GarchMidasParams {
        mu: 0.0,
        alpha: 0.08,
        beta: 0.86,
        gamma: 0.0,
        m: 0.5,
        theta: vec![0.01],
        schemes: vec![WeightScheme::restricted_beta(1.4)],
    }
}

fn likelihood(c: &mut Criterion) {
    let model = GarchMidasModel::single("X", 12, Link::Identity);
    let p = params();
    let generator = CovariateGenerator::LogAr1 {
        mean: 3.2,
        phi: 0.95,
        sd: 0.2,
    };
    let sim = simulate(&model, &p, &[generator], 240, 22, 1).expect("simulation");
    c.bench_function("garch_midas_llh_240x22", |b| {
        b.iter(|| log_likelihood(black_box(&sim.panel), &model, black_box(&p)))
    });
}

fn weights(c: &mut Criterion) {
    let beta = WeightScheme::beta(1.5, 4.0);
    let exp = WeightScheme::ExpWeighted { omega: 0.7 };
    c.bench_function("beta_weights_k36", |b| b.iter(|| black_box(&beta).weights(36)));
    c.bench_function("exp_weights_k36", |b| b.iter(|| black_box(&exp).weights(36)));
}

fn dcc(c: &mut Criterion) {
    let n = 5000;
    // deterministic pseudo-residuals; values only need to be realistic in size
    let xa: Vec<f64> = (0..n).map(|t| ((t as f64) * 0.7).sin() * 1.3).collect();
    let xb: Vec<f64> = (0..n).map(|t| ((t as f64) * 0.7 + 0.4).sin() * 1.2).collect();
    let target: Vec<f64> = (0..n).map(|t| 0.3 + 0.2 * ((t as f64) / 500.0).sin()).collect();
    c.bench_function("dcc_recursion_5000", |b| {
        b.iter(|| correlation_path(black_box(&xa), black_box(&xb), 0.03, 0.95, &target))
    });
    c.bench_function("dcc_midas_llh_5000", |b| {
        b.iter(|| dcc_midas_log_likelihood(black_box(&xa), black_box(&xb), 0.03, 0.95, &target))
    });
}

criterion_group!(benches, likelihood, weights, dcc);
criterion_main!(benches);
