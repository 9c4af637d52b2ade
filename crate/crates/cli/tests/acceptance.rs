//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use mixvol::dcc::{self, FirstStep};
use mixvol::diagnostics::{self, AdfTrend};
use mixvol::garch_midas::{
    fit, fit_gjr_garch, log_likelihood, simulate, variance_ratio, CovariateGenerator, FitOptions,
    GarchMidasModel, GarchMidasParams, Link, WorkingSpace,
};
use mixvol::optimizer::{central_gradient, OptimizerOptions};
use mixvol::{DatedSeries, Frequency, WeightScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

// tolerances and budgets
const WEIGHT_TOL: f64 = 1e-12;
const WEIGHT_BUDGET: Duration = Duration::from_secs(1);
const LLH_TOL: f64 = 1e-10;
const LLH_BUDGET: Duration = Duration::from_secs(5);
const NESTING_TOL: f64 = 1e-4;
const NESTING_BUDGET: Duration = Duration::from_secs(30);
const RECOVERY_REPS: u64 = 200;
const ALPHA_MEDIAN_ERR: f64 = 0.03;
const BETA_MEDIAN_ERR: f64 = 0.05;
const THETA_MEDIAN_REL_ERR: f64 = 0.5;
const COVERAGE: (f64, f64) = (0.88, 0.99);
const RECOVERY_BUDGET: Duration = Duration::from_secs(15 * 60);
const GRADIENT_TOL: f64 = 1e-4;
const UNIT_G_DAYS: usize = 1_000_000;
const UNIT_G_TOL: f64 = 0.01;
const UNIT_G_BUDGET: Duration = Duration::from_secs(60);
const VR_FITS: u64 = 50;
const VR_BUDGET: Duration = Duration::from_secs(60);
const DCC_STEPS: usize = 1_000_000;
const CCC_TOL: f64 = 1e-12;
const DCC_REPS: u64 = 100;
const DCC_N: usize = 5000;
const DCC_RHO: f64 = 0.3;
const DCC_MEDIAN_ERR: f64 = 0.03;
const DCC_BUDGET: Duration = Duration::from_secs(5 * 60);
const SWITCH_REPS: u64 = 50;
const SWITCH_N: usize = 5000;
const SWITCH_TOL: f64 = 0.1;
const SWITCH_SHARE: f64 = 0.8;
const SWITCH_BUDGET: Duration = Duration::from_secs(5 * 60);
const CALIBRATION_REPS: usize = 1000;
const CALIBRATION_N: usize = 2000;
const CALIBRATION_RATE: (f64, f64) = (0.03, 0.07);
const ADF_CV: f64 = -3.4317;
const ADF_CV_TOL: f64 = 0.05;
const CALIBRATION_BUDGET: Duration = Duration::from_secs(5 * 60);
const DETERMINISM_BUDGET: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(start: Instant, budget: Duration, out: Outcome) -> Outcome {
    let took = start.elapsed();
    let stamp = |d: String| format!("{d}; {:.1}s (budget {}s)", took.as_secs_f64(), budget.as_secs());
    match out {
        Ok(d) if took <= budget => Ok(stamp(d)),
        Ok(d) => Err(stamp(format!("{d}; over budget"))),
        Err(d) => Err(stamp(d)),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn days(n: usize) -> Vec<NaiveDate> {
    let d0 = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
    (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_uniform = 0.0f64;
    let mut worst_sum = 0.0f64;
    for k in 1..=250 {
        let w = WeightScheme::beta(1.0, 1.0).weights(k).map_err(|e| e.to_string())?;
        for v in &w {
            worst_uniform = worst_uniform.max((v - 1.0 / k as f64).abs());
        }
        for s in [
            WeightScheme::beta(1.0, 1.0),
            WeightScheme::restricted_beta(1.4),
            WeightScheme::restricted_beta(25.0),
            WeightScheme::beta(2.5, 7.0),
            WeightScheme::ExpWeighted { omega: 0.5 },
            WeightScheme::ExpWeighted { omega: 0.99 },
        ] {
            let w = s.weights(k).map_err(|e| e.to_string())?;
            worst_sum = worst_sum.max((w.iter().sum::<f64>() - 1.0).abs());
        }
    }
    let exp = WeightScheme::ExpWeighted { omega: 0.5 }.weights(3).map_err(|e| e.to_string())?;
    let exp_err = exp
        .iter()
        .zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0])
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    within_budget(
        start,
        WEIGHT_BUDGET,
        check(
            worst_uniform <= WEIGHT_TOL && worst_sum <= WEIGHT_TOL && exp_err <= WEIGHT_TOL,
            format!("uniform err {worst_uniform:.1e}, exp err {exp_err:.1e}, sum err {worst_sum:.1e}"),
        ),
    )
}

/// Period-by-period, day-by-day, lag-by-lag transcription of the likelihood.
fn naive_llh(returns: &[f64], day_period: &[usize], x: &[f64], lags: usize, link: Link, p: &GarchMidasParams) -> f64 {
    let omega2 = match p.schemes[0] {
        WeightScheme::Beta { omega2, .. } => omega2,
        _ => unreachable!(),
    };
    let raw: Vec<f64> = (1..=lags)
        .map(|k| (1.0 - k as f64 / (lags as f64 + 1.0)).powf(omega2 - 1.0))
        .collect();
    let total: f64 = raw.iter().sum();
    let n_periods = day_period.last().unwrap() + 1;
    let mut llh = 0.0;
    let mut g = 1.0;
    let mut started = false;
    let mut prev_e = 0.0;
    for t in lags..n_periods {
        let mut s = 0.0;
        for k in 1..=lags {
            s += raw[k - 1] / total * x[t - k];
        }
        let tau = match link {
            Link::Identity => p.m + p.theta[0] * s,
            Link::Log => (p.m + p.theta[0] * s).exp(),
        };
        for i in 0..returns.len() {
            if day_period[i] != t {
                continue;
            }
            if started {
                let neg = if prev_e < 0.0 { 1.0 } else { 0.0 };
                g = (1.0 - p.alpha - p.gamma / 2.0 - p.beta)
                    + (p.alpha + p.gamma * neg) * prev_e * prev_e / tau
                    + p.beta * g;
            }
            started = true;
            let e = returns[i] - p.mu;
            llh += -0.5 * ((2.0 * std::f64::consts::PI).ln() + (g * tau).ln() + e * e / (g * tau));
            prev_e = e;
        }
    }
    llh
}

fn rv_params(alpha: f64, beta: f64, gamma: f64, m: f64, theta: f64, omega2: f64) -> GarchMidasParams {
    GarchMidasParams {
        mu: 0.0,
        alpha,
        beta,
        gamma,
        m,
        theta: vec![theta],
        schemes: vec![WeightScheme::restricted_beta(omega2)],
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut n_days = 0;
    for rep in 0..20u64 {
        let lags = rng.random_range(1..=12);
        let link = if rep % 2 == 0 { Link::Identity } else { Link::Log };
        let model = GarchMidasModel::single("RV", lags, link);
        let truth = GarchMidasParams {
            m: if link == Link::Log { -1.0 } else { 0.2 },
            ..rv_params(0.05, 0.9, 0.03, 0.2, 0.02, 2.0)
        };
        let sim = simulate(&model, &truth, &[CovariateGenerator::RealizedVolatility], 100, 20, rep)
            .map_err(|e| e.to_string())?;
        n_days = sim.panel.n_days();
        let alpha = rng.random_range(0.0..0.15);
        let p = GarchMidasParams {
            mu: rng.random_range(-0.05..0.05),
            ..rv_params(
                alpha,
                rng.random_range(0.5..0.8),
                rng.random_range(-alpha..0.1),
                if link == Link::Log {
                    rng.random_range(-2.0..0.0)
                } else {
                    rng.random_range(0.1..0.5)
                },
                rng.random_range(0.0..0.05),
                rng.random_range(1.0..10.0),
            )
        };
        let cov = sim.panel.covariate("RV").unwrap();
        let oracle = naive_llh(&sim.panel.returns, &cov.day_period, &cov.values, lags, link, &p);
        let fast = log_likelihood(&sim.panel, &model, &p);
        worst = worst.max((oracle - fast).abs());
    }
    within_budget(
        start,
        LLH_BUDGET,
        check(worst <= LLH_TOL, format!("20 panels of {n_days} days, max |diff| {worst:.2e}")),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let model = GarchMidasModel::single("RV", 12, Link::Log);
    let truth = GarchMidasParams {
        m: 0.3,
        ..rv_params(0.07, 0.88, 0.05, 0.0, 0.0, 3.0)
    };
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let sim = simulate(&model, &truth, &[CovariateGenerator::RealizedVolatility], 120, 22, 30 + seed)
            .map_err(|e| e.to_string())?;
        let mut fixed = BTreeMap::new();
        fixed.insert("theta".to_string(), 0.0);
        let gm = fit(
            &sim.panel,
            &model,
            &FitOptions {
                fixed,
                ..FitOptions::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let gjr = fit_gjr_garch(&sim.panel.returns[gm.first_day..], true, &OptimizerOptions::default())
            .map_err(|e| e.to_string())?;
        worst = worst.max((gm.llh - gjr.llh).abs());
    }
    within_budget(
        start,
        NESTING_BUDGET,
        check(worst < NESTING_TOL, format!("max |LLH diff| {worst:.2e} over 3 samples")),
    )
}

fn recovery_dgp() -> (GarchMidasModel, GarchMidasParams, CovariateGenerator) {
    let model = GarchMidasModel::single("X", 12, Link::Identity);
    let params = rv_params(0.08, 0.86, 0.0, 0.5, 0.01, 1.4);
    let generator = CovariateGenerator::LogAr1 {
        mean: 3.2,
        phi: 0.95,
        sd: 0.2,
    };
    (model, params, generator)
}

fn criteria_4_and_11() -> (Outcome, Outcome) {
    let start = Instant::now();
    let (model, truth, generator) = recovery_dgp();
    let (mut ea, mut eb, mut et) = (Vec::new(), Vec::new(), Vec::new());
    let (mut covered, mut converged, mut failed) = (0usize, 0usize, 0usize);
    let mut worst_grad = 0.0f64;
    for seed in 0..RECOVERY_REPS {
        let sim = match simulate(&model, &truth, &[generator], 240, 22, 1000 + seed) {
            Ok(s) => s,
            Err(_) => {
                failed += 1;
                continue;
            }
        };
        let f = match fit(&sim.panel, &model, &FitOptions::default()) {
            Ok(f) => f,
            Err(_) => {
                failed += 1;
                continue;
            }
        };
        let theta = f.estimate("theta").unwrap();
        ea.push((f.params.alpha - truth.alpha).abs());
        eb.push((f.params.beta - truth.beta).abs());
        et.push((theta.value - truth.theta[0]).abs() / truth.theta[0]);
        if let Some(se) = theta.std_error {
            if (theta.value - truth.theta[0]).abs() <= 1.96 * se {
                covered += 1;
            }
        }
        if f.converged {
            converged += 1;
            let space = WorkingSpace::new(&sim.panel, &model, &BTreeMap::new()).unwrap();
            let u = space.point(&f.params).unwrap();
            let grad = central_gradient(&|u: &[f64]| space.log_likelihood(u), &u);
            worst_grad = grad.iter().fold(worst_grad, |m, g| m.max(g.abs()));
        }
    }
    let reps = RECOVERY_REPS as f64;
    let coverage = covered as f64 / reps;
    let (ma, mb, mt) = (median(ea), median(eb), median(et));
    let ok = failed == 0
        && ma <= ALPHA_MEDIAN_ERR
        && mb <= BETA_MEDIAN_ERR
        && mt <= THETA_MEDIAN_REL_ERR
        && (COVERAGE.0..=COVERAGE.1).contains(&coverage);
    let c4 = within_budget(
        start,
        RECOVERY_BUDGET,
        check(
            ok,
            format!(
                "{RECOVERY_REPS} reps ({failed} failed, {converged} converged): median |da| {ma:.4}, |db| {mb:.4}, theta rel {mt:.3}; theta 95% CI coverage {:.1}%",
                100.0 * coverage
            ),
        ),
    );
    let c11 = check(
        converged > 0 && worst_grad < GRADIENT_TOL,
        format!("{converged} converged optima, max |gradient| {worst_grad:.2e} in working space"),
    );
    (c4, c11)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (model, truth, generator) = recovery_dgp();
    let periods = UNIT_G_DAYS.div_ceil(22);
    let sim = simulate(&model, &truth, &[generator], periods, 22, 5).map_err(|e| e.to_string())?;
    let mean = sim.g.iter().sum::<f64>() / sim.g.len() as f64;
    within_budget(
        start,
        UNIT_G_BUDGET,
        check(
            (mean - 1.0).abs() <= UNIT_G_TOL,
            format!("{} days, mean g {mean:.5}", sim.g.len()),
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let (model, truth, generator) = recovery_dgp();
    let sim = simulate(&model, &truth, &[generator], 120, 22, 6).map_err(|e| e.to_string())?;
    let mut fixed = BTreeMap::new();
    fixed.insert("theta".to_string(), 0.0);
    let restricted = fit(
        &sim.panel,
        &model,
        &FitOptions {
            fixed,
            ..FitOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let vr_zero = restricted.variance_ratio.unwrap_or(f64::NAN);
    let mut flat_g = fit(&sim.panel, &model, &FitOptions::default()).map_err(|e| e.to_string())?;
    flat_g.g = vec![1.0; flat_g.g.len()];
    let vr_full = variance_ratio(&flat_g).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let (mut lo, mut hi, mut bad) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for rep in 0..VR_FITS {
        let p = rv_params(
            rng.random_range(0.02..0.12),
            rng.random_range(0.6..0.88),
            0.0,
            rng.random_range(0.2..0.8),
            rng.random_range(0.0..0.03),
            rng.random_range(1.1..6.0),
        );
        let sim = simulate(&model, &p, &[generator], 60, 22, 600 + rep).map_err(|e| e.to_string())?;
        let options = FitOptions {
            optimizer: OptimizerOptions {
                perturbed_starts: 1,
                ..OptimizerOptions::default()
            },
            ..FitOptions::default()
        };
        match fit(&sim.panel, &model, &options).ok().and_then(|f| f.variance_ratio) {
            Some(v) => {
                lo = lo.min(v);
                hi = hi.max(v);
                if !(0.0..=100.0).contains(&v) {
                    bad += 1;
                }
            }
            None => bad += 1,
        }
    }
    within_budget(
        start,
        VR_BUDGET,
        check(
            vr_zero == 0.0 && vr_full == 100.0 && bad == 0,
            format!("theta=0: {vr_zero}, g=1: {vr_full}, {VR_FITS} fits in [{lo:.2}, {hi:.2}]"),
        ),
    )
}

/// Two GARCH(1,1) series whose innovations have correlation `rho[t]`.
fn correlated_garch(rho: impl Fn(usize) -> f64, n: usize, seed: u64) -> (DatedSeries, DatedSeries) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (omega, alpha, beta) = (0.05, 0.08, 0.9);
    let (mut ha, mut hb) = (omega / (1.0 - alpha - beta), 0.02 / (1.0 - 0.05 - 0.93));
    let (mut ra, mut rb) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for t in 0..n {
        if t > 0 {
            let (ea, eb): (f64, f64) = (ra[t - 1], rb[t - 1]);
            ha = omega + alpha * ea * ea + beta * ha;
            hb = 0.02 + 0.05 * eb * eb + 0.93 * hb;
        }
        let z1 = normal(&mut rng);
        let z2 = rho(t) * z1 + (1.0 - rho(t) * rho(t)).sqrt() * normal(&mut rng);
        ra.push(ha.sqrt() * z1);
        rb.push(hb.sqrt() * z2);
    }
    let d = days(n);
    (
        DatedSeries::new("a", Frequency::Daily, d.clone(), ra).unwrap(),
        DatedSeries::new("b", Frequency::Daily, d, rb).unwrap(),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    // (a) bounds over a long recursion with a moving target
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let xa: Vec<f64> = (0..DCC_STEPS).map(|_| 3.0 * normal(&mut rng)).collect();
    let xb: Vec<f64> = xa.iter().map(|x| -0.9 * x + 0.5 * normal(&mut rng)).collect();
    let target: Vec<f64> = (0..DCC_STEPS).map(|t| 0.95 * (t as f64 / 5000.0).sin()).collect();
    let (q, rho) = dcc::correlation_path(&xa, &xb, 0.2, 0.79, &target);
    let bounded = rho.iter().all(|r| (-1.0..=1.0).contains(r))
        && q.iter().all(|q| q[0] > 0.0 && q[1] > 0.0 && q[0] * q[1] - q[2] * q[2] >= 0.0);

    // (b) a = b = 0 pins the path at the sample correlation
    let n = 2000;
    let s = diagnostics::pearson(&xa[..n], &xb[..n]).map_err(|e| e.to_string())?;
    let (_, flat) = dcc::correlation_path(&xa[..n], &xb[..n], 0.0, 0.0, &vec![s; n]);
    let ccc_err = flat.iter().fold(0.0f64, |m, r| m.max((r - s).abs()));

    // (c) recovery through the two-step pipeline
    let options = OptimizerOptions::default();
    let mut errors = Vec::new();
    let mut max_ab = 0.0f64;
    for rep in 0..DCC_REPS {
        let (a, b) = correlated_garch(|_| DCC_RHO, DCC_N, 700 + rep);
        let fa = dcc::standardize(&a, FirstStep::Garch11, &options).map_err(|e| e.to_string())?;
        let fb = dcc::standardize(&b, FirstStep::Garch11, &options).map_err(|e| e.to_string())?;
        let pair = dcc::align(&fa, &fb).map_err(|e| e.to_string())?;
        let f = dcc::dcc_garch_fit(&pair.a, &pair.b, &pair.dates, &options).map_err(|e| e.to_string())?;
        let mean = f.rho.iter().sum::<f64>() / f.rho.len() as f64;
        errors.push((mean - DCC_RHO).abs());
        max_ab = max_ab.max(f.a + f.b);
    }
    let med = median(errors);
    within_budget(
        start,
        DCC_BUDGET,
        check(
            bounded && ccc_err <= CCC_TOL && med <= DCC_MEDIAN_ERR && max_ab < 1.0,
            format!(
                "(a) {DCC_STEPS} steps bounded: {bounded}; (b) CCC err {ccc_err:.1e}; (c) median |rho_mean - 0.3| {med:.4}, max a+b {max_ab:.4}"
            ),
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let half = SWITCH_N / 2;
    let regime = |t: usize| if t < half { 0.1 } else { 0.7 };
    let options = OptimizerOptions::default();
    let mut hits = 0usize;
    let (mut m1, mut m2) = (Vec::new(), Vec::new());
    for rep in 0..SWITCH_REPS {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + rep);
        let (mut xa, mut xb) = (Vec::with_capacity(SWITCH_N), Vec::with_capacity(SWITCH_N));
        for t in 0..SWITCH_N {
            let z1 = normal(&mut rng);
            let r = regime(t);
            xa.push(z1);
            xb.push(r * z1 + (1.0 - r * r).sqrt() * normal(&mut rng));
        }
        let f = dcc::dcc_midas_fit(
            &xa,
            &xb,
            &days(SWITCH_N),
            dcc::DEFAULT_WINDOW,
            dcc::DEFAULT_SPAN,
            WeightScheme::restricted_beta(3.0),
            &options,
        )
        .map_err(|e| e.to_string())?;
        // rho_bar covers the days after the filter's burn-in
        let offset = SWITCH_N - f.rho_bar.len();
        let avg = |from: usize, to: usize| {
            let s = &f.rho_bar[from - offset..to - offset];
            s.iter().sum::<f64>() / s.len() as f64
        };
        let (a1, a2) = (avg(half / 2, half), avg(half + half / 2, SWITCH_N));
        m1.push(a1);
        m2.push(a2);
        if (a1 - 0.1).abs() <= SWITCH_TOL && (a2 - 0.7).abs() <= SWITCH_TOL {
            hits += 1;
        }
    }
    let share = hits as f64 / SWITCH_REPS as f64;
    within_budget(
        start,
        SWITCH_BUDGET,
        check(
            share >= SWITCH_SHARE,
            format!(
                "{hits}/{SWITCH_REPS} reps track both regimes; median late-regime rho_bar {:.3} / {:.3}",
                median(m1),
                median(m2)
            ),
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut jb, mut lb, mut arch) = (0usize, 0usize, 0usize);
    for _ in 0..CALIBRATION_REPS {
        let x: Vec<f64> = (0..CALIBRATION_N).map(|_| normal(&mut rng)).collect();
        let p = |r: mixvol::Result<diagnostics::TestResult>| r.map(|t| t.p_value).unwrap_or(0.0);
        jb += (p(diagnostics::jarque_bera(&x)) < 0.05) as usize;
        lb += (p(diagnostics::ljung_box(&x, 20)) < 0.05) as usize;
        arch += (p(diagnostics::arch_lm(&x, 20)) < 0.05) as usize;
    }
    let rate = |k: usize| k as f64 / CALIBRATION_REPS as f64;
    let in_band = |k: usize| (CALIBRATION_RATE.0..=CALIBRATION_RATE.1).contains(&rate(k));
    let cv = AdfTrend::Constant.critical_values(5000)[0];
    let cv_trend = AdfTrend::ConstantTrend.critical_values(5000)[0];
    within_budget(
        start,
        CALIBRATION_BUDGET,
        check(
            in_band(jb) && in_band(lb) && in_band(arch) && (cv - ADF_CV).abs() <= ADF_CV_TOL,
            format!(
                "rejection rates JB {:.1}%, LB(20) {:.1}%, ARCH-LM(20) {:.1}%; ADF 1% cv {cv:.4} (constant), {cv_trend:.4} (constant + trend)",
                100.0 * rate(jb),
                100.0 * rate(lb),
                100.0 * rate(arch)
            ),
        ),
    )
}

fn mixvol_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mixvol"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(dir).unwrap().display().to_string();
                files.insert(key, fs::read(&p).unwrap());
            }
        }
    }
    files
}

const SIM_CONFIG: &str = r#"
seed = 10
[simulate]
periods = 60
days_per_period = 22
alpha = 0.08
beta = 0.86
m = 0.5
covariates = [{ name = "x", lags = 6, theta = 0.01, omega2 = 1.4, generator = "log-ar1", mean = 3.2, phi = 0.95, sd = 0.2 }]
"#;

const RUN_CONFIG: &str = r#"
seed = 4
[optimizer]
starts = 2

[series.ret]
path = "sim/returns.csv"
value_column = "return"

[series.twin]
path = "sim2/returns.csv"
value_column = "return"

[series.x]
path = "sim/x.csv"
value_column = "value"
frequency = "monthly"

[garch_midas]
returns = "ret"
[[garch_midas.models]]
covariates = [{ name = "rv", lags = 6 }]
[garch_midas.grid]
covariates = ["x"]
lags = 6

[dcc]
a = "ret"
b = "twin"
span = 6
"#;

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let root = dir.path();
    fs::write(root.join("sim.toml"), SIM_CONFIG).map_err(|e| e.to_string())?;
    fs::write(root.join("run.toml"), RUN_CONFIG).map_err(|e| e.to_string())?;
    let path = |p: &str| root.join(p).display().to_string();
    mixvol_cli(&["simulate", "--config", &path("sim.toml"), "--out", &path("sim")])?;
    mixvol_cli(&["simulate", "--config", &path("sim.toml"), "--out", &path("sim2"), "--seed", "11"])?;

    let mut compared = 0;
    let mut differing = Vec::new();
    for (cmd, extra) in [
        ("simulate", vec![]),
        ("describe", vec![]),
        ("fit-garch-midas", vec!["--jobs", "2"]),
        ("fit-dcc", vec![]),
    ] {
        let config = if cmd == "simulate" { "sim.toml" } else { "run.toml" };
        let mut runs = Vec::new();
        for run in 0..2 {
            let out = path(&format!("{cmd}-{run}"));
            let cfg = path(config);
            let mut args = vec![cmd, "--config", &cfg, "--out", &out, "--seed", "123"];
            args.extend(extra.iter().copied());
            mixvol_cli(&args)?;
            runs.push(snapshot(Path::new(&out)));
        }
        compared += runs[0].len();
        if runs[0].is_empty() || runs[0] != runs[1] {
            differing.push(cmd);
        }
    }
    within_budget(
        start,
        DETERMINISM_BUDGET,
        check(
            differing.is_empty(),
            format!("4 commands, {compared} files byte-identical across two runs; differing: {differing:?}"),
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags; a name filter that excludes this
    // target means nothing to run
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "weight schemes", criterion_1()),
        (2, "likelihood oracle", criterion_2()),
        (3, "nesting of GJR-GARCH", criterion_3()),
    ];
    let (c4, c11) = criteria_4_and_11();
    results.push((4, "GARCH-MIDAS parameter recovery", c4));
    results.push((5, "unit-mean short-run component", criterion_5()));
    results.push((6, "variance ratio limits and bounds", criterion_6()));
    results.push((7, "DCC bounds, CCC nesting and recovery", criterion_7()));
    results.push((8, "DCC-MIDAS regime tracking", criterion_8()));
    results.push((9, "diagnostics calibration", criterion_9()));
    results.push((10, "CLI determinism", criterion_10()));
    results.push((11, "gradient at converged optima", c11));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
