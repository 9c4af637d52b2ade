use chrono::{Months, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::timeseries::{Covariate, Frequency, MixedPanel};

use super::{GarchMidasModel, GarchMidasParams, Link};

/// How a simulated covariate is generated, one value per period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariateGenerator {
    /// Sum of squared simulated returns over the period.
    RealizedVolatility,
    /// Exogenous Gaussian AR(1) around `mean`.
    Ar1 { mean: f64, phi: f64, sd: f64 },
    /// Positive covariate whose logarithm is a Gaussian AR(1) around `mean`;
    /// a stand-in for realized volatility that is not fed back by returns.
    LogAr1 { mean: f64, phi: f64, sd: f64 },
}

/// Simulated panel with the true component paths for every day.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub panel: MixedPanel,
    pub tau: Vec<f64>,
    pub g: Vec<f64>,
}

/// Simulate `periods` periods of `days_per_period` days from a GARCH-MIDAS
/// process with Gaussian innovations.
///
/// A warm-up of twice the longest lag length is simulated and discarded;
/// the returned panel carries no presample, so its first `K` periods are
/// burn-in for estimation. Days are dated `1..=days_per_period` of
/// consecutive months from January 2000.
pub fn simulate(
    model: &GarchMidasModel,
    params: &GarchMidasParams,
    generators: &[CovariateGenerator],
    periods: usize,
    days_per_period: usize,
    seed: u64,
) -> Result<Simulation> {
    model.validate()?;
    params.validate(model)?;
    if generators.len() != model.covariates.len() {
        return Err(Error::LengthMismatch {
            left: generators.len(),
            right: model.covariates.len(),
        });
    }
    if !(1..=28).contains(&days_per_period) || periods == 0 {
        return Err(Error::InvalidParameter(
            "need at least one period and 1..=28 days per period".into(),
        ));
    }
    let warmup = 2 * model.max_lags();
    let total = warmup + periods;
    let link = |x: f64| match model.link {
        Link::Identity => x,
        Link::Log => x.exp(),
    };
    let tau_level = link(params.m);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = vec![Vec::with_capacity(total); generators.len()];
    let weights: Vec<Vec<f64>> = model
        .covariates
        .iter()
        .zip(&params.schemes)
        .map(|(c, s)| s.weights(c.lags))
        .collect::<Result<_>>()?;
    let initial: Vec<f64> = generators
        .iter()
        .map(|g| match *g {
            CovariateGenerator::RealizedVolatility => days_per_period as f64 * tau_level,
            CovariateGenerator::Ar1 { mean, .. } => mean,
            CovariateGenerator::LogAr1 { mean, .. } => mean.exp(),
        })
        .collect();

    let intercept = params.short_run_intercept();
    let (mut returns, mut taus, mut gs) = (Vec::new(), Vec::new(), Vec::new());
    let mut g = 1.0;
    let mut prev_e: Option<f64> = None;
    for p in 0..total {
        let mut index = params.m;
        for j in 0..generators.len() {
            let filtered: f64 = weights[j]
                .iter()
                .enumerate()
                .map(|(k, w)| w * if p > k { x[j][p - k - 1] } else { initial[j] })
                .sum();
            index += params.theta[j] * filtered;
        }
        let tau = link(index);
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Infeasible(format!("simulated long-run component {tau} in period {p}")));
        }
        for (j, gen) in generators.iter().enumerate() {
            match *gen {
                CovariateGenerator::Ar1 { mean, phi, sd } => {
                    let last = if p > 0 { x[j][p - 1] } else { mean };
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[j].push(mean + phi * (last - mean) + sd * z);
                }
                CovariateGenerator::LogAr1 { mean, phi, sd } => {
                    let last = if p > 0 { x[j][p - 1].ln() } else { mean };
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[j].push((mean + phi * (last - mean) + sd * z).exp());
                }
                CovariateGenerator::RealizedVolatility => {}
            }
        }
        let mut rv = 0.0;
        for _ in 0..days_per_period {
            if let Some(e) = prev_e {
                let a = if e < 0.0 { params.alpha + params.gamma } else { params.alpha };
                g = intercept + a * e * e / tau + params.beta * g;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            let e = (tau * g).sqrt() * z;
            prev_e = Some(e);
            rv += (params.mu + e).powi(2);
            if p >= warmup {
                returns.push(params.mu + e);
                taus.push(tau);
                gs.push(g);
            }
        }
        for (j, gen) in generators.iter().enumerate() {
            if let CovariateGenerator::RealizedVolatility = gen {
                x[j].push(rv);
            }
        }
    }

    let origin = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let period_dates: Vec<NaiveDate> = (0..periods)
        .map(|p| origin + Months::new(p as u32))
        .collect();
    let day_dates = period_dates
        .iter()
        .flat_map(|d| (0..days_per_period).map(move |i| *d + chrono::Days::new(i as u64)))
        .collect();
    let day_period: Vec<usize> = (0..periods * days_per_period).map(|i| i / days_per_period).collect();
    let covariates = model
        .covariates
        .iter()
        .zip(&x)
        .map(|(c, values)| Covariate {
            name: c.name.clone(),
            frequency: Frequency::Monthly,
            lags: c.lags,
            period_dates: period_dates.clone(),
            values: values[warmup..].to_vec(),
            day_period: day_period.clone(),
        })
        .collect();
    Ok(Simulation {
        panel: MixedPanel::from_parts(day_dates, returns, covariates)?,
        tau: taus,
        g: gs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garch_midas::log_likelihood_contributions;
    use crate::weights::WeightScheme;

    fn setup() -> (GarchMidasModel, GarchMidasParams) {
        let model = GarchMidasModel::single("RV", 6, Link::Identity);
        let params = GarchMidasParams {
            mu: 0.0,
            alpha: 0.06,
            beta: 0.9,
            gamma: 0.02,
            m: 0.1,
            theta: vec![0.02],
            schemes: vec![WeightScheme::restricted_beta(4.0)],
        };
        (model, params)
    }

    #[test]
    fn deterministic_and_shaped() {
        let (model, params) = setup();
        let gens = [CovariateGenerator::RealizedVolatility];
        let a = simulate(&model, &params, &gens, 30, 20, 7).unwrap();
        let b = simulate(&model, &params, &gens, 30, 20, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.panel.n_days(), 600);
        assert_eq!(a.panel.n_periods(), 30);
        assert_eq!(a.tau.len(), 600);
        let c = simulate(&model, &params, &gens, 30, 20, 8).unwrap();
        assert_ne!(a.panel.returns, c.panel.returns);
    }

    #[test]
    fn paths_match_model_components() {
        // the likelihood recomputes τ and g from the panel; with the true
        // parameters they must reproduce the simulated paths
        let (model, params) = setup();
        let sim = simulate(&model, &params, &[CovariateGenerator::RealizedVolatility], 40, 22, 3).unwrap();
        let lr = super::super::long_run_component(&sim.panel, &model, &params).unwrap();
        let first = lr.first_day;
        assert_eq!(first, 6 * 22);
        for (a, b) in lr.tau.iter().zip(&sim.tau[first..]) {
            assert!((a - b).abs() < 1e-12 * b.abs());
        }
        let rv = crate::timeseries::realized_volatility(&sim.panel).unwrap();
        let cov = sim.panel.covariate("RV").unwrap();
        for (a, b) in rv.values().iter().zip(&cov.values) {
            assert!((a - b).abs() < 1e-12 * b.abs());
        }
        // g restarts at 1 in the likelihood, so compare after it has decayed
        let g = super::super::short_run_component(&sim.panel.returns[first..], &lr.tau, &params).unwrap();
        let tail = g.len() - 1;
        assert!((g[tail] - sim.g[first + tail]).abs() < 1e-6);
        assert!(log_likelihood_contributions(&sim.panel, &model, &params).is_ok());
    }
}
