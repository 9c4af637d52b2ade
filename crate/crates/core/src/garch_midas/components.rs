use crate::error::{Error, Result};
use crate::timeseries::{Covariate, MixedPanel};

use super::{GarchMidasModel, GarchMidasParams, Link};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Long-run component on the post-burn-in days.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRun {
    /// Index of the first panel day with a full lag window for every covariate.
    pub first_day: usize,
    /// `τ` for days `first_day..n`.
    pub tau: Vec<f64>,
}

fn panel_covariates<'a>(panel: &'a MixedPanel, model: &GarchMidasModel) -> Result<Vec<&'a Covariate>> {
    model
        .covariates
        .iter()
        .map(|c| {
            panel.covariate(&c.name).ok_or_else(|| {
                Error::InvalidParameter(format!("panel has no covariate named `{}`", c.name))
            })
        })
        .collect()
}

/// First day at which every model covariate has `K` prior periods.
pub(crate) fn burn_in(panel: &MixedPanel, model: &GarchMidasModel) -> Result<usize> {
    let covs = panel_covariates(panel, model)?;
    let mut first = 0;
    for (spec, cov) in model.covariates.iter().zip(covs) {
        let d = cov
            .day_period
            .iter()
            .position(|&p| p >= spec.lags)
            .ok_or_else(|| Error::CovariateHistory {
                name: spec.name.clone(),
                reason: format!("fewer than {} periods of history", spec.lags + 1),
            })?;
        first = first.max(d);
    }
    if first >= panel.n_days() {
        return Err(Error::TooShort {
            needed: first + 1,
            got: panel.n_days(),
        });
    }
    Ok(first)
}

/// `τ` per post-burn-in day. The identity link fails with
/// [`Error::Infeasible`] when any `τ ≤ 0`.
pub fn long_run_component(
    panel: &MixedPanel,
    model: &GarchMidasModel,
    params: &GarchMidasParams,
) -> Result<LongRun> {
    model.validate()?;
    for s in &params.schemes {
        s.validate()?;
    }
    let first_day = burn_in(panel, model)?;
    let tau = tau_unchecked(panel, model, params, first_day)?;
    Ok(LongRun { first_day, tau })
}

/// Unit-mean GJR-GARCH recursion, `g` starting at 1 on the first day:
///
/// `g_i = (1 − α − γ/2 − β) + (α + γ·1{ε_{i−1} < 0}) ε²_{i−1} / τ_i + β g_{i−1}`,
/// with `ε = r − μ`. `returns` and `tau` cover the same days.
pub fn short_run_component(returns: &[f64], tau: &[f64], params: &GarchMidasParams) -> Result<Vec<f64>> {
    if returns.len() != tau.len() {
        return Err(Error::LengthMismatch {
            left: returns.len(),
            right: tau.len(),
        });
    }
    let intercept = params.short_run_intercept();
    if !(intercept > 0.0) || params.alpha < 0.0 || params.beta < 0.0 || params.alpha + params.gamma < 0.0 {
        return Err(Error::Infeasible("short-run parameters outside the stationarity region".into()));
    }
    let mut g = Vec::with_capacity(returns.len());
    let mut prev = 1.0;
    for i in 0..returns.len() {
        let gi = if i == 0 {
            1.0
        } else {
            let e = returns[i - 1] - params.mu;
            let a = if e < 0.0 { params.alpha + params.gamma } else { params.alpha };
            intercept + a * e * e / tau[i] + params.beta * prev
        };
        g.push(gi);
        prev = gi;
    }
    Ok(g)
}

/// Per-day Gaussian log-likelihood terms over the post-burn-in sample.
pub fn log_likelihood_contributions(
    panel: &MixedPanel,
    model: &GarchMidasModel,
    params: &GarchMidasParams,
) -> Result<Vec<f64>> {
    params.validate(model)?;
    contributions(panel, model, params)
}

/// Likelihood terms without range checks on the parameters, for finite
/// differences that step just outside the estimation region. Only
/// positivity of `τ` and `g` is enforced.
pub(crate) fn contributions(
    panel: &MixedPanel,
    model: &GarchMidasModel,
    params: &GarchMidasParams,
) -> Result<Vec<f64>> {
    let first_day = burn_in(panel, model)?;
    let tau = tau_unchecked(panel, model, params, first_day)?;
    let r = &panel.returns[first_day..];
    let intercept = params.short_run_intercept();
    let mut out = Vec::with_capacity(r.len());
    let mut g = 1.0;
    for i in 0..r.len() {
        if i > 0 {
            let e = r[i - 1] - params.mu;
            let a = if e < 0.0 { params.alpha + params.gamma } else { params.alpha };
            g = intercept + a * e * e / tau[i] + params.beta * g;
        }
        let h = tau[i] * g;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Infeasible("non-positive conditional variance".into()));
        }
        let e = r[i] - params.mu;
        out.push(-0.5 * (LN_2PI + h.ln() + e * e / h));
    }
    Ok(out)
}

fn tau_unchecked(
    panel: &MixedPanel,
    model: &GarchMidasModel,
    params: &GarchMidasParams,
    first_day: usize,
) -> Result<Vec<f64>> {
    let covs = panel_covariates(panel, model)?;
    let n = panel.n_days();
    let mut index = vec![params.m; n - first_day];
    let mut weights = Vec::new();
    for ((spec, cov), (theta, scheme)) in model
        .covariates
        .iter()
        .zip(covs)
        .zip(params.theta.iter().zip(&params.schemes))
    {
        scheme.weights_into(spec.lags, &mut weights);
        let filtered = cov.filtered_periods(&weights);
        for (slot, &p) in index.iter_mut().zip(&cov.day_period[first_day..]) {
            *slot += theta * filtered[p].expect("burn-in guarantees a full lag window");
        }
    }
    let tau = match model.link {
        Link::Log => index.into_iter().map(f64::exp).collect::<Vec<_>>(),
        Link::Identity => index,
    };
    if let Some(i) = tau.iter().position(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::Infeasible(format!(
            "long-run component {} on {}",
            tau[i],
            panel.day_dates[first_day + i]
        )));
    }
    Ok(tau)
}

/// Gaussian log-likelihood summed over post-burn-in days; `−∞` for
/// infeasible or non-finite parameter points.
pub fn log_likelihood(panel: &MixedPanel, model: &GarchMidasModel, params: &GarchMidasParams) -> f64 {
    match log_likelihood_contributions(panel, model, params) {
        Ok(c) => {
            let v: f64 = c.iter().sum();
            if v.is_finite() {
                v
            } else {
                f64::NEG_INFINITY
            }
        }
        Err(_) => f64::NEG_INFINITY,
    }
}
