use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{
    self, maximize, numerical_hessian, numerical_scores, Bounds, Constraint, CovarianceKind, OptimizerOptions,
};
use crate::timeseries::MixedPanel;

use super::components::{burn_in, contributions, long_run_component, short_run_component};
use super::{GarchMidasModel, GarchMidasParams, Link, STATIONARITY_MARGIN};

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Starting values; defaults to [`GarchMidasParams::default_start`].
    pub start: Option<GarchMidasParams>,
    /// Parameters held fixed, by reported name (e.g. `"theta"`). Fixing a
    /// loading at zero also fixes that covariate's weight parameters.
    pub fixed: BTreeMap<String, f64>,
    pub optimizer: OptimizerOptions,
    pub covariance: CovarianceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub p_value: Option<f64>,
    pub fixed: bool,
}

/// Estimated GARCH-MIDAS model with its component paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchMidasFit {
    pub model: GarchMidasModel,
    pub params: GarchMidasParams,
    pub estimates: Vec<ParamEstimate>,
    pub covariance: CovarianceKind,
    pub llh: f64,
    pub bic: f64,
    pub aic: f64,
    /// Days entering the likelihood.
    pub n_obs: usize,
    /// Estimated (non-fixed) parameters.
    pub n_params: usize,
    /// Variance ratio in percent; `None` when total volatility is constant.
    pub variance_ratio: Option<f64>,
    /// Index of the first likelihood day in the panel.
    pub first_day: usize,
    pub dates: Vec<NaiveDate>,
    pub tau: Vec<f64>,
    pub g: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the working-space gradient at the optimum.
    pub gradient_norm: f64,
}

impl GarchMidasFit {
    pub fn estimate(&self, name: &str) -> Option<&ParamEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    /// Total conditional variance `τ·g` per likelihood day.
    pub fn conditional_variance(&self) -> Vec<f64> {
        self.tau.iter().zip(&self.g).map(|(t, g)| t * g).collect()
    }
}

/// The unconstrained space the optimizer searches, exposed so callers can
/// check gradients at a reported optimum.
pub struct WorkingSpace<'a> {
    panel: &'a MixedPanel,
    model: &'a GarchMidasModel,
    bounds: Bounds,
    gamma_index: Option<usize>,
}

/// Rough standard-error sizes of the unbounded parameters, so that the
/// search sees a likelihood with curvature of order one in every
/// direction.
struct ParameterScales {
    mu: f64,
    m: f64,
    theta: Vec<f64>,
}

fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

impl ParameterScales {
    fn new(panel: &MixedPanel, model: &GarchMidasModel) -> Result<Self> {
        let first = burn_in(panel, model)?;
        let r = &panel.returns[first..];
        let n = r.len() as f64;
        let positive = |v: f64| if v > 0.0 && v.is_finite() { v } else { 1.0 };
        let sd = positive(sample_sd(r));
        let level = match model.link {
            Link::Identity => sd * sd,
            Link::Log => 1.0,
        };
        let m = level * (2.0 / n).sqrt();
        let theta = model
            .covariates
            .iter()
            .map(|c| {
                let x = panel.covariate(&c.name).map(|c| sample_sd(&c.values)).unwrap_or(1.0);
                m / positive(x)
            })
            .collect();
        Ok(Self {
            mu: sd / n.sqrt(),
            m,
            theta,
        })
    }
}

impl<'a> WorkingSpace<'a> {
    pub fn new(panel: &'a MixedPanel, model: &'a GarchMidasModel, fixed: &BTreeMap<String, f64>) -> Result<Self> {
        let names = model.parameter_names();
        for key in fixed.keys() {
            if !names.contains(key) {
                return Err(Error::InvalidParameter(format!("unknown parameter `{key}`")));
            }
            if matches!(key.as_str(), "alpha" | "beta" | "gamma") {
                return Err(Error::InvalidParameter(format!("`{key}` cannot be fixed")));
            }
        }
        let idx = |n: &str| names.iter().position(|x| x == n);
        let (alpha, beta, gamma) = (idx("alpha").expect("alpha"), idx("beta").expect("beta"), idx("gamma"));
        let mut bounds = Bounds::free(names.len());
        let members = match gamma {
            // γ's slot carries α + γ so that every simplex member is non-negative
            Some(g) => vec![(alpha, 0.5), (beta, 1.0), (g, 0.5)],
            None => vec![(alpha, 1.0), (beta, 1.0)],
        };
        bounds = bounds.with_simplex(members, 1.0 - STATIONARITY_MARGIN);
        let scales = ParameterScales::new(panel, model)?;
        let mut theta_j = 0;
        for (i, name) in names.iter().enumerate() {
            if let Some(v) = fixed.get(name) {
                bounds = bounds.set(i, Constraint::Fixed(*v));
                theta_j += name.starts_with("theta") as usize;
            } else if name == "mu" {
                bounds = bounds.set(i, Constraint::Scaled(scales.mu));
            } else if name == "m" {
                bounds = bounds.set(i, Constraint::Scaled(scales.m));
            } else if name.starts_with("theta") {
                bounds = bounds.set(i, Constraint::Scaled(scales.theta[theta_j]));
                theta_j += 1;
            } else if name.starts_with("omega1") || name.starts_with("omega2") {
                bounds = bounds.set(i, Constraint::Above(1.0));
            } else if name.starts_with("omega") {
                bounds = bounds.set(i, Constraint::Interval(0.0, 1.0));
            }
        }
        Ok(Self {
            panel,
            model,
            bounds,
            gamma_index: gamma,
        })
    }

    fn to_search(&self, report: &[f64]) -> Vec<f64> {
        let mut v = report.to_vec();
        if let Some(g) = self.gamma_index {
            v[g] += v[1];
        }
        v
    }

    fn to_report(&self, search: &[f64]) -> Vec<f64> {
        let mut v = search.to_vec();
        if let Some(g) = self.gamma_index {
            v[g] -= v[1];
        }
        v
    }

    /// Working coordinates of `params`.
    pub fn point(&self, params: &GarchMidasParams) -> Result<Vec<f64>> {
        self.bounds.to_working(&self.to_search(&params.to_vec(self.model)))
    }

    pub fn params(&self, working: &[f64]) -> GarchMidasParams {
        GarchMidasParams::from_vec(self.model, &self.to_report(&self.bounds.to_natural(working)))
    }

    /// Log-likelihood as a function of working coordinates.
    pub fn log_likelihood(&self, working: &[f64]) -> f64 {
        super::log_likelihood(self.panel, self.model, &self.params(working))
    }
}

/// Maximum-likelihood estimation of a GARCH-MIDAS model.
///
/// Non-convergence is not an error: the best point is returned with
/// `converged = false`.
pub fn fit(panel: &MixedPanel, model: &GarchMidasModel, options: &FitOptions) -> Result<GarchMidasFit> {
    model.validate()?;
    let first_day = burn_in(panel, model)?;
    let names = model.parameter_names();

    let start = options
        .start
        .clone()
        .unwrap_or_else(|| GarchMidasParams::default_start(model, &panel.returns[first_day..]));
    start.validate(model)?;

    let mut fixed = options.fixed.clone();
    let start_vec = start.to_vec(model);
    for theta in names.iter().filter(|n| n.starts_with("theta")) {
        if fixed.get(theta) == Some(&0.0) {
            // weights are unidentified without a loading
            let suffix = &theta["theta".len()..];
            for (i, n) in names.iter().enumerate() {
                if n.starts_with("omega") && n.ends_with(suffix) {
                    fixed.entry(n.clone()).or_insert(start_vec[i]);
                }
            }
        }
    }
    let mut start_vec = start.to_vec(model);
    for (i, n) in names.iter().enumerate() {
        if let Some(v) = fixed.get(n) {
            start_vec[i] = *v;
        }
    }

    let space = WorkingSpace::new(panel, model, &fixed)?;
    let search_start = space.to_search(&start_vec);
    let objective = |x: &[f64]| {
        let p = GarchMidasParams::from_vec(model, &space.to_report(x));
        super::log_likelihood(panel, model, &p)
    };
    if !objective(&search_start).is_finite() {
        return Err(Error::Infeasible("log-likelihood is not finite at the start".into()));
    }
    let opt = maximize(objective, &search_start, &space.bounds, &options.optimizer)?;
    let params = GarchMidasParams::from_vec(model, &space.to_report(&opt.point));

    let estimates = standard_errors(panel, model, &params, &names, &fixed, options.covariance);

    let lr = long_run_component(panel, model, &params)?;
    let g = short_run_component(&panel.returns[first_day..], &lr.tau, &params)?;
    let n_obs = g.len();
    let n_params = names.len() - fixed.len();
    let llh = opt.objective;
    let vr = variance_ratio_paths(&lr.tau, &g).ok();

    Ok(GarchMidasFit {
        model: model.clone(),
        params,
        estimates,
        covariance: options.covariance,
        llh,
        bic: n_params as f64 * (n_obs as f64).ln() - 2.0 * llh,
        aic: 2.0 * n_params as f64 - 2.0 * llh,
        n_obs,
        n_params,
        variance_ratio: vr,
        first_day,
        dates: panel.day_dates[first_day..].to_vec(),
        tau: lr.tau,
        g,
        converged: opt.converged,
        iterations: opt.iterations,
        gradient_norm: opt.gradient_norm,
    })
}

/// Distance below which a weight parameter counts as sitting on its bound.
const BOUNDARY_TOLERANCE: f64 = 1e-4;

fn weight_at_boundary(name: &str, value: f64) -> bool {
    if name.starts_with("omega1") || name.starts_with("omega2") {
        value - 1.0 < BOUNDARY_TOLERANCE
    } else if name.starts_with("omega") {
        value < BOUNDARY_TOLERANCE || 1.0 - value < BOUNDARY_TOLERANCE
    } else {
        false
    }
}

/// Standard errors over the estimated parameters. Weight parameters on
/// their bound are conditioned on; when the Hessian is still not negative
/// definite, all weight parameters are conditioned on before giving up.
fn standard_errors(
    panel: &MixedPanel,
    model: &GarchMidasModel,
    params: &GarchMidasParams,
    names: &[String],
    fixed: &BTreeMap<String, f64>,
    kind: CovarianceKind,
) -> Vec<ParamEstimate> {
    let full = params.to_vec(model);
    let estimated: Vec<usize> = (0..names.len()).filter(|i| !fixed.contains_key(&names[*i])).collect();
    let interior: Vec<usize> = estimated
        .iter()
        .copied()
        .filter(|&i| !weight_at_boundary(&names[i], full[i]))
        .collect();
    let no_weights: Vec<usize> = interior
        .iter()
        .copied()
        .filter(|&i| !names[i].starts_with("omega"))
        .collect();

    let se_over = |free: &[usize]| -> Option<Vec<f64>> {
        let embed = |x: &[f64]| {
            let mut v = full.clone();
            for (k, &i) in free.iter().enumerate() {
                v[i] = x[k];
            }
            GarchMidasParams::from_vec(model, &v)
        };
        let x0: Vec<f64> = free.iter().map(|&i| full[i]).collect();
        let total = |x: &[f64]| match contributions(panel, model, &embed(x)) {
            Ok(c) => c.iter().sum(),
            Err(_) => f64::NAN,
        };
        let h = numerical_hessian(total, &x0).ok()?;
        match kind {
            CovarianceKind::InverseHessian => optimizer::standard_errors(&h),
            CovarianceKind::Sandwich => {
                let scores = numerical_scores(
                    |x: &[f64]| contributions(panel, model, &embed(x)).unwrap_or_else(|_| vec![f64::NAN]),
                    &x0,
                )
                .ok()?;
                optimizer::sandwich_standard_errors(&h, &scores)
            }
        }
    };
    let mut se = vec![None; names.len()];
    for free in [&interior, &no_weights] {
        if let Some(values) = se_over(free) {
            for (&i, v) in free.iter().zip(values) {
                se[i] = Some(v);
            }
            break;
        }
    }

    names
        .iter()
        .enumerate()
        .map(|(i, name)| ParamEstimate {
            name: name.clone(),
            value: full[i],
            std_error: se[i],
            p_value: se[i].map(|s| optimizer::p_value(full[i], s)).filter(|p| p.is_finite()),
            fixed: fixed.contains_key(name),
        })
        .collect()
}

fn variance(x: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, s) = x.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let m = s / n as f64;
    x.map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)
}

pub(crate) fn variance_ratio_paths(tau: &[f64], g: &[f64]) -> Result<f64> {
    if tau.len() != g.len() || tau.len() < 2 {
        return Err(Error::Degenerate("variance ratio needs at least two days".into()));
    }
    let total = variance(tau.iter().zip(g).map(|(t, g)| (t * g).ln()));
    if !(total > 0.0) {
        return Err(Error::Degenerate("total conditional volatility is constant".into()));
    }
    // the limits hold exactly rather than up to rounding
    if tau.iter().all(|t| *t == tau[0]) {
        return Ok(0.0);
    }
    if g.iter().all(|v| *v == g[0]) {
        return Ok(100.0);
    }
    let long = variance(tau.iter().map(|t| t.ln()));
    Ok(100.0 * long / total)
}

/// `100 · Var(log τ) / Var(log τg)` over the fit's likelihood days.
pub fn variance_ratio(fit: &GarchMidasFit) -> Result<f64> {
    variance_ratio_paths(&fit.tau, &fit.g)
}
