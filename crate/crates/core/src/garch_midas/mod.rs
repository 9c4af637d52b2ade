//! GARCH-MIDAS: daily returns with variance `τ_t · g_{i,t}`.
//!
//! `τ_t` is a slowly moving long-run component driven by a MIDAS filter of
//! lagged low-frequency covariates, either directly (identity link, used
//! for realized volatility) or through `exp` (log link, used whenever
//! macroeconomic covariates enter). `g_{i,t}` is a unit-mean GJR-GARCH(1,1)
//! recursion on returns scaled by `τ_t`.

mod components;
mod fit;
mod gjr;
mod simulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::WeightScheme;

pub use components::{
    log_likelihood, log_likelihood_contributions, long_run_component, short_run_component, LongRun,
};
pub use fit::{fit, variance_ratio, FitOptions, GarchMidasFit, ParamEstimate, WorkingSpace};
pub use gjr::{fit_gjr_garch, gjr_log_likelihood, GjrFit, GjrParams};
pub use simulate::{simulate, CovariateGenerator, Simulation};

/// Slack kept below the stationarity boundary `α + β + γ/2 < 1`.
pub const STATIONARITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `τ_t = m + Σ_j θ_j Σ_k φ_k X^j_{t-k}`; the parameter region must keep τ positive.
    Identity,
    /// `log τ_t = m + Σ_j θ_j Σ_k φ_k X^j_{t-k}`.
    Log,
}

/// A covariate entering the long-run component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCovariate {
    /// Name of the panel covariate.
    pub name: String,
    /// MIDAS lag length `K`.
    pub lags: usize,
    /// Weight family; its parameter values serve as the default start.
    pub scheme: WeightScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchMidasModel {
    pub covariates: Vec<ModelCovariate>,
    pub link: Link,
    /// Estimate the GJR leverage term `γ`; otherwise `γ = 0`.
    pub asymmetric: bool,
}

impl GarchMidasModel {
    /// One covariate with a restricted beta filter (`ω₁ = 1`, start `ω₂ = 3`).
    pub fn single(name: impl Into<String>, lags: usize, link: Link) -> Self {
        Self {
            covariates: vec![ModelCovariate {
                name: name.into(),
                lags,
                scheme: WeightScheme::restricted_beta(3.0),
            }],
            link,
            asymmetric: true,
        }
    }

    pub fn with_covariate(mut self, name: impl Into<String>, lags: usize) -> Self {
        self.covariates.push(ModelCovariate {
            name: name.into(),
            lags,
            scheme: WeightScheme::restricted_beta(3.0),
        });
        self
    }

    pub fn symmetric(mut self) -> Self {
        self.asymmetric = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.covariates.is_empty() || self.covariates.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "GARCH-MIDAS takes one or two covariates, got {}",
                self.covariates.len()
            )));
        }
        for c in &self.covariates {
            if c.lags == 0 {
                return Err(Error::InvalidParameter(format!(
                    "covariate `{}` needs K >= 1",
                    c.name
                )));
            }
            c.scheme.validate()?;
        }
        Ok(())
    }

    pub fn max_lags(&self) -> usize {
        self.covariates.iter().map(|c| c.lags).max().unwrap_or(0)
    }

    /// Names of the reported parameters, in estimation order.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = vec!["mu".to_string(), "alpha".into(), "beta".into()];
        if self.asymmetric {
            names.push("gamma".into());
        }
        names.push("m".into());
        let suffix = |j: usize| if self.covariates.len() == 1 { String::new() } else { format!("_{}", j + 1) };
        for j in 0..self.covariates.len() {
            names.push(format!("theta{}", suffix(j)));
        }
        for (j, c) in self.covariates.iter().enumerate() {
            match c.scheme {
                WeightScheme::Beta { restricted, .. } => {
                    if !restricted {
                        names.push(format!("omega1{}", suffix(j)));
                    }
                    names.push(format!("omega2{}", suffix(j)));
                }
                WeightScheme::ExpWeighted { .. } => names.push(format!("omega{}", suffix(j))),
            }
        }
        names
    }
}

/// Parameter values of a [`GarchMidasModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchMidasParams {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub m: f64,
    pub theta: Vec<f64>,
    /// Weight parameters per covariate, same family as the model's scheme.
    pub schemes: Vec<WeightScheme>,
}

impl GarchMidasParams {
    /// Default start: `μ=0, α=0.05, β=0.9, γ=0.05, θ=0` and the model's
    /// scheme values. `m` is `ln(var)` for the log link and `var` for the
    /// identity link, where `var` is the sample variance of `returns`.
    pub fn default_start(model: &GarchMidasModel, returns: &[f64]) -> Self {
        let n = returns.len().max(2) as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let var = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).max(1e-12);
        Self {
            mu: 0.0,
            alpha: 0.05,
            beta: 0.9,
            gamma: if model.asymmetric { 0.05 } else { 0.0 },
            m: match model.link {
                Link::Log => var.ln(),
                Link::Identity => var,
            },
            theta: vec![0.0; model.covariates.len()],
            schemes: model
                .covariates
                .iter()
                .map(|c| match c.scheme {
                    WeightScheme::Beta {
                        omega1,
                        omega2,
                        restricted,
                    } => WeightScheme::Beta {
                        omega1: if restricted { 1.0 } else { omega1.max(1.5) },
                        omega2: omega2.max(1.0 + 1e-3),
                        restricted,
                    },
                    s => s,
                })
                .collect(),
        }
    }

    /// Short-run intercept `1 − α − γ/2 − β`.
    pub fn short_run_intercept(&self) -> f64 {
        1.0 - self.alpha - self.gamma / 2.0 - self.beta
    }

    pub fn validate(&self, model: &GarchMidasModel) -> Result<()> {
        if self.theta.len() != model.covariates.len() || self.schemes.len() != model.covariates.len() {
            return Err(Error::InvalidParameter(
                "parameter vector does not match the model's covariates".into(),
            ));
        }
        let finite = [self.mu, self.alpha, self.beta, self.gamma, self.m]
            .iter()
            .chain(&self.theta)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        if !model.asymmetric && self.gamma != 0.0 {
            return Err(Error::InvalidParameter("symmetric model requires gamma = 0".into()));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.alpha + self.gamma < 0.0 {
            return Err(Error::Infeasible(format!(
                "need alpha >= 0, beta >= 0, alpha + gamma >= 0 (alpha={}, beta={}, gamma={})",
                self.alpha, self.beta, self.gamma
            )));
        }
        if self.short_run_intercept() < STATIONARITY_MARGIN * 0.5 {
            return Err(Error::Infeasible(format!(
                "alpha + beta + gamma/2 = {} is not below 1",
                1.0 - self.short_run_intercept()
            )));
        }
        for s in &self.schemes {
            s.validate()?;
        }
        Ok(())
    }

    /// Flatten into the order of [`GarchMidasModel::parameter_names`].
    pub fn to_vec(&self, model: &GarchMidasModel) -> Vec<f64> {
        let mut v = vec![self.mu, self.alpha, self.beta];
        if model.asymmetric {
            v.push(self.gamma);
        }
        v.push(self.m);
        v.extend(&self.theta);
        for s in &self.schemes {
            match *s {
                WeightScheme::Beta {
                    omega1,
                    omega2,
                    restricted,
                } => {
                    if !restricted {
                        v.push(omega1);
                    }
                    v.push(omega2);
                }
                WeightScheme::ExpWeighted { omega } => v.push(omega),
            }
        }
        v
    }

    /// Inverse of [`to_vec`](Self::to_vec).
    pub fn from_vec(model: &GarchMidasModel, v: &[f64]) -> Self {
        let mut it = v.iter().copied();
        let mut next = || it.next().expect("parameter vector length");
        let mu = next();
        let alpha = next();
        let beta = next();
        let gamma = if model.asymmetric { next() } else { 0.0 };
        let m = next();
        let theta = (0..model.covariates.len()).map(|_| next()).collect();
        let schemes = model
            .covariates
            .iter()
            .map(|c| match c.scheme {
                WeightScheme::Beta { restricted, .. } => {
                    let omega1 = if restricted { 1.0 } else { next() };
                    WeightScheme::Beta {
                        omega1,
                        omega2: next(),
                        restricted,
                    }
                }
                WeightScheme::ExpWeighted { .. } => WeightScheme::ExpWeighted { omega: next() },
            })
            .collect();
        Self {
            mu,
            alpha,
            beta,
            gamma,
            m,
            theta,
            schemes,
        }
    }
}
