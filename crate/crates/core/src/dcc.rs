//! Two-step dynamic conditional correlation for a pair of return series.
//!
//! Step one fits a univariate volatility model to each series and returns
//! standardized residuals. Step two estimates the correlation recursion
//! `Q_t = T_t(1 − a − b) + a ξ_{t−1}ξ'_{t−1} + b Q_{t−1}` with either a
//! constant target (DCC-GARCH) or a slowly moving MIDAS target built from
//! rolling correlations (DCC-MIDAS).

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch_midas::{self, fit_gjr_garch, FitOptions, GarchMidasModel, ParamEstimate};
use crate::optimizer::{self, maximize, numerical_hessian, Bounds, Constraint, OptimizerOptions};
use crate::timeseries::{build_panel, CovariateInput, DatedSeries};
use crate::weights::WeightScheme;

/// Trading days per correlation period of the MIDAS target.
pub const PERIOD_DAYS: usize = 22;
pub const DEFAULT_WINDOW: usize = 22;
pub const DEFAULT_SPAN: usize = 24;

const STATIONARITY_MARGIN: f64 = 1e-6;

/// Volatility model used to standardize each series.
#[derive(Debug, Clone, Copy)]
pub enum FirstStep<'a> {
    /// Symmetric GARCH(1,1).
    Garch11,
    /// GARCH-MIDAS with the given covariates; a model covariate named `RV`
    /// without an input is the realized volatility of the series itself.
    GarchMidas {
        model: &'a GarchMidasModel,
        covariates: &'a [CovariateInput],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FirstStepSummary {
    Garch11 { estimates: Vec<ParamEstimate>, llh: f64 },
    GarchMidas { estimates: Vec<ParamEstimate>, llh: f64 },
}

/// Standardized residuals of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateVolFit {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    /// Conditional variance (`h_t`, or `τ·g` for GARCH-MIDAS).
    pub variance: Vec<f64>,
    /// `ξ_t = (r_t − μ) / √variance_t`.
    pub residuals: Vec<f64>,
    pub summary: FirstStepSummary,
    pub converged: bool,
}

/// Fit the first-step volatility model and standardize `series`.
pub fn standardize(series: &DatedSeries, first_step: FirstStep<'_>, options: &OptimizerOptions) -> Result<UnivariateVolFit> {
    match first_step {
        FirstStep::Garch11 => {
            let fit = fit_gjr_garch(series.values(), false, options)?;
            Ok(UnivariateVolFit {
                name: series.name().to_string(),
                dates: series.dates().to_vec(),
                variance: fit.variance,
                residuals: fit.standardized,
                summary: FirstStepSummary::Garch11 {
                    estimates: fit.estimates,
                    llh: fit.llh,
                },
                converged: fit.converged,
            })
        }
        FirstStep::GarchMidas { model, covariates } => {
            let mut panel = build_panel(series, covariates)?;
            // model covariates absent from the inputs may only be the series' own RV
            for c in &model.covariates {
                if panel.covariate(&c.name).is_none() {
                    if c.name != "RV" {
                        return Err(Error::MissingColumn(c.name.clone()));
                    }
                    panel = panel.with_realized_volatility(c.lags)?;
                }
            }
            let fit = garch_midas::fit(
                &panel,
                model,
                &FitOptions {
                    optimizer: *options,
                    ..FitOptions::default()
                },
            )?;
            let variance = fit.conditional_variance();
            let residuals = panel.returns[fit.first_day..]
                .iter()
                .zip(&variance)
                .map(|(r, v)| (r - fit.params.mu) / v.sqrt())
                .collect();
            Ok(UnivariateVolFit {
                name: series.name().to_string(),
                dates: fit.dates.clone(),
                variance,
                residuals,
                summary: FirstStepSummary::GarchMidas {
                    estimates: fit.estimates.clone(),
                    llh: fit.llh,
                },
                converged: fit.converged,
            })
        }
    }
}

/// Residuals of two series on their common dates.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPair {
    pub dates: Vec<NaiveDate>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Days present in only one of the inputs.
    pub dropped: usize,
}

/// Intersect the residual calendars of two first-step fits.
pub fn align(a: &UnivariateVolFit, b: &UnivariateVolFit) -> Result<ResidualPair> {
    let lookup: BTreeMap<NaiveDate, f64> = b.dates.iter().copied().zip(b.residuals.iter().copied()).collect();
    let mut pair = ResidualPair {
        dates: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
        dropped: 0,
    };
    for (d, x) in a.dates.iter().zip(&a.residuals) {
        if let Some(y) = lookup.get(d) {
            pair.dates.push(*d);
            pair.a.push(*x);
            pair.b.push(*y);
        }
    }
    if pair.dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    pair.dropped = a.dates.len() + b.dates.len() - 2 * pair.dates.len();
    Ok(pair)
}

/// Short-run correlation recursion for a pair.
///
/// `target[t]` is the correlation level the recursion reverts to on day
/// `t`; diagonal entries revert to 1. `Q` starts at `[[1, target[0]],
/// [target[0], 1]]`. Returns the `(q11, q22, q12)` path and `ρ_t`.
pub fn correlation_path(xa: &[f64], xb: &[f64], a: f64, b: f64, target: &[f64]) -> (Vec<[f64; 3]>, Vec<f64>) {
    let n = xa.len().min(xb.len()).min(target.len());
    let c = 1.0 - a - b;
    let mut q = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    let mut cur = [1.0, 1.0, target.first().copied().unwrap_or(0.0)];
    for t in 0..n {
        if t > 0 {
            let (ea, eb) = (xa[t - 1], xb[t - 1]);
            cur = [
                c + a * ea * ea + b * cur[0],
                c + a * eb * eb + b * cur[1],
                c * target[t] + a * ea * eb + b * cur[2],
            ];
        }
        q.push(cur);
        rho.push((cur[2] / (cur[0] * cur[1]).sqrt()).clamp(-1.0, 1.0));
    }
    (q, rho)
}

/// Gaussian correlation log-likelihood of residual pairs given `ρ_t`:
/// `−½ Σ [ln(1−ρ²) + (ξa² + ξb² − 2ρ ξa ξb)/(1−ρ²) − (ξa² + ξb²)]`.
pub fn correlation_log_likelihood(xa: &[f64], xb: &[f64], rho: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((x, y), r) in xa.iter().zip(xb).zip(rho) {
        let d = 1.0 - r * r;
        if !(d > 0.0) {
            return f64::NEG_INFINITY;
        }
        total += -0.5 * (d.ln() + (x * x + y * y - 2.0 * r * x * y) / d - (x * x + y * y));
    }
    if total.is_finite() {
        total
    } else {
        f64::NEG_INFINITY
    }
}

/// DCC log-likelihood with a constant target `s`.
pub fn dcc_log_likelihood(xa: &[f64], xb: &[f64], a: f64, b: f64, s: f64) -> f64 {
    dcc_midas_log_likelihood(xa, xb, a, b, &vec![s; xa.len()])
}

/// DCC log-likelihood with a daily target path.
pub fn dcc_midas_log_likelihood(xa: &[f64], xb: &[f64], a: f64, b: f64, target: &[f64]) -> f64 {
    if !(a >= 0.0 && b >= 0.0 && a + b < 1.0) {
        return f64::NEG_INFINITY;
    }
    let (_, rho) = correlation_path(xa, xb, a, b, target);
    correlation_log_likelihood(xa, xb, &rho)
}

/// `Σ x y / √(Σ x² Σ y²)`, the uncentred correlation of residuals.
fn uncentred_correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    (xy / (xx * yy).sqrt()).clamp(-1.0, 1.0)
}

/// Correlation of each [`PERIOD_DAYS`]-day period over the `window` days
/// ending with that period; `None` until the window fits in the sample.
pub fn rolling_correlations(xa: &[f64], xb: &[f64], window: usize) -> Vec<Option<f64>> {
    let n = xa.len().min(xb.len());
    let periods = n / PERIOD_DAYS;
    (0..periods)
        .map(|p| {
            let end = (p + 1) * PERIOD_DAYS;
            (end >= window).then(|| uncentred_correlation(&xa[end - window..end], &xb[end - window..end]))
        })
        .collect()
}

/// Which correlation model produced a [`DccFit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DccKind {
    Garch,
    Midas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DccFit {
    pub kind: DccKind,
    pub a: f64,
    pub b: f64,
    /// MIDAS weight scheme with its estimated parameter (DCC-MIDAS only).
    pub scheme: Option<WeightScheme>,
    /// Residual window `N_c` in days (DCC-MIDAS only).
    pub window: Option<usize>,
    /// Number of lagged period correlations `K_c` (DCC-MIDAS only).
    pub span: Option<usize>,
    /// Sample correlation of the residuals used as target (DCC-GARCH).
    pub unconditional: f64,
    pub estimates: Vec<ParamEstimate>,
    pub dates: Vec<NaiveDate>,
    pub rho: Vec<f64>,
    /// Reversion target per day: constant for DCC-GARCH, `ρ̄_t` for DCC-MIDAS.
    pub rho_bar: Vec<f64>,
    pub q: Vec<[f64; 3]>,
    pub llh: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    pub converged: bool,
    /// Residuals are perfectly correlated: `ρ ≡ ±1` and no likelihood exists.
    pub degenerate: bool,
}

fn check_pair(xa: &[f64], xb: &[f64]) -> Result<()> {
    if xa.len() != xb.len() {
        return Err(Error::LengthMismatch {
            left: xa.len(),
            right: xb.len(),
        });
    }
    if xa.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: xa.len(),
        });
    }
    for x in [xa, xb] {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite residual".into()));
        }
        let m = x.iter().sum::<f64>() / x.len() as f64;
        if x.iter().all(|v| (v - m).abs() == 0.0) {
            return Err(Error::Degenerate("residual series has zero variance".into()));
        }
    }
    Ok(())
}

fn estimates(names: &[&str], values: &[f64], se: Option<Vec<f64>>) -> Vec<ParamEstimate> {
    names
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (name, &value))| {
            let std_error = se.as_ref().map(|s| s[i]);
            ParamEstimate {
                name: name.to_string(),
                value,
                std_error,
                p_value: std_error.map(|s| optimizer::p_value(value, s)).filter(|p| p.is_finite()),
                fixed: false,
            }
        })
        .collect()
}

fn start_ab() -> [f64; 2] {
    [0.02, 0.95]
}

fn degenerate_fit(kind: DccKind, dates: &[NaiveDate], sign: f64) -> DccFit {
    let n = dates.len();
    DccFit {
        kind,
        a: 0.0,
        b: 0.0,
        scheme: None,
        window: None,
        span: None,
        unconditional: sign,
        estimates: Vec::new(),
        dates: dates.to_vec(),
        rho: vec![sign; n],
        rho_bar: vec![sign; n],
        q: vec![[1.0, 1.0, sign]; n],
        llh: f64::NAN,
        aic: f64::NAN,
        bic: f64::NAN,
        n_obs: n,
        converged: true,
        degenerate: true,
    }
}

/// DCC-GARCH with correlation targeting on the Pearson correlation of the
/// residuals. `dates` labels the residual days.
pub fn dcc_garch_fit(xa: &[f64], xb: &[f64], dates: &[NaiveDate], options: &OptimizerOptions) -> Result<DccFit> {
    check_pair(xa, xb)?;
    let s = crate::diagnostics::pearson(xa, xb)?;
    if s.abs() > 1.0 - 1e-12 {
        return Ok(degenerate_fit(DccKind::Garch, dates, s.signum()));
    }
    let bounds = Bounds::free(2).with_simplex(vec![(0, 1.0), (1, 1.0)], 1.0 - STATIONARITY_MARGIN);
    let mut opt = maximize(|x| dcc_log_likelihood(xa, xb, x[0], x[1], s), &start_ab(), &bounds, options)?;
    // the softmax map cannot reach a = b = 0 exactly; keep the constant
    // correlation corner when it is at least as good
    let ccc = dcc_log_likelihood(xa, xb, 0.0, 0.0, s);
    if ccc >= opt.objective {
        opt.point = vec![0.0, 0.0];
        opt.objective = ccc;
        opt.converged = true;
    }
    let (a, b) = (opt.point[0], opt.point[1]);
    let target = vec![s; xa.len()];
    let se = numerical_hessian(
        |x: &[f64]| {
            let (_, rho) = correlation_path(xa, xb, x[0], x[1], &target);
            correlation_log_likelihood(xa, xb, &rho)
        },
        &opt.point,
    )
    .ok()
    .and_then(|h| optimizer::standard_errors(&h));
    let (q, rho) = correlation_path(xa, xb, a, b, &target);
    let n = xa.len() as f64;
    Ok(DccFit {
        kind: DccKind::Garch,
        a,
        b,
        scheme: None,
        window: None,
        span: None,
        unconditional: s,
        estimates: estimates(&["a", "b"], &opt.point, se),
        dates: dates.to_vec(),
        rho,
        rho_bar: target,
        q,
        llh: opt.objective,
        aic: 4.0 - 2.0 * opt.objective,
        bic: 2.0 * n.ln() - 2.0 * opt.objective,
        n_obs: xa.len(),
        converged: opt.converged,
        degenerate: false,
    })
}

/// Long-run correlation per day from period correlations `c`: on every day
/// of period `p`, `ρ̄ = Σ_{l=1..span} φ_l c_{p−l}`. Returns the first day
/// with a full lag window and the path from there on.
pub fn long_run_correlation(
    c: &[Option<f64>],
    n_days: usize,
    span: usize,
    scheme: &WeightScheme,
) -> Result<(usize, Vec<f64>)> {
    let w = scheme.weights(span)?;
    let first_period = c
        .iter()
        .position(Option::is_some)
        .map(|p| p + span)
        .filter(|&p| p * PERIOD_DAYS < n_days)
        .ok_or(Error::TooShort {
            needed: (span + 1) * PERIOD_DAYS,
            got: n_days,
        })?;
    let first_day = first_period * PERIOD_DAYS;
    let path = (first_day..n_days)
        .map(|d| {
            // days after the last complete period keep its target
            let p = (d / PERIOD_DAYS).min(c.len());
            w.iter()
                .enumerate()
                .map(|(l, wl)| wl * c[p - l - 1].expect("window starts after the first correlation"))
                .sum()
        })
        .collect();
    Ok((first_day, path))
}

/// DCC-MIDAS: the target is a MIDAS filter of `span` lagged period
/// correlations, each over `window` residual days.
pub fn dcc_midas_fit(
    xa: &[f64],
    xb: &[f64],
    dates: &[NaiveDate],
    window: usize,
    span: usize,
    scheme: WeightScheme,
    options: &OptimizerOptions,
) -> Result<DccFit> {
    check_pair(xa, xb)?;
    if window < 2 || span < 1 {
        return Err(Error::InvalidParameter(format!(
            "DCC-MIDAS needs a window of at least 2 days and a span of at least 1 (got {window}, {span})"
        )));
    }
    scheme.validate()?;
    let n = xa.len();
    if n <= window + span * PERIOD_DAYS {
        return Err(Error::TooShort {
            needed: window + span * PERIOD_DAYS + 1,
            got: n,
        });
    }
    let c = rolling_correlations(xa, xb, window);
    let (first_day, _) = long_run_correlation(&c, n, span, &scheme)?;
    let (ya, yb) = (&xa[first_day..], &xb[first_day..]);
    if c.iter().flatten().all(|v| v.abs() > 1.0 - 1e-12) && ya.iter().zip(yb).all(|(x, y)| (x.abs() - y.abs()).abs() < 1e-12) {
        let mut fit = degenerate_fit(DccKind::Midas, &dates[first_day..], c.iter().flatten().next().copied().unwrap_or(1.0).signum());
        fit.scheme = Some(scheme);
        fit.window = Some(window);
        fit.span = Some(span);
        return Ok(fit);
    }

    let (weight_name, weight_value, weight_constraint) = match scheme {
        WeightScheme::Beta { omega1: _, omega2, restricted: true } => ("omega2", omega2.max(1.0 + 1e-3), Constraint::Above(1.0)),
        WeightScheme::Beta { restricted: false, .. } => {
            return Err(Error::InvalidParameter(
                "DCC-MIDAS estimates a single weight parameter; use a restricted beta or exponential scheme".into(),
            ))
        }
        WeightScheme::ExpWeighted { omega } => ("omega", omega, Constraint::Interval(0.0, 1.0)),
    };
    let with_weight = |v: f64| match scheme {
        WeightScheme::ExpWeighted { .. } => WeightScheme::ExpWeighted { omega: v },
        _ => WeightScheme::restricted_beta(v),
    };
    let target_for = |v: f64| long_run_correlation(&c, n, span, &with_weight(v)).map(|(_, t)| t);
    let objective = |x: &[f64]| match target_for(x[2]) {
        Ok(t) => dcc_midas_log_likelihood(ya, yb, x[0], x[1], &t),
        Err(_) => f64::NEG_INFINITY,
    };
    let bounds = Bounds::free(3)
        .set(2, weight_constraint)
        .with_simplex(vec![(0, 1.0), (1, 1.0)], 1.0 - STATIONARITY_MARGIN);
    let [a0, b0] = start_ab();
    let opt = maximize(objective, &[a0, b0, weight_value], &bounds, options)?;
    let (a, b, v) = (opt.point[0], opt.point[1], opt.point[2]);

    // weights are unchecked inside the Hessian so steps may cross the bound
    let relaxed = |x: &[f64]| {
        let mut w = Vec::new();
        with_weight(x[2]).weights_into(span, &mut w);
        let t: Vec<f64> = (first_day..n)
            .map(|d| {
                let p = (d / PERIOD_DAYS).min(c.len());
                w.iter().enumerate().map(|(l, wl)| wl * c[p - l - 1].unwrap_or(f64::NAN)).sum()
            })
            .collect();
        let (_, rho) = correlation_path(ya, yb, x[0], x[1], &t);
        correlation_log_likelihood(ya, yb, &rho)
    };
    let at_bound = match weight_constraint {
        Constraint::Above(lo) => v - lo < 1e-4,
        Constraint::Interval(lo, hi) => v - lo < 1e-4 || hi - v < 1e-4,
        _ => false,
    };
    let se = if at_bound {
        numerical_hessian(|x: &[f64]| relaxed(&[x[0], x[1], v]), &opt.point[..2])
            .ok()
            .and_then(|h| optimizer::standard_errors(&h))
            .map(|mut s| {
                s.push(f64::NAN);
                s
            })
    } else {
        numerical_hessian(relaxed, &opt.point)
            .ok()
            .and_then(|h| optimizer::standard_errors(&h))
    };
    let mut est = estimates(&["a", "b", weight_name], &opt.point, se);
    for e in &mut est {
        if e.std_error.is_some_and(f64::is_nan) {
            e.std_error = None;
        }
    }

    let target = target_for(v)?;
    let (q, rho) = correlation_path(ya, yb, a, b, &target);
    let m = ya.len() as f64;
    Ok(DccFit {
        kind: DccKind::Midas,
        a,
        b,
        scheme: Some(with_weight(v)),
        window: Some(window),
        span: Some(span),
        unconditional: crate::diagnostics::pearson(ya, yb)?,
        estimates: est,
        dates: dates[first_day..].to_vec(),
        rho,
        rho_bar: target,
        q,
        llh: opt.objective,
        aic: 6.0 - 2.0 * opt.objective,
        bic: 3.0 * m.ln() - 2.0 * opt.objective,
        n_obs: ya.len(),
        converged: opt.converged,
        degenerate: false,
    })
}

/// One row of the correlation path dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub date: NaiveDate,
    pub rho: f64,
    pub rho_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn correlation_report(fit: &DccFit) -> CorrelationReport {
    let rows: Vec<CorrelationRow> = fit
        .dates
        .iter()
        .zip(fit.rho.iter().zip(&fit.rho_bar))
        .map(|(d, (r, rb))| CorrelationRow {
            date: *d,
            rho: *r,
            rho_bar: *rb,
        })
        .collect();
    let n = fit.rho.len().max(1) as f64;
    CorrelationReport {
        min: fit.rho.iter().copied().fold(f64::INFINITY, f64::min),
        max: fit.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: fit.rho.iter().sum::<f64>() / n,
        rows,
    }
}
