//! Descriptive statistics and the residual/stationarity test battery.
//!
//! Kurtosis is always reported as *excess* kurtosis (a normal sample gives
//! roughly 0). Skewness and kurtosis use the moment estimators `m3/m2^1.5`
//! and `m4/m2² − 3`; the standard deviation uses the `n − 1` denominator.
//!
//! The Kolmogorov–Smirnov test compares against a normal with the sample
//! mean and standard deviation and uses the asymptotic Kolmogorov
//! distribution; no Lilliefors correction for the estimated parameters is
//! applied, so its p-values are conservative.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::timeseries::DatedSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lags: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_values: Option<BTreeMap<String, f64>>,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, lags: Option<usize>) -> Self {
        Self {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            lags,
            critical_values: None,
        }
    }
}

/// Default Ljung–Box / ARCH-LM lag count.
pub const DEFAULT_LAGS: usize = 20;

fn require_len(x: &[f64], needed: usize) -> Result<()> {
    if x.len() < needed {
        Err(Error::TooShort {
            needed,
            got: x.len(),
        })
    } else {
        Ok(())
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Central moments `(m2, m3, m4)` with denominator `n`.
fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

fn non_degenerate(x: &[f64]) -> Result<()> {
    let (m2, _, _) = central_moments(x);
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    if m2 <= (1e-14 * scale).powi(2) {
        Err(Error::Degenerate("series has zero variance".into()))
    } else {
        Ok(())
    }
}

pub fn describe(x: &[f64]) -> Result<SummaryStats> {
    require_len(x, 2)?;
    let n = x.len();
    let (m2, m3, m4) = central_moments(x);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(SummaryStats {
        n,
        min: x.iter().copied().fold(f64::INFINITY, f64::min),
        max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: mean(x),
        sd: (m2 * n as f64 / (n as f64 - 1.0)).sqrt(),
        skewness,
        excess_kurtosis,
    })
}

fn chi2_sf(stat: f64, dof: usize) -> f64 {
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    1.0 - chi.cdf(stat.max(0.0))
}

/// Jarque–Bera: `n·(S²/6 + K²/24)` against χ²(2).
pub fn jarque_bera(x: &[f64]) -> Result<TestResult> {
    require_len(x, 3)?;
    non_degenerate(x)?;
    let s = describe(x)?;
    let n = x.len() as f64;
    let stat = n * (s.skewness.powi(2) / 6.0 + s.excess_kurtosis.powi(2) / 24.0);
    Ok(TestResult::new(stat, chi2_sf(stat, 2), None))
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // small-λ theta-function form
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=50 {
            let j = (2 * k - 1) as f64;
            cdf += (-j * j * c).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov–Smirnov test against a normal with the sample mean
/// and standard deviation.
pub fn ks_normal(x: &[f64]) -> Result<TestResult> {
    require_len(x, 3)?;
    non_degenerate(x)?;
    let s = describe(x)?;
    let normal = Normal::new(s.mean, s.sd).map_err(|e| Error::Degenerate(e.to_string()))?;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let f = normal.cdf(*v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    Ok(TestResult::new(d, kolmogorov_sf(n.sqrt() * d), None))
}

fn autocorrelations(x: &[f64], lags: usize) -> Vec<f64> {
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    (1..=lags)
        .map(|k| {
            x[k..]
                .iter()
                .zip(x)
                .map(|(a, b)| (a - m) * (b - m))
                .sum::<f64>()
                / denom
        })
        .collect()
}

/// Ljung–Box portmanteau statistic against χ²(lags).
pub fn ljung_box(x: &[f64], lags: usize) -> Result<TestResult> {
    if lags == 0 {
        return Err(Error::InvalidParameter("lags must be >= 1".into()));
    }
    require_len(x, lags + 2)?;
    non_degenerate(x)?;
    let n = x.len() as f64;
    let acf = autocorrelations(x, lags);
    let stat = n * (n + 2.0)
        * acf
            .iter()
            .enumerate()
            .map(|(k, r)| r * r / (n - (k + 1) as f64))
            .sum::<f64>();
    Ok(TestResult::new(stat, chi2_sf(stat, lags), Some(lags)))
}

/// Engle's ARCH-LM test: `T·R²` of the regression of squared demeaned values
/// on their own `lags` lags, against χ²(lags).
pub fn arch_lm(x: &[f64], lags: usize) -> Result<TestResult> {
    if lags == 0 {
        return Err(Error::InvalidParameter("lags must be >= 1".into()));
    }
    require_len(x, 2 * lags + 2)?;
    non_degenerate(x)?;
    let m = mean(x);
    let e2: Vec<f64> = x.iter().map(|v| (v - m).powi(2)).collect();
    let rows = e2.len() - lags;
    let design = DMatrix::from_fn(rows, lags + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            e2[lags + r - c]
        }
    });
    let y = DVector::from_iterator(rows, e2[lags..].iter().copied());
    let fit = ols(&design, &y)?;
    let stat = rows as f64 * fit.r_squared;
    Ok(TestResult::new(stat, chi2_sf(stat, lags), Some(lags)))
}

/// Ordinary least-squares fit.
#[derive(Debug, Clone)]
pub struct Ols {
    pub coefficients: DVector<f64>,
    pub std_errors: DVector<f64>,
    pub residuals: DVector<f64>,
    pub sigma2: f64,
    pub r_squared: f64,
    pub rss: f64,
}

/// OLS with an explicit rank check on the column-scaled Gram matrix.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Ols> {
    let (n, k) = x.shape();
    if n <= k {
        return Err(Error::TooShort { needed: k + 1, got: n });
    }
    let gram = x.transpose() * x;
    let scale: Vec<f64> = (0..k).map(|i| gram[(i, i)].sqrt()).collect();
    if scale.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Singular);
    }
    let scaled = DMatrix::from_fn(k, k, |i, j| gram[(i, j)] / (scale[i] * scale[j]));
    let eig = SymmetricEigen::new(scaled.clone());
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_eig > 1e-11) {
        return Err(Error::Singular);
    }
    let inv_scaled = scaled.cholesky().ok_or(Error::Singular)?.inverse();
    let gram_inv = DMatrix::from_fn(k, k, |i, j| inv_scaled[(i, j)] / (scale[i] * scale[j]));
    let coefficients = &gram_inv * (x.transpose() * y);
    let residuals = y - x * &coefficients;
    let rss = residuals.norm_squared();
    let sigma2 = rss / (n - k) as f64;
    let ybar = y.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };
    let std_errors = DVector::from_iterator(k, (0..k).map(|i| (sigma2 * gram_inv[(i, i)]).sqrt()));
    Ok(Ols {
        coefficients,
        std_errors,
        residuals,
        sigma2,
        r_squared,
        rss,
    })
}

/// Deterministic terms in the Dickey–Fuller regression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfTrend {
    /// Intercept only. Its 1% critical value at n ≈ 5000 is −3.4317.
    #[default]
    Constant,
    /// Intercept and linear trend.
    ConstantTrend,
}

struct MacKinnon {
    max: f64,
    min: f64,
    star: f64,
    small: [f64; 3],
    large: [f64; 4],
    /// 1%, 5%, 10% response-surface coefficients `b0 + b1/T + b2/T² + b3/T³`.
    critical: [[f64; 4]; 3],
}

// Single-regressor (N = 1) rows of MacKinnon (1994) p-value surfaces and
// MacKinnon (2010) critical-value surfaces.
const MACKINNON_C: MacKinnon = MacKinnon {
    max: 2.74,
    min: -18.83,
    star: -1.61,
    small: [2.1659, 1.4412, 0.038269],
    large: [1.7339, 0.93202, -0.12745, -0.010368],
    critical: [
        [-3.43035, -6.5393, -16.786, -79.433],
        [-2.86154, -2.8903, -4.234, -40.040],
        [-2.56677, -1.5384, -2.809, 0.0],
    ],
};

const MACKINNON_CT: MacKinnon = MacKinnon {
    max: 0.7,
    min: -16.18,
    star: -2.89,
    small: [3.2512, 1.6047, 0.049588],
    large: [2.5261, 0.61654, -0.37956, -0.060285],
    critical: [
        [-3.95877, -9.0531, -28.428, -134.155],
        [-3.41049, -4.3904, -9.036, -45.374],
        [-3.12705, -2.5856, -3.925, -22.380],
    ],
};

impl AdfTrend {
    fn table(self) -> &'static MacKinnon {
        match self {
            AdfTrend::Constant => &MACKINNON_C,
            AdfTrend::ConstantTrend => &MACKINNON_CT,
        }
    }

    /// 1%, 5% and 10% critical values for a regression with `nobs` rows.
    pub fn critical_values(self, nobs: usize) -> [f64; 3] {
        let t = nobs as f64;
        self.table()
            .critical
            .map(|b| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t))
    }

    /// Approximate asymptotic p-value of a Dickey–Fuller τ statistic.
    pub fn p_value(self, tau: f64) -> f64 {
        let tbl = self.table();
        if tau > tbl.max {
            return 1.0;
        }
        if tau < tbl.min {
            return 0.0;
        }
        let z = if tau <= tbl.star {
            tbl.small[0] + tbl.small[1] * tau + tbl.small[2] * tau * tau
        } else {
            tbl.large[0] + tbl.large[1] * tau + tbl.large[2] * tau * tau + tbl.large[3] * tau.powi(3)
        };
        Normal::new(0.0, 1.0).expect("standard normal").cdf(z)
    }

    fn n_terms(self) -> usize {
        match self {
            AdfTrend::Constant => 1,
            AdfTrend::ConstantTrend => 2,
        }
    }
}

/// Largest lag considered by [`adf_test`]: `⌊12·(n/100)^{1/4}⌋`.
pub fn adf_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

fn adf_regression(y: &[f64], lag: usize, first_row: usize, trend: AdfTrend) -> Result<Ols> {
    // row t regresses Δy_t on deterministic terms, y_{t-1}, Δy_{t-1..t-lag}
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let rows = dy.len() - first_row;
    let det = trend.n_terms();
    let x = DMatrix::from_fn(rows, det + 1 + lag, |r, c| {
        let t = first_row + r;
        match c {
            0 => 1.0,
            1 if det == 2 => (t + 1) as f64,
            c if c == det => y[t],
            c => dy[t - (c - det)],
        }
    });
    let target = DVector::from_iterator(rows, dy[first_row..].iter().copied());
    ols(&x, &target)
}

/// Augmented Dickey–Fuller unit-root test with BIC lag selection.
pub fn adf_test(x: &[f64], trend: AdfTrend) -> Result<TestResult> {
    require_len(x, 25)?;
    non_degenerate(x)?;
    let n = x.len();
    let max_lag = adf_max_lag(n).min((n - 1) / 2 - trend.n_terms() - 2);

    // common sample across candidate lags
    let mut best = (f64::INFINITY, 0usize);
    for lag in 0..=max_lag {
        let fit = adf_regression(x, lag, max_lag, trend)?;
        let rows = fit.residuals.len() as f64;
        let k = fit.coefficients.len() as f64;
        let bic = rows * (fit.rss / rows).ln() + k * rows.ln();
        if bic < best.0 {
            best = (bic, lag);
        }
    }
    let lag = best.1;
    let fit = adf_regression(x, lag, lag, trend)?;
    let idx = trend.n_terms();
    let tau = fit.coefficients[idx] / fit.std_errors[idx];
    let nobs = fit.residuals.len();
    let cv = trend.critical_values(nobs);
    let mut result = TestResult::new(tau, trend.p_value(tau), Some(lag));
    result.critical_values = Some(BTreeMap::from([
        ("1%".to_string(), cv[0]),
        ("5%".to_string(), cv[1]),
        ("10%".to_string(), cv[2]),
    ]));
    Ok(result)
}

/// Average ranks (1-based), ties share the mean of their positions.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("zero variance in correlation".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    require_len(a, 3)?;
    pearson(&ranks(a), &ranks(b))
}

/// AR(p) fit used as a volatility proxy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArVolatility {
    pub order: usize,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Squared residuals `ε̂²_t`, dated `t = p+1..n`.
    pub squared_residuals: DatedSeries,
}

fn fit_ar(y: &[f64], p: usize, first_row: usize) -> Result<Ols> {
    let rows = y.len() - first_row;
    let x = DMatrix::from_fn(rows, p + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            y[first_row + r - c]
        }
    });
    let target = DVector::from_iterator(rows, y[first_row..].iter().copied());
    ols(&x, &target)
}

/// Highest order tried when the AR order is chosen by BIC.
pub const MAX_AR_ORDER: usize = 4;

/// Fit AR(p) with intercept by least squares and return squared residuals.
/// With `order = None`, p minimises BIC over `1..=4` on a common sample.
pub fn ar_residual_volatility(series: &DatedSeries, order: Option<usize>) -> Result<ArVolatility> {
    let y = series.values();
    let p = match order {
        Some(p) => p,
        None => {
            require_len(y, MAX_AR_ORDER + 3)?;
            let mut best = (f64::INFINITY, 1);
            for p in 1..=MAX_AR_ORDER {
                let fit = fit_ar(y, p, MAX_AR_ORDER)?;
                let rows = fit.residuals.len() as f64;
                let bic = rows * (fit.rss / rows).ln() + (p + 1) as f64 * rows.ln();
                if bic < best.0 {
                    best = (bic, p);
                }
            }
            best.1
        }
    };
    require_len(y, p + 2)?;
    let (intercept, coefficients, residuals) = if p == 0 {
        let m = mean(y);
        (m, Vec::new(), y.iter().map(|v| v - m).collect::<Vec<_>>())
    } else {
        let fit = fit_ar(y, p, p)?;
        (
            fit.coefficients[0],
            fit.coefficients.iter().skip(1).copied().collect(),
            fit.residuals.iter().copied().collect(),
        )
    };
    let dates: Vec<NaiveDate> = series.dates()[p..].to_vec();
    let squared = DatedSeries::new(
        format!("{}_vol", series.name()),
        series.frequency(),
        dates,
        residuals.iter().map(|e| e * e).collect(),
    )?;
    Ok(ArVolatility {
        order: p,
        intercept,
        coefficients,
        squared_residuals: squared,
    })
}
