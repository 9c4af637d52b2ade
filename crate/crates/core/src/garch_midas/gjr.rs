use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{self, maximize, numerical_hessian, Bounds, Constraint, OptimizerOptions};

use super::fit::ParamEstimate;
use super::STATIONARITY_MARGIN;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `h_t = ω + (α + γ·1{ε_{t−1} < 0}) ε²_{t−1} + β h_{t−1}`, started at the
/// unconditional variance `ω / (1 − α − γ/2 − β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GjrParams {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GjrParams {
    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta + self.gamma / 2.0
    }

    fn feasible(&self) -> bool {
        [self.mu, self.omega, self.alpha, self.beta, self.gamma]
            .iter()
            .all(|v| v.is_finite())
            && self.omega > 0.0
            && self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha + self.gamma >= 0.0
            && self.persistence() < 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GjrFit {
    pub params: GjrParams,
    pub estimates: Vec<ParamEstimate>,
    pub llh: f64,
    pub bic: f64,
    pub variance: Vec<f64>,
    /// `(r_t − μ) / √h_t`.
    pub standardized: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn variance_path(returns: &[f64], p: &GjrParams) -> Vec<f64> {
    let mut h = Vec::with_capacity(returns.len());
    let mut prev = p.omega / (1.0 - p.persistence());
    for (t, _) in returns.iter().enumerate() {
        if t > 0 {
            let e = returns[t - 1] - p.mu;
            let a = if e < 0.0 { p.alpha + p.gamma } else { p.alpha };
            prev = p.omega + a * e * e + p.beta * prev;
        }
        h.push(prev);
    }
    h
}

fn contributions(returns: &[f64], p: &GjrParams) -> f64 {
    let h = variance_path(returns, p);
    let mut total = 0.0;
    for (r, h) in returns.iter().zip(&h) {
        if !(*h > 0.0) {
            return f64::NEG_INFINITY;
        }
        let e = r - p.mu;
        total += -0.5 * (LN_2PI + h.ln() + e * e / h);
    }
    if total.is_finite() {
        total
    } else {
        f64::NEG_INFINITY
    }
}

/// Gaussian log-likelihood; `−∞` outside the stationary region.
pub fn gjr_log_likelihood(returns: &[f64], params: &GjrParams) -> f64 {
    if !params.feasible() {
        return f64::NEG_INFINITY;
    }
    contributions(returns, params)
}

// parameter order: mu, omega, alpha, beta, [gamma]
fn unpack(v: &[f64], asymmetric: bool) -> GjrParams {
    GjrParams {
        mu: v[0],
        omega: v[1],
        alpha: v[2],
        beta: v[3],
        gamma: if asymmetric { v[4] } else { 0.0 },
    }
}

/// Maximum-likelihood GARCH(1,1), with a GJR leverage term when
/// `asymmetric` is set.
pub fn fit_gjr_garch(returns: &[f64], asymmetric: bool, options: &OptimizerOptions) -> Result<GjrFit> {
    if returns.len() < 10 {
        return Err(Error::TooShort {
            needed: 10,
            got: returns.len(),
        });
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::Degenerate("returns have zero variance".into()));
    }
    // search on returns in units of their standard deviation so the fit is
    // equivariant to rescaling
    let sd = var.sqrt();
    let scaled: Vec<f64> = returns.iter().map(|r| r / sd).collect();
    let gamma0 = if asymmetric { 0.05 } else { 0.0 };
    let dim = if asymmetric { 5 } else { 4 };
    let members = if asymmetric {
        // slot 4 carries α + γ during the search
        vec![(2, 0.5), (3, 1.0), (4, 0.5)]
    } else {
        vec![(2, 1.0), (3, 1.0)]
    };
    let bounds = Bounds::free(dim)
        .set(0, Constraint::Scaled(1.0 / n.sqrt()))
        .set(1, Constraint::Above(0.0))
        .with_simplex(members, 1.0 - STATIONARITY_MARGIN);
    let to_params = |x: &[f64]| {
        let mut p = unpack(x, asymmetric);
        p.gamma = if asymmetric { x[4] - x[2] } else { 0.0 };
        p
    };
    let mut x0 = vec![mean / sd, 1.0 - 0.95 - gamma0 / 2.0, 0.05, 0.9];
    if asymmetric {
        x0.push(0.05 + gamma0);
    }
    let opt = maximize(|x| gjr_log_likelihood(&scaled, &to_params(x)), &x0, &bounds, options)?;
    let unit = to_params(&opt.point);
    let params = GjrParams {
        mu: unit.mu * sd,
        omega: unit.omega * var,
        ..unit
    };
    let llh = gjr_log_likelihood(returns, &params);

    let report: Vec<f64> = [params.mu, params.omega, params.alpha, params.beta, params.gamma][..dim].to_vec();
    let se = numerical_hessian(|x: &[f64]| contributions(returns, &unpack(x, asymmetric)), &report)
        .ok()
        .and_then(|h| optimizer::standard_errors(&h));
    let names = ["mu", "omega", "alpha", "beta", "gamma"];
    let estimates = (0..dim)
        .map(|i| {
            let std_error = se.as_ref().map(|s| s[i]);
            ParamEstimate {
                name: names[i].into(),
                value: report[i],
                std_error,
                p_value: std_error.map(|s| optimizer::p_value(report[i], s)).filter(|p| p.is_finite()),
                fixed: false,
            }
        })
        .collect();

    let variance = variance_path(returns, &params);
    let standardized = returns
        .iter()
        .zip(&variance)
        .map(|(r, h)| (r - params.mu) / h.sqrt())
        .collect();
    Ok(GjrFit {
        params,
        estimates,
        llh,
        bic: dim as f64 * n.ln() - 2.0 * llh,
        variance,
        standardized,
        converged: opt.converged,
        iterations: opt.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_variance_path() {
        let p = GjrParams {
            mu: 0.0,
            omega: 2.0,
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
        };
        let r = [1.0, -3.0, 0.5];
        assert_eq!(variance_path(&r, &p), vec![2.0; 3]);
        let ll = gjr_log_likelihood(&r, &p);
        let direct: f64 = r.iter().map(|x| -0.5 * (LN_2PI + 2f64.ln() + x * x / 2.0)).sum();
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn leverage_enters_after_negative_shock() {
        let p = GjrParams {
            mu: 0.0,
            omega: 0.1,
            alpha: 0.1,
            beta: 0.5,
            gamma: 0.2,
        };
        let h = variance_path(&[-1.0, 1.0, 0.0], &p);
        let h0 = 0.1 / (1.0 - 0.1 - 0.5 - 0.1);
        assert!((h[0] - h0).abs() < 1e-14);
        assert!((h[1] - (0.1 + 0.3 + 0.5 * h0)).abs() < 1e-14);
        assert!((h[2] - (0.1 + 0.1 + 0.5 * h[1])).abs() < 1e-14);
    }

    #[test]
    fn scale_equivariant_fit() {
        let p = GjrParams {
            mu: 0.0,
            omega: 0.05,
            alpha: 0.08,
            beta: 0.9,
            gamma: 0.0,
        };
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let mut r = Vec::new();
        let mut h = p.omega / (1.0 - p.persistence());
        let mut e: f64 = 0.0;
        for t in 0..3000 {
            if t > 0 {
                h = p.omega + p.alpha * e * e + p.beta * h;
            }
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            e = h.sqrt() * z;
            r.push(e);
        }
        let o = OptimizerOptions::default();
        let a = fit_gjr_garch(&r, false, &o).unwrap();
        let r10: Vec<f64> = r.iter().map(|x| 10.0 * x).collect();
        let b = fit_gjr_garch(&r10, false, &o).unwrap();
        assert!(a.converged && b.converged);
        for (x, y) in a.standardized.iter().zip(&b.standardized) {
            assert!((x - y).abs() < 1e-4);
        }
        assert!((a.params.alpha - 0.08).abs() < 0.04 && (a.params.beta - 0.9).abs() < 0.05);
        assert!((b.llh - a.llh + 3000.0 * 10f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn nonstationary_is_rejected() {
        let p = GjrParams {
            mu: 0.0,
            omega: 0.1,
            alpha: 0.2,
            beta: 0.8,
            gamma: 0.0,
        };
        assert_eq!(gjr_log_likelihood(&[0.1, 0.2], &p), f64::NEG_INFINITY);
    }
}
