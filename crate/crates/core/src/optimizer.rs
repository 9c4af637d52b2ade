//! Constrained likelihood maximisation.
//!
//! Constraints are removed by reparameterisation: each free coordinate maps
//! from an unconstrained working value `u` to its natural value `x`. A BFGS
//! search with central-difference gradients runs in `u`-space from several
//! seeded starts and the best optimum is kept.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::error::{Error, Result};

/// Constraint on a single natural parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    Free,
    /// Unbounded, searched as `u = x / scale`.
    Scaled(f64),
    /// `x > lower`, via `x = lower + exp(u)`.
    Above(f64),
    /// `lower < x < upper`, via a logistic map.
    Interval(f64, f64),
    /// Held at the given value and excluded from the search.
    Fixed(f64),
}

/// Joint constraint `x_i ≥ 0`, `Σ w_i x_i < cap` over a group of parameters,
/// handled with a softmax (simplex-logistic) map.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub members: Vec<(usize, f64)>,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    Single(Constraint),
    InSimplex,
}

/// Parameter-space description used by [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    slots: Vec<Slot>,
    simplexes: Vec<Simplex>,
}

impl Bounds {
    pub fn free(n: usize) -> Self {
        Self {
            slots: vec![Slot::Single(Constraint::Free); n],
            simplexes: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn set(mut self, index: usize, c: Constraint) -> Self {
        self.slots[index] = Slot::Single(c);
        self
    }

    pub fn with_simplex(mut self, members: Vec<(usize, f64)>, cap: f64) -> Self {
        for &(i, _) in &members {
            self.slots[i] = Slot::InSimplex;
        }
        self.simplexes.push(Simplex { members, cap });
        self
    }

    pub fn is_fixed(&self, index: usize) -> bool {
        matches!(self.slots[index], Slot::Single(Constraint::Fixed(_)))
    }

    /// Indices of parameters that are searched over.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.is_fixed(i)).collect()
    }

    fn validate(&self) -> Result<()> {
        for s in &self.slots {
            match s {
                Slot::Single(Constraint::Interval(lo, hi)) if !(lo < hi) => {
                    return Err(Error::InvalidParameter(format!(
                        "interval bounds need lower < upper (got {lo}, {hi})"
                    )));
                }
                Slot::Single(Constraint::Scaled(k)) if !(*k > 0.0 && k.is_finite()) => {
                    return Err(Error::InvalidParameter(format!("scale must be positive (got {k})")));
                }
                _ => {}
            }
        }
        for s in &self.simplexes {
            if !(s.cap > 0.0) || s.members.iter().any(|(_, w)| !(*w > 0.0)) {
                return Err(Error::InvalidParameter(
                    "simplex needs positive weights and cap".into(),
                ));
            }
        }
        Ok(())
    }

    /// Working-space layout: single coordinates first in index order, then
    /// each simplex's members.
    fn working_dim(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s, Slot::Single(c) if !matches!(c, Constraint::Fixed(_))))
            .count()
            + self.simplexes.iter().map(|s| s.members.len()).sum::<usize>()
    }

    /// Natural → working coordinates. Fails unless `x` is strictly feasible.
    pub fn to_working(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut u = Vec::with_capacity(self.working_dim());
        for (i, slot) in self.slots.iter().enumerate() {
            let v = x[i];
            let infeasible = || Error::Infeasible(format!("parameter {i} = {v}"));
            match slot {
                Slot::Single(Constraint::Free) => u.push(v),
                Slot::Single(Constraint::Scaled(k)) => u.push(v / k),
                Slot::Single(Constraint::Above(lo)) => {
                    if !(v > *lo) {
                        return Err(infeasible());
                    }
                    u.push((v - lo).ln());
                }
                Slot::Single(Constraint::Interval(lo, hi)) => {
                    if !(v > *lo && v < *hi) {
                        return Err(infeasible());
                    }
                    let p = (v - lo) / (hi - lo);
                    u.push((p / (1.0 - p)).ln());
                }
                Slot::Single(Constraint::Fixed(_)) | Slot::InSimplex => {}
            }
        }
        for s in &self.simplexes {
            let total: f64 = s.members.iter().map(|&(i, w)| w * x[i]).sum();
            let slack = s.cap - total;
            if !(slack > 0.0) || s.members.iter().any(|&(i, _)| !(x[i] > 0.0)) {
                return Err(Error::Infeasible(format!(
                    "simplex constraint violated (sum {total}, cap {})",
                    s.cap
                )));
            }
            for &(i, w) in &s.members {
                u.push((w * x[i] / slack).ln());
            }
        }
        Ok(u)
    }

    /// Working → natural coordinates.
    pub fn to_natural(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        let mut k = 0;
        for (i, slot) in self.slots.iter().enumerate() {
            match slot {
                Slot::Single(Constraint::Free) => {
                    x[i] = u[k];
                    k += 1;
                }
                Slot::Single(Constraint::Scaled(scale)) => {
                    x[i] = scale * u[k];
                    k += 1;
                }
                Slot::Single(Constraint::Above(lo)) => {
                    x[i] = lo + u[k].exp();
                    k += 1;
                }
                Slot::Single(Constraint::Interval(lo, hi)) => {
                    x[i] = lo + (hi - lo) / (1.0 + (-u[k]).exp());
                    k += 1;
                }
                Slot::Single(Constraint::Fixed(v)) => x[i] = *v,
                Slot::InSimplex => {}
            }
        }
        for s in &self.simplexes {
            let m = s.members.len();
            let shift = u[k..k + m].iter().copied().fold(0.0f64, f64::max);
            let exps: Vec<f64> = u[k..k + m].iter().map(|v| (v - shift).exp()).collect();
            let denom = (-shift).exp() + exps.iter().sum::<f64>();
            for (&(i, w), e) in s.members.iter().zip(&exps) {
                x[i] = s.cap * e / denom / w;
            }
            k += m;
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// Perturbed restarts in addition to the supplied start.
    pub perturbed_starts: usize,
    /// Standard deviation of start perturbations in working space.
    pub perturbation: f64,
    pub seed: u64,
    pub gradient_tolerance: f64,
    pub objective_tolerance: f64,
    pub parallel: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            perturbed_starts: 5,
            perturbation: 0.3,
            seed: 0x5EED,
            gradient_tolerance: 1e-5,
            objective_tolerance: 1e-8,
            parallel: true,
        }
    }
}

/// Result of [`maximize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    /// Natural-space maximiser.
    pub point: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the working-space gradient at `point`.
    pub gradient_norm: f64,
    /// Which start produced the optimum (0 = the supplied start; one past
    /// the perturbed starts = the edge retry).
    pub start_index: usize,
    /// Objective after each accepted iteration of the winning start.
    pub trace: Vec<f64>,
}

/// Maximise `objective` over the region described by `bounds`.
///
/// Non-finite objective values are treated as infeasible. The returned
/// optimum is the best over the supplied start and
/// `options.perturbed_starts` seeded perturbations of it.
pub fn maximize<F>(objective: F, start: &[f64], bounds: &Bounds, options: &OptimizerOptions) -> Result<Optimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    bounds.validate()?;
    if start.len() != bounds.dim() {
        return Err(Error::LengthMismatch {
            left: start.len(),
            right: bounds.dim(),
        });
    }
    let u0 = bounds.to_working(start)?;

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let noise = Normal::new(0.0, options.perturbation.max(0.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut starts = vec![u0.clone()];
    for _ in 0..options.perturbed_starts {
        starts.push(u0.iter().map(|v| v + noise.sample(&mut rng)).collect());
    }

    let neg = |u: &[f64]| {
        let x = bounds.to_natural(u);
        let v = objective(&x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };

    let run = |(i, u): (usize, &Vec<f64>)| -> Option<(usize, Descent)> {
        if !neg(u).is_finite() {
            return None;
        }
        Some((i, bfgs(&neg, u.clone(), options)))
    };
    let results: Vec<(usize, Descent)> = if options.parallel {
        starts.par_iter().enumerate().filter_map(run).collect()
    } else {
        starts.iter().enumerate().filter_map(run).collect()
    };

    let (mut index, mut best) = results
        .into_iter()
        .min_by(|(ia, a), (ib, b)| a.value.total_cmp(&b.value).then(ia.cmp(ib)))
        .ok_or(Error::NoFiniteStart)?;

    // The softmax gradient vanishes as a member goes to zero, so a search
    // can stall on that face (or at the cap). Retry once from the optimum
    // with the whole group put back at its start values.
    if let Some(x) = edge_restart(bounds, &bounds.to_natural(&best.u), start) {
        if let Ok(u) = bounds.to_working(&x) {
            if neg(&u).is_finite() {
                let retry = bfgs(&neg, u, options);
                if retry.value < best.value - options.objective_tolerance.max(0.0) {
                    index = starts.len();
                    best = retry;
                }
            }
        }
    }

    Ok(Optimum {
        point: bounds.to_natural(&best.u),
        objective: -best.value,
        converged: best.converged,
        iterations: best.iterations,
        gradient_norm: max_abs(&best.gradient),
        start_index: index,
        trace: best.trace.iter().map(|v| -v).collect(),
    })
}

struct Descent {
    u: Vec<f64>,
    value: f64,
    gradient: Vec<f64>,
    converged: bool,
    iterations: usize,
    trace: Vec<f64>,
}

/// A member or the slack below this share of the cap counts as on the edge.
const EDGE_SHARE: f64 = 1e-3;

fn edge_restart(bounds: &Bounds, x: &[f64], start: &[f64]) -> Option<Vec<f64>> {
    let mut out = x.to_vec();
    let mut moved = false;
    for s in &bounds.simplexes {
        let edge = EDGE_SHARE * s.cap;
        let slack = s.cap - s.members.iter().map(|&(i, w)| w * x[i]).sum::<f64>();
        let on_edge = slack < edge || s.members.iter().any(|&(i, w)| w * x[i] < edge);
        let differs = s.members.iter().any(|&(i, _)| start[i] != x[i]);
        if on_edge && differs {
            for &(i, _) in &s.members {
                out[i] = start[i];
            }
            moved = true;
        }
    }
    moved.then_some(out)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Central-difference gradient of `f` at `u`.
pub fn central_gradient<F: Fn(&[f64]) -> f64>(f: &F, u: &[f64]) -> Vec<f64> {
    let mut work = u.to_vec();
    (0..u.len())
        .map(|i| {
            let h = 1e-5 * u[i].abs().max(1.0);
            work[i] = u[i] + h;
            let up = f(&work);
            work[i] = u[i] - h;
            let down = f(&work);
            work[i] = u[i];
            let g = (up - down) / (2.0 * h);
            if g.is_finite() {
                g
            } else {
                // one-sided fallback next to an infeasible region
                let here = f(u);
                if up.is_finite() {
                    (up - here) / h
                } else if down.is_finite() {
                    (here - down) / h
                } else {
                    0.0
                }
            }
        })
        .collect()
}

/// Once the objective stops moving for this many iterations, a gradient
/// within `STALL_FACTOR` of the tolerance counts as converged: the rest is
/// finite-difference noise.
const STALL_ITERATIONS: usize = 5;
const STALL_FACTOR: f64 = 10.0;

fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, mut u: Vec<f64>, options: &OptimizerOptions) -> Descent {
    let n = u.len();
    let mut value = f(&u);
    let mut grad = central_gradient(f, &u);
    let mut trace = vec![value];
    if n == 0 {
        return Descent {
            u,
            value,
            gradient: grad,
            converged: true,
            iterations: 0,
            trace,
        };
    }
    let mut inv_h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut converged = false;
    let mut iterations = 0;
    let mut stalled = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let g = DVector::from_column_slice(&grad);
        let mut dir = -(&inv_h * &g);
        let mut slope = dir.dot(&g);
        if !(slope < 0.0) {
            inv_h = DMatrix::identity(n, n);
            fresh = true;
            dir = -g.clone();
            slope = dir.dot(&g);
        }
        if fresh {
            // keep the first step modest in working space
            let norm = dir.amax();
            if norm > 1.0 {
                dir /= norm;
                slope /= norm;
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(dir.iter()).map(|(a, d)| a + step * d).collect();
            let tv = f(&trial);
            if tv.is_finite() && tv <= value + 1e-4 * step * slope {
                accepted = Some((trial, tv));
                break;
            }
            step *= 0.5;
        }

        let Some((next, next_value)) = accepted else {
            if max_abs(&grad) < options.gradient_tolerance {
                converged = true;
                break;
            }
            if fresh {
                // no descent left along the gradient: numerically stationary
                converged = max_abs(&grad) < STALL_FACTOR * options.gradient_tolerance;
                break;
            }
            inv_h = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };

        let next_grad = central_gradient(f, &next);
        let s = DVector::from_iterator(n, next.iter().zip(&u).map(|(a, b)| a - b));
        let y = DVector::from_iterator(n, next_grad.iter().zip(&grad).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                let scale = sy / y.dot(&y);
                inv_h = DMatrix::identity(n, n) * scale;
            }
            let rho = 1.0 / sy;
            let hy = &inv_h * &y;
            let yhy = y.dot(&hy);
            inv_h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }

        let delta = value - next_value;
        u = next;
        value = next_value;
        grad = next_grad;
        trace.push(value);

        if delta.abs() < options.objective_tolerance {
            stalled += 1;
        } else {
            stalled = 0;
        }
        let gnorm = max_abs(&grad);
        if (gnorm < options.gradient_tolerance && delta.abs() < options.objective_tolerance)
            || (stalled >= STALL_ITERATIONS && gnorm < STALL_FACTOR * options.gradient_tolerance)
        {
            converged = true;
            break;
        }
    }

    Descent {
        u,
        value,
        gradient: grad,
        converged,
        iterations,
        trace,
    }
}

/// Symmetrised central-difference Hessian of `f` at `x`.
pub fn numerical_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| (1e-5 * v.abs()).max(1e-5)).collect();
    let mut work = x.to_vec();
    let eval = |work: &mut Vec<f64>, moves: &[(usize, f64)]| {
        for &(i, d) in moves {
            work[i] = x[i] + d;
        }
        let v = f(work);
        for &(i, _) in moves {
            work[i] = x[i];
        }
        v
    };
    let f0 = eval(&mut work, &[]);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let up = eval(&mut work, &[(i, h[i])]);
        let down = eval(&mut work, &[(i, -h[i])]);
        hess[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let pp = eval(&mut work, &[(i, h[i]), (j, h[j])]);
            let pm = eval(&mut work, &[(i, h[i]), (j, -h[j])]);
            let mp = eval(&mut work, &[(i, -h[i]), (j, h[j])]);
            let mm = eval(&mut work, &[(i, -h[i]), (j, -h[j])]);
            let v = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite second differences".into()));
    }
    Ok(hess)
}

/// Covariance estimator behind reported standard errors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Inverse of the negative Hessian.
    #[default]
    InverseHessian,
    /// Quasi-ML sandwich `H⁻¹ B H⁻¹` with `B` the outer product of scores.
    Sandwich,
}

/// `(−H)⁻¹`, or `None` when the negative Hessian is not positive definite.
pub fn inverse_information(hessian: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let info = -hessian.clone();
    let chol = info.cholesky()?;
    Some(chol.inverse())
}

/// Standard errors from the inverse negative Hessian diagonal.
pub fn standard_errors(hessian: &DMatrix<f64>) -> Option<Vec<f64>> {
    let cov = inverse_information(hessian)?;
    diag_sqrt(&cov)
}

fn diag_sqrt(cov: &DMatrix<f64>) -> Option<Vec<f64>> {
    let se: Vec<f64> = (0..cov.nrows()).map(|i| cov[(i, i)]).collect();
    if se.iter().all(|v| *v >= 0.0 && v.is_finite()) {
        Some(se.into_iter().map(f64::sqrt).collect())
    } else {
        None
    }
}

/// Per-observation central-difference scores: row `t` is `∂ℓ_t/∂x`.
pub fn numerical_scores<F: Fn(&[f64]) -> Vec<f64>>(contributions: F, x: &[f64]) -> Result<DMatrix<f64>> {
    let n_obs = contributions(x).len();
    let mut scores = DMatrix::zeros(n_obs, x.len());
    let mut work = x.to_vec();
    for j in 0..x.len() {
        let h = (1e-5 * x[j].abs()).max(1e-5);
        work[j] = x[j] + h;
        let up = contributions(&work);
        work[j] = x[j] - h;
        let down = contributions(&work);
        work[j] = x[j];
        for t in 0..n_obs {
            let v = (up[t] - down[t]) / (2.0 * h);
            if !v.is_finite() {
                return Err(Error::Degenerate("non-finite score".into()));
            }
            scores[(t, j)] = v;
        }
    }
    Ok(scores)
}

/// Sandwich standard errors from a Hessian and a score matrix.
pub fn sandwich_standard_errors(hessian: &DMatrix<f64>, scores: &DMatrix<f64>) -> Option<Vec<f64>> {
    let bread = inverse_information(hessian)?;
    let meat = scores.transpose() * scores;
    diag_sqrt(&(&bread * meat * &bread))
}

/// Two-sided p-value of the z-statistic `estimate / se`.
pub fn p_value(estimate: f64, se: f64) -> f64 {
    if !(se > 0.0) || !se.is_finite() {
        return f64::NAN;
    }
    let z = (estimate / se).abs();
    let normal = StdNormal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0)
}
