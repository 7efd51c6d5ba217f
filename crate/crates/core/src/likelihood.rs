//! Multinomial-logit hazards, the Time-Varying Geometric law and the
//! observed-data likelihood.
//!
//! Everything is evaluated in log space: with baseline levels around -9 the
//! raw hazards are of order 1e-4, and `ln(1 - λ(t))` is computed exactly as
//! `-ln(1 + Σ_r exp(η_rt))`.

use std::collections::HashMap;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mcmc::ModelState;

/// `ln(1 + Σ exp(η_r))`, shifted for stability.
#[inline]
pub fn log_one_plus_sum_exp(eta: &[f64]) -> f64 {
    let max = eta.iter().copied().fold(0.0f64, f64::max);
    let mut s = (-max).exp();
    for &e in eta {
        s += (e - max).exp();
    }
    max + s.ln()
}

/// Cause-specific hazards `λ_r = exp(η_r) / (1 + Σ_ρ exp(η_ρ))` and their sum.
pub fn hazards(eta: &[f64]) -> Result<(Vec<f64>, f64)> {
    if eta.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite);
    }
    let lse = log_one_plus_sum_exp(eta);
    let lambda: Vec<f64> = eta.iter().map(|e| (e - lse).exp()).collect();
    let overall = lambda.iter().sum();
    Ok((lambda, overall))
}

/// Time-Varying Geometric pmf on `1..=t_max+1` (index 0 holds `P(T = 1)`).
pub fn tvgeom_pmf(phi: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = phi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Probability(format!("success probability {bad} outside [0, 1]")));
    }
    let mut pmf = Vec::with_capacity(phi.len() + 1);
    let mut survival = 1.0;
    for &p in phi {
        pmf.push(p * survival);
        survival *= 1.0 - p;
    }
    pmf.push(survival);
    Ok(pmf)
}

/// Per-period log hazards for one covariate offset vector.
#[derive(Debug, Clone)]
pub struct HazardTable {
    /// `η_rt`, `m × t_max`.
    pub eta: Vec<Vec<f64>>,
    /// `ln λ_r(t)`.
    pub log_lambda: Vec<Vec<f64>>,
    /// `ln(1 - λ(t))`.
    pub log_survival: Vec<f64>,
}

impl HazardTable {
    pub fn new(alpha: &[Vec<f64>], offsets: &[f64]) -> Self {
        let m = alpha.len();
        let t_max = alpha.first().map_or(0, Vec::len);
        let mut eta = vec![vec![0.0; t_max]; m];
        let mut log_lambda = vec![vec![0.0; t_max]; m];
        let mut log_survival = vec![0.0; t_max];
        let mut column = vec![0.0; m];
        for t in 0..t_max {
            for r in 0..m {
                column[r] = alpha[r][t] + offsets[r];
                eta[r][t] = column[r];
            }
            let lse = log_one_plus_sum_exp(&column);
            log_survival[t] = -lse;
            for r in 0..m {
                log_lambda[r][t] = column[r] - lse;
            }
        }
        Self {
            eta,
            log_lambda,
            log_survival,
        }
    }

    pub fn lambda(&self, r: usize, t: usize) -> f64 {
        self.log_lambda[r][t - 1].exp()
    }

    pub fn overall(&self, t: usize) -> f64 {
        -self.log_survival[t - 1].exp_m1()
    }
}

/// Log-likelihood of individual `i` under a hazard table.
#[inline]
fn individual_loglik(ds: &Dataset, i: usize, table: &HazardTable) -> f64 {
    let periods = ds.periods(i);
    match ds.event_risk(i) {
        Some(r) => {
            let mut ll = table.log_lambda[r][periods - 1];
            for l in 0..periods - 1 {
                ll += table.log_survival[l];
            }
            ll
        }
        None => {
            let mut ll = 0.0;
            for l in 0..periods {
                ll += table.log_survival[l];
            }
            ll
        }
    }
}

/// Observed-data log-likelihood for an expanded `α` (`m × t_max`) and `β` (`m × p`).
///
/// Hazard tables are shared between individuals whose offsets `x·β_r` are
/// bitwise equal, which leaves every per-individual term unchanged.
pub fn log_likelihood_with(ds: &Dataset, alpha: &[Vec<f64>], beta: &[Vec<f64>]) -> f64 {
    let mut tables: HashMap<Vec<u64>, HazardTable> = HashMap::new();
    let mut total = 0.0;
    for i in 0..ds.n() {
        let x = ds.covariates(i);
        let offsets: Vec<f64> = beta
            .iter()
            .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
            .collect();
        let key: Vec<u64> = offsets.iter().map(|o| o.to_bits()).collect();
        let table = tables
            .entry(key)
            .or_insert_with(|| HazardTable::new(alpha, &offsets));
        total += individual_loglik(ds, i, table);
    }
    total
}

fn check_dimensions(ds: &Dataset, state: &ModelState) -> Result<()> {
    let m = ds.m();
    if state.cp.t_max() != ds.t_max()
        || state.bh.alpha_star.len() != m
        || state.reg.beta.len() != m
        || state.reg.beta.iter().any(|b| b.len() != ds.p())
    {
        return Err(Error::Dimension(format!(
            "state does not match dataset (m = {m}, p = {}, t_max = {})",
            ds.p(),
            ds.t_max()
        )));
    }
    state.bh.validate(&state.cp)
}

/// `Σ_i [δ_i ln λ_{r_i}(t_i) + Σ_{l ≤ t_i - δ_i} ln(1 - λ(l))]`.
pub fn log_likelihood(ds: &Dataset, state: &ModelState) -> Result<f64> {
    check_dimensions(ds, state)?;
    Ok(log_likelihood_with(ds, &state.alpha(), &state.reg.beta))
}

/// Discrete cumulative hazard `Λ_r(t | x) = Σ_{l ≤ t} λ_r(l | x)` for `t = 1..=t_max`.
pub fn cumulative_hazard(state: &ModelState, x: &[f64], r: usize) -> Result<Vec<f64>> {
    let m = state.bh.alpha_star.len();
    if r >= m {
        return Err(Error::Dimension(format!("risk index {r} but m = {m}")));
    }
    if state.reg.beta.iter().any(|b| b.len() != x.len()) {
        return Err(Error::Dimension("covariate profile length".into()));
    }
    Ok(cumulative_hazard_with(&state.alpha(), &state.reg.beta, x, r))
}

pub(crate) fn cumulative_hazard_with(
    alpha: &[Vec<f64>],
    beta: &[Vec<f64>],
    x: &[f64],
    r: usize,
) -> Vec<f64> {
    let offsets: Vec<f64> = beta
        .iter()
        .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
        .collect();
    let table = HazardTable::new(alpha, &offsets);
    let mut acc = 0.0;
    table.log_lambda[r]
        .iter()
        .map(|ll| {
            acc += ll.exp();
            acc
        })
        .collect()
}
