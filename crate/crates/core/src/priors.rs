//! The Multivariate Bernoulli detector prior and the priors on the
//! continuous parameters.
//!
//! The change-point prior is hierarchical:
//!
//! * `K ~ Geo(π_K)` truncated to `0..=|𝒯|`, i.e. `p(K) ∝ π_K (1 - π_K)^K`;
//! * given `K`, the set of change points is uniform over the `C(|𝒯|, K)`
//!   subsets of the admissible times `𝒯`;
//! * at each change point the vector of risks that jump is drawn from
//!   `Ber_0(ψ)`, a distribution over the `2^m - 1` nonzero binary vectors.
//!
//! A configuration is encoded as an integer code whose bit `r` (risk `r + 1`,
//! least significant bit first) is set when risk `r` jumps; `ψ[code - 1]`
//! is its probability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::AllowedSet;
use crate::error::{Error, Result};

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln()) - 0.5 * d * d / var
}

/// `ln C(n, k)`, exact summation for the small `n` seen here.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k).map(|i| (((n - k + i) as f64) / i as f64).ln()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub mu_alpha: f64,
    pub sigma2_alpha: f64,
    pub sigma2_beta: f64,
    pub pi_k: f64,
    /// Probabilities of the `2^m - 1` nonzero configurations, indexed by `code - 1`.
    pub psi: Vec<f64>,
    pub m: usize,
    pub p: usize,
    pub t_max: usize,
}

impl Hyperparameters {
    /// Defaults: `μ_α = -9`, `σ²_α = 3`, `σ²_β = 1`, `π_K = 0.5`, uniform `ψ`.
    pub fn defaults(m: usize, p: usize, t_max: usize) -> Self {
        let configs = n_configs(m);
        Self {
            mu_alpha: -9.0,
            sigma2_alpha: 3.0,
            sigma2_beta: 1.0,
            pi_k: 0.5,
            psi: vec![1.0 / configs as f64; configs],
            m,
            p,
            t_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Hyperparameters(msg));
        if self.m == 0 || self.m > 20 {
            return bad(format!("m = {} outside 1..=20", self.m));
        }
        if !(self.sigma2_alpha > 0.0 && self.sigma2_alpha.is_finite()) {
            return bad(format!("sigma2_alpha = {} must be positive", self.sigma2_alpha));
        }
        if !(self.sigma2_beta > 0.0 && self.sigma2_beta.is_finite()) {
            return bad(format!("sigma2_beta = {} must be positive", self.sigma2_beta));
        }
        if !self.mu_alpha.is_finite() {
            return bad("mu_alpha must be finite".into());
        }
        if !(self.pi_k > 0.0 && self.pi_k < 1.0) {
            return bad(format!("pi_k = {} outside (0, 1)", self.pi_k));
        }
        if self.psi.len() != n_configs(self.m) {
            return bad(format!(
                "psi has {} entries, expected 2^m - 1 = {}",
                self.psi.len(),
                n_configs(self.m)
            ));
        }
        if self.psi.iter().any(|&q| !(q >= 0.0 && q.is_finite())) {
            return bad("psi entries must be nonnegative".into());
        }
        let total: f64 = self.psi.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("psi sums to {total}, not 1"));
        }
        Ok(())
    }

    #[inline]
    pub fn ln_psi(&self, code: u32) -> f64 {
        self.psi[code as usize - 1].ln()
    }

    /// Draw a configuration code from `Ber_0(ψ)`.
    pub fn sample_config<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (idx, &q) in self.psi.iter().enumerate() {
            acc += q;
            if u < acc {
                return idx as u32 + 1;
            }
        }
        // rounding: fall back to the last configuration with positive mass
        self.psi.iter().rposition(|&q| q > 0.0).unwrap_or(0) as u32 + 1
    }
}

#[inline]
pub fn n_configs(m: usize) -> usize {
    (1usize << m) - 1
}

/// Overall change points `γ` together with the cause-specific indicators `z`.
///
/// Stored as one configuration code per time; `γ_t = 1` exactly when the code
/// is nonzero, so the coupling between `γ` and `z` holds by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChangePointState {
    codes: Vec<u32>,
}

impl ChangePointState {
    /// No change points.
    pub fn empty(t_max: usize) -> Self {
        Self {
            codes: vec![0; t_max],
        }
    }

    pub fn t_max(&self) -> usize {
        self.codes.len()
    }

    #[inline]
    pub fn code(&self, t: usize) -> u32 {
        self.codes[t - 1]
    }

    #[inline]
    pub fn set(&mut self, t: usize, code: u32) {
        self.codes[t - 1] = code;
    }

    #[inline]
    pub fn gamma(&self, t: usize) -> bool {
        self.codes[t - 1] != 0
    }

    #[inline]
    pub fn z(&self, r: usize, t: usize) -> bool {
        (self.codes[t - 1] >> r) & 1 == 1
    }

    pub fn k(&self) -> usize {
        self.codes.iter().filter(|&&c| c != 0).count()
    }

    /// Sorted overall change-point times.
    pub fn change_points(&self) -> Vec<usize> {
        (1..=self.t_max()).filter(|&t| self.gamma(t)).collect()
    }

    /// Lengths `n_ℓ` of the `K + 1` overall intervals.
    pub fn interval_lengths(&self) -> Vec<usize> {
        let mut lengths = Vec::with_capacity(self.k() + 1);
        let mut start = 1;
        for t in self.change_points() {
            lengths.push(t - start);
            start = t;
        }
        lengths.push(self.t_max() + 1 - start);
        lengths
    }

    /// Cause-specific intervals for risk `r` as inclusive `(start, end)` pairs.
    pub fn risk_intervals(&self, r: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 1;
        for t in 2..=self.t_max() {
            if self.z(r, t) {
                out.push((start, t - 1));
                start = t;
            }
        }
        out.push((start, self.t_max()));
        out
    }

    /// Number of cause-specific levels `L_r`.
    pub fn n_levels(&self, r: usize) -> usize {
        1 + (2..=self.t_max()).filter(|&t| self.z(r, t)).count()
    }

    /// Index of the cause-specific interval of risk `r` containing `t`.
    pub fn level_index(&self, r: usize, t: usize) -> usize {
        (2..=t).filter(|&s| self.z(r, s)).count()
    }

    pub fn validate(&self, allowed: &AllowedSet, m: usize) -> Result<()> {
        if self.t_max() != allowed.t_max() {
            return Err(Error::State(format!(
                "change-point state covers {} periods, allowed set {}",
                self.t_max(),
                allowed.t_max()
            )));
        }
        let limit = 1u32 << m;
        for t in 1..=self.t_max() {
            let c = self.code(t);
            if c >= limit {
                return Err(Error::State(format!("configuration {c} at t = {t} exceeds m = {m}")));
            }
            if c != 0 && !allowed.contains(t) {
                return Err(Error::State(format!("change point at inadmissible time {t}")));
            }
        }
        Ok(())
    }
}

/// Regression coefficients with their spike-and-slab inclusion indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionState {
    pub beta: Vec<Vec<f64>>,
    pub inclusion: Vec<Vec<bool>>,
    pub pi_beta: f64,
}

impl RegressionState {
    /// All coefficients excluded, `π_β = 0.5`.
    pub fn empty(m: usize, p: usize) -> Self {
        Self {
            beta: vec![vec![0.0; p]; m],
            inclusion: vec![vec![false; p]; m],
            pi_beta: 0.5,
        }
    }

    /// `b_r`, the number of included covariates for risk `r`.
    pub fn included(&self, r: usize) -> usize {
        self.inclusion[r].iter().filter(|&&b| b).count()
    }

    /// Linear predictor offsets `x·β_r` for every risk.
    pub fn offsets(&self, x: &[f64]) -> Vec<f64> {
        self.beta
            .iter()
            .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
            .collect()
    }

    pub fn validate(&self, m: usize, p: usize) -> Result<()> {
        if self.beta.len() != m
            || self.inclusion.len() != m
            || self.beta.iter().any(|b| b.len() != p)
            || self.inclusion.iter().any(|b| b.len() != p)
        {
            return Err(Error::Dimension(format!("regression state is not {m} x {p}")));
        }
        for r in 0..m {
            for j in 0..p {
                if !self.inclusion[r][j] && self.beta[r][j] != 0.0 {
                    return Err(Error::State(format!(
                        "beta[{r}][{j}] = {} but the covariate is excluded",
                        self.beta[r][j]
                    )));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.pi_beta) {
            return Err(Error::Probability(format!("pi_beta = {}", self.pi_beta)));
        }
        Ok(())
    }
}

/// Unique baseline-hazard levels `α*_rℓ` per risk.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineHazards {
    pub alpha_star: Vec<Vec<f64>>,
}

impl BaselineHazards {
    /// One level `value` per risk (the no-change-point model).
    pub fn constant(m: usize, value: f64) -> Self {
        Self {
            alpha_star: vec![vec![value]; m],
        }
    }

    /// Expand the levels into `α_rt` (`m × t_max`, column `t - 1`).
    pub fn expand(&self, cp: &ChangePointState) -> Vec<Vec<f64>> {
        self.alpha_star
            .iter()
            .enumerate()
            .map(|(r, levels)| {
                let mut row = Vec::with_capacity(cp.t_max());
                let mut idx = 0;
                for t in 1..=cp.t_max() {
                    if t >= 2 && cp.z(r, t) {
                        idx += 1;
                    }
                    row.push(levels[idx]);
                }
                row
            })
            .collect()
    }

    pub fn validate(&self, cp: &ChangePointState) -> Result<()> {
        for (r, levels) in self.alpha_star.iter().enumerate() {
            if levels.len() != cp.n_levels(r) {
                return Err(Error::State(format!(
                    "risk {r} has {} levels but {} cause-specific intervals",
                    levels.len(),
                    cp.n_levels(r)
                )));
            }
            if levels.iter().any(|a| !a.is_finite()) {
                return Err(Error::State(format!("risk {r} has a non-finite level")));
            }
        }
        Ok(())
    }

    /// Insert a level for a new break of risk `r` at `t`. `cp` is the state
    /// *before* the break is added.
    pub(crate) fn insert_break(&mut self, cp: &ChangePointState, r: usize, t: usize, value: f64) {
        let left = cp.level_index(r, t);
        self.alpha_star[r].insert(left + 1, value);
    }

    /// Remove the level that starts at the break of risk `r` at `t`, returning
    /// `(removed, left)`. `cp` is the state *before* the break is removed.
    pub(crate) fn remove_break(&mut self, cp: &ChangePointState, r: usize, t: usize) -> (f64, f64) {
        let idx = cp.level_index(r, t);
        let removed = self.alpha_star[r].remove(idx);
        (removed, self.alpha_star[r][idx - 1])
    }

    /// Level of the interval of risk `r` that contains `t`.
    pub(crate) fn level_at(&self, cp: &ChangePointState, r: usize, t: usize) -> f64 {
        self.alpha_star[r][cp.level_index(r, t)]
    }
}

/// Log of the truncated geometric `p(K)` on `0..=n_allowed`.
pub fn log_prior_k(k: usize, n_allowed: usize, pi_k: f64) -> f64 {
    if k > n_allowed {
        return f64::NEG_INFINITY;
    }
    let q = 1.0 - pi_k;
    pi_k.ln() + k as f64 * q.ln() - (-q.powi(n_allowed as i32 + 1)).ln_1p()
}

/// `log p(K, γ, z)` under the Multivariate Bernoulli detector prior.
/// Returns `-∞` for states outside the support.
pub fn log_prior_changepoints(
    cp: &ChangePointState,
    hyper: &Hyperparameters,
    allowed: &AllowedSet,
) -> f64 {
    if let Err(e) = cp.validate(allowed, hyper.m) {
        log::warn!("change-point state outside prior support: {e}");
        return f64::NEG_INFINITY;
    }
    let k = cp.k();
    let n_allowed = allowed.len();
    let mut lp = log_prior_k(k, n_allowed, hyper.pi_k) - ln_binomial(n_allowed, k);
    for t in allowed.times() {
        let c = cp.code(*t);
        if c != 0 {
            lp += hyper.ln_psi(c);
        }
    }
    lp
}

/// Analytic prior marginals used by the Bayes factors and the prior checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorMarginals {
    /// `p(K = k)` for `k = 0..=|𝒯|`.
    pub k_distribution: Vec<f64>,
    pub p_k0: f64,
    pub expected_k: f64,
    /// `P(γ_t = 1)`, identical for every admissible `t`.
    pub p_gamma1: f64,
    /// `P(z_rt = 1 | γ_t = 1)` per risk.
    pub p_z_given_gamma: Vec<f64>,
    /// `P(z_rt = 1)` per risk.
    pub p_z1: Vec<f64>,
}

pub fn prior_marginals(hyper: &Hyperparameters, allowed: &AllowedSet) -> PriorMarginals {
    let n_allowed = allowed.len();
    let k_distribution: Vec<f64> = (0..=n_allowed)
        .map(|k| log_prior_k(k, n_allowed, hyper.pi_k).exp())
        .collect();
    let q = 1.0 - hyper.pi_k;
    let p_k0 = hyper.pi_k / (1.0 - q.powi(n_allowed as i32 + 1));
    let expected_k: f64 = k_distribution
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum();
    let p_z_given_gamma: Vec<f64> = (0..hyper.m)
        .map(|r| {
            hyper
                .psi
                .iter()
                .enumerate()
                .filter(|(idx, _)| ((idx + 1) >> r) & 1 == 1)
                .map(|(_, q)| q)
                .sum()
        })
        .collect();
    if n_allowed == 0 {
        return PriorMarginals {
            k_distribution,
            p_k0: 1.0,
            expected_k: 0.0,
            p_gamma1: 0.0,
            p_z1: vec![0.0; hyper.m],
            p_z_given_gamma,
        };
    }
    let p_gamma1 = expected_k / n_allowed as f64;
    PriorMarginals {
        p_z1: p_z_given_gamma.iter().map(|q| p_gamma1 * q).collect(),
        k_distribution,
        p_k0,
        expected_k,
        p_gamma1,
        p_z_given_gamma,
    }
}

/// Prior on the baseline-hazard levels: `α*_rℓ ~ N(μ_α, σ²_α)` independently.
pub fn log_prior_levels(bh: &BaselineHazards, hyper: &Hyperparameters) -> f64 {
    bh.alpha_star
        .iter()
        .flatten()
        .map(|&a| log_normal_pdf(a, hyper.mu_alpha, hyper.sigma2_alpha))
        .sum()
}

/// Spike-and-slab prior on `β` given `π_β`; the uniform hyperprior on `π_β`
/// contributes nothing.
pub fn log_prior_regression(reg: &RegressionState, hyper: &Hyperparameters) -> Result<f64> {
    if !(0.0..=1.0).contains(&reg.pi_beta) {
        return Err(Error::Probability(format!("pi_beta = {} outside [0, 1]", reg.pi_beta)));
    }
    let p = hyper.p;
    let mut lp = 0.0;
    for r in 0..reg.beta.len() {
        let b = reg.included(r);
        for j in 0..p {
            if reg.inclusion[r][j] {
                lp += log_normal_pdf(reg.beta[r][j], 0.0, hyper.sigma2_beta);
            }
        }
        if b > 0 {
            lp += b as f64 * reg.pi_beta.ln();
        }
        if p > b {
            lp += (p - b) as f64 * (1.0 - reg.pi_beta).ln();
        }
    }
    Ok(lp)
}

pub fn log_prior_continuous(
    bh: &BaselineHazards,
    reg: &RegressionState,
    hyper: &Hyperparameters,
) -> Result<f64> {
    Ok(log_prior_levels(bh, hyper) + log_prior_regression(reg, hyper)?)
}
