//! Gumbel-mixture data augmentation.
//!
//! Every at-risk cell `(i, l, r)` (individual `i`, period `l ≤ periods(i)`,
//! risk `r`) receives a latent utility `u_irl` whose conditional law is
//! `η_irl + Gumbel`, approximated by the ten-component normal mixture with
//! component label `c_irl`. Given `(u, c)` the model for `α` is Gaussian, so
//! the baseline levels can be integrated out in closed form.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mcmc::ModelState;
use crate::mixture::MixtureTable;
use crate::priors::{ChangePointState, Hyperparameters, RegressionState, LN_2PI};
use crate::rng::CounterRng;

use std::sync::OnceLock;

pub fn mixture() -> &'static MixtureTable {
    static TABLE: OnceLock<MixtureTable> = OnceLock::new();
    TABLE.get_or_init(MixtureTable::gumbel)
}

/// Latent utilities and mixture labels, stored per individual in a flat
/// buffer: cell `(i, l, r)` lives at `offsets[i] + (l - 1) * m + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedData {
    pub m: usize,
    pub offsets: Vec<usize>,
    pub u: Vec<f64>,
    pub c: Vec<u8>,
}

impl AugmentedData {
    #[inline]
    pub fn index(&self, i: usize, l: usize, r: usize) -> usize {
        self.offsets[i] + (l - 1) * self.m + r
    }

    pub fn n_cells(&self) -> usize {
        self.u.len()
    }

    fn check_shape(&self, ds: &Dataset) -> Result<()> {
        let ok = self.m == ds.m()
            && self.offsets.len() == ds.n() + 1
            && (0..ds.n()).all(|i| self.offsets[i + 1] - self.offsets[i] == ds.periods(i) * self.m)
            && self.u.len() == self.c.len()
            && self.u.len() == self.offsets[ds.n()];
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("augmented data does not match the dataset".into()))
        }
    }
}

/// `u = -ln( E₀ / (1 + Σ_ρ e^{η_ρ}) + 1[non-event] · (-ln V) / e^{η_r} )`,
/// with `E₀ = -ln U`; `lse = ln(1 + Σ_ρ e^{η_ρ})`.
#[inline]
pub fn augment_value(eta_r: f64, lse: f64, e0: f64, non_event: bool, v: f64) -> f64 {
    let mut s = e0 * (-lse).exp();
    if non_event {
        s += -v.ln() * (-eta_r).exp();
    }
    -s.ln()
}

/// Augment one period row of one individual. `eta` has one entry per risk;
/// `event` is the risk that fires in this period, if any.
fn augment_row(
    eta: &[f64],
    event: Option<usize>,
    rng: &mut CounterRng,
    u_out: &mut [f64],
    c_out: &mut [u8],
) {
    let table = mixture();
    let lse = crate::likelihood::log_one_plus_sum_exp(eta);
    let e0 = -rng.open01().ln();
    for r in 0..eta.len() {
        let v = rng.open01();
        let vc = rng.open01();
        let u = augment_value(eta[r], lse, e0, event != Some(r), v);
        u_out[r] = u;
        c_out[r] = table.draw_component(u - eta[r], vc);
    }
}

fn augment_individual(
    ds: &Dataset,
    alpha: &[Vec<f64>],
    beta: &[Vec<f64>],
    seed: u64,
    iteration: u64,
    i: usize,
    u: &mut [f64],
    c: &mut [u8],
) {
    let m = ds.m();
    let x = ds.covariates(i);
    let offsets: Vec<f64> = beta
        .iter()
        .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
        .collect();
    let periods = ds.periods(i);
    let event = ds.event_risk(i);
    let mut eta = vec![0.0; m];
    for l in 1..=periods {
        for r in 0..m {
            eta[r] = alpha[r][l - 1] + offsets[r];
        }
        let fires = if l == periods { event } else { None };
        let mut rng = CounterRng::for_cell(seed, iteration, i, l);
        let span = (l - 1) * m..l * m;
        augment_row(&eta, fires, &mut rng, &mut u[span.clone()], &mut c[span]);
    }
}

/// Draw `(u, c)` for every at-risk cell given expanded `α` and `β`.
///
/// The randomness of cell row `(i, l)` comes from a stream keyed by
/// `(seed, iteration, i, l)`, so the result does not depend on `parallel`.
pub fn sample_augmented_with(
    ds: &Dataset,
    alpha: &[Vec<f64>],
    beta: &[Vec<f64>],
    seed: u64,
    iteration: u64,
    parallel: bool,
) -> Result<AugmentedData> {
    if alpha.iter().flatten().chain(beta.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let m = ds.m();
    let mut offsets = Vec::with_capacity(ds.n() + 1);
    offsets.push(0);
    for i in 0..ds.n() {
        offsets.push(offsets[i] + ds.periods(i) * m);
    }
    let total = offsets[ds.n()];
    let mut u = vec![0.0; total];
    let mut c = vec![0u8; total];

    // Pre-split the buffers so each individual owns a disjoint slice.
    let mut slices: Vec<(usize, &mut [f64], &mut [u8])> = Vec::with_capacity(ds.n());
    let (mut u_rest, mut c_rest) = (u.as_mut_slice(), c.as_mut_slice());
    for i in 0..ds.n() {
        let len = offsets[i + 1] - offsets[i];
        let (u_head, u_tail) = u_rest.split_at_mut(len);
        let (c_head, c_tail) = c_rest.split_at_mut(len);
        slices.push((i, u_head, c_head));
        u_rest = u_tail;
        c_rest = c_tail;
    }
    let work = |(i, u, c): &mut (usize, &mut [f64], &mut [u8])| {
        augment_individual(ds, alpha, beta, seed, iteration, *i, u, c)
    };
    if parallel {
        slices.par_iter_mut().for_each(work);
    } else {
        slices.iter_mut().for_each(work);
    }
    drop(slices);
    Ok(AugmentedData { m, offsets, u, c })
}

pub fn sample_augmented(
    ds: &Dataset,
    state: &ModelState,
    seed: u64,
    iteration: u64,
    parallel: bool,
) -> Result<AugmentedData> {
    sample_augmented_with(ds, &state.alpha(), &state.reg.beta, seed, iteration, parallel)
}

/// `Σ log N(u_irl | η_irl + ξ_c, s²_c)` over every cell.
pub fn augmented_loglik(ds: &Dataset, aug: &AugmentedData, state: &ModelState) -> Result<f64> {
    aug.check_shape(ds)?;
    let table = mixture();
    let alpha = state.alpha();
    let mut total = 0.0;
    for i in 0..ds.n() {
        let offsets = state.reg.offsets(ds.covariates(i));
        for l in 1..=ds.periods(i) {
            for r in 0..ds.m() {
                let k = aug.index(i, l, r);
                let c = aug.c[k] as usize;
                let d = aug.u[k] - alpha[r][l - 1] - offsets[r] - table.means[c];
                total += table.log_norm[c] - d * d * table.half_precision[c];
            }
        }
    }
    Ok(total)
}

/// Gaussian sufficient statistics of the residuals mapped to one interval,
/// centred at the prior mean: with weights `w = temperature / s²` and
/// centred residuals `e = d - μ_α`, `w_sum = Σ w`, `s1 = Σ w e`,
/// `s2 = Σ w e²`, `cst = temperature · Σ -½ ln(2π s²)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntervalStats {
    pub count: usize,
    pub w_sum: f64,
    pub s1: f64,
    pub s2: f64,
    pub cst: f64,
}

impl IntervalStats {
    #[inline]
    pub fn add(&mut self, d: f64, s2: f64, temperature: f64, mu: f64) {
        let w = temperature / s2;
        let e = d - mu;
        self.count += 1;
        self.w_sum += w;
        self.s1 += w * e;
        self.s2 += w * e * e;
        self.cst -= 0.5 * temperature * (LN_2PI + s2.ln());
    }

    #[inline]
    pub fn merge(&mut self, other: &IntervalStats) {
        self.count += other.count;
        self.w_sum += other.w_sum;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.cst += other.cst;
    }

    /// `ln ∫ Π_k N(d_k | α, s²_k)^temperature N(α | μ_α, σ²_α) dα`.
    pub fn log_marginal(&self, sigma2: f64) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let precision = 1.0 / sigma2 + self.w_sum;
        self.cst - 0.5 * (sigma2 * precision).ln() - 0.5 * (self.s2 - self.s1 * self.s1 / precision)
    }

    /// Posterior mean and variance of the interval's level.
    pub fn posterior(&self, mu: f64, sigma2: f64) -> (f64, f64) {
        let precision = 1.0 / sigma2 + self.w_sum;
        (mu + self.s1 / precision, 1.0 / precision)
    }
}

/// Residual statistics per `(risk, period)`; an interval's statistics are the
/// sums of its periods in increasing `t`.
#[derive(Debug, Clone)]
pub struct ResidualStats {
    cells: Vec<Vec<IntervalStats>>,
}

impl ResidualStats {
    /// Residuals `d = u - ξ_c - x·β_r`, weighted by `temperature`.
    pub fn new(
        ds: &Dataset,
        aug: &AugmentedData,
        reg: &RegressionState,
        mu: f64,
        temperature: f64,
    ) -> Result<Self> {
        aug.check_shape(ds)?;
        let table = mixture();
        let mut cells = vec![vec![IntervalStats::default(); ds.t_max()]; ds.m()];
        for i in 0..ds.n() {
            let offsets = reg.offsets(ds.covariates(i));
            for l in 1..=ds.periods(i) {
                for r in 0..ds.m() {
                    let k = aug.index(i, l, r);
                    let c = aug.c[k] as usize;
                    let d = aug.u[k] - table.means[c] - offsets[r];
                    cells[r][l - 1].add(d, table.variances[c], temperature, mu);
                }
            }
        }
        Ok(Self { cells })
    }

    pub fn interval(&self, r: usize, start: usize, end: usize) -> IntervalStats {
        let mut acc = IntervalStats::default();
        for t in start..=end {
            acc.merge(&self.cells[r][t - 1]);
        }
        acc
    }

    /// `ln p(u | c, z, β)` with every level integrated out.
    pub fn log_marginal(&self, cp: &ChangePointState, sigma2: f64) -> f64 {
        let mut total = 0.0;
        for r in 0..self.cells.len() {
            for (start, end) in cp.risk_intervals(r) {
                total += self.interval(r, start, end).log_marginal(sigma2);
            }
        }
        total
    }
}

/// Closed-form marginal of the augmented likelihood over the baseline levels.
pub fn marginal_augmented_loglik(
    ds: &Dataset,
    aug: &AugmentedData,
    cp: &ChangePointState,
    reg: &RegressionState,
    hyper: &Hyperparameters,
) -> Result<f64> {
    if cp.t_max() != ds.t_max() {
        return Err(Error::Dimension("change-point state does not match the dataset".into()));
    }
    let stats = ResidualStats::new(ds, aug, reg, hyper.mu_alpha, 1.0)?;
    Ok(stats.log_marginal(cp, hyper.sigma2_alpha))
}
