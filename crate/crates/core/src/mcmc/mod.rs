//! Local-global MCMC sampler.
//!
//! One sweep draws fresh augmented data, runs the collapsed (local) moves on
//! the change points, redraws the levels and the regression part on the
//! augmented model, then runs the same structural moves on the exact
//! likelihood (global block).

mod global;
mod local;
pub mod moves;
mod regression;
mod state;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use global::{global_split_merge_shuffle, global_update_z, GlobalTarget};
pub use local::{gibbs_alpha, local_split_merge_shuffle, local_update_z, LocalTarget};
pub use moves::{MoveCount, MoveCounters};
pub use regression::{subset_posterior, update_beta, NormalEquations, SubsetPosterior};
pub use state::ModelState;

use crate::augmentation::{sample_augmented_with, ResidualStats};
use crate::data::{compute_allowed_set, AllowedSet, Dataset};
use crate::error::{Error, Result};
use crate::inference::PosteriorSample;
use crate::priors::Hyperparameters;
use crate::rng::{derive_key, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub global_moves_enabled: bool,
    /// Power applied to the likelihood; 0 samples the prior.
    pub likelihood_temperature: f64,
    /// Standard deviation of the random-walk proposal for new levels in the
    /// global moves.
    pub rw_sd: f64,
    pub parallel_augmentation: bool,
    /// Added to every split log ratio. Only for negative-control tests.
    #[doc(hidden)]
    #[serde(default, skip_serializing_if = "is_zero")]
    pub split_log_bias: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            burn_in: 10_000,
            thin: 1,
            seed: 1,
            global_moves_enabled: true,
            likelihood_temperature: 1.0,
            rw_sd: 1.0,
            parallel_augmentation: true,
            split_log_bias: 0.0,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.burn_in > self.iterations {
            return bad(format!("burn-in {} exceeds iterations {}", self.burn_in, self.iterations));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.likelihood_temperature) {
            return bad(format!("temperature {} outside [0, 1]", self.likelihood_temperature));
        }
        if !(self.rw_sd > 0.0 && self.rw_sd.is_finite()) {
            return bad(format!("rw_sd = {} must be positive", self.rw_sd));
        }
        Ok(())
    }

    /// Number of samples a run records.
    pub fn n_recorded(&self) -> u64 {
        let kept = self.iterations.saturating_sub(self.burn_in);
        kept.div_ceil(self.thin.max(1))
    }
}

fn audit(stage: &str, state: &ModelState, allowed: &AllowedSet, hyper: &Hyperparameters) {
    if cfg!(debug_assertions) {
        if let Err(e) = state.validate(allowed, hyper) {
            panic!("invariant violated after {stage}: {e}");
        }
    }
}

/// One local-global sweep. `iteration` keys the augmentation streams.
#[allow(clippy::too_many_arguments)]
pub fn mcmc_step(
    state: &mut ModelState,
    ds: &Dataset,
    allowed: &AllowedSet,
    hyper: &Hyperparameters,
    cfg: &KernelConfig,
    iteration: u64,
    rng: &mut ChaCha8Rng,
    counters: &mut MoveCounters,
) -> Result<()> {
    let temperature = cfg.likelihood_temperature;
    let aug = sample_augmented_with(
        ds,
        &state.alpha(),
        &state.reg.beta,
        cfg.seed,
        iteration,
        cfg.parallel_augmentation,
    )?;
    let stats = ResidualStats::new(ds, &aug, &state.reg, hyper.mu_alpha, temperature)?;
    let target = LocalTarget {
        stats: &stats,
        allowed,
        hyper,
    };
    local_split_merge_shuffle(state, &target, cfg.split_log_bias, rng, counters);
    audit("local split/merge/shuffle", state, allowed, hyper);
    local_update_z(state, &target, rng, counters);
    audit("local z update", state, allowed, hyper);
    gibbs_alpha(state, &stats, hyper, rng)?;
    audit("level update", state, allowed, hyper);
    update_beta(state, ds, &aug, hyper, temperature, rng, counters)?;
    audit("regression update", state, allowed, hyper);

    if cfg.global_moves_enabled {
        let target = GlobalTarget {
            ds,
            allowed,
            hyper,
            temperature,
            rw_sd: cfg.rw_sd,
        };
        let mut current = target.tempered_loglik(state);
        global_split_merge_shuffle(state, &target, &mut current, cfg.split_log_bias, rng, counters);
        audit("global split/merge/shuffle", state, allowed, hyper);
        global_update_z(state, &target, &mut current, rng, counters);
        audit("global z update", state, allowed, hyper);
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub counters: MoveCounters,
    pub n_samples: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub samples: Vec<PosteriorSample>,
    pub report: ChainReport,
}

pub fn check_inputs(ds: &Dataset, hyper: &Hyperparameters, cfg: &KernelConfig) -> Result<()> {
    cfg.validate()?;
    hyper.validate()?;
    if hyper.m != ds.m() || hyper.p != ds.p() || hyper.t_max != ds.t_max() {
        return Err(Error::Dimension(format!(
            "hyperparameters are for (m, p, t_max) = ({}, {}, {}), dataset has ({}, {}, {})",
            hyper.m,
            hyper.p,
            hyper.t_max,
            ds.m(),
            ds.p(),
            ds.t_max()
        )));
    }
    Ok(())
}

/// Run one chain from the empty model, handing every recorded sample to `sink`.
pub fn run_chain_with<F>(
    ds: &Dataset,
    hyper: &Hyperparameters,
    cfg: &KernelConfig,
    mut sink: F,
) -> Result<ChainReport>
where
    F: FnMut(&PosteriorSample) -> Result<()>,
{
    check_inputs(ds, hyper, cfg)?;
    let started = Instant::now();
    let allowed = compute_allowed_set(ds);
    let mut state = ModelState::initial(ds.m(), ds.p(), ds.t_max(), hyper.mu_alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_key(&[cfg.seed, tag::CHAIN]));
    let mut counters = MoveCounters::default();
    let mut n_samples = 0;
    for it in 0..cfg.iterations {
        mcmc_step(&mut state, ds, &allowed, hyper, cfg, it, &mut rng, &mut counters)?;
        if it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
            sink(&PosteriorSample::from_state(it + 1, &state))?;
            n_samples += 1;
        }
    }
    if counters.nan_ratios > 0 {
        log::warn!("{} Metropolis ratios evaluated to NaN", counters.nan_ratios);
    }
    Ok(ChainReport {
        counters,
        n_samples,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn run_chain(ds: &Dataset, hyper: &Hyperparameters, cfg: &KernelConfig) -> Result<ChainOutput> {
    let mut samples = Vec::with_capacity(cfg.n_recorded() as usize);
    let report = run_chain_with(ds, hyper, cfg, |s| {
        samples.push(s.clone());
        Ok(())
    })?;
    Ok(ChainOutput { samples, report })
}
