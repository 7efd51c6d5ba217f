//! Collapsed moves on the augmented likelihood with the levels integrated out.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use super::moves::{
    accept, merge_log_proposal_ratio, project_levels, propose_jump, propose_shuffle, shuffled,
    split_log_proposal_ratio, Jump, MoveCounters,
};
use super::ModelState;
use crate::augmentation::ResidualStats;
use crate::data::AllowedSet;
use crate::error::{Error, Result};
use crate::priors::{log_prior_changepoints, ChangePointState, Hyperparameters};

pub struct LocalTarget<'a> {
    pub stats: &'a ResidualStats,
    pub allowed: &'a AllowedSet,
    pub hyper: &'a Hyperparameters,
}

impl LocalTarget<'_> {
    /// `ln p(K, γ, z) + ln p(u | c, z, β)`.
    pub fn log_target(&self, cp: &ChangePointState) -> f64 {
        log_prior_changepoints(cp, self.hyper, self.allowed)
            + self.stats.log_marginal(cp, self.hyper.sigma2_alpha)
    }

    /// Log acceptance ratio of adding a change point with configuration
    /// `code` at `t`.
    pub fn split_log_ratio(&self, cp: &ChangePointState, t: usize, code: u32) -> f64 {
        let mut proposed = cp.clone();
        proposed.set(t, code);
        self.log_target(&proposed) - self.log_target(cp)
            + split_log_proposal_ratio(cp.k(), self.allowed.len())
            - self.hyper.ln_psi(code)
    }

    /// Log acceptance ratio of removing the change point at `t`.
    pub fn merge_log_ratio(&self, cp: &ChangePointState, t: usize) -> f64 {
        let mut proposed = cp.clone();
        proposed.set(t, 0);
        self.log_target(&proposed) - self.log_target(cp)
            + merge_log_proposal_ratio(cp.k(), self.allowed.len())
            + self.hyper.ln_psi(cp.code(t))
    }
}

fn commit(state: &mut ModelState, proposed: ChangePointState) {
    state.bh = project_levels(&state.bh, &state.cp, &proposed);
    state.cp = proposed;
}

/// One split-or-merge attempt followed by one shuffle attempt.
pub fn local_split_merge_shuffle<R: RngCore>(
    state: &mut ModelState,
    target: &LocalTarget,
    split_log_bias: f64,
    rng: &mut R,
    counters: &mut MoveCounters,
) {
    let hyper = target.hyper;
    match propose_jump(&state.cp, target.allowed, rng, |r| hyper.sample_config(r)) {
        Some(Jump::Split { t, code }) => {
            let ratio = target.split_log_ratio(&state.cp, t, code) + split_log_bias;
            let ok = accept(ratio, rng, &mut counters.nan_ratios);
            counters.local_split.record(ok);
            if ok {
                let mut proposed = state.cp.clone();
                proposed.set(t, code);
                commit(state, proposed);
            }
        }
        Some(Jump::Merge { t }) => {
            let ratio = target.merge_log_ratio(&state.cp, t);
            let ok = accept(ratio, rng, &mut counters.nan_ratios);
            counters.local_merge.record(ok);
            if ok {
                let mut proposed = state.cp.clone();
                proposed.set(t, 0);
                commit(state, proposed);
            }
        }
        None => {}
    }
    if let Some((from, to)) = propose_shuffle(&state.cp, target.allowed, rng) {
        let proposed = shuffled(&state.cp, from, to);
        let ratio = target.log_target(&proposed) - target.log_target(&state.cp);
        let ok = accept(ratio, rng, &mut counters.nan_ratios);
        counters.local_shuffle.record(ok);
        if ok && from != to {
            commit(state, proposed);
        }
    }
}

/// Redraw the configuration of one uniformly chosen change point from `ψ`;
/// the prior and proposal terms cancel.
pub fn local_update_z<R: RngCore>(
    state: &mut ModelState,
    target: &LocalTarget,
    rng: &mut R,
    counters: &mut MoveCounters,
) {
    let points = state.cp.change_points();
    if points.is_empty() {
        return;
    }
    let t = points[rng.random_range(0..points.len())];
    let code = target.hyper.sample_config(rng);
    let mut proposed = state.cp.clone();
    proposed.set(t, code);
    let ratio = target.stats.log_marginal(&proposed, target.hyper.sigma2_alpha)
        - target.stats.log_marginal(&state.cp, target.hyper.sigma2_alpha);
    let ok = accept(ratio, rng, &mut counters.nan_ratios);
    counters.local_z.record(ok);
    if ok && code != state.cp.code(t) {
        commit(state, proposed);
    }
}

/// Draw every level from its Gaussian full conditional.
pub fn gibbs_alpha<R: RngCore>(
    state: &mut ModelState,
    stats: &ResidualStats,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    for r in 0..state.bh.alpha_star.len() {
        let intervals = state.cp.risk_intervals(r);
        let levels = &mut state.bh.alpha_star[r];
        levels.clear();
        for (start, end) in intervals {
            let (mean, var) = stats
                .interval(r, start, end)
                .posterior(hyper.mu_alpha, hyper.sigma2_alpha);
            let normal = Normal::new(mean, var.sqrt())
                .map_err(|e| Error::Numerical(format!("level full conditional: {e}")))?;
            levels.push(normal.sample(rng));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augmentation::sample_augmented;
    use crate::data::{Dataset, Horizon, Observation};
    use crate::priors::RegressionState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_event_per_time(t_max: usize, m: usize) -> Dataset {
        let obs = (1..=t_max).map(|t| Observation::new(t, 1 + t % m, vec![])).collect();
        Dataset::new(obs, m, Horizon::Fixed(t_max)).unwrap()
    }

    fn flat_stats(ds: &Dataset) -> ResidualStats {
        let state = ModelState::initial(ds.m(), 0, ds.t_max(), -1.0);
        let aug = sample_augmented(ds, &state, 1, 0, false).unwrap();
        ResidualStats::new(ds, &aug, &RegressionState::empty(ds.m(), 0), -9.0, 0.0).unwrap()
    }

    #[test]
    fn split_from_empty_model_accepts_a_quarter() {
        let ds = one_event_per_time(5, 1);
        let allowed = crate::data::compute_allowed_set(&ds);
        assert_eq!(allowed.times(), &[2, 3, 4]);
        let hyper = Hyperparameters::defaults(1, 0, 5);
        let stats = flat_stats(&ds);
        let target = LocalTarget {
            stats: &stats,
            allowed: &allowed,
            hyper: &hyper,
        };
        let cp = ChangePointState::empty(5);
        for t in [2, 3, 4] {
            assert!((target.split_log_ratio(&cp, t, 1).exp() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn split_then_merge_restores_target() {
        let ds = one_event_per_time(8, 2);
        let allowed = crate::data::compute_allowed_set(&ds);
        let hyper = Hyperparameters::defaults(2, 0, 8);
        let state = ModelState::initial(2, 0, 8, -1.0);
        let aug = sample_augmented(&ds, &state, 4, 0, false).unwrap();
        let stats = ResidualStats::new(&ds, &aug, &state.reg, -9.0, 1.0).unwrap();
        let target = LocalTarget {
            stats: &stats,
            allowed: &allowed,
            hyper: &hyper,
        };
        let mut cp = ChangePointState::empty(8);
        cp.set(3, 0b10);
        let before = target.log_target(&cp);
        let forward = target.split_log_ratio(&cp, 6, 0b11);
        let mut split = cp.clone();
        split.set(6, 0b11);
        let backward = target.merge_log_ratio(&split, 6);
        assert!((forward + backward).abs() < 1e-10);
        split.set(6, 0);
        assert!((target.log_target(&split) - before).abs() < 1e-10);
    }

    #[test]
    fn z_update_is_noop_without_change_points() {
        let ds = one_event_per_time(5, 2);
        let allowed = crate::data::compute_allowed_set(&ds);
        let hyper = Hyperparameters::defaults(2, 0, 5);
        let stats = flat_stats(&ds);
        let target = LocalTarget {
            stats: &stats,
            allowed: &allowed,
            hyper: &hyper,
        };
        let mut state = ModelState::initial(2, 0, 5, -9.0);
        let before = state.clone();
        let mut counters = MoveCounters::default();
        local_update_z(&mut state, &target, &mut ChaCha8Rng::seed_from_u64(1), &mut counters);
        assert_eq!(state, before);
        assert_eq!(counters.local_z.proposed, 0);
    }

    #[test]
    fn gibbs_alpha_draws_prior_on_empty_data() {
        let ds = Dataset::new(vec![Observation::new(1, 1, vec![])], 1, Horizon::Fixed(3)).unwrap();
        let hyper = Hyperparameters::defaults(1, 0, 3);
        let mut state = ModelState::initial(1, 0, 3, -9.0);
        state.cp.set(3, 1);
        state.bh.alpha_star = vec![vec![-9.0, -9.0]];
        let aug = sample_augmented(&ds, &state, 1, 0, false).unwrap();
        let stats = ResidualStats::new(&ds, &aug, &state.reg, -9.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            gibbs_alpha(&mut state, &stats, &hyper, &mut rng).unwrap();
            let a = state.bh.alpha_star[0][1];
            sum += a;
            sq += a * a;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!((mean + 9.0).abs() < 0.05, "mean {mean}");
        assert!((var - 3.0).abs() < 0.15, "var {var}");
    }
}
