//! Moves on the exact likelihood with the levels instantiated.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use super::moves::{
    accept, merge_log_proposal_ratio, propose_jump, propose_shuffle, shuffled,
    split_log_proposal_ratio, Jump, MoveCounters,
};
use super::ModelState;
use crate::data::{AllowedSet, Dataset};
use crate::likelihood::log_likelihood_with;
use crate::priors::{log_normal_pdf, log_prior_changepoints, BaselineHazards, Hyperparameters};

pub struct GlobalTarget<'a> {
    pub ds: &'a Dataset,
    pub allowed: &'a AllowedSet,
    pub hyper: &'a Hyperparameters,
    pub temperature: f64,
    pub rw_sd: f64,
}

impl GlobalTarget<'_> {
    /// Tempered log-likelihood; zero temperature skips the evaluation.
    pub fn tempered_loglik(&self, state: &ModelState) -> f64 {
        if self.temperature == 0.0 {
            0.0
        } else {
            self.temperature * log_likelihood_with(self.ds, &state.alpha(), &state.reg.beta)
        }
    }

    fn level_prior(&self, a: f64) -> f64 {
        log_normal_pdf(a, self.hyper.mu_alpha, self.hyper.sigma2_alpha)
    }

    fn walk_density(&self, a: f64, from: f64) -> f64 {
        log_normal_pdf(a, from, self.rw_sd * self.rw_sd)
    }
}

/// A proposed state with the change of log target excluding the likelihood
/// and the log proposal ratio, already summed.
struct Proposal {
    state: ModelState,
    log_ratio_without_lik: f64,
}

/// Turn on the breaks of `risks` (bit set) at `t`, drawing each new right
/// level from a random walk around the left one. Returns the new levels and
/// `Σ [ln N(a' | μ, σ²) - ln N(a' | a_L, rw²)]`.
fn open_breaks<R: RngCore>(
    target: &GlobalTarget,
    state: &ModelState,
    t: usize,
    risks: u32,
    rng: &mut R,
) -> (BaselineHazards, f64) {
    let mut bh = state.bh.clone();
    let mut log_term = 0.0;
    for r in 0..bh.alpha_star.len() {
        if (risks >> r) & 1 == 1 {
            let left = state.bh.level_at(&state.cp, r, t);
            let z: f64 = StandardNormal.sample(rng);
            let new = left + target.rw_sd * z;
            bh.insert_break(&state.cp, r, t, new);
            log_term += target.level_prior(new) - target.walk_density(new, left);
        }
    }
    (bh, log_term)
}

/// Turn off the breaks of `risks` at `t`. Returns the new levels and
/// `Σ [-ln N(a' | μ, σ²) + ln N(a' | a_L, rw²)]` over the removed levels.
fn close_breaks(
    target: &GlobalTarget,
    state: &ModelState,
    t: usize,
    risks: u32,
) -> (BaselineHazards, f64) {
    let mut bh = state.bh.clone();
    let mut log_term = 0.0;
    for r in 0..bh.alpha_star.len() {
        if (risks >> r) & 1 == 1 {
            let (removed, left) = bh.remove_break(&state.cp, r, t);
            log_term += -target.level_prior(removed) + target.walk_density(removed, left);
        }
    }
    (bh, log_term)
}

fn split_proposal<R: RngCore>(
    target: &GlobalTarget,
    state: &ModelState,
    t: usize,
    code: u32,
    rng: &mut R,
) -> Proposal {
    let (bh, level_term) = open_breaks(target, state, t, code, rng);
    let mut cp = state.cp.clone();
    cp.set(t, code);
    let log_ratio = log_prior_changepoints(&cp, target.hyper, target.allowed)
        - log_prior_changepoints(&state.cp, target.hyper, target.allowed)
        + level_term
        + split_log_proposal_ratio(state.cp.k(), target.allowed.len())
        - target.hyper.ln_psi(code);
    Proposal {
        state: ModelState {
            cp,
            bh,
            reg: state.reg.clone(),
        },
        log_ratio_without_lik: log_ratio,
    }
}

fn merge_proposal(target: &GlobalTarget, state: &ModelState, t: usize) -> Proposal {
    let code = state.cp.code(t);
    let (bh, level_term) = close_breaks(target, state, t, code);
    let mut cp = state.cp.clone();
    cp.set(t, 0);
    let log_ratio = log_prior_changepoints(&cp, target.hyper, target.allowed)
        - log_prior_changepoints(&state.cp, target.hyper, target.allowed)
        + level_term
        + merge_log_proposal_ratio(state.cp.k(), target.allowed.len())
        + target.hyper.ln_psi(code);
    Proposal {
        state: ModelState {
            cp,
            bh,
            reg: state.reg.clone(),
        },
        log_ratio_without_lik: log_ratio,
    }
}

fn settle<R: RngCore>(
    target: &GlobalTarget,
    state: &mut ModelState,
    current_ll: &mut f64,
    proposal: Proposal,
    extra: f64,
    rng: &mut R,
    nan_ratios: &mut u64,
) -> bool {
    let ll = target.tempered_loglik(&proposal.state);
    let ratio = proposal.log_ratio_without_lik + ll - *current_ll + extra;
    let ok = accept(ratio, rng, nan_ratios);
    if ok {
        *state = proposal.state;
        *current_ll = ll;
    }
    ok
}

/// One split-or-merge attempt followed by one shuffle attempt.
/// `current_ll` caches the tempered log-likelihood of `state`.
pub fn global_split_merge_shuffle<R: RngCore>(
    state: &mut ModelState,
    target: &GlobalTarget,
    current_ll: &mut f64,
    split_log_bias: f64,
    rng: &mut R,
    counters: &mut MoveCounters,
) {
    let hyper = target.hyper;
    match propose_jump(&state.cp, target.allowed, rng, |r| hyper.sample_config(r)) {
        Some(Jump::Split { t, code }) => {
            let proposal = split_proposal(target, state, t, code, rng);
            let ok = settle(target, state, current_ll, proposal, split_log_bias, rng, &mut counters.nan_ratios);
            counters.global_split.record(ok);
        }
        Some(Jump::Merge { t }) => {
            let proposal = merge_proposal(target, state, t);
            let ok = settle(target, state, current_ll, proposal, 0.0, rng, &mut counters.nan_ratios);
            counters.global_merge.record(ok);
        }
        None => {}
    }
    if let Some((from, to)) = propose_shuffle(&state.cp, target.allowed, rng) {
        let proposal = Proposal {
            state: ModelState {
                cp: shuffled(&state.cp, from, to),
                bh: state.bh.clone(),
                reg: state.reg.clone(),
            },
            log_ratio_without_lik: 0.0,
        };
        let ok = if from == to {
            accept(0.0, rng, &mut counters.nan_ratios)
        } else {
            settle(target, state, current_ll, proposal, 0.0, rng, &mut counters.nan_ratios)
        };
        counters.global_shuffle.record(ok);
    }
}

/// Redraw the configuration at one uniformly chosen change point; newly
/// active risks get random-walk levels, deactivated ones drop theirs.
pub fn global_update_z<R: RngCore>(
    state: &mut ModelState,
    target: &GlobalTarget,
    current_ll: &mut f64,
    rng: &mut R,
    counters: &mut MoveCounters,
) {
    let points = state.cp.change_points();
    if points.is_empty() {
        return;
    }
    let t = points[rng.random_range(0..points.len())];
    let old = state.cp.code(t);
    let new = target.hyper.sample_config(rng);
    if new == old {
        let ok = accept(0.0, rng, &mut counters.nan_ratios);
        counters.global_z.record(ok);
        return;
    }
    let (opened, open_term) = open_breaks(target, state, t, new & !old, rng);
    let intermediate = ModelState {
        cp: state.cp.clone(),
        bh: opened,
        reg: state.reg.clone(),
    };
    // Breaks being closed are unaffected by the ones just opened, so their
    // indices can be computed against a state holding both.
    let mut both = intermediate.cp.clone();
    both.set(t, old | new);
    let staged = ModelState {
        cp: both,
        bh: intermediate.bh,
        reg: state.reg.clone(),
    };
    let (bh, close_term) = close_breaks(target, &staged, t, old & !new);
    let mut cp = state.cp.clone();
    cp.set(t, new);
    let proposal = Proposal {
        state: ModelState {
            cp,
            bh,
            reg: state.reg.clone(),
        },
        log_ratio_without_lik: open_term + close_term,
    };
    let ok = settle(target, state, current_ll, proposal, 0.0, rng, &mut counters.nan_ratios);
    counters.global_z.record(ok);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{compute_allowed_set, Horizon, Observation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Dataset, AllowedSet, Hyperparameters) {
        let obs = (1..=8).map(|t| Observation::new(t, 1 + t % 2, vec![])).collect();
        let ds = Dataset::new(obs, 2, Horizon::Fixed(8)).unwrap();
        let allowed = compute_allowed_set(&ds);
        let hyper = Hyperparameters::defaults(2, 0, 8);
        (ds, allowed, hyper)
    }

    #[test]
    fn split_and_merge_ratios_are_reciprocal() {
        let (ds, allowed, hyper) = setup();
        for temperature in [0.0, 1.0] {
            let target = GlobalTarget {
                ds: &ds,
                allowed: &allowed,
                hyper: &hyper,
                temperature,
                rw_sd: 1.0,
            };
            let mut state = ModelState::initial(2, 0, 8, -2.0);
            state.cp.set(3, 0b01);
            state.bh.alpha_star = vec![vec![-2.0, -1.5], vec![-2.5]];
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let split = split_proposal(&target, &state, 6, 0b11, &mut rng);
            let forward = split.log_ratio_without_lik + target.tempered_loglik(&split.state)
                - target.tempered_loglik(&state);
            let merge = merge_proposal(&target, &split.state, 6);
            let backward = merge.log_ratio_without_lik + target.tempered_loglik(&merge.state)
                - target.tempered_loglik(&split.state);
            assert!((forward + backward).abs() < 1e-10);
            assert_eq!(merge.state, state);
        }
    }

    #[test]
    fn z_update_keeps_structure() {
        let (ds, allowed, hyper) = setup();
        let target = GlobalTarget {
            ds: &ds,
            allowed: &allowed,
            hyper: &hyper,
            temperature: 1.0,
            rw_sd: 1.0,
        };
        let mut state = ModelState::initial(2, 0, 8, -2.0);
        state.cp.set(3, 0b01);
        state.cp.set(5, 0b10);
        state.bh.alpha_star = vec![vec![-2.0, -1.5], vec![-2.5, -1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counters = MoveCounters::default();
        let mut ll = target.tempered_loglik(&state);
        for _ in 0..500 {
            global_update_z(&mut state, &target, &mut ll, &mut rng, &mut counters);
            state.validate(&allowed, &hyper).unwrap();
            assert!((ll - target.tempered_loglik(&state)).abs() < 1e-9);
        }
        assert!(counters.global_z.accepted > 0);
    }

    #[test]
    fn z_update_noop_without_change_points() {
        let (ds, allowed, hyper) = setup();
        let target = GlobalTarget {
            ds: &ds,
            allowed: &allowed,
            hyper: &hyper,
            temperature: 1.0,
            rw_sd: 1.0,
        };
        let mut state = ModelState::initial(2, 0, 8, -2.0);
        let before = state.clone();
        let mut ll = target.tempered_loglik(&state);
        let mut counters = MoveCounters::default();
        global_update_z(&mut state, &target, &mut ll, &mut ChaCha8Rng::seed_from_u64(1), &mut counters);
        assert_eq!(state, before);
    }
}
