mod common;

use common::{
    conditional_density_error, interval_cells, intervals_from_z, level_log_density, log_integral,
    marginal_error, moments, random_instance,
};
use mvbd::augmentation::ResidualStats;
use mvbd::likelihood::{hazards, log_likelihood, tvgeom_pmf};
use mvbd::mcmc::gibbs_alpha;
use mvbd::{Dataset, Horizon, ModelState, Observation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_marginal_matches_quadrature() {
    for seed in 0..25 {
        let err = marginal_error(&random_instance(seed));
        assert!(err < 1e-8, "instance {seed}: |closed form - quadrature| = {err:e}");
    }
}

#[test]
fn level_conditional_matches_normalised_product() {
    for seed in 100..125 {
        let err = conditional_density_error(&random_instance(seed));
        assert!(err < 1e-8, "instance {seed}: relative error {err:e}");
    }
}

#[test]
fn quadrature_oracle_reproduces_a_gaussian_integral() {
    // ∫ N(x | 1, 2) dx = 1
    let v = log_integral(|x| -0.5 * ((2.0 * std::f64::consts::PI * 2.0).ln() + (x - 1.0).powi(2) / 2.0));
    assert!(v.abs() < 1e-12, "{v}");
}

#[test]
fn gibbs_alpha_draws_follow_the_quadrature_moments() {
    let inst = random_instance(7);
    let (mu, sigma2) = (inst.hyper.mu_alpha, inst.hyper.sigma2_alpha);
    let stats = ResidualStats::new(&inst.ds, &inst.aug, &inst.state.reg, mu, 1.0).unwrap();
    let r = 0;
    let (start, end) = intervals_from_z(&inst.state.cp, r)[0];
    let cells = interval_cells(&inst.ds, &inst.aug, &inst.state.reg.beta, r, start, end);
    let g = level_log_density(&cells, mu, sigma2);
    let (m1, var) = moments(&g);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 20_000;
    let mut state = inst.state.clone();
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        gibbs_alpha(&mut state, &stats, &inst.hyper, &mut rng).unwrap();
        draws.push(state.bh.alpha_star[r][0]);
    }
    let mean = draws.iter().sum::<f64>() / n as f64;
    let sample_var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - m1).abs() < 5.0 * (var / n as f64).sqrt(), "mean {mean} vs {m1}");
    assert!((sample_var / var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt(), "var {sample_var} vs {var}");
}

fn single_risk_dataset(times: &[usize], t_max: usize) -> Dataset {
    let obs = times.iter().map(|&t| Observation::new(t, 1, vec![])).collect();
    Dataset::new(obs, 1, Horizon::Fixed(t_max)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tvgeom_sums_to_one(phi in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let pmf = tvgeom_pmf(&phi).unwrap();
        prop_assert_eq!(pmf.len(), phi.len() + 1);
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_risk_loglik_is_the_tvgeom_log_pmf(
        alpha in prop::collection::vec(-5.0f64..2.0, 2..8),
        picks in prop::collection::vec(0usize..100, 1..12),
    ) {
        let t_max = alpha.len();
        let times: Vec<usize> = picks.iter().map(|k| 1 + k % (t_max + 1)).collect();
        let ds = single_risk_dataset(&times, t_max);
        let mut state = ModelState::initial(1, 0, t_max, 0.0);
        for t in 2..=t_max {
            state.cp.set(t, 1);
        }
        state.bh.alpha_star = vec![alpha.clone()];
        let phi: Vec<f64> = alpha.iter().map(|a| hazards(&[*a]).unwrap().0[0]).collect();
        let pmf = tvgeom_pmf(&phi).unwrap();
        let expected: f64 = times.iter().map(|&t| pmf[t - 1].ln()).sum();
        let got = log_likelihood(&ds, &state).unwrap();
        prop_assert!((got - expected).abs() < 1e-10, "{} vs {}", got, expected);
    }
}
