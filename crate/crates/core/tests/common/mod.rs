#![allow(dead_code)]

use mvbd::augmentation::{marginal_augmented_loglik, mixture, sample_augmented, AugmentedData, ResidualStats};
use mvbd::inference::Summary;
use mvbd::priors::{BaselineHazards, ChangePointState};
use mvbd::{Dataset, Horizon, Hyperparameters, ModelState, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const LN_2PI: f64 = 1.8378770664093453;

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + (x - mean) * (x - mean) / var)
}

/// Maximiser of a unimodal function on `[lo, hi]` by golden-section search.
fn argmax(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..200 {
        if ga < gb {
            lo = a;
            a = b;
            ga = gb;
            b = lo + phi * (hi - lo);
            gb = g(b);
        } else {
            hi = b;
            b = a;
            gb = ga;
            a = hi - phi * (hi - lo);
            ga = g(a);
        }
    }
    0.5 * (lo + hi)
}

/// Mode, peak value and half-width of the effective support of `exp(g)`.
struct Peak {
    mode: f64,
    gmax: f64,
    width: f64,
}

fn peak(g: &impl Fn(f64) -> f64) -> Peak {
    let mode = argmax(g, -500.0, 500.0);
    let gmax = g(mode);
    let h = 1e-3;
    let curvature = -(g(mode + h) - 2.0 * gmax + g(mode - h)) / (h * h);
    Peak {
        mode,
        gmax,
        width: 14.0 / curvature.max(1e-6).sqrt(),
    }
}

/// `∫ h(x) exp(g(x) - gmax) dx` by adaptive double-exponential quadrature,
/// split at the mode.
fn integrate_around(g: &impl Fn(f64) -> f64, h: impl Fn(f64) -> f64, pk: &Peak) -> f64 {
    let f = |x: f64| h(x) * (g(x) - pk.gmax).exp();
    let left = quadrature::integrate(f, pk.mode - pk.width, pk.mode, 1e-15);
    let right = quadrature::integrate(f, pk.mode, pk.mode + pk.width, 1e-15);
    left.integral + right.integral
}

/// `ln ∫ exp(g(x)) dx` for a smooth log-concave `g`.
pub fn log_integral(g: impl Fn(f64) -> f64) -> f64 {
    let pk = peak(&g);
    pk.gmax + integrate_around(&g, |_| 1.0, &pk).ln()
}

/// Mean and variance of the density proportional to `exp(g)`.
pub fn moments(g: impl Fn(f64) -> f64) -> (f64, f64) {
    let pk = peak(&g);
    let z = integrate_around(&g, |_| 1.0, &pk);
    let d1 = integrate_around(&g, |x| x - pk.mode, &pk) / z;
    let d2 = integrate_around(&g, |x| (x - pk.mode).powi(2), &pk) / z;
    (pk.mode + d1, d2 - d1 * d1)
}

/// Residuals `(d, s²)` of every augmented cell of risk `r` in periods `start..=end`.
pub fn interval_cells(
    ds: &Dataset,
    aug: &AugmentedData,
    beta: &[Vec<f64>],
    r: usize,
    start: usize,
    end: usize,
) -> Vec<(f64, f64)> {
    let table = mixture();
    let mut cells = Vec::new();
    for i in 0..ds.n() {
        let x = ds.covariates(i);
        let offset: f64 = beta[r].iter().zip(x).map(|(b, x)| b * x).sum();
        for l in start..=end.min(ds.periods(i)) {
            let k = aug.index(i, l, r);
            let c = aug.c[k] as usize;
            cells.push((aug.u[k] - table.means[c] - offset, table.variances[c]));
        }
    }
    cells
}

/// Periods where risk `r` has its own level, read straight off `z`.
pub fn intervals_from_z(cp: &ChangePointState, r: usize) -> Vec<(usize, usize)> {
    let t_max = cp.t_max();
    let mut starts = vec![1];
    starts.extend((2..=t_max).filter(|&t| cp.z(r, t)));
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, starts.get(k + 1).map_or(t_max, |next| next - 1)))
        .collect()
}

/// Log of the unnormalised level conditional `N(α | μ, σ²) Π N(d | α, s²)`.
pub fn level_log_density(cells: &[(f64, f64)], mu: f64, sigma2: f64) -> impl Fn(f64) -> f64 + '_ {
    move |a| ln_normal(a, mu, sigma2) + cells.iter().map(|&(d, s2)| ln_normal(d, a, s2)).sum::<f64>()
}

pub struct Instance {
    pub ds: Dataset,
    pub state: ModelState,
    pub hyper: Hyperparameters,
    pub aug: AugmentedData,
}

/// A small random dataset, model state and augmented draw.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=3usize);
    let p = rng.random_range(0..=2usize);
    let t_max = rng.random_range(3..=6usize);
    let n = rng.random_range(2..=6usize);
    let mut obs = Vec::with_capacity(n);
    for _ in 0..n {
        let time = rng.random_range(1..=t_max + 1);
        let status = if time > t_max { rng.random_range(1..=m) } else { rng.random_range(0..=m) };
        let x: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        obs.push(Observation::new(time, status, x));
    }
    // Make sure the horizon is reached so `Fixed(t_max)` is consistent.
    obs[0].time = t_max;
    obs[0].status = 1;
    let ds = Dataset::new(obs, m, Horizon::Fixed(t_max)).unwrap();

    let mut cp = ChangePointState::empty(t_max);
    for t in 2..=t_max {
        if rng.random_bool(0.4) {
            cp.set(t, rng.random_range(1..(1u32 << m)));
        }
    }
    let alpha_star = (0..m)
        .map(|r| (0..cp.n_levels(r)).map(|_| rng.random_range(-4.0..0.0)).collect())
        .collect();
    let mut state = ModelState::initial(m, p, t_max, 0.0);
    state.cp = cp;
    state.bh = BaselineHazards { alpha_star };
    for r in 0..m {
        for j in 0..p {
            if rng.random_bool(0.5) {
                state.reg.inclusion[r][j] = true;
                state.reg.beta[r][j] = rng.random_range(-1.0..1.0);
            }
        }
    }
    let mut hyper = Hyperparameters::defaults(m, p, t_max);
    hyper.mu_alpha = rng.random_range(-6.0..0.0);
    hyper.sigma2_alpha = rng.random_range(0.5..5.0);
    let aug = sample_augmented(&ds, &state, seed, rng.random_range(0..1000), false).unwrap();
    Instance { ds, state, hyper, aug }
}

/// Largest absolute gap between the closed-form marginal and quadrature.
pub fn marginal_error(inst: &Instance) -> f64 {
    let closed = marginal_augmented_loglik(&inst.ds, &inst.aug, &inst.state.cp, &inst.state.reg, &inst.hyper).unwrap();
    let mut oracle = 0.0;
    for r in 0..inst.ds.m() {
        for (start, end) in intervals_from_z(&inst.state.cp, r) {
            let cells = interval_cells(&inst.ds, &inst.aug, &inst.state.reg.beta, r, start, end);
            if !cells.is_empty() {
                oracle += log_integral(level_log_density(&cells, inst.hyper.mu_alpha, inst.hyper.sigma2_alpha));
            }
        }
    }
    (closed - oracle).abs()
}

/// Largest relative gap between the level full conditional used by the
/// sampler and the normalised quadrature product, over a grid of points.
pub fn conditional_density_error(inst: &Instance) -> f64 {
    let (mu, sigma2) = (inst.hyper.mu_alpha, inst.hyper.sigma2_alpha);
    let stats = ResidualStats::new(&inst.ds, &inst.aug, &inst.state.reg, mu, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for r in 0..inst.ds.m() {
        for (start, end) in intervals_from_z(&inst.state.cp, r) {
            let cells = interval_cells(&inst.ds, &inst.aug, &inst.state.reg.beta, r, start, end);
            let g = level_log_density(&cells, mu, sigma2);
            let log_z = log_integral(&g);
            let (mean, var) = stats.interval(r, start, end).posterior(mu, sigma2);
            for k in -3..=3 {
                let a = mean + k as f64 * var.sqrt();
                let exact = (g(a) - log_z).exp();
                let used = ln_normal(a, mean, var).exp();
                worst = worst.max((used - exact).abs() / exact);
            }
        }
    }
    worst
}

/// Fraction of `(r, t)` cells whose 95% interval contains the true `α_rt`.
pub fn alpha_coverage(summary: &Summary, truth: &[Vec<f64>]) -> f64 {
    let covered = summary
        .alpha
        .iter()
        .filter(|a| {
            let v = truth[a.risk - 1][a.t - 1];
            a.interval.lower <= v && v <= a.interval.upper
        })
        .count();
    covered as f64 / summary.alpha.len() as f64
}
