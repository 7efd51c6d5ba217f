//! Spike-and-slab update of the regression coefficients on the augmented
//! model, with the coefficients integrated out for the inclusion moves.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::moves::{accept, MoveCounters};
use super::ModelState;
use crate::augmentation::{mixture, AugmentedData};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::priors::Hyperparameters;

/// Weighted normal equations of one risk: `Σ w x xᵀ` and `Σ w x y` with
/// `y = u - ξ_c - α_rl` and `w = temperature / s²_c`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    pub xtwx: DMatrix<f64>,
    pub xtwy: DVector<f64>,
}

impl NormalEquations {
    pub fn build(
        ds: &Dataset,
        aug: &AugmentedData,
        alpha: &[Vec<f64>],
        r: usize,
        temperature: f64,
    ) -> Self {
        let p = ds.p();
        let table = mixture();
        let mut xtwx = DMatrix::zeros(p, p);
        let mut xtwy = DVector::zeros(p);
        for i in 0..ds.n() {
            let x = ds.covariates(i);
            let (mut wsum, mut wy) = (0.0, 0.0);
            for l in 1..=ds.periods(i) {
                let k = aug.index(i, l, r);
                let c = aug.c[k] as usize;
                let w = temperature * table.precision[c];
                wsum += w;
                wy += w * (aug.u[k] - table.means[c] - alpha[r][l - 1]);
            }
            for a in 0..p {
                xtwy[a] += x[a] * wy;
                for b in 0..p {
                    xtwx[(a, b)] += x[a] * x[b] * wsum;
                }
            }
        }
        Self { xtwx, xtwy }
    }
}

/// Gaussian posterior of the included coefficients.
#[derive(Debug, Clone)]
pub struct SubsetPosterior {
    pub index: Vec<usize>,
    pub mean: DVector<f64>,
    /// Lower Cholesky factor of the posterior precision `Σ_B⁻¹`.
    pub precision_chol: DMatrix<f64>,
    /// `½ ln|Σ_B| - b ln σ_β + ½ μ_Bᵀ Σ_B⁻¹ μ_B`, the log marginal likelihood
    /// of the subset up to terms that do not depend on it.
    pub log_evidence: f64,
}

impl SubsetPosterior {
    pub fn covariance(&self) -> DMatrix<f64> {
        let precision = &self.precision_chol * self.precision_chol.transpose();
        nalgebra::Cholesky::new(precision)
            .expect("precision is positive definite")
            .inverse()
    }
}

pub fn subset_posterior(
    eq: &NormalEquations,
    index: &[usize],
    sigma2_beta: f64,
) -> Result<SubsetPosterior> {
    let b = index.len();
    let mut precision = DMatrix::zeros(b, b);
    let mut rhs = DVector::zeros(b);
    for (a, &ja) in index.iter().enumerate() {
        rhs[a] = eq.xtwy[ja];
        for (c, &jc) in index.iter().enumerate() {
            precision[(a, c)] = eq.xtwx[(ja, jc)];
        }
        precision[(a, a)] += 1.0 / sigma2_beta;
    }
    let chol = nalgebra::Cholesky::new(precision)
        .ok_or_else(|| Error::Numerical("coefficient posterior precision is not positive definite".into()))?;
    let mean = chol.solve(&rhs);
    let l = chol.l();
    let log_det_precision: f64 = 2.0 * (0..b).map(|a| l[(a, a)].ln()).sum::<f64>();
    let log_evidence = -0.5 * log_det_precision - 0.5 * b as f64 * sigma2_beta.ln() + 0.5 * rhs.dot(&mean);
    Ok(SubsetPosterior {
        index: index.to_vec(),
        mean,
        precision_chol: l,
        log_evidence,
    })
}

fn included_index(inclusion: &[bool]) -> Vec<usize> {
    inclusion.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect()
}

/// `π_β` refresh, inclusion toggles and a coefficient draw for every risk.
pub fn update_beta<R: RngCore>(
    state: &mut ModelState,
    ds: &Dataset,
    aug: &AugmentedData,
    hyper: &Hyperparameters,
    temperature: f64,
    rng: &mut R,
    counters: &mut MoveCounters,
) -> Result<()> {
    let p = ds.p();
    let m = ds.m();
    let included: usize = (0..m).map(|r| state.reg.included(r)).sum();
    let excluded = m * p - included;
    let beta = Beta::new(1.0 + included as f64, 1.0 + excluded as f64)
        .map_err(|e| Error::Numerical(format!("pi_beta full conditional: {e}")))?;
    state.reg.pi_beta = beta.sample(rng);
    if p == 0 {
        return Ok(());
    }
    let pi = state.reg.pi_beta;
    let (ln_in, ln_out) = (pi.ln(), (1.0 - pi).ln());
    let alpha = state.alpha();
    for r in 0..m {
        let eq = NormalEquations::build(ds, aug, &alpha, r, temperature);
        let mut current = subset_posterior(&eq, &included_index(&state.reg.inclusion[r]), hyper.sigma2_beta)?;
        for j in 0..p {
            let mut flipped = state.reg.inclusion[r].clone();
            flipped[j] = !flipped[j];
            let proposal = subset_posterior(&eq, &included_index(&flipped), hyper.sigma2_beta)?;
            let prior_term = if flipped[j] { ln_in - ln_out } else { ln_out - ln_in };
            let ratio = proposal.log_evidence - current.log_evidence + prior_term;
            let ok = accept(ratio, rng, &mut counters.nan_ratios);
            counters.inclusion.record(ok);
            if ok {
                state.reg.inclusion[r] = flipped;
                current = proposal;
            }
        }
        // β_B = μ_B + L⁻ᵀ ε with Σ_B⁻¹ = L Lᵀ.
        let b = current.index.len();
        let eps = DVector::from_iterator(b, (0..b).map(|_| StandardNormal.sample(rng)));
        let shift = current
            .precision_chol
            .transpose()
            .solve_upper_triangular(&eps)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let draw = &current.mean + shift;
        state.reg.beta[r].iter_mut().for_each(|v| *v = 0.0);
        for (a, &j) in current.index.iter().enumerate() {
            state.reg.beta[r][j] = draw[a];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Horizon, Observation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_posterior() {
        let eq = NormalEquations {
            xtwx: DMatrix::from_element(1, 1, 4.0),
            xtwy: DVector::from_element(1, 2.0),
        };
        let post = subset_posterior(&eq, &[0], 1.0).unwrap();
        assert!((post.mean[0] - 0.4).abs() < 1e-14);
        assert!((post.covariance()[(0, 0)] - 0.2).abs() < 1e-14);
        let empty = subset_posterior(&eq, &[], 1.0).unwrap();
        assert_eq!(empty.log_evidence, 0.0);
    }

    #[test]
    fn evidence_matches_closed_form_scalar() {
        // y ~ N(xβ, 1/w), β ~ N(0, σ²): evidence ratio vs β = 0 is
        // sqrt(Σ/σ²) exp(½ μ²/Σ).
        let eq = NormalEquations {
            xtwx: DMatrix::from_element(1, 1, 2.5),
            xtwy: DVector::from_element(1, -1.3),
        };
        let sigma2 = 0.7;
        let post = subset_posterior(&eq, &[0], sigma2).unwrap();
        let var = 1.0 / (1.0 / sigma2 + 2.5);
        let mean = var * -1.3;
        let expected = 0.5 * (var / sigma2).ln() + 0.5 * mean * mean / var;
        assert!((post.log_evidence - expected).abs() < 1e-12);
    }

    #[test]
    fn pi_beta_only_without_covariates() {
        let ds = Dataset::new(vec![Observation::new(2, 1, vec![])], 1, Horizon::Fixed(2)).unwrap();
        let mut state = ModelState::initial(1, 0, 2, -1.0);
        let aug = crate::augmentation::sample_augmented(&ds, &state, 1, 0, false).unwrap();
        let hyper = Hyperparameters::defaults(1, 0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counters = MoveCounters::default();
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            update_beta(&mut state, &ds, &aug, &hyper, 1.0, &mut rng, &mut counters).unwrap();
            sum += state.reg.pi_beta;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
        assert_eq!(counters.inclusion.proposed, 0);
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn inclusion_frequency_matches_quadrature() {
        let obs = vec![
            Observation::new(2, 1, vec![0.8]),
            Observation::new(3, 0, vec![-0.5]),
            Observation::new(1, 1, vec![1.1]),
            Observation::new(3, 1, vec![0.2]),
        ];
        let ds = Dataset::new(obs, 1, Horizon::Fixed(3)).unwrap();
        let hyper = Hyperparameters::defaults(1, 1, 3);
        let mut state = ModelState::initial(1, 1, 3, -1.0);
        let aug = crate::augmentation::sample_augmented(&ds, &state, 21, 0, false).unwrap();

        // Quadrature oracle: Gaussian cells y_k ~ N(x_k β, s²_k); with π_β
        // uniform the prior inclusion odds are one.
        let table = mixture();
        let mut cells = Vec::new();
        for i in 0..ds.n() {
            for l in 1..=ds.periods(i) {
                let k = aug.index(i, l, 0);
                let c = aug.c[k] as usize;
                cells.push((ds.covariates(i)[0], aug.u[k] - table.means[c] + 1.0, table.variances[c]));
            }
        }
        let loglik = |beta: f64| -> f64 {
            cells
                .iter()
                .map(|&(x, y, s2)| crate::priors::log_normal_pdf(y, x * beta, s2))
                .sum()
        };
        let base = loglik(0.0);
        let integrand = |beta: f64| {
            (loglik(beta) - base + crate::priors::log_normal_pdf(beta, 0.0, hyper.sigma2_beta)).exp()
        };
        let bf = simpson(&integrand, -12.0, 12.0, 20_000);
        let pip = bf / (1.0 + bf);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counters = MoveCounters::default();
        let n = 60_000;
        let mut hits = 0usize;
        for _ in 0..n {
            update_beta(&mut state, &ds, &aug, &hyper, 1.0, &mut rng, &mut counters).unwrap();
            hits += usize::from(state.reg.inclusion[0][0]);
        }
        let freq = hits as f64 / n as f64;
        assert!((freq - pip).abs() < 0.02, "frequency {freq} vs quadrature {pip}");
    }
}
