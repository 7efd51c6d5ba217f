//! Synthetic data from the model, with the shipped simulation presets.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Horizon, Observation};
use crate::error::{Error, Result};
use crate::rng::{derive_key, tag, CounterRng};

/// Baseline levels in force from `start` until the next segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSegment {
    pub start: usize,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateSpec {
    None,
    StandardNormal,
    /// One row per individual.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// Generation horizon: individuals without an event by `t_max` are
    /// recorded at `t_max + 1`.
    pub t_max: usize,
    /// Horizon of the written dataset; `None` uses the largest observed time.
    pub fit_t_max: Option<usize>,
    pub segments: Vec<AlphaSegment>,
    pub beta: Vec<Vec<f64>>,
    pub covariates: CovariateSpec,
    pub censor_fraction: f64,
    pub seed: u64,
}

pub const PRESETS: &[&str] = &[
    "appendix-b",
    "sim3",
    "sim3-censor10",
    "sim3-censor50",
    "sim3-censor20",
    "sim3-censor70",
];

impl ScenarioSpec {
    /// Null scenario: `n = 100`, three risks with constant levels
    /// `(-2, -3, -4)`, no covariates, no censoring; fitted with the largest
    /// observed time as horizon.
    pub fn appendix_b(seed: u64) -> Self {
        Self {
            name: "appendix-b".into(),
            n: 100,
            m: 3,
            p: 0,
            t_max: 200,
            fit_t_max: None,
            segments: vec![AlphaSegment {
                start: 1,
                alpha: vec![-2.0, -3.0, -4.0],
            }],
            beta: vec![vec![]; 3],
            covariates: CovariateSpec::None,
            censor_fraction: 0.0,
            seed,
        }
    }

    /// Two change points: all risks jump at `t = 6`, risks 1 and 2 at `t = 13`.
    pub fn sim3(censor_fraction: f64, seed: u64) -> Self {
        Self {
            name: "sim3".into(),
            n: 300,
            m: 3,
            p: 0,
            t_max: 20,
            fit_t_max: Some(20),
            segments: vec![
                AlphaSegment {
                    start: 1,
                    alpha: vec![-9.0, -9.0, -9.0],
                },
                AlphaSegment {
                    start: 6,
                    alpha: vec![-4.0, -3.0, -3.0],
                },
                AlphaSegment {
                    start: 13,
                    alpha: vec![-2.0, -2.0, -3.0],
                },
            ],
            beta: vec![vec![]; 3],
            covariates: CovariateSpec::None,
            censor_fraction,
            seed,
        }
    }

    /// Look up a preset by name. `censor` overrides the preset's fraction.
    pub fn preset(name: &str, seed: u64, censor: Option<f64>) -> Result<Self> {
        let mut spec = match name {
            "appendix-b" => Self::appendix_b(seed),
            "sim3" => Self::sim3(0.0, seed),
            "sim3-censor10" => Self::sim3(0.1, seed),
            "sim3-censor50" => Self::sim3(0.5, seed),
            "sim3-censor20" => Self::sim3(0.2, seed),
            "sim3-censor70" => Self::sim3(0.7, seed),
            other => {
                return Err(Error::Scenario(format!(
                    "unknown preset {other:?} (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        if let Some(c) = censor {
            spec.censor_fraction = c;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if self.n == 0 || self.m == 0 || self.t_max == 0 {
            return bad("n, m and t_max must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.censor_fraction) {
            return bad(format!("censor fraction {} outside [0, 1]", self.censor_fraction));
        }
        if self.segments.first().map(|s| s.start) != Some(1) {
            return bad("the first alpha segment must start at t = 1".into());
        }
        for w in self.segments.windows(2) {
            if w[1].start <= w[0].start || w[1].start > self.t_max {
                return bad("alpha segments must have increasing starts within 1..=t_max".into());
            }
        }
        if self.segments.iter().any(|s| s.alpha.len() != self.m) {
            return bad("every alpha segment needs one level per risk".into());
        }
        if self.beta.len() != self.m || self.beta.iter().any(|b| b.len() != self.p) {
            return bad(format!("beta must be {} x {}", self.m, self.p));
        }
        match &self.covariates {
            CovariateSpec::None if self.p != 0 => bad("covariate generator `none` needs p = 0".into()),
            CovariateSpec::Fixed(rows) if rows.len() != self.n || rows.iter().any(|r| r.len() != self.p) => {
                bad(format!("fixed covariates must be {} x {}", self.n, self.p))
            }
            _ => Ok(()),
        }
    }

    /// Expanded `α_rt`, `m × t_max`.
    pub fn alpha_matrix(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.t_max]; self.m];
        for t in 1..=self.t_max {
            let seg = self.segments.iter().rev().find(|s| s.start <= t).expect("validated");
            for r in 0..self.m {
                out[r][t - 1] = seg.alpha[r];
            }
        }
        out
    }

    /// True change points with the 1-based risks that jump there.
    pub fn change_points(&self) -> Vec<TrueChangePoint> {
        self.segments
            .windows(2)
            .filter_map(|w| {
                let risks: Vec<usize> = (0..self.m)
                    .filter(|&r| w[0].alpha[r] != w[1].alpha[r])
                    .map(|r| r + 1)
                    .collect();
                (!risks.is_empty()).then_some(TrueChangePoint {
                    t: w[1].start,
                    risks,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueChangePoint {
    pub t: usize,
    pub risks: Vec<usize>,
}

/// Sidecar describing the generating truth of a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub scenario: ScenarioSpec,
    pub change_points: Vec<TrueChangePoint>,
    /// `α_rt` over the generation horizon.
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    /// 1-based rows rewritten as censored.
    pub censored_rows: Vec<usize>,
    /// Horizon of the written dataset.
    pub dataset_t_max: usize,
}

/// Per-period outcome probabilities `(λ_1, …, λ_m)`, robust to infinite
/// linear predictors.
fn outcome_probabilities(eta: &[f64]) -> Vec<f64> {
    let n_inf = eta.iter().filter(|e| **e == f64::INFINITY).count();
    if n_inf > 0 {
        return eta
            .iter()
            .map(|e| if *e == f64::INFINITY { 1.0 / n_inf as f64 } else { 0.0 })
            .collect();
    }
    let lse = crate::likelihood::log_one_plus_sum_exp(eta);
    eta.iter().map(|e| (e - lse).exp()).collect()
}

/// Draw one record by walking the periods `1..=t_max`.
pub fn sample_individual<R: Rng + ?Sized>(
    alpha: &[Vec<f64>],
    beta: &[Vec<f64>],
    x: &[f64],
    t_max: usize,
    rng: &mut R,
) -> Observation {
    let offsets: Vec<f64> = beta
        .iter()
        .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
        .collect();
    let eta_at = |t: usize| -> Vec<f64> { (0..alpha.len()).map(|r| alpha[r][t - 1] + offsets[r]).collect() };
    for t in 1..=t_max {
        let lambda = outcome_probabilities(&eta_at(t));
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (r, l) in lambda.iter().enumerate() {
            acc += l;
            if u < acc {
                return Observation::new(t, r + 1, x.to_vec());
            }
        }
    }
    // No event by the horizon: cause drawn from the last period's hazards.
    let lambda = outcome_probabilities(&eta_at(t_max));
    let total: f64 = lambda.iter().sum();
    let cause = if total > 0.0 {
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        lambda
            .iter()
            .position(|l| {
                acc += l;
                u < acc
            })
            .unwrap_or(lambda.len() - 1)
    } else {
        rng.random_range(0..alpha.len())
    };
    Observation::new(t_max + 1, cause + 1, x.to_vec())
}

fn covariate_row(spec: &ScenarioSpec, i: usize, rng: &mut impl RngCore) -> Vec<f64> {
    match &spec.covariates {
        CovariateSpec::None => Vec::new(),
        CovariateSpec::StandardNormal => (0..spec.p).map(|_| StandardNormal.sample(rng)).collect(),
        CovariateSpec::Fixed(rows) => rows[i].clone(),
    }
}

/// Simulate a scenario, apply random censoring and return the dataset with
/// its truth sidecar.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<(Dataset, Truth)> {
    spec.validate()?;
    let alpha = spec.alpha_matrix();
    let mut observations: Vec<Observation> = (0..spec.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = CounterRng::new(&[spec.seed, tag::SIMULATE, i as u64]);
            let x = covariate_row(spec, i, &mut rng);
            sample_individual(&alpha, &spec.beta, &x, spec.t_max, &mut rng)
        })
        .collect();

    let mut censored_rows = Vec::new();
    let n_censor = (spec.censor_fraction * spec.n as f64).floor() as usize;
    if n_censor > 0 {
        let eligible: Vec<usize> = (0..spec.n).filter(|&i| observations[i].time >= 2).collect();
        if eligible.len() < n_censor {
            return Err(Error::Scenario(format!(
                "{n_censor} individuals to censor but only {} have T >= 2",
                eligible.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_key(&[spec.seed, tag::CENSOR]));
        let mut chosen: Vec<usize> = index::sample(&mut rng, eligible.len(), n_censor)
            .into_iter()
            .map(|k| eligible[k])
            .collect();
        chosen.sort_unstable();
        for i in chosen {
            let obs = &mut observations[i];
            obs.time = rng.random_range(1..obs.time);
            obs.status = 0;
            censored_rows.push(i + 1);
        }
    }

    let horizon = spec.fit_t_max.map_or(Horizon::Auto, Horizon::Fixed);
    let dataset = Dataset::new(observations, spec.m, horizon)?;
    let truth = Truth {
        scenario: spec.clone(),
        change_points: spec.change_points(),
        alpha,
        beta: spec.beta.clone(),
        censored_rows,
        dataset_t_max: dataset.t_max(),
    };
    Ok((dataset, truth))
}
