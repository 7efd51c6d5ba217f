//! Bayesian change-point inference for discrete-time competing-risks
//! survival data.
//!
//! The model places a multinomial-logit hazard on each period,
//! `λ_r(t | x) = exp(η_rt) / (1 + Σ_ρ exp(η_ρt))` with `η_rt = α_rt + x·β_r`,
//! and a step-function prior on the baseline hazards `α_rt`: overall change
//! points (number and location) are shared across risks, and at every change
//! point a Multivariate Bernoulli draw decides which risks actually jump.
//! Inference runs a local-global MCMC sampler that alternates collapsed
//! moves on a Gumbel-mixture augmented likelihood with moves on the exact
//! likelihood.
//!
//! Conventions used throughout the crate: times are 1-based (`t = 1..=t_max`,
//! with `t_max + 1` meaning "no event up to the horizon"), risks are 0-based
//! in the Rust API and 1-based in every file format.

pub mod augmentation;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod mcmc;
pub mod mixture;
pub mod priors;
pub mod rng;
pub mod simgen;

pub use data::{compute_allowed_set, parse_dataset, AllowedSet, Dataset, Horizon, Observation};
pub use error::{Error, Result};
pub use mcmc::{run_chain, KernelConfig, ModelState};
pub use priors::{ChangePointState, Hyperparameters};
