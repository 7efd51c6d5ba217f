use crate::data::AllowedSet;
use crate::error::{Error, Result};
use crate::priors::{BaselineHazards, ChangePointState, Hyperparameters, RegressionState};

/// Full sampler state: change points, baseline levels and regression part.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub cp: ChangePointState,
    pub bh: BaselineHazards,
    pub reg: RegressionState,
}

impl ModelState {
    /// Empty model: `K = 0`, every level at `alpha0`, `β = 0`, nothing
    /// included, `π_β = 0.5`.
    pub fn initial(m: usize, p: usize, t_max: usize, alpha0: f64) -> Self {
        Self {
            cp: ChangePointState::empty(t_max),
            bh: BaselineHazards::constant(m, alpha0),
            reg: RegressionState::empty(m, p),
        }
    }

    /// Expanded baseline `α_rt` (`m × t_max`).
    pub fn alpha(&self) -> Vec<Vec<f64>> {
        self.bh.expand(&self.cp)
    }

    pub fn validate(&self, allowed: &AllowedSet, hyper: &Hyperparameters) -> Result<()> {
        if self.bh.alpha_star.len() != hyper.m {
            return Err(Error::Dimension(format!(
                "state has {} risks, hyperparameters {}",
                self.bh.alpha_star.len(),
                hyper.m
            )));
        }
        self.cp.validate(allowed, hyper.m)?;
        self.bh.validate(&self.cp)?;
        self.reg.validate(hyper.m, hyper.p)
    }
}
