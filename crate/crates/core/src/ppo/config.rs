use serde::{Deserialize, Serialize};

use super::loss::LossCoefficients;
use crate::error::{Error, Result};

/// PPO hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    /// Steps collected per actor per iteration.
    pub horizon: usize,
    pub clip_epsilon: f64,
    pub optim_epochs: usize,
    /// Initial Adam step size, annealed linearly to zero.
    pub learning_rate: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub minibatch_size: usize,
    /// Value-loss coefficient.
    pub c1: f64,
    /// Entropy-bonus coefficient.
    pub c2: f64,
    pub n_actors: usize,
    pub total_iterations: usize,
    pub hidden_layers: usize,
    pub hidden_units: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            horizon: 512,
            clip_epsilon: 0.2,
            optim_epochs: 10,
            learning_rate: 1e-4,
            gamma: 0.99,
            lambda: 0.95,
            minibatch_size: 64,
            c1: 0.5,
            c2: 0.0,
            n_actors: 8,
            total_iterations: 500,
            hidden_layers: 2,
            hidden_units: 64,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("ppo.{field}: {why}")));
        if self.horizon == 0 {
            return bad("horizon", "must be positive");
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip_epsilon", "must lie in (0, 1)");
        }
        if self.optim_epochs == 0 {
            return bad("optim_epochs", "must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate", "must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma", "must lie in (0, 1]");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda", "must lie in (0, 1]");
        }
        if !(self.c1.is_finite() && self.c1 >= 0.0) {
            return bad("c1", "must be non-negative");
        }
        if !(self.c2.is_finite() && self.c2 >= 0.0) {
            return bad("c2", "must be non-negative");
        }
        if self.n_actors == 0 {
            return bad("n_actors", "must be positive");
        }
        if self.total_iterations == 0 {
            return bad("total_iterations", "must be positive");
        }
        if self.hidden_units == 0 {
            return bad("hidden_units", "must be positive");
        }
        if self.minibatch_size == 0 || (self.n_actors * self.horizon) % self.minibatch_size != 0 {
            return bad(
                "minibatch_size",
                &format!(
                    "must divide n_actors × horizon = {}",
                    self.n_actors * self.horizon
                ),
            );
        }
        Ok(())
    }

    pub fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_units; self.hidden_layers]
    }

    pub fn coefficients(&self) -> LossCoefficients {
        LossCoefficients {
            clip_epsilon: self.clip_epsilon,
            value_coef: self.c1,
            entropy_coef: self.c2,
        }
    }
}
