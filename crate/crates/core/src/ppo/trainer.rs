//! Iteration loop: collect, estimate advantages, optimise.

use std::io::Write;

use rand::seq::SliceRandom;

use super::adam::{annealed_lr, Adam};
use super::checkpoint::Checkpoint;
use super::config::PpoConfig;
use super::loss::{loss_and_gradients, LossTerms, Minibatch};
use super::net::ActorCritic;
use super::rollout::{collect_rollout, Environment, RolloutActor, RolloutBuffer};
use crate::env::EpisodeStatus;
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Per-iteration training statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    /// One-based iteration number.
    pub iteration: usize,
    pub learning_rate: f64,
    /// Episodes that ended during this iteration's collection.
    pub episodes: usize,
    /// Mean return of those episodes; NaN when none ended.
    pub mean_episode_return: f64,
    pub successes: usize,
    pub collisions: usize,
    pub missed_exits: usize,
    pub timeouts: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub total_loss: f64,
}

pub const STATS_HEADER: &str = "iteration,learning_rate,episodes,mean_episode_return,successes,collisions,\
missed_exits,timeouts,success_rate,collision_rate,policy_loss,value_loss,entropy,clip_fraction,approx_kl,total_loss";

impl TrainStats {
    /// Fraction of ended episodes that succeeded; NaN when none ended.
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes as f64
    }

    pub fn collision_rate(&self) -> f64 {
        self.collisions as f64 / self.episodes as f64
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.learning_rate,
            self.episodes,
            self.mean_episode_return,
            self.successes,
            self.collisions,
            self.missed_exits,
            self.timeouts,
            self.success_rate(),
            self.collision_rate(),
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.clip_fraction,
            self.approx_kl,
            self.total_loss,
        )
    }
}

/// Writes the stats CSV header followed by one row per iteration.
pub fn write_stats<W: Write>(out: &mut W, stats: &[TrainStats]) -> std::io::Result<()> {
    writeln!(out, "{STATS_HEADER}")?;
    for s in stats {
        writeln!(out, "{}", s.to_csv_row())?;
    }
    Ok(())
}

/// PPO learner driving `n_actors` environments.
pub struct Trainer<E> {
    cfg: PpoConfig,
    seed: u64,
    net: ActorCritic,
    actor_opt: Adam,
    critic_opt: Adam,
    actors: Vec<RolloutActor<E>>,
    iteration: usize,
}

impl<E: Environment> Trainer<E> {
    /// `make_env(i)` builds the environment for actor `i`.
    pub fn new(
        cfg: PpoConfig,
        seed: u64,
        mut make_env: impl FnMut(usize) -> Result<E>,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut actors = Vec::with_capacity(cfg.n_actors);
        for i in 0..cfg.n_actors {
            actors.push(RolloutActor::new(i, make_env(i)?, seed)?);
        }
        let obs_dim = actors[0].env().observation_dim();
        let n_actions = actors[0].env().n_actions();
        let mut rng = seed::rng(seed, Stream::PolicyInit, 0);
        let net = ActorCritic::new(obs_dim, &cfg.hidden(), n_actions, &mut rng)?;
        Ok(Self {
            actor_opt: Adam::new(net.actor.params().len()),
            critic_opt: Adam::new(net.critic.params().len()),
            cfg,
            seed,
            net,
            actors,
            iteration: 0,
        })
    }

    pub fn config(&self) -> &PpoConfig {
        &self.cfg
    }

    pub fn net(&self) -> &ActorCritic {
        &self.net
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            iteration: self.iteration,
            net: self.net.clone(),
            actor_opt: self.actor_opt.clone(),
            critic_opt: self.critic_opt.clone(),
        }
    }

    /// Replaces the learner state; the actors keep their environments.
    pub fn restore(&mut self, ck: Checkpoint) -> Result<()> {
        if ck.net.obs_dim() != self.net.obs_dim() || ck.net.n_actions() != self.net.n_actions() {
            return Err(Error::Config(
                "checkpoint network does not fit the environment".into(),
            ));
        }
        self.iteration = ck.iteration;
        self.net = ck.net;
        self.actor_opt = ck.actor_opt;
        self.critic_opt = ck.critic_opt;
        Ok(())
    }

    /// Runs one collect/optimise cycle. On a non-finite loss or gradient the
    /// learner is rolled back to its state before the iteration.
    pub fn run_iteration(&mut self) -> Result<TrainStats> {
        let lr = annealed_lr(
            self.cfg.learning_rate,
            self.iteration,
            self.cfg.total_iterations,
        );
        let mut buf = collect_rollout(&mut self.actors, &self.net, self.cfg.horizon)?;
        buf.compute_advantages(self.cfg.gamma, self.cfg.lambda);

        let snapshot = self.checkpoint();
        let terms = match self.optimise(&buf, lr) {
            Ok(t) => t,
            Err(e) => {
                self.restore(snapshot)?;
                return Err(e);
            }
        };
        self.iteration += 1;
        Ok(self.stats(&buf, lr, terms))
    }

    fn optimise(&mut self, buf: &RolloutBuffer, lr: f64) -> Result<LossTerms> {
        let n = buf.len();
        let mb = self.cfg.minibatch_size;
        let coef = self.cfg.coefficients();
        let obs_dim = buf.obs_dim;
        let mut rng = seed::rng(self.seed, Stream::Minibatch, self.iteration as u64);
        let mut order: Vec<usize> = (0..n).collect();
        let mut mean = LossTerms::default();
        let mut updates = 0usize;

        let mut features = Vec::with_capacity(mb * obs_dim);
        let mut actions = Vec::with_capacity(mb);
        let mut old_log_probs = Vec::with_capacity(mb);
        let mut advantages = Vec::with_capacity(mb);
        let mut returns = Vec::with_capacity(mb);

        for _ in 0..self.cfg.optim_epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(mb) {
                features.clear();
                actions.clear();
                old_log_probs.clear();
                advantages.clear();
                returns.clear();
                for &i in chunk {
                    features.extend_from_slice(&buf.features[i * obs_dim..(i + 1) * obs_dim]);
                    actions.push(buf.actions[i]);
                    old_log_probs.push(buf.log_probs[i]);
                    advantages.push(buf.advantages[i]);
                    returns.push(buf.returns[i]);
                }
                normalize(&mut advantages);
                let batch = Minibatch {
                    features: &features,
                    obs_dim,
                    actions: &actions,
                    old_log_probs: &old_log_probs,
                    advantages: &advantages,
                    returns: &returns,
                };
                let (terms, grads) = loss_and_gradients(&self.net, &batch, &coef);
                let detail = if !terms.total.is_finite() {
                    Some(format!("non-finite loss {}", terms.total))
                } else if !grads.is_finite() {
                    Some("non-finite gradient".to_string())
                } else {
                    None
                };
                if let Some(detail) = detail {
                    return Err(Error::Training {
                        iteration: self.iteration + 1,
                        detail: format!(
                            "{detail} at update {updates} (policy {}, value {}, entropy {})",
                            terms.policy_loss, terms.value_loss, terms.entropy
                        ),
                    });
                }
                self.actor_opt
                    .update(self.net.actor.params_mut(), &grads.actor, lr);
                self.critic_opt
                    .update(self.net.critic.params_mut(), &grads.critic, lr);
                mean.total += terms.total;
                mean.policy_loss += terms.policy_loss;
                mean.value_loss += terms.value_loss;
                mean.entropy += terms.entropy;
                mean.surrogate += terms.surrogate;
                mean.mean_ratio += terms.mean_ratio;
                mean.clip_fraction += terms.clip_fraction;
                mean.approx_kl += terms.approx_kl;
                updates += 1;
            }
        }
        if !self.net.is_finite() {
            return Err(Error::Training {
                iteration: self.iteration + 1,
                detail: "parameters became non-finite".into(),
            });
        }
        let k = 1.0 / updates as f64;
        Ok(LossTerms {
            total: mean.total * k,
            policy_loss: mean.policy_loss * k,
            value_loss: mean.value_loss * k,
            entropy: mean.entropy * k,
            surrogate: mean.surrogate * k,
            mean_ratio: mean.mean_ratio * k,
            clip_fraction: mean.clip_fraction * k,
            approx_kl: mean.approx_kl * k,
        })
    }

    fn stats(&self, buf: &RolloutBuffer, lr: f64, terms: LossTerms) -> TrainStats {
        let count = |s: EpisodeStatus| buf.episodes.iter().filter(|e| e.status == Some(s)).count();
        let episodes = buf.episodes.len();
        let mean_episode_return =
            buf.episodes.iter().map(|e| e.episode_return).sum::<f64>() / episodes as f64;
        TrainStats {
            iteration: self.iteration,
            learning_rate: lr,
            episodes,
            mean_episode_return,
            successes: count(EpisodeStatus::Success),
            collisions: count(EpisodeStatus::Collision),
            missed_exits: count(EpisodeStatus::MissedExit),
            timeouts: count(EpisodeStatus::Timeout),
            policy_loss: terms.policy_loss,
            value_loss: terms.value_loss,
            entropy: terms.entropy,
            clip_fraction: terms.clip_fraction,
            approx_kl: terms.approx_kl,
            total_loss: terms.total,
        }
    }

    /// Runs the remaining iterations up to `total_iterations`, calling `on_iteration`
    /// after each one.
    pub fn train(
        &mut self,
        mut on_iteration: impl FnMut(&Self, &TrainStats) -> Result<()>,
    ) -> Result<Vec<TrainStats>> {
        let mut all = Vec::new();
        while self.iteration < self.cfg.total_iterations {
            let stats = self.run_iteration()?;
            on_iteration(self, &stats)?;
            all.push(stats);
        }
        Ok(all)
    }
}

/// Shifts to zero mean and scales to unit variance (left centred only when the
/// spread is negligible).
pub fn normalize(xs: &mut [f64]) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return;
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for x in xs.iter_mut() {
        *x -= mean;
        if std > 1e-8 {
            *x /= std;
        }
    }
}
