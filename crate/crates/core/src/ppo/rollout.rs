//! Parallel experience collection.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::distribution::sample_action;
use super::net::ActorCritic;
use crate::env::{EpisodeStatus, LaneChangeEnv, OBS_DIM};
use crate::error::Result;
use crate::seed::{self, Stream};

/// One environment transition as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Features of the next state (meaningless once `done`).
    pub features: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Terminal classification when `done`, if the environment has one.
    pub status: Option<EpisodeStatus>,
}

/// Episodic environment with a discrete action set and vector features.
pub trait Environment: Send {
    fn observation_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: usize) -> Result<Transition>;
}

impl Environment for LaneChangeEnv {
    fn observation_dim(&self) -> usize {
        OBS_DIM
    }

    fn n_actions(&self) -> usize {
        crate::env::ActionPair::COUNT
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        Ok(LaneChangeEnv::reset(self, seed).normalized())
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        let result = LaneChangeEnv::step(self, action)?;
        Ok(Transition {
            features: result.observation.normalized(),
            reward: result.reward.r_total,
            done: result.done,
            status: result.outcome.map(|o| o.status),
        })
    }
}

/// Summary of an episode that finished during collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub actor: usize,
    pub episode_return: f64,
    pub length: usize,
    pub status: Option<EpisodeStatus>,
}

/// An environment plus the per-actor random streams and running episode state.
/// Episodes continue across iteration boundaries.
pub struct RolloutActor<E> {
    pub index: usize,
    env: E,
    features: Vec<f64>,
    sampling_rng: ChaCha8Rng,
    episode_rng: ChaCha8Rng,
    episode_return: f64,
    episode_length: usize,
}

impl<E: Environment> RolloutActor<E> {
    pub fn new(index: usize, mut env: E, master_seed: u64) -> Result<Self> {
        let mut episode_rng = seed::rng(master_seed, Stream::TrainEpisodes, index as u64);
        let features = env.reset(episode_rng.next_u64())?;
        Ok(Self {
            index,
            env,
            features,
            sampling_rng: seed::rng(master_seed, Stream::Sampling, index as u64),
            episode_rng,
            episode_return: 0.0,
            episode_length: 0,
        })
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    /// Runs `horizon` steps under the current policy.
    pub fn collect(&mut self, net: &ActorCritic, horizon: usize) -> Result<Segment> {
        let obs_dim = self.features.len();
        let mut seg = Segment::with_capacity(horizon, obs_dim);
        for _ in 0..horizon {
            let (logits, value) = net.policy_forward(&self.features)?;
            let (action, log_prob) = sample_action(&logits, &mut self.sampling_rng);
            let tr = self.env.step(action)?;
            seg.features.extend_from_slice(&self.features);
            seg.actions.push(action);
            seg.log_probs.push(log_prob);
            seg.values.push(value);
            seg.rewards.push(tr.reward);
            seg.dones.push(tr.done);
            self.episode_return += tr.reward;
            self.episode_length += 1;
            if tr.done {
                seg.episodes.push(EpisodeSummary {
                    actor: self.index,
                    episode_return: self.episode_return,
                    length: self.episode_length,
                    status: tr.status,
                });
                self.episode_return = 0.0;
                self.episode_length = 0;
                let seed = self.episode_rng.gen();
                self.features = self.env.reset(seed)?;
            } else {
                self.features = tr.features;
            }
        }
        seg.bootstrap_value = net.policy_forward(&self.features)?.1;
        Ok(seg)
    }
}

/// One actor's contiguous stretch of experience.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Segment {
    pub features: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Value of the state following the last transition.
    pub bootstrap_value: f64,
    pub episodes: Vec<EpisodeSummary>,
}

impl Segment {
    fn with_capacity(horizon: usize, obs_dim: usize) -> Self {
        Self {
            features: Vec::with_capacity(horizon * obs_dim),
            actions: Vec::with_capacity(horizon),
            log_probs: Vec::with_capacity(horizon),
            values: Vec::with_capacity(horizon),
            rewards: Vec::with_capacity(horizon),
            dones: Vec::with_capacity(horizon),
            bootstrap_value: 0.0,
            episodes: Vec::new(),
        }
    }
}

/// `N × T` transitions in actor-major order, plus GAE outputs once computed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub horizon: usize,
    pub features: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// One bootstrap value per actor.
    pub bootstrap_values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub episodes: Vec<EpisodeSummary>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Truncated GAE per actor segment.
    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) {
        self.advantages.clear();
        self.returns.clear();
        for (a, bootstrap) in self.bootstrap_values.iter().enumerate() {
            let r = a * self.horizon..(a + 1) * self.horizon;
            let (adv, ret) = super::gae::gae_advantages(
                &self.rewards[r.clone()],
                &self.values[r.clone()],
                &self.dones[r],
                *bootstrap,
                gamma,
                lambda,
            );
            self.advantages.extend(adv);
            self.returns.extend(ret);
        }
    }
}

/// Collects `horizon` steps from every actor concurrently and merges the segments
/// in actor-index order.
pub fn collect_rollout<E: Environment>(
    actors: &mut [RolloutActor<E>],
    net: &ActorCritic,
    horizon: usize,
) -> Result<RolloutBuffer> {
    let segments: Vec<Segment> = actors
        .par_iter_mut()
        .map(|actor| actor.collect(net, horizon))
        .collect::<Result<_>>()?;
    let mut buf = RolloutBuffer {
        obs_dim: net.obs_dim(),
        horizon,
        ..RolloutBuffer::default()
    };
    for seg in segments {
        buf.features.extend(seg.features);
        buf.actions.extend(seg.actions);
        buf.log_probs.extend(seg.log_probs);
        buf.values.extend(seg.values);
        buf.rewards.extend(seg.rewards);
        buf.dones.extend(seg.dones);
        buf.bootstrap_values.push(seg.bootstrap_value);
        buf.episodes.extend(seg.episodes);
    }
    Ok(buf)
}
