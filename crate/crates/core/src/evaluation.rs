//! Policy evaluation over seeded episodes.

use std::io::Write;

use rayon::prelude::*;

use crate::baselines::{baseline_action, BaselineConfig, Geometry};
use crate::env::{EnvConfig, EpisodeStatus, LaneChangeEnv, Observation, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::ppo::{argmax, ActorCritic};
use crate::seed::{self, Stream};
use crate::traffic_sim::WorldConfig;

/// Anything that picks a flat action index from an observation.
pub trait DrivingPolicy: Sync {
    fn act(&self, obs: &Observation) -> Result<usize>;
}

impl<F: Fn(&Observation) -> usize + Sync> DrivingPolicy for F {
    fn act(&self, obs: &Observation) -> Result<usize> {
        Ok(self(obs))
    }
}

/// Learned policy acting on its most likely action.
pub struct GreedyPolicy<'a> {
    pub net: &'a ActorCritic,
}

impl DrivingPolicy for GreedyPolicy<'_> {
    fn act(&self, obs: &Observation) -> Result<usize> {
        let (logits, _) = self.net.policy_forward(&obs.normalized())?;
        Ok(argmax(&logits))
    }
}

pub struct BaselinePolicy {
    pub cfg: BaselineConfig,
    pub geometry: Geometry,
}

impl BaselinePolicy {
    pub fn new(cfg: BaselineConfig, world: &WorldConfig) -> Self {
        Self {
            cfg,
            geometry: Geometry {
                road: world.road,
                vehicle_length: world.vehicle_length,
            },
        }
    }
}

impl DrivingPolicy for BaselinePolicy {
    fn act(&self, obs: &Observation) -> Result<usize> {
        Ok(baseline_action(obs, &self.cfg, &self.geometry))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    /// Rollout number within the evaluation.
    pub index: usize,
    /// Seed the episode's world was generated from.
    pub seed: u64,
    pub status: EpisodeStatus,
    pub steps: usize,
    pub episode_return: f64,
    /// Steps on which the safety filter altered the proposed action.
    pub interventions: usize,
}

pub const EPISODES_HEADER: &str = "index,seed,status,steps,return,interventions";
pub const REPORT_HEADER: &str =
    "n_rollouts,horizon,seed,avg_return,success_rate,collision_rate,missed_exit_rate,timeout_rate";

impl EpisodeRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.index,
            self.seed,
            self.status.as_str(),
            self.steps,
            self.episode_return,
            self.interventions
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n_rollouts: usize,
    pub horizon: usize,
    pub seed: u64,
    pub avg_return: f64,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub missed_exit_rate: f64,
    pub timeout_rate: f64,
    pub episodes: Vec<EpisodeRecord>,
}

impl EvalReport {
    fn from_episodes(
        n_rollouts: usize,
        horizon: usize,
        seed: u64,
        episodes: Vec<EpisodeRecord>,
    ) -> Self {
        let n = episodes.len() as f64;
        let rate = |s: EpisodeStatus| episodes.iter().filter(|e| e.status == s).count() as f64 / n;
        Self {
            n_rollouts,
            horizon,
            seed,
            avg_return: episodes.iter().map(|e| e.episode_return).sum::<f64>() / n,
            success_rate: rate(EpisodeStatus::Success),
            collision_rate: rate(EpisodeStatus::Collision),
            missed_exit_rate: rate(EpisodeStatus::MissedExit),
            timeout_rate: rate(EpisodeStatus::Timeout),
            episodes,
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n_rollouts,
            self.horizon,
            self.seed,
            self.avg_return,
            self.success_rate,
            self.collision_rate,
            self.missed_exit_rate,
            self.timeout_rate
        )
    }

    pub fn write_report<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{REPORT_HEADER}")?;
        writeln!(out, "{}", self.to_csv_row())
    }

    pub fn write_episodes<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{EPISODES_HEADER}")?;
        for e in &self.episodes {
            writeln!(out, "{}", e.to_csv_row())?;
        }
        Ok(())
    }
}

/// Seed of evaluation rollout `index` under master seed `seed`.
pub fn rollout_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed, Stream::Evaluation, index as u64)
}

/// Plays one episode from `episode_seed` to termination, optionally logging every
/// step.
pub fn run_episode(
    policy: &dyn DrivingPolicy,
    env: &mut LaneChangeEnv,
    episode_seed: u64,
    mut log: Option<&mut Vec<TrajectoryRecord>>,
) -> Result<(EpisodeStatus, usize, f64, usize)> {
    let mut obs = env.reset(episode_seed);
    let mut interventions = 0;
    loop {
        let action = policy.act(&obs)?;
        let result = env.step(action)?;
        if result.intervened {
            interventions += 1;
        }
        if let Some(log) = log.as_deref_mut() {
            log.push(TrajectoryRecord::from_step(
                episode_seed,
                env.steps(),
                &result,
            ));
        }
        if let Some(outcome) = result.outcome {
            return Ok((
                outcome.status,
                outcome.steps,
                outcome.episode_return,
                interventions,
            ));
        }
        obs = result.observation;
    }
}

/// Runs `n_rollouts` episodes, each capped at `horizon` steps, and aggregates
/// per-episode rates. Rollouts run in parallel; results keep rollout order.
pub fn evaluate(
    policy: &dyn DrivingPolicy,
    world_cfg: &WorldConfig,
    env_cfg: &EnvConfig,
    n_rollouts: usize,
    horizon: usize,
    seed: u64,
) -> Result<EvalReport> {
    evaluate_with_logs(policy, world_cfg, env_cfg, n_rollouts, horizon, seed, false).map(|(r, _)| r)
}

/// [`evaluate`] that also returns each rollout's trajectory when `keep_logs` is set.
pub fn evaluate_with_logs(
    policy: &dyn DrivingPolicy,
    world_cfg: &WorldConfig,
    env_cfg: &EnvConfig,
    n_rollouts: usize,
    horizon: usize,
    seed: u64,
    keep_logs: bool,
) -> Result<(EvalReport, Vec<Vec<TrajectoryRecord>>)> {
    if n_rollouts == 0 {
        return Err(Error::InvalidArgument("rollouts must be positive".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let env_cfg = EnvConfig {
        horizon,
        ..*env_cfg
    };
    let template = LaneChangeEnv::new(*world_cfg, env_cfg)?;
    let results: Vec<(EpisodeRecord, Vec<TrajectoryRecord>)> = (0..n_rollouts)
        .into_par_iter()
        .map(|index| {
            let mut env = template.clone();
            let episode_seed = rollout_seed(seed, index);
            let mut log = Vec::new();
            let (status, steps, episode_return, interventions) = run_episode(
                policy,
                &mut env,
                episode_seed,
                keep_logs.then_some(&mut log),
            )?;
            Ok((
                EpisodeRecord {
                    index,
                    seed: episode_seed,
                    status,
                    steps,
                    episode_return,
                    interventions,
                },
                log,
            ))
        })
        .collect::<Result<_>>()?;
    let (episodes, logs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let logs = if keep_logs { logs } else { Vec::new() };
    Ok((
        EvalReport::from_episodes(n_rollouts, horizon, seed, episodes),
        logs,
    ))
}
