use super::action::{ActionPair, LongitudinalCommand};
use super::observation::{assemble_observation, Observation};
use super::reward::{
    comfort_reward, efficiency_reward, near_collision_term, safety_reward, EnvConfig,
    RewardBreakdown,
};
use super::safety::filter_action;
use crate::error::{Error, Result};
use crate::traffic_sim::{
    compute_gap, find_neighbors, idm_acceleration, CollisionEvent, NeighborSet, World, WorldConfig,
    NO_LEADER_GAP,
};

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EpisodeStatus {
    Success,
    Collision,
    MissedExit,
    Timeout,
}

impl EpisodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Collision => "collision",
            Self::MissedExit => "missed_exit",
            Self::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "success" => Some(Self::Success),
            "collision" => Some(Self::Collision),
            "missed_exit" => Some(Self::MissedExit),
            "timeout" => Some(Self::Timeout),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub status: EpisodeStatus,
    pub steps: usize,
    pub episode_return: f64,
}

/// Everything produced by one environment step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub outcome: Option<EpisodeOutcome>,
    pub proposed: ActionPair,
    pub executed: ActionPair,
    pub intervened: bool,
    pub collisions: Vec<CollisionEvent>,
}

#[derive(Debug, Clone)]
struct Episode {
    world: World,
    steps: usize,
    episode_return: f64,
    prev_lat_accel: f64,
    prev_lon_accel: f64,
    outcome: Option<EpisodeOutcome>,
}

/// Mandatory lane-change decision environment.
#[derive(Debug, Clone)]
pub struct LaneChangeEnv {
    world_cfg: WorldConfig,
    cfg: EnvConfig,
    episode: Option<Episode>,
}

impl LaneChangeEnv {
    pub fn new(world_cfg: WorldConfig, cfg: EnvConfig) -> Result<Self> {
        world_cfg.validate()?;
        cfg.validate()?;
        Ok(Self {
            world_cfg,
            cfg,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn world_config(&self) -> &WorldConfig {
        &self.world_cfg
    }

    pub fn world(&self) -> Option<&World> {
        self.episode.as_ref().map(|e| &e.world)
    }

    pub fn steps(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.steps)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.outcome.is_some())
    }

    /// Starts a fresh episode on a newly generated world.
    pub fn reset(&mut self, seed: u64) -> Observation {
        self.reset_with_world(World::generate(self.world_cfg, seed))
    }

    /// Starts an episode on a caller-supplied world (scripted scenarios).
    pub fn reset_with_world(&mut self, world: World) -> Observation {
        let ego = *world.ego();
        let obs = self.observe(&world, &self.neighbors(&world));
        self.episode = Some(Episode {
            world,
            steps: 0,
            episode_return: 0.0,
            prev_lat_accel: 0.0,
            prev_lon_accel: ego.a_y,
            outcome: None,
        });
        obs
    }

    fn neighbors(&self, world: &World) -> NeighborSet {
        let ego = world.ego();
        find_neighbors(world, ego.id, self.world_cfg.road.target_lane)
            .expect("ego is always present in its own world")
    }

    fn observe(&self, world: &World, neighbors: &NeighborSet) -> Observation {
        let road = &self.world_cfg.road;
        let ego = world.ego();
        assemble_observation(
            ego,
            neighbors,
            road.lane_center(ego.lane),
            road.lane_center(road.target_lane),
        )
    }

    pub fn observation(&self) -> Result<Observation> {
        let episode = self.episode.as_ref().ok_or_else(not_started)?;
        Ok(self.observe(&episode.world, &self.neighbors(&episode.world)))
    }

    /// Applies action `action_index` (flat index 0..6) for one step.
    pub fn step(&mut self, action_index: usize) -> Result<StepResult> {
        let proposed = ActionPair::from_index(action_index)
            .ok_or_else(|| Error::Usage(format!("action index {action_index} is not in 0..6")))?;
        let episode = self.episode.as_ref().ok_or_else(not_started)?;
        if episode.outcome.is_some() {
            return Err(Error::Usage("step called on a finished episode".into()));
        }
        let road = self.world_cfg.road;
        let dt = self.world_cfg.dt;
        let before = self.neighbors(&episode.world);
        let ego_before = *episode.world.ego();

        let (executed, intervened) = if self.cfg.safety_filter {
            filter_action(&ego_before, &before, &road, proposed, &self.cfg)
        } else {
            (proposed, false)
        };

        let leader = match executed.longitudinal {
            LongitudinalCommand::FollowCurrentLeader => before.c0,
            LongitudinalCommand::FollowTargetLeader => before.c1,
        };
        let (gap, closing) = match leader {
            Some(l) => (
                compute_gap(&ego_before, &l).max(0.01),
                ego_before.v_y - l.v_y,
            ),
            None => (NO_LEADER_GAP, 0.0),
        };
        let accel = idm_acceleration(ego_before.v_y, gap, closing, &self.world_cfg.idm)?;

        let episode = self.episode.as_mut().expect("checked above");
        let collisions = episode.world.step(accel, executed.lateral, dt);
        let ego = *episode.world.ego();
        let after = find_neighbors(&episode.world, ego.id, road.target_lane)?;

        let lat_accel = (ego.v_x - ego_before.v_x) / dt;
        let lon_accel = ego.a_y;
        let jerk_x = (lat_accel - episode.prev_lat_accel) / dt;
        let jerk_y = (lon_accel - episode.prev_lon_accel) / dt;
        episode.prev_lat_accel = lat_accel;
        episode.prev_lon_accel = lon_accel;

        let target_center = road.lane_center(road.target_lane);
        let r_comf = comfort_reward(jerk_x, jerk_y, self.cfg.alpha, self.cfg.beta);
        let eff = efficiency_reward(ego.x, ego.v_y, target_center, dt, &self.cfg);
        let near = near_collision_term(executed.lateral, &after, &ego);
        let collided = !collisions.is_empty();
        let safety = safety_reward(collided, near.distance, near.term, intervened, &self.cfg);
        let r_near = if near.distance < self.cfg.d_s {
            near.term
        } else {
            0.0
        };
        let reward = RewardBreakdown {
            r_comf,
            r_time: eff.r_time,
            r_lane: eff.r_lane,
            r_speed: eff.r_speed,
            r_eff: eff.r_eff,
            r_near,
            r_collision: safety.r_collision,
            r_penalty: safety.r_penalty,
            r_safety: safety.r_safety,
            r_total: r_comf + eff.r_eff + safety.r_safety,
        };

        episode.steps += 1;
        episode.episode_return += reward.r_total;
        let status = if collided {
            Some(EpisodeStatus::Collision)
        } else if ego.lane == road.target_lane
            && (ego.x - target_center).abs() < self.cfg.arrival_tolerance
        {
            Some(EpisodeStatus::Success)
        } else if ego.y >= road.exit_position {
            Some(EpisodeStatus::MissedExit)
        } else if episode.steps >= self.cfg.horizon {
            Some(EpisodeStatus::Timeout)
        } else {
            None
        };
        let outcome = status.map(|status| EpisodeOutcome {
            status,
            steps: episode.steps,
            episode_return: episode.episode_return,
        });
        episode.outcome = outcome;

        let episode = self.episode.as_ref().expect("checked above");
        let observation = self.observe(&episode.world, &after);
        Ok(StepResult {
            observation,
            reward,
            done: outcome.is_some(),
            outcome,
            proposed,
            executed,
            intervened,
            collisions,
        })
    }
}

fn not_started() -> Error {
    Error::Usage("reset must be called before step".into())
}
