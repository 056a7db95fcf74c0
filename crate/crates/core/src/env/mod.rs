//! Episodic mandatory lane-change environment.

mod action;
mod lane_change;
mod observation;
mod reward;
mod safety;
mod trajectory;

pub use action::{ActionPair, LongitudinalCommand};
pub use lane_change::{EpisodeOutcome, EpisodeStatus, LaneChangeEnv, StepResult};
pub use observation::{
    assemble_observation, build_observation, NeighborBlock, Observation, Slot, OBS_DIM,
};
pub use reward::{
    comfort_reward, efficiency_reward, near_collision_reward, near_collision_term, proximity_f,
    safety_reward, Efficiency, EnvConfig, NearCollision, RewardBreakdown, Safety,
    COLLISION_PENALTY,
};
pub use safety::{
    advances_change, between_centres, change_in_progress, filter_action, ignores_unsafe_leader,
    is_catastrophic, safety_filter,
};
pub use trajectory::{
    read_trajectory, replay, write_trajectory, TrajectoryRecord, TRAJECTORY_HEADER,
};
