use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traffic_sim::{compute_gap, LateralCommand, NeighborSet, VehicleState};

/// Collision penalty; fixed.
pub const COLLISION_PENALTY: f64 = -100.0;

/// Reward weights, thresholds and episode limits of the decision environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Lateral jerk weight.
    pub alpha: f64,
    /// Longitudinal jerk weight.
    pub beta: f64,
    pub w_t: f64,
    pub w_l: f64,
    pub w_s: f64,
    /// Target longitudinal speed (m/s).
    pub v_desired: f64,
    /// Near-collision distance threshold (m).
    pub d_s: f64,
    /// Reward added whenever the safety filter alters an action.
    pub r_p: f64,
    pub collision_penalty: f64,
    /// Step limit of one episode.
    pub horizon: usize,
    /// Safety filter: smallest admissible target-lane bumper gap (m).
    pub gap_min: f64,
    /// Safety filter: smallest admissible target-lane time to collision (s).
    pub ttc_min: f64,
    pub safety_filter: bool,
    /// Lateral distance to the target-lane centre that counts as arrival (m).
    pub arrival_tolerance: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-6,
            beta: 1e-4,
            w_t: 1.0,
            w_l: 0.1,
            w_s: 0.01,
            v_desired: 25.0,
            d_s: 10.0,
            r_p: -0.1,
            collision_penalty: COLLISION_PENALTY,
            horizon: 1024,
            gap_min: 4.0,
            ttc_min: 2.0,
            safety_filter: true,
            arrival_tolerance: 0.5,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("w_t", self.w_t),
            ("w_l", self.w_l),
            ("w_s", self.w_s),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Config(format!(
                    "env.{name} must be >= 0, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("d_s", self.d_s),
            ("v_desired", self.v_desired),
            ("gap_min", self.gap_min),
            ("ttc_min", self.ttc_min),
            ("arrival_tolerance", self.arrival_tolerance),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "env.{name} must be > 0, got {value}"
                )));
            }
        }
        if !self.r_p.is_finite() {
            return Err(Error::Config("env.r_p must be finite".into()));
        }
        if self.collision_penalty != COLLISION_PENALTY {
            return Err(Error::Config(format!(
                "env.collision_penalty is fixed at {COLLISION_PENALTY}"
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("env.horizon must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-step reward terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RewardBreakdown {
    pub r_comf: f64,
    pub r_time: f64,
    pub r_lane: f64,
    pub r_speed: f64,
    pub r_eff: f64,
    /// Near-collision term actually charged (zero unless the distance is below `d_s`).
    pub r_near: f64,
    pub r_collision: f64,
    pub r_penalty: f64,
    pub r_safety: f64,
    pub r_total: f64,
}

impl RewardBreakdown {
    pub const FIELDS: [&'static str; 10] = [
        "r_comf",
        "r_time",
        "r_lane",
        "r_speed",
        "r_eff",
        "r_near",
        "r_collision",
        "r_penalty",
        "r_safety",
        "r_total",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.r_comf,
            self.r_time,
            self.r_lane,
            self.r_speed,
            self.r_eff,
            self.r_near,
            self.r_collision,
            self.r_penalty,
            self.r_safety,
            self.r_total,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        Self {
            r_comf: v[0],
            r_time: v[1],
            r_lane: v[2],
            r_speed: v[3],
            r_eff: v[4],
            r_near: v[5],
            r_collision: v[6],
            r_penalty: v[7],
            r_safety: v[8],
            r_total: v[9],
        }
    }
}

/// Jerk penalty: `-alpha * jerk_x^2 - beta * jerk_y^2`.
pub fn comfort_reward(jerk_x: f64, jerk_y: f64, alpha: f64, beta: f64) -> f64 {
    -alpha * jerk_x * jerk_x - beta * jerk_y * jerk_y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub r_time: f64,
    pub r_lane: f64,
    pub r_speed: f64,
    pub r_eff: f64,
}

pub fn efficiency_reward(
    x: f64,
    v_y: f64,
    target_center: f64,
    dt: f64,
    cfg: &EnvConfig,
) -> Efficiency {
    let r_time = -dt;
    let r_lane = -(x - target_center).abs();
    let r_speed = -(v_y - cfg.v_desired).abs();
    Efficiency {
        r_time,
        r_lane,
        r_speed,
        r_eff: cfg.w_t * r_time + cfg.w_l * r_lane + cfg.w_s * r_speed,
    }
}

/// Longitudinal proximity score, in `[-10, 0)`.
pub fn proximity_f(ego: &VehicleState, other: &VehicleState) -> f64 {
    -1.0 / ((ego.y - other.y).abs() + 0.1)
}

/// Near-collision term of the action-conditioned table and the distance `D` it is
/// gated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearCollision {
    /// Minimum proximity score over the referenced neighbors (0 when none exist).
    pub term: f64,
    /// Minimum bumper distance to the referenced neighbors (`inf` when none exist).
    pub distance: f64,
}

/// Neighbors referenced by each lateral action: keep → C1, change → C1 and C3,
/// abort → C0 and C2. Absent neighbors are skipped.
pub fn near_collision_term(
    lateral: LateralCommand,
    neighbors: &NeighborSet,
    ego: &VehicleState,
) -> NearCollision {
    let referenced: [Option<&VehicleState>; 2] = match lateral {
        LateralCommand::Keep => [neighbors.c1.as_ref(), None],
        LateralCommand::Change => [neighbors.c1.as_ref(), neighbors.c3.as_ref()],
        LateralCommand::Abort => [neighbors.c0.as_ref(), neighbors.c2.as_ref()],
    };
    let mut out = NearCollision {
        term: 0.0,
        distance: f64::INFINITY,
    };
    for other in referenced.into_iter().flatten() {
        out.term = out.term.min(proximity_f(ego, other));
        out.distance = out.distance.min(compute_gap(ego, other));
    }
    out
}

/// Near-collision reward: the table term when `D < d_s`, otherwise 0.
pub fn near_collision_reward(
    lateral: LateralCommand,
    neighbors: &NeighborSet,
    ego: &VehicleState,
    d_s: f64,
) -> f64 {
    let near = near_collision_term(lateral, neighbors, ego);
    if near.distance < d_s {
        near.term
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Safety {
    pub r_collision: f64,
    pub r_penalty: f64,
    pub r_safety: f64,
}

/// `r_collision` is the fixed penalty on collision, else the near-collision term
/// when `distance < d_s`, else 0; the intervention penalty is added on top.
pub fn safety_reward(
    collision: bool,
    distance: f64,
    near_term: f64,
    intervened: bool,
    cfg: &EnvConfig,
) -> Safety {
    let r_collision = if collision {
        cfg.collision_penalty
    } else if distance < cfg.d_s {
        near_term
    } else {
        0.0
    };
    let r_penalty = if intervened { cfg.r_p } else { 0.0 };
    Safety {
        r_collision,
        r_penalty,
        r_safety: r_collision + r_penalty,
    }
}
