//! Rule-based lane-change policies on gap and time-to-collision thresholds.

use serde::{Deserialize, Serialize};

use crate::env::{between_centres, ActionPair, LongitudinalCommand, Observation, Slot};
use crate::error::{Error, Result};
use crate::traffic_sim::{LateralCommand, RoadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Gap,
    Ttc,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gap => "gap",
            Self::Ttc => "ttc",
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(Self::Gap),
            "ttc" => Ok(Self::Ttc),
            other => Err(Error::InvalidArgument(format!(
                "unknown baseline kind {other:?} (expected gap or ttc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    /// Smallest accepted bumper gap to C1 and C3 (m).
    pub gap_threshold: f64,
    /// Smallest accepted time to collision with C1 and from C3 (s).
    pub ttc_threshold: f64,
    /// Whether the environment's safety filter screens the rule's actions.
    pub safety_filter: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            kind: BaselineKind::Gap,
            gap_threshold: 10.0,
            ttc_threshold: 2.0,
            safety_filter: false,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_threshold > 0.0) {
            return Err(Error::Config(format!(
                "baseline.gap_threshold must be > 0, got {}",
                self.gap_threshold
            )));
        }
        if !(self.ttc_threshold > 0.0) {
            return Err(Error::Config(format!(
                "baseline.ttc_threshold must be > 0, got {}",
                self.ttc_threshold
            )));
        }
        Ok(())
    }
}

/// Road geometry the rules need to interpret an observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub road: RoadConfig,
    pub vehicle_length: f64,
}

/// Bumper gaps from the ego to C1 (ahead) and C3 (behind).
pub fn target_gaps(obs: &Observation, geo: &Geometry) -> (f64, f64) {
    let c1 = obs.neighbor(Slot::C1);
    let c3 = obs.neighbor(Slot::C3);
    (
        (c1.rel_y.abs() - geo.vehicle_length).max(0.0),
        (c3.rel_y.abs() - geo.vehicle_length).max(0.0),
    )
}

/// Time for the ego to reach C1 and for C3 to reach the ego; infinite when not
/// closing.
pub fn target_ttcs(obs: &Observation, geo: &Geometry) -> (f64, f64) {
    let (gap1, gap3) = target_gaps(obs, geo);
    let v = obs.ego_v_y();
    let ttc = |gap: f64, closing: f64| {
        if closing > 0.0 {
            gap / closing
        } else {
            f64::INFINITY
        }
    };
    (
        ttc(gap1, v - obs.neighbor(Slot::C1).v_y),
        ttc(gap3, obs.neighbor(Slot::C3).v_y - v),
    )
}

fn decide(obs: &Observation, geo: &Geometry, acceptable: bool) -> usize {
    let action = if acceptable {
        ActionPair::new(
            LateralCommand::Change,
            LongitudinalCommand::FollowTargetLeader,
        )
    } else if mid_change(obs, geo) {
        ActionPair::new(
            LateralCommand::Abort,
            LongitudinalCommand::FollowCurrentLeader,
        )
    } else {
        ActionPair::KEEP
    };
    action.index()
}

/// The ego has left the start-lane centre toward the target but not yet crossed
/// the lane boundary. Past it the rule commits, unlike the safety filter, which
/// may still abort from there.
pub fn mid_change(obs: &Observation, geo: &Geometry) -> bool {
    let road = &geo.road;
    let x = obs.ego_x();
    road.lane_of(x) == road.ego_start_lane && between_centres(x, road)
}

pub fn gap_policy(obs: &Observation, cfg: &BaselineConfig, geo: &Geometry) -> usize {
    let (gap1, gap3) = target_gaps(obs, geo);
    decide(
        obs,
        geo,
        gap1 > cfg.gap_threshold && gap3 > cfg.gap_threshold,
    )
}

pub fn ttc_policy(obs: &Observation, cfg: &BaselineConfig, geo: &Geometry) -> usize {
    let (ttc1, ttc3) = target_ttcs(obs, geo);
    decide(
        obs,
        geo,
        ttc1 > cfg.ttc_threshold && ttc3 > cfg.ttc_threshold,
    )
}

pub fn baseline_action(obs: &Observation, cfg: &BaselineConfig, geo: &Geometry) -> usize {
    match cfg.kind {
        BaselineKind::Gap => gap_policy(obs, cfg, geo),
        BaselineKind::Ttc => ttc_policy(obs, cfg, geo),
    }
}
