use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Straight highway segment ending at a ramp exit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadConfig {
    /// Distance from the ego start position to the ramp exit (m).
    pub segment_length: f64,
    pub lane_width: f64,
    pub n_lanes: usize,
    pub ego_start_lane: usize,
    pub target_lane: usize,
    /// Longitudinal position by which the ego must be on the target lane (m).
    pub exit_position: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        Self {
            segment_length: 800.0,
            lane_width: 3.75,
            n_lanes: 2,
            ego_start_lane: 0,
            target_lane: 1,
            exit_position: 800.0,
        }
    }
}

impl RoadConfig {
    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }

    pub fn width(&self) -> f64 {
        self.n_lanes as f64 * self.lane_width
    }

    /// Lane index containing lateral position `x`.
    pub fn lane_of(&self, x: f64) -> usize {
        let idx = (x / self.lane_width).floor();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(self.n_lanes - 1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("segment_length", self.segment_length),
            ("lane_width", self.lane_width),
            ("exit_position", self.exit_position),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "road.{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if self.n_lanes < 2 {
            return Err(Error::Config("road.n_lanes must be >= 2".into()));
        }
        if self.ego_start_lane >= self.n_lanes || self.target_lane >= self.n_lanes {
            return Err(Error::Config(
                "road.ego_start_lane and road.target_lane must be < road.n_lanes".into(),
            ));
        }
        if self.ego_start_lane == self.target_lane {
            return Err(Error::Config(
                "road.target_lane must differ from road.ego_start_lane".into(),
            ));
        }
        if self.exit_position > self.segment_length {
            return Err(Error::Config(
                "road.exit_position must not exceed road.segment_length".into(),
            ));
        }
        Ok(())
    }
}
