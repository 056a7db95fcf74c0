use super::road::RoadConfig;
use super::vehicle::VehicleState;

/// High-level lateral command for the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LateralCommand {
    /// No new lateral decision: a maneuver in flight runs on to the next lane
    /// centre in its direction of travel, otherwise hold the current lane centre.
    Keep = 0,
    /// Move toward the target lane centre.
    Change = 1,
    /// Return toward the centre of the lane the ego started in.
    Abort = 2,
}

impl LateralCommand {
    pub const ALL: [LateralCommand; 3] = [Self::Keep, Self::Change, Self::Abort];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }
}

/// One step of the constant-speed lateral controller.
///
/// The vehicle moves toward the goal centre at `lateral_speed`; once the remaining
/// offset is within one step it snaps onto the centre with zero lateral speed.
pub fn lateral_step(
    ego: &VehicleState,
    command: LateralCommand,
    road: &RoadConfig,
    lateral_speed: f64,
    dt: f64,
) -> VehicleState {
    let goal = match command {
        LateralCommand::Keep => keep_goal(ego, road),
        LateralCommand::Change => road.lane_center(road.target_lane),
        LateralCommand::Abort => road.lane_center(road.ego_start_lane),
    };
    let mut next = *ego;
    let offset = goal - ego.x;
    // 1e-9 absorbs accumulated rounding so a maneuver ends on the step it reaches the centre.
    if offset.abs() < lateral_speed * dt + 1e-9 {
        next.x = goal;
        next.v_x = 0.0;
    } else {
        next.v_x = lateral_speed.copysign(offset);
        next.x = ego.x + next.v_x * dt;
    }
    next.x = next.x.clamp(0.0, road.width());
    next.lane = road.lane_of(next.x);
    next
}

fn keep_goal(ego: &VehicleState, road: &RoadConfig) -> f64 {
    if ego.v_x == 0.0 {
        return road.lane_center(ego.lane);
    }
    // Lane-centre coordinate: centre i sits at i + 0.5 lane widths.
    let u = ego.x / road.lane_width - 0.5;
    let last = road.n_lanes as f64 - 1.0;
    let lane = if ego.v_x > 0.0 { u.ceil() } else { u.floor() };
    road.lane_center(lane.clamp(0.0, last) as usize)
}
