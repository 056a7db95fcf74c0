//! Seeded microscopic simulation of a straight multi-lane highway segment.
//!
//! Surrounding vehicles follow the intelligent driver model in their own lane.
//! The ego vehicle receives its longitudinal acceleration from outside (the
//! decision environment picks which leader feeds its IDM) and moves laterally
//! with a constant-speed kinematic controller.
//!
//! Coordinates: `y` is longitudinal (increasing along travel), `x` is lateral,
//! measured from the right road edge. Lane `i` is centred at `(i + 0.5) * lane_width`.

mod idm;
mod lateral;
mod road;
mod vehicle;
mod world;

pub use idm::{idm_acceleration, IdmParams};
pub use lateral::{lateral_step, LateralCommand};
pub use road::RoadConfig;
pub use vehicle::{compute_gap, compute_ttc, rectangles_overlap, VehicleState};
pub use world::{
    find_neighbors, CollisionEvent, CollisionKind, NeighborSet, TrafficGenConfig, World,
    WorldConfig, DEPARTURE_MARGIN, EGO_ID, ENTRY_OFFSET,
};

/// Largest acceleration any vehicle may apply (m/s²).
pub const MAX_ACCEL: f64 = 2.5;
/// Emergency braking floor (m/s²).
pub const EMERGENCY_BRAKE: f64 = -4.5;
/// Gap used in place of a missing leader (m).
pub const NO_LEADER_GAP: f64 = 1.0e4;

pub fn clamp_accel(a: f64) -> f64 {
    a.clamp(EMERGENCY_BRAKE, MAX_ACCEL)
}
