use crate::error::Result;
use crate::traffic_sim::{find_neighbors, NeighborSet, VehicleState, World, NO_LEADER_GAP};

pub const OBS_DIM: usize = 21;

/// Neighbor slot order inside the observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Current-lane leader.
    C0 = 0,
    /// Target-lane leader.
    C1 = 1,
    /// Current-lane follower.
    C2 = 2,
    /// Target-lane follower.
    C3 = 3,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::C0, Slot::C1, Slot::C2, Slot::C3];

    fn is_leader(self) -> bool {
        matches!(self, Slot::C0 | Slot::C1)
    }

    fn on_target_lane(self) -> bool {
        matches!(self, Slot::C1 | Slot::C3)
    }
}

/// One neighbor block: relative longitudinal distance (leader positive), speed,
/// acceleration, lateral position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborBlock {
    pub rel_y: f64,
    pub v_y: f64,
    pub a_y: f64,
    pub x: f64,
}

/// The 21-entry policy input: ego `(y, v_y, a_y, x, v_x)` followed by four
/// neighbor blocks in `C0, C1, C2, C3` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

// Fixed affine scales: positions, speeds, accelerations, lateral quantities.
const POSITION_SCALE: f64 = 100.0;
const SPEED_SCALE: f64 = 30.0;
const ACCEL_SCALE: f64 = 5.0;
const LATERAL_SCALE: f64 = 15.0;
/// Normalised features are clipped to this magnitude (absent-neighbor sentinels
/// would otherwise reach 100).
const FEATURE_CLIP: f64 = 5.0;

impl Observation {
    pub fn ego_y(&self) -> f64 {
        self.0[0]
    }

    pub fn ego_v_y(&self) -> f64 {
        self.0[1]
    }

    pub fn ego_a_y(&self) -> f64 {
        self.0[2]
    }

    pub fn ego_x(&self) -> f64 {
        self.0[3]
    }

    pub fn ego_v_x(&self) -> f64 {
        self.0[4]
    }

    pub fn neighbor(&self, slot: Slot) -> NeighborBlock {
        let base = 5 + 4 * slot as usize;
        NeighborBlock {
            rel_y: self.0[base],
            v_y: self.0[base + 1],
            a_y: self.0[base + 2],
            x: self.0[base + 3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Policy-network features.
    pub fn normalized(&self) -> Vec<f64> {
        let scales = [
            POSITION_SCALE,
            SPEED_SCALE,
            ACCEL_SCALE,
            LATERAL_SCALE,
            SPEED_SCALE / 10.0, // lateral speed is O(1 m/s)
        ];
        let mut out = Vec::with_capacity(OBS_DIM);
        out.extend(self.0[..5].iter().zip(scales).map(|(v, s)| v / s));
        let block_scales = [POSITION_SCALE, SPEED_SCALE, ACCEL_SCALE, LATERAL_SCALE];
        for block in self.0[5..].chunks_exact(4) {
            out.extend(block.iter().zip(block_scales).map(|(v, s)| v / s));
        }
        for v in &mut out {
            *v = v.clamp(-FEATURE_CLIP, FEATURE_CLIP);
        }
        out
    }
}

fn block_for(
    slot: Slot,
    ego: &VehicleState,
    other: Option<&VehicleState>,
    lane_center: f64,
) -> NeighborBlock {
    match other {
        Some(v) => NeighborBlock {
            rel_y: v.y - ego.y,
            v_y: v.v_y,
            a_y: v.a_y,
            x: v.x,
        },
        None => NeighborBlock {
            rel_y: if slot.is_leader() {
                NO_LEADER_GAP
            } else {
                -NO_LEADER_GAP
            },
            v_y: ego.v_y,
            a_y: 0.0,
            x: lane_center,
        },
    }
}

/// Assembles the observation from an ego state and its neighbor set.
pub fn assemble_observation(
    ego: &VehicleState,
    neighbors: &NeighborSet,
    current_center: f64,
    target_center: f64,
) -> Observation {
    let mut values = [0.0; OBS_DIM];
    values[..5].copy_from_slice(&[ego.y, ego.v_y, ego.a_y, ego.x, ego.v_x]);
    for (slot, other) in Slot::ALL.into_iter().zip(neighbors.slots()) {
        let center = if slot.on_target_lane() {
            target_center
        } else {
            current_center
        };
        let b = block_for(slot, ego, other, center);
        let base = 5 + 4 * slot as usize;
        values[base..base + 4].copy_from_slice(&[b.rel_y, b.v_y, b.a_y, b.x]);
    }
    Observation(values)
}

pub fn build_observation(world: &World) -> Result<Observation> {
    let road = world.config().road;
    let ego = world.ego();
    let neighbors = find_neighbors(world, ego.id, road.target_lane)?;
    Ok(assemble_observation(
        ego,
        &neighbors,
        road.lane_center(ego.lane),
        road.lane_center(road.target_lane),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic_sim::{RoadConfig, WorldConfig};

    fn car(id: u64, y: f64, v: f64, lane: usize, road: &RoadConfig) -> VehicleState {
        VehicleState {
            id,
            y,
            v_y: v,
            a_y: 0.0,
            x: road.lane_center(lane),
            v_x: 0.0,
            lane,
            length: 5.0,
            width: 1.8,
        }
    }

    #[test]
    fn empty_road_uses_sentinels() {
        let cfg = WorldConfig::default();
        let road = cfg.road;
        let world = World::from_vehicles(cfg, car(0, 10.0, 22.0, 0, &road), vec![]);
        let obs = build_observation(&world).unwrap();
        assert_eq!(&obs.0[..5], &[10.0, 22.0, 0.0, 1.875, 0.0]);
        assert_eq!(
            obs.neighbor(Slot::C0),
            NeighborBlock {
                rel_y: 1e4,
                v_y: 22.0,
                a_y: 0.0,
                x: 1.875
            }
        );
        assert_eq!(
            obs.neighbor(Slot::C1),
            NeighborBlock {
                rel_y: 1e4,
                v_y: 22.0,
                a_y: 0.0,
                x: 5.625
            }
        );
        assert_eq!(obs.neighbor(Slot::C2).rel_y, -1e4);
        assert_eq!(obs.neighbor(Slot::C3).x, 5.625);
    }

    #[test]
    fn leader_block_is_read_directly() {
        let cfg = WorldConfig::default();
        let road = cfg.road;
        let mut leader = car(1, 130.0, 20.0, 0, &road);
        leader.a_y = -0.5;
        let world = World::from_vehicles(cfg, car(0, 100.0, 22.0, 0, &road), vec![leader]);
        let obs = build_observation(&world).unwrap();
        assert_eq!(
            obs.neighbor(Slot::C0),
            NeighborBlock {
                rel_y: 30.0,
                v_y: 20.0,
                a_y: -0.5,
                x: 1.875
            }
        );
    }

    #[test]
    fn normalized_features_are_bounded() {
        let cfg = WorldConfig::default();
        let world = World::from_vehicles(cfg, car(0, 10.0, 22.0, 0, &cfg.road), vec![]);
        let f = build_observation(&world).unwrap().normalized();
        assert_eq!(f.len(), OBS_DIM);
        assert!(f.iter().all(|v| v.abs() <= FEATURE_CLIP));
        assert_eq!(f[5], FEATURE_CLIP);
        assert_eq!(f[13], -FEATURE_CLIP);
    }
}
