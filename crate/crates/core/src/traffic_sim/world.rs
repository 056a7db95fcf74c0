use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::idm::{idm_unchecked, IdmParams};
use super::lateral::{lateral_step, LateralCommand};
use super::road::RoadConfig;
use super::vehicle::{compute_gap, laterally_overlapping, rectangles_overlap, VehicleState};
use super::{clamp_accel, NO_LEADER_GAP};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Traffic enters the segment this far upstream of the ego start position (m).
pub const ENTRY_OFFSET: f64 = 250.0;
/// Vehicles are removed once they are this far past the segment end (m).
pub const DEPARTURE_MARGIN: f64 = 200.0;

/// Smallest bumper gap handed to the IDM when vehicles touch.
const MIN_IDM_GAP: f64 = 0.01;
/// A spawned vehicle never enters faster than a leader closer than this (m).
const SPAWN_SPEED_MATCH_GAP: f64 = 60.0;

/// Stochastic traffic demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficGenConfig {
    /// Expected arrivals per lane per second at the upstream entry.
    pub arrival_rate_per_lane: f64,
    /// Lower bound of entry/desired speeds (m/s).
    pub speed_min: f64,
    /// Upper bound of entry/desired speeds (m/s).
    pub speed_max: f64,
    /// Arrivals are suppressed while the entry gap is below this (m).
    pub min_spawn_gap: f64,
    /// Simulated time used to settle the initial traffic before the ego enters (s).
    pub warmup_time: f64,
    /// Lane `i` draws speeds from the range shifted up by `i * lane_speed_step` (m/s).
    pub lane_speed_step: f64,
}

impl Default for TrafficGenConfig {
    fn default() -> Self {
        Self {
            arrival_rate_per_lane: 0.5,
            speed_min: 4.0,
            speed_max: 10.0,
            min_spawn_gap: 25.0,
            warmup_time: 20.0,
            lane_speed_step: 0.0,
        }
    }
}

impl TrafficGenConfig {
    pub fn validate(&self, idm: &IdmParams, n_lanes: usize) -> Result<()> {
        if !(self.arrival_rate_per_lane.is_finite() && self.arrival_rate_per_lane >= 0.0) {
            return Err(Error::Config(
                "traffic.arrival_rate_per_lane must be >= 0".into(),
            ));
        }
        if !(self.speed_min >= 0.0 && self.speed_min <= self.speed_max && self.speed_max <= idm.v0)
        {
            return Err(Error::Config(format!(
                "traffic speed range must satisfy 0 <= speed_min <= speed_max <= idm.v0 ({})",
                idm.v0
            )));
        }
        if !(self.min_spawn_gap.is_finite() && self.min_spawn_gap > 0.0) {
            return Err(Error::Config("traffic.min_spawn_gap must be > 0".into()));
        }
        if !(self.warmup_time.is_finite() && self.warmup_time >= 0.0) {
            return Err(Error::Config("traffic.warmup_time must be >= 0".into()));
        }
        let top = self.speed_max + self.lane_speed_step * n_lanes.saturating_sub(1) as f64;
        if !(self.lane_speed_step >= 0.0 && top <= idm.v0) {
            return Err(Error::Config(format!(
                "traffic.lane_speed_step must be >= 0 and keep the fastest lane within idm.v0 ({})",
                idm.v0
            )));
        }
        Ok(())
    }
}

/// Everything needed to build a world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub road: RoadConfig,
    pub idm: IdmParams,
    pub traffic: TrafficGenConfig,
    /// Simulation step (s).
    pub dt: f64,
    /// Ego lateral speed during a maneuver (m/s).
    pub lateral_speed: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            road: RoadConfig::default(),
            idm: IdmParams::default(),
            traffic: TrafficGenConfig::default(),
            dt: 0.1,
            lateral_speed: 0.75,
            vehicle_length: 5.0,
            vehicle_width: 1.8,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        self.road.validate()?;
        self.idm.validate()?;
        self.traffic.validate(&self.idm, self.road.n_lanes)?;
        for (name, value) in [
            ("dt", self.dt),
            ("lateral_speed", self.lateral_speed),
            ("vehicle_length", self.vehicle_length),
            ("vehicle_width", self.vehicle_width),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "sim.{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if self.vehicle_width >= self.road.lane_width {
            return Err(Error::Config(
                "sim.vehicle_width must be below road.lane_width".into(),
            ));
        }
        Ok(())
    }
}

/// The four vehicles around the ego that the decision layer reasons about.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeighborSet {
    /// Current-lane leader.
    pub c0: Option<VehicleState>,
    /// Target-lane leader.
    pub c1: Option<VehicleState>,
    /// Current-lane follower.
    pub c2: Option<VehicleState>,
    /// Target-lane follower.
    pub c3: Option<VehicleState>,
}

impl NeighborSet {
    pub fn slots(&self) -> [Option<&VehicleState>; 4] {
        [
            self.c0.as_ref(),
            self.c1.as_ref(),
            self.c2.as_ref(),
            self.c3.as_ref(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionKind {
    RearEnd,
    SideImpact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub kind: CollisionKind,
    pub other_id: u64,
    pub time: f64,
}

#[derive(Debug, Clone)]
struct Vehicle {
    state: VehicleState,
    desired_speed: f64,
}

/// A single highway instance: one ego plus IDM traffic.
#[derive(Debug, Clone)]
pub struct World {
    cfg: WorldConfig,
    ego: VehicleState,
    ego_present: bool,
    others: Vec<Vehicle>,
    time: f64,
    next_id: u64,
    spawning: bool,
    rng: ChaCha8Rng,
}

pub const EGO_ID: u64 = 0;

impl World {
    /// Populates the road, lets traffic settle for `warmup_time`, then inserts the
    /// ego at `y = 0` on its start lane.
    pub fn generate(cfg: WorldConfig, seed: u64) -> World {
        let mut world = World {
            cfg,
            ego: VehicleState {
                id: EGO_ID,
                y: 0.0,
                v_y: 0.0,
                a_y: 0.0,
                x: cfg.road.lane_center(cfg.road.ego_start_lane),
                v_x: 0.0,
                lane: cfg.road.ego_start_lane,
                length: cfg.vehicle_length,
                width: cfg.vehicle_width,
            },
            ego_present: false,
            others: Vec::new(),
            time: 0.0,
            next_id: EGO_ID + 1,
            spawning: true,
            rng: seed::rng(seed, Stream::Traffic, 0),
        };
        world.populate();
        let warmup_steps = (cfg.traffic.warmup_time / cfg.dt).round() as usize;
        for _ in 0..warmup_steps {
            world.advance_traffic(cfg.dt);
        }
        world.insert_ego();
        world.time = 0.0;
        world
    }

    /// A world with an explicit vehicle list and no arrivals; surrounding vehicles
    /// use `idm.v0` as their desired speed.
    pub fn from_vehicles(cfg: WorldConfig, ego: VehicleState, others: Vec<VehicleState>) -> World {
        let desired = cfg.idm.v0;
        let next_id = others
            .iter()
            .map(|v| v.id)
            .chain([ego.id])
            .max()
            .unwrap_or(0)
            + 1;
        World {
            cfg,
            ego,
            ego_present: true,
            others: others
                .into_iter()
                .map(|state| Vehicle {
                    state,
                    desired_speed: desired,
                })
                .collect(),
            time: 0.0,
            next_id,
            spawning: false,
            rng: seed::rng(0, Stream::Traffic, 0),
        }
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn ego(&self) -> &VehicleState {
        &self.ego
    }

    pub fn others(&self) -> impl Iterator<Item = &VehicleState> + '_ {
        self.others.iter().map(|v| &v.state)
    }

    pub fn vehicle(&self, id: u64) -> Option<&VehicleState> {
        if id == self.ego.id {
            return Some(&self.ego);
        }
        self.others().find(|v| v.id == id)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_spawning(&mut self, enabled: bool) {
        self.spawning = enabled;
    }

    /// Number of overlapping footprint pairs among all vehicles, ego included.
    pub fn overlapping_pairs(&self) -> usize {
        let all: Vec<&VehicleState> = std::iter::once(&self.ego).chain(self.others()).collect();
        let mut count = 0;
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if rectangles_overlap(all[i], all[j]) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Advances one step: the ego applies `ego_accel` (clamped) and `lateral`,
    /// every other vehicle follows its own leader with the IDM.
    pub fn step(
        &mut self,
        ego_accel: f64,
        lateral: LateralCommand,
        dt: f64,
    ) -> Vec<CollisionEvent> {
        let accels = self.traffic_accelerations();
        let road = self.cfg.road;
        let mut ego = lateral_step(&self.ego, lateral, &road, self.cfg.lateral_speed, dt);
        integrate(&mut ego, clamp_accel(ego_accel), dt);
        self.ego = ego;
        self.integrate_traffic(&accels, dt);
        self.after_move(dt);
        self.collisions()
    }

    fn advance_traffic(&mut self, dt: f64) {
        let accels = self.traffic_accelerations();
        self.integrate_traffic(&accels, dt);
        self.after_move(dt);
    }

    fn integrate_traffic(&mut self, accels: &[f64], dt: f64) {
        for (vehicle, &a) in self.others.iter_mut().zip(accels) {
            integrate(&mut vehicle.state, a, dt);
        }
    }

    fn after_move(&mut self, dt: f64) {
        let limit = self.cfg.road.segment_length + DEPARTURE_MARGIN;
        self.others.retain(|v| v.state.y <= limit);
        if self.spawning {
            self.spawn_arrivals(dt);
        }
        self.time += dt;
    }

    /// IDM acceleration of every surrounding vehicle toward the nearest vehicle
    /// ahead in its lane (which may be the ego once its lane index matches).
    fn traffic_accelerations(&self) -> Vec<f64> {
        let ego_slot = usize::MAX;
        let mut order: Vec<usize> = (0..self.others.len()).collect();
        if self.ego_present {
            order.push(ego_slot);
        }
        let state_of = |slot: usize| -> &VehicleState {
            if slot == ego_slot {
                &self.ego
            } else {
                &self.others[slot].state
            }
        };
        order.sort_by(|&a, &b| {
            let (sa, sb) = (state_of(a), state_of(b));
            sa.y.total_cmp(&sb.y).then(sa.id.cmp(&sb.id))
        });

        let mut accels = vec![0.0; self.others.len()];
        for (rank, &slot) in order.iter().enumerate() {
            if slot == ego_slot {
                continue;
            }
            let vehicle = &self.others[slot];
            let me = &vehicle.state;
            let leader = order[rank + 1..]
                .iter()
                .map(|&s| state_of(s))
                .find(|other| other.y > me.y && other.lane == me.lane);
            let (gap, dv) = match leader {
                Some(l) => (compute_gap(me, l).max(MIN_IDM_GAP), me.v_y - l.v_y),
                None => (NO_LEADER_GAP, 0.0),
            };
            let params = IdmParams {
                v0: vehicle.desired_speed,
                ..self.cfg.idm
            };
            accels[slot] = idm_unchecked(me.v_y, gap, dv, &params);
        }
        accels
    }

    fn collisions(&self) -> Vec<CollisionEvent> {
        self.others()
            .filter(|other| rectangles_overlap(&self.ego, other))
            .map(|other| {
                let aligned = (self.ego.x - other.x).abs() < 0.5 * self.ego.width.min(other.width);
                CollisionEvent {
                    kind: if aligned {
                        CollisionKind::RearEnd
                    } else {
                        CollisionKind::SideImpact
                    },
                    other_id: other.id,
                    time: self.time,
                }
            })
            .collect()
    }

    fn new_vehicle(&mut self, lane: usize, y: f64, speed: f64, desired_speed: f64) -> Vehicle {
        let id = self.next_id;
        self.next_id += 1;
        Vehicle {
            state: VehicleState {
                id,
                y,
                v_y: speed,
                a_y: 0.0,
                x: self.cfg.road.lane_center(lane),
                v_x: 0.0,
                lane,
                length: self.cfg.vehicle_length,
                width: self.cfg.vehicle_width,
            },
            desired_speed,
        }
    }

    fn sample_speed(&mut self, lane: usize) -> f64 {
        let t = &self.cfg.traffic;
        let shift = t.lane_speed_step * lane as f64;
        if t.speed_max > t.speed_min {
            shift + self.rng.gen_range(t.speed_min..t.speed_max)
        } else {
            shift + t.speed_min
        }
    }

    /// Initial fill from the downstream end back to the entry with randomized spacing
    /// whose mean matches the arrival rate at the mean speed.
    fn populate(&mut self) {
        let t = self.cfg.traffic;
        if t.arrival_rate_per_lane <= 0.0 {
            return;
        }
        let length = self.cfg.vehicle_length;
        let top = self.cfg.road.segment_length + DEPARTURE_MARGIN;
        for lane in 0..self.cfg.road.n_lanes {
            let mean_speed = 0.5 * (t.speed_min + t.speed_max) + t.lane_speed_step * lane as f64;
            let mean_extra =
                (mean_speed / t.arrival_rate_per_lane - length - t.min_spawn_gap).max(0.0);
            let mut y = top
                - self
                    .rng
                    .gen_range(0.0..(length + t.min_spawn_gap + mean_extra));
            let mut leader_speed = f64::INFINITY;
            while y > -ENTRY_OFFSET {
                let desired = self.sample_speed(lane);
                let speed = desired.min(leader_speed);
                let vehicle = self.new_vehicle(lane, y, speed, desired);
                self.others.push(vehicle);
                leader_speed = speed;
                let u: f64 = self.rng.gen();
                let extra = -mean_extra * (1.0 - u).ln();
                y -= length + t.min_spawn_gap + extra;
            }
        }
    }

    /// Bernoulli arrivals (probability `rate * dt` per lane per step) at the entry.
    fn spawn_arrivals(&mut self, dt: f64) {
        let t = self.cfg.traffic;
        let entry = -ENTRY_OFFSET;
        for lane in 0..self.cfg.road.n_lanes {
            let u: f64 = self.rng.gen();
            if u >= t.arrival_rate_per_lane * dt {
                continue;
            }
            let probe = self.new_probe(lane, entry);
            let nearest = self
                .all_states()
                .filter(|v| laterally_overlapping(&probe, v))
                .map(|v| (compute_gap(&probe, v), v.y >= entry, v.v_y))
                .fold(None::<(f64, bool, f64)>, |best, cur| match best {
                    Some(b) if b.0 <= cur.0 => Some(b),
                    _ => Some(cur),
                });
            if let Some((gap, _, _)) = nearest {
                if gap < t.min_spawn_gap {
                    continue;
                }
            }
            let desired = self.sample_speed(lane);
            let mut speed = desired;
            if let Some((gap, ahead, leader_speed)) = nearest {
                if ahead && gap < SPAWN_SPEED_MATCH_GAP {
                    speed = speed.min(leader_speed);
                }
            }
            let vehicle = self.new_vehicle(lane, entry, speed, desired);
            self.others.push(vehicle);
        }
    }

    fn new_probe(&self, lane: usize, y: f64) -> VehicleState {
        VehicleState {
            id: u64::MAX,
            y,
            v_y: 0.0,
            a_y: 0.0,
            x: self.cfg.road.lane_center(lane),
            v_x: 0.0,
            lane,
            length: self.cfg.vehicle_length,
            width: self.cfg.vehicle_width,
        }
    }

    fn all_states(&self) -> impl Iterator<Item = &VehicleState> + '_ {
        let ego = self.ego_present.then_some(&self.ego);
        ego.into_iter().chain(self.others())
    }

    fn insert_ego(&mut self) {
        let road = self.cfg.road;
        let clearance = self.cfg.traffic.min_spawn_gap;
        let mut ego = self.new_probe(road.ego_start_lane, 0.0);
        ego.id = EGO_ID;
        self.others
            .retain(|v| !(v.state.lane == ego.lane && compute_gap(&v.state, &ego) < clearance));
        let mut speed = self.sample_speed(road.ego_start_lane);
        let leader = self
            .others()
            .filter(|v| v.lane == ego.lane && v.y > ego.y)
            .min_by(|a, b| a.y.total_cmp(&b.y));
        if let Some(leader) = leader {
            speed = speed.min(leader.v_y);
        }
        ego.v_y = speed;
        self.ego = ego;
        self.ego_present = true;
    }
}

/// Semi-implicit Euler: speed first (never negative), then position.
fn integrate(state: &mut VehicleState, accel: f64, dt: f64) {
    state.a_y = accel;
    state.v_y = (state.v_y + accel * dt).max(0.0);
    state.y += state.v_y * dt;
}

/// Nearest leader and follower of vehicle `ego_id` in its own lane and in `target_lane`.
///
/// Leaders are strictly ahead; followers are level or behind.
pub fn find_neighbors(world: &World, ego_id: u64, target_lane: usize) -> Result<NeighborSet> {
    let subject = *world
        .vehicle(ego_id)
        .ok_or_else(|| Error::Usage(format!("vehicle {ego_id} is not in the world")))?;
    let mut set = NeighborSet::default();
    let candidates = std::iter::once(&world.ego)
        .chain(world.others())
        .filter(|v| v.id != subject.id);
    for v in candidates {
        let ahead = v.y > subject.y;
        let dist = (v.y - subject.y).abs();
        let consider = |slot: &mut Option<VehicleState>| {
            if slot.map_or(true, |s| dist < (s.y - subject.y).abs()) {
                *slot = Some(*v);
            }
        };
        if v.lane == subject.lane {
            consider(if ahead { &mut set.c0 } else { &mut set.c2 });
        }
        if v.lane == target_lane {
            consider(if ahead { &mut set.c1 } else { &mut set.c3 });
        }
    }
    Ok(set)
}
