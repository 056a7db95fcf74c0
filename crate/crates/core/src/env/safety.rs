use super::action::{ActionPair, LongitudinalCommand};
use super::reward::EnvConfig;
use crate::error::Result;
use crate::traffic_sim::{
    compute_gap, compute_ttc, find_neighbors, LateralCommand, NeighborSet, RoadConfig,
    VehicleState, World,
};

/// Whether a proposed change would enter a target-lane slot that is too short or
/// closing too fast.
pub fn is_catastrophic(
    ego: &VehicleState,
    neighbors: &NeighborSet,
    proposed: ActionPair,
    cfg: &EnvConfig,
) -> bool {
    if proposed.lateral != LateralCommand::Change {
        return false;
    }
    let leader_unsafe = neighbors
        .c1
        .as_ref()
        .is_some_and(|c1| compute_gap(ego, c1) < cfg.gap_min || compute_ttc(ego, c1) < cfg.ttc_min);
    let follower_unsafe = neighbors
        .c3
        .as_ref()
        .is_some_and(|c3| compute_gap(ego, c3) < cfg.gap_min || compute_ttc(c3, ego) < cfg.ttc_min);
    leader_unsafe || follower_unsafe
}

/// Following the target-lane leader ignores the car ahead in the ego's own lane,
/// so until the ego is on the target lane that command is screened against C0.
pub fn ignores_unsafe_leader(
    ego: &VehicleState,
    neighbors: &NeighborSet,
    road: &RoadConfig,
    proposed: ActionPair,
    cfg: &EnvConfig,
) -> bool {
    proposed.longitudinal == LongitudinalCommand::FollowTargetLeader
        && ego.lane != road.target_lane
        && neighbors.c0.as_ref().is_some_and(|c0| {
            compute_gap(ego, c0) < cfg.gap_min || compute_ttc(ego, c0) < cfg.ttc_min
        })
}

/// A change is in progress while the ego is off-centre between the start and
/// target lanes. Abort can still return it to the start lane from there.
pub fn change_in_progress(ego: &VehicleState, road: &RoadConfig) -> bool {
    between_centres(ego.x, road)
}

/// `x` lies strictly between the start and target lane centres, on either side
/// of the lane boundary.
pub fn between_centres(x: f64, road: &RoadConfig) -> bool {
    let a = road.lane_center(road.ego_start_lane);
    let b = road.lane_center(road.target_lane);
    x > a.min(b) + 1e-9 && x < a.max(b) - 1e-9
}

/// Whether `lateral` moves the ego toward the target lane this step. Keep does
/// while a change is in flight, since it lets the maneuver run on.
pub fn advances_change(ego: &VehicleState, road: &RoadConfig, lateral: LateralCommand) -> bool {
    match lateral {
        LateralCommand::Change => true,
        LateralCommand::Abort => false,
        LateralCommand::Keep => {
            let to_target = road.lane_center(road.target_lane) - ego.x;
            ego.v_x != 0.0 && ego.v_x.signum() == to_target.signum() && to_target.abs() > 1e-9
        }
    }
}

/// Replaces a catastrophic change with abort (mid-maneuver) or keep, following the
/// current-lane leader. Otherwise an unsafe choice of leader is swapped for the
/// current-lane one. Returns the executed action and whether it was altered.
pub fn filter_action(
    ego: &VehicleState,
    neighbors: &NeighborSet,
    road: &RoadConfig,
    proposed: ActionPair,
    cfg: &EnvConfig,
) -> (ActionPair, bool) {
    let screened = if advances_change(ego, road, proposed.lateral) {
        ActionPair::new(LateralCommand::Change, proposed.longitudinal)
    } else {
        proposed
    };
    if !is_catastrophic(ego, neighbors, screened, cfg) {
        if ignores_unsafe_leader(ego, neighbors, road, proposed, cfg) {
            return (
                ActionPair::new(proposed.lateral, LongitudinalCommand::FollowCurrentLeader),
                true,
            );
        }
        return (proposed, false);
    }
    let lateral = if change_in_progress(ego, road) {
        LateralCommand::Abort
    } else {
        LateralCommand::Keep
    };
    (
        ActionPair::new(lateral, LongitudinalCommand::FollowCurrentLeader),
        true,
    )
}

pub fn safety_filter(
    world: &World,
    proposed: ActionPair,
    cfg: &EnvConfig,
) -> Result<(ActionPair, bool)> {
    let road = world.config().road;
    let ego = world.ego();
    let neighbors = find_neighbors(world, ego.id, road.target_lane)?;
    Ok(filter_action(ego, &neighbors, &road, proposed, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic_sim::WorldConfig;

    fn car(id: u64, y: f64, v: f64, lane: usize) -> VehicleState {
        let road = RoadConfig::default();
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

    const CHANGE: ActionPair = ActionPair::new(
        LateralCommand::Change,
        LongitudinalCommand::FollowTargetLeader,
    );

    #[test]
    fn clear_gaps_pass_unchanged() {
        let cfg = WorldConfig::default();
        let world = World::from_vehicles(
            cfg,
            car(0, 100.0, 25.0, 0),
            vec![car(1, 155.0, 25.0, 1), car(2, 45.0, 25.0, 1)],
        );
        let (action, intervened) = safety_filter(&world, CHANGE, &EnvConfig::default()).unwrap();
        assert_eq!(action, CHANGE);
        assert!(!intervened);
    }

    #[test]
    fn short_follower_gap_is_replaced() {
        let cfg = WorldConfig::default();
        let world = World::from_vehicles(
            cfg,
            car(0, 100.0, 25.0, 0),
            vec![car(1, 155.0, 25.0, 1), car(2, 93.0, 25.0, 1)],
        );
        let (action, intervened) = safety_filter(&world, CHANGE, &EnvConfig::default()).unwrap();
        assert!(intervened);
        assert_eq!(action, ActionPair::KEEP);
    }

    #[test]
    fn mid_change_replacement_is_abort() {
        let road = RoadConfig::default();
        let mut ego = car(0, 100.0, 25.0, 0);
        ego.x = 3.0;
        // Follower closing at 10 m/s with 20 m bumper gap: ttc 2 s is fine, 15 m/s is not.
        let neighbors = NeighborSet {
            c3: Some(car(2, 75.0, 40.0, 1)),
            ..Default::default()
        };
        let (action, intervened) =
            filter_action(&ego, &neighbors, &road, CHANGE, &EnvConfig::default());
        assert!(intervened);
        assert_eq!(action.lateral, LateralCommand::Abort);
        assert_eq!(
            action.longitudinal,
            LongitudinalCommand::FollowCurrentLeader
        );
    }

    #[test]
    fn past_the_lane_boundary_the_replacement_is_still_abort() {
        let road = RoadConfig::default();
        let mut ego = car(0, 100.0, 25.0, 0);
        ego.x = 4.0;
        ego.lane = road.lane_of(ego.x);
        ego.v_x = 0.75;
        assert_eq!(ego.lane, road.target_lane);
        let neighbors = NeighborSet {
            c3: Some(car(2, 96.0, 25.0, 1)),
            ..Default::default()
        };
        let (action, intervened) = filter_action(
            &ego,
            &neighbors,
            &road,
            ActionPair::KEEP,
            &EnvConfig::default(),
        );
        assert!(intervened);
        assert_eq!(action.lateral, LateralCommand::Abort);
    }

    #[test]
    fn keep_in_flight_is_screened_like_a_change() {
        let road = RoadConfig::default();
        let mut ego = car(0, 100.0, 25.0, 0);
        ego.x = 3.0;
        ego.v_x = 0.75;
        let neighbors = NeighborSet {
            c3: Some(car(2, 97.0, 25.0, 1)),
            ..Default::default()
        };
        let (action, intervened) = filter_action(
            &ego,
            &neighbors,
            &road,
            ActionPair::KEEP,
            &EnvConfig::default(),
        );
        assert!(intervened);
        assert_eq!(action.lateral, LateralCommand::Abort);
    }

    #[test]
    fn closing_on_the_current_leader_forces_following_it() {
        let road = RoadConfig::default();
        let ego = car(0, 100.0, 10.0, 0);
        // 10 m bumper gap closing at 6 m/s: ttc 1.67 s.
        let neighbors = NeighborSet {
            c0: Some(car(3, 115.0, 4.0, 0)),
            ..Default::default()
        };
        let (action, intervened) =
            filter_action(&ego, &neighbors, &road, CHANGE, &EnvConfig::default());
        assert!(intervened);
        assert_eq!(
            action,
            ActionPair::new(
                LateralCommand::Change,
                LongitudinalCommand::FollowCurrentLeader
            )
        );
        let calm = ActionPair::new(
            LateralCommand::Change,
            LongitudinalCommand::FollowCurrentLeader,
        );
        assert_eq!(
            filter_action(&ego, &neighbors, &road, calm, &EnvConfig::default()),
            (calm, false)
        );

        // On the target lane C0 and C1 are the same car, so there is nothing to screen.
        let mut arrived = ego;
        arrived.lane = road.target_lane;
        arrived.x = road.lane_center(road.target_lane);
        let neighbors = NeighborSet {
            c0: Some(car(3, 115.0, 4.0, 1)),
            c1: Some(car(3, 115.0, 4.0, 1)),
            ..Default::default()
        };
        let follow = ActionPair::new(
            LateralCommand::Keep,
            LongitudinalCommand::FollowTargetLeader,
        );
        assert_eq!(
            filter_action(&arrived, &neighbors, &road, follow, &EnvConfig::default()),
            (follow, false)
        );
    }

    #[test]
    fn non_change_actions_are_never_altered() {
        let road = RoadConfig::default();
        let ego = car(0, 100.0, 25.0, 0);
        let neighbors = NeighborSet {
            c1: Some(car(1, 101.0, 25.0, 1)),
            c3: Some(car(2, 99.0, 25.0, 1)),
            ..Default::default()
        };
        for index in [0, 1, 4, 5] {
            let proposed = ActionPair::from_index(index).unwrap();
            let (action, intervened) =
                filter_action(&ego, &neighbors, &road, proposed, &EnvConfig::default());
            assert_eq!(action, proposed);
            assert!(!intervened);
        }
    }
}
