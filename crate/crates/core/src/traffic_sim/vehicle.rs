/// Pose and kinematics of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub id: u64,
    /// Longitudinal position of the vehicle centre (m).
    pub y: f64,
    /// Longitudinal speed (m/s), never negative.
    pub v_y: f64,
    /// Longitudinal acceleration applied in the last step (m/s²).
    pub a_y: f64,
    /// Lateral position of the vehicle centre, from the right road edge (m).
    pub x: f64,
    /// Lateral speed (m/s).
    pub v_x: f64,
    pub lane: usize,
    pub length: f64,
    pub width: f64,
}

impl VehicleState {
    pub fn is_finite(&self) -> bool {
        [
            self.y,
            self.v_y,
            self.a_y,
            self.x,
            self.v_x,
            self.length,
            self.width,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Bumper-to-bumper longitudinal distance, floored at zero.
pub fn compute_gap(a: &VehicleState, b: &VehicleState) -> f64 {
    ((a.y - b.y).abs() - 0.5 * (a.length + b.length)).max(0.0)
}

/// Time until `follower` reaches `leader` at current speeds; `+inf` when not closing.
pub fn compute_ttc(follower: &VehicleState, leader: &VehicleState) -> f64 {
    let closing = follower.v_y - leader.v_y;
    if closing > 0.0 {
        compute_gap(follower, leader) / closing
    } else {
        f64::INFINITY
    }
}

/// Axis-aligned footprint overlap (strict, touching edges do not count).
pub fn rectangles_overlap(a: &VehicleState, b: &VehicleState) -> bool {
    (a.y - b.y).abs() < 0.5 * (a.length + b.length) && (a.x - b.x).abs() < 0.5 * (a.width + b.width)
}

/// Whether the two footprints share lateral extent, i.e. one can run into the other.
pub(crate) fn laterally_overlapping(a: &VehicleState, b: &VehicleState) -> bool {
    (a.x - b.x).abs() < 0.5 * (a.width + b.width)
}
