use crate::traffic_sim::LateralCommand;

/// Which leader feeds the ego's car-following controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LongitudinalCommand {
    FollowCurrentLeader = 0,
    FollowTargetLeader = 1,
}

impl LongitudinalCommand {
    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Self::FollowCurrentLeader),
            1 => Some(Self::FollowTargetLeader),
            _ => None,
        }
    }
}

/// Combined lateral × longitudinal decision; flat index = `lateral * 2 + longitudinal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionPair {
    pub lateral: LateralCommand,
    pub longitudinal: LongitudinalCommand,
}

impl ActionPair {
    pub const COUNT: usize = 6;

    pub const fn new(lateral: LateralCommand, longitudinal: LongitudinalCommand) -> Self {
        Self {
            lateral,
            longitudinal,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if index >= Self::COUNT {
            return None;
        }
        Some(Self {
            lateral: LateralCommand::from_index(index / 2)?,
            longitudinal: LongitudinalCommand::from_index(index % 2)?,
        })
    }

    pub fn index(self) -> usize {
        self.lateral as usize * 2 + self.longitudinal as usize
    }

    pub const KEEP: ActionPair = ActionPair::new(
        LateralCommand::Keep,
        LongitudinalCommand::FollowCurrentLeader,
    );
}
