//! Per-step trajectory log and bit-exact replay.
//!
//! Columns (header row first, fixed order):
//!
//! ```text
//! seed,step,y,x,v_y,v_x,a_y,action,filtered_action,intervened,
//! r_comf,r_time,r_lane,r_speed,r_eff,r_near,r_collision,r_penalty,r_safety,r_total,done,status
//! ```
//!
//! One file holds one episode. `step` counts from 1; the state columns describe
//! the ego after the step. Floats are written in shortest round-trip form, so
//! parsing a log recovers the exact bits. `status` is `running` until the final row.

use std::io::{BufRead, Write};

use super::lane_change::{EpisodeStatus, LaneChangeEnv, StepResult};
use super::reward::RewardBreakdown;
use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: &str = "seed,step,y,x,v_y,v_x,a_y,action,filtered_action,intervened,\
r_comf,r_time,r_lane,r_speed,r_eff,r_near,r_collision,r_penalty,r_safety,r_total,done,status";

const N_COLUMNS: usize = 22;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub step: usize,
    pub y: f64,
    pub x: f64,
    pub v_y: f64,
    pub v_x: f64,
    pub a_y: f64,
    pub action: usize,
    pub filtered_action: usize,
    pub intervened: bool,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub status: Option<EpisodeStatus>,
}

impl TrajectoryRecord {
    pub fn from_step(seed: u64, step: usize, result: &StepResult) -> Self {
        let o = &result.observation;
        Self {
            seed,
            step,
            y: o.ego_y(),
            x: o.ego_x(),
            v_y: o.ego_v_y(),
            v_x: o.ego_v_x(),
            a_y: o.ego_a_y(),
            action: result.proposed.index(),
            filtered_action: result.executed.index(),
            intervened: result.intervened,
            reward: result.reward,
            done: result.done,
            status: result.outcome.map(|o| o.status),
        }
    }

    pub fn to_csv_row(&self) -> String {
        let mut fields = vec![
            self.seed.to_string(),
            self.step.to_string(),
            self.y.to_string(),
            self.x.to_string(),
            self.v_y.to_string(),
            self.v_x.to_string(),
            self.a_y.to_string(),
            self.action.to_string(),
            self.filtered_action.to_string(),
            u8::from(self.intervened).to_string(),
        ];
        fields.extend(self.reward.values().iter().map(f64::to_string));
        fields.push(u8::from(self.done).to_string());
        fields.push(
            self.status
                .map_or("running", EpisodeStatus::as_str)
                .to_string(),
        );
        fields.join(",")
    }

    fn parse_row(line: &str, line_no: usize) -> Result<Self> {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != N_COLUMNS {
            return Err(Error::Csv {
                line: line_no,
                detail: format!("expected {N_COLUMNS} columns, found {}", cols.len()),
            });
        }
        let err = |name: &str, value: &str| Error::Csv {
            line: line_no,
            detail: format!("column `{name}` has invalid value `{value}`"),
        };
        let names: Vec<&str> = TRAJECTORY_HEADER.split(',').collect();
        let float = |i: usize| cols[i].parse::<f64>().map_err(|_| err(names[i], cols[i]));
        let int = |i: usize| cols[i].parse::<u64>().map_err(|_| err(names[i], cols[i]));
        let flag = |i: usize| match cols[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(err(names[i], other)),
        };
        let mut reward = [0.0; 10];
        for (k, slot) in reward.iter_mut().enumerate() {
            *slot = float(10 + k)?;
        }
        let status = match cols[21] {
            "running" => None,
            s => Some(EpisodeStatus::parse(s).ok_or_else(|| err("status", s))?),
        };
        Ok(Self {
            seed: int(0)?,
            step: int(1)? as usize,
            y: float(2)?,
            x: float(3)?,
            v_y: float(4)?,
            v_x: float(5)?,
            a_y: float(6)?,
            action: int(7)? as usize,
            filtered_action: int(8)? as usize,
            intervened: flag(9)?,
            reward: RewardBreakdown::from_values(reward),
            done: flag(20)?,
            status,
        })
    }

    /// Name of the first field that differs bit-wise from `other`.
    fn first_difference(&self, other: &Self) -> Option<String> {
        let floats = [
            ("y", self.y, other.y),
            ("x", self.x, other.x),
            ("v_y", self.v_y, other.v_y),
            ("v_x", self.v_x, other.v_x),
            ("a_y", self.a_y, other.a_y),
        ];
        for (name, a, b) in floats {
            if a.to_bits() != b.to_bits() {
                return Some(format!("{name}: logged {a}, recomputed {b}"));
            }
        }
        if self.filtered_action != other.filtered_action {
            return Some(format!(
                "filtered_action: logged {}, recomputed {}",
                self.filtered_action, other.filtered_action
            ));
        }
        if self.intervened != other.intervened {
            return Some("intervened flag".into());
        }
        for ((name, a), b) in RewardBreakdown::FIELDS
            .iter()
            .zip(self.reward.values())
            .zip(other.reward.values())
        {
            if a.to_bits() != b.to_bits() {
                return Some(format!("{name}: logged {a}, recomputed {b}"));
            }
        }
        if self.done != other.done || self.status != other.status {
            return Some("done/status".into());
        }
        None
    }
}

pub fn write_trajectory<W: Write>(mut out: W, records: &[TrajectoryRecord]) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory<R: BufRead>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != TRAJECTORY_HEADER {
        return Err(Error::Csv {
            line: 1,
            detail: "missing or unexpected trajectory header".into(),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(TrajectoryRecord::parse_row(line.trim_end(), i + 2)?);
    }
    Ok(records)
}

/// Re-runs the logged episode from its seed with the logged proposed actions and
/// checks every recorded field bit for bit.
pub fn replay(env: &mut LaneChangeEnv, records: &[TrajectoryRecord]) -> Result<()> {
    let Some(first) = records.first() else {
        return Err(Error::Csv {
            line: 2,
            detail: "trajectory log has no steps".into(),
        });
    };
    let seed = first.seed;
    env.reset(seed);
    for (i, logged) in records.iter().enumerate() {
        if logged.seed != seed || logged.step != i + 1 {
            return Err(Error::Divergence {
                step: logged.step,
                detail: format!("row {} breaks the seed/step sequence", i + 2),
            });
        }
        let result = env.step(logged.action).map_err(|e| Error::Divergence {
            step: logged.step,
            detail: e.to_string(),
        })?;
        let recomputed = TrajectoryRecord::from_step(seed, i + 1, &result);
        if let Some(diff) = logged.first_difference(&recomputed) {
            return Err(Error::Divergence {
                step: logged.step,
                detail: diff,
            });
        }
    }
    Ok(())
}
