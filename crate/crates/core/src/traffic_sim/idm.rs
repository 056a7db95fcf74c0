use serde::{Deserialize, Serialize};

use super::{clamp_accel, MAX_ACCEL};
use crate::error::{Error, Result};

/// Intelligent driver model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdmParams {
    /// Desired free-road speed (m/s).
    pub v0: f64,
    /// Desired time headway (s).
    pub time_headway: f64,
    /// Maximum acceleration (m/s²).
    pub a_max: f64,
    /// Comfortable deceleration (m/s², positive).
    pub b_comf: f64,
    /// Jam distance (m).
    pub s0: f64,
    /// Free-road acceleration exponent.
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 33.33,
            time_headway: 1.0,
            a_max: 2.5,
            b_comf: 2.0,
            s0: 2.0,
            delta: 4.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v0", self.v0),
            ("time_headway", self.time_headway),
            ("a_max", self.a_max),
            ("b_comf", self.b_comf),
            ("s0", self.s0),
            ("delta", self.delta),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "idm.{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if self.a_max > MAX_ACCEL {
            return Err(Error::Config(format!(
                "idm.a_max must be <= {MAX_ACCEL}, got {}",
                self.a_max
            )));
        }
        Ok(())
    }
}

/// IDM acceleration for speed `v`, bumper gap `gap` and closing speed `dv`
/// (`v - v_leader`), clamped to the vehicle limits.
pub fn idm_acceleration(v: f64, gap: f64, dv: f64, p: &IdmParams) -> Result<f64> {
    if !(v.is_finite() && gap.is_finite() && dv.is_finite()) {
        return Err(Error::Domain(format!(
            "idm inputs must be finite (v={v}, gap={gap}, dv={dv})"
        )));
    }
    if gap <= 0.0 || v < 0.0 {
        return Err(Error::Domain(format!(
            "idm requires gap > 0 and v >= 0 (v={v}, gap={gap})"
        )));
    }
    Ok(idm_unchecked(v, gap, dv, p))
}

pub(crate) fn idm_unchecked(v: f64, gap: f64, dv: f64, p: &IdmParams) -> f64 {
    let desired_gap = p.s0 + v * p.time_headway + v * dv / (2.0 * (p.a_max * p.b_comf).sqrt());
    let free = (v / p.v0).powf(p.delta);
    let interaction = (desired_gap / gap).powi(2);
    clamp_accel(p.a_max * (1.0 - free - interaction))
}
