//! Fundamental-diagram model: non-EMV link speeds and the discrete EMV
//! speed curve on a preemption lane.
//!
//! During preemption the lane the EMV travels on loses most of its usable
//! capacity (vehicles that cannot pull over block it), while the adjacent
//! lanes gain capacity because vehicles park along the curb. The EMV speed
//! is a decreasing step function of the blocking-vehicle count: free flow
//! with no blockers, never below the ordinary free-flow speed while the
//! lane still moves, zero once the reduced capacity is reached.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FdParams {
    /// EMV free-flow speed (m/s).
    pub emv_free_speed_mps: f64,
    /// Non-EMV free-flow speed (m/s).
    pub free_speed_mps: f64,
    /// Critical count F as a fraction of lane capacity.
    pub critical_ratio: f64,
    /// Reduced jam capacity of the preemption lane, as a fraction of x_max.
    pub preempt_capacity_ratio: f64,
    /// Extended capacity of adjacent lanes during preemption (curb parking),
    /// as a multiple of x_max.
    pub adjacent_capacity_ratio: f64,
    /// Fraction of vehicles on the preemption lane that relocate to adjacent
    /// lanes when the EMV enters, capacity permitting.
    pub pullover_fraction: f64,
}

impl Default for FdParams {
    fn default() -> Self {
        FdParams {
            emv_free_speed_mps: 12.0,
            free_speed_mps: 6.0,
            critical_ratio: 0.5,
            preempt_capacity_ratio: 0.5,
            adjacent_capacity_ratio: 1.3,
            pullover_fraction: 0.5,
        }
    }
}

impl FdParams {
    /// Checks F < H < I ordering and parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.emv_free_speed_mps > 0.0 && self.free_speed_mps > 0.0) {
            return Err(Error::InvalidArg("speeds must be positive".into()));
        }
        if self.emv_free_speed_mps < self.free_speed_mps {
            return Err(Error::InvalidArg("EMV free-flow speed below non-EMV free-flow speed".into()));
        }
        if !(self.critical_ratio > 0.0 && self.critical_ratio < 1.0) {
            return Err(Error::InvalidArg("critical_ratio must sit strictly between 0 and 1".into()));
        }
        if !(self.adjacent_capacity_ratio > 1.0) {
            return Err(Error::InvalidArg("adjacent capacity must exceed normal capacity".into()));
        }
        if !(self.preempt_capacity_ratio > 0.0 && self.preempt_capacity_ratio <= 1.0) {
            return Err(Error::InvalidArg("preempt_capacity_ratio out of range".into()));
        }
        if !(0.0..=1.0).contains(&self.pullover_fraction) {
            return Err(Error::InvalidArg("pullover_fraction out of range".into()));
        }
        Ok(())
    }

    /// Reduced jam capacity of a preemption lane with the given x_max.
    pub fn preempt_jam(&self, capacity: f64) -> f64 {
        (self.preempt_capacity_ratio * capacity).ceil().max(1.0)
    }

    /// Extended capacity of an adjacent lane during preemption.
    pub fn adjacent_capacity(&self, capacity: f64) -> f64 {
        self.adjacent_capacity_ratio * capacity
    }
}

/// EMV travel speed on a preemption lane with `blockers` vehicles in front.
/// Discrete, non-increasing, equals the EMV free-flow speed at zero
/// blockers, stays at or above the non-EMV free-flow speed until the
/// reduced capacity is hit, and is zero from there on.
pub fn emv_speed(blockers: f64, lane_capacity: f64, fd: &FdParams) -> Result<f64> {
    if blockers < 0.0 {
        return Err(Error::InvalidArg(format!("negative blocker count {blockers}")));
    }
    let jam = fd.preempt_jam(lane_capacity);
    let b = blockers.ceil();
    if b >= jam {
        return Ok(0.0);
    }
    Ok((fd.emv_free_speed_mps * (1.0 - b / jam)).max(fd.free_speed_mps))
}

/// Non-EMV speed from the triangular flow-count relation: free flow up to
/// the critical count F, then the congested branch declining toward jam.
/// Floored at 5% of free flow so a jammed lane still drains.
pub fn nonemv_speed(count: f64, lane_capacity: f64, fd: &FdParams) -> f64 {
    let f = fd.critical_ratio * lane_capacity;
    let h = lane_capacity;
    if count <= f {
        return fd.free_speed_mps;
    }
    let x = count.min(h);
    let v = fd.free_speed_mps * f * (h - x) / (x * (h - f));
    v.clamp(0.05 * fd.free_speed_mps, fd.free_speed_mps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emv_speed_endpoints() {
        let fd = FdParams::default();
        assert_eq!(emv_speed(0.0, 26.0, &fd).unwrap(), 12.0);
        let jam = fd.preempt_jam(26.0);
        assert_eq!(emv_speed(jam, 26.0, &fd).unwrap(), 0.0);
        assert_eq!(emv_speed(jam + 5.0, 26.0, &fd).unwrap(), 0.0);
        assert!(emv_speed(-1.0, 26.0, &fd).is_err());
    }

    #[test]
    fn emv_speed_is_non_increasing_and_above_traffic_speed() {
        let fd = FdParams::default();
        let jam = fd.preempt_jam(26.0) as usize;
        let mut last = f64::INFINITY;
        for b in 0..=jam + 3 {
            let v = emv_speed(b as f64, 26.0, &fd).unwrap();
            assert!(v <= last, "speed increased at {b}");
            if b < jam {
                assert!(v >= fd.free_speed_mps, "speed {v} below free flow at {b} blockers");
            } else {
                assert_eq!(v, 0.0);
            }
            last = v;
        }
    }

    #[test]
    fn nonemv_speed_free_then_congested() {
        let fd = FdParams::default();
        assert_eq!(nonemv_speed(0.0, 26.0, &fd), 6.0);
        assert_eq!(nonemv_speed(13.0, 26.0, &fd), 6.0);
        let v20 = nonemv_speed(20.0, 26.0, &fd);
        assert!(v20 < 6.0 && v20 > 0.0);
        assert!(nonemv_speed(26.0, 26.0, &fd) >= 0.05 * 6.0);
    }

    #[test]
    fn default_params_validate() {
        FdParams::default().validate().unwrap();
        let mut bad = FdParams::default();
        bad.adjacent_capacity_ratio = 0.9;
        assert!(bad.validate().is_err());
    }
}
