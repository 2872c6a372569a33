//! Demand profiles and turn policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Dir, LinkId, TrafficMap, Turn};

/// Piecewise-constant demand rate over a time window, per lane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateWindow {
    pub from_s: f64,
    pub to_s: f64,
    pub rate_veh_lane_hr: f64,
}

/// Demand profile for one entry link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkDemand {
    pub link: u32,
    pub windows: Vec<RateWindow>,
}

/// Probabilities of turning left/through/right at the head of a link.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TurnSplit {
    pub left: f64,
    pub through: f64,
    pub right: f64,
}

impl TurnSplit {
    pub fn get(&self, turn: Turn) -> f64 {
        match turn {
            Turn::Left => self.left,
            Turn::Through => self.through,
            Turn::Right => self.right,
        }
    }

    fn sum(&self) -> f64 {
        self.left + self.through + self.right
    }
}

/// Turn splits by link orientation. North/south links carry entering
/// traffic that mostly filters toward east/west exits, so they get a
/// heavier turning share than east/west links.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TurnPolicy {
    pub ns: TurnSplit,
    pub ew: TurnSplit,
}

impl Default for TurnPolicy {
    fn default() -> Self {
        TurnPolicy {
            ns: TurnSplit { left: 0.25, through: 0.5, right: 0.25 },
            ew: TurnSplit { left: 0.1, through: 0.8, right: 0.1 },
        }
    }
}

impl TurnPolicy {
    pub fn split_for(&self, map: &TrafficMap, link: LinkId) -> TurnSplit {
        match map.link_heading(link) {
            Dir::N | Dir::S => self.ns,
            Dir::E | Dir::W => self.ew,
        }
    }
}

/// Episode demand: per-entry-link rate profiles plus the turn policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSpec {
    pub demands: Vec<LinkDemand>,
    pub turns: TurnPolicy,
    pub episode_s: f64,
}

impl FlowSpec {
    pub fn empty(episode_s: f64) -> Self {
        FlowSpec { demands: Vec::new(), turns: TurnPolicy::default(), episode_s }
    }

    pub fn validate(&self, map: &TrafficMap) -> Result<()> {
        if !(self.episode_s > 0.0) {
            return Err(Error::Config("episode length must be positive".into()));
        }
        for split in [self.turns.ns, self.turns.ew] {
            if split.left < 0.0 || split.through < 0.0 || split.right < 0.0 {
                return Err(Error::Config("turn probabilities must be non-negative".into()));
            }
            if (split.sum() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("turn probabilities sum to {}", split.sum())));
            }
        }
        for d in &self.demands {
            let link = LinkId(d.link);
            if link.idx() >= map.links.len() {
                return Err(Error::Config(format!("demand references unknown link {}", d.link)));
            }
            if !map.is_entry_link(link) {
                return Err(Error::Config(format!(
                    "demand link {} is not an entry link",
                    map.link(link).name
                )));
            }
            for w in &d.windows {
                if w.rate_veh_lane_hr < 0.0 {
                    return Err(Error::Config("negative demand rate".into()));
                }
                if w.from_s >= w.to_s {
                    return Err(Error::Config("empty demand window".into()));
                }
            }
        }
        Ok(())
    }

    /// Demand rate (veh/lane/hr) on a link at time t.
    pub fn rate_at(&self, link: LinkId, t: f64) -> f64 {
        self.demands
            .iter()
            .filter(|d| d.link == link.0)
            .flat_map(|d| d.windows.iter())
            .filter(|w| t >= w.from_s && t < w.to_s)
            .map(|w| w.rate_veh_lane_hr)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::build_grid;

    #[test]
    fn rate_lookup_honors_windows() {
        let map = build_grid(2, 2, 1, 100.0).unwrap();
        let entry = map.entry_links()[0];
        let flow = FlowSpec {
            demands: vec![LinkDemand {
                link: entry.0,
                windows: vec![
                    RateWindow { from_s: 0.0, to_s: 400.0, rate_veh_lane_hr: 200.0 },
                    RateWindow { from_s: 400.0, to_s: 800.0, rate_veh_lane_hr: 240.0 },
                ],
            }],
            turns: TurnPolicy::default(),
            episode_s: 1200.0,
        };
        flow.validate(&map).unwrap();
        assert_eq!(flow.rate_at(entry, 0.0), 200.0);
        assert_eq!(flow.rate_at(entry, 400.0), 240.0);
        assert_eq!(flow.rate_at(entry, 800.0), 0.0);
    }

    #[test]
    fn validate_rejects_bad_specs() {
        let map = build_grid(2, 2, 1, 100.0).unwrap();
        let mut flow = FlowSpec::empty(100.0);
        flow.turns.ns.left = 0.9;
        assert!(flow.validate(&map).is_err());

        let mut flow = FlowSpec::empty(100.0);
        let not_entry = map
            .links
            .iter()
            .find(|l| !map.is_entry_link(l.id))
            .unwrap()
            .id;
        flow.demands.push(LinkDemand {
            link: not_entry.0,
            windows: vec![RateWindow { from_s: 0.0, to_s: 10.0, rate_veh_lane_hr: 100.0 }],
        });
        assert!(flow.validate(&map).is_err());
    }
}
