//! Discrete-time mesoscopic traffic dynamics.
//!
//! Lanes hold FIFO cohorts of (fractional) vehicles. Each step, lanes
//! discharge through the movements permitted by the active signal phase at
//! up to saturation flow, limited by downstream headroom (spillback blocks
//! the upstream queue rather than overfilling a lane). A cohort becomes
//! dischargeable only after the intra-link travel time implied by the
//! fundamental diagram, so trip times include both running and queueing
//! delay. Demand accumulates fractionally at entry stubs and releases whole
//! vehicles. The EMV is tracked separately by link/position; it crosses
//! intersections regardless of signal state, but its speed is throttled by
//! the vehicles blocking its preemption lane.
//!
//! Everything is deterministic: identical (map, flow, actions, router)
//! reproduce the trajectory bit for bit.

mod fd;
mod flow;
mod metrics;
mod plan;

pub use fd::{emv_speed, nonemv_speed, FdParams};
pub use flow::{FlowSpec, LinkDemand, RateWindow, TurnPolicy, TurnSplit};
pub use metrics::{finalize_metrics, EpisodeMetrics};
pub use plan::SimPlan;

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{LaneCounts, LaneId, LinkId, NodeId, TrafficMap, Turn, TurnTags};

/// Fixed simulation parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimCfg {
    pub dt_s: f64,
    /// Saturation flow per lane (veh/s).
    pub saturation_veh_s: f64,
    /// Minimum time a phase must hold before it may switch.
    pub min_phase_s: f64,
    pub fd: FdParams,
}

impl Default for SimCfg {
    fn default() -> Self {
        SimCfg { dt_s: 5.0, saturation_veh_s: 0.5, min_phase_s: 5.0, fd: FdParams::default() }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cohort {
    n: f64,
    trip_start: f64,
    entered_link: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LaneSim {
    cohorts: VecDeque<Cohort>,
    x: f64,
    pub served_last: f64,
}

impl LaneSim {
    pub fn vehicles(&self) -> f64 {
        self.x
    }

    fn push(&mut self, n: f64, trip_start: f64, entered_link: f64) {
        if n <= 0.0 {
            return;
        }
        if let Some(last) = self.cohorts.back_mut() {
            if last.trip_start == trip_start && last.entered_link == entered_link {
                last.n += n;
                self.x += n;
                return;
            }
        }
        self.cohorts.push_back(Cohort { n, trip_start, entered_link });
        self.x += n;
    }

    /// Pop `amount` vehicles FIFO, returning (fragment, trip_start, entered_link) pieces.
    fn pop(&mut self, mut amount: f64, out: &mut Vec<(f64, f64, f64)>) {
        while amount > 1e-12 {
            let Some(front) = self.cohorts.front_mut() else { break };
            let take = front.n.min(amount);
            out.push((take, front.trip_start, front.entered_link));
            front.n -= take;
            self.x -= take;
            amount -= take;
            if front.n <= 1e-12 {
                self.x -= front.n;
                self.cohorts.pop_front();
            }
        }
        self.x = self.x.max(0.0);
    }

    /// Vehicles that have completed the intra-link travel time by now.
    fn eligible(&self, t: f64, delay_s: f64) -> f64 {
        let mut total = 0.0;
        for c in &self.cohorts {
            if t - c.entered_link + 1e-9 >= delay_s {
                total += c.n;
            } else {
                break;
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignalState {
    pub phase: u8,
    pub age_s: f64,
}

#[derive(Debug, Clone)]
pub struct EmvState {
    pub origin: NodeId,
    pub dest: NodeId,
    pub dispatch_s: f64,
    pub dispatched: bool,
    pub link: Option<LinkId>,
    pub pos_m: f64,
    pub speed_mps: f64,
    pub preempt_lane: Option<LaneId>,
    pub arrived_s: Option<f64>,
}

impl EmvState {
    pub fn new(origin: NodeId, dest: NodeId, dispatch_s: f64) -> Self {
        EmvState {
            origin,
            dest,
            dispatch_s,
            dispatched: false,
            link: None,
            pos_m: 0.0,
            speed_mps: 0.0,
            preempt_lane: None,
            arrived_s: None,
        }
    }

    /// On a link and not yet arrived.
    pub fn en_route(&self) -> bool {
        self.dispatched && self.arrived_s.is_none() && self.link.is_some()
    }
}

/// Supplies the EMV's next link when it stands at an intersection.
/// Returns None at the destination or when no route exists.
pub trait EmvRouter {
    fn next_link(&mut self, map: &TrafficMap, node: NodeId) -> Option<LinkId>;
}

/// Router for scenarios without an EMV.
pub struct NoRoute;

impl EmvRouter for NoRoute {
    fn next_link(&mut self, _map: &TrafficMap, _node: NodeId) -> Option<LinkId> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Totals {
    pub injected: f64,
    pub exited: f64,
    pub trip_time_sum: f64,
    pub completed: f64,
    pub coerced_switches: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    pub injected: f64,
    pub exited: f64,
    pub served: f64,
    pub coerced: u32,
    pub emv_entered_link: Option<LinkId>,
    pub emv_crossed_half: bool,
    pub emv_arrived: Option<f64>,
}

pub struct SimState {
    pub t: f64,
    pub lanes: Vec<LaneSim>,
    pub signals: Vec<SignalState>,
    pub emv: Option<EmvState>,
    demand_acc: Vec<f64>,
    pub totals: Totals,
}

impl LaneCounts for SimState {
    fn vehicles(&self, lane: LaneId) -> f64 {
        self.lanes[lane.idx()].x
    }
}

impl SimState {
    pub fn new(map: &TrafficMap, cfg: &SimCfg, emv: Option<EmvState>) -> Self {
        SimState {
            t: 0.0,
            lanes: vec![LaneSim::default(); map.lanes.len()],
            signals: vec![SignalState { phase: 0, age_s: cfg.min_phase_s }; map.nodes.len()],
            emv,
            demand_acc: vec![0.0; map.lanes.len()],
            totals: Totals::default(),
        }
    }

    pub fn total_vehicles(&self) -> f64 {
        self.lanes.iter().map(|l| l.x).sum()
    }

    /// Place vehicles directly on a lane (test and scenario setup). They are
    /// treated as having entered long ago, so they are immediately eligible
    /// to discharge, and they do not count as injected demand.
    pub fn seed_vehicles(&mut self, lane: LaneId, n: f64) {
        self.lanes[lane.idx()].push(n, self.t, f64::NEG_INFINITY);
        self.totals.injected += n;
    }

    /// Advance one step: apply signal actions, transfer vehicles along green
    /// movements, inject demand, and move the EMV.
    pub fn step(
        &mut self,
        map: &TrafficMap,
        plan: &SimPlan,
        cfg: &SimCfg,
        flow: &FlowSpec,
        actions: &BTreeMap<NodeId, u8>,
        router: &mut dyn EmvRouter,
    ) -> Result<StepReport> {
        let dt = cfg.dt_s;
        let mut report = StepReport::default();
        let stock_before = self.total_vehicles();

        // 1. Signals: switch where requested and legal, otherwise hold.
        for (&node, &phase) in actions {
            let Some(n) = map.nodes.get(node.idx()) else {
                return Err(Error::UnknownIntersection(node.to_string()));
            };
            if n.is_virtual {
                return Err(Error::UnknownIntersection(format!("{} is virtual", n.name)));
            }
            if phase as usize >= map.phase_count(node) {
                return Err(Error::InvalidArg(format!(
                    "phase {phase} out of range for {}",
                    n.name
                )));
            }
            let sig = &mut self.signals[node.idx()];
            if sig.phase != phase {
                if sig.age_s + 1e-9 >= cfg.min_phase_s {
                    sig.phase = phase;
                    sig.age_s = 0.0;
                } else {
                    report.coerced += 1;
                    self.totals.coerced_switches += 1;
                }
            }
        }

        // 2. Transfers along green movements.
        let (served, exited) = self.transfer(map, plan, cfg)?;
        report.served = served;
        report.exited = exited;

        // 3. Demand injection.
        report.injected = self.inject_demand(map, flow, cfg);

        // 4. EMV kinematics.
        self.advance_emv(map, cfg, router, &mut report)?;

        // 5. Clock and signal ages.
        self.t += dt;
        for sig in &mut self.signals {
            sig.age_s += dt;
        }

        debug_assert!(
            (self.total_vehicles() - stock_before - (report.injected - report.exited)).abs() < 1e-6,
            "conservation violated at t={}",
            self.t
        );
        Ok(report)
    }

    /// Saturation-flow transfer along the active phases.
    /// Returns (total served, total exited into sinks).
    fn transfer(&mut self, map: &TrafficMap, plan: &SimPlan, cfg: &SimCfg) -> Result<(f64, f64)> {
        let dt = cfg.dt_s;
        let t = self.t;
        // Per-lane discharge budget from the pre-step state.
        let mut budget = vec![0.0f64; map.lanes.len()];
        for lane in &map.lanes {
            let link = map.link(lane.link);
            let delay = link.length_m / fd::nonemv_speed(self.lanes[lane.id.idx()].x, lane.capacity, &cfg.fd);
            let elig = self.lanes[lane.id.idx()].eligible(t, delay);
            budget[lane.id.idx()] = elig.min(cfg.saturation_veh_s * dt);
        }
        // Effective inflow mass per target lane, with preemption redirects.
        let emv_link = self.emv.as_ref().filter(|e| e.en_route()).and_then(|e| e.link);
        let emv_lane = self.emv.as_ref().filter(|e| e.en_route()).and_then(|e| e.preempt_lane);
        let mass = |lane: &crate::net::Lane| -> f64 {
            let base = plan.entry_mass[lane.id.idx()];
            if Some(lane.link) != emv_link {
                return base;
            }
            let p = emv_lane.expect("preemption lane set while en route");
            if lane.id == p {
                return 0.0;
            }
            let p_mass = plan.entry_mass[p.idx()];
            if p_mass >= 1.0 - 1e-12 {
                0.0
            } else {
                base / (1.0 - p_mass)
            }
        };
        let headroom = |lane: &crate::net::Lane, x: f64, map: &TrafficMap| -> f64 {
            if map.is_sink_link(lane.link) {
                return f64::INFINITY;
            }
            let cap = if Some(lane.link) == emv_link && Some(lane.id) != emv_lane {
                cfg.fd.adjacent_capacity(lane.capacity)
            } else {
                lane.capacity
            };
            (cap - x).max(0.0)
        };

        // Pass 1: desired inflow per target lane.
        let mut desired_in = vec![0.0f64; map.lanes.len()];
        for node in map.real_nodes() {
            let phase = self.signals[node.id.idx()].phase as usize;
            for group in plan.phase_groups(node.id, phase) {
                let d = budget[group.from_lane.idx()] * plan.turn_share(group.from_lane, group.turn);
                if d <= 0.0 {
                    continue;
                }
                for &m in &group.to_lanes {
                    desired_in[m.idx()] += d * mass(map.lane(m));
                }
            }
        }
        // Pass 2: grant ratios from headroom.
        let mut ratio = vec![1.0f64; map.lanes.len()];
        for lane in &map.lanes {
            let want = desired_in[lane.id.idx()];
            if want > 1e-12 {
                let h = headroom(lane, self.lanes[lane.id.idx()].x, map);
                if h < want {
                    ratio[lane.id.idx()] = (h / want).max(0.0);
                }
            }
        }
        // Pass 3: execute in deterministic node/group order.
        let mut served = 0.0;
        let mut exited = 0.0;
        let mut fragments: Vec<(f64, f64, f64)> = Vec::new();
        for lane in self.lanes.iter_mut() {
            lane.served_last = 0.0;
        }
        for node in map.real_nodes() {
            let phase = self.signals[node.id.idx()].phase as usize;
            for group in plan.phase_groups(node.id, phase).to_vec() {
                let d = budget[group.from_lane.idx()] * plan.turn_share(group.from_lane, group.turn);
                if d <= 0.0 {
                    continue;
                }
                for &m in &group.to_lanes {
                    let amount = d * mass(map.lane(m)) * ratio[m.idx()];
                    if amount <= 1e-12 {
                        continue;
                    }
                    fragments.clear();
                    self.lanes[group.from_lane.idx()].pop(amount, &mut fragments);
                    let moved: f64 = fragments.iter().map(|f| f.0).sum();
                    served += moved;
                    self.lanes[group.from_lane.idx()].served_last += moved;
                    if map.is_sink_link(map.lane(m).link) {
                        for &(n, trip_start, _) in &fragments {
                            self.totals.exited += n;
                            self.totals.completed += n;
                            self.totals.trip_time_sum += n * (t + dt - trip_start);
                            self.pending_exited += n;
                        }
                    } else {
                        for &(n, trip_start, _) in &fragments {
                            self.lanes[m.idx()].push(n, trip_start, t + dt);
                        }
                    }
                }
            }
        }
        Ok(served)
    }

    /// Accumulate fractional arrivals and release whole vehicles onto entry
    /// lanes, blocked while an entry lane is full.
    pub fn inject_demand(&mut self, map: &TrafficMap, flow: &FlowSpec, cfg: &SimCfg) -> f64 {
        let mut injected = 0.0;
        for link_id in map.entry_links() {
            let rate = flow.rate_at(link_id, self.t);
            let link = map.link(link_id);
            for &lane_id in &link.lanes {
                let acc = &mut self.demand_acc[lane_id.idx()];
                *acc += rate * cfg.dt_s / 3600.0;
                let lane = &mut self.lanes[lane_id.idx()];
                let headroom = (map.lane(lane_id).capacity - lane.x + 1e-9).floor().max(0.0);
                let release = acc.floor().min(headroom);
                if release >= 1.0 {
                    lane.push(release, self.t + cfg.dt_s, self.t + cfg.dt_s);
                    *acc -= release;
                    injected += release;
                }
            }
        }
        self.totals.injected += injected;
        injected
    }

    fn advance_emv(
        &mut self,
        map: &TrafficMap,
        cfg: &SimCfg,
        router: &mut dyn EmvRouter,
        report: &mut StepReport,
    ) -> Result<()> {
        let Some(emv) = self.emv.as_ref() else { return Ok(()) };
        if emv.arrived_s.is_some() {
            return Ok(());
        }
        // Dispatch.
        if !emv.dispatched {
            if self.t + 1e-9 < emv.dispatch_s {
                return Ok(());
            }
            let (origin, dest, dispatch_s) = (emv.origin, emv.dest, emv.dispatch_s);
            if origin == dest {
                let emv = self.emv.as_mut().unwrap();
                emv.dispatched = true;
                emv.arrived_s = Some(dispatch_s);
                report.emv_arrived = Some(dispatch_s);
                return Ok(());
            }
            let Some(first) = router.next_link(map, origin) else {
                return Err(Error::NoPath {
                    from: map.node(origin).name.clone(),
                    to: map.node(dest).name.clone(),
                });
            };
            self.emv.as_mut().unwrap().dispatched = true;
            self.enter_emv_link(map, cfg, router, first);
            report.emv_entered_link = Some(first);
        }

        let mut remaining = cfg.dt_s;
        let mut pos_before = self.emv.as_ref().unwrap().pos_m;
        loop {
            let (link_id, pos, lane) = {
                let e = self.emv.as_ref().unwrap();
                (e.link.expect("en-route EMV has a link"), e.pos_m, e.preempt_lane.unwrap())
            };
            let link = map.link(link_id);
            let blockers = self.lanes[lane.idx()].x;
            let v = fd::emv_speed(blockers, map.lane(lane).capacity, &cfg.fd)?;
            self.emv.as_mut().unwrap().speed_mps = v;
            if v <= 0.0 || remaining <= 1e-12 {
                break;
            }
            let dist_to_end = link.length_m - pos;
            let reach = v * remaining;
            if reach < dist_to_end - 1e-9 {
                let e = self.emv.as_mut().unwrap();
                e.pos_m = pos + reach;
                if pos_before < link.length_m / 2.0 && e.pos_m >= link.length_m / 2.0 {
                    report.emv_crossed_half = true;
                }
                break;
            }
            // Reaches the head intersection within this step.
            remaining -= dist_to_end / v;
            if pos_before < link.length_m / 2.0 {
                report.emv_crossed_half = true;
            }
            let head = link.to;
            if head == self.emv.as_ref().unwrap().dest {
                let arrived = self.t + (cfg.dt_s - remaining);
                let e = self.emv.as_mut().unwrap();
                e.arrived_s = Some(arrived);
                e.pos_m = link.length_m;
                e.speed_mps = 0.0;
                report.emv_arrived = Some(arrived);
                break;
            }
            match router.next_link(map, head) {
                Some(next) => {
                    self.enter_emv_link(map, cfg, router, next);
                    report.emv_entered_link = Some(next);
                    pos_before = 0.0;
                }
                None => {
                    // No route onward right now; wait at the stop line.
                    let e = self.emv.as_mut().unwrap();
                    e.pos_m = link.length_m;
                    e.speed_mps = 0.0;
                    break;
                }
            }
        }
        Ok(())
    }

    /// Put the EMV at the start of a link, pick its preemption lane from the
    /// turn it will make at the head, and apply the pull-over split.
    fn enter_emv_link(&mut self, map: &TrafficMap, cfg: &SimCfg, router: &mut dyn EmvRouter, link_id: LinkId) {
        let link = map.link(link_id);
        let planned_next = if link.to == self.emv.as_ref().unwrap().dest {
            None
        } else {
            router.next_link(map, link.to)
        };
        let turn = planned_next
            .and_then(|next| turn_between(map, link_id, next))
            .unwrap_or(Turn::Through);
        let lane_id = preempt_lane_for_turn(map, link_id, turn);
        // Pull-over: a share of the vehicles ahead relocates to the other
        // lanes, which gain curb capacity while the EMV is on the link.
        let pre_x = self.lanes[lane_id.idx()].x;
        let mut to_move = cfg.fd.pullover_fraction * pre_x;
        if to_move > 1e-12 && link.lanes.len() > 1 {
            let mut fragments = Vec::new();
            let mut room: Vec<(LaneId, f64)> = link
                .lanes
                .iter()
                .filter(|&&l| l != lane_id)
                .map(|&l| {
                    let cap = cfg.fd.adjacent_capacity(map.lane(l).capacity);
                    (l, (cap - self.lanes[l.idx()].x).max(0.0))
                })
                .collect();
            let total_room: f64 = room.iter().map(|r| r.1).sum();
            to_move = to_move.min(total_room);
            let mut popped = Vec::new();
            self.lanes[lane_id.idx()].pop(to_move, &mut popped);
            for (n, trip_start, entered) in popped {
                let mut left = n;
                for (l, avail) in room.iter_mut() {
                    if left <= 1e-12 {
                        break;
                    }
                    let take = left.min(*avail);
                    if take > 1e-12 {
                        fragments.push((*l, take, trip_start, entered));
                        *avail -= take;
                        left -= take;
                    }
                }
            }
            for (l, n, trip_start, entered) in fragments {
                self.lanes[l.idx()].push(n, trip_start, entered);
            }
        }
        let e = self.emv.as_mut().unwrap();
        e.link = Some(link_id);
        e.pos_m = 0.0;
        e.preempt_lane = Some(lane_id);
    }

    /// Travel-time weights for every link under current counts.
    pub fn intra_link_times(&self, map: &TrafficMap, fd: &FdParams) -> Vec<f64> {
        map.links
            .iter()
            .map(|l| intra_link_time(map, l.id, self, self.emv.as_ref(), fd))
            .collect()
    }
}

/// Turn made when leaving `from` and taking `next` at its head.
pub fn turn_between(map: &TrafficMap, from: LinkId, next: LinkId) -> Option<Turn> {
    let node = map.link(from).to;
    map.permissible_movements(node)
        .ok()?
        .iter()
        .find(|m| m.from_link == from && m.to_link == next)
        .map(|m| m.turn)
}

/// The lane an EMV preempts on a link, given the turn it will make at the
/// head: the first lane tagged for that turn, falling back to lane 0.
pub fn preempt_lane_for_turn(map: &TrafficMap, link: LinkId, turn: Turn) -> LaneId {
    let l = map.link(link);
    l.lanes
        .iter()
        .copied()
        .find(|&id| map.lane(id).tags.contains(turn))
        .unwrap_or(l.lanes[0])
}

/// Estimated EMV travel time along a link: length over the speed implied by
/// the blocking count after the modeled pull-over split. Infinite when the
/// preemption lane is jammed.
pub fn intra_link_time(
    map: &TrafficMap,
    link_id: LinkId,
    counts: &impl LaneCounts,
    emv: Option<&EmvState>,
    fd: &FdParams,
) -> f64 {
    let link = map.link(link_id);
    let on_this_link = emv
        .filter(|e| e.en_route() && e.link == Some(link_id))
        .and_then(|e| e.preempt_lane);
    let (lane_id, blockers) = match on_this_link {
        Some(lane) => (lane, counts.vehicles(lane)),
        None => {
            let lane = link
                .lanes
                .iter()
                .copied()
                .find(|&id| map.lane(id).tags.contains(Turn::Through))
                .unwrap_or(link.lanes[0]);
            let n = counts.vehicles(lane);
            let room: f64 = link
                .lanes
                .iter()
                .filter(|&&l| l != lane)
                .map(|&l| (fd.adjacent_capacity(map.lane(l).capacity) - counts.vehicles(l)).max(0.0))
                .sum();
            (lane, n - (fd.pullover_fraction * n).min(room))
        }
    };
    let v = emv_speed(blockers.max(0.0), map.lane(lane_id).capacity, fd)
        .expect("non-negative blocker count");
    if v <= 0.0 {
        f64::INFINITY
    } else {
        link.length_m / v
    }
}

#[cfg(test)]
mod tests;
