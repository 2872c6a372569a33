//! Static road-network model: intersections, directed multi-lane links,
//! permissible turn movements and non-conflicting signal phases.
//!
//! Maps are immutable after construction and safe to share across threads.

mod geometry;
mod grid;
mod manhattan;
mod mapfile;

pub use geometry::{movements_conflict, Dir, Turn};
pub use grid::build_grid;
pub use manhattan::{build_manhattan, build_oneway_lattice, AVENUE_BLOCK_M, STREET_BLOCK_M};
pub use mapfile::{load_map, map_from_toml, map_to_toml, save_map};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Nominal vehicle length + headway used to derive lane capacity from link length.
pub const VEHICLE_SPACE_M: f64 = 7.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneId(pub u32);

impl NodeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}
impl LinkId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}
impl LaneId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}
impl std::fmt::Display for LinkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// Turn tag bitflags, kept dependency-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TurnTags(pub u8);

impl TurnTags {
    pub const LEFT: TurnTags = TurnTags(1);
    pub const THROUGH: TurnTags = TurnTags(2);
    pub const RIGHT: TurnTags = TurnTags(4);

    pub fn empty() -> Self {
        TurnTags(0)
    }

    pub fn with(self, other: TurnTags) -> Self {
        TurnTags(self.0 | other.0)
    }

    pub fn contains(self, turn: Turn) -> bool {
        self.0 & TurnTags::from(turn).0 != 0
    }

    pub fn turns(self) -> impl Iterator<Item = Turn> {
        [Turn::Left, Turn::Through, Turn::Right]
            .into_iter()
            .filter(move |t| self.contains(*t))
    }
}

impl From<Turn> for TurnTags {
    fn from(t: Turn) -> Self {
        match t {
            Turn::Left => TurnTags::LEFT,
            Turn::Through => TurnTags::THROUGH,
            Turn::Right => TurnTags::RIGHT,
        }
    }
}

/// An intersection or a virtual boundary node (demand source/sink).
#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub id: NodeId,
    pub name: String,
    /// Planar position on an abstract unit grid (x east, y north).
    pub pos: (f64, f64),
    /// Virtual nodes anchor boundary stubs; they carry no signal and no agent.
    pub is_virtual: bool,
}

/// One travel channel of a link.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: LaneId,
    pub link: LinkId,
    /// Index within the parent link, 0 = leftmost (innermost).
    pub index: u8,
    /// Vehicle capacity x_max.
    pub capacity: f64,
    pub tags: TurnTags,
}

/// A one-directional road segment between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub name: String,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub lanes: Vec<LaneId>,
}

impl Link {
    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }
}

/// A permissible traffic movement from an incoming lane to an outgoing lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Movement {
    pub from_lane: LaneId,
    pub to_lane: LaneId,
    pub from_link: LinkId,
    pub to_link: LinkId,
    pub turn: Turn,
    /// Compass side the movement enters the intersection from.
    pub approach: Dir,
    /// Compass side the movement exits toward.
    pub exit: Dir,
}

/// A set of non-conflicting movements given green simultaneously.
/// Right turns are permitted in every phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub id: u8,
    /// Indices into the owning intersection's movement list.
    pub movements: Vec<usize>,
}

/// Read access to per-lane vehicle counts; implemented by the simulator state
/// and by test fixtures.
pub trait LaneCounts {
    fn vehicles(&self, lane: LaneId) -> f64;
}

impl LaneCounts for Vec<f64> {
    fn vehicles(&self, lane: LaneId) -> f64 {
        self[lane.idx()]
    }
}

/// Immutable road network with precomputed movements and phases.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMap {
    pub nodes: Vec<Intersection>,
    pub links: Vec<Link>,
    pub lanes: Vec<Lane>,
    in_links: Vec<Vec<LinkId>>,
    out_links: Vec<Vec<LinkId>>,
    /// Per-node permissible movement list (empty for virtual nodes).
    movements: Vec<Vec<Movement>>,
    /// Per-node phase table (empty for virtual nodes).
    phases: Vec<Vec<Phase>>,
    names: BTreeMap<String, NodeId>,
}

impl TrafficMap {
    /// Assemble a map from raw parts, deriving adjacency, movements and phases.
    pub fn from_parts(nodes: Vec<Intersection>, links: Vec<Link>, lanes: Vec<Lane>) -> Result<Self> {
        let n = nodes.len();
        let mut in_links = vec![Vec::new(); n];
        let mut out_links = vec![Vec::new(); n];
        for link in &links {
            if link.from == link.to {
                return Err(Error::InvalidMap(format!("link {} is a self loop", link.name)));
            }
            if link.length_m <= 0.0 {
                return Err(Error::InvalidMap(format!("link {} has non-positive length", link.name)));
            }
            if link.lanes.is_empty() {
                return Err(Error::InvalidMap(format!("link {} has no lanes", link.name)));
            }
            if link.from.idx() >= n || link.to.idx() >= n {
                return Err(Error::InvalidMap(format!("link {} references unknown node", link.name)));
            }
            out_links[link.from.idx()].push(link.id);
            in_links[link.to.idx()].push(link.id);
        }
        for lane in &lanes {
            if lane.capacity < 1.0 {
                return Err(Error::InvalidMap(format!("lane {} capacity below 1", lane.id.0)));
            }
        }
        let mut names = BTreeMap::new();
        for node in &nodes {
            if names.insert(node.name.clone(), node.id).is_some() {
                return Err(Error::InvalidMap(format!("duplicate node name {}", node.name)));
            }
        }
        let mut map = TrafficMap {
            nodes,
            links,
            lanes,
            in_links,
            out_links,
            movements: vec![Vec::new(); n],
            phases: vec![Vec::new(); n],
            names,
        };
        for i in 0..n {
            if map.nodes[i].is_virtual {
                continue;
            }
            let moves = geometry::enumerate_movements(&map, NodeId(i as u32))?;
            let phases = geometry::build_phases(&map, &moves);
            map.movements[i] = moves;
            map.phases[i] = phases;
        }
        Ok(map)
    }

    pub fn node_by_name(&self, name: &str) -> Result<NodeId> {
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownIntersection(name.to_string()))
    }

    pub fn node(&self, id: NodeId) -> &Intersection {
        &self.nodes[id.idx()]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.idx()]
    }

    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id.idx()]
    }

    pub fn in_links(&self, id: NodeId) -> &[LinkId] {
        &self.in_links[id.idx()]
    }

    pub fn out_links(&self, id: NodeId) -> &[LinkId] {
        &self.out_links[id.idx()]
    }

    /// Real (signal-carrying) intersections, in id order.
    pub fn real_nodes(&self) -> impl Iterator<Item = &Intersection> {
        self.nodes.iter().filter(|n| !n.is_virtual)
    }

    /// The permissible movement set of an intersection.
    pub fn permissible_movements(&self, id: NodeId) -> Result<&[Movement]> {
        let node = self
            .nodes
            .get(id.idx())
            .ok_or_else(|| Error::UnknownIntersection(id.to_string()))?;
        if node.is_virtual {
            return Err(Error::UnknownIntersection(format!("{} is virtual", node.name)));
        }
        Ok(&self.movements[id.idx()])
    }

    pub fn phases(&self, id: NodeId) -> &[Phase] {
        &self.phases[id.idx()]
    }

    pub fn phase_count(&self, id: NodeId) -> usize {
        self.phases[id.idx()].len()
    }

    /// Largest phase count over real intersections (action-space width).
    pub fn max_phase_count(&self) -> usize {
        self.real_nodes().map(|n| self.phase_count(n.id)).max().unwrap_or(0)
    }

    /// Incoming lanes of a node ordered by approach (N, E, S, W) then lane index.
    pub fn incoming_lanes(&self, id: NodeId) -> Vec<LaneId> {
        let mut links: Vec<&Link> = self.in_links[id.idx()].iter().map(|l| self.link(*l)).collect();
        links.sort_by_key(|l| geometry::approach_dir(self, l) as u8);
        links.iter().flat_map(|l| l.lanes.iter().copied()).collect()
    }

    /// Outgoing lanes of a node ordered by exit direction (N, E, S, W) then lane index.
    pub fn outgoing_lanes(&self, id: NodeId) -> Vec<LaneId> {
        let mut links: Vec<&Link> = self.out_links[id.idx()].iter().map(|l| self.link(*l)).collect();
        links.sort_by_key(|l| geometry::heading_dir(self, l) as u8);
        links.iter().flat_map(|l| l.lanes.iter().copied()).collect()
    }

    /// Compass direction of travel along a link.
    pub fn link_heading(&self, id: LinkId) -> Dir {
        geometry::heading_dir(self, self.link(id))
    }

    /// Compass side of the head node that a link arrives from.
    pub fn link_approach(&self, id: LinkId) -> Dir {
        geometry::approach_dir(self, self.link(id))
    }

    /// The real link from `from` to `to`, if any.
    pub fn link_between(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        self.out_links[from.idx()]
            .iter()
            .copied()
            .find(|l| self.link(*l).to == to)
    }

    /// Real neighbors connected by a link in either direction, deduplicated, id order.
    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.out_links[id.idx()]
            .iter()
            .map(|l| self.link(*l).to)
            .chain(self.in_links[id.idx()].iter().map(|l| self.link(*l).from))
            .filter(|n| !self.node(*n).is_virtual)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Links whose tail is a virtual source node (demand entry points).
    pub fn entry_links(&self) -> Vec<LinkId> {
        self.links
            .iter()
            .filter(|l| self.node(l.from).is_virtual)
            .map(|l| l.id)
            .collect()
    }

    /// Links whose head is a virtual sink node.
    pub fn is_sink_link(&self, id: LinkId) -> bool {
        self.node(self.link(id).to).is_virtual
    }

    pub fn is_entry_link(&self, id: LinkId) -> bool {
        self.node(self.link(id).from).is_virtual
    }

    /// Verify the real sub-network is strongly connected.
    pub fn check_strongly_connected(&self) -> Result<()> {
        let reals: Vec<NodeId> = self.real_nodes().map(|n| n.id).collect();
        if reals.is_empty() {
            return Err(Error::InvalidMap("no real intersections".into()));
        }
        let reach = |forward: bool| -> usize {
            let mut seen = vec![false; self.nodes.len()];
            let mut stack = vec![reals[0]];
            seen[reals[0].idx()] = true;
            let mut count = 0;
            while let Some(v) = stack.pop() {
                count += 1;
                let edges = if forward { &self.out_links[v.idx()] } else { &self.in_links[v.idx()] };
                for l in edges {
                    let w = if forward { self.link(*l).to } else { self.link(*l).from };
                    if !self.node(w).is_virtual && !seen[w.idx()] {
                        seen[w.idx()] = true;
                        stack.push(w);
                    }
                }
            }
            count
        };
        if reach(true) != reals.len() || reach(false) != reals.len() {
            return Err(Error::InvalidMap("real sub-network is not strongly connected".into()));
        }
        Ok(())
    }

    /// Undirected hop distances between real intersections (by node id),
    /// `usize::MAX` where unreachable or virtual.
    pub fn hop_distances(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut all = vec![vec![usize::MAX; n]; n];
        for src in self.real_nodes() {
            let dist = &mut all[src.id.idx()];
            dist[src.id.idx()] = 0;
            let mut queue = std::collections::VecDeque::from([src.id]);
            while let Some(v) = queue.pop_front() {
                for w in self.neighbors(v) {
                    if dist[w.idx()] == usize::MAX {
                        dist[w.idx()] = dist[v.idx()] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        all
    }
}

/// Standard lane discipline for a link with `n` lanes: leftmost lane turns
/// left, rightmost goes through or right, middle lanes go through.
/// A single lane carries all three turns.
pub fn default_lane_tags(n: usize) -> Vec<TurnTags> {
    match n {
        0 => Vec::new(),
        1 => vec![TurnTags::LEFT.with(TurnTags::THROUGH).with(TurnTags::RIGHT)],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    TurnTags::LEFT
                } else if i == n - 1 {
                    TurnTags::THROUGH.with(TurnTags::RIGHT)
                } else {
                    TurnTags::THROUGH
                }
            })
            .collect(),
    }
}

/// Default capacity for a lane of the given length.
pub fn default_capacity(length_m: f64) -> f64 {
    (length_m / VEHICLE_SPACE_M).floor().max(1.0)
}

#[cfg(test)]
mod tests;
