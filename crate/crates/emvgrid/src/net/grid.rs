//! Synthetic rows x cols grid with bi-directional links and boundary stubs.

use super::geometry::Dir;
use super::{
    default_capacity, default_lane_tags, Error, Intersection, Lane, LaneId, Link, LinkId, NodeId,
    Result, TrafficMap,
};

pub(super) struct Builder {
    pub nodes: Vec<Intersection>,
    pub links: Vec<Link>,
    pub lanes: Vec<Lane>,
}

impl Builder {
    pub fn new() -> Self {
        Builder { nodes: Vec::new(), links: Vec::new(), lanes: Vec::new() }
    }

    pub fn add_node(&mut self, name: String, pos: (f64, f64), is_virtual: bool) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Intersection { id, name, pos, is_virtual });
        id
    }

    pub fn add_link(&mut self, from: NodeId, to: NodeId, length_m: f64, lane_count: usize, capacity: f64) -> LinkId {
        let id = LinkId(self.links.len() as u32);
        let tags = default_lane_tags(lane_count);
        let mut lane_ids = Vec::with_capacity(lane_count);
        for (i, t) in tags.into_iter().enumerate() {
            let lane_id = LaneId(self.lanes.len() as u32);
            self.lanes.push(Lane { id: lane_id, link: id, index: i as u8, capacity, tags: t });
            lane_ids.push(lane_id);
        }
        let name = format!(
            "{}:{}",
            self.nodes[from.idx()].name,
            self.nodes[to.idx()].name
        );
        self.links.push(Link { id, name, from, to, length_m, lanes: lane_ids });
        id
    }
}

/// Build a rows x cols grid of four-way intersections. Orthogonal neighbors
/// are joined by a link in each direction; boundary intersections get a
/// source and a sink stub for every missing compass direction, so every
/// intersection is effectively four-way with the full phase set.
pub fn build_grid(rows: usize, cols: usize, lanes_per_link: usize, link_length_m: f64) -> Result<TrafficMap> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidMap(format!("grid needs at least 2x2, got {rows}x{cols}")));
    }
    if lanes_per_link < 1 {
        return Err(Error::InvalidMap("lanes_per_link must be at least 1".into()));
    }
    if !(link_length_m > 0.0) {
        return Err(Error::InvalidMap("link length must be positive".into()));
    }
    let capacity = default_capacity(link_length_m);
    let mut b = Builder::new();
    let mut at = vec![vec![NodeId(0); cols]; rows];
    for (r, row) in at.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            // Row 0 is the north edge; y decreases southward.
            *slot = b.add_node(format!("i{r}_{c}"), (c as f64, -(r as f64)), false);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                b.add_link(at[r][c], at[r][c + 1], link_length_m, lanes_per_link, capacity);
                b.add_link(at[r][c + 1], at[r][c], link_length_m, lanes_per_link, capacity);
            }
            if r + 1 < rows {
                b.add_link(at[r][c], at[r + 1][c], link_length_m, lanes_per_link, capacity);
                b.add_link(at[r + 1][c], at[r][c], link_length_m, lanes_per_link, capacity);
            }
        }
    }
    // Boundary stubs: one virtual node per missing direction, with an
    // entry link (into the grid) and an exit link (out of it).
    for r in 0..rows {
        for c in 0..cols {
            let node = at[r][c];
            let missing: Vec<Dir> = [
                (r == 0, Dir::N),
                (c == cols - 1, Dir::E),
                (r == rows - 1, Dir::S),
                (c == 0, Dir::W),
            ]
            .into_iter()
            .filter_map(|(is, d)| is.then_some(d))
            .collect();
            for dir in missing {
                let u = dir.unit();
                let pos = (c as f64 + u.0, -(r as f64) + u.1);
                let v = b.add_node(format!("v{r}_{c}_{}", dir.letter()), pos, true);
                b.add_link(v, node, link_length_m, lanes_per_link, capacity);
                b.add_link(node, v, link_length_m, lanes_per_link, capacity);
            }
        }
    }
    let map = TrafficMap::from_parts(b.nodes, b.links, b.lanes)?;
    map.check_strongly_connected()?;
    Ok(map)
}

