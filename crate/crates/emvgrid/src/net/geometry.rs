//! Turn classification and movement conflict geometry.
//!
//! The intersection is modeled as the square [-1,1]^2 with right-hand
//! traffic. Each movement is the straight segment from its approach entry
//! point to its exit point; two movements conflict when those segments
//! properly cross in the interior. Movements that merely share an entry
//! (same approach) or an exit (merge) do not conflict, which is what makes
//! permanent right turns compatible with every phase.

use super::{Error, Link, Movement, NodeId, Phase, Result, TrafficMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    N = 0,
    E = 1,
    S = 2,
    W = 3,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn unit(self) -> (f64, f64) {
        match self {
            Dir::N => (0.0, 1.0),
            Dir::E => (1.0, 0.0),
            Dir::S => (0.0, -1.0),
            Dir::W => (-1.0, 0.0),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::N => Dir::S,
            Dir::E => Dir::W,
            Dir::S => Dir::N,
            Dir::W => Dir::E,
        }
    }

    /// Direction reached by turning from a heading (right-hand traffic).
    pub fn apply_turn(self, turn: Turn) -> Dir {
        let left = match self {
            Dir::N => Dir::W,
            Dir::W => Dir::S,
            Dir::S => Dir::E,
            Dir::E => Dir::N,
        };
        match turn {
            Turn::Left => left,
            Turn::Through => self,
            Turn::Right => left.opposite(),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Dir::N => 'n',
            Dir::E => 'e',
            Dir::S => 's',
            Dir::W => 'w',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Turn {
    Left = 0,
    Through = 1,
    Right = 2,
}

impl Turn {
    pub const ALL: [Turn; 3] = [Turn::Left, Turn::Through, Turn::Right];

    pub fn letter(self) -> char {
        match self {
            Turn::Left => 'L',
            Turn::Through => 'T',
            Turn::Right => 'R',
        }
    }
}

/// Compass direction of travel along a link, from node positions.
pub fn heading_dir(map: &TrafficMap, link: &Link) -> Dir {
    let a = map.node(link.from).pos;
    let b = map.node(link.to).pos;
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    if dx.abs() >= dy.abs() {
        if dx >= 0.0 {
            Dir::E
        } else {
            Dir::W
        }
    } else if dy >= 0.0 {
        Dir::N
    } else {
        Dir::S
    }
}

/// Compass side of the head node the link arrives from (opposite of heading).
pub fn approach_dir(map: &TrafficMap, link: &Link) -> Dir {
    heading_dir(map, link).opposite()
}

/// Entry point on the intersection square for traffic arriving from `side`.
fn entry_point(side: Dir) -> (f64, f64) {
    let u = side.unit();
    let heading = side.opposite().unit();
    let right = (heading.1, -heading.0);
    (u.0 + 0.5 * right.0, u.1 + 0.5 * right.1)
}

/// Exit point on the intersection square for traffic leaving toward `side`.
fn exit_point(side: Dir) -> (f64, f64) {
    let u = side.unit();
    let right = (u.1, -u.0);
    (u.0 + 0.5 * right.0, u.1 + 0.5 * right.1)
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_properly_cross(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64), p4: (f64, f64)) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return true;
    }
    // Collinear overlap counts as a conflict (head-on paths).
    if d1 == 0.0 && d2 == 0.0 && d3 == 0.0 && d4 == 0.0 {
        let overlap_1d = |a0: f64, a1: f64, b0: f64, b1: f64| {
            let (a0, a1) = (a0.min(a1), a0.max(a1));
            let (b0, b1) = (b0.min(b1), b0.max(b1));
            a0.max(b0) < a1.min(b1)
        };
        return overlap_1d(p1.0, p2.0, p3.0, p4.0) || overlap_1d(p1.1, p2.1, p3.1, p4.1);
    }
    false
}

/// Whether two movements cross paths inside the intersection.
/// Movements from the same approach never conflict.
pub fn movements_conflict(a: &Movement, b: &Movement) -> bool {
    if a.approach == b.approach {
        return false;
    }
    segments_properly_cross(
        entry_point(a.approach),
        exit_point(a.exit),
        entry_point(b.approach),
        exit_point(b.exit),
    )
}

/// Enumerate the permissible movements of a real intersection, ordered by
/// approach (N, E, S, W), lane index, turn, then target lane index.
pub fn enumerate_movements(map: &TrafficMap, node: NodeId) -> Result<Vec<Movement>> {
    let mut in_ids: Vec<_> = map.in_links(node).to_vec();
    in_ids.sort_by_key(|l| approach_dir(map, map.link(*l)) as u8);
    let mut moves = Vec::new();
    for in_id in in_ids {
        let in_link = map.link(in_id);
        let heading = heading_dir(map, in_link);
        let approach = heading.opposite();
        for lane_id in &in_link.lanes {
            let lane = map.lane(*lane_id);
            for turn in lane.tags.turns() {
                let exit = heading.apply_turn(turn);
                // U-turns are never permissible.
                if exit == approach {
                    continue;
                }
                let Some(out_link) = map
                    .out_links(node)
                    .iter()
                    .map(|l| map.link(*l))
                    .find(|l| heading_dir(map, l) == exit)
                else {
                    continue;
                };
                for to_lane in &out_link.lanes {
                    moves.push(Movement {
                        from_lane: *lane_id,
                        to_lane: *to_lane,
                        from_link: in_id,
                        to_link: out_link.id,
                        turn,
                        approach,
                        exit,
                    });
                }
            }
        }
    }
    if moves.is_empty() && !map.in_links(node).is_empty() {
        return Err(Error::InvalidMap(format!(
            "intersection {} has incoming links but no permissible movements",
            map.node(node).name
        )));
    }
    Ok(moves)
}

/// The eight canonical phase templates of a four-way intersection, expressed
/// as (approach, turn) cores. Instantiation keeps whatever movements exist,
/// appends all right turns, drops empty cores and merges duplicates, so
/// one-way intersections get a reduced phase set.
const PHASE_TEMPLATES: [&[(Dir, Turn)]; 8] = [
    &[(Dir::N, Turn::Through), (Dir::S, Turn::Through)],
    &[(Dir::E, Turn::Through), (Dir::W, Turn::Through)],
    &[(Dir::N, Turn::Left), (Dir::S, Turn::Left)],
    &[(Dir::E, Turn::Left), (Dir::W, Turn::Left)],
    &[(Dir::N, Turn::Through), (Dir::N, Turn::Left)],
    &[(Dir::E, Turn::Through), (Dir::E, Turn::Left)],
    &[(Dir::S, Turn::Through), (Dir::S, Turn::Left)],
    &[(Dir::W, Turn::Through), (Dir::W, Turn::Left)],
];

pub fn build_phases(_map: &TrafficMap, moves: &[Movement]) -> Vec<Phase> {
    let rights: Vec<usize> = moves
        .iter()
        .enumerate()
        .filter(|(_, m)| m.turn == Turn::Right)
        .map(|(i, _)| i)
        .collect();
    let mut phases: Vec<Phase> = Vec::new();
    for template in PHASE_TEMPLATES {
        let core: Vec<usize> = moves
            .iter()
            .enumerate()
            .filter(|(_, m)| template.contains(&(m.approach, m.turn)))
            .map(|(i, _)| i)
            .collect();
        if core.is_empty() {
            continue;
        }
        let mut all = core;
        all.extend(rights.iter().copied());
        all.sort_unstable();
        all.dedup();
        if phases.iter().any(|p| p.movements == all) {
            continue;
        }
        phases.push(Phase { id: phases.len() as u8, movements: all });
    }
    if phases.is_empty() && !moves.is_empty() {
        // Degenerate right-turn-only intersection: a single all-green phase.
        phases.push(Phase { id: 0, movements: (0..moves.len()).collect() });
    }
    phases
}
