//! One-way street/avenue lattice in the style of a Manhattan neighborhood.

use super::geometry::Dir;
use super::grid::Builder;
use super::{default_capacity, Error, NodeId, Result, TrafficMap};

/// Default block lengths. Not survey data; override via the parameterized
/// builder when a scenario needs different spacing.
pub const STREET_BLOCK_M: f64 = 250.0;
pub const AVENUE_BLOCK_M: f64 = 80.0;

/// Build a `streets x avenues` lattice with the default block lengths:
/// one-way 2-lane streets crossing one-way 4-lane avenues.
pub fn build_manhattan(streets: usize, avenues: usize) -> Result<TrafficMap> {
    build_oneway_lattice(streets, avenues, STREET_BLOCK_M, AVENUE_BLOCK_M)
}

/// Streets run east-west with 2 lanes, avenues north-south with 4 lanes;
/// directions alternate row by row and column by column. Every street and
/// avenue gets an upstream entry stub and a downstream exit stub.
pub fn build_oneway_lattice(
    streets: usize,
    avenues: usize,
    street_block_m: f64,
    avenue_block_m: f64,
) -> Result<TrafficMap> {
    if streets < 1 || avenues < 1 {
        return Err(Error::InvalidMap(format!(
            "lattice needs at least 1 street and 1 avenue, got {streets}x{avenues}"
        )));
    }
    let street_cap = default_capacity(street_block_m);
    let avenue_cap = default_capacity(avenue_block_m);
    let mut b = Builder::new();
    let mut at = vec![vec![NodeId(0); avenues]; streets];
    for (s, row) in at.iter_mut().enumerate() {
        for (a, slot) in row.iter_mut().enumerate() {
            *slot = b.add_node(format!("m{s}_{a}"), (a as f64, -(s as f64)), false);
        }
    }
    // Directions alternate, but the perimeter must circulate (top row east,
    // rightmost avenue south, bottom row west, leftmost avenue north) or the
    // corners become pure sources/sinks and the network falls apart.
    let street_east = |s: usize| s != streets - 1 && s % 2 == 0;
    let avenue_south = |a: usize| a == avenues - 1 || (a > 0 && a % 2 == 1);
    for s in 0..streets {
        let east = street_east(s);
        for a in 0..avenues.saturating_sub(1) {
            let (from, to) = if east { (at[s][a], at[s][a + 1]) } else { (at[s][a + 1], at[s][a]) };
            b.add_link(from, to, street_block_m, 2, street_cap);
        }
        let (head_col, tail_col, in_dir, out_dir) =
            if east { (0, avenues - 1, Dir::W, Dir::E) } else { (avenues - 1, 0, Dir::E, Dir::W) };
        let head = at[s][head_col];
        let u = in_dir.unit();
        let hp = b.nodes[head.idx()].pos;
        let vin = b.add_node(format!("vs{s}_in"), (hp.0 + u.0, hp.1 + u.1), true);
        b.add_link(vin, head, street_block_m, 2, street_cap);
        let tail = at[s][tail_col];
        let u = out_dir.unit();
        let tp = b.nodes[tail.idx()].pos;
        let vout = b.add_node(format!("vs{s}_out"), (tp.0 + u.0, tp.1 + u.1), true);
        b.add_link(tail, vout, street_block_m, 2, street_cap);
    }
    for a in 0..avenues {
        let south = avenue_south(a);
        for s in 0..streets.saturating_sub(1) {
            let (from, to) = if south { (at[s][a], at[s + 1][a]) } else { (at[s + 1][a], at[s][a]) };
            b.add_link(from, to, avenue_block_m, 4, avenue_cap);
        }
        let (head_row, tail_row, in_dir, out_dir) =
            if south { (0, streets - 1, Dir::N, Dir::S) } else { (streets - 1, 0, Dir::S, Dir::N) };
        let head = at[head_row][a];
        let u = in_dir.unit();
        let hp = b.nodes[head.idx()].pos;
        let vin = b.add_node(format!("va{a}_in"), (hp.0 + u.0, hp.1 + u.1), true);
        b.add_link(vin, head, avenue_block_m, 4, avenue_cap);
        let tail = at[tail_row][a];
        let u = out_dir.unit();
        let tp = b.nodes[tail.idx()].pos;
        let vout = b.add_node(format!("va{a}_out"), (tp.0 + u.0, tp.1 + u.1), true);
        b.add_link(tail, vout, avenue_block_m, 4, avenue_cap);
    }
    let map = TrafficMap::from_parts(b.nodes, b.links, b.lanes)?;
    if streets > 1 && avenues > 1 {
        map.check_strongly_connected()?;
    }
    Ok(map)
}
