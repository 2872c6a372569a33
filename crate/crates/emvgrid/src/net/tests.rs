use super::*;

/// Independent count of permissible movements at a four-way intersection
/// under the standard lane discipline: the left lane turns left into every
/// target lane, the rightmost lane goes through or right into every target
/// lane, middle lanes go through.
fn oracle_fourway_movements(lanes_per_link: usize) -> usize {
    let per_turn_targets = lanes_per_link;
    let per_approach = match lanes_per_link {
        1 => 3 * per_turn_targets,
        n => {
            let left = per_turn_targets;
            let through = (n - 1) * per_turn_targets;
            let right = per_turn_targets;
            left + through + right
        }
    };
    4 * per_approach
}

#[test]
fn grid_5x5_matches_published_shape() {
    let map = build_grid(5, 5, 2, 200.0).unwrap();
    assert_eq!(map.real_nodes().count(), 25);
    let real_links: Vec<&Link> = map
        .links
        .iter()
        .filter(|l| !map.node(l.from).is_virtual && !map.node(l.to).is_virtual)
        .collect();
    // 2 directions * (5 rows * 4 + 5 cols * 4) internal edges.
    assert_eq!(real_links.len(), 80);
    for l in &real_links {
        assert_eq!(l.lane_count(), 2);
        assert_eq!(l.length_m, 200.0);
    }
}

#[test]
fn grid_2x2_smallest_case() {
    let map = build_grid(2, 2, 1, 100.0).unwrap();
    assert_eq!(map.real_nodes().count(), 4);
    let real_links = map
        .links
        .iter()
        .filter(|l| !map.node(l.from).is_virtual && !map.node(l.to).is_virtual)
        .count();
    assert_eq!(real_links, 8);
}

#[test]
fn grid_rejects_degenerate_dimensions() {
    assert!(build_grid(0, 5, 2, 200.0).is_err());
    assert!(build_grid(5, 1, 2, 200.0).is_err());
    assert!(build_grid(5, 5, 0, 200.0).is_err());
    assert!(build_grid(5, 5, 2, 0.0).is_err());
}

#[test]
fn interior_intersection_has_24_movements_with_2_lanes() {
    // The four-way worked example: 8 links, 2 lanes each, 24 movements.
    let map = build_grid(3, 3, 2, 200.0).unwrap();
    let center = map.node_by_name("i1_1").unwrap();
    let moves = map.permissible_movements(center).unwrap();
    assert_eq!(moves.len(), 24);
    assert_eq!(moves.len(), oracle_fourway_movements(2));
}

#[test]
fn movement_count_oracle_for_single_lane_links() {
    let map = build_grid(3, 3, 1, 200.0).unwrap();
    let center = map.node_by_name("i1_1").unwrap();
    let moves = map.permissible_movements(center).unwrap();
    assert_eq!(moves.len(), oracle_fourway_movements(1));
    assert_eq!(moves.len(), 12);
}

#[test]
fn single_in_single_out_has_one_movement() {
    // Two nodes, one link each way plus the minimal geometry: construct by
    // hand a corridor node with one incoming and one outgoing lane.
    let nodes = vec![
        Intersection { id: NodeId(0), name: "a".into(), pos: (0.0, 0.0), is_virtual: true },
        Intersection { id: NodeId(1), name: "b".into(), pos: (1.0, 0.0), is_virtual: false },
        Intersection { id: NodeId(2), name: "c".into(), pos: (2.0, 0.0), is_virtual: true },
    ];
    let lanes = vec![
        Lane { id: LaneId(0), link: LinkId(0), index: 0, capacity: 10.0, tags: TurnTags::THROUGH },
        Lane { id: LaneId(1), link: LinkId(1), index: 0, capacity: 10.0, tags: TurnTags::THROUGH },
    ];
    let links = vec![
        Link { id: LinkId(0), name: "a:b".into(), from: NodeId(0), to: NodeId(1), length_m: 100.0, lanes: vec![LaneId(0)] },
        Link { id: LinkId(1), name: "b:c".into(), from: NodeId(1), to: NodeId(2), length_m: 100.0, lanes: vec![LaneId(1)] },
    ];
    let map = TrafficMap::from_parts(nodes, links, lanes).unwrap();
    let moves = map.permissible_movements(NodeId(1)).unwrap();
    assert_eq!(moves.len(), 1);
    assert_eq!(moves[0].turn, Turn::Through);
}

#[test]
fn every_movement_references_existing_lanes() {
    for map in [build_grid(3, 4, 2, 200.0).unwrap(), build_manhattan(4, 3).unwrap()] {
        for node in map.real_nodes() {
            for m in map.permissible_movements(node.id).unwrap() {
                assert!(m.from_lane.idx() < map.lanes.len());
                assert!(m.to_lane.idx() < map.lanes.len());
                assert_eq!(map.lane(m.from_lane).link, m.from_link);
                assert_eq!(map.lane(m.to_lane).link, m.to_link);
                assert_eq!(map.link(m.from_link).to, node.id);
                assert_eq!(map.link(m.to_link).from, node.id);
            }
        }
    }
}

#[test]
fn phases_are_conflict_free() {
    for map in [
        build_grid(3, 3, 2, 200.0).unwrap(),
        build_grid(2, 2, 1, 100.0).unwrap(),
        build_manhattan(3, 3).unwrap(),
    ] {
        for node in map.real_nodes() {
            let moves = map.permissible_movements(node.id).unwrap();
            for phase in map.phases(node.id) {
                for (i, &a) in phase.movements.iter().enumerate() {
                    for &b in &phase.movements[i + 1..] {
                        assert!(
                            !movements_conflict(&moves[a], &moves[b]),
                            "{}: phase {} has conflicting movements {:?} and {:?}",
                            map.node(node.id).name,
                            phase.id,
                            moves[a],
                            moves[b]
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn fourway_intersections_have_8_phases() {
    let map = build_grid(5, 5, 2, 200.0).unwrap();
    for node in map.real_nodes() {
        assert_eq!(map.phase_count(node.id), 8, "node {}", node.name);
    }
}

#[test]
fn manhattan_16x3_shape() {
    let map = build_manhattan(16, 3).unwrap();
    assert_eq!(map.real_nodes().count(), 48);
    map.check_strongly_connected().unwrap();
    for node in map.real_nodes() {
        // One street approach (2 lanes) and one avenue approach (4 lanes).
        assert_eq!(map.incoming_lanes(node.id).len(), 6);
        assert!(map.phase_count(node.id) < 8);
    }
}

#[test]
fn manhattan_1x1_single_intersection() {
    let map = build_manhattan(1, 1).unwrap();
    assert_eq!(map.real_nodes().count(), 1);
    let node = map.real_nodes().next().unwrap().id;
    assert_eq!(map.in_links(node).len(), 2);
    assert_eq!(map.out_links(node).len(), 2);
}

/// Independent re-derivation of the reduced phase set: instantiate the
/// canonical cores over existing (approach, turn) pairs, drop empties,
/// merge equal movement sets.
fn oracle_phase_count(map: &TrafficMap, node: NodeId) -> usize {
    let moves = map.permissible_movements(node).unwrap();
    let templates: [Vec<(Dir, Turn)>; 8] = [
        vec![(Dir::N, Turn::Through), (Dir::S, Turn::Through)],
        vec![(Dir::E, Turn::Through), (Dir::W, Turn::Through)],
        vec![(Dir::N, Turn::Left), (Dir::S, Turn::Left)],
        vec![(Dir::E, Turn::Left), (Dir::W, Turn::Left)],
        vec![(Dir::N, Turn::Through), (Dir::N, Turn::Left)],
        vec![(Dir::E, Turn::Through), (Dir::E, Turn::Left)],
        vec![(Dir::S, Turn::Through), (Dir::S, Turn::Left)],
        vec![(Dir::W, Turn::Through), (Dir::W, Turn::Left)],
    ];
    let rights: std::collections::BTreeSet<usize> = moves
        .iter()
        .enumerate()
        .filter(|(_, m)| m.turn == Turn::Right)
        .map(|(i, _)| i)
        .collect();
    let mut sets: Vec<std::collections::BTreeSet<usize>> = Vec::new();
    for tmpl in &templates {
        let core: std::collections::BTreeSet<usize> = moves
            .iter()
            .enumerate()
            .filter(|(_, m)| tmpl.contains(&(m.approach, m.turn)))
            .map(|(i, _)| i)
            .collect();
        if core.is_empty() {
            continue;
        }
        let full: std::collections::BTreeSet<usize> = core.union(&rights).copied().collect();
        if !sets.contains(&full) {
            sets.push(full);
        }
    }
    sets.len()
}

#[test]
fn manhattan_2x2_phase_count_matches_enumeration() {
    let map = build_manhattan(2, 2).unwrap();
    for node in map.real_nodes() {
        let expected = oracle_phase_count(&map, node.id);
        assert_eq!(map.phase_count(node.id), expected, "node {}", node.name);
        assert_eq!(expected, 4);
    }
}

#[test]
fn grid_rotation_symmetry() {
    // A square grid rotated a quarter turn has the same per-node movement
    // and phase counts under relabeling (r, c) -> (c, rows-1-r).
    let map = build_grid(4, 4, 2, 200.0).unwrap();
    for r in 0..4usize {
        for c in 0..4usize {
            let a = map.node_by_name(&format!("i{r}_{c}")).unwrap();
            let b = map.node_by_name(&format!("i{c}_{}", 3 - r)).unwrap();
            assert_eq!(
                map.permissible_movements(a).unwrap().len(),
                map.permissible_movements(b).unwrap().len()
            );
            assert_eq!(map.phase_count(a), map.phase_count(b));
            assert_eq!(map.in_links(a).len(), map.in_links(b).len());
        }
    }
}

#[test]
fn mapfile_roundtrip_is_identity() {
    let map = build_grid(3, 3, 2, 200.0).unwrap();
    let text = map_to_toml(&map).unwrap();
    let loaded = map_from_toml(&text).unwrap();
    assert_eq!(map, loaded);
    let text2 = map_to_toml(&loaded).unwrap();
    assert_eq!(text, text2);
}

#[test]
fn unknown_intersection_lookup_fails() {
    let map = build_grid(2, 2, 1, 100.0).unwrap();
    assert!(map.node_by_name("i9_9").is_err());
    assert!(map.permissible_movements(NodeId(9999)).is_err());
}

#[test]
fn entry_links_touch_every_boundary() {
    let map = build_grid(3, 3, 2, 200.0).unwrap();
    let entries = map.entry_links();
    // 3x3 grid: 4 corners with 2 stub pairs each + 4 edge nodes with 1 = 12 entries.
    assert_eq!(entries.len(), 12);
    for id in entries {
        assert!(map.is_entry_link(id));
        assert!(!map.is_sink_link(id));
    }
}
