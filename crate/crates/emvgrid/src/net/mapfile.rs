//! Human-readable map description files (TOML). Loading a saved file
//! reproduces the map exactly; saving a loaded file reproduces the bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Error, Intersection, Lane, LaneId, Link, LinkId, NodeId, Result, TrafficMap, TurnTags};

#[derive(Debug, Serialize, Deserialize)]
struct MapFile {
    node: Vec<NodeSpec>,
    link: Vec<LinkSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeSpec {
    name: String,
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    virtual_node: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkSpec {
    from: String,
    to: String,
    length_m: f64,
    lanes: Vec<LaneSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LaneSpec {
    capacity: f64,
    turns: String,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn tags_to_string(tags: TurnTags) -> String {
    tags.turns().map(|t| t.letter()).collect()
}

fn tags_from_string(s: &str) -> Result<TurnTags> {
    let mut tags = TurnTags::empty();
    for ch in s.chars() {
        tags = match ch {
            'L' => tags.with(TurnTags::LEFT),
            'T' => tags.with(TurnTags::THROUGH),
            'R' => tags.with(TurnTags::RIGHT),
            other => return Err(Error::InvalidMap(format!("unknown turn tag {other:?}"))),
        };
    }
    if tags == TurnTags::empty() {
        return Err(Error::InvalidMap("lane without turn tags".into()));
    }
    Ok(tags)
}

pub fn map_to_toml(map: &TrafficMap) -> Result<String> {
    let file = MapFile {
        node: map
            .nodes
            .iter()
            .map(|n| NodeSpec { name: n.name.clone(), x: n.pos.0, y: n.pos.1, virtual_node: n.is_virtual })
            .collect(),
        link: map
            .links
            .iter()
            .map(|l| LinkSpec {
                from: map.node(l.from).name.clone(),
                to: map.node(l.to).name.clone(),
                length_m: l.length_m,
                lanes: l
                    .lanes
                    .iter()
                    .map(|id| {
                        let lane = map.lane(*id);
                        LaneSpec { capacity: lane.capacity, turns: tags_to_string(lane.tags) }
                    })
                    .collect(),
            })
            .collect(),
    };
    Ok(toml::to_string(&file)?)
}

pub fn map_from_toml(text: &str) -> Result<TrafficMap> {
    let file: MapFile = toml::from_str(text)?;
    let nodes: Vec<Intersection> = file
        .node
        .iter()
        .enumerate()
        .map(|(i, n)| Intersection {
            id: NodeId(i as u32),
            name: n.name.clone(),
            pos: (n.x, n.y),
            is_virtual: n.virtual_node,
        })
        .collect();
    let lookup: std::collections::BTreeMap<&str, NodeId> =
        nodes.iter().map(|n| (n.name.as_str(), n.id)).collect();
    let mut links = Vec::new();
    let mut lanes = Vec::new();
    for spec in &file.link {
        let from = *lookup
            .get(spec.from.as_str())
            .ok_or_else(|| Error::UnknownIntersection(spec.from.clone()))?;
        let to = *lookup
            .get(spec.to.as_str())
            .ok_or_else(|| Error::UnknownIntersection(spec.to.clone()))?;
        let id = LinkId(links.len() as u32);
        let mut lane_ids = Vec::new();
        for (i, lane) in spec.lanes.iter().enumerate() {
            let lane_id = LaneId(lanes.len() as u32);
            lanes.push(Lane {
                id: lane_id,
                link: id,
                index: i as u8,
                capacity: lane.capacity,
                tags: tags_from_string(&lane.turns)?,
            });
            lane_ids.push(lane_id);
        }
        links.push(Link {
            id,
            name: format!("{}:{}", spec.from, spec.to),
            from,
            to,
            length_m: spec.length_m,
            lanes: lane_ids,
        });
    }
    TrafficMap::from_parts(nodes, links, lanes)
}

pub fn save_map(map: &TrafficMap, path: &Path) -> Result<()> {
    std::fs::write(path, map_to_toml(map)?)?;
    Ok(())
}

pub fn load_map(path: &Path) -> Result<TrafficMap> {
    map_from_toml(&std::fs::read_to_string(path)?)
}
