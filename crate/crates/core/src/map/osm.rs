//! OSM XML subset reader.
//!
//! Consumes `<node id lat lon>`, `<way id>` with `<nd ref>` children and the
//! `highway`, `lanes`, `maxspeed` and `oneway` tags. Nodes tagged
//! `highway=traffic_signals` become fixed-time signals with default timing.

use std::collections::{BTreeMap, BTreeSet};

use roxmltree::{Document, Node as XmlNode};

use super::geo::{bbox_centroid, LatLon};
use super::{MapError, NodeId, RoadGraph, RoadGraphBuilder, SignalTiming, WayId, WaySpec, DEFAULT_MAX_SPEED};

const NON_DRIVABLE: [&str; 4] = ["footway", "path", "cycleway", "steps"];

struct RawNode {
    coord: LatLon<f64>,
    signal: bool,
}

struct RawWay {
    id: WayId,
    refs: Vec<NodeId>,
    tags: BTreeMap<String, String>,
}

/// Parses an OSM XML document into a road graph of its drivable ways.
pub fn parse_osm(text: &str) -> Result<RoadGraph, MapError> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        MapError::Xml {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;

    let mut nodes: BTreeMap<NodeId, RawNode> = BTreeMap::new();
    let mut ways: Vec<RawWay> = Vec::new();

    for el in doc.root_element().children().filter(XmlNode::is_element) {
        match el.tag_name().name() {
            "node" => {
                let id = NodeId(attr_parse(&doc, el, "id")?);
                let lat: f64 = attr_parse(&doc, el, "lat")?;
                let lon: f64 = attr_parse(&doc, el, "lon")?;
                let coord = LatLon::new(lat, lon);
                if !coord.is_valid() {
                    return Err(MapError::InvalidCoordinate(id));
                }
                let tags = tags(el);
                let signal = tags.get("highway").is_some_and(|v| v == "traffic_signals");
                if nodes.insert(id, RawNode { coord, signal }).is_some() {
                    return Err(MapError::DuplicateId { kind: "node", id: id.0 });
                }
            }
            "way" => {
                let id = WayId(attr_parse(&doc, el, "id")?);
                let mut refs = Vec::new();
                for nd in el.children().filter(|c| c.has_tag_name("nd")) {
                    refs.push(NodeId(attr_parse(&doc, nd, "ref")?));
                }
                ways.push(RawWay { id, refs, tags: tags(el) });
            }
            _ => {}
        }
    }

    let drivable: Vec<RawWay> = ways.into_iter().filter(is_drivable).collect();

    let mut used = BTreeSet::new();
    for way in &drivable {
        for r in &way.refs {
            if !nodes.contains_key(r) {
                return Err(MapError::DanglingReference { way: way.id, node: *r });
            }
            used.insert(*r);
        }
    }

    let origin = bbox_centroid(used.iter().map(|id| nodes[id].coord)).unwrap_or_default();
    let mut builder = RoadGraphBuilder::new(origin);
    for id in &used {
        let raw = &nodes[id];
        builder.insert_geo(*id, raw.coord);
        if raw.signal {
            builder.insert_signal(*id, SignalTiming::default());
        }
    }
    for way in drivable {
        if way.refs.len() < 2 {
            log::warn!("skipping way {} with fewer than two node refs", way.id);
            continue;
        }
        builder.insert_way(way_spec(way));
    }
    builder.build()
}

fn is_drivable(way: &RawWay) -> bool {
    way.tags
        .get("highway")
        .is_some_and(|v| !NON_DRIVABLE.contains(&v.as_str()))
}

fn way_spec(way: RawWay) -> WaySpec {
    let mut refs = way.refs;
    let (one_way, reversed) = match way.tags.get("oneway").map(String::as_str) {
        Some("yes" | "true" | "1") => (true, false),
        Some("-1" | "reverse") => (true, true),
        _ => (false, false),
    };
    if reversed {
        refs.reverse();
    }
    let total = way
        .tags
        .get("lanes")
        .and_then(|v| v.trim().parse::<u8>().ok())
        .filter(|n| *n > 0);
    let (forward, backward) = match (total, one_way) {
        (Some(n), true) => (n, 0),
        (Some(n), false) => ((n / 2 + n % 2).max(1), (n / 2).max(1)),
        (None, true) => (1, 0),
        (None, false) => (1, 1),
    };
    let max_speed = way
        .tags
        .get("maxspeed")
        .and_then(|v| parse_max_speed(v))
        .unwrap_or(DEFAULT_MAX_SPEED);
    WaySpec {
        id: way.id,
        node_refs: refs,
        lanes_forward: forward,
        lanes_backward: backward,
        max_speed,
    }
}

/// `maxspeed` in m/s. Accepts bare km/h numbers, `km/h`, `kmh` and `mph` suffixes.
fn parse_max_speed(value: &str) -> Option<f64> {
    let v = value.trim();
    let (number, factor) = if let Some(n) = v.strip_suffix("mph") {
        (n, 0.44704)
    } else if let Some(n) = v.strip_suffix("km/h").or_else(|| v.strip_suffix("kmh")) {
        (n, 1.0 / 3.6)
    } else {
        (v, 1.0 / 3.6)
    };
    let n: f64 = number.trim().parse().ok()?;
    (n.is_finite() && n > 0.0).then_some(n * factor)
}

fn tags(el: XmlNode) -> BTreeMap<String, String> {
    el.children()
        .filter(|c| c.has_tag_name("tag"))
        .filter_map(|t| Some((t.attribute("k")?.to_owned(), t.attribute("v")?.to_owned())))
        .collect()
}

fn line_of(doc: &Document, el: XmlNode) -> u32 {
    doc.text_pos_at(el.range().start).row
}

fn attr_parse<T: std::str::FromStr>(doc: &Document, el: XmlNode, name: &str) -> Result<T, MapError> {
    let raw = el.attribute(name);
    raw.and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| MapError::InvalidAttribute {
            line: line_of(doc, el),
            element: el.tag_name().name().to_owned(),
            attribute: name.to_owned(),
            value: raw.unwrap_or("<missing>").to_owned(),
        })
}
