//! Generators for test and demo maps.
//!
//! The `*_osm` functions emit OSM XML so synthetic scenarios travel through
//! the same parser as real extracts. Coordinates are written with nine
//! decimals (sub-millimetre).

use std::fmt::Write;

use super::geo::{unproject, LatLon, Point};
use super::{MapError, RoadGraph, RoadGraphBuilder, WaySpec};

/// Default origin for synthetic maps (an inner-city location).
pub const DEFAULT_ORIGIN: LatLon<f64> = LatLon {
    lat: 51.4925,
    lon: 7.4137,
};

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Distance between neighbouring intersections, meters.
    pub spacing: f64,
    /// Value of the `lanes` tag on every way, if any.
    pub lanes: Option<u8>,
    /// `maxspeed` tag in km/h, if any.
    pub max_speed_kmh: Option<f64>,
    /// Intersections `(row, col)` tagged as traffic signals.
    pub signals: Vec<(usize, usize)>,
    pub origin: LatLon<f64>,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, spacing: f64) -> Self {
        Self {
            rows,
            cols,
            spacing,
            lanes: None,
            max_speed_kmh: None,
            signals: Vec::new(),
            origin: DEFAULT_ORIGIN,
        }
    }

    /// OSM node id of intersection `(row, col)`; row 0 is the southern edge.
    pub fn node_id(&self, row: usize, col: usize) -> i64 {
        1 + (row * self.cols + col) as i64
    }

    pub fn position(&self, row: usize, col: usize) -> Point<f64> {
        let x0 = (self.cols as f64 - 1.0) * self.spacing / 2.0;
        let y0 = (self.rows as f64 - 1.0) * self.spacing / 2.0;
        Point::new(col as f64 * self.spacing - x0, row as f64 * self.spacing - y0)
    }

    pub fn row_way_id(&self, row: usize) -> i64 {
        1000 + row as i64
    }

    pub fn col_way_id(&self, col: usize) -> i64 {
        2000 + col as i64
    }
}

fn push_node(out: &mut String, id: i64, coord: LatLon<f64>, signal: bool) {
    if signal {
        let _ = writeln!(
            out,
            "  <node id=\"{id}\" lat=\"{:.9}\" lon=\"{:.9}\">\n    <tag k=\"highway\" v=\"traffic_signals\"/>\n  </node>",
            coord.lat, coord.lon
        );
    } else {
        let _ = writeln!(out, "  <node id=\"{id}\" lat=\"{:.9}\" lon=\"{:.9}\"/>", coord.lat, coord.lon);
    }
}

fn push_way(out: &mut String, id: i64, refs: &[i64], tags: &[(&str, String)]) {
    let _ = writeln!(out, "  <way id=\"{id}\">");
    for r in refs {
        let _ = writeln!(out, "    <nd ref=\"{r}\"/>");
    }
    for (k, v) in tags {
        let _ = writeln!(out, "    <tag k=\"{k}\" v=\"{v}\"/>");
    }
    out.push_str("  </way>\n");
}

/// Manhattan grid: one way per row and per column, all two-way.
pub fn grid_osm(spec: &GridSpec) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"vmobsim\">\n");
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let coord = unproject(spec.position(r, c), spec.origin);
            push_node(&mut out, spec.node_id(r, c), coord, spec.signals.contains(&(r, c)));
        }
    }
    let mut tags = vec![("highway", "residential".to_owned())];
    if let Some(l) = spec.lanes {
        tags.push(("lanes", l.to_string()));
    }
    if let Some(v) = spec.max_speed_kmh {
        tags.push(("maxspeed", format!("{v}")));
    }
    for r in 0..spec.rows {
        let refs: Vec<i64> = (0..spec.cols).map(|c| spec.node_id(r, c)).collect();
        push_way(&mut out, spec.row_way_id(r), &refs, &tags);
    }
    for c in 0..spec.cols {
        let refs: Vec<i64> = (0..spec.rows).map(|r| spec.node_id(r, c)).collect();
        push_way(&mut out, spec.col_way_id(c), &refs, &tags);
    }
    out.push_str("</osm>\n");
    out
}

/// Straight west-to-east corridor starting at x = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CorridorSpec {
    pub length: f64,
    pub segments: usize,
    pub lanes: u8,
    pub one_way: bool,
    pub max_speed: f64,
    pub way_id: i64,
}

impl CorridorSpec {
    pub fn new(length: f64, segments: usize) -> Self {
        Self {
            length,
            segments,
            lanes: 1,
            one_way: true,
            max_speed: super::DEFAULT_MAX_SPEED,
            way_id: 1,
        }
    }

    pub fn node_id(&self, i: usize) -> i64 {
        1 + i as i64
    }

    pub fn node_x(&self, i: usize) -> f64 {
        self.length * i as f64 / self.segments as f64
    }
}

/// Corridor built directly in local coordinates (exact lengths).
pub fn corridor_graph(spec: &CorridorSpec) -> Result<RoadGraph, MapError> {
    let mut b = RoadGraphBuilder::new(DEFAULT_ORIGIN);
    for i in 0..=spec.segments {
        b.insert_local(super::NodeId(spec.node_id(i)), Point::new(spec.node_x(i), 0.0));
    }
    let backward = if spec.one_way { 0 } else { spec.lanes };
    b.insert_way(
        WaySpec::new(spec.way_id, (0..=spec.segments).map(|i| spec.node_id(i)))
            .lanes(spec.lanes, backward)
            .max_speed(spec.max_speed),
    );
    b.build()
}

/// The same corridor as OSM XML, centred on [`DEFAULT_ORIGIN`].
pub fn corridor_osm(spec: &CorridorSpec) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"vmobsim\">\n");
    for i in 0..=spec.segments {
        let p = Point::new(spec.node_x(i) - spec.length / 2.0, 0.0);
        push_node(&mut out, spec.node_id(i), unproject(p, DEFAULT_ORIGIN), false);
    }
    let refs: Vec<i64> = (0..=spec.segments).map(|i| spec.node_id(i)).collect();
    let mut tags = vec![
        ("highway", "secondary".to_owned()),
        ("lanes", spec.lanes.to_string()),
        ("maxspeed", format!("{}", spec.max_speed * 3.6)),
    ];
    if spec.one_way {
        tags.push(("oneway", "yes".to_owned()));
    }
    push_way(&mut out, spec.way_id, &refs, &tags);
    out.push_str("</osm>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{parse_osm, NodeId, WayId};
    use approx::assert_relative_eq;

    #[test]
    fn grid_round_trips_through_parser() {
        let mut spec = GridSpec::new(3, 4, 250.0);
        spec.lanes = Some(2);
        spec.signals = vec![(1, 1)];
        let g = parse_osm(&grid_osm(&spec)).unwrap();
        assert_eq!(g.way_count(), 7);
        assert_eq!(g.node_count(), 12);
        assert_eq!(g.segments().len(), 3 * 3 + 4 * 2);
        assert!(g.signal(NodeId(spec.node_id(1, 1))).is_some());
        for s in g.segments() {
            assert_relative_eq!(s.length, 250.0, max_relative = 1e-6);
        }
        let p = g.node(NodeId(spec.node_id(0, 0))).unwrap().position;
        assert_relative_eq!(p.x, -375.0, epsilon = 1e-3);
        assert_relative_eq!(p.y, -250.0, epsilon = 1e-3);
    }

    #[test]
    fn corridor_graph_has_exact_lengths() {
        let g = corridor_graph(&CorridorSpec::new(1000.0, 4)).unwrap();
        let w = g.way(WayId(1)).unwrap();
        assert!(w.one_way);
        assert_eq!(g.segments().len(), 4);
        assert!(g.segments().iter().all(|s| s.length == 250.0));
    }

    #[test]
    fn corridor_osm_parses() {
        let mut spec = CorridorSpec::new(1000.0, 2);
        spec.lanes = 2;
        let g = parse_osm(&corridor_osm(&spec)).unwrap();
        let w = g.way(WayId(1)).unwrap();
        assert_eq!((w.lanes_forward, w.lanes_backward), (2, 0));
        let total: f64 = g.segments().iter().map(|s| s.length).sum();
        assert_relative_eq!(total, 1000.0, max_relative = 1e-6);
    }
}
