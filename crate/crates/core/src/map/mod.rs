//! Road network: nodes, ways, directed segments, lanes and signals.

pub mod geo;
mod osm;
mod signal;
pub mod synthetic;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use geo::{LatLon, Point};
pub use osm::parse_osm;
pub use signal::{SignalPhase, SignalTiming, TrafficSignal};

/// Urban default when a way carries no usable `maxspeed` (50 km/h).
pub const DEFAULT_MAX_SPEED: f64 = 13.89;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("line {line}: <{element}> attribute `{attribute}` has invalid value {value:?}")]
    InvalidAttribute {
        line: u32,
        element: String,
        attribute: String,
        value: String,
    },
    #[error("way {way} references missing node {node}")]
    DanglingReference { way: WayId, node: NodeId },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: i64 },
    #[error("node {0} has coordinates outside the valid range")]
    InvalidCoordinate(NodeId),
    #[error("way {0} needs at least two distinct nodes")]
    DegenerateWay(WayId),
    #[error("way {0} has no lanes in either direction")]
    NoLanes(WayId),
    #[error("invalid signal timing {0:?}")]
    InvalidSignalTiming(SignalTiming),
    #[error("node {0} is not part of the road graph")]
    UnknownNode(NodeId),
    #[error("way {0} is not part of the road graph")]
    UnknownWay(WayId),
    #[error("way {way} has no segment {index}")]
    UnknownSegment { way: WayId, index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WayId(pub i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for WayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Travel direction relative to the way's node order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// A segment traversed in one direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub segment: SegmentId,
    pub direction: Direction,
}

impl Link {
    pub fn new(segment: SegmentId, direction: Direction) -> Self {
        Self { segment, direction }
    }

    pub fn reversed(self) -> Self {
        Self::new(self.segment, self.direction.reversed())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub coord: LatLon<f64>,
    pub position: Point<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Way {
    pub id: WayId,
    pub node_refs: Vec<NodeId>,
    pub lanes_forward: u8,
    pub lanes_backward: u8,
    /// m/s
    pub max_speed: f64,
    pub one_way: bool,
    pub segments: Vec<SegmentId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub id: SegmentId,
    pub way_id: WayId,
    /// 0-based position within the way.
    pub index: usize,
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
    /// Radians, counter-clockwise from east, for the forward direction.
    pub heading: f64,
}

/// Description of a way handed to [`RoadGraphBuilder`].
#[derive(Clone, Debug, PartialEq)]
pub struct WaySpec {
    pub id: WayId,
    pub node_refs: Vec<NodeId>,
    pub lanes_forward: u8,
    pub lanes_backward: u8,
    pub max_speed: f64,
}

impl WaySpec {
    pub fn new(id: i64, node_refs: impl IntoIterator<Item = i64>) -> Self {
        Self {
            id: WayId(id),
            node_refs: node_refs.into_iter().map(NodeId).collect(),
            lanes_forward: 1,
            lanes_backward: 1,
            max_speed: DEFAULT_MAX_SPEED,
        }
    }

    pub fn one_way(mut self) -> Self {
        self.lanes_backward = 0;
        self
    }

    pub fn lanes(mut self, forward: u8, backward: u8) -> Self {
        self.lanes_forward = forward;
        self.lanes_backward = backward;
        self
    }

    pub fn max_speed(mut self, v: f64) -> Self {
        self.max_speed = v;
        self
    }
}

/// Assembles a [`RoadGraph`] from positioned nodes and way descriptions.
///
/// Nodes not referenced by any way are dropped; signals on dropped nodes too.
#[derive(Clone, Debug)]
pub struct RoadGraphBuilder {
    origin: LatLon<f64>,
    nodes: BTreeMap<NodeId, Node>,
    ways: Vec<WaySpec>,
    signals: BTreeMap<NodeId, SignalTiming>,
}

impl RoadGraphBuilder {
    pub fn new(origin: LatLon<f64>) -> Self {
        Self {
            origin,
            nodes: BTreeMap::new(),
            ways: Vec::new(),
            signals: BTreeMap::new(),
        }
    }

    /// Adds a node at local coordinates; lat/lon follow from the origin.
    pub fn node(mut self, id: i64, x: f64, y: f64) -> Self {
        self.insert_local(NodeId(id), Point::new(x, y));
        self
    }

    pub fn insert_local(&mut self, id: NodeId, position: Point<f64>) {
        let coord = geo::unproject(position, self.origin);
        self.nodes.insert(id, Node { id, coord, position });
    }

    pub fn insert_geo(&mut self, id: NodeId, coord: LatLon<f64>) {
        let position = geo::project(coord, self.origin);
        self.nodes.insert(id, Node { id, coord, position });
    }

    pub fn way(mut self, spec: WaySpec) -> Self {
        self.ways.push(spec);
        self
    }

    pub fn insert_way(&mut self, spec: WaySpec) {
        self.ways.push(spec);
    }

    pub fn signal(mut self, node: i64, timing: SignalTiming) -> Self {
        self.signals.insert(NodeId(node), timing);
        self
    }

    pub fn insert_signal(&mut self, node: NodeId, timing: SignalTiming) {
        self.signals.insert(node, timing);
    }

    pub fn build(self) -> Result<RoadGraph, MapError> {
        let mut ways = self.ways;
        ways.sort_by_key(|w| w.id);
        for pair in ways.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(MapError::DuplicateId {
                    kind: "way",
                    id: pair[0].id.0,
                });
            }
        }

        let mut graph = RoadGraph {
            origin: self.origin,
            nodes: BTreeMap::new(),
            ways: BTreeMap::new(),
            segments: Vec::new(),
            adjacency: BTreeMap::new(),
            signals: BTreeMap::new(),
        };

        for spec in ways {
            if spec.lanes_forward == 0 && spec.lanes_backward == 0 {
                return Err(MapError::NoLanes(spec.id));
            }
            let mut refs: Vec<NodeId> = Vec::with_capacity(spec.node_refs.len());
            for &r in &spec.node_refs {
                let node = self.nodes.get(&r).ok_or(MapError::DanglingReference {
                    way: spec.id,
                    node: r,
                })?;
                if !node.coord.is_valid() {
                    return Err(MapError::InvalidCoordinate(r));
                }
                // Collapse repeated or co-located consecutive refs.
                if let Some(prev) = refs.last() {
                    if *prev == r || self.nodes[prev].position == node.position {
                        continue;
                    }
                }
                refs.push(r);
            }
            if refs.len() < 2 {
                return Err(MapError::DegenerateWay(spec.id));
            }

            let mut seg_ids = Vec::with_capacity(refs.len() - 1);
            for (index, pair) in refs.windows(2).enumerate() {
                let (a, b) = (&self.nodes[&pair[0]], &self.nodes[&pair[1]]);
                let id = SegmentId(graph.segments.len());
                graph.segments.push(Segment {
                    id,
                    way_id: spec.id,
                    index,
                    from: a.id,
                    to: b.id,
                    length: a.position.distance(b.position),
                    heading: a.position.heading_to(b.position),
                });
                seg_ids.push(id);
            }
            for r in &refs {
                graph.nodes.entry(*r).or_insert_with(|| self.nodes[r].clone());
            }
            graph.ways.insert(
                spec.id,
                Way {
                    id: spec.id,
                    node_refs: refs,
                    lanes_forward: spec.lanes_forward,
                    lanes_backward: spec.lanes_backward,
                    max_speed: spec.max_speed,
                    one_way: spec.lanes_backward == 0,
                    segments: seg_ids,
                },
            );
        }

        for seg in &graph.segments {
            let way = &graph.ways[&seg.way_id];
            if way.lanes_forward > 0 {
                graph
                    .adjacency
                    .entry(seg.from)
                    .or_default()
                    .push(Link::new(seg.id, Direction::Forward));
            }
            if way.lanes_backward > 0 {
                graph
                    .adjacency
                    .entry(seg.to)
                    .or_default()
                    .push(Link::new(seg.id, Direction::Backward));
            }
        }
        for links in graph.adjacency.values_mut() {
            let segments = &graph.segments;
            links.sort_by_key(|l| {
                let s = &segments[l.segment.0];
                let head = match l.direction {
                    Direction::Forward => s.to,
                    Direction::Backward => s.from,
                };
                (head, s.way_id, s.index, l.direction)
            });
        }

        for (node, timing) in self.signals {
            timing.validate()?;
            if graph.nodes.contains_key(&node) {
                graph.signals.insert(node, TrafficSignal { node_id: node, timing });
            }
        }
        Ok(graph)
    }
}

/// Immutable, routable road network in local metric coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadGraph {
    origin: LatLon<f64>,
    nodes: BTreeMap<NodeId, Node>,
    ways: BTreeMap<WayId, Way>,
    segments: Vec<Segment>,
    adjacency: BTreeMap<NodeId, Vec<Link>>,
    signals: BTreeMap<NodeId, TrafficSignal>,
}

impl RoadGraph {
    pub fn origin(&self) -> LatLon<f64> {
        self.origin
    }

    pub fn is_empty(&self) -> bool {
        self.ways.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn way(&self, id: WayId) -> Option<&Way> {
        self.ways.get(&id)
    }

    pub fn ways(&self) -> impl Iterator<Item = &Way> {
        self.ways.values()
    }

    pub fn way_count(&self) -> usize {
        self.ways.len()
    }

    pub fn segment(&self, id: SegmentId) -> &Segment {
        &self.segments[id.0]
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Looks up a segment by its (way, index) address.
    pub fn segment_at(&self, way: WayId, index: usize) -> Result<&Segment, MapError> {
        let w = self.ways.get(&way).ok_or(MapError::UnknownWay(way))?;
        let id = w
            .segments
            .get(index)
            .ok_or(MapError::UnknownSegment { way, index })?;
        Ok(&self.segments[id.0])
    }

    /// Traversable links leaving `node`, ordered by head node id.
    pub fn outgoing(&self, node: NodeId) -> &[Link] {
        self.adjacency.get(&node).map_or(&[], Vec::as_slice)
    }

    /// Every traversable link in the graph, in segment order.
    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.segments.iter().flat_map(move |s| {
            [Direction::Forward, Direction::Backward]
                .into_iter()
                .map(move |d| Link::new(s.id, d))
                .filter(move |l| self.lanes(*l) > 0)
        })
    }

    pub fn link_tail(&self, link: Link) -> NodeId {
        let s = self.segment(link.segment);
        match link.direction {
            Direction::Forward => s.from,
            Direction::Backward => s.to,
        }
    }

    pub fn link_head(&self, link: Link) -> NodeId {
        let s = self.segment(link.segment);
        match link.direction {
            Direction::Forward => s.to,
            Direction::Backward => s.from,
        }
    }

    pub fn link_length(&self, link: Link) -> f64 {
        self.segment(link.segment).length
    }

    pub fn lanes(&self, link: Link) -> usize {
        let way = &self.ways[&self.segment(link.segment).way_id];
        usize::from(match link.direction {
            Direction::Forward => way.lanes_forward,
            Direction::Backward => way.lanes_backward,
        })
    }

    pub fn max_speed(&self, link: Link) -> f64 {
        self.ways[&self.segment(link.segment).way_id].max_speed
    }

    pub fn is_traversable(&self, link: Link) -> bool {
        self.lanes(link) > 0
    }

    /// Position at distance `s` from the link's tail.
    pub fn link_point(&self, link: Link, s: f64) -> Point<f64> {
        let seg = self.segment(link.segment);
        let a = self.nodes[&self.link_tail(link)].position;
        let b = self.nodes[&self.link_head(link)].position;
        a.lerp(b, (s / seg.length).clamp(0.0, 1.0))
    }

    pub fn signal(&self, node: NodeId) -> Option<&TrafficSignal> {
        self.signals.get(&node)
    }

    pub fn signals(&self) -> impl Iterator<Item = &TrafficSignal> {
        self.signals.values()
    }

    /// Installs or retimes a signal at an existing node.
    pub fn set_signal(&mut self, node: NodeId, timing: SignalTiming) -> Result<(), MapError> {
        timing.validate()?;
        if !self.nodes.contains_key(&node) {
            return Err(MapError::UnknownNode(node));
        }
        self.signals.insert(node, TrafficSignal { node_id: node, timing });
        Ok(())
    }

    /// (min, max) corners of the node positions.
    pub fn bounds(&self) -> Option<(Point<f64>, Point<f64>)> {
        let mut it = self.nodes.values().map(|n| n.position);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (
                Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }
}
