//! Shortest-path routing over the directed road graph.
//!
//! Routes are computed on request with Dijkstra's algorithm. The default cost
//! is geometric length; [`shortest_path_by`] accepts any non-negative
//! per-link cost. Among equal-cost alternatives the predecessor with the
//! smaller node id wins, so results never depend on hash or heap order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::map::{Link, NodeId, RoadGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("node {0} is not in the road graph")]
    UnknownNode(NodeId),
    #[error("no route from node {from} to node {to}")]
    NoRoute { from: NodeId, to: NodeId },
    #[error("node {0} is not on the route")]
    NotOnRoute(NodeId),
    #[error("link cost must be finite and non-negative, got {0}")]
    InvalidCost(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub node_ids: Vec<NodeId>,
    /// `links[i]` connects `node_ids[i]` to `node_ids[i + 1]`.
    pub links: Vec<Link>,
    pub total_cost: f64,
}

impl Route {
    /// A route that is already complete at `node`.
    pub fn at(node: NodeId) -> Self {
        Self {
            node_ids: vec![node],
            links: Vec::new(),
            total_cost: 0.0,
        }
    }

    /// Single-link route along `link` with cost equal to its length.
    pub fn single(graph: &RoadGraph, link: Link) -> Self {
        Self {
            node_ids: vec![graph.link_tail(link), graph.link_head(link)],
            links: vec![link],
            total_cost: graph.link_length(link),
        }
    }

    pub fn origin(&self) -> NodeId {
        self.node_ids[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.node_ids.last().expect("route has at least one node")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NextStep {
    Link(Link),
    /// `current` is the final node of the route.
    Complete,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: NodeId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (cost, node id).
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest route by geometric length.
pub fn shortest_path(graph: &RoadGraph, from: NodeId, to: NodeId) -> Result<Route, RoutingError> {
    shortest_path_by(graph, from, to, |g, l| g.link_length(l))
}

/// Shortest route under an arbitrary non-negative link cost.
pub fn shortest_path_by<C>(graph: &RoadGraph, from: NodeId, to: NodeId, cost: C) -> Result<Route, RoutingError>
where
    C: Fn(&RoadGraph, Link) -> f64,
{
    for n in [from, to] {
        if !graph.contains_node(n) {
            return Err(RoutingError::UnknownNode(n));
        }
    }
    if from == to {
        return Ok(Route::at(from));
    }

    let mut dist: HashMap<NodeId, f64> = HashMap::new();
    let mut prev: HashMap<NodeId, (NodeId, Link)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(from, 0.0);
    heap.push(Entry { cost: 0.0, node: from });

    while let Some(Entry { cost: d, node: u }) = heap.pop() {
        if d > dist[&u] {
            continue;
        }
        if u == to {
            break;
        }
        for &link in graph.outgoing(u) {
            let c = cost(graph, link);
            if !c.is_finite() || c < 0.0 {
                return Err(RoutingError::InvalidCost(c));
            }
            let v = graph.link_head(link);
            let nd = d + c;
            let better = match dist.get(&v) {
                None => true,
                Some(&old) if nd < old => true,
                Some(&old) if nd == old => prev.get(&v).is_some_and(|(p, _)| u < *p),
                _ => false,
            };
            if better {
                let improved = dist.get(&v).is_none_or(|&old| nd < old);
                dist.insert(v, nd);
                prev.insert(v, (u, link));
                if improved {
                    heap.push(Entry { cost: nd, node: v });
                }
            }
        }
    }

    let Some(&total_cost) = dist.get(&to) else {
        return Err(RoutingError::NoRoute { from, to });
    };
    let mut node_ids = vec![to];
    let mut links = Vec::new();
    let mut cur = to;
    while cur != from {
        let (p, link) = prev[&cur];
        links.push(link);
        node_ids.push(p);
        cur = p;
    }
    node_ids.reverse();
    links.reverse();
    Ok(Route {
        node_ids,
        links,
        total_cost,
    })
}

/// The link leaving `current` along `route`, or [`NextStep::Complete`] at its end.
pub fn next_segment(route: &Route, current: NodeId) -> Result<NextStep, RoutingError> {
    let i = route
        .node_ids
        .iter()
        .position(|n| *n == current)
        .ok_or(RoutingError::NotOnRoute(current))?;
    Ok(route.links.get(i).map_or(NextStep::Complete, |l| NextStep::Link(*l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{LatLon, RoadGraphBuilder, WaySpec};
    use approx::assert_relative_eq;

    fn chain() -> RoadGraph {
        RoadGraphBuilder::new(LatLon::new(0.0, 0.0))
            .node(1, 0.0, 0.0)
            .node(2, 30.0, 40.0)
            .node(3, 30.0, 140.0)
            .way(WaySpec::new(1, [1, 2]))
            .way(WaySpec::new(2, [2, 3]))
            .build()
            .unwrap()
    }

    #[test]
    fn identity_route() {
        let r = shortest_path(&chain(), NodeId(2), NodeId(2)).unwrap();
        assert_eq!(r, Route::at(NodeId(2)));
        assert_eq!(r.total_cost, 0.0);
    }

    #[test]
    fn chain_route() {
        let g = chain();
        let r = shortest_path(&g, NodeId(1), NodeId(3)).unwrap();
        assert_eq!(r.node_ids, vec![NodeId(1), NodeId(2), NodeId(3)]);
        assert_relative_eq!(r.total_cost, 150.0);
        let back = shortest_path(&g, NodeId(3), NodeId(1)).unwrap();
        assert_eq!(back.node_ids, vec![NodeId(3), NodeId(2), NodeId(1)]);
    }

    #[test]
    fn next_segment_walks_route() {
        let g = chain();
        let r = shortest_path(&g, NodeId(1), NodeId(3)).unwrap();
        let NextStep::Link(ab) = next_segment(&r, NodeId(1)).unwrap() else { panic!() };
        assert_eq!((g.link_tail(ab), g.link_head(ab)), (NodeId(1), NodeId(2)));
        let NextStep::Link(bc) = next_segment(&r, NodeId(2)).unwrap() else { panic!() };
        assert_eq!((g.link_tail(bc), g.link_head(bc)), (NodeId(2), NodeId(3)));
        assert_eq!(next_segment(&r, NodeId(3)).unwrap(), NextStep::Complete);
        assert_eq!(next_segment(&r, NodeId(9)), Err(RoutingError::NotOnRoute(NodeId(9))));
    }

    #[test]
    fn one_way_is_respected() {
        let g = RoadGraphBuilder::new(LatLon::new(0.0, 0.0))
            .node(1, 0.0, 0.0)
            .node(2, 100.0, 0.0)
            .way(WaySpec::new(1, [1, 2]).one_way())
            .build()
            .unwrap();
        assert!(shortest_path(&g, NodeId(1), NodeId(2)).is_ok());
        assert_eq!(
            shortest_path(&g, NodeId(2), NodeId(1)),
            Err(RoutingError::NoRoute {
                from: NodeId(2),
                to: NodeId(1)
            })
        );
    }

    #[test]
    fn unknown_nodes_are_rejected() {
        assert_eq!(
            shortest_path(&chain(), NodeId(1), NodeId(77)),
            Err(RoutingError::UnknownNode(NodeId(77)))
        );
    }

    #[test]
    fn equal_cost_tie_prefers_smaller_predecessor() {
        // Diamond 1 -> {2, 3} -> 4 with equal lengths.
        let g = RoadGraphBuilder::new(LatLon::new(0.0, 0.0))
            .node(1, 0.0, 0.0)
            .node(3, 100.0, 100.0)
            .node(2, 100.0, -100.0)
            .node(4, 200.0, 0.0)
            .way(WaySpec::new(1, [1, 3, 4]))
            .way(WaySpec::new(2, [1, 2, 4]))
            .build()
            .unwrap();
        let r = shortest_path(&g, NodeId(1), NodeId(4)).unwrap();
        assert_eq!(r.node_ids, vec![NodeId(1), NodeId(2), NodeId(4)]);
    }

    #[test]
    fn custom_cost_changes_choice() {
        let g = RoadGraphBuilder::new(LatLon::new(0.0, 0.0))
            .node(1, 0.0, 0.0)
            .node(2, 100.0, 0.0)
            .node(3, 50.0, 10.0)
            .way(WaySpec::new(1, [1, 2]).max_speed(5.0))
            .way(WaySpec::new(2, [1, 3, 2]).max_speed(30.0))
            .build()
            .unwrap();
        let by_len = shortest_path(&g, NodeId(1), NodeId(2)).unwrap();
        assert_eq!(by_len.node_ids.len(), 2);
        let by_time = shortest_path_by(&g, NodeId(1), NodeId(2), |g, l| g.link_length(l) / g.max_speed(l)).unwrap();
        assert_eq!(by_time.node_ids, vec![NodeId(1), NodeId(3), NodeId(2)]);
        assert!(matches!(
            shortest_path_by(&g, NodeId(1), NodeId(2), |_, _| -1.0),
            Err(RoutingError::InvalidCost(_))
        ));
    }
}
