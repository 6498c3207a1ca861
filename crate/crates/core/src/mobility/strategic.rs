//! Strategic layer: where a vehicle heads next.

use rand::Rng;

use super::MobilityError;
use crate::map::{Link, NodeId, RoadGraph};

#[derive(Clone, Debug, PartialEq)]
pub enum StrategicModel {
    /// Visit `destinations` in order; `cursor` indexes the current target.
    Trip { destinations: Vec<NodeId>, cursor: usize },
    /// At every node pick a uniformly random outgoing link, avoiding a
    /// U-turn unless it is the only option.
    RandomDirection,
}

/// Outcome of a strategic decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NextLeg {
    /// Route to this node.
    Destination(NodeId),
    /// Follow exactly this link.
    Link(Link),
    Done,
}

impl StrategicModel {
    pub fn trip(destinations: impl IntoIterator<Item = NodeId>) -> Self {
        StrategicModel::Trip {
            destinations: destinations.into_iter().collect(),
            cursor: 0,
        }
    }

    /// Node the vehicle is currently heading for, if the model has one.
    pub fn current_destination(&self) -> Option<NodeId> {
        match self {
            StrategicModel::Trip { destinations, cursor } => destinations.get(*cursor).copied(),
            StrategicModel::RandomDirection => None,
        }
    }

    pub fn is_trip(&self) -> bool {
        matches!(self, StrategicModel::Trip { .. })
    }

    /// Decision taken on arrival at `arrived_at`, reached via `via`.
    ///
    /// A trip advances its cursor only when `arrived_at` is the current
    /// destination. Random draws come only from `rng`.
    pub fn next<R: Rng + ?Sized>(
        &mut self,
        graph: &RoadGraph,
        arrived_at: NodeId,
        via: Option<Link>,
        rng: &mut R,
    ) -> Result<NextLeg, MobilityError> {
        match self {
            StrategicModel::Trip { destinations, cursor } => {
                if destinations.get(*cursor) == Some(&arrived_at) {
                    *cursor += 1;
                }
                Ok(destinations
                    .get(*cursor)
                    .map_or(NextLeg::Done, |d| NextLeg::Destination(*d)))
            }
            StrategicModel::RandomDirection => {
                let outgoing = graph.outgoing(arrived_at);
                let reverse = via.map(Link::reversed);
                let forward: Vec<Link> = outgoing.iter().copied().filter(|l| Some(*l) != reverse).collect();
                let choice = if !forward.is_empty() {
                    forward[rng.random_range(0..forward.len())]
                } else if let Some(&back) = outgoing.first() {
                    back
                } else {
                    return Err(MobilityError::Stranded { node: arrived_at });
                };
                Ok(NextLeg::Link(choice))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{LatLon, RoadGraphBuilder, WaySpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn star() -> RoadGraph {
        // Centre 0 with arms to 1 (west), 2 (north), 3 (east), 4 (south).
        RoadGraphBuilder::new(LatLon::new(0.0, 0.0))
            .node(0, 0.0, 0.0)
            .node(1, -100.0, 0.0)
            .node(2, 0.0, 100.0)
            .node(3, 100.0, 0.0)
            .node(4, 0.0, -100.0)
            .node(5, 200.0, 0.0)
            .way(WaySpec::new(1, [1, 0]))
            .way(WaySpec::new(2, [0, 2]))
            .way(WaySpec::new(3, [0, 3]))
            .way(WaySpec::new(4, [0, 4]))
            .way(WaySpec::new(5, [3, 5]).one_way())
            .build()
            .unwrap()
    }

    #[test]
    fn trip_advances_on_arrival() {
        let g = star();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = StrategicModel::trip([NodeId(1), NodeId(2), NodeId(3)]);
        assert_eq!(m.next(&g, NodeId(1), None, &mut rng).unwrap(), NextLeg::Destination(NodeId(2)));
        // Arriving somewhere else does not move the cursor.
        assert_eq!(m.next(&g, NodeId(4), None, &mut rng).unwrap(), NextLeg::Destination(NodeId(2)));
        assert_eq!(m.next(&g, NodeId(2), None, &mut rng).unwrap(), NextLeg::Destination(NodeId(3)));
        assert_eq!(m.next(&g, NodeId(3), None, &mut rng).unwrap(), NextLeg::Done);
        assert_eq!(m.current_destination(), None);
    }

    fn link_between(g: &RoadGraph, a: i64, b: i64) -> Link {
        *g.outgoing(NodeId(a))
            .iter()
            .find(|l| g.link_head(**l) == NodeId(b))
            .unwrap()
    }

    #[test]
    fn random_direction_is_uniform_over_non_reverse() {
        let g = star();
        let via = link_between(&g, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut m = StrategicModel::RandomDirection;
        let mut counts = std::collections::BTreeMap::new();
        let n = 100_000;
        for _ in 0..n {
            let NextLeg::Link(l) = m.next(&g, NodeId(0), Some(via), &mut rng).unwrap() else {
                panic!()
            };
            *counts.entry(g.link_head(l)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.keys().copied().collect::<Vec<_>>(), vec![NodeId(2), NodeId(3), NodeId(4)]);
        for c in counts.values() {
            let f = *c as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.02, "frequency {f}");
        }
    }

    #[test]
    fn dead_end_turns_around() {
        let g = star();
        let via = link_between(&g, 0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let leg = StrategicModel::RandomDirection.next(&g, NodeId(2), Some(via), &mut rng).unwrap();
        assert_eq!(leg, NextLeg::Link(via.reversed()));
    }

    #[test]
    fn one_way_dead_end_strands() {
        let g = star();
        let via = link_between(&g, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            StrategicModel::RandomDirection.next(&g, NodeId(5), Some(via), &mut rng),
            Err(MobilityError::Stranded { node: NodeId(5) })
        ));
    }
}
