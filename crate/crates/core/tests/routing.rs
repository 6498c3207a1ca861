mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vmobsim::map::synthetic::{grid_osm, GridSpec};
use vmobsim::map::{parse_osm, NodeId, RoadGraph};
use vmobsim::routing::{next_segment, shortest_path, shortest_path_by, NextStep, Route, RoutingError};

use common::{brute_force, random_digraph, Digraph};

fn assert_connected(g: &RoadGraph, route: &Route) {
    assert_eq!(route.links.len() + 1, route.node_ids.len());
    let mut total = 0.0;
    for (i, l) in route.links.iter().enumerate() {
        assert!(g.is_traversable(*l));
        assert_eq!(g.link_tail(*l), route.node_ids[i]);
        assert_eq!(g.link_head(*l), route.node_ids[i + 1]);
        total += g.link_length(*l);
    }
    assert_relative_eq!(total, route.total_cost, max_relative = 1e-12);
}

#[test]
fn grid_distances_are_manhattan() {
    let spec = GridSpec::new(4, 4, 100.0);
    let g = parse_osm(&grid_osm(&spec)).unwrap();
    for (r0, c0, r1, c1) in [(0, 0, 3, 3), (1, 2, 3, 0), (2, 2, 2, 2), (3, 1, 0, 1)] {
        let route = shortest_path(&g, NodeId(spec.node_id(r0, c0)), NodeId(spec.node_id(r1, c1))).unwrap();
        assert_connected(&g, &route);
        let manhattan = 100.0 * ((r0 as f64 - r1 as f64).abs() + (c0 as f64 - c1 as f64).abs());
        assert!((route.total_cost - manhattan).abs() < 0.05, "{} vs {manhattan}", route.total_cost);
    }
}

#[test]
fn next_segment_walks_the_route() {
    let spec = GridSpec::new(3, 3, 100.0);
    let g = parse_osm(&grid_osm(&spec)).unwrap();
    let route = shortest_path(&g, NodeId(spec.node_id(0, 0)), NodeId(spec.node_id(2, 2))).unwrap();
    let mut at = route.origin();
    let mut hops = 0;
    while let NextStep::Link(l) = next_segment(&route, at).unwrap() {
        at = g.link_head(l);
        hops += 1;
    }
    assert_eq!((at, hops), (route.destination(), 4));
    let straight = shortest_path(&g, NodeId(spec.node_id(0, 0)), NodeId(spec.node_id(0, 2))).unwrap();
    assert_eq!(
        next_segment(&straight, NodeId(spec.node_id(2, 2))),
        Err(RoutingError::NotOnRoute(NodeId(spec.node_id(2, 2))))
    );
}

fn check_against_oracle(d: &Digraph, from: usize, to: usize) -> Result<(), TestCaseError> {
    let oracle = brute_force(d, from, to, |a, b, _| d.length(a, b));
    match (shortest_path(&d.graph, Digraph::id(from), Digraph::id(to)), oracle) {
        (Ok(route), Some(best)) => {
            prop_assert!((route.total_cost - best).abs() <= 1e-9 * best.max(1.0), "{} vs {}", route.total_cost, best);
            // Every prefix of a shortest route is itself shortest.
            let mut prefix = 0.0;
            for (i, l) in route.links.iter().enumerate() {
                prefix += d.graph.link_length(*l);
                let mid = (route.node_ids[i + 1].0 - 1) as usize;
                let best_mid = brute_force(d, from, mid, |a, b, _| d.length(a, b)).unwrap();
                prop_assert!((prefix - best_mid).abs() <= 1e-9 * best_mid.max(1.0));
            }
        }
        (Err(RoutingError::NoRoute { .. }) | Err(RoutingError::UnknownNode(_)), None) => {}
        (got, want) => prop_assert!(false, "router {:?}, oracle {:?}", got.map(|r| r.total_cost), want),
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_exhaustive_search(seed in any::<u64>(), n in 2usize..9, p in 0.15f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_digraph(&mut rng, n, p);
        for from in 0..n {
            for to in 0..n {
                if from != to {
                    check_against_oracle(&d, from, to)?;
                }
            }
        }
    }

    #[test]
    fn custom_cost_matches_exhaustive_search(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_digraph(&mut rng, n, 0.4);
        // Cost independent of geometry: a per-way weight in [0, 10), zero allowed.
        let weight = |id: i64| ((id * 7919) % 10) as f64;
        for to in 1..n {
            let oracle = brute_force(&d, 0, to, |_, _, id| weight(id));
            let got = shortest_path_by(&d.graph, Digraph::id(0), Digraph::id(to), |g, l| {
                weight(g.segment(l.segment).way_id.0)
            });
            match (got, oracle) {
                (Ok(r), Some(best)) => prop_assert!((r.total_cost - best).abs() < 1e-9),
                (Err(_), None) => {}
                (got, want) => prop_assert!(false, "router {:?}, oracle {:?}", got.map(|r| r.total_cost), want),
            }
        }
    }
}

#[test]
fn negative_cost_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = random_digraph(&mut rng, 5, 1.0);
    let err = shortest_path_by(&d.graph, Digraph::id(0), Digraph::id(4), |_, _| -1.0).unwrap_err();
    assert!(matches!(err, RoutingError::InvalidCost(_)));
}
