#![allow(dead_code)]

use rand::Rng;
use vmobsim::map::{NodeId, RoadGraph, RoadGraphBuilder, WaySpec};
use vmobsim::Coordinate;

/// Directed edge list of a random graph: (tail, head, way id), node `i` has id `i + 1`.
pub struct Digraph {
    pub graph: RoadGraph,
    pub n: usize,
    pub positions: Vec<(f64, f64)>,
    pub edges: Vec<(usize, usize, i64)>,
}

impl Digraph {
    pub fn length(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.positions[a], self.positions[b]);
        ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt()
    }

    pub fn id(i: usize) -> NodeId {
        NodeId(i as i64 + 1)
    }
}

/// Random directed graph of `n` nodes, each ordered pair an edge with probability `p`.
/// Every edge is a one-way, two-node way so link lengths are the Euclidean distances.
pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Digraph {
    let positions: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)))
        .collect();
    let mut b = RoadGraphBuilder::new(Coordinate::new(0.0, 0.0));
    for (i, p) in positions.iter().enumerate() {
        b = b.node(i as i64 + 1, p.0, p.1);
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for c in 0..n {
            if a != c && rng.random_bool(p) {
                let id = 1 + edges.len() as i64;
                b = b.way(WaySpec::new(id, [a as i64 + 1, c as i64 + 1]).one_way());
                edges.push((a, c, id));
            }
        }
    }
    Digraph {
        graph: b.build().expect("random graph builds"),
        n,
        positions,
        edges,
    }
}

/// Minimum cost over all simple paths from `from` to `to`, by exhaustive search.
pub fn brute_force<F: Fn(usize, usize, i64) -> f64>(g: &Digraph, from: usize, to: usize, cost: F) -> Option<f64> {
    fn dfs<F: Fn(usize, usize, i64) -> f64>(
        g: &Digraph,
        at: usize,
        to: usize,
        acc: f64,
        seen: &mut Vec<bool>,
        best: &mut Option<f64>,
        cost: &F,
    ) {
        if at == to {
            *best = Some(best.map_or(acc, |b: f64| b.min(acc)));
            return;
        }
        for &(a, b, id) in &g.edges {
            if a == at && !seen[b] {
                seen[b] = true;
                dfs(g, b, to, acc + cost(a, b, id), seen, best, cost);
                seen[b] = false;
            }
        }
    }
    let mut seen = vec![false; g.n];
    seen[from] = true;
    let mut best = None;
    dfs(g, from, to, 0.0, &mut seen, &mut best, &cost);
    best
}
