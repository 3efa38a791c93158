use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Training ranges for sampled street graphs.
pub const DISTANCE_RANGE: (f64, f64) = (1.0, 5.0);
pub const TIME_RANGE: (f64, f64) = (2.0, 5.0);
pub const ELEVATION_RANGE: (f64, f64) = (-1.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: i64,
    pub dst: i64,
    pub distance: f64,
    pub time: f64,
    /// Signed elevation change going from `src` to `dst`.
    pub elev: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Arc {
    edge: usize,
    to: usize,
    reversed: bool,
}

/// Street network. In an undirected graph each edge can be traversed both
/// ways; traversing it from `dst` to `src` negates the elevation change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct StreetGraph {
    nodes: Vec<i64>,
    edges: Vec<Edge>,
    start: i64,
    goal: i64,
    directed: bool,
    index: HashMap<i64, usize>,
    out: Vec<Vec<Arc>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<i64>,
    edges: Vec<Edge>,
    start: i64,
    goal: i64,
    #[serde(default)]
    directed: bool,
}

impl TryFrom<GraphFile> for StreetGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        StreetGraph::new(f.nodes, f.edges, f.start, f.goal, f.directed)
    }
}

impl From<StreetGraph> for GraphFile {
    fn from(g: StreetGraph) -> Self {
        GraphFile {
            nodes: g.nodes,
            edges: g.edges,
            start: g.start,
            goal: g.goal,
            directed: g.directed,
        }
    }
}

impl StreetGraph {
    pub fn new(nodes: Vec<i64>, edges: Vec<Edge>, start: i64, goal: i64, directed: bool) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, &n) in nodes.iter().enumerate() {
            if index.insert(n, i).is_some() {
                return Err(Error::Invariant(format!("duplicate node id {n}")));
            }
        }
        let lookup = |id: i64, what: &str| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| Error::Invariant(format!("{what} references unknown node {id}")))
        };
        let mut out: Vec<Vec<Arc>> = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            let s = lookup(e.src, &format!("edge {k}"))?;
            let t = lookup(e.dst, &format!("edge {k}"))?;
            if !(e.distance.is_finite() && e.distance > 0.0) {
                return Err(Error::Invariant(format!("edge {k}: distance {} must be > 0", e.distance)));
            }
            if !(e.time.is_finite() && e.time > 0.0) {
                return Err(Error::Invariant(format!("edge {k}: travel time {} must be > 0", e.time)));
            }
            if !e.elev.is_finite() {
                return Err(Error::Invariant(format!("edge {k}: elevation is not finite")));
            }
            out[s].push(Arc {
                edge: k,
                to: t,
                reversed: false,
            });
            if !directed {
                out[t].push(Arc {
                    edge: k,
                    to: s,
                    reversed: true,
                });
            }
        }
        let s = lookup(start, "start")?;
        let g = lookup(goal, "goal")?;
        if s == g {
            return Err(Error::Invariant("start and goal coincide".into()));
        }
        let graph = StreetGraph {
            nodes,
            edges,
            start,
            goal,
            directed,
            index,
            out,
        };
        if !graph.reachable_from(s)[g] {
            return Err(Error::UnreachableGoal);
        }
        Ok(graph)
    }

    /// Training topology: a 3x3 lattice (9 nodes, 12 edges) from the
    /// top-left to the bottom-right node, with features drawn uniformly
    /// from the training ranges.
    pub fn sample_training(seed: u64) -> Self {
        let mut rng = rng_from(seed, &[0x67_72_61_70_68]);
        let mut pairs = Vec::with_capacity(12);
        for r in 0..3i64 {
            for c in 0..3i64 {
                let n = r * 3 + c;
                if c < 2 {
                    pairs.push((n, n + 1));
                }
                if r < 2 {
                    pairs.push((n, n + 3));
                }
            }
        }
        let edges = pairs
            .into_iter()
            .map(|(src, dst)| Edge {
                src,
                dst,
                distance: rng.random_range(DISTANCE_RANGE.0..=DISTANCE_RANGE.1),
                time: rng.random_range(TIME_RANGE.0..=TIME_RANGE.1),
                elev: rng.random_range(ELEVATION_RANGE.0..=ELEVATION_RANGE.1),
            })
            .collect();
        StreetGraph::new((0..9).collect(), edges, 0, 8, false).expect("lattice is connected")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[i64] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn goal(&self) -> i64 {
        self.goal
    }

    pub fn start_index(&self) -> usize {
        self.index[&self.start]
    }

    pub fn goal_index(&self) -> usize {
        self.index[&self.goal]
    }

    pub fn node_index(&self, id: i64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Replace every edge's (distance, time, elevation); topology is kept.
    pub fn with_edge_features(&self, features: &[[f64; 3]]) -> Result<Self> {
        if features.len() != self.edges.len() {
            return Err(Error::Shape {
                expected: self.edges.len() * 3,
                got: features.len() * 3,
            });
        }
        let edges = self
            .edges
            .iter()
            .zip(features)
            .map(|(e, f)| Edge {
                src: e.src,
                dst: e.dst,
                distance: f[0],
                time: f[1],
                elev: f[2],
            })
            .collect();
        StreetGraph::new(self.nodes.clone(), edges, self.start, self.goal, self.directed)
    }

    pub(crate) fn traverse(&self, state: usize, action: usize) -> Result<(usize, [f64; 3])> {
        let arc = self
            .out
            .get(state)
            .and_then(|arcs| arcs.get(action))
            .ok_or(Error::InvalidAction { state, action })?;
        let e = &self.edges[arc.edge];
        let elev = if arc.reversed { -e.elev } else { e.elev };
        Ok((arc.to, [e.distance, e.time, elev]))
    }

    pub(crate) fn next_state(&self, state: usize, action: usize) -> Result<usize> {
        self.traverse(state, action).map(|(n, _)| n)
    }

    pub(crate) fn moves(&self, state: usize) -> Vec<(usize, usize)> {
        self.out
            .get(state)
            .map(|arcs| arcs.iter().enumerate().map(|(a, arc)| (a, arc.to)).collect())
            .unwrap_or_default()
    }

    fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for arc in &self.out[u] {
                if !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}
