//! Undirected graphs on vertices `0..p` with a canonical sorted edge list.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// An undirected simple graph. Edges are stored as `(min, max)` pairs,
/// sorted ascending and deduplicated, so two graphs are equal iff their
/// vertex counts and edge lists are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    p: usize,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    /// Builds a canonical graph, collapsing duplicate pairs given in either order.
    pub fn new(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if p == 0 {
            return Err(Error::constraint("vertex count p must be at least 1"));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if a >= p {
                return Err(Error::VertexOutOfRange { vertex: a, p });
            }
            if b >= p {
                return Err(Error::VertexOutOfRange { vertex: b, p });
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            set.insert((lo as u32, hi as u32));
        }
        Ok(Graph {
            p,
            edges: set.into_iter().collect(),
        })
    }

    pub fn empty(p: usize) -> Self {
        Graph { p, edges: Vec::new() }
    }

    /// Complete graph on the first `m` of `p` vertices.
    pub fn clique(p: usize, m: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                edges.push((i, j));
            }
        }
        Graph::new(p, &edges)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&(lo as u32, hi as u32)).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.p];
        for &(a, b) in &self.edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            if a as usize == v {
                out.push(b as usize);
            } else if b as usize == v {
                out.push(a as usize);
            }
        }
        out
    }

    /// Adjacency lists for all vertices at once.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.p];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
        adj
    }

    /// Maximal connected vertex sets, each sorted ascending, reported in
    /// ascending order of smallest member. Isolated vertices are singletons.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.p];
        let mut components = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.p {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            comp[start] = id;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = id;
                        members.push(u);
                        stack.push(u);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }

    /// Union of the edge sets of `self` and `other` (same p required).
    pub fn union(&self, other: &Graph) -> Result<Graph> {
        if self.p != other.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: other.p,
            });
        }
        let mut set: BTreeSet<(u32, u32)> = self.edges.iter().copied().collect();
        set.extend(other.edges.iter().copied());
        Ok(Graph {
            p: self.p,
            edges: set.into_iter().collect(),
        })
    }

    /// Parses the text format: a `p <int>` line followed by `e <i> <j>` lines.
    /// `#` starts a comment; blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut p: Option<usize> = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let mut it = line.split_whitespace();
            let Some(tag) = it.next() else { continue };
            match tag {
                "p" => {
                    let v = it
                        .next()
                        .ok_or_else(|| Error::Parse(format!("line {}: p needs a value", lineno + 1)))?;
                    p = Some(v.parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad vertex count {v:?}", lineno + 1))
                    })?);
                }
                "e" => {
                    let a = it
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse(format!("line {}: bad edge", lineno + 1)))?;
                    let b = it
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse(format!("line {}: bad edge", lineno + 1)))?;
                    edges.push((a, b));
                }
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown directive {other:?}",
                        lineno + 1
                    )));
                }
            }
        }
        let p = p.ok_or_else(|| Error::Parse("missing `p <int>` line".into()))?;
        Graph::new(p, &edges)
    }

    /// Writes the text format accepted by [`Graph::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!("p {}\n", self.p);
        for &(a, b) in &self.edges {
            out.push_str(&format!("e {a} {b}\n"));
        }
        out
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(p={}, |E|={})", self.p, self.edges.len())
    }
}

/// Size of the symmetric difference |E1 Δ E2| of two canonical edge lists.
pub fn edit_distance(e1: &[(u32, u32)], e2: &[(u32, u32)]) -> usize {
    let (mut i, mut j, mut diff) = (0, 0, 0);
    while i < e1.len() && j < e2.len() {
        match e1[i].cmp(&e2[j]) {
            std::cmp::Ordering::Less => {
                diff += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                diff += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    diff + (e1.len() - i) + (e2.len() - j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph() {
        let g = Graph::new(3, &[]).unwrap();
        assert_eq!(g.p(), 3);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn canonicalizes_edge_order() {
        let g = Graph::new(2, &[(1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn dedups_reversed_duplicates() {
        let g = Graph::new(4, &[(0, 1), (1, 0), (2, 3)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (2, 3)]);
    }

    #[test]
    fn rejects_self_loop_and_range() {
        assert!(matches!(Graph::new(3, &[(1, 1)]), Err(Error::SelfLoop(1))));
        assert!(matches!(
            Graph::new(3, &[(0, 3)]),
            Err(Error::VertexOutOfRange { vertex: 3, p: 3 })
        ));
    }

    #[test]
    fn components_of_empty_graph_are_singletons() {
        let g = Graph::empty(3);
        assert_eq!(g.connected_components(), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn components_two_pairs() {
        let g = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.connected_components(), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn components_path_is_single() {
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.connected_components(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn edit_distance_cases() {
        let e: Vec<(u32, u32)> = vec![(0, 1)];
        assert_eq!(edit_distance(&e, &e), 0);
        assert_eq!(edit_distance(&e, &[]), 1);
        assert_eq!(edit_distance(&[(0, 1), (2, 3)], &[(0, 1), (4, 5)]), 2);
    }

    #[test]
    fn text_round_trip() {
        let g = Graph::new(5, &[(0, 4), (1, 2)]).unwrap();
        let parsed = Graph::from_text(&g.to_text()).unwrap();
        assert_eq!(parsed, g);
    }

    #[test]
    fn text_with_comments() {
        let g = Graph::from_text("# header\np 3\ne 0 1 # trailing\n\ne 1 2\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }
}
