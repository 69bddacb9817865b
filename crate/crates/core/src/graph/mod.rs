//! Simple undirected graphs, weights and degeneracy orientations.

mod gen;
mod orient;
mod weights;

pub use gen::{
    bounded_degree_random, random_graph, random_planarish, small_connected_graphs,
};
pub use orient::{degeneracy, degeneracy_orientation, eliminate_adjacency, AdjacencyElimination, Orientation};
pub use weights::{load_weights, tuple_weight, WeightAssignment};

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// A simple undirected graph on vertices `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for (k, &(u, v)) in edges.iter().enumerate() {
            g.add_edge(u, v).map_err(|msg| Error::Input { line: k + 1, msg })?;
        }
        g.finish();
        Ok(g)
    }

    fn add_edge(&mut self, u: usize, v: usize) -> std::result::Result<(), String> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(format!("vertex out of range in edge {u} {v} (n = {n})"));
        }
        if u == v {
            return Err(format!("loop at vertex {u}"));
        }
        if self.adj[u].contains(&v) {
            return Err(format!("duplicate edge {u} {v}"));
        }
        self.adj[u].push(v);
        self.adj[v].push(u);
        self.m += 1;
        Ok(())
    }

    fn finish(&mut self) {
        for a in &mut self.adj {
            a.sort_unstable();
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as pairs `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n() {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Subgraph induced by `vertices` (sorted, deduplicated), renumbered in that order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let mut g = Graph::empty(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            for &u in &self.adj[v] {
                let j = index[u];
                if j != usize::MAX && i < j {
                    g.add_edge(i, j).expect("induced subgraph is simple");
                }
            }
        }
        g.finish();
        g
    }

    /// Connected components, each sorted, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &u in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        if n < 3 {
            return Graph::path(n);
        }
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((0, n - 1));
        Graph::from_edges(n, &edges).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edges(leaves + 1, &edges).unwrap()
    }

    /// `rows x cols` grid, vertex `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Graph {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Graph::from_edges(rows * cols, &edges).unwrap()
    }

    /// Text form accepted by [`load_graph`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn parse_usize(word: &str, line: usize) -> Result<usize> {
    word.parse().map_err(|_| Error::Input {
        line,
        msg: format!("expected a non-negative integer, found `{word}`"),
    })
}

/// Reads "n m" followed by `m` lines "u v". Text after `#` is ignored.
pub fn load_graph(text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or(Error::Input {
        line: 1,
        msg: "missing header `n m`".into(),
    })?;
    let words: Vec<_> = header.split_whitespace().collect();
    if words.len() != 2 {
        return Err(Error::Input {
            line: hl,
            msg: "header must be `n m`".into(),
        });
    }
    let n = parse_usize(words[0], hl)?;
    let m = parse_usize(words[1], hl)?;
    let mut g = Graph::empty(n);
    let mut count = 0;
    let mut last = hl;
    for (ln, l) in lines {
        last = ln;
        let words: Vec<_> = l.split_whitespace().collect();
        if words.len() != 2 {
            return Err(Error::Input {
                line: ln,
                msg: "edge line must be `u v`".into(),
            });
        }
        let u = parse_usize(words[0], ln)?;
        let v = parse_usize(words[1], ln)?;
        g.add_edge(u, v).map_err(|msg| Error::Input { line: ln, msg })?;
        count += 1;
    }
    if count != m {
        return Err(Error::Input {
            line: last,
            msg: format!("header declares {m} edges, found {count}"),
        });
    }
    g.finish();
    Ok(g)
}

/// Sorted vertex list of a set.
pub fn sorted(set: &BTreeSet<usize>) -> Vec<usize> {
    set.iter().copied().collect()
}
