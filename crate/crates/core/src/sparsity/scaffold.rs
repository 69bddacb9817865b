use std::collections::BTreeSet;

use super::coloring::treedepth_coloring;
use super::cover::generic_cover_from_coloring;
use crate::error::Result;
use crate::graph::Graph;

/// A rooted forest inside the graph whose induced edges all join ancestor and descendant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scaffolding {
    /// Membership per graph vertex.
    pub member: Vec<bool>,
    /// Parent in the forest; roots and non-members map to themselves.
    pub parent: Vec<usize>,
    /// Edge distance to the root (0 for roots and non-members).
    pub depth: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
    /// Number of vertices on a longest root-to-leaf path.
    pub height: usize,
}

impl Scaffolding {
    pub fn vertices(&self) -> Vec<usize> {
        (0..self.member.len()).filter(|&v| self.member[v]).collect()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.member[v]
    }

    /// The ancestor of `v` at distance `k` (clamped at the root).
    pub fn ancestor(&self, mut v: usize, k: usize) -> usize {
        for _ in 0..k {
            v = self.parent[v];
        }
        v
    }

    /// Whether `a` is an ancestor of `v` (every vertex is its own ancestor).
    pub fn is_ancestor(&self, a: usize, v: usize) -> bool {
        self.member[a]
            && self.member[v]
            && self.depth[a] <= self.depth[v]
            && self.ancestor(v, self.depth[v] - self.depth[a]) == a
    }

    /// Checks the forest edges are graph edges and induced edges are ancestor-related.
    pub fn check(&self, g: &Graph) -> std::result::Result<(), String> {
        for v in self.vertices() {
            let p = self.parent[v];
            if p != v && !g.has_edge(v, p) {
                return Err(format!("parent edge {v}-{p} is not a graph edge"));
            }
        }
        for (u, v) in g.edges() {
            if self.member[u]
                && self.member[v]
                && !self.is_ancestor(u, v)
                && !self.is_ancestor(v, u)
            {
                return Err(format!("edge {u}-{v} joins unrelated vertices"));
            }
        }
        Ok(())
    }
}

/// Depth-first forest of the subgraph induced by `member`. Roots are the least vertex of each
/// component and neighbors are visited in increasing order.
pub fn dfs_forest(g: &Graph, member: &[bool]) -> Scaffolding {
    let n = g.n();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    let mut children = vec![Vec::new(); n];
    let mut roots = Vec::new();
    let mut height = 0;
    for r in 0..n {
        if !member[r] || seen[r] {
            continue;
        }
        roots.push(r);
        seen[r] = true;
        height = height.max(1);
        let mut stack: Vec<(usize, usize)> = vec![(r, 0)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let nb = g.neighbors(v);
            while *next < nb.len() && (!member[nb[*next]] || seen[nb[*next]]) {
                *next += 1;
            }
            if *next == nb.len() {
                stack.pop();
                continue;
            }
            let u = nb[*next];
            *next += 1;
            seen[u] = true;
            parent[u] = v;
            depth[u] = depth[v] + 1;
            height = height.max(depth[u] + 1);
            children[v].push(u);
            stack.push((u, 0));
        }
    }
    Scaffolding {
        member: member.to_vec(),
        parent,
        depth,
        children,
        roots,
        height,
    }
}

/// Height of the depth-first forest of the subgraph induced by `member`.
pub fn dfs_height(g: &Graph, member: &[bool]) -> usize {
    dfs_forest(g, member).height
}

/// One scaffolding per member of the coloring cover for `s`; every set of at most `s`
/// vertices lies inside some scaffolding, whose height is at most `2^s`.
pub fn scaffolding_system(g: &Graph, s: usize) -> Result<Vec<Scaffolding>> {
    let cap = 1usize << s.min(30);
    let coloring = treedepth_coloring(g, s, cap)?;
    let cover = generic_cover_from_coloring(g.n(), &coloring, s)?;
    Ok(cover
        .members
        .iter()
        .map(|m| {
            let mut member = vec![false; g.n()];
            for &v in m {
                member[v] = true;
            }
            dfs_forest(g, &member)
        })
        .collect())
}

/// Whether every set of at most `s` vertices lies inside one of the scaffoldings.
pub fn system_is_generic(n: usize, system: &[Scaffolding], s: usize) -> bool {
    let mut ok = true;
    for_each_subset(n, s, &mut |set| {
        if ok && !system.iter().any(|f| set.iter().all(|&v| f.member[v])) {
            ok = false;
        }
    });
    ok
}

/// Calls `f` on every nonempty subset of `0..n` with at most `s` elements.
pub fn for_each_subset(n: usize, s: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, s: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if !cur.is_empty() {
            f(cur);
        }
        if cur.len() == s {
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, s, cur, f);
            cur.pop();
        }
    }
    go(0, n, s, &mut Vec::new(), f);
}

/// Vertex sets of all members, for reporting.
pub fn member_sets(system: &[Scaffolding]) -> Vec<BTreeSet<usize>> {
    system
        .iter()
        .map(|f| f.vertices().into_iter().collect())
        .collect()
}
