use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::graph::Graph;

/// A rooted tree of bags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    /// Sorted bag of each node.
    pub bags: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
    pub root: usize,
}

impl TreeDecomposition {
    pub fn single(vertices: Vec<usize>) -> Self {
        TreeDecomposition {
            bags: vec![vertices],
            parent: vec![None],
            root: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.bags.len()];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                ch[*p].push(i);
            }
        }
        ch
    }

    /// Repeatedly contracts tree edges whose bags are nested, renumbering nodes in preorder.
    pub fn normalize(&self) -> TreeDecomposition {
        let mut bags: Vec<Option<Vec<usize>>> = self.bags.iter().cloned().map(Some).collect();
        let mut parent = self.parent.clone();
        let mut root = self.root;
        loop {
            let mut changed = false;
            for i in 0..bags.len() {
                let Some(p) = parent[i] else { continue };
                if bags[i].is_none() {
                    continue;
                }
                let (bi, bp) = (bags[i].as_ref().unwrap(), bags[p].as_ref().unwrap());
                let child_in_parent = is_subset(bi, bp);
                let parent_in_child = is_subset(bp, bi);
                if !child_in_parent && !parent_in_child {
                    continue;
                }
                if parent_in_child {
                    bags[p] = bags[i].clone();
                }
                bags[i] = None;
                for q in parent.iter_mut() {
                    if *q == Some(i) {
                        *q = Some(p);
                    }
                }
                parent[i] = None;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        if bags[root].is_none() {
            root = (0..bags.len()).find(|&i| bags[i].is_some()).unwrap();
        }
        // Renumber in preorder from the root.
        let mut ch = vec![Vec::new(); bags.len()];
        for (i, p) in parent.iter().enumerate() {
            if let (Some(p), Some(_)) = (p, &bags[i]) {
                ch[*p].push(i);
            }
        }
        let mut order = Vec::new();
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            order.push(x);
            for &c in ch[x].iter().rev() {
                stack.push(c);
            }
        }
        let mut index = vec![usize::MAX; bags.len()];
        for (k, &x) in order.iter().enumerate() {
            index[x] = k;
        }
        TreeDecomposition {
            bags: order.iter().map(|&x| bags[x].clone().unwrap()).collect(),
            parent: order.iter().map(|&x| parent[x].map(|p| index[p])).collect(),
            root: 0,
        }
    }
}

impl fmt::Display for TreeDecomposition {
    /// One line per node: `id parent | bag`, with `-` for the root's parent.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, bag) in self.bags.iter().enumerate() {
            let p = self.parent[i].map_or("-".to_string(), |p| p.to_string());
            let b: Vec<String> = bag.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{i} {p} | {}", b.join(" "))?;
        }
        Ok(())
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|v| b.binary_search(v).is_ok())
}

/// The first decomposition axiom that fails, with witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Structure(String),
    VertexMissing(usize),
    EdgeMissing(usize, usize),
    Disconnected(usize),
    TooManyNodes { nodes: usize, vertices: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Structure(s) => write!(f, "malformed tree: {s}"),
            Violation::VertexMissing(v) => write!(f, "vertex {v} is in no bag"),
            Violation::EdgeMissing(u, v) => write!(f, "edge {u}-{v} is in no bag"),
            Violation::Disconnected(v) => write!(f, "bags containing {v} are not connected"),
            Violation::TooManyNodes { nodes, vertices } => {
                write!(f, "{nodes} nodes for {vertices} vertices")
            }
        }
    }
}

/// Checks vertex and edge coverage, connectivity of occurrences, and at most `max(1, n)` nodes.
pub fn validate_tree_decomposition(g: &Graph, td: &TreeDecomposition) -> Result<(), Violation> {
    let k = td.bags.len();
    if k == 0 || td.parent.len() != k || td.root >= k || td.parent[td.root].is_some() {
        return Err(Violation::Structure("bad root or node count".into()));
    }
    // Every node must reach the root without cycles.
    for i in 0..k {
        let (mut x, mut steps) = (i, 0);
        while let Some(p) = td.parent[x] {
            if p >= k || steps > k {
                return Err(Violation::Structure(format!("node {i} does not reach the root")));
            }
            x = p;
            steps += 1;
        }
        if x != td.root {
            return Err(Violation::Structure(format!("node {i} is in a second tree")));
        }
    }
    let n = g.n();
    let mut occurs = vec![Vec::new(); n];
    for (i, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if v >= n {
                return Err(Violation::Structure(format!("bag {i} has vertex {v} out of range")));
            }
            occurs[v].push(i);
        }
    }
    if let Some(v) = (0..n).find(|&v| occurs[v].is_empty()) {
        return Err(Violation::VertexMissing(v));
    }
    for (u, v) in g.edges() {
        if !td.bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            return Err(Violation::EdgeMissing(u, v));
        }
    }
    for v in 0..n {
        // Within the nodes holding v, exactly one may have a parent outside the set.
        let set: BTreeSet<usize> = occurs[v].iter().copied().collect();
        let tops = set
            .iter()
            .filter(|&&i| td.parent[i].is_none_or(|p| !set.contains(&p)))
            .count();
        if tops != 1 {
            return Err(Violation::Disconnected(v));
        }
    }
    if k > n.max(1) {
        return Err(Violation::TooManyNodes {
            nodes: k,
            vertices: n,
        });
    }
    Ok(())
}

/// Recursive balanced-separator decomposition, normalized.
pub fn separator_decomposition(g: &Graph) -> TreeDecomposition {
    let n = g.n();
    if n == 0 {
        return TreeDecomposition::single(Vec::new());
    }
    let mut bags: Vec<Vec<usize>> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    // (vertex set, inherited boundary, parent node)
    let mut work: Vec<(Vec<usize>, Vec<usize>, Option<usize>)> = Vec::new();
    let comps = g.components();
    if comps.len() == 1 {
        work.push((comps[0].clone(), Vec::new(), None));
    } else {
        bags.push(Vec::new());
        parent.push(None);
        for c in comps.into_iter().rev() {
            work.push((c, Vec::new(), Some(0)));
        }
    }
    while let Some((w, extra, par)) = work.pop() {
        let node = bags.len();
        if w.len() <= 1 {
            let mut bag: Vec<usize> = w.iter().chain(extra.iter()).copied().collect();
            bag.sort_unstable();
            bags.push(bag);
            parent.push(par);
            continue;
        }
        let sep = balanced_separator(g, &w);
        let sep = match sep {
            Some(s) if s.len() < w.len() => s,
            _ => w.clone(),
        };
        let mut bag: Vec<usize> = sep.iter().chain(extra.iter()).copied().collect();
        bag.sort_unstable();
        bag.dedup();
        bags.push(bag);
        parent.push(par);
        let in_sep: BTreeSet<usize> = sep.iter().copied().collect();
        let rest: Vec<usize> = w.iter().copied().filter(|v| !in_sep.contains(v)).collect();
        let boundary: Vec<usize> = extra.iter().chain(sep.iter()).copied().collect();
        for comp in components_within(g, &rest).into_iter().rev() {
            let inside: BTreeSet<usize> = comp.iter().copied().collect();
            let mut ext: Vec<usize> = boundary
                .iter()
                .copied()
                .filter(|&b| g.neighbors(b).iter().any(|u| inside.contains(u)))
                .collect();
            ext.sort_unstable();
            ext.dedup();
            work.push((comp, ext, Some(node)));
        }
    }
    let root = 0;
    TreeDecomposition { bags, parent, root }.normalize()
}

fn components_within(g: &Graph, vs: &[usize]) -> Vec<Vec<usize>> {
    let allowed: BTreeSet<usize> = vs.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &s in vs {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &u in g.neighbors(v) {
                if allowed.contains(&u) && seen.insert(u) {
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

fn balanced(g: &Graph, w: &[usize], sep: &[usize]) -> bool {
    let s: BTreeSet<usize> = sep.iter().copied().collect();
    let rest: Vec<usize> = w.iter().copied().filter(|v| !s.contains(v)).collect();
    components_within(g, &rest)
        .iter()
        .all(|c| 3 * c.len() <= 2 * w.len())
}

/// The smaller of a BFS-layer separator and a max-degree removal separator, if either is
/// balanced (every remaining component has at most 2/3 of the vertices).
fn balanced_separator(g: &Graph, w: &[usize]) -> Option<Vec<usize>> {
    if balanced(g, w, &[]) {
        return Some(Vec::new());
    }
    let mut best: Option<Vec<usize>> = None;
    let mut consider = |cand: Vec<usize>| {
        if balanced(g, w, &cand) && best.as_ref().is_none_or(|b| cand.len() < b.len()) {
            best = Some(cand);
        }
    };
    for layer in bfs_layers(g, w) {
        consider(layer);
    }
    consider(max_degree_removal(g, w));
    best
}

fn bfs_layers(g: &Graph, w: &[usize]) -> Vec<Vec<usize>> {
    let allowed: BTreeSet<usize> = w.iter().copied().collect();
    let bfs = |start: usize| -> Vec<usize> {
        let mut dist = std::collections::BTreeMap::new();
        dist.insert(start, 0usize);
        let mut q = VecDeque::from([start]);
        while let Some(v) = q.pop_front() {
            let d = dist[&v];
            for &u in g.neighbors(v) {
                if allowed.contains(&u) && !dist.contains_key(&u) {
                    dist.insert(u, d + 1);
                    q.push_back(u);
                }
            }
        }
        w.iter().map(|v| dist.get(v).copied().unwrap_or(usize::MAX)).collect()
    };
    // Start from a far vertex of the least vertex's component.
    let d0 = bfs(w[0]);
    let far = (0..w.len())
        .filter(|&i| d0[i] != usize::MAX)
        .max_by_key(|&i| (d0[i], std::cmp::Reverse(w[i])))
        .unwrap();
    let d = bfs(w[far]);
    let depth = d.iter().copied().filter(|&x| x != usize::MAX).max().unwrap_or(0);
    (1..depth)
        .map(|k| (0..w.len()).filter(|&i| d[i] == k).map(|i| w[i]).collect())
        .collect()
}

fn max_degree_removal(g: &Graph, w: &[usize]) -> Vec<usize> {
    let mut removed: BTreeSet<usize> = BTreeSet::new();
    let mut sep = Vec::new();
    while !balanced(g, w, &sep) {
        let v = w
            .iter()
            .copied()
            .filter(|v| !removed.contains(v))
            .max_by_key(|&v| {
                let d = g
                    .neighbors(v)
                    .iter()
                    .filter(|u| !removed.contains(u) && w.binary_search(u).is_ok())
                    .count();
                (d, std::cmp::Reverse(v))
            });
        let Some(v) = v else { break };
        removed.insert(v);
        sep.push(v);
    }
    sep.sort_unstable();
    sep
}
