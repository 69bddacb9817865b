use std::collections::BTreeSet;

use super::Graph;
use crate::logic::{Formula, Interpretation, Term};

/// Acyclic orientation along a degeneracy order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orientation {
    /// Removal order; edges point from earlier to later vertices.
    pub order: Vec<usize>,
    pub position: Vec<usize>,
    /// Out-neighbors of each vertex; the neighbor at index `i` carries label `i + 1`.
    pub out: Vec<Vec<usize>>,
    /// Largest out-degree.
    pub d: usize,
}

/// Repeatedly removes a vertex of minimum remaining degree, ties broken by original degree and id.
pub fn degeneracy_orientation(g: &Graph) -> Orientation {
    let n = g.n();
    let mut cur: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut queue: BTreeSet<(usize, usize, usize)> =
        (0..n).map(|v| (cur[v], g.degree(v), v)).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while let Some((_, _, v)) = queue.pop_first() {
        removed[v] = true;
        order.push(v);
        for &u in g.neighbors(v) {
            if !removed[u] {
                queue.remove(&(cur[u], g.degree(u), u));
                cur[u] -= 1;
                queue.insert((cur[u], g.degree(u), u));
            }
        }
    }
    let mut position = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let out: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut o: Vec<usize> = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| position[u] > position[v])
                .collect();
            o.sort_by_key(|&u| position[u]);
            o
        })
        .collect();
    let d = out.iter().map(Vec::len).max().unwrap_or(0);
    Orientation {
        order,
        position,
        out,
        d,
    }
}

/// Degeneracy of the graph (largest out-degree of the greedy orientation).
pub fn degeneracy(g: &Graph) -> usize {
    degeneracy_orientation(g).d
}

/// Result of replacing adjacency atoms by guarded functions.
#[derive(Debug, Clone)]
pub struct AdjacencyElimination {
    pub orientation: Orientation,
    /// Function names; `functions[i]` maps a vertex to its out-neighbor labelled `i + 1`.
    pub functions: Vec<String>,
    pub interp: Interpretation,
    pub formula: Formula,
}

/// Rewrites `E(s, t)` as `s != t` and, for some label, one endpoint's labelled out-neighbor
/// being the other.
pub fn eliminate_adjacency(g: &Graph, phi: &Formula) -> AdjacencyElimination {
    let orientation = degeneracy_orientation(g);
    let mut uses_adj = false;
    phi.walk(&mut |f| uses_adj |= matches!(f, Formula::Adj(..)));
    let d = if uses_adj { orientation.d } else { 0 };
    let functions: Vec<String> = (1..=d).map(|i| format!("adj{i}")).collect();
    let mut interp = Interpretation::new(g.n());
    for (i, name) in functions.iter().enumerate() {
        let map = (0..g.n())
            .map(|v| orientation.out[v].get(i).copied().unwrap_or(v))
            .collect();
        interp.add_func(name, map);
    }
    let formula = replace_adj(phi, &functions);
    AdjacencyElimination {
        orientation,
        functions,
        interp,
        formula,
    }
}

fn replace_adj(phi: &Formula, functions: &[String]) -> Formula {
    match phi {
        Formula::Adj(a, b) => {
            if functions.is_empty() {
                return Formula::False;
            }
            let mut alts = Vec::new();
            for f in functions {
                alts.push(Formula::Eq(Term::apply(f, a.clone()), b.clone()));
                alts.push(Formula::Eq(Term::apply(f, b.clone()), a.clone()));
            }
            Formula::And(vec![
                Formula::not(Formula::Eq(a.clone(), b.clone())),
                Formula::Or(alts),
            ])
        }
        Formula::Forall(v, b) => Formula::Forall(v.clone(), Box::new(replace_adj(b, functions))),
        Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(replace_adj(b, functions))),
        Formula::Not(b) => Formula::not(replace_adj(b, functions)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| replace_adj(x, functions)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| replace_adj(x, functions)).collect()),
        other => other.clone(),
    }
}
