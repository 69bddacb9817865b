use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::logic::{Formula, Interpretation, Term};
use crate::sparsity::Scaffolding;

/// Default cap on the number of templates produced by [`enumerate_templates`].
pub const DEFAULT_TEMPLATE_CAP: usize = 1 << 16;

/// An abstract rooted forest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Forest {
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
}

impl Forest {
    /// Builds the forest from parent links, which must be acyclic.
    pub fn new(parent: Vec<Option<usize>>) -> Result<Forest> {
        let n = parent.len();
        let mut depth = vec![usize::MAX; n];
        for v in 0..n {
            let mut path = Vec::new();
            let mut cur = v;
            while depth[cur] == usize::MAX {
                if path.len() > n {
                    return Err(Error::Invalid("template forest has a cycle".into()));
                }
                path.push(cur);
                match parent[cur] {
                    Some(p) if p < n => cur = p,
                    Some(_) => return Err(Error::Invalid("template parent out of range".into())),
                    None => {
                        depth[cur] = 0;
                        path.pop();
                        break;
                    }
                }
            }
            while let Some(u) = path.pop() {
                depth[u] = depth[parent[u].unwrap()] + 1;
            }
        }
        Ok(Forest { parent, depth })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Ancestor at distance `k`, clamped at the root.
    pub fn ancestor(&self, mut v: usize, k: usize) -> usize {
        for _ in 0..k {
            match self.parent[v] {
                Some(p) => v = p,
                None => break,
            }
        }
        v
    }

    /// Whether `a` is `v` or one of its ancestors.
    pub fn is_ancestor(&self, a: usize, v: usize) -> bool {
        self.depth[a] <= self.depth[v] && self.ancestor(v, self.depth[v] - self.depth[a]) == a
    }

    /// Nearest common ancestor, or `None` for nodes in different trees.
    pub fn nca(&self, a: usize, b: usize) -> Option<usize> {
        let (mut a, mut b) = (a, b);
        while self.depth[a] > self.depth[b] {
            a = self.parent[a]?;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b]?;
        }
        while a != b {
            a = self.parent[a]?;
            b = self.parent[b]?;
        }
        Some(a)
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&u| self.parent[u] == Some(v)).collect()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len()).filter(|&u| self.parent[u].is_none()).collect()
    }

    /// `v` and all its descendants.
    pub fn subtree(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&u| self.is_ancestor(v, u)).collect()
    }

    /// Number of nodes on a longest root-to-leaf path.
    pub fn height(&self) -> usize {
        self.depth.iter().map(|d| d + 1).max().unwrap_or(0)
    }
}

/// Shape data that determines a template up to isomorphism: the sorted terms, the depth of
/// each term's node, and the depth of the nearest common ancestor of every pair `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemplateKey {
    pub terms: Vec<Term>,
    pub depth: Vec<usize>,
    pub nca: Vec<Option<usize>>,
}

impl TemplateKey {
    fn pair(&self, i: usize, j: usize) -> Option<usize> {
        if i == j {
            return Some(self.depth[i]);
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let k = self.terms.len();
        // Row-major index into the strict upper triangle.
        self.nca[i * k - i * (i + 1) / 2 + (j - i - 1)]
    }
}

/// A forest `Q` with a placement of terms on its nodes; every leaf carries a term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Template {
    pub forest: Forest,
    pub place: BTreeMap<Term, usize>,
}

impl Template {
    /// Canonical template for a key. Nodes are numbered top-down in term order.
    pub fn from_key(key: &TemplateKey) -> Result<Template> {
        let k = key.terms.len();
        if key.depth.len() != k || key.nca.len() != k * k.saturating_sub(1) / 2 {
            return Err(Error::Invalid("malformed template key".into()));
        }
        let mut parent: Vec<Option<usize>> = Vec::new();
        let mut node: Vec<Vec<usize>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut path = Vec::with_capacity(key.depth[i] + 1);
            for l in 0..=key.depth[i] {
                let shared = (0..i).find(|&j| {
                    l <= key.depth[j] && key.pair(i, j).is_some_and(|a| a >= l)
                });
                let id = match shared {
                    Some(j) => node[j][l],
                    None => {
                        parent.push(path.last().copied());
                        parent.len() - 1
                    }
                };
                path.push(id);
            }
            node.push(path);
        }
        let forest = Forest::new(parent)?;
        let place: BTreeMap<Term, usize> = key
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), node[i][key.depth[i]]))
            .collect();
        let t = Template { forest, place };
        if &t.key() != key {
            return Err(Error::Invalid("inconsistent template key".into()));
        }
        Ok(t)
    }

    /// Canonical template for an arbitrary forest and placement.
    pub fn from_forest(parent: Vec<Option<usize>>, place: BTreeMap<Term, usize>) -> Result<Template> {
        let forest = Forest::new(parent)?;
        if place.values().any(|&q| q >= forest.len()) {
            return Err(Error::Invalid("template placement out of range".into()));
        }
        Template::from_key(&Template { forest, place }.key())
    }

    pub fn key(&self) -> TemplateKey {
        let terms: Vec<Term> = self.place.keys().cloned().collect();
        let nodes: Vec<usize> = self.place.values().copied().collect();
        let depth = nodes.iter().map(|&q| self.forest.depth[q]).collect();
        let mut nca = Vec::new();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                nca.push(self.forest.nca(nodes[i], nodes[j]).map(|a| self.forest.depth[a]));
            }
        }
        TemplateKey { terms, depth, nca }
    }

    pub fn terms(&self) -> Vec<Term> {
        self.place.keys().cloned().collect()
    }

    pub fn node(&self, t: &Term) -> Option<usize> {
        self.place.get(t).copied()
    }

    /// Every leaf carries a term.
    pub fn leaves_covered(&self) -> bool {
        let used: BTreeSet<usize> = self.place.values().copied().collect();
        (0..self.forest.len()).all(|q| !self.forest.children(q).is_empty() || used.contains(&q))
    }

    /// For `t` and `f(t)` both placed, their nodes are ancestor-related.
    pub fn guard_consistent(&self) -> bool {
        self.place.iter().all(|(t, &q)| match t {
            Term::Var(_) => true,
            Term::Apply(_, inner) => match self.place.get(inner) {
                Some(&p) => self.forest.is_ancestor(p, q) || self.forest.is_ancestor(q, p),
                None => true,
            },
        })
    }

    /// The recognizer τ: holds iff the term values match the template in the scaffolding
    /// described by the membership predicate `in_f` and the parent function `prt`.
    pub fn match_formula(&self, in_f: &str, prt: &str) -> Formula {
        placement_formula(&self.forest, self.place.iter().map(|(t, &q)| (t, q)), in_f, prt)
    }
}

/// τ for the given placement into `q`.
pub(crate) fn placement_formula<'a>(
    q: &Forest,
    place: impl Iterator<Item = (&'a Term, usize)>,
    in_f: &str,
    prt: &str,
) -> Formula {
    let place: Vec<(&Term, usize)> = place.collect();
    let up = |t: &Term, k: usize| Term::iterate(prt, t.clone(), k);
    let mut parts = Vec::new();
    for &(t, node) in &place {
        let d = q.depth[node];
        parts.push(Formula::Pred(in_f.to_string(), t.clone()));
        for i in 0..d {
            parts.push(Formula::not(Formula::Eq(up(t, i), up(t, i + 1))));
        }
        parts.push(Formula::Eq(up(t, d), up(t, d + 1)));
    }
    for (i, &(t, a)) in place.iter().enumerate() {
        for &(u, b) in &place[i + 1..] {
            let (da, db) = (q.depth[a], q.depth[b]);
            match q.nca(a, b) {
                Some(c) => {
                    let dc = q.depth[c];
                    parts.push(Formula::Eq(up(t, da - dc), up(u, db - dc)));
                    for l in dc + 1..=da.min(db) {
                        parts.push(Formula::not(Formula::Eq(up(t, da - l), up(u, db - l))));
                    }
                }
                None => parts.push(Formula::not(Formula::Eq(up(t, da), up(u, db)))),
            }
        }
    }
    Formula::And(parts)
}

/// Depth of the nearest common ancestor of two members of `f`, if in the same tree.
pub(crate) fn scaffold_nca(f: &Scaffolding, a: usize, b: usize) -> Option<usize> {
    let (mut a, mut b) = (a, b);
    while f.depth[a] > f.depth[b] {
        a = f.parent[a];
    }
    while f.depth[b] > f.depth[a] {
        b = f.parent[b];
    }
    while a != b {
        if f.depth[a] == 0 {
            return None;
        }
        a = f.parent[a];
        b = f.parent[b];
    }
    Some(f.depth[a])
}

/// Template realized by term values inside `f`, or `None` if some value lies outside.
pub fn realized_template(f: &Scaffolding, terms: &[Term], values: &[usize]) -> Option<TemplateKey> {
    if values.iter().any(|&v| !f.member[v]) {
        return None;
    }
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by(|&i, &j| terms[i].cmp(&terms[j]));
    let mut sorted_terms: Vec<Term> = order.iter().map(|&i| terms[i].clone()).collect();
    sorted_terms.dedup();
    if sorted_terms.len() != terms.len() {
        return None;
    }
    let vals: Vec<usize> = order.iter().map(|&i| values[i]).collect();
    let depth = vals.iter().map(|&v| f.depth[v]).collect();
    let mut nca = Vec::new();
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            nca.push(scaffold_nca(f, vals[i], vals[j]));
        }
    }
    Some(TemplateKey {
        terms: sorted_terms,
        depth,
        nca,
    })
}

fn term_values(
    interp: &Interpretation,
    t: &Template,
    env: &BTreeMap<String, usize>,
) -> Result<Vec<(usize, usize)>> {
    t.place
        .iter()
        .map(|(term, &q)| Ok((q, interp.eval_term(term, env)?)))
        .collect()
}

/// Whether an injective homomorphism from the template forest into `f`, sending roots to
/// roots, maps every term's node to the term's value. Plain backtracking search.
pub fn matches_template(
    interp: &Interpretation,
    f: &Scaffolding,
    env: &BTreeMap<String, usize>,
    t: &Template,
) -> Result<bool> {
    let values = term_values(interp, t, env)?;
    let q = &t.forest;
    // Parents before children.
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by_key(|&v| q.depth[v]);
    let mut wanted: Vec<Vec<usize>> = vec![Vec::new(); q.len()];
    for &(node, v) in &values {
        wanted[node].push(v);
    }
    fn go(
        i: usize,
        order: &[usize],
        q: &Forest,
        f: &Scaffolding,
        wanted: &[Vec<usize>],
        h: &mut Vec<usize>,
        used: &mut BTreeSet<usize>,
    ) -> bool {
        if i == order.len() {
            return true;
        }
        let node = order[i];
        let candidates: Vec<usize> = match q.parent[node] {
            None => f.roots.clone(),
            Some(p) => f.children[h[p]].clone(),
        };
        for c in candidates {
            if used.contains(&c) || wanted[node].iter().any(|&v| v != c) {
                continue;
            }
            used.insert(c);
            h[node] = c;
            if go(i + 1, order, q, f, wanted, h, used) {
                return true;
            }
            used.remove(&c);
        }
        false
    }
    let mut h = vec![usize::MAX; q.len()];
    Ok(go(0, &order, q, f, &wanted, &mut h, &mut BTreeSet::new()))
}

/// Same answer as [`matches_template`], reading the homomorphism off the term values.
pub fn forced_match(f: &Scaffolding, q: &Forest, placed: &[(usize, usize)]) -> bool {
    let mut h: Vec<Option<usize>> = vec![None; q.len()];
    for &(node, v) in placed {
        if !f.member[v] || f.depth[v] != q.depth[node] {
            return false;
        }
        let (mut a, mut b) = (node, v);
        loop {
            match h[a] {
                Some(x) if x == b => break,
                Some(_) => return false,
                None => h[a] = Some(b),
            }
            match q.parent[a] {
                Some(p) => {
                    a = p;
                    b = f.parent[b];
                }
                None => break,
            }
        }
    }
    let mut seen = BTreeSet::new();
    h.iter().flatten().all(|&v| seen.insert(v))
}

/// Convenience wrapper of [`forced_match`] under an assignment.
pub fn forced_match_env(
    interp: &Interpretation,
    f: &Scaffolding,
    env: &BTreeMap<String, usize>,
    t: &Template,
) -> Result<bool> {
    Ok(forced_match(f, &t.forest, &term_values(interp, t, env)?))
}

/// Closes a term set under taking subterms.
pub fn subterm_closure<'a>(terms: impl IntoIterator<Item = &'a Term>) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for t in terms {
        for s in t.subterms() {
            out.insert(s.clone());
        }
    }
    out
}

/// All guard-consistent templates for `terms` (closed under subterms) whose forests have at
/// most `d` levels, one per isomorphism class.
pub fn enumerate_templates(terms: &BTreeSet<Term>, d: usize, cap: usize) -> Result<Vec<Template>> {
    let terms: Vec<Term> = terms.iter().cloned().collect();
    for t in &terms {
        if let Term::Apply(_, inner) = t {
            if !terms.contains(inner) {
                return Err(Error::Invalid(format!("term set is not closed under subterms: {t}")));
            }
        }
    }
    let k = terms.len();
    if d == 0 {
        return Ok(if k == 0 {
            vec![Template::from_forest(Vec::new(), BTreeMap::new())?]
        } else {
            Vec::new()
        });
    }
    let mut out = Vec::new();
    let mut depth = vec![0usize; k];
    // nca[i][j] for j < i.
    let mut nca: Vec<Vec<Option<usize>>> = vec![Vec::new(); k];
    fn go(
        i: usize,
        terms: &[Term],
        d: usize,
        cap: usize,
        depth: &mut Vec<usize>,
        nca: &mut Vec<Vec<Option<usize>>>,
        out: &mut Vec<Template>,
    ) -> Result<()> {
        let k = terms.len();
        if i == k {
            let mut flat = Vec::new();
            for a in 0..k {
                for b in a + 1..k {
                    flat.push(nca[b][a]);
                }
            }
            let key = TemplateKey {
                terms: terms.to_vec(),
                depth: depth.clone(),
                nca: flat,
            };
            let t = Template::from_key(&key)?;
            if t.guard_consistent() {
                if out.len() >= cap {
                    return Err(Error::ResourceLimit(format!(
                        "more than {cap} templates for {k} terms at depth {d}"
                    )));
                }
                out.push(t);
            }
            return Ok(());
        }
        // Place term i: choose a depth and a branching point relative to the earlier terms.
        // The placement is determined by the deepest shared ancestor with some earlier term.
        for di in 0..d {
            depth[i] = di;
            // Option: attach to the path of earlier term j at level l (sharing levels 0..=l),
            // or start a fresh tree.
            let mut choices: Vec<Option<(usize, usize)>> = vec![None];
            for j in 0..i {
                for l in 0..=depth[j].min(di) {
                    choices.push(Some((j, l)));
                }
            }
            let mut seen: BTreeSet<Vec<Option<usize>>> = BTreeSet::new();
            for ch in choices {
                let row: Vec<Option<usize>> = (0..i)
                    .map(|j| match ch {
                        None => None,
                        Some((j0, l)) => {
                            if j == j0 {
                                Some(l)
                            } else {
                                // Shared with j iff j shares the branch point's path.
                                let cj = if j0 > j { nca[j0][j] } else { nca[j][j0] };
                                let cj = if j == j0 { Some(depth[j]) } else { cj };
                                cj.map(|c| c.min(l))
                            }
                        }
                    })
                    .collect();
                if !seen.insert(row.clone()) {
                    continue;
                }
                nca[i] = row;
                go(i + 1, terms, d, cap, depth, nca, out)?;
            }
        }
        Ok(())
    }
    go(0, &terms, d, cap, &mut depth, &mut nca, &mut out)?;
    out.retain(|t| t.leaves_covered());
    Ok(out)
}
