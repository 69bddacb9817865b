use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::logic::{
    simplify, CounterSignature, CounterSymbol, Formula, ITuple, Interpretation, Model, Term,
};

/// Capped counts contributed by a region `D`: how many of its vertices satisfy each
/// cardinality body, and how many count towards each counter of each vertex outside `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Census {
    pub cap: u32,
    pub region: BTreeSet<usize>,
    /// Keyed by the cardinality atom's body, with its variable.
    pub card: BTreeMap<(String, Formula), u32>,
    /// Keyed by counter name and receiving vertex; zero entries are omitted.
    pub counters: BTreeMap<(String, usize), u32>,
}

impl Census {
    pub fn empty(cap: u32) -> Census {
        Census {
            cap,
            region: BTreeSet::new(),
            card: BTreeMap::new(),
            counters: BTreeMap::new(),
        }
    }

    pub fn card_count(&self, var: &str, body: &Formula) -> u32 {
        self.card
            .get(&(var.to_string(), body.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn counter_count(&self, counter: &str, v: usize) -> u32 {
        self.counters
            .get(&(counter.to_string(), v))
            .copied()
            .unwrap_or(0)
    }
}

/// Distinct cardinality atoms of a formula, as `(var, body)` pairs in first-seen order.
pub fn card_atoms(phi: &Formula) -> Vec<(String, Formula)> {
    let mut out: Vec<(String, Formula)> = Vec::new();
    phi.walk(&mut |f| {
        if let Formula::CardGe { var, body, .. } = f {
            let key = (var.clone(), (**body).clone());
            if !out.contains(&key) {
                out.push(key);
            }
        }
    });
    out
}

/// Census of `region` for the tuple `tuple`, with all counts capped at `cap`.
pub fn census(
    g: &Graph,
    interp: &Interpretation,
    sig: &CounterSignature,
    phi: &Formula,
    tuple: &ITuple,
    region: &BTreeSet<usize>,
    cap: u32,
) -> Result<Census> {
    let model = Model::new(g, interp, sig, tuple);
    let mut out = Census::empty(cap);
    out.region = region.clone();
    for (var, body) in card_atoms(phi) {
        let mut c = 0u32;
        for &u in region {
            if model.satisfies(&body, &BTreeMap::from([(var.clone(), u)]))? {
                c = (c + 1).min(cap);
            }
        }
        out.card.insert((var, body), c);
    }
    for c in &sig.counters {
        let f = interp.func(&c.func)?;
        for &u in region {
            let target = f[u];
            if target == u || region.contains(&target) {
                continue;
            }
            if model.satisfies(&c.trigger, &BTreeMap::from([(c.var.clone(), u)]))? {
                let e = out.counters.entry((c.name.clone(), target)).or_insert(0);
                *e = (*e + 1).min(cap);
            }
        }
    }
    Ok(out)
}

/// Signature, interpretation and sentence over the induced subgraph `G[Y]`.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub graph: Graph,
    /// `vertices[i]` is the vertex of `G` numbered `i` in `G[Y]`.
    pub vertices: Vec<usize>,
    pub sig: CounterSignature,
    pub interp: Interpretation,
    pub formula: Formula,
}

impl Restriction {
    /// Position of a vertex of `G` in `G[Y]`.
    pub fn index_of(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    /// Maps a tuple over `G[Y]` back to `G`.
    pub fn lift(&self, t: &ITuple) -> ITuple {
        ITuple {
            sets: t
                .sets
                .iter()
                .map(|(&i, s)| (i, s.iter().map(|&v| self.vertices[v]).collect()))
                .collect(),
        }
    }

    /// Maps a tuple over `G` with all vertices inside `Y` to `G[Y]`.
    pub fn lower(&self, t: &ITuple) -> Option<ITuple> {
        let mut sets = BTreeMap::new();
        for (&i, s) in &t.sets {
            let mapped = s
                .iter()
                .map(|&v| self.index_of(v))
                .collect::<Option<BTreeSet<usize>>>()?;
            sets.insert(i, mapped);
        }
        Some(ITuple { sets })
    }
}

/// Deletes the counted region `V(G) \ Y`, whose contributions are given by `census`.
///
/// Each counter keeps its name and counts only inside `Y`; a comparison `c(x) >= m` becomes
/// a disjunction over the offset `k` the deleted region contributes to `x`, and a cardinality
/// threshold drops by the number of deleted vertices satisfying its body.
pub fn restrict_to_subgraph(
    g: &Graph,
    interp: &Interpretation,
    sig: &CounterSignature,
    phi: &Formula,
    y: &BTreeSet<usize>,
    census: &Census,
) -> Result<Restriction> {
    let vertices: Vec<usize> = y.iter().copied().collect();
    if vertices.iter().any(|&v| v >= g.n()) {
        return Err(Error::Invalid("restriction set has vertices outside the graph".into()));
    }
    let index = |v: usize| vertices.binary_search(&v).ok();
    let sub = g.induced(&vertices);
    let mut out = Interpretation::new(vertices.len());
    for (name, members) in &interp.preds {
        out.add_pred(name, vertices.iter().map(|&v| members[v]).collect());
    }
    for (name, map) in &interp.funcs {
        out.add_func(
            name,
            vertices
                .iter()
                .enumerate()
                .map(|(i, &v)| index(map[v]).unwrap_or(i))
                .collect(),
        );
    }
    let mut new_sig = CounterSignature::new();
    new_sig.predicates = sig.predicates.clone();
    new_sig.functions = sig.functions.clone();
    let mut offsets: BTreeMap<(String, u32, bool), String> = BTreeMap::new();
    let mut offset_pred = |c: &str, k: u32, at_least: bool, out: &mut Interpretation| -> String {
        offsets
            .entry((c.to_string(), k, at_least))
            .or_insert_with(|| {
                let mut name = format!("off_{c}_{k}{}", if at_least { "_up" } else { "" });
                while out.preds.contains_key(&name) {
                    name.push('_');
                }
                let members = vertices
                    .iter()
                    .map(|&v| {
                        let n = census.counter_count(c, v);
                        if at_least {
                            n >= k
                        } else {
                            n == k
                        }
                    })
                    .collect();
                out.add_pred(&name, members);
                name
            })
            .clone()
    };
    let mut rewrite = |phi: &Formula, out: &mut Interpretation, preds: &mut BTreeSet<String>| {
        fn go(
            phi: &Formula,
            f: &mut dyn FnMut(&str, &Term, u32) -> Formula,
        ) -> Formula {
            match phi {
                Formula::CounterGe(c, t, m) => f(c, t, *m),
                Formula::Not(b) => Formula::not(go(b, f)),
                Formula::And(xs) => Formula::And(xs.iter().map(|x| go(x, f)).collect()),
                Formula::Or(xs) => Formula::Or(xs.iter().map(|x| go(x, f)).collect()),
                other => other.clone(),
            }
        }
        go(phi, &mut |c, t, m| {
            let mut alts = Vec::new();
            for k in 0..=m {
                let p = offset_pred(c, k, k == m, out);
                preds.insert(p.clone());
                alts.push(Formula::And(vec![
                    Formula::Pred(p, t.clone()),
                    Formula::CounterGe(c.to_string(), t.clone(), m - k),
                ]));
            }
            simplify(&Formula::Or(alts))
        })
    };
    let mut preds = BTreeSet::new();
    for c in &sig.counters {
        let trigger = rewrite(&c.trigger, &mut out, &mut preds);
        new_sig.add_counter(CounterSymbol {
            name: c.name.clone(),
            func: c.func.clone(),
            var: c.var.clone(),
            trigger,
        })?;
    }
    fn cards(
        phi: &Formula,
        census: &Census,
        f: &mut dyn FnMut(&Formula) -> Formula,
    ) -> Formula {
        match phi {
            Formula::CardGe { var, body, min } => {
                let have = census.card_count(var, body);
                let need = min.saturating_sub(have);
                simplify(&Formula::CardGe {
                    var: var.clone(),
                    body: Box::new(f(body)),
                    min: need,
                })
            }
            Formula::Not(b) => Formula::not(cards(b, census, f)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| cards(x, census, f)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| cards(x, census, f)).collect()),
            other => other.clone(),
        }
    }
    let formula = simplify(&cards(phi, census, &mut |b| rewrite(b, &mut out, &mut preds)));
    new_sig.predicates.extend(preds);
    Ok(Restriction {
        graph: sub,
        vertices,
        sig: new_sig,
        interp: out,
        formula,
    })
}
