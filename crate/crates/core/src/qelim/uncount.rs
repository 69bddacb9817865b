use std::collections::BTreeSet;

use super::census::{census, restrict_to_subgraph};
use super::elim::eliminate_all;
use super::shroud::{compute_shroud, Shroud};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::logic::{simplify, CounterSignature, Formula, ITuple, Interpretation, Term};

/// A first-order formula in the variable `x` equivalent to `counter(x) >= m`: there are `m`
/// distinct vertices other than `x` mapped to `x` that satisfy the trigger. Nested counters
/// in the trigger are expanded the same way.
pub fn counters_to_quantifiers(sig: &CounterSignature, counter: &str, m: u32) -> Result<Formula> {
    expand(sig, counter, &Term::var("x"), m, 0)
}

fn expand(sig: &CounterSignature, counter: &str, at: &Term, m: u32, depth: usize) -> Result<Formula> {
    if m == 0 {
        return Ok(Formula::True);
    }
    let k = sig
        .counter_index(counter)
        .ok_or_else(|| Error::UnknownSymbol(counter.to_string()))?;
    let c = &sig.counters[k];
    let vars: Vec<String> = (1..=m).map(|i| format!("u{depth}_{i}")).collect();
    let mut parts = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        let tv = Term::var(v);
        for w in &vars[..i] {
            parts.push(Formula::not(Formula::Eq(tv.clone(), Term::var(w))));
        }
        parts.push(Formula::not(Formula::Eq(tv.clone(), at.clone())));
        parts.push(Formula::Eq(Term::apply(&c.func, tv.clone()), at.clone()));
        parts.push(requantify(sig, &c.trigger.substitute(&c.var, &tv), depth + 1)?);
    }
    Ok(vars
        .iter()
        .rev()
        .fold(Formula::And(parts), |acc, v| Formula::exists(v, acc)))
}

/// Replaces every counter comparison by its first-order expansion.
fn requantify(sig: &CounterSignature, phi: &Formula, depth: usize) -> Result<Formula> {
    Ok(match phi {
        Formula::CounterGe(c, t, m) => expand(sig, c, t, *m, depth)?,
        Formula::Not(b) => Formula::not(requantify(sig, b, depth)?),
        Formula::And(xs) => Formula::And(
            xs.iter()
                .map(|x| requantify(sig, x, depth))
                .collect::<Result<_>>()?,
        ),
        Formula::Or(xs) => Formula::Or(
            xs.iter()
                .map(|x| requantify(sig, x, depth))
                .collect::<Result<_>>()?,
        ),
        Formula::CardGe { var, body, min } => {
            let vars: Vec<String> = (1..=*min).map(|i| format!("w{depth}_{i}")).collect();
            let mut parts = Vec::new();
            for (i, v) in vars.iter().enumerate() {
                for w in &vars[..i] {
                    parts.push(Formula::not(Formula::Eq(Term::var(v), Term::var(w))));
                }
                parts.push(requantify(sig, &body.substitute(var, &Term::var(v)), depth + 1)?);
            }
            vars.iter()
                .rev()
                .fold(Formula::And(parts), |acc, v| Formula::exists(v, acc))
        }
        other => other.clone(),
    })
}

/// A plain first-order sentence over `G[Y]` that decides the original sentence for every
/// tuple inside the shroud center of `Y`.
#[derive(Debug, Clone)]
pub struct Localized {
    pub shroud: Shroud,
    pub graph: Graph,
    /// Vertices of `G` in the order of their numbering in `G[Y]`.
    pub vertices: Vec<usize>,
    pub interp: Interpretation,
    pub sentence: Formula,
}

impl Localized {
    /// Maps a tuple over `G` with vertices in `Y` to `G[Y]`.
    pub fn lower(&self, t: &ITuple) -> Option<ITuple> {
        let mut out = ITuple::default();
        for (&i, s) in &t.sets {
            let mut set = BTreeSet::new();
            for v in s {
                set.insert(self.vertices.binary_search(v).ok()?);
            }
            out.sets.insert(i, set);
        }
        Some(out)
    }
}

pub fn localize(g: &Graph, phi: &Formula, y: &BTreeSet<usize>) -> Result<Localized> {
    let e = eliminate_all(g, phi)?;
    let shroud = compute_shroud(&e.sig, &e.interp)?;
    let outside: BTreeSet<usize> = (0..g.n()).filter(|v| !y.contains(v)).collect();
    let empty = ITuple::empty(&phi.set_indices().into_iter().collect::<Vec<_>>());
    let n = census(g, &e.interp, &e.sig, &e.formula, &empty, &outside, e.cap())?;
    let r = restrict_to_subgraph(g, &e.interp, &e.sig, &e.formula, y, &n)?;
    let sentence = simplify(&requantify(&r.sig, &r.formula, 0)?);
    Ok(Localized {
        shroud,
        graph: r.graph,
        vertices: r.vertices,
        interp: r.interp,
        sentence,
    })
}
