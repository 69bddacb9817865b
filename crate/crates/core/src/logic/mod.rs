//! Formulas, signatures, interpretations and their semantics.

mod eval;
mod monotone;
mod normal;
mod parse;

pub use eval::{evaluate_counters, evaluate_naive, CounterTable, LocalProgram, Model};
pub use monotone::{check_monotone_sampled, MonotoneVerdict};
pub use normal::{
    dnf, nnf, simplify, to_prenex, to_prenex_dnf, Literal, PrenexForm, Quantifier, DEFAULT_DNF_CAP,
};
pub use parse::{parse_formula, parse_sentence};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// A variable or a chain of unary function applications to a variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Apply(String, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn apply(f: &str, t: Term) -> Term {
        Term::Apply(f.to_string(), Box::new(t))
    }

    /// `f` applied `k` times.
    pub fn iterate(f: &str, t: Term, k: usize) -> Term {
        (0..k).fold(t, |acc, _| Term::apply(f, acc))
    }

    pub fn variable(&self) -> &str {
        match self {
            Term::Var(v) => v,
            Term::Apply(_, t) => t.variable(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Apply(_, t) => 1 + t.depth(),
        }
    }

    /// The term itself and all its subterms, outermost first.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = vec![self];
        let mut cur = self;
        while let Term::Apply(_, t) = cur {
            out.push(t);
            cur = t;
        }
        out
    }

    pub fn has_subterm(&self, sub: &Term) -> bool {
        self.subterms().into_iter().any(|t| t == sub)
    }

    /// Replace every occurrence of `from` (as a subterm) by `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::Var(_) => self.clone(),
            Term::Apply(f, t) => Term::Apply(f.clone(), Box::new(t.replace(from, to))),
        }
    }

    /// Function symbols from the innermost application outwards.
    pub fn functions(&self) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Term::Apply(f, t) = cur {
            out.push(f.as_str());
            cur = t;
        }
        out.reverse();
        out
    }

    /// The term with its innermost variable replaced by `base`.
    pub fn rebase(&self, base: &Term) -> Term {
        match self {
            Term::Var(_) => base.clone(),
            Term::Apply(f, t) => Term::Apply(f.clone(), Box::new(t.rebase(base))),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Apply(g, t) => write!(f, "(f {g} {t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Eq(Term, Term),
    Adj(Term, Term),
    SetPred(u32, Term),
    Pred(String, Term),
    /// `counter(term) >= min`
    CounterGe(String, Term, u32),
    /// At least `min` vertices satisfy the `var`-local `body`.
    CardGe {
        var: String,
        body: Box<Formula>,
        min: u32,
    },
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn exists(v: &str, f: Formula) -> Formula {
        Formula::Exists(v.to_string(), Box::new(f))
    }

    pub fn forall(v: &str, f: Formula) -> Formula {
        Formula::Forall(v.to_string(), Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Or(vec![Formula::not(a), b])
    }

    pub fn card_ge(var: &str, body: Formula, min: u32) -> Formula {
        Formula::CardGe {
            var: var.to_string(),
            body: Box::new(body),
            min,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Formula::Eq(..)
                | Formula::Adj(..)
                | Formula::SetPred(..)
                | Formula::Pred(..)
                | Formula::CounterGe(..)
                | Formula::CardGe { .. }
        )
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Forall(_, b) | Formula::Exists(_, b) | Formula::Not(b) => vec![b],
            Formula::And(xs) | Formula::Or(xs) => xs.iter().collect(),
            _ => vec![],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add = |t: &Term, bound: &Vec<String>| {
            let v = t.variable();
            if !bound.iter().any(|b| b == v) {
                out.insert(v.to_string());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                bound.push(v.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
            Formula::And(xs) | Formula::Or(xs) => {
                for x in xs {
                    x.collect_free(bound, out);
                }
            }
            Formula::Not(b) => b.collect_free(bound, out),
            Formula::Eq(a, b) | Formula::Adj(a, b) => {
                add(a, bound);
                add(b, bound);
            }
            Formula::SetPred(_, t) | Formula::Pred(_, t) | Formula::CounterGe(_, t, _) => {
                add(t, bound)
            }
            // The body of a cardinality atom only mentions its own variable.
            Formula::CardGe { .. } => {}
        }
    }

    /// All terms occurring in the formula, with their subterms, outside cardinality atoms.
    pub fn term_set(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            for s in t.subterms() {
                out.insert(s.clone());
            }
        });
        out
    }

    /// Calls `f` on every maximal term outside cardinality atoms.
    pub fn visit_terms(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Formula::True | Formula::False | Formula::CardGe { .. } => {}
            Formula::Forall(_, b) | Formula::Exists(_, b) | Formula::Not(b) => b.visit_terms(f),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit_terms(f)),
            Formula::Eq(a, b) | Formula::Adj(a, b) => {
                f(a);
                f(b)
            }
            Formula::SetPred(_, t) | Formula::Pred(_, t) | Formula::CounterGe(_, t, _) => f(t),
        }
    }

    /// Rewrites every maximal term outside cardinality atoms.
    pub fn map_terms(&self, f: &impl Fn(&Term) -> Term) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::CardGe { .. } => self.clone(),
            Formula::Forall(v, b) => Formula::Forall(v.clone(), Box::new(b.map_terms(f))),
            Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(b.map_terms(f))),
            Formula::Not(b) => Formula::Not(Box::new(b.map_terms(f))),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.map_terms(f)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.map_terms(f)).collect()),
            Formula::Eq(a, b) => Formula::Eq(f(a), f(b)),
            Formula::Adj(a, b) => Formula::Adj(f(a), f(b)),
            Formula::SetPred(i, t) => Formula::SetPred(*i, f(t)),
            Formula::Pred(p, t) => Formula::Pred(p.clone(), f(t)),
            Formula::CounterGe(c, t, m) => Formula::CounterGe(c.clone(), f(t), *m),
        }
    }

    /// Substitutes `to` for free occurrences of variable `var`.
    pub fn substitute(&self, var: &str, to: &Term) -> Formula {
        match self {
            Formula::Forall(v, _) | Formula::Exists(v, _) if v == var => self.clone(),
            Formula::Forall(v, b) => Formula::Forall(v.clone(), Box::new(b.substitute(var, to))),
            Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(b.substitute(var, to))),
            Formula::Not(b) => Formula::Not(Box::new(b.substitute(var, to))),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.substitute(var, to)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.substitute(var, to)).collect()),
            _ => {
                let from = Term::var(var);
                self.map_terms(&|t| t.replace(&from, to))
            }
        }
    }

    /// Largest threshold constant in the formula, including cardinality bodies.
    pub fn max_constant(&self) -> u32 {
        match self {
            Formula::CounterGe(_, _, m) => *m,
            Formula::CardGe { body, min, .. } => (*min).max(body.max_constant()),
            _ => self.children().iter().map(|c| c.max_constant()).max().unwrap_or(0),
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Formula::Forall(..) | Formula::Exists(..) => true,
            _ => self.children().iter().any(|c| c.has_quantifier()),
        }
    }

    /// Set indices used anywhere, including cardinality bodies.
    pub fn set_indices(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::SetPred(i, _) = f {
                out.insert(*i);
            }
        });
        out
    }

    /// Pre-order traversal that also enters cardinality bodies.
    pub fn walk(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::CardGe { body, .. } => body.walk(f),
            _ => {
                for c in self.children() {
                    c.walk(f);
                }
            }
        }
    }

    /// Checks that the formula is quantifier-free, function-free and mentions only `var`.
    pub fn check_local(&self, var: &str) -> Result<()> {
        let mut problem = None;
        self.walk(&mut |f| {
            if problem.is_some() {
                return;
            }
            match f {
                Formula::Forall(..) | Formula::Exists(..) => {
                    problem = Some("quantifier in local formula".to_string())
                }
                Formula::CardGe { .. } => {
                    problem = Some("cardinality atom in local formula".to_string())
                }
                Formula::Adj(..) => problem = Some("adjacency in local formula".to_string()),
                _ => {}
            }
            let mut check = |t: &Term| {
                if matches!(t, Term::Apply(..)) {
                    problem = Some(format!("function application `{t}` in local formula"));
                } else if t.variable() != var {
                    problem = Some(format!("variable `{}` in {var}-local formula", t.variable()));
                }
            };
            match f {
                Formula::Eq(a, b) => {
                    check(a);
                    check(b)
                }
                Formula::SetPred(_, t) | Formula::Pred(_, t) | Formula::CounterGe(_, t, _) => {
                    check(t)
                }
                _ => {}
            }
        });
        match problem {
            Some(p) => Err(Error::InvalidFormula(p)),
            None => Ok(()),
        }
    }

    /// Renames the free variable of a local formula.
    pub fn rename_local(&self, from: &str, to: &str) -> Formula {
        self.substitute(from, &Term::var(to))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, op: &str, xs: &[Formula]| {
            write!(f, "({op}")?;
            for x in xs {
                write!(f, " {x}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Forall(v, b) => write!(f, "(forall {v} {b})"),
            Formula::Exists(v, b) => write!(f, "(exists {v} {b})"),
            Formula::And(xs) => list(f, "and", xs),
            Formula::Or(xs) => list(f, "or", xs),
            Formula::Not(b) => write!(f, "(not {b})"),
            Formula::Eq(a, b) => write!(f, "(eq {a} {b})"),
            Formula::Adj(a, b) => write!(f, "(E {a} {b})"),
            Formula::SetPred(i, t) => write!(f, "(X {i} {t})"),
            Formula::Pred(p, t) => write!(f, "(P {p} {t})"),
            Formula::CounterGe(c, t, m) => write!(f, "(cge {c} {t} {m})"),
            Formula::CardGe { var, body, min } => write!(f, "(card-ge {var} {body} {min})"),
        }
    }
}

/// A counter symbol whose value at `v` counts the `u != v` with `func(u) = v` and `trigger(u)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterSymbol {
    pub name: String,
    pub func: String,
    /// Variable of the local trigger formula.
    pub var: String,
    pub trigger: Formula,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CounterSignature {
    pub counters: Vec<CounterSymbol>,
    pub predicates: BTreeSet<String>,
    pub functions: BTreeSet<String>,
}

impl CounterSignature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of counter symbols.
    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn counter_index(&self, name: &str) -> Option<usize> {
        self.counters.iter().position(|c| c.name == name)
    }

    pub fn add_counter(&mut self, c: CounterSymbol) -> Result<()> {
        c.trigger.check_local(&c.var)?;
        let mut bad = None;
        c.trigger.walk(&mut |f| {
            if let Formula::CounterGe(g, _, _) = f {
                if self.counter_index(g).is_none() {
                    bad = Some(g.clone());
                }
            }
        });
        if let Some(refers) = bad {
            return Err(Error::CounterOrder {
                counter: c.name.clone(),
                refers,
            });
        }
        if self.counter_index(&c.name).is_some()
            || self.predicates.contains(&c.name)
            || self.functions.contains(&c.name)
        {
            return Err(Error::Invalid(format!("duplicate symbol `{}`", c.name)));
        }
        self.functions.insert(c.func.clone());
        self.counters.push(c);
        Ok(())
    }

    /// Largest integer constant in `phi` and the triggers.
    pub fn max_constant(&self, phi: &Formula) -> u32 {
        self.counters
            .iter()
            .map(|c| c.trigger.max_constant())
            .chain(std::iter::once(phi.max_constant()))
            .max()
            .unwrap_or(0)
    }
}

/// Concrete meaning of predicate and function symbols on a fixed graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interpretation {
    pub n: usize,
    pub preds: BTreeMap<String, Vec<bool>>,
    pub funcs: BTreeMap<String, Vec<usize>>,
}

impl Interpretation {
    pub fn new(n: usize) -> Self {
        Interpretation {
            n,
            ..Default::default()
        }
    }

    pub fn add_pred(&mut self, name: &str, members: Vec<bool>) {
        debug_assert_eq!(members.len(), self.n);
        self.preds.insert(name.to_string(), members);
    }

    pub fn add_func(&mut self, name: &str, map: Vec<usize>) {
        debug_assert_eq!(map.len(), self.n);
        self.funcs.insert(name.to_string(), map);
    }

    pub fn pred(&self, name: &str) -> Result<&[bool]> {
        self.preds
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn func(&self, name: &str) -> Result<&[usize]> {
        self.funcs
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    /// Evaluates a term under a partial assignment.
    pub fn eval_term(&self, t: &Term, env: &BTreeMap<String, usize>) -> Result<usize> {
        match t {
            Term::Var(v) => env
                .get(v)
                .copied()
                .ok_or_else(|| Error::UnboundVariable(v.clone())),
            Term::Apply(f, inner) => {
                let x = self.eval_term(inner, env)?;
                Ok(self.func(f)?[x])
            }
        }
    }

    /// Value of `t` when its variable is set to `v`.
    pub fn eval_at(&self, t: &Term, v: usize) -> Result<usize> {
        t.functions()
            .into_iter()
            .try_fold(v, |x, f| Ok(self.func(f)?[x]))
    }
}

/// An assignment of a vertex set to each index.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ITuple {
    pub sets: BTreeMap<u32, BTreeSet<usize>>,
}

impl ITuple {
    pub fn empty(indices: &[u32]) -> Self {
        ITuple {
            sets: indices.iter().map(|&i| (i, BTreeSet::new())).collect(),
        }
    }

    pub fn contains(&self, index: u32, v: usize) -> bool {
        self.sets.get(&index).is_some_and(|s| s.contains(&v))
    }

    /// Per-vertex membership bitmask; bit `k` stands for `indices[k]`.
    pub fn masks(&self, indices: &[u32], n: usize) -> Vec<u32> {
        let mut out = vec![0u32; n];
        for (k, i) in indices.iter().enumerate() {
            if let Some(s) = self.sets.get(i) {
                for &v in s {
                    out[v] |= 1 << k;
                }
            }
        }
        out
    }

    pub fn from_masks(indices: &[u32], masks: &[u32]) -> Self {
        let mut t = ITuple::empty(indices);
        for (v, &m) in masks.iter().enumerate() {
            for (k, i) in indices.iter().enumerate() {
                if m & (1 << k) != 0 {
                    t.sets.get_mut(i).unwrap().insert(v);
                }
            }
        }
        t
    }

    /// Indices whose set contains `v`.
    pub fn pattern(&self, v: usize) -> BTreeSet<u32> {
        self.sets
            .iter()
            .filter(|(_, s)| s.contains(&v))
            .map(|(&i, _)| i)
            .collect()
    }

    pub fn vertices(&self) -> BTreeSet<usize> {
        self.sets.values().flatten().copied().collect()
    }

    pub fn is_subset_of(&self, other: &ITuple) -> bool {
        self.sets
            .iter()
            .all(|(i, s)| s.is_empty() || other.sets.get(i).is_some_and(|o| s.is_subset(o)))
    }

    /// Every tuple over `vertices` with the given indices (exponential; oracle use only).
    pub fn enumerate(indices: &[u32], vertices: &[usize]) -> Vec<ITuple> {
        let bits = indices.len() * vertices.len();
        assert!(bits < 31, "tuple enumeration too large");
        (0u32..(1 << bits))
            .map(|code| {
                let mut t = ITuple::empty(indices);
                for (k, i) in indices.iter().enumerate() {
                    for (j, &v) in vertices.iter().enumerate() {
                        if code & (1 << (k * vertices.len() + j)) != 0 {
                            t.sets.get_mut(i).unwrap().insert(v);
                        }
                    }
                }
                t
            })
            .collect()
    }
}

impl fmt::Display for ITuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in &self.sets {
            write!(f, "{i}:")?;
            for v in s {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
