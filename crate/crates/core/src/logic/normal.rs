use std::collections::{BTreeSet, HashSet};

use super::{Formula, Term};
use crate::error::{Error, Result};

/// Default cap on the number of disjuncts produced by [`dnf`].
pub const DEFAULT_DNF_CAP: usize = 1 << 16;

/// An atom or its negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Formula,
}

impl Literal {
    pub fn pos(atom: Formula) -> Self {
        Literal {
            positive: true,
            atom,
        }
    }

    pub fn neg(atom: Formula) -> Self {
        Literal {
            positive: false,
            atom,
        }
    }

    pub fn negated(&self) -> Self {
        Literal {
            positive: !self.positive,
            atom: self.atom.clone(),
        }
    }

    pub fn to_formula(&self) -> Formula {
        if self.positive {
            self.atom.clone()
        } else {
            Formula::not(self.atom.clone())
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.atom.free_vars()
    }

    pub fn terms(&self) -> Vec<Term> {
        let mut out = Vec::new();
        self.atom.visit_terms(&mut |t| out.push(t.clone()));
        out
    }
}

/// Negation normal form: negations only directly above atoms.
pub fn nnf(phi: &Formula) -> Formula {
    push(phi, true)
}

fn push(phi: &Formula, positive: bool) -> Formula {
    match phi {
        Formula::True => {
            if positive {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::False => {
            if positive {
                Formula::False
            } else {
                Formula::True
            }
        }
        Formula::Not(b) => push(b, !positive),
        Formula::And(xs) | Formula::Or(xs) => {
            let parts = xs.iter().map(|x| push(x, positive)).collect();
            if matches!(phi, Formula::And(_)) == positive {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        Formula::Forall(v, b) | Formula::Exists(v, b) => {
            let body = Box::new(push(b, positive));
            if matches!(phi, Formula::Forall(..)) == positive {
                Formula::Forall(v.clone(), body)
            } else {
                Formula::Exists(v.clone(), body)
            }
        }
        atom => {
            if positive {
                atom.clone()
            } else {
                Formula::not(atom.clone())
            }
        }
    }
}

/// Constant folding, flattening and removal of duplicate or complementary operands.
pub fn simplify(phi: &Formula) -> Formula {
    match phi {
        Formula::Eq(a, b) if a == b => Formula::True,
        Formula::CounterGe(_, _, 0) => Formula::True,
        Formula::CardGe { min: 0, .. } => Formula::True,
        Formula::CardGe { var, body, min } => match simplify(body) {
            Formula::False => Formula::False,
            b => Formula::CardGe {
                var: var.clone(),
                body: Box::new(b),
                min: *min,
            },
        },
        Formula::Not(b) => match simplify(b) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::not(other),
        },
        Formula::Forall(v, b) | Formula::Exists(v, b) => {
            let body = simplify(b);
            let universal = matches!(phi, Formula::Forall(..));
            match body {
                // Only the folds that hold on the empty domain too.
                Formula::True if universal => body,
                Formula::False if !universal => body,
                _ if matches!(phi, Formula::Forall(..)) => Formula::Forall(v.clone(), Box::new(body)),
                _ => Formula::Exists(v.clone(), Box::new(body)),
            }
        }
        Formula::And(xs) | Formula::Or(xs) => {
            let is_and = matches!(phi, Formula::And(_));
            let (unit, zero) = if is_and {
                (Formula::True, Formula::False)
            } else {
                (Formula::False, Formula::True)
            };
            let mut out: Vec<Formula> = Vec::new();
            let mut seen: HashSet<Formula> = HashSet::new();
            let mut pending: Vec<Formula> = xs.iter().map(simplify).collect();
            pending.reverse();
            while let Some(x) = pending.pop() {
                match x {
                    x if x == unit => {}
                    x if x == zero => return zero,
                    Formula::And(ys) if is_and => pending.extend(ys.into_iter().rev()),
                    Formula::Or(ys) if !is_and => pending.extend(ys.into_iter().rev()),
                    x => {
                        let complement = match &x {
                            Formula::Not(b) => (**b).clone(),
                            other => Formula::not(other.clone()),
                        };
                        if seen.contains(&complement) {
                            return zero;
                        }
                        if seen.insert(x.clone()) {
                            out.push(x);
                        }
                    }
                }
            }
            match out.len() {
                0 => unit,
                1 => out.pop().unwrap(),
                _ if is_and => Formula::And(out),
                _ => Formula::Or(out),
            }
        }
        other => other.clone(),
    }
}

/// Disjunctive normal form of a quantifier-free formula, as a list of literal conjunctions.
/// Conjunctions containing complementary literals are dropped.
pub fn dnf(phi: &Formula, cap: usize) -> Result<Vec<Vec<Literal>>> {
    fn go(phi: &Formula, cap: usize) -> Result<Vec<Vec<Literal>>> {
        match phi {
            Formula::True => Ok(vec![vec![]]),
            Formula::False => Ok(vec![]),
            Formula::Not(b) if b.is_atom() => Ok(vec![vec![Literal::neg((**b).clone())]]),
            Formula::Or(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    out.extend(go(x, cap)?);
                    if out.len() > cap {
                        return Err(explosion(cap));
                    }
                }
                Ok(out)
            }
            Formula::And(xs) => {
                let mut acc: Vec<Vec<Literal>> = vec![vec![]];
                for x in xs {
                    let part = go(x, cap)?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &part {
                            if let Some(c) = merge(a, b) {
                                next.push(c);
                            }
                        }
                        if next.len() > cap {
                            return Err(explosion(cap));
                        }
                    }
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc)
            }
            atom if atom.is_atom() => Ok(vec![vec![Literal::pos(atom.clone())]]),
            other => Err(Error::InvalidFormula(format!(
                "disjunctive normal form needs a quantifier-free formula, got `{other}`"
            ))),
        }
    }
    let mut out = go(&nnf(&simplify(phi)), cap)?;
    let mut seen = BTreeSet::new();
    out.retain(|c| seen.insert(c.clone()));
    Ok(out)
}

fn explosion(cap: usize) -> Error {
    Error::ResourceLimit(format!("disjunctive normal form exceeds {cap} conjunctions"))
}

fn merge(a: &[Literal], b: &[Literal]) -> Option<Vec<Literal>> {
    let mut out = a.to_vec();
    for l in b {
        if out.contains(&l.negated()) {
            return None;
        }
        if !out.contains(l) {
            out.push(l.clone());
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// A quantifier prefix followed by a quantifier-free matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrenexForm {
    pub prefix: Vec<(Quantifier, String)>,
    pub matrix: Formula,
}

impl PrenexForm {
    pub fn to_formula(&self) -> Formula {
        self.prefix
            .iter()
            .rev()
            .fold(self.matrix.clone(), |acc, (q, v)| match q {
                Quantifier::Forall => Formula::Forall(v.clone(), Box::new(acc)),
                Quantifier::Exists => Formula::Exists(v.clone(), Box::new(acc)),
            })
    }
}

/// Renames bound variables so that each is bound once and never also free.
fn rename_apart(phi: &Formula) -> Formula {
    fn go(phi: &Formula, used: &mut BTreeSet<String>) -> Formula {
        match phi {
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                let mut name = v.clone();
                let mut k = 1;
                while used.contains(&name) {
                    name = format!("{v}_{k}");
                    k += 1;
                }
                used.insert(name.clone());
                let body = if &name == v {
                    (**b).clone()
                } else {
                    b.substitute(v, &Term::Var(name.clone()))
                };
                let body = Box::new(go(&body, used));
                if matches!(phi, Formula::Forall(..)) {
                    Formula::Forall(name, body)
                } else {
                    Formula::Exists(name, body)
                }
            }
            Formula::Not(b) => Formula::not(go(b, used)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| go(x, used)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| go(x, used)).collect()),
            other => other.clone(),
        }
    }
    let mut used = phi.free_vars();
    go(phi, &mut used)
}

/// Prenex normal form; the matrix is in negation normal form.
pub fn to_prenex(phi: &Formula) -> PrenexForm {
    fn pull(phi: &Formula, prefix: &mut Vec<(Quantifier, String)>) -> Formula {
        match phi {
            Formula::Forall(v, b) => {
                prefix.push((Quantifier::Forall, v.clone()));
                pull(b, prefix)
            }
            Formula::Exists(v, b) => {
                prefix.push((Quantifier::Exists, v.clone()));
                pull(b, prefix)
            }
            Formula::And(xs) => Formula::And(xs.iter().map(|x| pull(x, prefix)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| pull(x, prefix)).collect()),
            other => other.clone(),
        }
    }
    let mut prefix = Vec::new();
    let matrix = pull(&rename_apart(&nnf(phi)), &mut prefix);
    PrenexForm { prefix, matrix }
}

/// Prenex normal form with the matrix in disjunctive normal form.
pub fn to_prenex_dnf(phi: &Formula) -> Result<Formula> {
    let p = to_prenex(phi);
    let clauses = dnf(&p.matrix, DEFAULT_DNF_CAP)?;
    let matrix = match clauses.len() {
        0 => Formula::False,
        _ => Formula::Or(
            clauses
                .into_iter()
                .map(|c| Formula::And(c.iter().map(Literal::to_formula).collect()))
                .collect(),
        ),
    };
    Ok(PrenexForm {
        prefix: p.prefix,
        matrix,
    }
    .to_formula())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn p(s: &str) -> Formula {
        parse_formula(s, None).unwrap()
    }

    #[test]
    fn duality() {
        let f = p("(not (forall x (P p x)))");
        assert_eq!(to_prenex(&f).to_formula(), p("(exists x (not (P p x)))"));
    }

    #[test]
    fn prenex_fixed_point() {
        let f = p("(forall x (exists y (and (X 1 x) (E x y))))");
        assert_eq!(to_prenex(&f).to_formula(), f);
    }

    #[test]
    fn clashing_names_are_renamed() {
        let f = p("(and (exists x (X 1 x)) (exists x (X 2 x)))");
        let pf = to_prenex(&f);
        assert_eq!(pf.prefix.len(), 2);
        assert_ne!(pf.prefix[0].1, pf.prefix[1].1);
    }

    #[test]
    fn dnf_distributes() {
        let f = p("(and (or (X 1 x) (X 2 x)) (or (X 3 x) (not (X 1 x))))");
        let d = dnf(&f, 100).unwrap();
        // (1 & 3), (2 & 3), (2 & !1); (1 & !1) is dropped.
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn dnf_cap() {
        let f = p("(and (or (X 1 x) (X 2 x)) (or (X 3 x) (X 4 x)) (or (X 5 x) (X 6 x)))");
        assert!(matches!(dnf(&f, 4), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn simplify_constants() {
        assert_eq!(simplify(&p("(and true (or false (eq x x)))")), Formula::True);
        assert_eq!(simplify(&p("(and (X 1 x) (not (X 1 x)))")), Formula::False);
        assert_eq!(simplify(&p("(not (not (X 1 x)))")), p("(X 1 x)"));
    }
}
