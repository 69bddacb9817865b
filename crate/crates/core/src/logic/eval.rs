use std::cell::OnceCell;
use std::collections::BTreeMap;

use super::{CounterSignature, Formula, ITuple, Interpretation, Term};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Counter values, indexed by counter position in the signature and then by vertex.
pub type CounterTable = Vec<Vec<u32>>;

/// A local formula compiled to slot indices for repeated evaluation at many vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalProgram {
    Const(bool),
    /// Bit position in the vertex membership mask.
    Set(u32),
    Pred(usize),
    Counter(usize, u32),
    Not(Box<LocalProgram>),
    And(Vec<LocalProgram>),
    Or(Vec<LocalProgram>),
}

impl LocalProgram {
    /// Compiles `body`, a formula local in `var`. Resolvers map symbols to slots.
    pub fn compile(
        body: &Formula,
        var: &str,
        set_bit: &impl Fn(u32) -> Result<u32>,
        pred_slot: &mut impl FnMut(&str) -> Result<usize>,
        counter_slot: &mut impl FnMut(&str) -> Result<usize>,
    ) -> Result<LocalProgram> {
        Ok(match body {
            Formula::True => LocalProgram::Const(true),
            Formula::False => LocalProgram::Const(false),
            Formula::Eq(a, b) if a == b => LocalProgram::Const(true),
            Formula::SetPred(i, _) => LocalProgram::Set(set_bit(*i)?),
            Formula::Pred(p, _) => LocalProgram::Pred(pred_slot(p)?),
            Formula::CounterGe(c, _, m) => LocalProgram::Counter(counter_slot(c)?, *m),
            Formula::Not(b) => LocalProgram::Not(Box::new(Self::compile(
                b,
                var,
                set_bit,
                pred_slot,
                counter_slot,
            )?)),
            Formula::And(xs) | Formula::Or(xs) => {
                let parts = xs
                    .iter()
                    .map(|x| Self::compile(x, var, set_bit, pred_slot, counter_slot))
                    .collect::<Result<Vec<_>>>()?;
                if matches!(body, Formula::And(_)) {
                    LocalProgram::And(parts)
                } else {
                    LocalProgram::Or(parts)
                }
            }
            other => {
                return Err(Error::InvalidFormula(format!(
                    "`{other}` is not {var}-local"
                )))
            }
        })
    }

    pub fn eval(
        &self,
        mask: u32,
        pred: &impl Fn(usize) -> bool,
        counter: &impl Fn(usize) -> u32,
    ) -> bool {
        match self {
            LocalProgram::Const(b) => *b,
            LocalProgram::Set(bit) => mask & (1 << bit) != 0,
            LocalProgram::Pred(p) => pred(*p),
            LocalProgram::Counter(c, m) => counter(*c) >= *m,
            LocalProgram::Not(b) => !b.eval(mask, pred, counter),
            LocalProgram::And(xs) => xs.iter().all(|x| x.eval(mask, pred, counter)),
            LocalProgram::Or(xs) => xs.iter().any(|x| x.eval(mask, pred, counter)),
        }
    }

    /// Counter slots this program reads.
    pub fn counters(&self, out: &mut Vec<usize>) {
        match self {
            LocalProgram::Counter(c, _) => out.push(*c),
            LocalProgram::Not(b) => b.counters(out),
            LocalProgram::And(xs) | LocalProgram::Or(xs) => xs.iter().for_each(|x| x.counters(out)),
            _ => {}
        }
    }
}

fn set_bit_of(indices: &[u32]) -> impl Fn(u32) -> Result<u32> + '_ {
    move |i| {
        indices
            .iter()
            .position(|&j| j == i)
            .map(|p| p as u32)
            .ok_or(Error::UnknownIndex(i))
    }
}

/// Compiled triggers of a signature, together with the function maps they count along.
pub(crate) struct CompiledSignature<'a> {
    pub funcs: Vec<&'a [usize]>,
    pub triggers: Vec<LocalProgram>,
    pub preds: Vec<&'a [bool]>,
}

impl<'a> CompiledSignature<'a> {
    pub fn new(
        interp: &'a Interpretation,
        sig: &CounterSignature,
        indices: &[u32],
    ) -> Result<Self> {
        let mut pred_names: Vec<String> = Vec::new();
        let mut preds = Vec::new();
        let mut funcs = Vec::new();
        let mut triggers = Vec::new();
        for (k, c) in sig.counters.iter().enumerate() {
            funcs.push(interp.func(&c.func)?);
            let mut pred_slot = |p: &str| -> Result<usize> {
                if let Some(i) = pred_names.iter().position(|q| q == p) {
                    return Ok(i);
                }
                preds.push(interp.pred(p)?);
                pred_names.push(p.to_string());
                Ok(pred_names.len() - 1)
            };
            let mut counter_slot = |g: &str| -> Result<usize> {
                match sig.counter_index(g) {
                    Some(j) if j < k => Ok(j),
                    _ => Err(Error::CounterOrder {
                        counter: c.name.clone(),
                        refers: g.to_string(),
                    }),
                }
            };
            triggers.push(LocalProgram::compile(
                &c.trigger,
                &c.var,
                &set_bit_of(indices),
                &mut pred_slot,
                &mut counter_slot,
            )?);
        }
        Ok(CompiledSignature {
            funcs,
            triggers,
            preds,
        })
    }

    pub fn counters(&self, masks: &[u32]) -> CounterTable {
        let n = masks.len();
        let mut table: CounterTable = Vec::with_capacity(self.triggers.len());
        for (k, trig) in self.triggers.iter().enumerate() {
            let mut vals = vec![0u32; n];
            let f = self.funcs[k];
            for u in 0..n {
                let target = f[u];
                if target == u {
                    continue;
                }
                let holds = trig.eval(masks[u], &|p| self.preds[p][u], &|c| table[c][u]);
                if holds {
                    vals[target] += 1;
                }
            }
            table.push(vals);
        }
        table
    }
}

/// Computes every counter of `sig` in signature order.
pub fn evaluate_counters(
    interp: &Interpretation,
    sig: &CounterSignature,
    tuple: &ITuple,
) -> Result<CounterTable> {
    let indices: Vec<u32> = all_indices(tuple, sig);
    let compiled = CompiledSignature::new(interp, sig, &indices)?;
    Ok(compiled.counters(&tuple.masks(&indices, interp.n)))
}

fn all_indices(tuple: &ITuple, sig: &CounterSignature) -> Vec<u32> {
    let mut ix: Vec<u32> = tuple.sets.keys().copied().collect();
    for c in &sig.counters {
        for i in c.trigger.set_indices() {
            if !ix.contains(&i) {
                ix.push(i);
            }
        }
    }
    ix
}

/// Everything a formula may refer to: graph, symbol meanings, counters and the tuple.
pub struct Model<'a> {
    pub graph: &'a Graph,
    pub interp: &'a Interpretation,
    pub sig: &'a CounterSignature,
    pub tuple: &'a ITuple,
    counters: OnceCell<Result<CounterTable>>,
}

impl<'a> Model<'a> {
    pub fn new(
        graph: &'a Graph,
        interp: &'a Interpretation,
        sig: &'a CounterSignature,
        tuple: &'a ITuple,
    ) -> Self {
        Model {
            graph,
            interp,
            sig,
            tuple,
            counters: OnceCell::new(),
        }
    }

    pub fn counters(&self) -> Result<&CounterTable> {
        self.counters
            .get_or_init(|| evaluate_counters(self.interp, self.sig, self.tuple))
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn term(&self, t: &Term, env: &BTreeMap<String, usize>) -> Result<usize> {
        self.interp.eval_term(t, env)
    }

    fn eval(&self, phi: &Formula, env: &mut BTreeMap<String, usize>) -> Result<bool> {
        Ok(match phi {
            Formula::True => true,
            Formula::False => false,
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                let universal = matches!(phi, Formula::Forall(..));
                let saved = env.get(v).copied();
                let mut result = universal;
                for u in 0..self.graph.n() {
                    env.insert(v.clone(), u);
                    if self.eval(b, env)? != universal {
                        result = !universal;
                        break;
                    }
                }
                match saved {
                    Some(s) => env.insert(v.clone(), s),
                    None => env.remove(v),
                };
                result
            }
            Formula::And(xs) => {
                for x in xs {
                    if !self.eval(x, env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(xs) => {
                for x in xs {
                    if self.eval(x, env)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Not(b) => !self.eval(b, env)?,
            Formula::Eq(a, b) => self.term(a, env)? == self.term(b, env)?,
            Formula::Adj(a, b) => self.graph.has_edge(self.term(a, env)?, self.term(b, env)?),
            Formula::SetPred(i, t) => self.tuple.contains(*i, self.term(t, env)?),
            Formula::Pred(p, t) => self.interp.pred(p)?[self.term(t, env)?],
            Formula::CounterGe(c, t, m) => {
                let k = self
                    .sig
                    .counter_index(c)
                    .ok_or_else(|| Error::UnknownSymbol(c.clone()))?;
                let v = self.term(t, env)?;
                self.counters()?[k][v] >= *m
            }
            Formula::CardGe { var, body, min } => {
                let mut inner = BTreeMap::new();
                let mut count = 0u32;
                for u in 0..self.graph.n() {
                    inner.insert(var.clone(), u);
                    if self.eval(body, &mut inner)? {
                        count += 1;
                        if count >= *min {
                            break;
                        }
                    }
                }
                count >= *min
            }
        })
    }

    /// Truth of `phi` under `env`.
    pub fn satisfies(&self, phi: &Formula, env: &BTreeMap<String, usize>) -> Result<bool> {
        let mut env = env.clone();
        self.eval(phi, &mut env)
    }
}

/// Direct evaluation of `phi`. Counter atoms are resolved through `sig`.
pub fn evaluate_naive(
    graph: &Graph,
    interp: &Interpretation,
    sig: &CounterSignature,
    tuple: &ITuple,
    phi: &Formula,
    env: &BTreeMap<String, usize>,
) -> Result<bool> {
    Model::new(graph, interp, sig, tuple).satisfies(phi, env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::logic::{parse_formula, parse_sentence, CounterSymbol};

    const INDEPENDENT: &str =
        "(forall x y (implies (and (X 1 x) (X 1 y) (not (eq x y))) (not (E x y))))";

    fn tuple(sets: &[(u32, &[usize])]) -> ITuple {
        ITuple {
            sets: sets
                .iter()
                .map(|(i, s)| (*i, s.iter().copied().collect()))
                .collect(),
        }
    }

    fn eval(g: &Graph, t: &ITuple, phi: &Formula) -> bool {
        let interp = Interpretation::new(g.n());
        evaluate_naive(g, &interp, &CounterSignature::new(), t, phi, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn independent_set_examples() {
        let phi = parse_sentence(INDEPENDENT, &[1]).unwrap();
        let k2 = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(!eval(&k2, &tuple(&[(1, &[0, 1])]), &phi));
        let p3 = Graph::path(3);
        assert!(eval(&p3, &tuple(&[(1, &[0, 2])]), &phi));
        assert!(eval(&p3, &ITuple::empty(&[1]), &phi));
        assert!(eval(&Graph::cycle(5), &ITuple::default(), &phi));
    }

    #[test]
    fn unbound_variable() {
        let phi = parse_formula("(X 1 y)", None).unwrap();
        let g = Graph::path(2);
        let r = evaluate_naive(
            &g,
            &Interpretation::new(2),
            &CounterSignature::new(),
            &ITuple::default(),
            &phi,
            &BTreeMap::new(),
        );
        assert_eq!(r, Err(Error::UnboundVariable("y".into())));
    }

    fn star_setup() -> (Interpretation, CounterSignature) {
        // Center 0, leaves 1..=3.
        let mut interp = Interpretation::new(4);
        interp.add_func("up", vec![0, 0, 0, 0]);
        interp.add_func("id", vec![0, 1, 2, 3]);
        let mut sig = CounterSignature::new();
        sig.add_counter(CounterSymbol {
            name: "g1".into(),
            func: "up".into(),
            var: "x".into(),
            trigger: Formula::True,
        })
        .unwrap();
        sig.add_counter(CounterSymbol {
            name: "g2".into(),
            func: "up".into(),
            var: "x".into(),
            trigger: parse_formula("(cge g1 x 1)", None).unwrap(),
        })
        .unwrap();
        sig.add_counter(CounterSymbol {
            name: "g3".into(),
            func: "id".into(),
            var: "x".into(),
            trigger: Formula::True,
        })
        .unwrap();
        (interp, sig)
    }

    #[test]
    fn star_counters() {
        let (interp, sig) = star_setup();
        let table = evaluate_counters(&interp, &sig, &ITuple::default()).unwrap();
        assert_eq!(table[0], vec![3, 0, 0, 0]);
        assert_eq!(table[1], vec![0, 0, 0, 0]);
        assert_eq!(table[2], vec![0, 0, 0, 0]);
    }

    #[test]
    fn domination_violation() {
        let mut sig = CounterSignature::new();
        let err = sig.add_counter(CounterSymbol {
            name: "g".into(),
            func: "f".into(),
            var: "x".into(),
            trigger: parse_formula("(cge g x 1)", None).unwrap(),
        });
        assert!(matches!(err, Err(Error::CounterOrder { .. })));
    }

    #[test]
    fn card_ge_counts() {
        let g = Graph::path(4);
        let phi = parse_formula("(card-ge (X 1 x) 2)", None).unwrap();
        assert!(eval(&g, &tuple(&[(1, &[0, 3])]), &phi));
        assert!(!eval(&g, &tuple(&[(1, &[2])]), &phi));
    }
}
