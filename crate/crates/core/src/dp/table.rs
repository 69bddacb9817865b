use std::collections::hash_map::{DefaultHasher, Entry};
use std::collections::{BTreeSet, HashMap};
use std::hash::BuildHasherDefault;
use std::rc::Rc;

use super::nice::{nice_decomposition, NiceNode};
use super::{lex_less, Solution};
use crate::error::{Error, Result};
use crate::graph::{Graph, WeightAssignment};
use crate::logic::{CounterSignature, Formula, ITuple, Interpretation, LocalProgram};
use crate::qelim::{card_atoms, compute_shroud, Shroud};
use crate::sparsity::{validate_tree_decomposition, TreeDecomposition};

/// Default ceiling on the number of keys in one table.
pub const DEFAULT_STATE_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpOptions {
    pub state_cap: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Everything [`dp_optimize`] reads. `formula` is a sentence over cardinality atoms whose
/// counters are described by `sig` and `interp`.
#[derive(Debug, Clone, Copy)]
pub struct DpProblem<'a> {
    pub graph: &'a Graph,
    pub td: &'a TreeDecomposition,
    /// Vertices allowed in the solution sets.
    pub allowed: &'a BTreeSet<usize>,
    pub weights: &'a WeightAssignment,
    pub sig: &'a CounterSignature,
    pub formula: &'a Formula,
    pub interp: &'a Interpretation,
}

/// Optimum with table statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpSolution {
    pub solution: Solution,
    /// Largest number of keys held by one table.
    pub max_states: usize,
    pub nice_nodes: usize,
}

/// Assignments made so far, shared between table entries.
#[derive(Debug)]
enum Witness {
    Nil,
    Set(usize, u32, Rc<Witness>),
    Join(Rc<Witness>, Rc<Witness>),
}

fn materialize(w: &Rc<Witness>, n: usize) -> Vec<u32> {
    let mut out = vec![0u32; n];
    let mut stack = vec![w.clone()];
    while let Some(w) = stack.pop() {
        match &*w {
            Witness::Nil => {}
            Witness::Set(v, m, rest) => {
                out[*v] = *m;
                stack.push(rest.clone());
            }
            Witness::Join(a, b) => {
                stack.push(a.clone());
                stack.push(b.clone());
            }
        }
    }
    out
}

struct Best {
    weight: i64,
    witness: Rc<Witness>,
}

type Table = HashMap<Vec<u32>, Best, BuildHasherDefault<DefaultHasher>>;

/// Key layout for one boundary set `S`: masks of `S`, then the capped contributions of the
/// finalized region to the relevant counters of each vertex of `S`, then capped counts of
/// finalized vertices satisfying each cardinality body.
#[derive(Debug, Clone)]
struct Layout {
    verts: Vec<usize>,
    offset: Vec<usize>,
    contrib_len: usize,
}

impl Layout {
    fn new(verts: Vec<usize>, relevant: &[Vec<usize>]) -> Layout {
        let mut offset = Vec::with_capacity(verts.len());
        let mut total = 0;
        for &v in &verts {
            offset.push(total);
            total += relevant[v].len();
        }
        Layout {
            verts,
            offset,
            contrib_len: total,
        }
    }

    fn pos(&self, v: usize) -> Option<usize> {
        self.verts.binary_search(&v).ok()
    }

    fn contrib_start(&self) -> usize {
        self.verts.len()
    }

    fn card_start(&self) -> usize {
        self.verts.len() + self.contrib_len
    }
}

struct Node {
    layout: Layout,
    processed: BTreeSet<usize>,
    table: Table,
}

struct Engine<'a> {
    p: &'a DpProblem<'a>,
    n: usize,
    cap: u32,
    shroud: Shroud,
    funcs: Vec<Vec<usize>>,
    triggers: Vec<LocalProgram>,
    cards: Vec<LocalProgram>,
    card_keys: Vec<(String, Formula)>,
    preds: Vec<Vec<bool>>,
    /// Counters `k` for which `v` has a preimage other than itself.
    relevant: Vec<Vec<usize>>,
    mask_count: u32,
    state_cap: usize,
    max_states: usize,
}

impl<'a> Engine<'a> {
    fn new(p: &'a DpProblem<'a>, options: &DpOptions) -> Result<Engine<'a>> {
        let n = p.graph.n();
        let indices = p.weights.indices().to_vec();
        let set_bit = |i: u32| -> Result<u32> {
            indices
                .iter()
                .position(|&j| j == i)
                .map(|k| k as u32)
                .ok_or(Error::UnknownIndex(i))
        };
        let mut pred_names: Vec<String> = Vec::new();
        let mut preds: Vec<Vec<bool>> = Vec::new();
        let mut pred_slot = |name: &str| -> Result<usize> {
            if let Some(i) = pred_names.iter().position(|q| q == name) {
                return Ok(i);
            }
            preds.push(p.interp.pred(name)?.to_vec());
            pred_names.push(name.to_string());
            Ok(preds.len() - 1)
        };
        let mut funcs = Vec::new();
        let mut triggers = Vec::new();
        for (k, c) in p.sig.counters.iter().enumerate() {
            funcs.push(p.interp.func(&c.func)?.to_vec());
            let mut counter_slot = |g: &str| -> Result<usize> {
                match p.sig.counter_index(g) {
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
                &set_bit,
                &mut pred_slot,
                &mut counter_slot,
            )?);
        }
        let card_keys = card_atoms(p.formula);
        let mut cards = Vec::new();
        for (var, body) in &card_keys {
            let mut counter_slot = |g: &str| -> Result<usize> {
                p.sig
                    .counter_index(g)
                    .ok_or_else(|| Error::UnknownSymbol(g.to_string()))
            };
            cards.push(LocalProgram::compile(
                body,
                var,
                &set_bit,
                &mut pred_slot,
                &mut counter_slot,
            )?);
        }
        let mut relevant = vec![Vec::new(); n];
        for (k, f) in funcs.iter().enumerate() {
            let mut seen = vec![false; n];
            for (u, &t) in f.iter().enumerate() {
                if t != u && !seen[t] {
                    seen[t] = true;
                    relevant[t].push(k);
                }
            }
        }
        Ok(Engine {
            p,
            n,
            cap: p.sig.max_constant(p.formula).max(1),
            shroud: compute_shroud(p.sig, p.interp)?,
            funcs,
            triggers,
            cards,
            card_keys,
            preds,
            relevant,
            mask_count: 1 << indices.len(),
            state_cap: options.state_cap,
            max_states: 0,
        })
    }

    fn boundary(&self, bag: &[usize], processed: &BTreeSet<usize>) -> Vec<usize> {
        self.shroud
            .image(bag.iter())
            .into_iter()
            .filter(|v| processed.contains(v))
            .collect()
    }

    fn layout(&self, verts: Vec<usize>) -> Layout {
        Layout::new(verts, &self.relevant)
    }

    fn offer(&mut self, table: &mut Table, key: Vec<u32>, weight: i64, witness: Rc<Witness>) -> Result<()> {
        match table.entry(key) {
            Entry::Vacant(e) => {
                e.insert(Best { weight, witness });
                if table.len() > self.state_cap {
                    return Err(Error::ResourceLimit(format!(
                        "a table exceeded {} states",
                        self.state_cap
                    )));
                }
                self.max_states = self.max_states.max(table.len());
            }
            Entry::Occupied(mut e) => {
                let b = e.get_mut();
                let better = weight > b.weight
                    || (weight == b.weight
                        && lex_less(
                            &materialize(&witness, self.n),
                            &materialize(&b.witness, self.n),
                        ));
                if better {
                    *b = Best { weight, witness };
                }
            }
        }
        Ok(())
    }

    /// Counters of every vertex of `S`: recorded contributions of the finalized region plus
    /// contributions among `S`, in signature order.
    fn counters_on(&self, layout: &Layout, key: &[u32]) -> Vec<Vec<u32>> {
        let s = layout.verts.len();
        let l = self.triggers.len();
        let mut cnt = vec![vec![0u32; l]; s];
        for (p, &v) in layout.verts.iter().enumerate() {
            for (j, &k) in self.relevant[v].iter().enumerate() {
                cnt[p][k] = key[layout.contrib_start() + layout.offset[p] + j];
            }
        }
        for k in 0..l {
            for (p, &u) in layout.verts.iter().enumerate() {
                let t = self.funcs[k][u];
                if t == u {
                    continue;
                }
                let Some(q) = layout.pos(t) else { continue };
                if self.trigger(k, u, key[p], &cnt[p]) {
                    cnt[q][k] += 1;
                }
            }
        }
        cnt
    }

    fn trigger(&self, k: usize, u: usize, mask: u32, cnt: &[u32]) -> bool {
        self.triggers[k].eval(mask, &|p| self.preds[p][u], &|c| cnt[c])
    }

    fn leaf(&mut self) -> Result<Node> {
        let layout = self.layout(Vec::new());
        let mut table = Table::default();
        self.offer(&mut table, vec![0; self.cards.len()], 0, Rc::new(Witness::Nil))?;
        Ok(Node {
            layout,
            processed: BTreeSet::new(),
            table,
        })
    }

    fn introduce(&mut self, child: Node, v: usize, bag: &[usize]) -> Result<Node> {
        let mut processed = child.processed;
        processed.insert(v);
        let verts = self.boundary(bag, &processed);
        let old = &child.layout;
        if old.verts.iter().any(|u| verts.binary_search(u).is_err())
            || verts.iter().any(|&u| u != v && old.pos(u).is_none())
        {
            return Err(Error::Decomposition(format!(
                "introducing {v} changes the boundary beyond the new vertex"
            )));
        }
        let layout = self.layout(verts);
        let masks: Vec<u32> = if self.p.allowed.contains(&v) {
            (0..self.mask_count).collect()
        } else {
            vec![0]
        };
        let vp = layout.pos(v).expect("new vertex is in the boundary");
        let mut table = Table::default();
        for (key, best) in child.table {
            for &m in &masks {
                let mut nk = Vec::with_capacity(layout.card_start() + self.cards.len());
                nk.extend_from_slice(&key[..vp]);
                nk.push(m);
                nk.extend_from_slice(&key[vp..old.verts.len()]);
                let c0 = old.contrib_start();
                let split = if vp < old.verts.len() {
                    old.offset[vp]
                } else {
                    old.contrib_len
                };
                nk.extend_from_slice(&key[c0..c0 + split]);
                nk.extend(std::iter::repeat_n(0, self.relevant[v].len()));
                nk.extend_from_slice(&key[c0 + split..]);
                self.offer(&mut table, nk, best.weight, best.witness.clone())?;
            }
        }
        Ok(Node {
            layout,
            processed,
            table,
        })
    }

    fn forget(&mut self, child: Node, v: usize, bag: &[usize]) -> Result<Node> {
        let processed = child.processed;
        let old = child.layout;
        let verts = self.boundary(bag, &processed);
        let layout = self.layout(verts);
        let leaving: Vec<usize> = (0..old.verts.len())
            .filter(|&p| layout.pos(old.verts[p]).is_none())
            .collect();
        let vp = old.pos(v).ok_or_else(|| {
            Error::Decomposition(format!("forgotten vertex {v} is not in the boundary"))
        })?;
        let cap = self.cap;
        let mut table = Table::default();
        for (key, best) in child.table {
            let mut nk = vec![0u32; layout.card_start() + self.cards.len()];
            for (p, &u) in layout.verts.iter().enumerate() {
                let q = old.pos(u).expect("boundary only shrinks on forget");
                nk[p] = key[q];
                let len = self.relevant[u].len();
                let (from, to) = (
                    old.contrib_start() + old.offset[q],
                    layout.contrib_start() + layout.offset[p],
                );
                nk[to..to + len].copy_from_slice(&key[from..from + len]);
            }
            let cs = layout.card_start();
            nk[cs..].copy_from_slice(&key[old.card_start()..]);
            if !leaving.is_empty() {
                let cnt = self.counters_on(&old, &key);
                for &p in &leaving {
                    let u = old.verts[p];
                    let mask = key[p];
                    for (c, prog) in self.cards.iter().enumerate() {
                        if prog.eval(mask, &|s| self.preds[s][u], &|k| cnt[p][k]) {
                            nk[cs + c] = (nk[cs + c] + 1).min(cap);
                        }
                    }
                    for k in 0..self.triggers.len() {
                        let t = self.funcs[k][u];
                        if t == u {
                            continue;
                        }
                        let Some(q) = layout.pos(t) else { continue };
                        if self.trigger(k, u, mask, &cnt[p]) {
                            let j = self.relevant[t].iter().position(|&r| r == k).unwrap();
                            let at = layout.contrib_start() + layout.offset[q] + j;
                            nk[at] = (nk[at] + 1).min(cap);
                        }
                    }
                }
            }
            let mask = key[vp];
            let weight = best
                .weight
                .checked_add(self.p.weights.get(v, mask))
                .ok_or(Error::WeightOverflow)?;
            let witness = if mask == 0 {
                best.witness
            } else {
                Rc::new(Witness::Set(v, mask, best.witness))
            };
            self.offer(&mut table, nk, weight, witness)?;
        }
        Ok(Node {
            layout,
            processed,
            table,
        })
    }

    fn join(&mut self, left: Node, right: Node, bag: &[usize]) -> Result<Node> {
        let processed: BTreeSet<usize> = left.processed.union(&right.processed).copied().collect();
        let verts: Vec<usize> = left
            .layout
            .verts
            .iter()
            .chain(&right.layout.verts)
            .copied()
            .collect::<BTreeSet<usize>>()
            .into_iter()
            .collect();
        let layout = self.layout(verts);
        let (ll, rl) = (&left.layout, &right.layout);
        let bag_pos = |l: &Layout| -> Result<Vec<usize>> {
            bag.iter()
                .map(|&b| {
                    l.pos(b).ok_or_else(|| {
                        Error::Decomposition(format!("bag vertex {b} missing from a join child"))
                    })
                })
                .collect()
        };
        let (lb, rb) = (bag_pos(ll)?, bag_pos(rl)?);
        let mut by_bag: HashMap<Vec<u32>, Vec<(&Vec<u32>, &Best)>, BuildHasherDefault<DefaultHasher>> =
            HashMap::default();
        for (key, best) in &right.table {
            by_bag
                .entry(rb.iter().map(|&p| key[p]).collect())
                .or_default()
                .push((key, best));
        }
        let cap = self.cap;
        let mut table = Table::default();
        let mut left_entries: Vec<(&Vec<u32>, &Best)> = left.table.iter().collect();
        left_entries.sort_by(|a, b| a.0.cmp(b.0));
        for (lk, lbest) in left_entries {
            let pattern: Vec<u32> = lb.iter().map(|&p| lk[p]).collect();
            let Some(partners) = by_bag.get(&pattern) else { continue };
            for &(rk, rbest) in partners {
                let mut nk = vec![0u32; layout.card_start() + self.cards.len()];
                for (p, &u) in layout.verts.iter().enumerate() {
                    let len = self.relevant[u].len();
                    let to = layout.contrib_start() + layout.offset[p];
                    for (side, key) in [(ll, lk), (rl, rk)] {
                        if let Some(q) = side.pos(u) {
                            nk[p] = key[q];
                            let from = side.contrib_start() + side.offset[q];
                            for j in 0..len {
                                nk[to + j] = (nk[to + j] + key[from + j]).min(cap);
                            }
                        }
                    }
                }
                let cs = layout.card_start();
                for c in 0..self.cards.len() {
                    nk[cs + c] =
                        (lk[ll.card_start() + c] + rk[rl.card_start() + c]).min(cap);
                }
                let weight = lbest
                    .weight
                    .checked_add(rbest.weight)
                    .ok_or(Error::WeightOverflow)?;
                let witness = Rc::new(Witness::Join(lbest.witness.clone(), rbest.witness.clone()));
                self.offer(&mut table, nk, weight, witness)?;
            }
        }
        Ok(Node {
            layout,
            processed,
            table,
        })
    }

    fn accepts(&self, counts: &[u32]) -> Result<bool> {
        eval_global(self.p.formula, &self.card_keys, counts)
    }
}

/// Truth of a sentence built from cardinality atoms, given the count of each atom's body.
fn eval_global(phi: &Formula, keys: &[(String, Formula)], counts: &[u32]) -> Result<bool> {
    Ok(match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::Not(b) => !eval_global(b, keys, counts)?,
        Formula::And(xs) => {
            for x in xs {
                if !eval_global(x, keys, counts)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(xs) => {
            for x in xs {
                if eval_global(x, keys, counts)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::CardGe { var, body, min } => {
            let i = keys
                .iter()
                .position(|(v, b)| v == var && **body == *b)
                .expect("cardinality atoms were collected from this formula");
            counts[i] >= *min
        }
        other => {
            return Err(Error::InvalidFormula(format!(
                "`{other}` is not a cardinality atom"
            )))
        }
    })
}

/// Maximum-weight tuple of subsets of `allowed` satisfying the sentence, by dynamic
/// programming over a nice version of the decomposition.
pub fn dp_optimize(p: &DpProblem, options: &DpOptions) -> Result<DpSolution> {
    validate_tree_decomposition(p.graph, p.td).map_err(|v| Error::Decomposition(v.to_string()))?;
    if p.weights.n() != p.graph.n() {
        return Err(Error::Invalid("weights are for a different graph".into()));
    }
    if !p.formula.free_vars().is_empty() {
        return Err(Error::FreeVariable(
            p.formula.free_vars().into_iter().next().unwrap_or_default(),
        ));
    }
    let mut e = Engine::new(p, options)?;
    let nice = nice_decomposition(p.td);
    let mut nodes: Vec<Option<Node>> = (0..nice.nodes.len()).map(|_| None).collect();
    for (id, node) in nice.nodes.iter().enumerate() {
        let bag = &nice.bags[id];
        let built = match *node {
            NiceNode::Leaf => e.leaf()?,
            NiceNode::Introduce { vertex, child } => {
                let c = nodes[child].take().expect("child processed first");
                e.introduce(c, vertex, bag)?
            }
            NiceNode::Forget { vertex, child } => {
                let c = nodes[child].take().expect("child processed first");
                e.forget(c, vertex, bag)?
            }
            NiceNode::Join { left, right } => {
                let l = nodes[left].take().expect("child processed first");
                let r = nodes[right].take().expect("child processed first");
                e.join(l, r, bag)?
            }
        };
        nodes[id] = Some(built);
    }
    let root = nodes[nice.root].take().expect("root processed");
    let mut best: Option<(i64, Vec<u32>)> = None;
    for (key, b) in &root.table {
        if !e.accepts(&key[root.layout.card_start()..])? {
            continue;
        }
        let masks = materialize(&b.witness, e.n);
        let better = match &best {
            None => true,
            Some((w, m)) => b.weight > *w || (b.weight == *w && lex_less(&masks, m)),
        };
        if better {
            best = Some((b.weight, masks));
        }
    }
    let (value, masks) = best.ok_or(Error::Infeasible)?;
    Ok(DpSolution {
        solution: Solution {
            tuple: ITuple::from_masks(p.weights.indices(), &masks),
            value,
        },
        max_states: e.max_states,
        nice_nodes: nice.nodes.len(),
    })
}
