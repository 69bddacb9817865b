use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::template::{forced_match, realized_template, Forest, Template};
use crate::error::{Error, Result};
use crate::graph::{eliminate_adjacency, Graph};
use crate::logic::{
    nnf, simplify, CounterSignature, CounterSymbol, Formula, Interpretation, Literal, Term,
};
use crate::sparsity::{dfs_forest, treedepth_coloring, Scaffolding};

/// Variable used by every local formula the compiler produces.
pub const LOCAL_VAR: &str = "x";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElimOptions {
    /// Height cap for the coloring whose class unions become scaffoldings.
    pub depth_cap: usize,
    /// Largest number of assignments enumerated for one quantifier.
    pub assignment_cap: usize,
    /// Largest number of literal conjunctions produced when splitting one formula.
    pub cube_cap: usize,
}

impl Default for ElimOptions {
    fn default() -> Self {
        ElimOptions {
            depth_cap: 4,
            assignment_cap: 1 << 22,
            cube_cap: 1 << 14,
        }
    }
}

/// A scaffolding together with the names of its membership predicate and parent function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaffoldSymbols {
    pub forest: Scaffolding,
    pub member: String,
    pub parent: String,
}

/// Output of [`eliminate_all`]: a counter signature, its interpretation and a quantifier-free
/// sentence built from cardinality atoms.
#[derive(Debug, Clone)]
pub struct Elimination {
    pub sig: CounterSignature,
    pub formula: Formula,
    pub interp: Interpretation,
    pub scaffolds: Vec<ScaffoldSymbols>,
}

impl Elimination {
    /// Number of counters, which bounds the shroud size by `2^levels`.
    pub fn levels(&self) -> usize {
        self.sig.len()
    }

    /// The cap M: no threshold in the sentence or the triggers exceeds it.
    pub fn cap(&self) -> u32 {
        self.sig.max_constant(&self.formula).max(1)
    }

    /// Counters in order with their triggers, the sentence, then the interpretation tables.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("signature:\n");
        for c in &self.sig.counters {
            let _ = writeln!(s, "  {} = #{} via {} : {}", c.name, c.var, c.func, c.trigger);
        }
        let _ = writeln!(s, "formula:\n  {}", self.formula);
        s.push_str("predicates:\n");
        for (name, members) in &self.interp.preds {
            let vs: Vec<String> = (0..members.len())
                .filter(|&v| members[v])
                .map(|v| v.to_string())
                .collect();
            let _ = writeln!(s, "  {name}: {}", vs.join(" "));
        }
        s.push_str("functions:\n");
        for (name, map) in &self.interp.funcs {
            let vs: Vec<String> = map.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "  {name}: [{}]", vs.join(" "));
        }
        s
    }
}

/// Compiler state: the symbols created so far and their meanings on one graph.
pub struct ElimContext<'g> {
    pub graph: &'g Graph,
    pub interp: Interpretation,
    pub sig: CounterSignature,
    pub scaffolds: Vec<ScaffoldSymbols>,
    pub options: ElimOptions,
    scaffold_colors: Vec<Option<BTreeSet<usize>>>,
    coloring: Option<Vec<usize>>,
    pred_by_set: HashMap<Vec<bool>, String>,
    counter_by_trigger: HashMap<(String, Formula), String>,
    next_id: usize,
}

fn is_static(phi: &Formula) -> bool {
    let mut dynamic = false;
    phi.walk(&mut |f| {
        dynamic |= matches!(f, Formula::SetPred(..) | Formula::CounterGe(..));
    });
    !dynamic
}

/// Replaces every occurrence of `atom` by a constant.
fn assign(phi: &Formula, atom: &Formula, value: bool) -> Formula {
    if phi == atom {
        return if value { Formula::True } else { Formula::False };
    }
    match phi {
        Formula::Not(b) => Formula::not(assign(b, atom, value)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| assign(x, atom, value)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| assign(x, atom, value)).collect()),
        other => other.clone(),
    }
}

/// Replaces every atom in `values` by its constant in one pass.
fn assign_all(phi: &Formula, values: &HashMap<&Formula, bool>) -> Formula {
    if let Some(&b) = values.get(phi) {
        return if b { Formula::True } else { Formula::False };
    }
    match phi {
        Formula::Not(b) => Formula::not(assign_all(b, values)),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| assign_all(x, values)).collect()),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| assign_all(x, values)).collect()),
        other => other.clone(),
    }
}

fn first_atom(phi: &Formula) -> Option<&Formula> {
    match phi {
        Formula::True | Formula::False => None,
        Formula::Not(b) => first_atom(b),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().find_map(first_atom),
        atom => Some(atom),
    }
}

fn atoms_of(phi: &Formula, out: &mut Vec<Formula>) {
    match phi {
        Formula::True | Formula::False => {}
        Formula::Not(b) => atoms_of(b, out),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| atoms_of(x, out)),
        atom => {
            if !out.contains(atom) {
                out.push(atom.clone())
            }
        }
    }
}

/// Splits a quantifier-free formula into disjoint literal conjunctions by branching on atoms.
pub fn shannon_cubes(phi: &Formula, cap: usize) -> Result<Vec<Vec<Literal>>> {
    fn go(
        phi: &Formula,
        acc: &mut Vec<Literal>,
        out: &mut Vec<Vec<Literal>>,
        cap: usize,
    ) -> Result<()> {
        match phi {
            Formula::True => {
                if out.len() >= cap {
                    return Err(Error::ResourceLimit(format!(
                        "more than {cap} conjunctions while splitting a formula"
                    )));
                }
                out.push(acc.clone());
                Ok(())
            }
            Formula::False => Ok(()),
            _ => {
                let atom = first_atom(phi).expect("non-constant formula has an atom").clone();
                for value in [true, false] {
                    acc.push(Literal {
                        positive: value,
                        atom: atom.clone(),
                    });
                    go(&simplify(&assign(phi, &atom, value)), acc, out, cap)?;
                    acc.pop();
                }
                Ok(())
            }
        }
    }
    let mut out = Vec::new();
    go(&simplify(phi), &mut Vec::new(), &mut out, cap)?;
    Ok(out)
}

fn first_card_atom(phi: &Formula) -> Option<Formula> {
    let mut atoms = Vec::new();
    atoms_of(phi, &mut atoms);
    atoms
        .into_iter()
        .find(|a| matches!(a, Formula::CardGe { .. }))
}

fn single_term(atom: &Formula) -> Option<&Term> {
    match atom {
        Formula::SetPred(_, t) | Formula::Pred(_, t) | Formula::CounterGe(_, t, _) => Some(t),
        _ => None,
    }
}

fn replace_in_literal(l: &Literal, from: &Term, to: &Term) -> Literal {
    Literal {
        positive: l.positive,
        atom: l.atom.map_terms(&|t| t.replace(from, to)),
    }
}

impl<'g> ElimContext<'g> {
    pub fn new(graph: &'g Graph, interp: Interpretation, sig: CounterSignature) -> Self {
        ElimContext {
            graph,
            interp,
            sig,
            scaffolds: Vec::new(),
            options: ElimOptions::default(),
            scaffold_colors: Vec::new(),
            coloring: None,
            pred_by_set: HashMap::new(),
            counter_by_trigger: HashMap::new(),
            next_id: 0,
        }
    }

    pub fn into_elimination(self, formula: Formula) -> Elimination {
        Elimination {
            sig: self.sig,
            formula,
            interp: self.interp,
            scaffolds: self.scaffolds,
        }
    }

    fn n(&self) -> usize {
        self.graph.n()
    }

    fn fresh(&mut self, prefix: &str) -> String {
        loop {
            let name = format!("{prefix}{}", self.next_id);
            self.next_id += 1;
            if !self.interp.preds.contains_key(&name)
                && !self.interp.funcs.contains_key(&name)
                && self.sig.counter_index(&name).is_none()
            {
                return name;
            }
        }
    }

    /// Registers a scaffolding's membership predicate and parent function.
    pub fn add_scaffolding(&mut self, forest: Scaffolding) -> usize {
        let member = self.fresh("in_f");
        let parent = self.fresh("prt_f");
        self.interp.add_pred(&member, forest.member.clone());
        self.interp.add_func(&parent, forest.parent.clone());
        self.sig.predicates.insert(member.clone());
        self.sig.functions.insert(parent.clone());
        self.scaffolds.push(ScaffoldSymbols {
            forest,
            member,
            parent,
        });
        self.scaffold_colors.push(None);
        self.scaffolds.len() - 1
    }

    /// A scaffolding containing all `values`, built from a union of color classes.
    fn scaffold_for(&mut self, values: &[usize]) -> usize {
        if self.coloring.is_none() {
            let c = treedepth_coloring(self.graph, 2, self.options.depth_cap)
                .unwrap_or_else(|_| vec![0; self.n()]);
            self.coloring = Some(c);
        }
        let coloring = self.coloring.as_ref().unwrap();
        let colors: BTreeSet<usize> = values.iter().map(|&v| coloring[v]).collect();
        if let Some(i) = self
            .scaffold_colors
            .iter()
            .position(|c| c.as_ref().is_some_and(|c| c.is_superset(&colors)))
        {
            return i;
        }
        let member: Vec<bool> = coloring.iter().map(|c| colors.contains(c)).collect();
        let forest = dfs_forest(self.graph, &member);
        let i = self.add_scaffolding(forest);
        self.scaffold_colors[i] = Some(colors);
        i
    }

    /// `Pred(p, t)` for a predicate interpreted as `members`, folding constant sets.
    pub fn pred_formula(&mut self, members: Vec<bool>, t: Term) -> Formula {
        if members.iter().all(|&b| b) {
            return Formula::True;
        }
        if !members.iter().any(|&b| b) {
            return Formula::False;
        }
        let name = match self.pred_by_set.get(&members) {
            Some(name) => name.clone(),
            None => {
                let name = self.fresh("p");
                self.interp.add_pred(&name, members.clone());
                self.sig.predicates.insert(name.clone());
                self.pred_by_set.insert(members, name.clone());
                name
            }
        };
        Formula::Pred(name, t)
    }

    /// Truth of a static formula when every variable is set to `v`.
    fn static_at(&self, phi: &Formula, v: usize) -> Result<bool> {
        Ok(match phi {
            Formula::True => true,
            Formula::False => false,
            Formula::Not(b) => !self.static_at(b, v)?,
            Formula::And(xs) => {
                for x in xs {
                    if !self.static_at(x, v)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(xs) => {
                for x in xs {
                    if self.static_at(x, v)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Pred(p, t) => self.interp.pred(p)?[self.interp.eval_at(t, v)?],
            Formula::Eq(a, b) => self.interp.eval_at(a, v)? == self.interp.eval_at(b, v)?,
            Formula::CardGe { body, min, .. } => self.static_count(body)? >= *min as usize,
            other => {
                return Err(Error::InvalidFormula(format!(
                    "`{other}` cannot be evaluated statically"
                )))
            }
        })
    }

    fn static_count(&self, body: &Formula) -> Result<usize> {
        let mut c = 0;
        for v in 0..self.n() {
            c += self.static_at(body, v)? as usize;
        }
        Ok(c)
    }

    /// `counter(t) >= m` for the counter along `func` with local trigger `trigger`; a static
    /// trigger becomes a predicate and equal counters are shared.
    pub fn counter_ge(&mut self, func: &str, trigger: Formula, t: Term, m: u32) -> Result<Formula> {
        let trigger = simplify(&trigger);
        if m == 0 {
            return Ok(Formula::True);
        }
        if trigger == Formula::False {
            return Ok(Formula::False);
        }
        if is_static(&trigger) {
            let f = self.interp.func(func)?.to_vec();
            let mut count = vec![0u32; self.n()];
            for (u, &fu) in f.iter().enumerate() {
                if fu != u && self.static_at(&trigger, u)? {
                    count[fu] += 1;
                }
            }
            return Ok(self.pred_formula(count.iter().map(|&c| c >= m).collect(), t));
        }
        let key = (func.to_string(), trigger.clone());
        let name = match self.counter_by_trigger.get(&key) {
            Some(name) => name.clone(),
            None => {
                let name = self.fresh("A");
                self.sig.add_counter(CounterSymbol {
                    name: name.clone(),
                    func: func.to_string(),
                    var: LOCAL_VAR.to_string(),
                    trigger,
                })?;
                self.counter_by_trigger.insert(key, name.clone());
                name
            }
        };
        Ok(Formula::CounterGe(name, t, m))
    }

    /// `#body >= m`, folded to a constant when the body is static.
    pub fn card_ge(&mut self, body: Formula, m: u32) -> Result<Formula> {
        let body = simplify(&body);
        if m == 0 {
            return Ok(Formula::True);
        }
        if is_static(&body) {
            let holds = self.static_count(&body)? >= m as usize;
            return Ok(if holds { Formula::True } else { Formula::False });
        }
        Ok(Formula::card_ge(LOCAL_VAR, body, m))
    }

    /// Conjunction of local parts with the static ones merged into one predicate.
    fn fold_local(&mut self, parts: Vec<Formula>) -> Result<Formula> {
        let mut flat = Vec::new();
        for p in parts {
            match simplify(&p) {
                Formula::And(xs) => flat.extend(xs),
                other => flat.push(other),
            }
        }
        let (stat, dynamic): (Vec<Formula>, Vec<Formula>) = flat.into_iter().partition(is_static);
        let mut out = dynamic;
        if !stat.is_empty() {
            let conj = Formula::And(stat);
            let mut members = Vec::with_capacity(self.n());
            for v in 0..self.n() {
                members.push(self.static_at(&conj, v)?);
            }
            out.insert(0, self.pred_formula(members, Term::var(LOCAL_VAR)));
        }
        Ok(simplify(&Formula::And(out)))
    }

    /// Removes every quantifier, innermost first. Adjacency must already be eliminated.
    pub fn eliminate(&mut self, phi: &Formula) -> Result<Formula> {
        Ok(match phi {
            Formula::Exists(..) | Formula::Forall(..) => {
                let (v, body) = match phi {
                    Formula::Exists(v, b) | Formula::Forall(v, b) => (v, b),
                    _ => unreachable!(),
                };
                let inner = self.eliminate(body)?;
                self.eliminate_quantifier(&match phi {
                    Formula::Exists(..) => Formula::exists(v, inner),
                    _ => Formula::forall(v, inner),
                })?
            }
            Formula::Not(b) => simplify(&nnf(&Formula::not(self.eliminate(b)?))),
            Formula::And(xs) => simplify(&Formula::And(
                xs.iter().map(|x| self.eliminate(x)).collect::<Result<_>>()?,
            )),
            Formula::Or(xs) => simplify(&Formula::Or(
                xs.iter().map(|x| self.eliminate(x)).collect::<Result<_>>()?,
            )),
            other => other.clone(),
        })
    }

    /// Eliminates the outer quantifier of `(Q z) psi` with `psi` quantifier-free.
    pub fn eliminate_quantifier(&mut self, phi: &Formula) -> Result<Formula> {
        match phi {
            Formula::Exists(z, psi) => self.exists_qf(z, psi),
            Formula::Forall(z, psi) => {
                let negated = simplify(&nnf(&Formula::not((**psi).clone())));
                let e = self.exists_qf(z, &negated)?;
                Ok(simplify(&nnf(&Formula::not(e))))
            }
            other => Err(Error::InvalidFormula(format!(
                "expected a quantified formula, got `{other}`"
            ))),
        }
    }

    fn exists_qf(&mut self, z: &str, psi: &Formula) -> Result<Formula> {
        let psi = simplify(psi);
        if psi.has_quantifier() {
            return Err(Error::InvalidFormula("quantifier below the eliminated one".into()));
        }
        if self.n() == 0 {
            return Ok(Formula::False);
        }
        if !psi.free_vars().contains(z) {
            return Ok(psi);
        }
        if let Some(c) = first_card_atom(&psi) {
            let pos = self.exists_qf(z, &assign(&psi, &c, true))?;
            let neg = self.exists_qf(z, &assign(&psi, &c, false))?;
            return Ok(simplify(&Formula::Or(vec![
                Formula::And(vec![c.clone(), pos]),
                Formula::And(vec![Formula::not(c), neg]),
            ])));
        }
        let mut atoms = Vec::new();
        atoms_of(&psi, &mut atoms);
        if atoms.iter().any(|a| matches!(a, Formula::Adj(..))) {
            return Err(Error::InvalidFormula(
                "adjacency atoms must be eliminated first".into(),
            ));
        }
        let only_z = psi.free_vars().len() == 1;
        let dynamic_on_z = atoms.iter().all(|a| {
            is_static(a) || single_term(a).is_some_and(|t| *t == Term::var(z))
        });
        if only_z && dynamic_on_z {
            self.exists_single(z, &psi, &atoms)
        } else {
            self.exists_general(z, &psi, &atoms)
        }
    }

    /// `(exists z) psi` where `z` is the only variable and dynamic atoms speak about `z` itself.
    fn exists_single(&mut self, z: &str, psi: &Formula, atoms: &[Formula]) -> Result<Formula> {
        let stat: Vec<&Formula> = atoms.iter().filter(|a| is_static(a)).collect();
        let mut classes: BTreeMap<Vec<bool>, Vec<bool>> = BTreeMap::new();
        for u in 0..self.n() {
            let sv = stat
                .iter()
                .map(|a| self.static_at(a, u))
                .collect::<Result<Vec<bool>>>()?;
            classes.entry(sv).or_insert_with(|| vec![false; self.n()])[u] = true;
        }
        let x = Term::var(LOCAL_VAR);
        let mut parts = Vec::new();
        for (sv, members) in classes {
            let values: HashMap<&Formula, bool> = stat.iter().copied().zip(sv.iter().copied()).collect();
            let residual = simplify(&assign_all(psi, &values));
            if residual == Formula::False {
                continue;
            }
            let class = self.pred_formula(members, x.clone());
            parts.push(Formula::And(vec![class, residual.substitute(z, &x)]));
        }
        self.card_ge(Formula::Or(parts), 1)
    }

    fn exists_general(&mut self, z: &str, psi: &Formula, atoms: &[Formula]) -> Result<Formula> {
        let n = self.n();
        let vars: Vec<String> = psi.free_vars().into_iter().collect();
        let var_index = |v: &str| vars.iter().position(|w| w == v).unwrap();
        // Static atoms on one variable are evaluated per vertex; equalities across variables
        // are decided by the realized template.
        let mut single: Vec<(usize, Formula)> = Vec::new();
        let mut cross: Vec<(Term, Term)> = Vec::new();
        let mut term_pool: Vec<Term> = vars.iter().map(|v| Term::var(v)).collect();
        for a in atoms {
            if is_static(a) {
                let fv = a.free_vars();
                if fv.len() == 1 {
                    single.push((var_index(fv.iter().next().unwrap()), a.clone()));
                } else if let Formula::Eq(s, t) = a {
                    cross.push((s.clone(), t.clone()));
                    term_pool.push(s.clone());
                    term_pool.push(t.clone());
                } else if fv.is_empty() {
                    // Closed static atoms were folded by simplification.
                    return Err(Error::InvalidFormula(format!("unexpected closed atom `{a}`")));
                }
            } else if let Some(t) = single_term(a) {
                term_pool.push(t.clone());
            }
        }
        let xs: Vec<Term> = super::template::subterm_closure(term_pool.iter())
            .into_iter()
            .collect();
        let xs_var: Vec<usize> = xs.iter().map(|t| var_index(t.variable())).collect();
        let x_pos = |t: &Term| xs.iter().position(|s| s == t).unwrap();
        let cross_idx: Vec<(usize, usize)> = cross.iter().map(|(s, t)| (x_pos(s), x_pos(t))).collect();
        // Per variable and vertex: truth of its single-variable atoms and values of its terms.
        let k = vars.len();
        let mut bits: Vec<Vec<Vec<bool>>> = vec![Vec::with_capacity(n); k];
        let mut vals: Vec<Vec<Vec<usize>>> = vec![Vec::with_capacity(n); k];
        for vi in 0..k {
            for u in 0..n {
                let b = single
                    .iter()
                    .filter(|(w, _)| *w == vi)
                    .map(|(_, a)| self.static_at(a, u))
                    .collect::<Result<Vec<bool>>>()?;
                bits[vi].push(b);
                let v = xs
                    .iter()
                    .zip(&xs_var)
                    .filter(|(_, &w)| w == vi)
                    .map(|(t, _)| self.interp.eval_at(t, u))
                    .collect::<Result<Vec<usize>>>()?;
                vals[vi].push(v);
            }
        }
        let total = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if total > self.options.assignment_cap as u128 {
            return Err(Error::ResourceLimit(format!(
                "{total} assignments for {k} variables exceed the cap {}",
                self.options.assignment_cap
            )));
        }
        let static_atoms: Vec<Formula> = (0..k)
            .flat_map(|vi| {
                single
                    .iter()
                    .filter(move |(w, _)| *w == vi)
                    .map(|(_, a)| a.clone())
            })
            .chain(cross.iter().map(|(s, t)| Formula::Eq(s.clone(), t.clone())))
            .collect();
        let mut residuals: HashMap<Vec<bool>, Formula> = HashMap::new();
        type GroupKey = (usize, super::template::TemplateKey, Vec<bool>);
        let mut group_index: HashMap<GroupKey, usize> = HashMap::new();
        let mut groups: Vec<GroupKey> = Vec::new();
        let mut omega = vec![0usize; k];
        let mut values = vec![0usize; xs.len()];
        'outer: loop {
            let mut sv: Vec<bool> = Vec::with_capacity(static_atoms.len());
            for vi in 0..k {
                sv.extend_from_slice(&bits[vi][omega[vi]]);
            }
            let mut cursor = vec![0usize; k];
            for (i, &vi) in xs_var.iter().enumerate() {
                values[i] = vals[vi][omega[vi]][cursor[vi]];
                cursor[vi] += 1;
            }
            for &(a, b) in &cross_idx {
                sv.push(values[a] == values[b]);
            }
            let residual = residuals.entry(sv.clone()).or_insert_with(|| {
                let values: HashMap<&Formula, bool> =
                    static_atoms.iter().zip(sv.iter().copied()).collect();
                simplify(&assign_all(psi, &values))
            });
            if *residual != Formula::False {
                let f = self.scaffold_for(&values);
                let key = realized_template(&self.scaffolds[f].forest, &xs, &values)
                    .expect("scaffolding contains the values");
                let gk = (f, key, sv);
                if !group_index.contains_key(&gk) {
                    group_index.insert(gk.clone(), groups.len());
                    groups.push(gk);
                }
            }
            // Next assignment.
            let mut i = k;
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                omega[i] += 1;
                if omega[i] < n {
                    break;
                }
                omega[i] = 0;
            }
        }
        let mut out = Vec::new();
        let mut split_cache: HashMap<Vec<bool>, Vec<Vec<Literal>>> = HashMap::new();
        for (f, key, sv) in groups {
            let template = Template::from_key(&key)?;
            let mut base = Vec::new();
            let mut offset = 0;
            for vi in 0..k {
                let width = bits[vi].first().map_or(0, |b| b.len());
                let want = &sv[offset..offset + width];
                offset += width;
                let members: Vec<bool> = bits[vi].iter().map(|b| b == want).collect();
                match self.pred_formula(members, Term::var(&vars[vi])) {
                    Formula::True => {}
                    p => base.push(Literal::pos(p)),
                }
            }
            if !split_cache.contains_key(&sv) {
                let cubes = shannon_cubes(&residuals[&sv], self.options.cube_cap)?;
                split_cache.insert(sv.clone(), cubes);
            }
            for (&(a, b), &eq) in cross_idx.iter().zip(&sv[offset..]) {
                base.push(Literal {
                    positive: eq,
                    atom: Formula::Eq(xs[a].clone(), xs[b].clone()),
                });
            }
            for cube in split_cache[&sv].clone() {
                let mut lits = base.clone();
                lits.extend(cube);
                let part = self.eliminate_template_with(&lits, z, &template, f, true)?;
                if part == Formula::True {
                    return Ok(Formula::True);
                }
                out.push(part);
            }
        }
        Ok(simplify(&Formula::Or(out)))
    }

    /// Given a conjunction of literals whose terms are placed by `template`, returns a
    /// formula without `z` that holds iff some value of `z` makes the assignment match the
    /// template in scaffolding `f` and satisfies the conjunction.
    pub fn eliminate_template(
        &mut self,
        lits: &[Literal],
        z: &str,
        template: &Template,
        f: usize,
    ) -> Result<Formula> {
        self.eliminate_template_with(lits, z, template, f, false)
    }

    /// With `relaxed`, the caller guarantees that `lits` already fix every atom the template
    /// decides, so a value of `z` forced by a term needs no recognizer.
    fn eliminate_template_with(
        &mut self,
        lits: &[Literal],
        z: &str,
        template: &Template,
        f: usize,
        relaxed: bool,
    ) -> Result<Formula> {
        let zt = Term::var(z);
        let q = template.forest.clone();
        let mut place = template.place.clone();
        for l in lits {
            for t in l.terms() {
                for s in t.subterms() {
                    if !place.contains_key(s) {
                        return Err(Error::Invalid(format!("template does not place term {s}")));
                    }
                }
            }
        }
        let Some(&mz) = place.get(&zt) else {
            return Err(Error::Invalid(format!("template does not place {z}")));
        };
        let prt = self.scaffolds[f].parent.clone();
        // Equalities are decided by the template.
        let mut rest: Vec<Literal> = Vec::new();
        let mut eqs: Vec<Literal> = Vec::new();
        for l in lits {
            match &l.atom {
                Formula::True if !l.positive => return Ok(Formula::False),
                Formula::False if l.positive => return Ok(Formula::False),
                Formula::True | Formula::False => {}
                Formula::Eq(a, b) => {
                    if (place[a] == place[b]) != l.positive {
                        return Ok(Formula::False);
                    }
                    eqs.push(l.clone());
                }
                Formula::Pred(..) | Formula::SetPred(..) | Formula::CounterGe(..) => {
                    rest.push(l.clone())
                }
                other => {
                    return Err(Error::Invalid(format!(
                        "unexpected atom `{other}` in template elimination"
                    )))
                }
            }
        }
        let has_z = |t: &Term| t.variable() == z;
        let mut extra: Vec<Literal> = Vec::new();
        let mut replaced = false;
        loop {
            // A term without z sits at or below z: z is determined by it.
            let below = place
                .iter()
                .filter(|(t, &node)| !has_z(t) && q.is_ancestor(mz, node))
                .map(|(t, &node)| (q.depth[node] - q.depth[mz], t.clone()))
                .min();
            if let Some((k, t)) = below {
                let target = Term::iterate(&prt, t, k);
                let mut parts = if relaxed && !replaced {
                    eqs.iter().map(Literal::to_formula).collect()
                } else {
                    let all: Vec<(&Term, usize)> = place.iter().map(|(t, &n)| (t, n)).collect();
                    vec![self.tau(&q, &all, f)]
                };
                parts.extend(rest.iter().chain(&extra).map(Literal::to_formula));
                return self.fold_unary(&simplify(&Formula::And(parts).substitute(z, &target)));
            }
            // A term with z above a term without z: rewrite it through the parent function.
            let mut best: Option<(usize, Term, Term)> = None;
            for (tp, &a) in place.iter().filter(|(t, _)| has_z(t)) {
                for (t, &b) in place.iter().filter(|(t, _)| !has_z(t)) {
                    if q.is_ancestor(a, b) {
                        let k = q.depth[b] - q.depth[a];
                        let better = match &best {
                            None => true,
                            Some((bk, btp, bt)) => {
                                k > *bk || (k == *bk && (tp, t) < (btp, bt))
                            }
                        };
                        if better {
                            best = Some((k, tp.clone(), t.clone()));
                        }
                    }
                }
            }
            let Some((k, tp, t)) = best else { break };
            let a = place[&tp];
            if !(q.is_ancestor(a, mz) && a != mz) {
                return Err(Error::Invalid(
                    "template is not guard-consistent".into(),
                ));
            }
            let kp = q.depth[mz] - q.depth[a];
            let sc = &self.scaffolds[f].forest;
            let mut members = Vec::with_capacity(self.n());
            for v in 0..self.n() {
                members.push(
                    sc.member[v]
                        && sc.depth[v] >= kp
                        && self.interp.eval_at(&tp, v)? == sc.ancestor(v, kp),
                );
            }
            match self.pred_formula(members, zt.clone()) {
                Formula::True => {}
                Formula::False => return Ok(Formula::False),
                p => extra.push(Literal::pos(p)),
            }
            let new = Term::iterate(&prt, t.clone(), k);
            let mut next: BTreeMap<Term, usize> = BTreeMap::new();
            let mut put = |s: Term, node: usize| -> bool {
                match next.get(&s) {
                    Some(&m) => m == node,
                    None => {
                        next.insert(s, node);
                        true
                    }
                }
            };
            for (s, &node) in &place {
                if !put(s.replace(&tp, &new), node) {
                    return Ok(Formula::False);
                }
            }
            let tb = place[&t];
            for i in 0..=k {
                if !put(Term::iterate(&prt, t.clone(), i), q.ancestor(tb, i)) {
                    return Ok(Formula::False);
                }
            }
            place = next;
            replaced = true;
            rest = rest.iter().map(|l| replace_in_literal(l, &tp, &new)).collect();
        }
        rest.extend(extra);
        // The shallowest ancestor of z whose subtree holds only terms with z.
        let clean = |y: usize| {
            place
                .iter()
                .all(|(t, &node)| has_z(t) || !q.is_ancestor(y, node))
        };
        let mut r = mz;
        while let Some(p) = q.parent[r] {
            if !clean(p) {
                break;
            }
            r = p;
        }
        let in_b = |node: usize| q.is_ancestor(r, node);
        if place.iter().any(|(t, &node)| has_z(t) != in_b(node)) {
            return Err(Error::Invalid("template is not guard-consistent".into()));
        }
        let siblings: Vec<usize> = match q.parent[r] {
            None => q.roots(),
            Some(p) => q.children(p),
        }
        .into_iter()
        .filter(|&y| y != r)
        .collect();
        let mut sib_terms = Vec::new();
        for &ri in &siblings {
            let (k, s) = place
                .iter()
                .filter(|(_, &node)| q.is_ancestor(ri, node))
                .map(|(t, &node)| (q.depth[node] - q.depth[ri], t.clone()))
                .min()
                .ok_or_else(|| Error::Invalid("template has a leaf without a term".into()))?;
            sib_terms.push(Term::iterate(&prt, s, k));
        }
        let lambda = self.elim_one(&rest, z, &q, &place, r, f)?;
        let (psi3, _): (Vec<Literal>, Vec<Literal>) = rest
            .iter()
            .cloned()
            .partition(|l| l.terms().iter().all(|t| !has_z(t)));
        let x3: Vec<(&Term, usize)> = place
            .iter()
            .filter(|(t, _)| !has_z(t))
            .map(|(t, &n)| (t, n))
            .collect();
        let mut parts = vec![self.tau(&q, &x3, f)];
        parts.extend(psi3.iter().map(Literal::to_formula));
        let m = siblings.len();
        let parent_term = match q.parent[r] {
            None => None,
            Some(p) => Some(
                match place
                    .iter()
                    .find(|(t, &node)| node == p && !has_z(t))
                    .map(|(t, _)| t.clone())
                {
                    Some(s) => s,
                    None => Term::apply(
                        &prt,
                        sib_terms
                            .first()
                            .cloned()
                            .ok_or_else(|| Error::Invalid("template has no anchor term".into()))?,
                    ),
                },
            ),
        };
        let mut alts = Vec::new();
        for mask in 0u64..(1u64 << m) {
            let excluded = mask.count_ones();
            let need = m as u32 + 1 - excluded;
            let mut conj = vec![match &parent_term {
                None => self.card_ge(lambda.clone(), need)?,
                Some(s) => self.counter_ge(&prt, lambda.clone(), s.clone(), need)?,
            }];
            for (j, sj) in sib_terms.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    conj.push(Formula::not(lambda.substitute(LOCAL_VAR, sj)));
                }
            }
            alts.push(Formula::And(conj));
        }
        parts.push(Formula::Or(alts));
        self.fold_unary(&simplify(&Formula::And(parts)))
    }

    /// Recognizer for a placement in scaffolding `f`, equivalent to the plain one: depths are
    /// pinned by unary predicates and each pair is pinned at its nearest common ancestor.
    fn tau(&mut self, q: &Forest, place: &[(&Term, usize)], f: usize) -> Formula {
        let prt = self.scaffolds[f].parent.clone();
        let up = |t: &Term, k: usize| Term::iterate(&prt, t.clone(), k);
        let mut parts = Vec::new();
        for &(t, node) in place {
            let d = q.depth[node];
            let sc = &self.scaffolds[f].forest;
            let members = (0..self.n()).map(|v| sc.member[v] && sc.depth[v] == d).collect();
            parts.push(self.pred_formula(members, t.clone()));
        }
        for (i, &(t, a)) in place.iter().enumerate() {
            for &(u, b) in &place[i + 1..] {
                let (da, db) = (q.depth[a], q.depth[b]);
                match q.nca(a, b) {
                    Some(c) => {
                        let dc = q.depth[c];
                        parts.push(Formula::Eq(up(t, da - dc), up(u, db - dc)));
                        if dc < da.min(db) {
                            parts.push(Formula::not(Formula::Eq(
                                up(t, da - dc - 1),
                                up(u, db - dc - 1),
                            )));
                        }
                    }
                    None => parts.push(Formula::not(Formula::Eq(up(t, da), up(u, db)))),
                }
            }
        }
        simplify(&Formula::And(parts))
    }

    /// Merges static conjuncts over a single variable into one predicate per variable.
    fn fold_unary(&mut self, phi: &Formula) -> Result<Formula> {
        let fv = phi.free_vars();
        if is_static(phi) && fv.len() <= 1 {
            if let Formula::Pred(_, Term::Var(_)) | Formula::True | Formula::False = phi {
                return Ok(phi.clone());
            }
            let members = (0..self.n())
                .map(|v| self.static_at(phi, v))
                .collect::<Result<Vec<bool>>>()?;
            return Ok(match fv.into_iter().next() {
                Some(v) => self.pred_formula(members, Term::var(&v)),
                None if members.iter().all(|&b| b) => Formula::True,
                None => Formula::False,
            });
        }
        Ok(match phi {
            Formula::And(xs) => {
                let mut by_var: BTreeMap<String, Vec<Formula>> = BTreeMap::new();
                let mut rest = Vec::new();
                for x in xs {
                    let x = self.fold_unary(x)?;
                    let fv = x.free_vars();
                    if is_static(&x) && fv.len() == 1 {
                        by_var.entry(fv.into_iter().next().unwrap()).or_default().push(x);
                    } else {
                        rest.push(x);
                    }
                }
                for (_, mut parts) in by_var {
                    rest.push(if parts.len() == 1 {
                        parts.pop().unwrap()
                    } else {
                        self.fold_unary(&Formula::And(parts))?
                    });
                }
                simplify(&Formula::And(rest))
            }
            Formula::Or(xs) => simplify(&Formula::Or(
                xs.iter().map(|x| self.fold_unary(x)).collect::<Result<_>>()?,
            )),
            Formula::Not(b) => simplify(&Formula::not(self.fold_unary(b)?)),
            other => other.clone(),
        })
    }

    /// The local formula λ for the subtree of `r`: it holds at `v` iff `v` sits at the depth
    /// of `r` and has a descendant that, as the value of `z`, matches the template below `r`
    /// and satisfies the literals with `z`.
    fn elim_one(
        &mut self,
        lits: &[Literal],
        z: &str,
        q: &Forest,
        place: &BTreeMap<Term, usize>,
        r: usize,
        f: usize,
    ) -> Result<Formula> {
        let has_z = |t: &Term| t.variable() == z;
        let z_terms: Vec<(&Term, usize)> = place
            .iter()
            .filter(|(t, _)| has_z(t))
            .map(|(t, &n)| (t, n))
            .collect();
        let mz = place[&Term::var(z)];
        let prt = self.scaffolds[f].parent.clone();
        let mut nodes = q.subtree(r);
        nodes.sort_by_key(|&y| (std::cmp::Reverse(q.depth[y]), y));
        let mut child_lit: HashMap<usize, Formula> = HashMap::new();
        let x = Term::var(LOCAL_VAR);
        let n = self.n();
        for &y in &nodes {
            let mut parts = Vec::new();
            let sc = self.scaffolds[f].forest.clone();
            let dy = q.depth[y];
            if !q.is_ancestor(y, mz) {
                // Least term with z below y, and an outermost subterm at a common ancestor
                // of that term and z.
                let (ty, ny) = z_terms
                    .iter()
                    .find(|(_, node)| q.is_ancestor(y, *node))
                    .copied()
                    .ok_or_else(|| Error::Invalid("template node without a term".into()))?;
                let (tpy, a) = ty
                    .subterms()
                    .into_iter()
                    .find_map(|s| {
                        let a = *place.get(s)?;
                        (q.is_ancestor(a, ny) && q.is_ancestor(a, mz)).then_some((s, a))
                    })
                    .ok_or_else(|| Error::Invalid("template is not guard-consistent".into()))?;
                let chain: Vec<String> = ty.functions()[tpy.depth()..]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                let up = dy - q.depth[a];
                let mut members = vec![false; n];
                for (w, slot) in members.iter_mut().enumerate() {
                    if !sc.member[w] || sc.depth[w] != dy {
                        continue;
                    }
                    let mut v = sc.ancestor(w, up);
                    for g in &chain {
                        v = self.interp.func(g)?[v];
                    }
                    *slot = sc.is_ancestor(w, v);
                }
                parts.push(self.pred_formula(members, x.clone()));
            }
            if y == mz {
                let mut members = vec![false; n];
                for (w, slot) in members.iter_mut().enumerate() {
                    let placed = z_terms
                        .iter()
                        .map(|(t, node)| Ok((*node, self.interp.eval_at(t, w)?)))
                        .collect::<Result<Vec<_>>>()?;
                    *slot = forced_match(&sc, q, &placed);
                }
                parts.push(self.pred_formula(members, x.clone()));
            }
            for c in q.children(y) {
                parts.push(child_lit[&c].clone());
            }
            for l in lits {
                let t = l
                    .terms()
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::Invalid("literal without a term".into()))?;
                if has_z(&t) && place[&t] == y {
                    parts.push(
                        Literal {
                            positive: l.positive,
                            atom: l.atom.map_terms(&|_| x.clone()),
                        }
                        .to_formula(),
                    );
                }
            }
            let lambda = self.fold_local(parts)?;
            if y == r {
                return Ok(lambda);
            }
            let lit = self.counter_ge(&prt, lambda, x.clone(), 1)?;
            child_lit.insert(y, lit);
        }
        unreachable!("the subtree of r contains r")
    }
}

/// Compiles a graph sentence into a quantifier-free sentence over cardinality atoms.
pub fn eliminate_all(g: &Graph, phi: &Formula) -> Result<Elimination> {
    eliminate_all_with(g, phi, &ElimOptions::default())
}

pub fn eliminate_all_with(g: &Graph, phi: &Formula, options: &ElimOptions) -> Result<Elimination> {
    if !phi.free_vars().is_empty() {
        return Err(Error::FreeVariable(
            phi.free_vars().into_iter().next().unwrap_or_default(),
        ));
    }
    let ae = eliminate_adjacency(g, phi);
    let mut sig = CounterSignature::new();
    sig.functions.extend(ae.functions.iter().cloned());
    let mut ctx = ElimContext::new(g, ae.interp, sig);
    ctx.options = options.clone();
    let formula = ctx.eliminate(&simplify(&nnf(&ae.formula)))?;
    Ok(ctx.into_elimination(formula))
}
