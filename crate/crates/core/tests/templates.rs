use std::collections::{BTreeMap, BTreeSet};

use sparsefo::graph::{random_graph, small_connected_graphs, Graph};
use sparsefo::logic::{evaluate_naive, CounterSignature, ITuple, Interpretation, Term};
use sparsefo::qelim::{
    enumerate_templates, forced_match_env, matches_template, subterm_closure, Template,
    DEFAULT_TEMPLATE_CAP,
};
use sparsefo::sparsity::{dfs_forest, scaffolding_system, system_is_generic, Scaffolding};

fn x() -> Term {
    Term::var("x")
}
fn y() -> Term {
    Term::var("y")
}
fn z() -> Term {
    Term::var("z")
}
fn f(t: Term) -> Term {
    Term::apply("f", t)
}
fn g(t: Term) -> Term {
    Term::apply("g", t)
}

/// Closed term sets with at most three terms.
fn term_sets() -> Vec<BTreeSet<Term>> {
    let raw = vec![
        vec![],
        vec![x()],
        vec![x(), y()],
        vec![f(x())],
        vec![x(), y(), z()],
        vec![f(x()), y()],
        vec![f(f(x()))],
        vec![f(x()), g(x())],
    ];
    raw.iter().map(|ts| subterm_closure(ts.iter())).collect()
}

/// Independent count: every term picks a root path of explicit node ids, reusing a node only
/// where its parent agrees. Shapes are identified by (depths, common-prefix lengths).
fn oracle_count(terms: &BTreeSet<Term>, d: usize) -> usize {
    let terms: Vec<Term> = terms.iter().cloned().collect();
    let mut shapes = BTreeSet::new();
    fn go(
        i: usize,
        terms: &[Term],
        d: usize,
        paths: &mut Vec<Vec<usize>>,
        next: &mut usize,
        shapes: &mut BTreeSet<(Vec<usize>, Vec<Option<usize>>)>,
    ) {
        if i == terms.len() {
            let related = |a: &[usize], b: &[usize]| a.starts_with(b) || b.starts_with(a);
            for (k, t) in terms.iter().enumerate() {
                if let Term::Apply(_, inner) = t {
                    let j = terms.iter().position(|u| u == inner.as_ref()).unwrap();
                    if !related(&paths[k], &paths[j]) {
                        return;
                    }
                }
            }
            let depths = paths.iter().map(|p| p.len() - 1).collect();
            let mut common = Vec::new();
            for a in 0..paths.len() {
                for b in a + 1..paths.len() {
                    let shared = paths[a]
                        .iter()
                        .zip(&paths[b])
                        .take_while(|(u, v)| u == v)
                        .count();
                    common.push(shared.checked_sub(1));
                }
            }
            shapes.insert((depths, common));
            return;
        }
        for len in 1..=d {
            let mut path = Vec::with_capacity(len);
            extend(i, terms, d, len, &mut path, paths, next, shapes);
        }
    }
    #[allow(clippy::too_many_arguments)]
    fn extend(
        i: usize,
        terms: &[Term],
        d: usize,
        len: usize,
        path: &mut Vec<usize>,
        paths: &mut Vec<Vec<usize>>,
        next: &mut usize,
        shapes: &mut BTreeSet<(Vec<usize>, Vec<Option<usize>>)>,
    ) {
        if path.len() == len {
            paths.push(path.clone());
            go(i + 1, terms, d, paths, next, shapes);
            paths.pop();
            return;
        }
        let level = path.len();
        // Existing nodes at this level whose parent is the previous node on the path.
        let mut existing: BTreeSet<usize> = BTreeSet::new();
        for p in paths.iter() {
            if p.len() > level && p[..level] == path[..] {
                existing.insert(p[level]);
            }
        }
        for node in existing {
            path.push(node);
            extend(i, terms, d, len, path, paths, next, shapes);
            path.pop();
        }
        let fresh = *next;
        *next += 1;
        path.push(fresh);
        extend(i, terms, d, len, path, paths, next, shapes);
        path.pop();
        *next -= 1;
    }
    go(0, &terms, d, &mut Vec::new(), &mut 0, &mut shapes);
    shapes.len()
}

#[test]
fn template_counts_match_path_oracle() {
    for terms in term_sets() {
        for d in 1..=3 {
            let got = enumerate_templates(&terms, d, DEFAULT_TEMPLATE_CAP).unwrap();
            assert_eq!(got.len(), oracle_count(&terms, d), "terms {terms:?}, d={d}");
            let distinct: BTreeSet<_> = got.iter().map(|t| t.key()).collect();
            assert_eq!(distinct.len(), got.len(), "duplicate templates for {terms:?}");
        }
    }
}

#[test]
fn single_variable_templates_are_root_paths() {
    let terms = subterm_closure([&x()]);
    assert_eq!(enumerate_templates(&terms, 3, 100).unwrap().len(), 3);
    assert_eq!(enumerate_templates(&terms, 0, 100).unwrap().len(), 0);
    assert_eq!(enumerate_templates(&BTreeSet::new(), 0, 100).unwrap().len(), 1);
}

#[test]
fn unclosed_term_sets_are_rejected() {
    let terms = BTreeSet::from([f(x())]);
    assert!(enumerate_templates(&terms, 2, 100).is_err());
}

#[test]
fn template_cap_is_enforced() {
    let terms = subterm_closure([&x(), &y(), &z()]);
    assert!(enumerate_templates(&terms, 3, 2).is_err());
}

/// For every placed term, the shallowest placed subterm is an ancestor of both the term and
/// its variable.
#[test]
fn guard_consistency_gives_common_ancestors() {
    for terms in term_sets() {
        for d in 1..=3 {
            for t in enumerate_templates(&terms, d, DEFAULT_TEMPLATE_CAP).unwrap() {
                for term in t.terms() {
                    let var = Term::var(term.variable());
                    let top = term
                        .subterms()
                        .into_iter()
                        .filter_map(|s| t.node(s))
                        .min_by_key(|&q| t.forest.depth[q])
                        .unwrap();
                    let (qt, qz) = (t.node(&term).unwrap(), t.node(&var).unwrap());
                    assert!(t.forest.is_ancestor(top, qt) && t.forest.is_ancestor(top, qz));
                }
            }
        }
    }
}

fn min_neighbor(g: &Graph) -> Vec<usize> {
    (0..g.n())
        .map(|v| g.neighbors(v).iter().copied().min().unwrap_or(v))
        .collect()
}

fn max_neighbor(g: &Graph) -> Vec<usize> {
    (0..g.n())
        .map(|v| g.neighbors(v).iter().copied().max().unwrap_or(v))
        .collect()
}

fn scaffoldings(g: &Graph) -> Vec<Scaffolding> {
    let mut out = vec![dfs_forest(g, &vec![true; g.n()])];
    out.extend(scaffolding_system(g, 2).unwrap());
    out
}

/// The recognizer formula, the backtracking matcher and the forced matcher agree on every
/// assignment of the variables.
#[test]
fn recognizer_agrees_with_matcher() {
    let mut graphs = small_connected_graphs(5);
    for seed in 0..6 {
        graphs.push(random_graph(6, 2.0, seed));
    }
    let templates: Vec<(Vec<String>, Template)> = term_sets()
        .into_iter()
        .flat_map(|terms| {
            let vars: BTreeSet<String> = terms.iter().map(|t| t.variable().to_string()).collect();
            let vars: Vec<String> = vars.into_iter().collect();
            enumerate_templates(&terms, 3, DEFAULT_TEMPLATE_CAP)
                .unwrap()
                .into_iter()
                .map(move |t| (vars.clone(), t))
        })
        .collect();
    let sig = CounterSignature::new();
    let mut checked = 0usize;
    for gr in &graphs {
        let tuple = ITuple::empty(&[1]);
        for sc in scaffoldings(gr) {
            let mut interp = Interpretation::new(gr.n());
            interp.add_pred("in_f", sc.member.clone());
            interp.add_func("prt", sc.parent.clone());
            interp.add_func("f", min_neighbor(gr));
            interp.add_func("g", max_neighbor(gr));
            for (vars, t) in &templates {
                let tau = t.match_formula("in_f", "prt");
                let k = vars.len();
                for code in 0..gr.n().pow(k as u32) {
                    let mut env = BTreeMap::new();
                    let mut c = code;
                    for v in vars {
                        env.insert(v.clone(), c % gr.n());
                        c /= gr.n();
                    }
                    let want = matches_template(&interp, &sc, &env, t).unwrap();
                    let got = evaluate_naive(gr, &interp, &sig, &tuple, &tau, &env).unwrap();
                    let forced = forced_match_env(&interp, &sc, &env, t).unwrap();
                    assert_eq!(want, got, "formula vs matcher: {tau} at {env:?}");
                    assert_eq!(want, forced, "forced vs matcher at {env:?}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100_000, "only {checked} checks");
}

/// Every set of at most `s` vertices lies in a scaffolding of the system.
#[test]
fn scaffolding_systems_are_generic() {
    let mut graphs = small_connected_graphs(5);
    for seed in 0..12 {
        graphs.push(random_graph(6 + (seed as usize % 3), 2.5, 100 + seed));
    }
    for gr in &graphs {
        for s in 1..=2 {
            let system = scaffolding_system(gr, s).unwrap();
            assert!(system_is_generic(gr.n(), &system, s), "s={s} on {:?}", gr.edges());
            for sc in &system {
                sc.check(gr).unwrap();
            }
        }
    }
}
