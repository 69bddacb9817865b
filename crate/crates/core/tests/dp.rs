use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use sparsefo::corpus;
use sparsefo::dp::{
    boundary_shroud, brute_force, dp_optimize, nice_decomposition, solve_exact, DpOptions,
    DpProblem, NiceNode, BRUTE_FORCE_CAP,
};
use sparsefo::driver::random_weights;
use sparsefo::graph::{random_graph, tuple_weight, Graph, WeightAssignment};
use sparsefo::logic::{evaluate_naive, parse_sentence, CounterSignature, Formula, ITuple, Interpretation};
use sparsefo::qelim::{card_atoms, compute_shroud, eliminate_all, ElimOptions, Shroud};
use sparsefo::sparsity::{separator_decomposition, validate_tree_decomposition, TreeDecomposition};
use sparsefo::Error;

fn is() -> Formula {
    corpus::formulas()[0].parse().unwrap()
}

fn d2() -> Formula {
    corpus::formulas()[1].parse().unwrap()
}

fn unit(n: usize) -> WeightAssignment {
    WeightAssignment::uniform(n, &[1], 1)
}

fn everything(n: usize) -> BTreeSet<usize> {
    (0..n).collect()
}

fn exact(g: &Graph, w: &WeightAssignment, phi: &Formula) -> sparsefo::Result<(ITuple, i64)> {
    solve_exact(g, w, phi, &ElimOptions::default(), &DpOptions::default())
        .map(|d| (d.solution.tuple, d.solution.value))
}

fn satisfies(g: &Graph, phi: &Formula, t: &ITuple) -> bool {
    evaluate_naive(g, &Interpretation::new(g.n()), &CounterSignature::new(), t, phi, &BTreeMap::new())
        .unwrap()
}

/// Exact solver and brute force agree on value and witness; the witness satisfies `phi`.
fn assert_agree(g: &Graph, w: &WeightAssignment, phi: &Formula) {
    let want = brute_force(g, w, phi, &everything(g.n()), BRUTE_FORCE_CAP);
    let got = exact(g, w, phi);
    match (want, got) {
        (Ok(b), Ok((t, v))) => {
            assert_eq!(b.value, v, "value on {:?}", g.edges());
            assert_eq!(b.tuple, t, "tie-break on {:?}", g.edges());
            assert!(satisfies(g, phi, &t));
            assert_eq!(tuple_weight(w, &t).unwrap(), v);
        }
        (Err(Error::Infeasible), Err(Error::Infeasible)) => {}
        (a, b) => panic!("mismatch on {:?}: {a:?} vs {b:?}", g.edges()),
    }
}

#[test]
fn spec_examples() {
    let p4 = Graph::path(4);
    assert_eq!(exact(&p4, &unit(4), &is()).unwrap().1, 2);
    let mut w = unit(4);
    w.set(1, 1, 5);
    let (t, v) = exact(&p4, &w, &is()).unwrap();
    assert_eq!(v, 6);
    assert_eq!(t, ITuple::from_masks(&[1], &[0, 1, 0, 1]));
    assert_eq!(exact(&Graph::cycle(5), &unit(5), &is()).unwrap().1, 2);
    assert_eq!(exact(&Graph::path(3), &unit(3), &d2()).unwrap().1, 1);

    let single = Graph::empty(1);
    let mut neg = unit(1);
    neg.set(0, 1, -3);
    let (t, v) = exact(&single, &neg, &is()).unwrap();
    assert_eq!((t, v), (ITuple::empty(&[1]), 0));

    let p3 = Graph::path(3);
    let b = brute_force(&p3, &unit(3), &is(), &everything(3), BRUTE_FORCE_CAP).unwrap();
    assert_eq!(b.tuple, ITuple::from_masks(&[1], &[1, 0, 1]));
    assert_eq!(b.value, 2);
    let never = parse_sentence("(false)", &[1]).unwrap();
    assert_eq!(brute_force(&p3, &unit(3), &never, &everything(3), 16), Err(Error::Infeasible));
    assert_eq!(exact(&p3, &unit(3), &never), Err(Error::Infeasible));
    let none = brute_force(&p3, &unit(3), &is(), &BTreeSet::new(), 16).unwrap();
    assert_eq!((none.tuple, none.value), (ITuple::empty(&[1]), 0));
}

#[test]
fn brute_force_cap_is_enforced() {
    let g = Graph::path(10);
    assert!(matches!(
        brute_force(&g, &unit(10), &is(), &everything(10), 8),
        Err(Error::ResourceLimit(_))
    ));
}

#[test]
fn state_cap_is_enforced() {
    let g = Graph::cycle(6);
    let r = solve_exact(&g, &unit(6), &is(), &ElimOptions::default(), &DpOptions { state_cap: 1 });
    assert!(matches!(r, Err(Error::ResourceLimit(_))));
}

#[test]
fn exact_matches_brute_force_on_the_corpus() {
    let graphs = corpus::graphs(4, 8, 7, 21);
    for f in corpus::formulas().iter().chain(&corpus::local_formulas()) {
        let phi = f.parse().unwrap();
        for (i, g) in graphs.iter().enumerate() {
            assert_agree(g, &unit(g.n()), &phi);
            assert_agree(g, &random_weights(g.n(), 0, 9, i as u64), &phi);
        }
    }
}

#[test]
fn negative_weights() {
    let mut count = 0;
    for f in corpus::formulas() {
        let phi = f.parse().unwrap();
        for (i, g) in corpus::graphs(0, 6, 7, 33).iter().enumerate() {
            assert_agree(g, &random_weights(g.n(), -6, 6, 900 + i as u64), &phi);
            count += 1;
        }
    }
    assert!(count >= 10);
}

#[test]
fn restricted_vertex_sets_match_brute_force() {
    for (i, g) in corpus::graphs(0, 6, 7, 4).iter().enumerate() {
        for f in corpus::formulas() {
            let phi = f.parse().unwrap();
            let e = eliminate_all(g, &phi).unwrap();
            let td = separator_decomposition(g);
            let allowed: BTreeSet<usize> = (0..g.n()).filter(|v| (v + i) % 3 != 0).collect();
            let w = random_weights(g.n(), 0, 9, i as u64);
            let got = dp_optimize(
                &DpProblem {
                    graph: g,
                    td: &td,
                    allowed: &allowed,
                    weights: &w,
                    sig: &e.sig,
                    formula: &e.formula,
                    interp: &e.interp,
                },
                &DpOptions::default(),
            );
            let want = brute_force(g, &w, &phi, &allowed, BRUTE_FORCE_CAP);
            match (want, got) {
                (Ok(b), Ok(d)) => assert_eq!(b, d.solution),
                (Err(Error::Infeasible), Err(Error::Infeasible)) => {}
                (a, b) => panic!("{}: {a:?} vs {b:?}", f.name),
            }
        }
    }
}

#[test]
fn invalid_decompositions_are_rejected() {
    let g = Graph::path(3);
    let e = eliminate_all(&g, &is()).unwrap();
    let td = TreeDecomposition::single(vec![0, 1]);
    let r = dp_optimize(
        &DpProblem {
            graph: &g,
            td: &td,
            allowed: &everything(3),
            weights: &unit(3),
            sig: &e.sig,
            formula: &e.formula,
            interp: &e.interp,
        },
        &DpOptions::default(),
    );
    assert!(matches!(r, Err(Error::Decomposition(_))));
}

/// Vertices introduced below each node of a nice decomposition.
fn processed_sets(nodes: &[NiceNode]) -> Vec<BTreeSet<usize>> {
    let mut out: Vec<BTreeSet<usize>> = Vec::with_capacity(nodes.len());
    for node in nodes {
        let s = match *node {
            NiceNode::Leaf => BTreeSet::new(),
            NiceNode::Introduce { vertex, child } => {
                let mut s = out[child].clone();
                s.insert(vertex);
                s
            }
            NiceNode::Forget { child, .. } => out[child].clone(),
            NiceNode::Join { left, right } => out[left].union(&out[right]).copied().collect(),
        };
        out.push(s);
    }
    out
}

#[test]
fn nice_decompositions_are_well_formed() {
    for g in corpus::graphs(5, 10, 9, 2) {
        let td = separator_decomposition(&g);
        validate_tree_decomposition(&g, &td).unwrap();
        let nice = nice_decomposition(&td);
        assert!(nice.bags[nice.root].is_empty());
        assert_eq!(nice.root, nice.nodes.len() - 1);
        let mut forgotten = vec![0usize; g.n()];
        for (id, node) in nice.nodes.iter().enumerate() {
            let bag = &nice.bags[id];
            assert!(bag.windows(2).all(|w| w[0] < w[1]));
            match *node {
                NiceNode::Leaf => assert!(bag.is_empty()),
                NiceNode::Introduce { vertex, child } => {
                    assert!(child < id);
                    let mut expect = nice.bags[child].clone();
                    assert!(!expect.contains(&vertex));
                    expect.push(vertex);
                    expect.sort_unstable();
                    assert_eq!(&expect, bag);
                }
                NiceNode::Forget { vertex, child } => {
                    assert!(child < id);
                    let mut expect = bag.clone();
                    expect.push(vertex);
                    expect.sort_unstable();
                    assert_eq!(expect, nice.bags[child]);
                    forgotten[vertex] += 1;
                }
                NiceNode::Join { left, right } => {
                    assert!(left < id && right < id);
                    assert_eq!(&nice.bags[left], bag);
                    assert_eq!(&nice.bags[right], bag);
                }
            }
        }
        assert!(forgotten.iter().all(|&c| c == 1), "{forgotten:?}");
        // Every edge meets some bag.
        for (u, v) in g.edges() {
            assert!(nice.bags.iter().any(|b| b.contains(&u) && b.contains(&v)));
        }
    }
}

#[test]
fn boundary_shroud_examples() {
    let trivial = Shroud::trivial(3);
    let bag = BTreeSet::from([1, 2]);
    assert_eq!(boundary_shroud(&trivial, &bag, &BTreeSet::from([0, 1, 2])), bag);
    assert!(boundary_shroud(&trivial, &BTreeSet::new(), &bag).is_empty());
    let parent = Shroud {
        sets: vec![BTreeSet::from([0]), BTreeSet::from([0, 1]), BTreeSet::from([1, 2])],
        levels: 1,
    };
    assert_eq!(
        boundary_shroud(&parent, &BTreeSet::from([1]), &BTreeSet::from([1, 2])),
        BTreeSet::from([1])
    );
}

/// Tables never hold more keys than the counting bound allows for the largest boundary.
#[test]
fn table_sizes_respect_the_key_bound() {
    for f in corpus::formulas() {
        let phi = f.parse().unwrap();
        for g in corpus::graphs(4, 6, 7, 8) {
            let e = eliminate_all(&g, &phi).unwrap();
            let h = compute_shroud(&e.sig, &e.interp).unwrap();
            let td = separator_decomposition(&g);
            let nice = nice_decomposition(&td);
            let processed = processed_sets(&nice.nodes);
            let widest = nice
                .bags
                .iter()
                .zip(&processed)
                .map(|(bag, p)| {
                    let bag: BTreeSet<usize> = bag.iter().copied().collect();
                    boundary_shroud(&h, &bag, p).len()
                })
                .max()
                .unwrap_or(0);
            let d = solve_exact(&g, &unit(g.n()), &phi, &ElimOptions::default(), &DpOptions::default())
                .unwrap();
            let m = e.cap() as f64;
            let a = card_atoms(&e.formula).len() as f64;
            let l = e.sig.len() as f64;
            let s = widest as f64;
            let log_bound = (a + l * s) * (m + 1.0).log2() + s;
            assert!((d.max_states as f64).log2() <= log_bound + 1e-9, "{}: {} states", f.name, d.max_states);
        }
    }
}

fn small_graph() -> impl Strategy<Value = Graph> {
    (2usize..=6, 0u64..1000, 1usize..=5).prop_map(|(n, seed, deg)| random_graph(n, deg as f64 * 0.5, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_equals_brute_force(g in small_graph(), seed in 0u64..1000, which in 0usize..4) {
        let phi = corpus::formulas()[which].parse().unwrap();
        assert_agree(&g, &random_weights(g.n(), -4, 9, seed), &phi);
    }

    /// Raising one weight never lowers the optimum when weights are nonnegative.
    #[test]
    fn value_is_monotone_in_weights(g in small_graph(), seed in 0u64..1000, bump in 1i64..5, v in 0usize..6) {
        let phi = is();
        let w = random_weights(g.n(), 0, 6, seed);
        let before = exact(&g, &w, &phi).unwrap().1;
        let mut up = w.clone();
        let v = v % g.n();
        up.set(v, 1, w.get(v, 1) + bump);
        let after = exact(&g, &up, &phi).unwrap().1;
        prop_assert!(after >= before);
    }
}
