//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test -p sparsefo-cli --test acceptance` (add `--release` for speed).

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparsefo::corpus::{self, CorpusFormula};
use sparsefo::dp::{
    brute_force, dp_optimize, solve_exact, DpOptions, DpProblem, BRUTE_FORCE_CAP,
};
use sparsefo::driver::{default_cover, qelim_disagreement, random_weights, solve_approx, ApproxOptions};
use sparsefo::graph::{random_graph, small_connected_graphs, tuple_weight, Graph, WeightAssignment};
use sparsefo::logic::{
    evaluate_counters, evaluate_naive, CounterSignature, Formula, ITuple, Interpretation, Term,
};
use sparsefo::qelim::{
    compute_shroud, eliminate_all, enumerate_templates, matches_template, subterm_closure,
    ElimOptions, Elimination, Shroud, Template, DEFAULT_TEMPLATE_CAP,
};
use sparsefo::sparsity::{
    dfs_forest, generic_cover_from_coloring, measure_genericity, scaffolding_system,
    separator_decomposition, system_is_generic, treedepth_coloring, validate_tree_decomposition,
    Scaffolding,
};
use sparsefo::Error;

const SEED: u64 = 2024;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_graphs() -> Vec<Graph> {
    corpus::graphs(5, 50, 7, SEED)
}

fn parsed(fs: &[CorpusFormula]) -> Vec<(&'static str, Formula)> {
    fs.iter().map(|f| (f.name, f.parse().unwrap())).collect()
}

fn everything(n: usize) -> BTreeSet<usize> {
    (0..n).collect()
}

fn satisfies(g: &Graph, phi: &Formula, t: &ITuple) -> bool {
    evaluate_naive(g, &Interpretation::new(g.n()), &CounterSignature::new(), t, phi, &BTreeMap::new())
        .unwrap()
}

fn qelim_equivalence() -> Outcome {
    let graphs = corpus_graphs();
    let mut pairs = 0;
    for (name, phi) in parsed(&corpus::formulas()) {
        for g in &graphs {
            if let Some(t) = qelim_disagreement(g, &phi).map_err(|e| format!("{name}: {e}"))? {
                return Err(format!("{name} disagrees at {t:?} on {:?}", g.edges()));
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} graph/formula pairs, all tuples"))
}

fn dp_oracle() -> Outcome {
    let graphs = corpus_graphs();
    let mut runs = 0;
    for (name, phi) in parsed(&corpus::formulas()) {
        for (i, g) in graphs.iter().enumerate() {
            let e = eliminate_all(g, &phi).map_err(|e| format!("{name}: {e}"))?;
            let td = separator_decomposition(g);
            let all = everything(g.n());
            let weightings = [
                WeightAssignment::uniform(g.n(), &[1], 1),
                random_weights(g.n(), 0, 9, SEED + i as u64),
            ];
            for w in &weightings {
                let problem = DpProblem {
                    graph: g,
                    td: &td,
                    allowed: &all,
                    weights: w,
                    sig: &e.sig,
                    formula: &e.formula,
                    interp: &e.interp,
                };
                let got = dp_optimize(&problem, &DpOptions::default());
                let want = brute_force(g, w, &phi, &all, BRUTE_FORCE_CAP);
                match (want, got) {
                    (Ok(b), Ok(d)) => {
                        ensure(b.value == d.solution.value, || {
                            format!("{name}: brute {} dp {} on {:?}", b.value, d.solution.value, g.edges())
                        })?;
                        ensure(satisfies(g, &phi, &d.solution.tuple), || {
                            format!("{name}: witness fails on {:?}", g.edges())
                        })?;
                        ensure(tuple_weight(w, &d.solution.tuple).unwrap() == d.solution.value, || {
                            format!("{name}: witness weight differs")
                        })?;
                    }
                    (Err(Error::Infeasible), Err(Error::Infeasible)) => {}
                    (a, b) => return Err(format!("{name}: {a:?} vs {b:?}")),
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} instances"))
}

fn exact_solver() -> Outcome {
    let graphs = corpus_graphs();
    let (mut runs, mut negative) = (0, 0);
    for (name, phi) in parsed(&corpus::formulas()) {
        for (i, g) in graphs.iter().enumerate() {
            for w in [
                WeightAssignment::uniform(g.n(), &[1], 1),
                random_weights(g.n(), -5, 5, SEED * 7 + i as u64),
            ] {
                if !w.nonneg() {
                    negative += 1;
                }
                let all = everything(g.n());
                let want = brute_force(g, &w, &phi, &all, BRUTE_FORCE_CAP);
                let got = solve_exact(g, &w, &phi, &ElimOptions::default(), &DpOptions::default());
                match (want, got) {
                    (Ok(b), Ok(d)) => ensure(b.value == d.solution.value, || {
                        format!("{name}: brute {} exact {} on {:?}", b.value, d.solution.value, g.edges())
                    })?,
                    (Err(Error::Infeasible), Err(Error::Infeasible)) => {}
                    (a, b) => return Err(format!("{name}: {a:?} vs {b:?}")),
                }
                runs += 1;
            }
        }
    }
    ensure(negative >= 10, || format!("only {negative} negative-weight instances"))?;
    Ok(format!("{runs} instances, {negative} with negative weights"))
}

fn approximation() -> Outcome {
    let graphs = corpus_graphs();
    let monotone: Vec<CorpusFormula> = corpus::formulas()
        .into_iter()
        .chain(corpus::local_formulas())
        .filter(|f| f.monotone)
        .collect();
    let (mut runs, mut multi, mut worst) = (0, 0, Ratio::from_integer(1u64));
    for (name, phi) in parsed(&monotone) {
        for (i, g) in graphs.iter().enumerate() {
            for w in [
                WeightAssignment::uniform(g.n(), &[1], 1),
                random_weights(g.n(), 0, 9, SEED * 13 + i as u64),
            ] {
                let opt = brute_force(g, &w, &phi, &everything(g.n()), BRUTE_FORCE_CAP)
                    .map_err(|e| format!("{name}: oracle {e}"))?
                    .value;
                let r = solve_approx(g, &w, &phi, None, 4, &ApproxOptions::default())
                    .map_err(|e| format!("{name}: {e} on {:?}", g.edges()))?;
                let lhs = r.value as i128 * *r.delta.denom() as i128;
                let rhs = opt as i128 * *r.delta.numer() as i128;
                ensure(lhs >= rhs, || {
                    format!("{name}: value {} < {} * {opt} on {:?}", r.value, r.delta, g.edges())
                })?;
                ensure(satisfies(g, &phi, &r.tuple), || format!("{name}: witness fails"))?;
                if r.cover.members.len() > 1 {
                    multi += 1;
                }
                worst = worst.min(r.delta);
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} instances, {multi} on multi-member covers, smallest delta {worst}"))
}

fn set_of(t: &ITuple) -> BTreeSet<usize> {
    t.sets.get(&1).cloned().unwrap_or_default()
}

fn tuple_of(n: usize, set: &BTreeSet<usize>) -> ITuple {
    let masks: Vec<u32> = (0..n).map(|v| set.contains(&v) as u32).collect();
    ITuple::from_masks(&[1], &masks)
}

fn locality_holds(g: &Graph, e: &Elimination, h: &Shroud, x: &BTreeSet<usize>, a: &ITuple, b: &ITuple) -> bool {
    let hx = h.image(x.iter());
    let ca = evaluate_counters(&e.interp, &e.sig, a).unwrap();
    let cb = evaluate_counters(&e.interp, &e.sig, b).unwrap();
    ca.iter()
        .zip(&cb)
        .all(|(ra, rb)| (0..g.n()).filter(|v| !hx.contains(v)).all(|v| ra[v] == rb[v]))
}

fn shroud_locality() -> Outcome {
    let phis: Vec<Formula> = parsed(&corpus::formulas())
        .into_iter()
        .chain(parsed(&corpus::local_formulas()))
        .map(|(_, f)| f)
        .collect();
    let mut checks = 0usize;
    for phi in &phis {
        for g in small_connected_graphs(4) {
            let e = eliminate_all(&g, phi).map_err(|e| e.to_string())?;
            let h = compute_shroud(&e.sig, &e.interp).map_err(|e| e.to_string())?;
            let tuples = ITuple::enumerate(&[1], &(0..g.n()).collect::<Vec<_>>());
            let tables: Vec<_> = tuples.iter().map(|t| evaluate_counters(&e.interp, &e.sig, t).unwrap()).collect();
            for xm in 0u32..(1 << g.n()) {
                let x: BTreeSet<usize> = (0..g.n()).filter(|v| xm >> v & 1 == 1).collect();
                let hx = h.image(x.iter());
                for (i, a) in tuples.iter().enumerate() {
                    for (j, b) in tuples.iter().enumerate() {
                        if set_of(a).difference(&x).ne(set_of(b).difference(&x)) {
                            continue;
                        }
                        let same = tables[i].iter().zip(&tables[j]).all(|(ra, rb)| {
                            (0..g.n()).filter(|v| !hx.contains(v)).all(|v| ra[v] == rb[v])
                        });
                        ensure(same, || format!("exhaustive violation X={x:?} on {:?}", g.edges()))?;
                        checks += 1;
                    }
                }
            }
        }
    }

    // Eliminations are cached over a fixed pool of graphs.
    let pool: Vec<Graph> = (0..24).map(|i| random_graph(2 + i % 6, [1.0, 2.0, 3.0][i % 3], SEED + i as u64)).collect();
    let mut cache: BTreeMap<(usize, usize), (Elimination, Shroud)> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..1000 {
        let (gi, pi) = (rng.gen_range(0..pool.len()), rng.gen_range(0..phis.len()));
        let g = &pool[gi];
        if !cache.contains_key(&(gi, pi)) {
            let e = eliminate_all(g, &phis[pi]).map_err(|e| e.to_string())?;
            let h = compute_shroud(&e.sig, &e.interp).map_err(|e| e.to_string())?;
            cache.insert((gi, pi), (e, h));
        }
        let (e, h) = &cache[&(gi, pi)];
        let n = g.n();
        let x: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        let base: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let mut other: BTreeSet<usize> = base.difference(&x).copied().collect();
        other.extend(x.iter().filter(|_| rng.gen_bool(0.5)));
        ensure(locality_holds(g, e, h, &x, &tuple_of(n, &base), &tuple_of(n, &other)), || {
            format!("sampled violation X={x:?} on {:?}", g.edges())
        })?;
    }
    Ok(format!("{checks} exhaustive pairs, 1000 sampled trials"))
}

/// Closed term sets over at most three variables.
fn term_sets() -> Vec<BTreeSet<Term>> {
    let (x, y, z) = (Term::var("x"), Term::var("y"), Term::var("z"));
    let f = |t: Term| Term::apply("f", t);
    let g = |t: Term| Term::apply("g", t);
    let raw = vec![
        vec![],
        vec![x.clone()],
        vec![x.clone(), y.clone()],
        vec![x.clone(), y.clone(), z.clone()],
        vec![f(x.clone())],
        vec![f(x.clone()), y.clone()],
        vec![f(f(x.clone()))],
        vec![f(x.clone()), g(x.clone())],
        vec![f(x.clone()), f(y.clone()), z],
    ];
    raw.iter().map(|ts| subterm_closure(ts.iter())).collect()
}

fn scaffolding_layer() -> Outcome {
    let mut graphs = small_connected_graphs(6);
    for i in 0..60u64 {
        graphs.push(random_graph(7 + (i % 2) as usize, [1.5, 2.0, 3.0][i as usize % 3], SEED + i));
    }
    graphs.push(Graph::grid(2, 4));
    graphs.push(Graph::cycle(8));
    let mut systems = 0;
    for g in &graphs {
        for s in 1..=2 {
            let system = scaffolding_system(g, s).map_err(|e| e.to_string())?;
            ensure(system_is_generic(g.n(), &system, s), || format!("s={s} not generic on {:?}", g.edges()))?;
            for sc in &system {
                sc.check(g).map_err(|e| format!("bad scaffolding on {:?}: {e}", g.edges()))?;
            }
            systems += 1;
        }
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
    let mut checked = 0usize;
    let sig = CounterSignature::new();
    let targets = [Graph::path(4), Graph::star(3), Graph::cycle(5), random_graph(5, 2.0, SEED)];
    for g in &targets {
        let mut scs: Vec<Scaffolding> = vec![dfs_forest(g, &vec![true; g.n()])];
        scs.extend(scaffolding_system(g, 2).map_err(|e| e.to_string())?);
        let lo: Vec<usize> = (0..g.n()).map(|v| g.neighbors(v).iter().copied().min().unwrap_or(v)).collect();
        let hi: Vec<usize> = (0..g.n()).map(|v| g.neighbors(v).iter().copied().max().unwrap_or(v)).collect();
        for sc in scs {
            let mut interp = Interpretation::new(g.n());
            interp.add_pred("in_f", sc.member.clone());
            interp.add_func("prt", sc.parent.clone());
            interp.add_func("f", lo.clone());
            interp.add_func("g", hi.clone());
            for (vars, t) in &templates {
                let tau = t.match_formula("in_f", "prt");
                for code in 0..g.n().pow(vars.len() as u32) {
                    let mut env = BTreeMap::new();
                    let mut c = code;
                    for v in vars {
                        env.insert(v.clone(), c % g.n());
                        c /= g.n();
                    }
                    let want = matches_template(&interp, &sc, &env, t).map_err(|e| e.to_string())?;
                    let got = evaluate_naive(g, &interp, &sig, &ITuple::empty(&[1]), &tau, &env)
                        .map_err(|e| e.to_string())?;
                    ensure(want == got, || format!("recognizer differs at {env:?}: {tau}"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{systems} scaffolding systems, {} templates, {checked} assignments", templates.len()))
}

fn cover_validity() -> Outcome {
    let mut graphs = corpus_graphs();
    graphs.extend([Graph::grid(3, 3), Graph::path(10), Graph::cycle(9)]);
    let (mut covers, mut decomps) = (0, 0);
    for g in &graphs {
        for s in 1..=3 {
            let c = default_cover(g, s, 4).map_err(|e| e.to_string())?;
            let measured = measure_genericity(g.n(), &c.members, s);
            ensure(measured >= c.delta, || {
                format!("default s={s}: declared {} measured {measured} on {:?}", c.delta, g.edges())
            })?;
            covers += 1;
            if let Ok(coloring) = treedepth_coloring(g, s, g.n()) {
                if let Ok(c) = generic_cover_from_coloring(g.n(), &coloring, s) {
                    let measured = measure_genericity(g.n(), &c.members, s);
                    ensure(measured >= c.delta, || {
                        format!("coloring s={s}: declared {} measured {measured} on {:?}", c.delta, g.edges())
                    })?;
                    covers += 1;
                }
            }
        }
        let td = separator_decomposition(g);
        validate_tree_decomposition(g, &td).map_err(|v| format!("{v:?} on {:?}", g.edges()))?;
        decomps += 1;
    }
    Ok(format!("{covers} covers, {decomps} decompositions"))
}

const BIN: &str = env!("CARGO_BIN_EXE_sparsefo");

fn run_twice(args: &[&str]) -> Result<(), String> {
    let go = || Command::new(BIN).args(args).output().map_err(|e| e.to_string());
    let (a, b) = (go()?, go()?);
    ensure(a.status.code() == b.status.code() && a.stdout == b.stdout, || format!("outputs differ for {args:?}"))?;
    ensure(a.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&a.stderr))
    })
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write = |name: &str, text: String| -> Result<String, String> {
        let p = dir.path().join(name);
        std::fs::write(&p, text).map_err(|e| e.to_string())?;
        Ok(p.to_string_lossy().into_owned())
    };
    let g = random_graph(8, 2.5, SEED);
    let graph = write("g.txt", g.to_text())?;
    let weights = write("w.txt", random_weights(8, 0, 9, SEED).to_text())?;
    let mut runs = 0;
    for f in corpus::formulas().iter().chain(&corpus::local_formulas()) {
        let formula = write("phi.fo", f.text.to_string())?;
        let inst = ["--graph", graph.as_str(), "--formula", formula.as_str(), "--weights", weights.as_str()];
        for cmd in ["solve-exact", "oracle"] {
            run_twice(&[&[cmd][..], &inst].concat())?;
        }
        run_twice(&["eliminate", "--graph", &graph, "--formula", &formula])?;
        runs += 3;
        if f.monotone {
            run_twice(&[&["solve-approx"][..], &inst, &["--seed", "5"]].concat())?;
            runs += 1;
        }
    }
    for family in ["path", "cycle", "grid", "random-planarish", "bounded-degree-random"] {
        run_twice(&["bench", "--family", family, "--sizes", "4..8", "--seed", "3"])?;
        run_twice(&["bench", "--family", family, "--sizes", "4,6", "--seed", "3", "--csv", "--corpus", "non-isolated"])?;
        runs += 2;
    }
    run_twice(&["cover", "--graph", &graph, "--s", "2"])?;
    Ok(format!("{} commands run twice", runs + 1))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("qelim equivalence", qelim_equivalence),
        ("dp oracle equality", dp_oracle),
        ("exact solver", exact_solver),
        ("approximation guarantee", approximation),
        ("shroud locality", shroud_locality),
        ("scaffolding and templates", scaffolding_layer),
        ("cover validity", cover_validity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({detail}; {secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({detail}; {secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
