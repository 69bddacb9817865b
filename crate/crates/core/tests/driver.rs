use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;

use sparsefo::corpus;
use sparsefo::dp::{brute_force, BRUTE_FORCE_CAP};
use sparsefo::driver::{
    bench, check_suite, default_cover, random_weights, solve_approx, ApproxOptions, BenchConfig,
    Family, Monotonicity, Suite,
};
use sparsefo::graph::{tuple_weight, Graph, WeightAssignment};
use sparsefo::logic::{evaluate_naive, parse_sentence, CounterSignature, Formula, Interpretation};
use sparsefo::sparsity::{load_cover, measure_genericity, Cover, Provenance};
use sparsefo::Error;

fn opt(g: &Graph, w: &WeightAssignment, phi: &Formula) -> i64 {
    let all: BTreeSet<usize> = (0..g.n()).collect();
    brute_force(g, w, phi, &all, BRUTE_FORCE_CAP).unwrap().value
}

fn meets(value: i64, delta: Ratio<u64>, opt: i64) -> bool {
    value as i128 * *delta.denom() as i128 >= opt as i128 * *delta.numer() as i128
}

fn options() -> ApproxOptions {
    ApproxOptions::default()
}

#[test]
fn small_covers_are_rejected_when_the_shroud_is_large() {
    let g = Graph::path(3);
    let phi = corpus::formulas()[0].parse().unwrap();
    let cover = load_cover("1 2 3\n0 1\n1 2\n0 2\n", &g).unwrap();
    assert_eq!(cover.verified_delta, Some(Ratio::new(2, 3)));
    let r = solve_approx(&g, &WeightAssignment::uniform(3, &[1], 1), &phi, Some(cover), 4, &options());
    assert_eq!(r.unwrap_err(), Error::CoverTooWeak { need: 3, have: 1 });
}

#[test]
fn whole_graph_cover_gives_the_optimum() {
    for f in corpus::formulas() {
        let phi = f.parse().unwrap();
        for (i, g) in corpus::graphs(4, 6, 7, 3).iter().enumerate() {
            let w = random_weights(g.n(), 0, 9, i as u64);
            let cover = Cover::whole_graph(g.n(), g.n());
            let r = solve_approx(g, &w, &phi, Some(cover), 4, &options()).unwrap();
            assert_eq!(r.value, opt(g, &w, &phi), "{} on {:?}", f.name, g.edges());
            assert_eq!(r.delta, Ratio::from_integer(1));
        }
    }
}

#[test]
fn default_cover_meets_the_guarantee() {
    let phi = corpus::formulas()[1].parse().unwrap();
    let g = Graph::path(4);
    let w = WeightAssignment::uniform(4, &[1], 1);
    let r = solve_approx(&g, &w, &phi, None, 4, &options()).unwrap();
    assert!(meets(r.value, r.delta, opt(&g, &w, &phi)));
    assert!(r.cover.s >= r.shroud_size);
}

fn satisfies(g: &Graph, phi: &Formula, r: &sparsefo::driver::SolveReport) -> bool {
    evaluate_naive(g, &Interpretation::new(g.n()), &CounterSignature::new(), &r.tuple, phi, &BTreeMap::new())
        .unwrap()
}

/// A sentence with a trivial shroud runs on coloring covers with several members.
#[test]
fn multi_member_covers() {
    let phi = corpus::local_formulas()[0].parse().unwrap();
    let mut multi = 0;
    for (i, g) in corpus::graphs(5, 20, 9, 77).iter().enumerate() {
        let w = random_weights(g.n(), 0, 9, i as u64);
        let r = solve_approx(g, &w, &phi, None, 4, &options()).unwrap();
        assert_eq!(r.shroud_size, 1);
        if r.cover.members.len() > 1 {
            multi += 1;
            assert_eq!(r.cover.provenance, Provenance::Coloring);
        }
        assert!(meets(r.value, r.delta, opt(g, &w, &phi)), "on {:?}", g.edges());
        assert_eq!(Some(r.value), r.element_values.iter().flatten().copied().max());
        assert_eq!(r.element_values[r.best_element], Some(r.value));
        assert_eq!(tuple_weight(&w, &r.tuple).unwrap(), r.value);
        assert!(satisfies(g, &phi, &r));
        assert_eq!(r.monotonicity, Monotonicity::SampledOk);
        let measured = measure_genericity(g.n(), &r.cover.members, 1);
        assert!(measured >= r.delta, "declared {} measured {measured}", r.delta);
    }
    assert!(multi > 5, "only {multi} instances used more than one member");
}

#[test]
fn monotonicity_is_reported() {
    let g = Graph::path(4);
    let w = WeightAssignment::uniform(4, &[1], 1);
    let matching = corpus::formulas()[3].parse().unwrap();
    let r = solve_approx(&g, &w, &matching, None, 4, &options()).unwrap();
    assert_eq!(r.monotonicity, Monotonicity::Violated);
    assert!(satisfies(&g, &matching, &r));
    let quiet = ApproxOptions {
        monotone_trials: 0,
        ..options()
    };
    let r = solve_approx(&g, &w, &matching, None, 4, &quiet).unwrap();
    assert_eq!(r.monotonicity, Monotonicity::Asserted);
}

#[test]
fn bad_inputs() {
    let g = Graph::path(3);
    let phi = corpus::formulas()[0].parse().unwrap();
    let mut neg = WeightAssignment::uniform(3, &[1], 1);
    neg.set(0, 1, -1);
    assert!(matches!(solve_approx(&g, &neg, &phi, None, 4, &options()), Err(Error::Invalid(_))));
    let two = parse_sentence("(forall x (implies (X 2 x) (X 1 x)))", &[1, 2]).unwrap();
    let w1 = WeightAssignment::uniform(3, &[1], 1);
    assert_eq!(solve_approx(&g, &w1, &two, None, 4, &options()).unwrap_err(), Error::UnknownIndex(2));
    let never = parse_sentence("(false)", &[1]).unwrap();
    assert_eq!(solve_approx(&g, &w1, &never, None, 4, &options()).unwrap_err(), Error::Infeasible);
}

#[test]
fn default_cover_falls_back_to_the_whole_graph() {
    let g = Graph::grid(3, 3);
    let c = default_cover(&g, 9, 4).unwrap();
    assert_eq!(c.provenance, Provenance::WholeGraph);
    let c = default_cover(&g, 2, 1).unwrap();
    assert_eq!(c.provenance, Provenance::WholeGraph);
    let c = default_cover(&Graph::path(8), 2, 4).unwrap();
    assert_eq!(c.provenance, Provenance::Coloring);
    assert!(measure_genericity(8, &c.members, 2) >= c.delta);
}

#[test]
fn bench_on_paths() {
    let phi = corpus::formulas()[0].parse().unwrap();
    let config = BenchConfig::new(Family::Path, (4..=8).collect(), 1);
    let table = bench(&config, &phi).unwrap();
    assert_eq!(table.rows.len(), 5);
    for row in &table.rows {
        assert_eq!(row.meets_guarantee(), Some(true));
    }
    let again = bench(&config, &phi).unwrap();
    assert_eq!(table.to_text(false), again.to_text(false));
    assert_eq!(table.to_csv(false), again.to_csv(false));
    assert!(table.to_csv(false).starts_with("family,n,m,opt"));
}

#[test]
fn bench_marks_missing_optima() {
    let phi = corpus::local_formulas()[0].parse().unwrap();
    let config = BenchConfig::new(Family::Cycle, vec![5, 20], 0);
    let table = bench(&config, &phi).unwrap();
    assert!(table.rows[0].opt.is_some());
    assert_eq!(table.rows[1].opt, None);
    let text = table.to_text(false);
    assert!(text.lines().last().unwrap().contains('—'), "{text}");
}

#[test]
fn families_round_trip() {
    for f in Family::ALL {
        assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        assert_eq!(f.generate(9, 4), f.generate(9, 4));
    }
    assert_eq!(Family::Grid.generate(9, 0).n(), 9);
    assert!("tree".parse::<Family>().is_err());
}

#[test]
fn check_suites_pass_on_tiny_graphs() {
    for suite in [Suite::Qelim, Suite::Dp, Suite::Exact] {
        let r = check_suite(suite, 3, 2, 5).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.cases > 0);
    }
}
