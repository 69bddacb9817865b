//! Standard sentences and test graphs shared by the test suites, the `check` command and
//! the benchmark.

use crate::error::Result;
use crate::graph::{random_graph, small_connected_graphs, Graph};
use crate::logic::{parse_sentence, Formula};

pub const INDEPENDENT_SET: &str =
    "(forall x (forall y (implies (and (X 1 x) (X 1 y)) (not (E x y)))))";

pub const DISTANCE2_INDEPENDENT_SET: &str = "(forall x (forall y (implies \
     (and (X 1 x) (X 1 y) (not (eq x y))) \
     (and (not (E x y)) (not (exists z (and (E x z) (E y z))))))))";

/// Every chosen vertex has an unchosen neighbor.
pub const UNCHOSEN_NEIGHBOR: &str =
    "(forall x (implies (X 1 x) (exists y (and (E x y) (not (X 1 y))))))";

/// The chosen vertices induce a perfect matching.
pub const INDUCED_MATCHING: &str = "(and \
     (forall x (implies (X 1 x) (exists y (and (X 1 y) (E x y))))) \
     (forall x (forall y (forall z (implies \
        (and (X 1 x) (X 1 y) (X 1 z) (E x y) (E x z)) (eq y z))))))";

/// Every chosen vertex has a neighbor. Its compiled form needs no counters.
pub const NON_ISOLATED: &str = "(forall x (implies (X 1 x) (exists y (E x y))))";

#[derive(Debug, Clone)]
pub struct CorpusFormula {
    pub name: &'static str,
    pub text: &'static str,
    /// Closed under taking subsets of the chosen sets.
    pub monotone: bool,
}

impl CorpusFormula {
    pub fn parse(&self) -> Result<Formula> {
        parse_sentence(self.text, &[1])
    }
}

pub fn formulas() -> Vec<CorpusFormula> {
    vec![
        CorpusFormula {
            name: "independent-set",
            text: INDEPENDENT_SET,
            monotone: true,
        },
        CorpusFormula {
            name: "distance-2-independent-set",
            text: DISTANCE2_INDEPENDENT_SET,
            monotone: true,
        },
        CorpusFormula {
            name: "unchosen-neighbor",
            text: UNCHOSEN_NEIGHBOR,
            monotone: true,
        },
        CorpusFormula {
            name: "induced-matching",
            text: INDUCED_MATCHING,
            monotone: false,
        },
    ]
}

/// Monotone sentences outside the main corpus whose compiled forms have small shrouds, so
/// that covers with more than one member get exercised.
pub fn local_formulas() -> Vec<CorpusFormula> {
    vec![CorpusFormula {
        name: "non-isolated",
        text: NON_ISOLATED,
        monotone: true,
    }]
}

/// Every connected graph with at most `max_connected` vertices, followed by `random` seeded
/// random graphs with up to `random_max_n` vertices and average degree at most 3.
pub fn graphs(max_connected: usize, random: usize, random_max_n: usize, seed: u64) -> Vec<Graph> {
    let mut out = small_connected_graphs(max_connected);
    for i in 0..random {
        let n = random_max_n.saturating_sub(i % 4).max(1);
        let avg = [1.0, 1.5, 2.0, 2.5, 3.0][i % 5];
        out.push(random_graph(n, avg, seed.wrapping_add(i as u64)));
    }
    out
}
