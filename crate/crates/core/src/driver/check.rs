use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus;
use crate::dp::{brute_force, solve_exact, DpOptions, BRUTE_FORCE_CAP};
use crate::error::{Error, Result};
use crate::graph::{tuple_weight, Graph, WeightAssignment};
use crate::logic::{evaluate_naive, CounterSignature, Formula, ITuple, Interpretation};
use crate::qelim::{eliminate_all, ElimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// The sentence and its compiled form agree on every tuple.
    Qelim,
    /// The exact solver matches brute force, with unit and seeded positive weights.
    Dp,
    /// As `Dp`, with weights that may be negative.
    Exact,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Qelim => "qelim",
            Suite::Dp => "dp",
            Suite::Exact => "exact",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        [Suite::Qelim, Suite::Dp, Suite::Exact]
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub suite: Suite,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Weights in `lo..=hi` for every vertex and the single index 1.
pub fn random_weights(n: usize, lo: i64, hi: i64, seed: u64) -> WeightAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = WeightAssignment::zero(n, &[1]);
    for v in 0..n {
        w.set(v, 1, rng.gen_range(lo..=hi));
    }
    w
}

/// `Ok(None)` when the compiled sentence agrees with `phi` on every tuple over `{1}`.
pub fn qelim_disagreement(g: &Graph, phi: &Formula) -> Result<Option<ITuple>> {
    let e = eliminate_all(g, phi)?;
    let plain = Interpretation::new(g.n());
    let empty_sig = CounterSignature::new();
    let env = BTreeMap::new();
    let vs: Vec<usize> = (0..g.n()).collect();
    for t in ITuple::enumerate(&[1], &vs) {
        let want = evaluate_naive(g, &plain, &empty_sig, &t, phi, &env)?;
        let got = evaluate_naive(g, &e.interp, &e.sig, &t, &e.formula, &env)?;
        if want != got {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Compares the exact solver with brute force on one instance; `Some` describes a mismatch.
pub fn exact_mismatch(g: &Graph, w: &WeightAssignment, phi: &Formula) -> Result<Option<String>> {
    let all: BTreeSet<usize> = (0..g.n()).collect();
    let want = brute_force(g, w, phi, &all, BRUTE_FORCE_CAP);
    let got = solve_exact(g, w, phi, &ElimOptions::default(), &DpOptions::default());
    match (want, got) {
        (Err(Error::Infeasible), Err(Error::Infeasible)) => Ok(None),
        (Ok(a), Ok(b)) => {
            let env = BTreeMap::new();
            let plain = Interpretation::new(g.n());
            let sat = evaluate_naive(
                g,
                &plain,
                &CounterSignature::new(),
                &b.solution.tuple,
                phi,
                &env,
            )?;
            let weight = tuple_weight(w, &b.solution.tuple)?;
            if a.value != b.solution.value || weight != b.solution.value || !sat {
                Ok(Some(format!(
                    "brute force {} vs dp {} (witness weight {weight}, satisfies {sat})",
                    a.value, b.solution.value
                )))
            } else {
                Ok(None)
            }
        }
        (Err(e), _) | (_, Err(e)) if !matches!(e, Error::Infeasible) => Err(e),
        (a, b) => Ok(Some(format!(
            "feasibility differs: brute force {:?}, dp {:?}",
            a.map(|s| s.value),
            b.map(|s| s.solution.value)
        ))),
    }
}

fn describe(g: &Graph) -> String {
    format!("n={} edges={:?}", g.n(), g.edges())
}

/// Runs a suite over the corpus sentences, every connected graph with at most `max_n`
/// vertices, and `random` seeded random graphs with at most `max_n` vertices.
pub fn check_suite(suite: Suite, max_n: usize, random: usize, seed: u64) -> Result<CheckReport> {
    let graphs = corpus::graphs(max_n, random, max_n, seed);
    let mut report = CheckReport {
        suite,
        cases: 0,
        failures: Vec::new(),
    };
    for f in corpus::formulas() {
        let phi = f.parse()?;
        for (gi, g) in graphs.iter().enumerate() {
            let weights: Vec<WeightAssignment> = match suite {
                Suite::Qelim => Vec::new(),
                Suite::Dp => vec![
                    WeightAssignment::uniform(g.n(), &[1], 1),
                    random_weights(g.n(), 0, 9, seed ^ gi as u64),
                ],
                Suite::Exact => vec![random_weights(g.n(), -5, 5, seed ^ gi as u64)],
            };
            if suite == Suite::Qelim {
                report.cases += 1;
                if let Some(t) = qelim_disagreement(g, &phi)? {
                    report.failures.push(format!(
                        "{}: {}: disagreement on {}",
                        f.name,
                        describe(g),
                        t.to_string().trim_end()
                    ));
                }
            }
            for w in weights {
                report.cases += 1;
                if let Some(msg) = exact_mismatch(g, &w, &phi)? {
                    report
                        .failures
                        .push(format!("{}: {}: {msg}", f.name, describe(g)));
                }
            }
        }
    }
    Ok(report)
}
