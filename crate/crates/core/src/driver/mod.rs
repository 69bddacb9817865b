//! The cover-based approximation and the benchmark harness.

mod bench;
mod check;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use num_rational::Ratio;

pub use bench::{bench, seeded_weights, BenchConfig, BenchRow, BenchTable, Family};
pub use check::{
    check_suite, exact_mismatch, qelim_disagreement, random_weights, CheckReport, Suite,
};

use crate::dp::{dp_optimize, DpOptions, DpProblem, Solution};
use crate::error::{Error, Result};
use crate::graph::{tuple_weight, Graph, WeightAssignment};
use crate::logic::{check_monotone_sampled, evaluate_naive, Formula, ITuple, MonotoneVerdict};
use crate::qelim::{
    census, compute_shroud, eliminate_all_with, h_center, restrict_to_subgraph, ElimOptions,
};
use crate::sparsity::{
    generic_cover_from_coloring, separator_decomposition, treedepth_coloring, Cover,
};

/// Largest graph on which returned tuples are re-checked against the original sentence.
pub const ORACLE_MAX_N: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    /// Not sampled; the caller's claim is taken as is.
    Asserted,
    SampledOk,
    Violated,
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monotonicity::Asserted => "asserted",
            Monotonicity::SampledOk => "sampled-ok",
            Monotonicity::Violated => "violated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxOptions {
    pub elim: ElimOptions,
    pub dp: DpOptions,
    /// Sub-tuple trials for the monotonicity sample; 0 skips sampling.
    pub monotone_trials: usize,
    pub seed: u64,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            elim: ElimOptions::default(),
            dp: DpOptions::default(),
            monotone_trials: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub tuple: ITuple,
    pub value: i64,
    /// Guaranteed fraction of the optimum when the property is monotone.
    pub delta: Ratio<u64>,
    pub cover: Cover,
    /// Best value inside the center of each cover member, `None` when nothing fits.
    pub element_values: Vec<Option<i64>>,
    pub best_element: usize,
    pub monotonicity: Monotonicity,
    /// Largest shroud set, the cover size the construction needs.
    pub shroud_size: usize,
    pub counters: usize,
    pub timings: Vec<(String, Duration)>,
}

/// Default cover: all unions of `s` classes of a low-treedepth coloring. Falls back to
/// `{V(G)}` when `s >= n` or no coloring meets the depth cap.
pub fn default_cover(g: &Graph, s: usize, depth_cap: usize) -> Result<Cover> {
    if s >= g.n() {
        return Ok(Cover::whole_graph(g.n(), s));
    }
    match treedepth_coloring(g, s.max(1), depth_cap) {
        Ok(coloring) => generic_cover_from_coloring(g.n(), &coloring, s),
        Err(Error::Invalid(_)) => Ok(Cover::whole_graph(g.n(), s)),
        Err(e) => Err(e),
    }
}

fn restrict_weights(w: &WeightAssignment, vertices: &[usize]) -> WeightAssignment {
    let k = w.indices().len();
    let mut out = WeightAssignment::zero(vertices.len(), w.indices());
    for (i, &v) in vertices.iter().enumerate() {
        for mask in 1..(1u32 << k) {
            out.set(i, mask, w.get(v, mask));
        }
    }
    out
}

/// Best tuple over the cover: for each member `Y`, the optimum among tuples inside the
/// shroud center of `Y`, solved on `G[Y]` with the rest of the graph summarized by a census.
pub fn solve_approx(
    g: &Graph,
    w: &WeightAssignment,
    phi: &Formula,
    cover: Option<Cover>,
    depth_cap: usize,
    options: &ApproxOptions,
) -> Result<SolveReport> {
    if !w.nonneg() {
        return Err(Error::Invalid(
            "the approximation needs nonnegative weights".into(),
        ));
    }
    if let Some(i) = phi.set_indices().into_iter().find(|i| !w.indices().contains(i)) {
        return Err(Error::UnknownIndex(i));
    }
    let mut timings = Vec::new();
    let clock = Instant::now();
    let e = eliminate_all_with(g, phi, &options.elim)?;
    let shroud = compute_shroud(&e.sig, &e.interp)?;
    let need = shroud.max_size();
    timings.push(("eliminate".to_string(), clock.elapsed()));

    let clock = Instant::now();
    let cover = match cover {
        Some(c) => c,
        None => default_cover(g, need.max(1), depth_cap)?,
    };
    if cover.s < need {
        return Err(Error::CoverTooWeak {
            need,
            have: cover.s,
        });
    }
    if let Some(bad) = cover.members.iter().flatten().find(|&&v| v >= g.n()) {
        return Err(Error::Invalid(format!("cover vertex {bad} out of range")));
    }
    timings.push(("cover".to_string(), clock.elapsed()));

    let clock = Instant::now();
    let monotonicity = if options.monotone_trials == 0 {
        Monotonicity::Asserted
    } else {
        match check_monotone_sampled(g, phi, w.indices(), options.monotone_trials, options.seed)? {
            MonotoneVerdict::NoCounterexample => Monotonicity::SampledOk,
            MonotoneVerdict::Counterexample { .. } => Monotonicity::Violated,
        }
    };
    timings.push(("monotonicity".to_string(), clock.elapsed()));

    let clock = Instant::now();
    let empty = ITuple::empty(w.indices());
    let cap = e.cap();
    let mut element_values = Vec::with_capacity(cover.members.len());
    let mut best: Option<(usize, Solution)> = None;
    for (idx, member) in cover.members.iter().enumerate() {
        let y: BTreeSet<usize> = member.iter().copied().collect();
        let center = h_center(&shroud, &y);
        let outside: BTreeSet<usize> = (0..g.n()).filter(|v| !y.contains(v)).collect();
        let rest = census(g, &e.interp, &e.sig, &e.formula, &empty, &outside, cap)?;
        let r = restrict_to_subgraph(g, &e.interp, &e.sig, &e.formula, &y, &rest)?;
        let td = separator_decomposition(&r.graph);
        let allowed: BTreeSet<usize> = center.iter().filter_map(|&v| r.index_of(v)).collect();
        let sub_w = restrict_weights(w, &r.vertices);
        let found = dp_optimize(
            &DpProblem {
                graph: &r.graph,
                td: &td,
                allowed: &allowed,
                weights: &sub_w,
                sig: &r.sig,
                formula: &r.formula,
                interp: &r.interp,
            },
            &options.dp,
        );
        let sol = match found {
            Ok(d) => {
                let tuple = r.lift(&d.solution.tuple);
                let value = tuple_weight(w, &tuple)?;
                Solution { tuple, value }
            }
            Err(Error::Infeasible) => {
                element_values.push(None);
                continue;
            }
            Err(other) => return Err(other),
        };
        element_values.push(Some(sol.value));
        if best.as_ref().is_none_or(|(_, b)| sol.value > b.value) {
            best = Some((idx, sol));
        }
    }
    timings.push(("solve".to_string(), clock.elapsed()));

    let (best_element, sol) = best.ok_or(Error::Infeasible)?;
    let clock = Instant::now();
    let env = BTreeMap::new();
    let ok = if g.n() <= ORACLE_MAX_N {
        let plain = crate::logic::Interpretation::new(g.n());
        let sig = crate::logic::CounterSignature::new();
        evaluate_naive(g, &plain, &sig, &sol.tuple, phi, &env)?
    } else {
        evaluate_naive(g, &e.interp, &e.sig, &sol.tuple, &e.formula, &env)?
    };
    if !ok {
        return Err(Error::Invalid(
            "internal error: the selected tuple does not satisfy the sentence".into(),
        ));
    }
    timings.push(("verify".to_string(), clock.elapsed()));
    Ok(SolveReport {
        tuple: sol.tuple,
        value: sol.value,
        delta: cover.delta,
        cover,
        element_values,
        best_element,
        monotonicity,
        shroud_size: need,
        counters: e.sig.len(),
        timings,
    })
}
