//! Dynamic programming over tree decompositions, keyed by boundary patterns and censuses of
//! the finalized region, plus the exhaustive oracle and the exact solver.

mod nice;
mod table;

use std::collections::{BTreeMap, BTreeSet};

pub use nice::{boundary_shroud, nice_decomposition, NiceDecomposition, NiceNode};
pub use table::{dp_optimize, DpOptions, DpProblem, DpSolution, DEFAULT_STATE_CAP};

use crate::error::{Error, Result};
use crate::graph::{Graph, WeightAssignment};
use crate::logic::{evaluate_naive, CounterSignature, Formula, ITuple, Interpretation};
use crate::qelim::{eliminate_all_with, ElimOptions};
use crate::sparsity::separator_decomposition;

/// Default bound on `|X| * |I|` for [`brute_force`].
pub const BRUTE_FORCE_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub tuple: ITuple,
    pub value: i64,
}

/// Lexicographic order on per-vertex membership masks, vertex 0 first.
pub(crate) fn lex_less(a: &[u32], b: &[u32]) -> bool {
    a < b
}

fn check_indices(phi: &Formula, w: &WeightAssignment) -> Result<()> {
    match phi.set_indices().into_iter().find(|i| !w.indices().contains(i)) {
        Some(i) => Err(Error::UnknownIndex(i)),
        None => Ok(()),
    }
}

/// Best tuple of subsets of `x` by trying all of them. Ties go to the lexicographically
/// least membership vector.
pub fn brute_force(
    g: &Graph,
    w: &WeightAssignment,
    phi: &Formula,
    x: &BTreeSet<usize>,
    cap: usize,
) -> Result<Solution> {
    check_indices(phi, w)?;
    let k = w.indices().len();
    let xs: Vec<usize> = x.iter().copied().collect();
    let bits = xs.len() * k;
    if bits > cap || bits >= 31 {
        return Err(Error::ResourceLimit(format!(
            "brute force over {bits} membership bits exceeds the cap {cap}"
        )));
    }
    let interp = Interpretation::new(g.n());
    let sig = CounterSignature::new();
    let env = BTreeMap::new();
    let mut best: Option<(i64, Vec<u32>)> = None;
    for code in 0u32..(1 << bits) {
        let mut masks = vec![0u32; g.n()];
        for (j, &v) in xs.iter().enumerate() {
            masks[v] = (code >> (j * k)) & ((1 << k) - 1);
        }
        let t = ITuple::from_masks(w.indices(), &masks);
        if !evaluate_naive(g, &interp, &sig, &t, phi, &env)? {
            continue;
        }
        let value = masks
            .iter()
            .enumerate()
            .try_fold(0i64, |acc, (v, &m)| acc.checked_add(w.get(v, m)))
            .ok_or(Error::WeightOverflow)?;
        let better = match &best {
            None => true,
            Some((bv, bm)) => value > *bv || (value == *bv && lex_less(&masks, bm)),
        };
        if better {
            best = Some((value, masks));
        }
    }
    let (value, masks) = best.ok_or(Error::Infeasible)?;
    Ok(Solution {
        tuple: ITuple::from_masks(w.indices(), &masks),
        value,
    })
}

/// Exact optimum for arbitrary integer weights: eliminate quantifiers, decompose by
/// separators, then run the table DP with every vertex allowed.
pub fn solve_exact(
    g: &Graph,
    w: &WeightAssignment,
    phi: &Formula,
    elim: &ElimOptions,
    options: &DpOptions,
) -> Result<DpSolution> {
    check_indices(phi, w)?;
    let e = eliminate_all_with(g, phi, elim)?;
    let td = separator_decomposition(g);
    let allowed: BTreeSet<usize> = (0..g.n()).collect();
    dp_optimize(
        &DpProblem {
            graph: g,
            td: &td,
            allowed: &allowed,
            weights: w,
            sig: &e.sig,
            formula: &e.formula,
            interp: &e.interp,
        },
        options,
    )
}
