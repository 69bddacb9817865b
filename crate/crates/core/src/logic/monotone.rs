use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CounterSignature, Formula, ITuple, Interpretation, Model};
use crate::error::Result;
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonotoneVerdict {
    NoCounterexample,
    /// `sup` satisfies the sentence, `sub` is a sub-tuple of it that does not.
    Counterexample { sup: ITuple, sub: ITuple },
}

/// Searches for a satisfying tuple with a failing sub-tuple. The first trial uses the full tuple.
pub fn check_monotone_sampled(
    graph: &Graph,
    phi: &Formula,
    indices: &[u32],
    trials: usize,
    seed: u64,
) -> Result<MonotoneVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interp = Interpretation::new(graph.n());
    let sig = CounterSignature::new();
    let env = BTreeMap::new();
    let holds = |t: &ITuple| Model::new(graph, &interp, &sig, t).satisfies(phi, &env);
    for trial in 0..trials {
        let mut sup = ITuple::empty(indices);
        for s in sup.sets.values_mut() {
            for v in 0..graph.n() {
                if trial == 0 || rng.gen_bool(0.5) {
                    s.insert(v);
                }
            }
        }
        if !holds(&sup)? {
            continue;
        }
        let elements: Vec<(u32, usize)> = sup
            .sets
            .iter()
            .flat_map(|(&i, s)| s.iter().map(move |&v| (i, v)))
            .collect();
        if elements.is_empty() {
            continue;
        }
        let mut sub = sup.clone();
        let mut removed = false;
        for &(i, v) in &elements {
            if rng.gen_bool(0.5) {
                sub.sets.get_mut(&i).unwrap().remove(&v);
                removed = true;
            }
        }
        if !removed {
            let (i, v) = elements[rng.gen_range(0..elements.len())];
            sub.sets.get_mut(&i).unwrap().remove(&v);
        }
        if !holds(&sub)? {
            return Ok(MonotoneVerdict::Counterexample { sup, sub });
        }
    }
    Ok(MonotoneVerdict::NoCounterexample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_sentence;

    #[test]
    fn verdicts() {
        let k2 = Graph::path(2);
        let all = parse_sentence("(forall x (X 1 x))", &[1]).unwrap();
        match check_monotone_sampled(&k2, &all, &[1], 10, 7).unwrap() {
            MonotoneVerdict::Counterexample { sup, sub } => {
                assert_eq!(sup.sets[&1].len(), 2);
                assert!(sub.is_subset_of(&sup) && sub != sup);
            }
            v => panic!("expected counterexample, got {v:?}"),
        }
        assert_eq!(
            check_monotone_sampled(&k2, &Formula::True, &[1], 10, 7).unwrap(),
            MonotoneVerdict::NoCounterexample
        );
        let indep = parse_sentence(
            "(forall x y (implies (and (X 1 x) (X 1 y) (not (eq x y))) (not (E x y))))",
            &[1],
        )
        .unwrap();
        assert_eq!(
            check_monotone_sampled(&Graph::cycle(6), &indep, &[1], 200, 3).unwrap(),
            MonotoneVerdict::NoCounterexample
        );
    }
}
