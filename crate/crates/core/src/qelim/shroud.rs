use std::collections::BTreeSet;

use crate::error::Result;
use crate::logic::{CounterSignature, Interpretation};

/// Influence sets: changing membership at `v` can only change counters inside `h(v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shroud {
    pub sets: Vec<BTreeSet<usize>>,
    /// Number of counters the sets were grown over.
    pub levels: usize,
}

impl Shroud {
    pub fn trivial(n: usize) -> Shroud {
        Shroud {
            sets: (0..n).map(|v| BTreeSet::from([v])).collect(),
            levels: 0,
        }
    }

    pub fn get(&self, v: usize) -> &BTreeSet<usize> {
        &self.sets[v]
    }

    /// Largest set size.
    pub fn max_size(&self) -> usize {
        self.sets.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Union of `h(v)` over `vs`.
    pub fn image<'a>(&self, vs: impl IntoIterator<Item = &'a usize>) -> BTreeSet<usize> {
        vs.into_iter().flat_map(|&v| self.sets[v].iter().copied()).collect()
    }
}

/// Starting from `h(v) = {v}`, each counter in signature order adds the images of the current
/// set under the counter's function.
pub fn compute_shroud(sig: &CounterSignature, interp: &Interpretation) -> Result<Shroud> {
    let mut sets: Vec<BTreeSet<usize>> = (0..interp.n).map(|v| BTreeSet::from([v])).collect();
    for c in &sig.counters {
        let f = interp.func(&c.func)?;
        for set in sets.iter_mut() {
            let images: Vec<usize> = set.iter().map(|&u| f[u]).collect();
            set.extend(images);
        }
    }
    Ok(Shroud {
        sets,
        levels: sig.len(),
    })
}

/// `{v in Y : h(v) is a subset of Y}`.
pub fn h_center(shroud: &Shroud, y: &BTreeSet<usize>) -> BTreeSet<usize> {
    y.iter()
        .copied()
        .filter(|&v| shroud.sets[v].is_subset(y))
        .collect()
}
