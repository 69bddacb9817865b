use std::collections::BTreeSet;

use crate::qelim::Shroud;
use crate::sparsity::TreeDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiceNode {
    Leaf,
    Introduce { vertex: usize, child: usize },
    Forget { vertex: usize, child: usize },
    Join { left: usize, right: usize },
}

/// A decomposition where every node introduces or forgets one vertex, or joins two children
/// with equal bags. Children always precede their parents; the root bag is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceDecomposition {
    pub nodes: Vec<NiceNode>,
    pub bags: Vec<Vec<usize>>,
    pub root: usize,
}

impl NiceDecomposition {
    fn push(&mut self, node: NiceNode, bag: Vec<usize>) -> usize {
        self.nodes.push(node);
        self.bags.push(bag);
        self.nodes.len() - 1
    }

    /// Moves from node `id` to a node with bag `target`: forgets first, then introduces.
    fn morph(&mut self, mut id: usize, target: &[usize]) -> usize {
        let current = self.bags[id].clone();
        for &v in current.iter().filter(|v| target.binary_search(v).is_err()) {
            let bag: Vec<usize> = self.bags[id].iter().copied().filter(|&u| u != v).collect();
            id = self.push(NiceNode::Forget { vertex: v, child: id }, bag);
        }
        for &v in target.iter().filter(|v| current.binary_search(v).is_err()) {
            let mut bag = self.bags[id].clone();
            let at = bag.binary_search(&v).unwrap_err();
            bag.insert(at, v);
            id = self.push(NiceNode::Introduce { vertex: v, child: id }, bag);
        }
        id
    }
}

/// Converts a rooted decomposition. Bags are taken as sets.
pub fn nice_decomposition(td: &TreeDecomposition) -> NiceDecomposition {
    let mut out = NiceDecomposition {
        nodes: Vec::new(),
        bags: Vec::new(),
        root: 0,
    };
    if td.is_empty() {
        out.root = out.push(NiceNode::Leaf, Vec::new());
        return out;
    }
    let children = td.children();
    let bag = |x: usize| -> Vec<usize> {
        let mut b = td.bags[x].clone();
        b.sort_unstable();
        b.dedup();
        b
    };
    // Post-order without recursion.
    let mut order = Vec::with_capacity(td.len());
    let mut stack = vec![(td.root, false)];
    while let Some((x, done)) = stack.pop() {
        if done {
            order.push(x);
            continue;
        }
        stack.push((x, true));
        for &c in children[x].iter().rev() {
            stack.push((c, false));
        }
    }
    let mut top = vec![usize::MAX; td.len()];
    for x in order {
        let b = bag(x);
        let mut acc: Option<usize> = None;
        for &c in &children[x] {
            let id = out.morph(top[c], &b);
            acc = Some(match acc {
                None => id,
                Some(left) => out.push(NiceNode::Join { left, right: id }, b.clone()),
            });
        }
        top[x] = match acc {
            Some(id) => id,
            None => {
                let leaf = out.push(NiceNode::Leaf, Vec::new());
                out.morph(leaf, &b)
            }
        };
    }
    out.root = out.morph(top[td.root], &[]);
    out
}

/// `S = h(bag) ∩ processed`: the processed vertices whose counters may still change.
pub fn boundary_shroud(
    shroud: &Shroud,
    bag: &BTreeSet<usize>,
    processed: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    shroud
        .image(bag.iter())
        .into_iter()
        .filter(|v| processed.contains(v))
        .collect()
}
