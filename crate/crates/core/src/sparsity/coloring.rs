use super::scaffold::dfs_height;
use crate::error::{Error, Result};
use crate::graph::{degeneracy_orientation, Graph};

/// Colors whose every union of at most `s` classes has a depth-first forest of height at most
/// `depth_cap`. Starts from a distance-2 greedy coloring, splits classes until the height
/// condition holds, then greedily merges classes while it keeps holding.
pub fn treedepth_coloring(g: &Graph, s: usize, depth_cap: usize) -> Result<Vec<usize>> {
    let n = g.n();
    if s == 0 || depth_cap == 0 {
        return Err(Error::Invalid("coloring needs s >= 1 and depth cap >= 1".into()));
    }
    let order = degeneracy_orientation(g).order;
    let mut color = vec![usize::MAX; n];
    for &v in order.iter().rev() {
        let mut used = Vec::new();
        for &u in g.neighbors(v) {
            used.push(color[u]);
            for &w in g.neighbors(u) {
                used.push(color[w]);
            }
        }
        color[v] = (0..).find(|c| !used.contains(c)).unwrap();
    }
    let mut classes = to_classes(&color);
    // Split until every union of at most s classes passes.
    while let Some(bad) = failing_union(g, &classes, s, depth_cap) {
        let (k, _) = bad
            .iter()
            .map(|&k| (k, classes[k].len()))
            .max_by_key(|&(k, len)| (len, std::cmp::Reverse(k)))
            .unwrap();
        if classes[k].len() < 2 {
            if classes.len() > n {
                return Err(Error::ResourceLimit("coloring uses more colors than vertices".into()));
            }
            // A union of singletons that still fails can only be fixed by the cap itself.
            return Err(Error::Invalid(format!(
                "no coloring meets depth cap {depth_cap}"
            )));
        }
        let half = classes[k].len() / 2;
        let tail = classes[k].split_off(half);
        classes.push(tail);
    }
    // Merge classes while the condition still holds.
    'outer: loop {
        for i in 0..classes.len() {
            for j in i + 1..classes.len() {
                let mut trial = classes.clone();
                let moved = trial.remove(j);
                trial[i].extend(moved);
                trial[i].sort_unstable();
                if failing_union(g, &trial, s, depth_cap).is_none() {
                    classes = trial;
                    continue 'outer;
                }
            }
        }
        break;
    }
    let mut out = vec![0; n];
    for (c, class) in classes.iter().enumerate() {
        for &v in class {
            out[v] = c;
        }
    }
    Ok(out)
}

fn to_classes(color: &[usize]) -> Vec<Vec<usize>> {
    let a = color.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut classes = vec![Vec::new(); a];
    for (v, &c) in color.iter().enumerate() {
        classes[c].push(v);
    }
    classes.retain(|c| !c.is_empty());
    classes
}

/// Some union of at most `s` classes whose depth-first forest is too tall.
fn failing_union(g: &Graph, classes: &[Vec<usize>], s: usize, cap: usize) -> Option<Vec<usize>> {
    let a = classes.len();
    let k = s.min(a);
    let mut found = None;
    for_each_combination(a, k, &mut |combo| {
        if found.is_some() {
            return;
        }
        let mut member = vec![false; g.n()];
        for &c in combo {
            for &v in &classes[c] {
                member[v] = true;
            }
        }
        if dfs_height(g, &member) > cap {
            found = Some(combo.to_vec());
        }
    });
    found
}

/// Calls `f` on every `k`-element subset of `0..a`, in lexicographic order.
pub fn for_each_combination(a: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, a: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for c in start..a {
            if a - c < k - cur.len() {
                break;
            }
            cur.push(c);
            go(c + 1, a, k, cur, f);
            cur.pop();
        }
    }
    go(0, a, k, &mut Vec::new(), f);
}

/// Number of colors used.
pub fn color_count(coloring: &[usize]) -> usize {
    coloring.iter().map(|&c| c + 1).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparsity::scaffold::dfs_height;

    fn all_unions_ok(g: &Graph, coloring: &[usize], s: usize, cap: usize) -> bool {
        let a = color_count(coloring);
        let mut ok = true;
        for_each_combination(a, s.min(a), &mut |combo| {
            let member: Vec<bool> = coloring.iter().map(|c| combo.contains(c)).collect();
            ok &= dfs_height(g, &member) <= cap;
        });
        ok
    }

    #[test]
    fn examples() {
        let e = treedepth_coloring(&Graph::empty(5), 3, 8).unwrap();
        assert_eq!(color_count(&e), 1);
        let p4 = Graph::path(4);
        let c = treedepth_coloring(&p4, 2, 4).unwrap();
        assert!(color_count(&c) <= 2);
        assert!(all_unions_ok(&p4, &c, 2, 4));
        let k4 = Graph::complete(4);
        let c = treedepth_coloring(&k4, 2, 2).unwrap();
        assert_eq!(color_count(&c), 4);
    }

    #[test]
    fn grid_unions_respect_cap() {
        let g = Graph::grid(4, 4);
        for s in 1..=3 {
            let cap = 1 << s;
            let c = treedepth_coloring(&g, s, cap).unwrap();
            assert!(all_unions_ok(&g, &c, s, cap));
        }
    }

    #[test]
    fn combinations() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, &mut |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 1]);
    }
}
