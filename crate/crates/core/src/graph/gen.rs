use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;

/// A graph with `floor(n * avg_degree / 2)` distinct edges chosen uniformly.
pub fn random_graph(n: usize, avg_degree: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            all.push((u, v));
        }
    }
    all.shuffle(&mut rng);
    let m = ((n as f64 * avg_degree / 2.0).floor() as usize).min(all.len());
    all.truncate(m);
    all.sort_unstable();
    Graph::from_edges(n, &all).unwrap()
}

/// A random subgraph of a triangulated grid (each cell split by one diagonal); always planar.
pub fn random_planarish(n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = ((n as f64).sqrt().ceil() as usize).max(1);
    let mut edges = Vec::new();
    for v in 0..n {
        let (r, c) = (v / cols, v % cols);
        let mut cand = Vec::new();
        if c + 1 < cols {
            cand.push(v + 1);
        }
        cand.push(v + cols);
        if c + 1 < cols {
            cand.push((r + 1) * cols + c + 1);
        }
        for u in cand {
            if u < n && rng.gen_bool(0.7) {
                edges.push((v, u));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Random edges added while both endpoints stay below `max_degree`.
pub fn bounded_degree_random(n: usize, max_degree: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deg = vec![0usize; n];
    let mut edges = BTreeSet::new();
    if n >= 2 {
        for _ in 0..n * max_degree {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            let e = (u.min(v), u.max(v));
            if u != v && deg[u] < max_degree && deg[v] < max_degree && edges.insert(e) {
                deg[u] += 1;
                deg[v] += 1;
            }
        }
    }
    Graph::from_edges(n, &edges.into_iter().collect::<Vec<_>>()).unwrap()
}

/// All connected graphs on `1..=max_n` vertices, one per isomorphism class.
pub fn small_connected_graphs(max_n: usize) -> Vec<Graph> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        let perms = permutations(n);
        let mut seen = BTreeSet::new();
        for code in 0u64..(1 << pairs.len()) {
            let edges: Vec<_> = (0..pairs.len())
                .filter(|&k| code & (1 << k) != 0)
                .map(|k| pairs[k])
                .collect();
            let g = Graph::from_edges(n, &edges).unwrap();
            if !g.is_connected() {
                continue;
            }
            let canon = perms
                .iter()
                .map(|p| {
                    let mut c = 0u64;
                    for &(u, v) in &edges {
                        let (a, b) = (p[u].min(p[v]), p[u].max(p[v]));
                        let k = pairs.iter().position(|&e| e == (a, b)).unwrap();
                        c |= 1 << k;
                    }
                    c
                })
                .min()
                .unwrap();
            if seen.insert(canon) {
                out.push(g);
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}
