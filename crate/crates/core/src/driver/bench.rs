use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Duration;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{solve_approx, ApproxOptions};
use crate::dp::{brute_force, BRUTE_FORCE_CAP};
use crate::error::{Error, Result};
use crate::graph::{bounded_degree_random, random_planarish, Graph, WeightAssignment};
use crate::logic::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Path,
    Cycle,
    Grid,
    RandomPlanarish,
    BoundedDegreeRandom,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Path,
        Family::Cycle,
        Family::Grid,
        Family::RandomPlanarish,
        Family::BoundedDegreeRandom,
    ];

    /// The member of size about `n`; grids use the largest `r x c` with `r = floor(sqrt n)`.
    pub fn generate(self, n: usize, seed: u64) -> Graph {
        match self {
            Family::Path => Graph::path(n),
            Family::Cycle => Graph::cycle(n),
            Family::Grid => {
                let r = (1..=n).take_while(|r| r * r <= n).last().unwrap_or(1);
                Graph::grid(r, n.max(1) / r)
            }
            Family::RandomPlanarish => random_planarish(n, seed),
            Family::BoundedDegreeRandom => bounded_degree_random(n, 3, seed),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Path => "path",
            Family::Cycle => "cycle",
            Family::Grid => "grid",
            Family::RandomPlanarish => "random-planarish",
            Family::BoundedDegreeRandom => "bounded-degree-random",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown graph family `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub depth_cap: usize,
    /// Bound on membership bits for computing OPT by brute force.
    pub brute_cap: usize,
    pub approx: ApproxOptions,
}

impl BenchConfig {
    pub fn new(family: Family, sizes: Vec<usize>, seed: u64) -> BenchConfig {
        BenchConfig {
            family,
            sizes,
            seed,
            depth_cap: 4,
            brute_cap: BRUTE_FORCE_CAP,
            approx: ApproxOptions {
                seed,
                ..ApproxOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub opt: Option<i64>,
    /// `Err` holds the reason the approximation produced no value.
    pub approx: std::result::Result<i64, String>,
    pub delta: Option<Ratio<u64>>,
    pub cover_size: usize,
    pub timings: Vec<(String, Duration)>,
}

impl BenchRow {
    pub fn ratio(&self) -> Option<Ratio<i64>> {
        match (self.opt, &self.approx) {
            (Some(opt), Ok(a)) if opt > 0 => Some(Ratio::new(*a, opt)),
            _ => None,
        }
    }

    /// `approx >= delta * OPT`, compared exactly. `None` when either side is missing.
    pub fn meets_guarantee(&self) -> Option<bool> {
        match (self.opt, &self.approx, self.delta) {
            (Some(opt), Ok(a), Some(d)) => {
                let lhs = *a as i128 * *d.denom() as i128;
                let rhs = opt as i128 * *d.numer() as i128;
                Some(lhs >= rhs)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchTable {
    pub family: Family,
    pub rows: Vec<BenchRow>,
}

const DASH: &str = "—";

fn cells(row: &BenchRow, timings: bool) -> Vec<String> {
    let opt = row.opt.map_or(DASH.to_string(), |v| v.to_string());
    let approx = match &row.approx {
        Ok(v) => v.to_string(),
        Err(e) => e.clone(),
    };
    let delta = row.delta.map_or(DASH.to_string(), |d| d.to_string());
    let ratio = row.ratio().map_or(DASH.to_string(), |r| {
        format!("{:.4}", *r.numer() as f64 / *r.denom() as f64)
    });
    let ok = match row.meets_guarantee() {
        Some(true) => "yes",
        Some(false) => "NO",
        None => DASH,
    };
    let mut out = vec![
        row.n.to_string(),
        row.m.to_string(),
        opt,
        approx,
        delta,
        ratio,
        ok.to_string(),
        row.cover_size.to_string(),
    ];
    if timings {
        let total: Duration = row.timings.iter().map(|(_, d)| *d).sum();
        out.push(format!("{:.3}", total.as_secs_f64() * 1000.0));
    }
    out
}

fn header(timings: bool) -> Vec<&'static str> {
    let mut h = vec!["n", "m", "opt", "approx", "delta", "ratio", "guarantee", "cover"];
    if timings {
        h.push("ms");
    }
    h
}

impl BenchTable {
    /// Right-aligned columns. Timings vary between runs, so they are opt-in.
    pub fn to_text(&self, timings: bool) -> String {
        let head: Vec<String> = header(timings).into_iter().map(String::from).collect();
        let body: Vec<Vec<String>> = self.rows.iter().map(|r| cells(r, timings)).collect();
        let mut width = vec![0usize; head.len()];
        for line in std::iter::once(&head).chain(&body) {
            for (w, c) in width.iter_mut().zip(line) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut s = format!("family={}\n", self.family);
        for line in std::iter::once(&head).chain(&body) {
            let padded: Vec<String> = line
                .iter()
                .zip(&width)
                .map(|(c, &w)| format!("{}{}", " ".repeat(w - c.chars().count()), c))
                .collect();
            let _ = writeln!(s, "{}", padded.join("  ").trim_end());
        }
        s
    }

    pub fn to_csv(&self, timings: bool) -> String {
        let mut s = format!("family,{}\n", header(timings).join(","));
        for r in &self.rows {
            let line: Vec<String> = cells(r, timings)
                .into_iter()
                .map(|c| if c.contains(',') { format!("\"{c}\"") } else { c })
                .collect();
            let _ = writeln!(s, "{},{}", self.family, line.join(","));
        }
        s
    }
}

/// Weights in `1..=9` for every nonempty membership pattern.
pub fn seeded_weights(n: usize, indices: &[u32], seed: u64) -> WeightAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = WeightAssignment::zero(n, indices);
    for v in 0..n {
        for mask in 1..(1u32 << indices.len()) {
            w.set(v, mask, rng.gen_range(1..=9));
        }
    }
    w
}

fn short(e: &Error) -> String {
    match e {
        Error::Infeasible => "infeasible".into(),
        Error::ResourceLimit(_) => "resource-limit".into(),
        Error::CoverTooWeak { .. } => "cover-too-weak".into(),
        _ => "error".into(),
    }
}

/// Runs the approximation on one member of the family per size and compares it with the
/// brute-force optimum where that is affordable.
pub fn bench(config: &BenchConfig, phi: &Formula) -> Result<BenchTable> {
    let indices: Vec<u32> = phi.set_indices().into_iter().collect();
    let indices = if indices.is_empty() { vec![1] } else { indices };
    let mut rows = Vec::with_capacity(config.sizes.len());
    for &size in &config.sizes {
        let instance_seed = config.seed.wrapping_mul(1_000_003).wrapping_add(size as u64);
        let g = config.family.generate(size, instance_seed);
        let w = seeded_weights(g.n(), &indices, instance_seed);
        let everything = (0..g.n()).collect();
        let opt = match brute_force(&g, &w, phi, &everything, config.brute_cap) {
            Ok(s) => Some(s.value),
            Err(Error::ResourceLimit(_) | Error::Infeasible) => None,
            Err(e) => return Err(e),
        };
        let report = solve_approx(&g, &w, phi, None, config.depth_cap, &config.approx);
        let row = match report {
            Ok(r) => BenchRow {
                n: g.n(),
                m: g.m(),
                opt,
                approx: Ok(r.value),
                delta: Some(r.delta),
                cover_size: r.cover.members.len(),
                timings: r.timings,
            },
            Err(e) => BenchRow {
                n: g.n(),
                m: g.m(),
                opt,
                approx: Err(short(&e)),
                delta: None,
                cover_size: 0,
                timings: Vec::new(),
            },
        };
        rows.push(row);
    }
    Ok(BenchTable {
        family: config.family,
        rows,
    })
}
