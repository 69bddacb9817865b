use std::fmt;

use num_rational::Ratio;

use super::coloring::for_each_combination;
use super::scaffold::for_each_subset;
use crate::error::{Error, Result};
use crate::graph::{parse_usize, Graph};

/// Largest number of color classes a coloring cover may combine.
pub const MAX_COVER_COLORS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Coloring,
    UserFile,
    WholeGraph,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Coloring => "coloring",
            Provenance::UserFile => "user-file",
            Provenance::WholeGraph => "whole-graph",
        })
    }
}

/// A multiset of vertex sets such that every set of at most `s` vertices lies in at least a
/// `delta` fraction of the members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    pub members: Vec<Vec<usize>>,
    pub s: usize,
    /// The guarantee used for reporting: declared by the user or derived from the construction.
    pub delta: Ratio<u64>,
    /// Fraction measured by exhaustive or sampled checking, when it was run.
    pub verified_delta: Option<Ratio<u64>>,
    pub provenance: Provenance,
}

impl Cover {
    pub fn whole_graph(n: usize, s: usize) -> Cover {
        Cover {
            members: vec![(0..n).collect()],
            s,
            delta: Ratio::from_integer(1),
            verified_delta: Some(Ratio::from_integer(1)),
            provenance: Provenance::WholeGraph,
        }
    }

    /// Text form accepted by [`load_cover`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.s, self.delta.numer(), self.delta.denom());
        for m in &self.members {
            let line: Vec<String> = m.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

fn binomial(a: usize, k: usize) -> u64 {
    if k > a {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (a - i) as u64 / (i + 1) as u64)
}

/// All unions of `s` color classes. With fewer than `s` colors the cover is `{V(G)}`.
pub fn generic_cover_from_coloring(n: usize, coloring: &[usize], s: usize) -> Result<Cover> {
    let a = coloring.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut classes = vec![Vec::new(); a];
    for (v, &c) in coloring.iter().enumerate() {
        classes[c].push(v);
    }
    generic_cover_from_classes(n, &classes, s)
}

/// Like [`generic_cover_from_coloring`], with explicit (possibly empty) classes.
pub fn generic_cover_from_classes(n: usize, classes: &[Vec<usize>], s: usize) -> Result<Cover> {
    let a = classes.len();
    if s == 0 {
        return Err(Error::Invalid("cover needs s >= 1".into()));
    }
    if a <= s {
        let mut c = Cover::whole_graph(n, s);
        c.provenance = Provenance::Coloring;
        return Ok(c);
    }
    if a > MAX_COVER_COLORS {
        return Err(Error::ResourceLimit(format!(
            "coloring has {a} colors, at most {MAX_COVER_COLORS} are combined into a cover"
        )));
    }
    let mut members = Vec::new();
    for_each_combination(a, s, &mut |combo| {
        let mut m: Vec<usize> = combo.iter().flat_map(|&c| classes[c].iter().copied()).collect();
        m.sort_unstable();
        members.push(m);
    });
    let delta = Ratio::new(1, binomial(a, s));
    Ok(Cover {
        members,
        s,
        delta,
        verified_delta: None,
        provenance: Provenance::Coloring,
    })
}

/// Smallest fraction of members containing a nonempty set of at most `s` vertices,
/// checked over all such sets.
pub fn measure_genericity(n: usize, members: &[Vec<usize>], s: usize) -> Ratio<u64> {
    let total = members.len() as u64;
    if total == 0 {
        return Ratio::from_integer(0);
    }
    let sets: Vec<Vec<bool>> = members
        .iter()
        .map(|m| {
            let mut b = vec![false; n];
            for &v in m {
                b[v] = true;
            }
            b
        })
        .collect();
    let mut worst = total;
    for_each_subset(n, s, &mut |set| {
        let count = sets
            .iter()
            .filter(|b| set.iter().all(|&v| b[v]))
            .count() as u64;
        worst = worst.min(count);
    });
    Ratio::new(worst, total)
}

/// Reads a header `s delta_num delta_den` and one member per line.
pub fn load_cover(text: &str, g: &Graph) -> Result<Cover> {
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    });
    let (hl, header) = lines.next().ok_or(Error::Input {
        line: 1,
        msg: "empty cover file".into(),
    })?;
    let words: Vec<_> = header.split_whitespace().collect();
    if words.len() != 3 {
        return Err(Error::Input {
            line: hl,
            msg: "header must be `s delta_num delta_den`".into(),
        });
    }
    let s = parse_usize(words[0], hl)?;
    let num = parse_usize(words[1], hl)? as u64;
    let den = parse_usize(words[2], hl)? as u64;
    if s == 0 || den == 0 || num > den || num == 0 {
        return Err(Error::Input {
            line: hl,
            msg: "need s >= 1 and 0 < delta <= 1".into(),
        });
    }
    let mut members = Vec::new();
    for (ln, l) in lines {
        let mut m = Vec::new();
        for w in l.split_whitespace() {
            let v = parse_usize(w, ln)?;
            if v >= g.n() {
                return Err(Error::Input {
                    line: ln,
                    msg: format!("vertex {v} out of range"),
                });
            }
            m.push(v);
        }
        m.sort_unstable();
        m.dedup();
        members.push(m);
    }
    if members.is_empty() {
        return Err(Error::Input {
            line: hl,
            msg: "cover has no members".into(),
        });
    }
    let delta = Ratio::new(num, den);
    let verified = if s <= 3 && g.n() <= 64 {
        let measured = measure_genericity(g.n(), &members, s);
        if measured < delta {
            return Err(Error::Invalid(format!(
                "cover declares delta {delta} but some set of at most {s} vertices lies in only {measured} of the members"
            )));
        }
        Some(measured)
    } else {
        None
    };
    Ok(Cover {
        members,
        s,
        delta,
        verified_delta: verified,
        provenance: Provenance::UserFile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_classes() {
        let c = generic_cover_from_coloring(3, &[0, 1, 2], 1).unwrap();
        assert_eq!(c.members, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(c.delta, Ratio::new(1, 3));
        assert_eq!(measure_genericity(3, &c.members, 1), Ratio::new(1, 3));
    }

    #[test]
    fn whole_graph_when_few_colors() {
        let c = generic_cover_from_coloring(4, &[0, 1, 0, 1], 2).unwrap();
        assert_eq!(c.members, vec![vec![0, 1, 2, 3]]);
        assert_eq!(c.delta, Ratio::from_integer(1));
    }

    #[test]
    fn p3_padded() {
        let classes = vec![vec![0, 2], vec![1], vec![]];
        let c = generic_cover_from_classes(3, &classes, 2).unwrap();
        assert_eq!(c.members.len(), 3);
        assert!(measure_genericity(3, &c.members, 2) >= Ratio::new(1, 3));
    }

    #[test]
    fn user_files() {
        let p3 = Graph::path(3);
        let c = load_cover("1 2 3\n0 1\n1 2\n0 2\n", &p3).unwrap();
        assert_eq!(c.verified_delta, Some(Ratio::new(2, 3)));
        assert_eq!(c.provenance, Provenance::UserFile);
        let c = load_cover("3 1 1\n0 1 2\n", &p3).unwrap();
        assert_eq!(c.verified_delta, Some(Ratio::from_integer(1)));
        assert!(load_cover("", &p3).is_err());
        assert!(load_cover("1 1 1\n", &p3).is_err());
        assert!(load_cover("1 1 1\n0 7\n", &p3).is_err());
        assert!(load_cover("1 1 1\n0 1\n", &p3).is_err());
        assert_eq!(load_cover(&c.to_text(), &p3).unwrap().members, c.members);
    }
}
