use super::{content_lines, parse_usize, Graph};
use crate::error::{Error, Result};
use crate::logic::ITuple;

/// Weight `w(v, S)` of vertex `v` when its index pattern is exactly `S`; `w(v, {}) = 0`.
/// Patterns are bitmasks over `indices`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightAssignment {
    n: usize,
    indices: Vec<u32>,
    table: Vec<i64>,
}

impl WeightAssignment {
    pub fn zero(n: usize, indices: &[u32]) -> Self {
        assert!(indices.len() < 16, "too many indices");
        WeightAssignment {
            n,
            indices: indices.to_vec(),
            table: vec![0; n << indices.len()],
        }
    }

    /// `value` for every vertex and every nonempty pattern.
    pub fn uniform(n: usize, indices: &[u32], value: i64) -> Self {
        let mut w = Self::zero(n, indices);
        for v in 0..n {
            for mask in 1..(1u32 << indices.len()) {
                w.set(v, mask, value);
            }
        }
        w
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, v: usize, mask: u32) -> i64 {
        self.table[(v << self.indices.len()) | mask as usize]
    }

    pub fn set(&mut self, v: usize, mask: u32, w: i64) {
        assert!(mask != 0 || w == 0, "empty pattern must weigh 0");
        self.table[(v << self.indices.len()) | mask as usize] = w;
    }

    pub fn nonneg(&self) -> bool {
        self.table.iter().all(|&w| w >= 0)
    }

    pub fn mask_of(&self, pattern: &[u32]) -> Result<u32> {
        pattern.iter().try_fold(0u32, |m, i| {
            let k = self
                .indices
                .iter()
                .position(|j| j == i)
                .ok_or(Error::UnknownIndex(*i))?;
            Ok(m | 1 << k)
        })
    }

    /// Weight lines `v {i,j} w` for every nonzero entry.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in 0..self.n {
            for mask in 1..(1u32 << self.indices.len()) {
                let w = self.get(v, mask);
                if w != 0 {
                    let pat: Vec<String> = (0..self.indices.len())
                        .filter(|k| mask & (1 << k) != 0)
                        .map(|k| self.indices[k].to_string())
                        .collect();
                    s.push_str(&format!("{v} {{{}}} {w}\n", pat.join(",")));
                }
            }
        }
        s
    }
}

/// Reads lines `v {i,j,...} w`; missing combinations weigh 0. Text after `#` is ignored.
pub fn load_weights(text: &str, graph: &Graph, indices: &[u32]) -> Result<WeightAssignment> {
    let mut w = WeightAssignment::zero(graph.n(), indices);
    for (ln, line) in content_lines(text) {
        let bad = |msg: &str| Error::Input {
            line: ln,
            msg: msg.to_string(),
        };
        let open = line.find('{').ok_or_else(|| bad("expected `v {i,...} w`"))?;
        let close = line.find('}').ok_or_else(|| bad("missing `}`"))?;
        if close < open {
            return Err(bad("expected `v {i,...} w`"));
        }
        let v = parse_usize(line[..open].trim(), ln)?;
        if v >= graph.n() {
            return Err(bad(&format!("vertex {v} out of range")));
        }
        let inner = line[open + 1..close].trim();
        let mut pattern = Vec::new();
        if !inner.is_empty() {
            for part in inner.split(',') {
                let i: u32 = part
                    .trim()
                    .parse()
                    .map_err(|_| bad(&format!("bad index `{}`", part.trim())))?;
                if !indices.contains(&i) {
                    return Err(bad(&format!("index {i} is not in the index set")));
                }
                if pattern.contains(&i) {
                    return Err(bad(&format!("index {i} repeated")));
                }
                pattern.push(i);
            }
        }
        let value: i64 = line[close + 1..]
            .trim()
            .parse()
            .map_err(|_| bad("bad weight value"))?;
        if pattern.is_empty() {
            if value != 0 {
                return Err(bad("weight of the empty pattern must be 0"));
            }
            continue;
        }
        let mask = w.mask_of(&pattern)?;
        w.set(v, mask, value);
    }
    Ok(w)
}

/// Sum over vertices of `w(v, pattern of v)`.
pub fn tuple_weight(w: &WeightAssignment, tuple: &ITuple) -> Result<i64> {
    let masks = tuple.masks(w.indices(), w.n());
    masks.iter().enumerate().try_fold(0i64, |acc, (v, &m)| {
        acc.checked_add(w.get(v, m)).ok_or(Error::WeightOverflow)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(sets: &[(u32, &[usize])]) -> ITuple {
        ITuple {
            sets: sets
                .iter()
                .map(|(i, s)| (*i, s.iter().copied().collect()))
                .collect(),
        }
    }

    #[test]
    fn load_examples() {
        let g = Graph::path(3);
        let w = load_weights("0 {1} 5\n", &g, &[1]).unwrap();
        assert_eq!(w.get(0, 1), 5);
        assert_eq!(w.get(1, 1), 0);
        assert!(matches!(
            load_weights("0 {} 3\n", &g, &[1]),
            Err(Error::Input { line: 1, .. })
        ));
        assert!(load_weights("0 {} 0\n", &g, &[1]).is_ok());
        assert!(load_weights("5 {1} 1\n", &g, &[1]).is_err());
        assert!(load_weights("0 {2} 1\n", &g, &[1]).is_err());
        let w = load_weights("2 {2, 1} -4 # both\n", &g, &[1, 2]).unwrap();
        assert_eq!(w.get(2, 3), -4);
        assert!(!w.nonneg());
        assert_eq!(load_weights(&w.to_text(), &g, &[1, 2]).unwrap(), w);
    }

    #[test]
    fn weight_examples() {
        let w = WeightAssignment::uniform(3, &[1], 1);
        assert_eq!(tuple_weight(&w, &ITuple::default()).unwrap(), 0);
        assert_eq!(tuple_weight(&w, &tuple(&[(1, &[0, 2])])).unwrap(), 2);
        let mut w = WeightAssignment::zero(1, &[1, 2]);
        w.set(0, 0b01, 1);
        w.set(0, 0b10, 2);
        assert_eq!(tuple_weight(&w, &tuple(&[(1, &[0]), (2, &[0])])).unwrap(), 0);
    }

    #[test]
    fn overflow_is_reported() {
        let mut w = WeightAssignment::zero(2, &[1]);
        w.set(0, 1, i64::MAX);
        w.set(1, 1, 1);
        assert_eq!(
            tuple_weight(&w, &tuple(&[(1, &[0, 1])])),
            Err(Error::WeightOverflow)
        );
    }
}
