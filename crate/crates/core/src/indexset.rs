//! Multi-index sets under hyperbolic truncation.
//!
//! A multi-index `β = (β_1, …, β_l)` selects the tensor-product polynomial
//! `f_{β_1}(x_1) ⋯ f_{β_l}(x_l)`. The hyperbolic set keeps every `β` with
//! `Σ β_i^p ≤ q^p`; `p = 1` is the usual total-degree simplex and smaller `p`
//! thins out the mixed terms.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Slack on `Σ β_i^p ≤ q^p`; fractional powers are inexact and boundary
/// indices such as `(2, 0, …)` at `p = 0.5`, `q = 2` must be kept.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Per-dimension polynomial degrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(degrees: Vec<usize>) -> Self {
        MultiIndex(degrees)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn degrees(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn max_degree(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&d| d == 0)
    }

    /// `Σ β_i^p`.
    pub fn hyperbolic_norm(&self, p: f64) -> f64 {
        self.0
            .iter()
            .filter(|&&d| d > 0)
            .map(|&d| (d as f64).powf(p))
            .sum()
    }

    /// Componentwise `self ≤ other`.
    pub fn le_componentwise(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

/// Graded order: total degree first, then the index with the larger leading
/// entry comes first, so `(1,0)` precedes `(0,1)`.
pub fn graded_order(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    a.total_degree()
        .cmp(&b.total_degree())
        .then_with(|| b.0.cmp(&a.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    dim: usize,
    q: f64,
    p: f64,
    indices: Vec<MultiIndex>,
}

impl MultiIndexSet {
    /// All `β ∈ ℕ^l` with `Σ β_i^p ≤ q^p`, in graded order with the zero index
    /// first.
    pub fn hyperbolic(dim: usize, q: f64, p: f64) -> Result<Self> {
        validate(dim, q, p)?;
        let max_deg = (q + BOUNDARY_TOL).floor() as usize;
        let budget = q.powf(p) + BOUNDARY_TOL;
        // Powers are tabulated once so the recursion only adds.
        let powers: Vec<f64> = (0..=max_deg)
            .map(|d| if d == 0 { 0.0 } else { (d as f64).powf(p) })
            .collect();

        let mut indices = Vec::new();
        let mut current = vec![0usize; dim];
        enumerate(&powers, budget, 0, 0.0, &mut current, &mut indices);
        indices.sort_by(graded_order);
        Ok(MultiIndexSet { dim, q, p, indices })
    }

    /// Total-degree set, `p = 1`.
    pub fn total_degree(dim: usize, q: usize) -> Result<Self> {
        Self::hyperbolic(dim, q as f64, 1.0)
    }

    /// Builds a set from explicit indices. Duplicates are rejected and the
    /// result is put in graded order; `q`, `p` are recorded as given.
    pub fn from_indices(dim: usize, q: f64, p: f64, mut indices: Vec<MultiIndex>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        if let Some(bad) = indices.iter().find(|i| i.dim() != dim) {
            return Err(Error::param(format!(
                "index {:?} has length {}, expected {dim}",
                bad.degrees(),
                bad.dim()
            )));
        }
        indices.sort_by(graded_order);
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("duplicate multi-index"));
        }
        if indices.first().is_none_or(|i| !i.is_zero()) {
            return Err(Error::param("index set must contain the zero index"));
        }
        Ok(MultiIndexSet { dim, q, p, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn contains(&self, idx: &MultiIndex) -> bool {
        self.indices
            .binary_search_by(|probe| graded_order(probe, idx))
            .is_ok()
    }

    /// Largest single-dimension degree over the set.
    pub fn max_degree(&self) -> usize {
        self.indices.iter().map(MultiIndex::max_degree).max().unwrap_or(0)
    }

    /// The first `len` indices in graded order.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.indices.len() {
            return Err(Error::param(format!(
                "prefix length {len} outside 1..={}",
                self.indices.len()
            )));
        }
        Ok(MultiIndexSet {
            dim: self.dim,
            q: self.q,
            p: self.p,
            indices: self.indices[..len].to_vec(),
        })
    }
}

impl<'a> IntoIterator for &'a MultiIndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}

fn validate(dim: usize, q: f64, p: f64) -> Result<()> {
    if dim < 1 {
        return Err(Error::param("dimension must be at least 1"));
    }
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::param(format!("degree bound q={q} must be finite and >= 0")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param(format!("hyperbolicity p={p} must lie in (0, 1]")));
    }
    Ok(())
}

fn enumerate(
    powers: &[f64],
    budget: f64,
    pos: usize,
    used: f64,
    current: &mut [usize],
    out: &mut Vec<MultiIndex>,
) {
    if pos == current.len() {
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    for (deg, &cost) in powers.iter().enumerate() {
        if used + cost > budget {
            break;
        }
        current[pos] = deg;
        enumerate(powers, budget, pos + 1, used + cost, current, out);
    }
    current[pos] = 0;
}

/// `binomial(l + q, q)`, the size of the total-degree set.
pub fn count_total_degree(dim: usize, q: usize) -> Result<u128> {
    if dim < 1 {
        return Err(Error::param("dimension must be at least 1"));
    }
    let mut acc: u128 = 1;
    for k in 1..=q as u128 {
        // acc * (dim + k) is divisible by k at every step.
        acc = acc
            .checked_mul(dim as u128 + k)
            .ok_or_else(|| Error::param("count overflows u128"))?
            / k;
    }
    Ok(acc)
}

/// Plain-text form: header `l q p`, then one index per line.
impl fmt::Display for MultiIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.dim, self.q, self.p)?;
        for idx in &self.indices {
            let line: Vec<String> = idx.0.iter().map(|d| d.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndexSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::format(1, "missing `l q p` header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::format(hline, "header must be `l q p`"));
        }
        let dim: usize = fields[0]
            .parse()
            .map_err(|_| Error::format(hline, "bad dimension"))?;
        let q: f64 = fields[1].parse().map_err(|_| Error::format(hline, "bad q"))?;
        let p: f64 = fields[2].parse().map_err(|_| Error::format(hline, "bad p"))?;
        validate(dim, q, p)?;
        let mut indices = Vec::new();
        for (n, line) in lines {
            let degs = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::format(n, "degrees must be non-negative integers"))?;
            if degs.len() != dim {
                return Err(Error::format(n, format!("expected {dim} degrees")));
            }
            indices.push(MultiIndex(degs));
        }
        MultiIndexSet::from_indices(dim, q, p, indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degs(set: &MultiIndexSet) -> Vec<Vec<usize>> {
        set.iter().map(|i| i.degrees().to_vec()).collect()
    }

    /// All β with β_i ≤ q, filtered by the hyperbolic inequality.
    fn brute_force(dim: usize, q: usize, p: f64) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let total = (q + 1).pow(dim as u32);
        for code in 0..total {
            let mut c = code;
            let mut beta = Vec::with_capacity(dim);
            for _ in 0..dim {
                beta.push(c % (q + 1));
                c /= q + 1;
            }
            let s: f64 = beta.iter().map(|&b| (b as f64).powf(p)).sum();
            if s <= (q as f64).powf(p) + 1e-12 {
                out.push(beta);
            }
        }
        out
    }

    #[test]
    fn total_degree_2d() {
        let set = MultiIndexSet::hyperbolic(2, 2.0, 1.0).unwrap();
        assert_eq!(
            degs(&set),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn forty_dims_half_power() {
        let set = MultiIndexSet::hyperbolic(40, 2.0, 0.5).unwrap();
        assert_eq!(set.len(), 81);
        assert!(set.indices()[0].is_zero());
        let singles1 = set.iter().filter(|i| i.total_degree() == 1).count();
        let singles2 = set
            .iter()
            .filter(|i| i.total_degree() == 2 && i.max_degree() == 2)
            .count();
        assert_eq!((singles1, singles2), (40, 40));
    }

    #[test]
    fn half_power_2d_matches_brute_force() {
        let set = MultiIndexSet::hyperbolic(2, 2.0, 0.5).unwrap();
        assert_eq!(
            degs(&set),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![0, 2]]
        );
        let mut bf = brute_force(2, 2, 0.5);
        let mut got = degs(&set);
        bf.sort();
        got.sort();
        assert_eq!(bf, got);
    }

    #[test]
    fn counts() {
        assert_eq!(count_total_degree(2, 2).unwrap(), 6);
        assert_eq!(count_total_degree(3, 2).unwrap(), 10);
        assert_eq!(count_total_degree(2, 4).unwrap(), 15);
        assert_eq!(count_total_degree(1, 0).unwrap(), 1);
    }

    #[test]
    fn count_matches_enumeration() {
        for dim in 1..=6 {
            for q in 0..=6 {
                let bf = brute_force(dim, q, 1.0).len() as u128;
                assert_eq!(count_total_degree(dim, q).unwrap(), bf, "l={dim} q={q}");
                assert_eq!(MultiIndexSet::total_degree(dim, q).unwrap().len() as u128, bf);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MultiIndexSet::hyperbolic(0, 2.0, 1.0).is_err());
        assert!(MultiIndexSet::hyperbolic(2, 2.0, 0.0).is_err());
        assert!(MultiIndexSet::hyperbolic(2, 2.0, 1.5).is_err());
        assert!(MultiIndexSet::hyperbolic(2, -1.0, 1.0).is_err());
        assert!(count_total_degree(0, 3).is_err());
    }

    #[test]
    fn zero_degree_bound_is_constant_only() {
        let set = MultiIndexSet::hyperbolic(3, 0.0, 0.7).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.indices()[0].is_zero());
    }

    #[test]
    fn text_round_trip() {
        let set = MultiIndexSet::hyperbolic(3, 3.0, 0.6).unwrap();
        let text = set.to_string();
        assert!(text.starts_with("3 3 0.6\n"));
        let back: MultiIndexSet = text.parse().unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!("2 2".parse::<MultiIndexSet>().is_err());
        assert!("2 2 1\n0 0\n1".parse::<MultiIndexSet>().is_err());
        assert!("2 2 1\n0 0\n0 0".parse::<MultiIndexSet>().is_err());
        assert!("2 2 1\n1 0".parse::<MultiIndexSet>().is_err());
    }

    #[test]
    fn prefix_and_contains() {
        let set = MultiIndexSet::total_degree(2, 3).unwrap();
        let pre = set.prefix(3).unwrap();
        assert_eq!(degs(&pre), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        assert!(set.contains(&MultiIndex::new(vec![1, 2])));
        assert!(!set.contains(&MultiIndex::new(vec![2, 2])));
        assert!(set.prefix(0).is_err());
        assert!(set.prefix(11).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn nested_in_q(dim in 1usize..5, q1 in 0usize..5, dq in 0usize..3, p in 0.2f64..=1.0) {
                let small = MultiIndexSet::hyperbolic(dim, q1 as f64, p).unwrap();
                let big = MultiIndexSet::hyperbolic(dim, (q1 + dq) as f64, p).unwrap();
                for idx in &small {
                    prop_assert!(big.contains(idx));
                }
            }

            #[test]
            fn downward_closed(dim in 1usize..5, q in 0usize..6, p in 0.2f64..=1.0) {
                let set = MultiIndexSet::hyperbolic(dim, q as f64, p).unwrap();
                for idx in &set {
                    prop_assert!(idx.hyperbolic_norm(p) <= (q as f64).powf(p) + BOUNDARY_TOL);
                    for k in 0..dim {
                        if idx.degrees()[k] > 0 {
                            let mut lower = idx.degrees().to_vec();
                            lower[k] -= 1;
                            prop_assert!(set.contains(&MultiIndex::new(lower)));
                        }
                    }
                }
            }

            #[test]
            fn agrees_with_brute_force(dim in 1usize..4, q in 0usize..5, p in 0.2f64..=1.0) {
                let mut bf = brute_force(dim, q, p);
                let mut got = degs(&MultiIndexSet::hyperbolic(dim, q as f64, p).unwrap());
                bf.sort();
                got.sort();
                prop_assert_eq!(bf, got);
            }
        }
    }
}
