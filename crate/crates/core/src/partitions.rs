//! Partitions, compositions and multipartitions.
//!
//! Partitions are stored as explicit weakly decreasing part sequences. The
//! canonical enumeration order everywhere in the crate is reverse
//! lexicographic: `(4), (3,1), (2,2), (2,1,1), (1,1,1,1)`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// A weakly decreasing sequence of positive integers.
///
/// The derived `Ord` is lexicographic on the part sequence, so reverse
/// lexicographic order is simply descending order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Partition {
    parts: Vec<usize>,
    size: usize,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::invalid(format!("partition {parts:?} has a zero part")));
        }
        if !parts.windows(2).all(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!("partition {parts:?} is not weakly decreasing")));
        }
        let size = parts.iter().sum();
        Ok(Partition { parts, size })
    }

    /// Sorts the parts and drops zeros. Used to collapse compositions onto
    /// the partition obtained by permuting their parts.
    pub fn from_unsorted(mut parts: Vec<usize>) -> Self {
        parts.retain(|&p| p != 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let size = parts.iter().sum();
        Partition { parts, size }
    }

    pub fn empty() -> Self {
        Partition::default()
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// The integer being partitioned.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Part `k` (0-based), or 0 past the end.
    pub fn part(&self, k: usize) -> usize {
        self.parts.get(k).copied().unwrap_or(0)
    }

    /// Multiplicity of the part `i`.
    pub fn multiplicity(&self, i: usize) -> usize {
        self.parts.iter().filter(|&&p| p == i).count()
    }

    /// Transpose of the Young diagram.
    pub fn conjugate(&self) -> Partition {
        let first = self.part(0);
        let parts: Vec<usize> = (1..=first)
            .map(|c| self.parts.iter().take_while(|&&p| p >= c).count())
            .collect();
        Partition {
            parts,
            size: self.size,
        }
    }

    /// Dominance order: every prefix sum of `self` is at most that of `other`.
    pub fn dominance_leq(&self, other: &Partition) -> Result<bool> {
        if self.size != other.size {
            return Err(Error::invalid(format!(
                "dominance order compares partitions of equal size, got {} and {}",
                self.size, other.size
            )));
        }
        let len = self.len().max(other.len());
        let (mut a, mut b) = (0, 0);
        for k in 0..len {
            a += self.part(k);
            b += other.part(k);
            if a > b {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Hook lengths of every cell, row by row.
    pub fn hook_lengths(&self) -> Vec<usize> {
        let conj = self.conjugate();
        let mut hooks = Vec::with_capacity(self.size);
        for (r, &row) in self.parts.iter().enumerate() {
            for c in 0..row {
                hooks.push((row - c - 1) + (conj.part(c) - r - 1) + 1);
            }
        }
        hooks
    }

    /// Dimension of the irreducible symmetric-group representation labelled
    /// by `self`, i.e. `|λ|! / Π hooks`.
    pub fn hook_dim(&self) -> BigUint {
        let prod = self
            .hook_lengths()
            .into_iter()
            .fold(BigUint::one(), |acc, h| acc * BigUint::from(h));
        factorial(self.size) / prod
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition{self}")
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.parts.serialize(s)
    }
}

/// A finite sequence of positive integers. The empty composition has size 0.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Composition {
    parts: Vec<usize>,
    size: usize,
}

impl Serialize for Composition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.parts.serialize(s)
    }
}

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if let Some(pos) = parts.iter().position(|&p| p == 0) {
            return Err(Error::invalid(format!(
                "composition {parts:?} has a zero part at position {pos}"
            )));
        }
        let size = parts.iter().sum();
        Ok(Composition { parts, size })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// The partition obtained by sorting the parts.
    pub fn sorted(&self) -> Partition {
        Partition::from_unsorted(self.parts.clone())
    }
}

/// An `m`-tuple of partitions; components may be empty.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
#[serde(transparent)]
pub struct MultiPartition {
    components: Vec<Partition>,
}

impl MultiPartition {
    pub fn new(components: Vec<Partition>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("a multipartition needs at least one component"));
        }
        Ok(MultiPartition { components })
    }

    pub fn components(&self) -> &[Partition] {
        &self.components
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    /// `(|λ_1|, …, |λ_m|)`.
    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(Partition::size).collect()
    }

    pub fn total(&self) -> usize {
        self.components.iter().map(Partition::size).sum()
    }

    /// Dimension of the outer tensor product of the factor irreducibles.
    pub fn dim(&self) -> BigUint {
        self.components
            .iter()
            .fold(BigUint::one(), |acc, p| acc * p.hook_dim())
    }
}

impl fmt::Display for MultiPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, p) in self.components.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

pub fn conjugate(lambda: &Partition) -> Partition {
    lambda.conjugate()
}

pub fn dominance_leq(lambda: &Partition, mu: &Partition) -> Result<bool> {
    lambda.dominance_leq(mu)
}

pub fn hook_dim(lambda: &Partition) -> BigUint {
    lambda.hook_dim()
}

pub fn multipartition_dim(lambda: &MultiPartition) -> BigUint {
    lambda.dim()
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Number of partitions of `n`, with `p(0) = 1`.
///
/// Counts partitions with largest part at most `k` by the usual coin-change
/// recurrence; this is independent of the pentagonal-number recurrence used
/// in the tests.
pub fn p_count(n: usize) -> BigUint {
    partition_counts(n).pop().unwrap_or_else(BigUint::one)
}

/// `[p(0), p(1), …, p(n)]`.
pub fn partition_counts(n: usize) -> Vec<BigUint> {
    let mut table = vec![BigUint::zero(); n + 1];
    table[0] = BigUint::one();
    for part in 1..=n {
        for total in part..=n {
            let add = table[total - part].clone();
            table[total] += add;
        }
    }
    table
}

/// All partitions of `n` in reverse lexicographic order.
pub fn enumerate_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    descend(n, n, &mut current, &mut out);
    out
}

fn descend(remaining: usize, max_part: usize, current: &mut Vec<usize>, out: &mut Vec<Partition>) {
    if remaining == 0 {
        out.push(Partition {
            parts: current.clone(),
            size: current.iter().sum(),
        });
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        current.push(part);
        descend(remaining - part, part, current, out);
        current.pop();
    }
}

/// All compositions of `n` (positive parts), lexicographically descending.
pub fn enumerate_compositions(n: usize) -> Vec<Composition> {
    fn go(remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Composition>) {
        if remaining == 0 {
            out.push(Composition::new(current.clone()).expect("positive parts"));
            return;
        }
        for part in (1..=remaining).rev() {
            current.push(part);
            go(remaining - part, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    go(n, &mut Vec::new(), &mut out);
    out
}

/// All `m`-tuples of nonnegative integers summing to `n`, reverse
/// lexicographic (`(n,0,…,0)` first).
pub fn weak_compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(remaining: usize, slots: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            current.push(remaining);
            out.push(current.clone());
            current.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            current.push(first);
            go(remaining - first, slots - 1, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(n, m, &mut Vec::new(), &mut out);
    out
}

/// Cartesian product of [`enumerate_partitions`] over the entries of `sizes`,
/// first component varying slowest.
pub fn enumerate_multipartitions(sizes: &[usize]) -> Vec<MultiPartition> {
    let factors: Vec<Vec<Partition>> = sizes.iter().map(|&n| enumerate_partitions(n)).collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(sizes.len());
    product(&factors, &mut current, &mut out);
    out
}

fn product(factors: &[Vec<Partition>], current: &mut Vec<Partition>, out: &mut Vec<MultiPartition>) {
    let depth = current.len();
    if depth == factors.len() {
        out.push(MultiPartition {
            components: current.clone(),
        });
        return;
    }
    for p in &factors[depth] {
        current.push(p.clone());
        product(factors, current, out);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_parts() {
        assert!(Partition::new(vec![1, 2]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
        assert!(Composition::new(vec![1, 0, 2]).is_err());
        assert_eq!(part(&[]).size(), 0);
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(part(&[]).conjugate(), part(&[]));
        assert_eq!(part(&[2, 1]).conjugate(), part(&[2, 1]));
        assert_eq!(part(&[3]).conjugate(), part(&[1, 1, 1]));
        assert_eq!(part(&[4, 2, 1]).conjugate(), part(&[3, 2, 1, 1]));
    }

    #[test]
    fn p_count_examples() {
        assert_eq!(p_count(0), BigUint::from(1u32));
        assert_eq!(p_count(1), BigUint::from(1u32));
        assert_eq!(p_count(4), BigUint::from(5u32));
        assert_eq!(p_count(100), "190569292".parse().unwrap());
    }

    #[test]
    fn enumerate_partitions_examples() {
        assert_eq!(enumerate_partitions(0), vec![part(&[])]);
        assert_eq!(enumerate_partitions(2), vec![part(&[2]), part(&[1, 1])]);
        let four = enumerate_partitions(4);
        assert_eq!(
            four,
            vec![part(&[4]), part(&[3, 1]), part(&[2, 2]), part(&[2, 1, 1]), part(&[1, 1, 1, 1])]
        );
    }

    #[test]
    fn dominance_examples() {
        assert!(part(&[1, 1, 1]).dominance_leq(&part(&[3])).unwrap());
        assert!(!part(&[3]).dominance_leq(&part(&[1, 1, 1])).unwrap());
        assert!(part(&[2, 2]).dominance_leq(&part(&[3, 1])).unwrap());
        assert!(part(&[2]).dominance_leq(&part(&[1])).is_err());
    }

    #[test]
    fn hook_dim_examples() {
        assert_eq!(part(&[5]).hook_dim(), BigUint::from(1u32));
        assert_eq!(part(&[1, 1, 1]).hook_dim(), BigUint::from(1u32));
        assert_eq!(part(&[2, 1]).hook_dim(), BigUint::from(2u32));
        assert_eq!(part(&[3, 2]).hook_dim(), BigUint::from(5u32));
    }

    #[test]
    fn multipartition_examples() {
        let one = enumerate_multipartitions(&[1, 1]);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].components(), &[part(&[1]), part(&[1])]);

        let two = enumerate_multipartitions(&[2, 0]);
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].components(), &[part(&[2]), part(&[])]);
        assert_eq!(two[1].components(), &[part(&[1, 1]), part(&[])]);

        assert_eq!(enumerate_multipartitions(&[2, 2]).len(), 4);

        let mp = |a: &[usize], b: &[usize]| MultiPartition::new(vec![part(a), part(b)]).unwrap();
        assert_eq!(mp(&[1], &[1]).dim(), BigUint::from(1u32));
        assert_eq!(mp(&[2, 1], &[1]).dim(), BigUint::from(2u32));
        assert_eq!(mp(&[2, 1], &[2, 1]).dim(), BigUint::from(4u32));
    }

    #[test]
    fn weak_compositions_order() {
        assert_eq!(weak_compositions(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(weak_compositions(0, 3), vec![vec![0, 0, 0]]);
        assert_eq!(enumerate_compositions(3).len(), 4);
    }

    /// Standard Young tableaux counted by removing corners recursively.
    fn count_syt(parts: &mut Vec<usize>) -> u64 {
        if parts.iter().all(|&p| p == 0) {
            return 1;
        }
        let mut total = 0;
        for r in 0..parts.len() {
            let next = if r + 1 < parts.len() { parts[r + 1] } else { 0 };
            if parts[r] > next {
                parts[r] -= 1;
                total += count_syt(parts);
                parts[r] += 1;
            }
        }
        total
    }

    #[test]
    fn hook_dim_counts_standard_tableaux() {
        for n in 0..=8 {
            for lambda in enumerate_partitions(n) {
                let expected = count_syt(&mut lambda.parts().to_vec());
                assert_eq!(lambda.hook_dim(), BigUint::from(expected), "{lambda}");
            }
        }
    }

    #[test]
    fn conjugate_is_involution() {
        for n in 0..=12 {
            for lambda in enumerate_partitions(n) {
                assert_eq!(lambda.conjugate().conjugate(), lambda);
                assert_eq!(lambda.conjugate().size(), n);
            }
        }
    }

    #[test]
    fn dominance_is_partial_order_and_reversed_by_conjugation() {
        for n in 0..=10 {
            let all = enumerate_partitions(n);
            for a in &all {
                assert!(a.dominance_leq(a).unwrap());
                for b in &all {
                    let ab = a.dominance_leq(b).unwrap();
                    let ba = b.dominance_leq(a).unwrap();
                    if ab && ba {
                        assert_eq!(a, b);
                    }
                    assert_eq!(ab, b.conjugate().dominance_leq(&a.conjugate()).unwrap());
                }
            }
            // Transitivity is cubic; n <= 7 keeps it quick while covering the small cases.
            if n <= 7 {
                for a in &all {
                    for b in &all {
                        if !a.dominance_leq(b).unwrap() {
                            continue;
                        }
                        for c in &all {
                            if b.dominance_leq(c).unwrap() {
                                assert!(a.dominance_leq(c).unwrap());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dominance_transitive_up_to_ten() {
        for n in 8..=10 {
            let all = enumerate_partitions(n);
            let leq: Vec<Vec<bool>> = all
                .iter()
                .map(|a| all.iter().map(|b| a.dominance_leq(b).unwrap()).collect())
                .collect();
            for i in 0..all.len() {
                for j in 0..all.len() {
                    if !leq[i][j] {
                        continue;
                    }
                    for k in 0..all.len() {
                        if leq[j][k] {
                            assert!(leq[i][k]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sum_of_squared_dims_is_factorial() {
        for n in 0..=10 {
            let total = enumerate_partitions(n)
                .iter()
                .fold(BigUint::zero(), |acc, l| {
                    let d = l.hook_dim();
                    acc + &d * &d
                });
            assert_eq!(total, factorial(n));
        }
    }

    /// Euler's pentagonal recurrence, written independently of `p_count`.
    fn pentagonal(n: usize) -> Vec<BigUint> {
        let mut p: Vec<num_bigint::BigInt> = vec![num_bigint::BigInt::from(1)];
        for m in 1..=n as i64 {
            let mut acc = num_bigint::BigInt::from(0);
            let mut k: i64 = 1;
            loop {
                let g1 = k * (3 * k - 1) / 2;
                if g1 > m {
                    break;
                }
                let sign = if k % 2 == 1 { 1 } else { -1 };
                acc += &p[(m - g1) as usize] * sign;
                let g2 = k * (3 * k + 1) / 2;
                if g2 <= m {
                    acc += &p[(m - g2) as usize] * sign;
                }
                k += 1;
            }
            p.push(acc);
        }
        p.into_iter().map(|x| x.to_biguint().unwrap()).collect()
    }

    #[test]
    fn p_count_matches_enumeration_and_pentagonal() {
        for n in 0..=40 {
            assert_eq!(BigUint::from(enumerate_partitions(n).len()), p_count(n));
        }
        assert_eq!(partition_counts(200), pentagonal(200));
    }

    #[test]
    fn enumeration_is_strictly_descending() {
        for n in 0..=15 {
            let all = enumerate_partitions(n);
            assert!(all.windows(2).all(|w| w[0] > w[1]));
        }
    }
}
