//! Multiplicity tables, sheaf label counts, top-homology bases and
//! Schur-algebra dimensions.
//!
//! Simple perverse sheaves are represented only by their multipartition
//! labels and multiplicity spaces only by their dimensions.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::binomial;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::orbit_calculus::{MultiComposition, OrbitMatrix};
use crate::partitions::{
    enumerate_compositions, enumerate_multipartitions, factorial, p_count, weak_compositions, MultiPartition,
    Partition,
};
use crate::serde_big;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionRow {
    pub label: MultiPartition,
    #[serde(serialize_with = "serde_big::biguint")]
    pub multiplicity: BigUint,
}

/// Labels and multiplicities of the summands of `L_1̲`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionTable {
    pub nu_parts: Vec<usize>,
    pub rows: Vec<DecompositionRow>,
    #[serde(serialize_with = "serde_big::biguint")]
    pub sum_of_squares: BigUint,
    #[serde(serialize_with = "serde_big::biguint")]
    pub group_order: BigUint,
}

impl DecompositionTable {
    /// Σ multiplicity² = Π ν_i!, recomputed from the rows.
    pub fn checksum_holds(&self) -> bool {
        let sum: BigUint = self.rows.iter().map(|r| &r.multiplicity * &r.multiplicity).sum();
        sum == self.group_order && sum == self.sum_of_squares
    }
}

pub fn decompose_l1(nu_parts: &[usize]) -> DecompositionTable {
    let rows: Vec<DecompositionRow> = enumerate_multipartitions(nu_parts)
        .into_iter()
        .map(|label| {
            let multiplicity = label.dim();
            DecompositionRow { label, multiplicity }
        })
        .collect();
    let sum_of_squares = rows.iter().map(|r| &r.multiplicity * &r.multiplicity).sum();
    DecompositionTable {
        nu_parts: nu_parts.to_vec(),
        rows,
        sum_of_squares,
        group_order: htop_dim(nu_parts),
    }
}

/// `Σ_{ν_1+…+ν_m = ν} p(ν_1)⋯p(ν_m)`.
pub fn count_sheaves(nu: usize, m: usize) -> BigUint {
    weak_compositions(nu, m)
        .iter()
        .map(|c| c.iter().fold(BigUint::one(), |acc, &n| acc * p_count(n)))
        .sum()
}

/// `Π ν_i!`.
pub fn htop_dim(nu_parts: &[usize]) -> BigUint {
    nu_parts.iter().fold(BigUint::one(), |acc, &n| acc * factorial(n))
}

/// Block-diagonal permutation matrices of Θ(1̲), built directly as products
/// of per-block permutations and returned in Θ's canonical order.
pub fn htop_basis(nu_parts: &[usize]) -> Vec<OrbitMatrix> {
    let shape = MultiComposition::all_ones(nu_parts).expect("at least one block");
    let n: usize = nu_parts.iter().sum();
    let per_block: Vec<Vec<Vec<usize>>> = nu_parts.iter().map(|&k| permutations(k)).collect();
    let mut out = Vec::new();
    let mut choice = Vec::with_capacity(nu_parts.len());
    collect_block_perms(&per_block, nu_parts, n, &shape, &mut choice, &mut out);
    out.sort_by(|a, b| a.entries().cmp(b.entries()));
    out
}

fn collect_block_perms(
    per_block: &[Vec<Vec<usize>>],
    sizes: &[usize],
    n: usize,
    shape: &MultiComposition,
    choice: &mut Vec<usize>,
    out: &mut Vec<OrbitMatrix>,
) {
    if choice.len() == per_block.len() {
        let mut entries = vec![0; n * n];
        let mut offset = 0;
        for (b, &c) in choice.iter().enumerate() {
            for (row, &col) in per_block[b][c].iter().enumerate() {
                entries[(offset + row) * n + offset + col] = 1;
            }
            offset += sizes[b];
        }
        out.push(OrbitMatrix::new(shape.clone(), entries).expect("permutation matrix"));
        return;
    }
    for c in 0..per_block[choice.len()].len() {
        choice.push(c);
        collect_block_perms(per_block, sizes, n, shape, choice, out);
        choice.pop();
    }
}

/// All permutations of `0..k` in lexicographic order.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(used: &mut Vec<bool>, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == used.len() {
            out.push(current.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                current.push(v);
                go(used, current, out);
                current.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut vec![false; k], &mut Vec::new(), &mut out);
    out
}

/// Dimension of the Schur algebra `S(N, ν)`: the number of `N × N`
/// nonnegative integer matrices with entry sum `ν`.
pub fn schur_dim(n: usize, nu: usize) -> BigUint {
    assert!(n >= 1, "schur_dim needs N >= 1");
    binomial(BigUint::from(n * n + nu - 1), BigUint::from(nu))
}

/// `Π_i dim S(N, ν_i)`.
pub fn z_htop_dim(n: usize, nu_parts: &[usize]) -> BigUint {
    nu_parts.iter().fold(BigUint::one(), |acc, &k| acc * schur_dim(n, k))
}

/// The canonical sheaf label set, with a certificate of how many ordered
/// multi-compositions collapsed onto each label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SheafIndex {
    pub nu: usize,
    pub m: usize,
    pub labels: Vec<MultiPartition>,
    /// Number of ordered block refinements enumerated.
    pub compositions_seen: usize,
    /// Refinements that sorted onto an already-seen label.
    pub collapsed: usize,
}

impl SheafIndex {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Enumerates every ordered `m`-tuple of compositions of total size `ν`
/// (empty blocks allowed), sorts each block into a partition and keeps each
/// resulting label once.
pub fn sheaf_index(nu: usize, m: usize) -> SheafIndex {
    let mut labels = BTreeSet::new();
    let mut seen = 0;
    for sizes in weak_compositions(nu, m) {
        let per_block: Vec<Vec<Vec<usize>>> = sizes
            .iter()
            .map(|&s| {
                if s == 0 {
                    vec![Vec::new()]
                } else {
                    enumerate_compositions(s).into_iter().map(|c| c.parts().to_vec()).collect()
                }
            })
            .collect();
        let mut current: Vec<Partition> = Vec::with_capacity(m);
        walk(&per_block, &mut current, &mut |label| {
            seen += 1;
            labels.insert(label);
        });
    }
    let labels: Vec<MultiPartition> = labels.into_iter().collect();
    SheafIndex {
        nu,
        m,
        collapsed: seen - labels.len(),
        compositions_seen: seen,
        labels,
    }
}

fn walk(per_block: &[Vec<Vec<usize>>], current: &mut Vec<Partition>, emit: &mut dyn FnMut(MultiPartition)) {
    let depth = current.len();
    if depth == per_block.len() {
        if let Ok(label) = MultiPartition::new(current.clone()) {
            emit(label);
        }
        return;
    }
    for comp in &per_block[depth] {
        current.push(Partition::from_unsorted(comp.clone()));
        walk(per_block, current, emit);
        current.pop();
    }
}

/// Total number of ordered multi-compositions of `ν` into `m` possibly empty
/// blocks: `Σ Π 2^{ν_i − 1}` (with `2^{-1}` read as 1 for empty blocks).
pub fn count_ordered_refinements(nu: usize, m: usize) -> BigUint {
    weak_compositions(nu, m)
        .iter()
        .map(|c| {
            c.iter().fold(BigUint::one(), |acc, &k| {
                if k == 0 {
                    acc
                } else {
                    acc << (k - 1)
                }
            })
        })
        .fold(BigUint::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit_calculus::enumerate_theta;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn decompose_examples() {
        let t = decompose_l1(&[1, 1]);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].multiplicity, big(1));
        assert!(t.checksum_holds());

        let t = decompose_l1(&[2]);
        let mults: Vec<_> = t.rows.iter().map(|r| r.multiplicity.clone()).collect();
        assert_eq!(mults, vec![big(1), big(1)]);
        assert_eq!(t.sum_of_squares, big(2));

        let t = decompose_l1(&[3]);
        let mults: Vec<_> = t.rows.iter().map(|r| r.multiplicity.clone()).collect();
        assert_eq!(mults, vec![big(1), big(2), big(1)]);
        assert_eq!(t.sum_of_squares, big(6));
    }

    #[test]
    fn count_sheaves_examples() {
        assert_eq!(count_sheaves(0, 3), big(1));
        assert_eq!(count_sheaves(2, 2), big(5));
        assert_eq!(count_sheaves(4, 2), big(20));
    }

    #[test]
    fn htop_examples() {
        assert_eq!(htop_dim(&[1, 1]), big(1));
        let b = htop_basis(&[1, 1]);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].entries(), &[1, 0, 0, 1]);
        assert_eq!(htop_dim(&[2, 1]), big(2));
        assert_eq!(htop_basis(&[2, 1]).len(), 2);
        assert_eq!(htop_dim(&[2, 2]), big(4));
    }

    #[test]
    fn schur_examples() {
        assert_eq!(schur_dim(1, 5), big(1));
        assert_eq!(schur_dim(2, 2), big(10));
        assert_eq!(schur_dim(2, 1), big(4));
        assert_eq!(z_htop_dim(2, &[2, 1]), big(40));
    }

    #[test]
    fn sheaf_index_examples() {
        let s = sheaf_index(1, 1);
        assert_eq!(s.labels.len(), 1);
        assert_eq!(s.labels[0].to_string(), "((1))");

        let s = sheaf_index(2, 1);
        let labels: Vec<String> = s.labels.iter().map(ToString::to_string).collect();
        assert_eq!(labels, vec!["((1,1))", "((2))"]);
        assert_eq!(s.compositions_seen, 2);
        assert_eq!(s.collapsed, 0);

        let s = sheaf_index(3, 1);
        assert_eq!(s.compositions_seen, 4);
        assert_eq!(s.collapsed, 1);

        assert_eq!(sheaf_index(3, 2).len(), 10);
    }

    #[test]
    fn wedderburn_count() {
        fn all_tuples(max: usize, m: usize) -> Vec<Vec<usize>> {
            if m == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for rest in all_tuples(max, m - 1) {
                for k in 0..=max {
                    let mut v = rest.clone();
                    v.push(k);
                    out.push(v);
                }
            }
            out
        }
        for m in 1..=3 {
            for nu in all_tuples(5, m) {
                if m == 3 && nu.iter().sum::<usize>() > 9 {
                    continue;
                }
                assert!(decompose_l1(&nu).checksum_holds(), "{nu:?}");
            }
        }
    }

    #[test]
    fn htop_basis_matches_filtered_theta() {
        for nu in 1..=7 {
            for m in 1..=3 {
                for sizes in weak_compositions(nu, m) {
                    let basis = htop_basis(&sizes);
                    assert_eq!(BigUint::from(basis.len()), htop_dim(&sizes));
                    for b in &basis {
                        assert!(b.is_block_diagonal());
                        assert!(b.entries().iter().all(|&e| e <= 1));
                    }
                    if nu <= 6 {
                        let shape = MultiComposition::all_ones(&sizes).unwrap();
                        let filtered: Vec<OrbitMatrix> = enumerate_theta(&shape, 8)
                            .unwrap()
                            .into_iter()
                            .filter(OrbitMatrix::is_block_diagonal)
                            .collect();
                        assert_eq!(filtered, basis);
                    }
                }
            }
        }
    }

    #[test]
    fn sheaf_index_agrees_with_counts() {
        for nu in 0..=10 {
            for m in 1..=4 {
                let idx = sheaf_index(nu, m);
                assert_eq!(BigUint::from(idx.len()), count_sheaves(nu, m));
                assert_eq!(BigUint::from(idx.compositions_seen), count_ordered_refinements(nu, m));
                let direct: usize = weak_compositions(nu, m)
                    .iter()
                    .map(|s| enumerate_multipartitions(s).len())
                    .sum();
                assert_eq!(idx.len(), direct);
            }
        }
    }

    #[test]
    fn schur_dim_matches_brute_force() {
        for n in 1..=3 {
            for nu in 0..=6 {
                // Assign the first N² − 1 cells freely; the last one is forced.
                let mut count = 0u64;
                let cells = n * n;
                let mut stack = vec![(0usize, 0usize)];
                while let Some((cell, used)) = stack.pop() {
                    if cell + 1 == cells {
                        count += 1;
                        continue;
                    }
                    for v in 0..=(nu - used) {
                        stack.push((cell + 1, used + v));
                    }
                }
                assert_eq!(schur_dim(n, nu), big(count), "N={n} nu={nu}");
            }
        }
    }
}
