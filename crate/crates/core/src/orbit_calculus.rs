//! Multi-compositions, the relative-position set Θ and stratum dimensions.
//!
//! A multi-composition `→ν = (ν̲_1, …, ν̲_m)` is flattened once into its
//! refined part sequence in lexicographic `(i, j)` order. Every formula below
//! works on flattened positions, so the boundary conventions for flags
//! (`V_{i,a_i+1} = V_{i+1,1}`) never need special cases.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::partitions::{p_count, weak_compositions, Composition, MultiPartition};
use crate::{Error, Result};

/// Default upper bound on `ν` for [`enumerate_theta`].
pub const DEFAULT_THETA_BOUND: usize = 8;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiComposition {
    blocks: Vec<Composition>,
    refined: Vec<usize>,
    block_of: Vec<usize>,
    block_sizes: Vec<usize>,
    total: usize,
}

impl MultiComposition {
    /// Builds `→ν` from its blocks. Parts must be positive.
    ///
    /// A block may be empty, which means `ν_i = 0` and `V_i = V_{i+1}`; this
    /// is how multipartitions with empty components are viewed as flag
    /// types.
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("a multi-composition needs at least one block"));
        }
        let blocks = blocks
            .into_iter()
            .map(Composition::new)
            .collect::<Result<Vec<_>>>()?;
        let mut refined = Vec::new();
        let mut block_of = Vec::new();
        for (i, block) in blocks.iter().enumerate() {
            for &part in block.parts() {
                refined.push(part);
                block_of.push(i);
            }
        }
        let block_sizes = blocks.iter().map(Composition::size).collect();
        let total = refined.iter().sum();
        Ok(MultiComposition {
            blocks,
            refined,
            block_of,
            block_sizes,
            total,
        })
    }

    /// The multi-composition whose blocks are the parts of `λ̲`.
    pub fn from_multipartition(lambda: &MultiPartition) -> Self {
        Self::new(lambda.components().iter().map(|p| p.parts().to_vec()).collect())
            .expect("partition parts are positive")
    }

    /// `1̲`: every block refined into parts equal to 1.
    pub fn all_ones(sizes: &[usize]) -> Result<Self> {
        Self::new(sizes.iter().map(|&n| vec![1; n]).collect())
    }

    pub fn blocks(&self) -> &[Composition] {
        &self.blocks
    }

    /// Number of blocks `m`.
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// Refined parts `ν_{i,j}` in lexicographic order.
    pub fn refined(&self) -> &[usize] {
        &self.refined
    }

    /// Block index `i` (0-based) of each refined position.
    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    /// `(ν_1, …, ν_m)`.
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// `ν`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Flattened position of `(i, j)` (both 0-based).
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.m() || j >= self.blocks[i].len() {
            return None;
        }
        Some(self.blocks[..i].iter().map(Composition::len).sum::<usize>() + j)
    }

    /// True when every block has exactly one part.
    pub fn blocks_are_single_parts(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    /// The refined sequence reversed, as a single-block multi-composition.
    pub fn reversed_refinement(&self) -> MultiComposition {
        let mut r = self.refined.clone();
        r.reverse();
        MultiComposition::new(vec![r]).expect("positive parts")
    }
}

impl fmt::Display for MultiComposition {
    /// Blocks separated by `;`, parts by `,`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            for (j, p) in b.parts().iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{p}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for MultiComposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.blocks.serialize(s)
    }
}

/// The framing composition `d̲ = (d_1, …, d_m)`; only the last part may be 0.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FramingComposition {
    parts: Vec<usize>,
    total: usize,
}

impl FramingComposition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("a framing composition needs at least one part"));
        }
        if let Some(pos) = parts[..parts.len() - 1].iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!(
                "framing part d_{} is zero; only the last part may vanish",
                pos + 1
            )));
        }
        let total = parts.iter().sum();
        Ok(FramingComposition { parts, total })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn m(&self) -> usize {
        self.parts.len()
    }

    /// `d`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Every admissible framing with `m` parts and entries at most `max_entry`.
    pub fn enumerate(m: usize, max_entry: usize) -> Vec<FramingComposition> {
        let mut out = Vec::new();
        let mut current = vec![0; m];
        fn go(k: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<FramingComposition>) {
            if k == cur.len() {
                out.push(FramingComposition::new(cur.clone()).expect("admissible by construction"));
                return;
            }
            let lo = if k + 1 == cur.len() { 0 } else { 1 };
            for d in lo..=max {
                cur[k] = d;
                go(k + 1, max, cur, out);
            }
        }
        if m > 0 {
            go(0, max_entry, &mut current, &mut out);
        }
        out
    }
}

impl fmt::Display for FramingComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl Serialize for FramingComposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.parts.serialize(s)
    }
}

fn check_same_m(shape: &MultiComposition, framing: &FramingComposition) -> Result<()> {
    if shape.m() != framing.m() {
        return Err(Error::invalid(format!(
            "multi-composition has {} blocks but framing has {} parts",
            shape.m(),
            framing.m()
        )));
    }
    Ok(())
}

/// A square matrix of relative positions with both margins equal to the
/// refined parts of its shape.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OrbitMatrix {
    shape: MultiComposition,
    entries: Vec<usize>,
}

impl OrbitMatrix {
    /// `entries` is row-major of side `shape.refined().len()`.
    pub fn new(shape: MultiComposition, entries: Vec<usize>) -> Result<Self> {
        let n = shape.refined().len();
        if entries.len() != n * n {
            return Err(Error::invalid(format!(
                "orbit matrix for {n} refined parts needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for s in 0..n {
            let row: usize = entries[s * n..(s + 1) * n].iter().sum();
            if row != shape.refined()[s] {
                return Err(Error::invalid(format!(
                    "row {s} sums to {row}, expected {}",
                    shape.refined()[s]
                )));
            }
            let col: usize = (0..n).map(|r| entries[r * n + s]).sum();
            if col != shape.refined()[s] {
                return Err(Error::invalid(format!(
                    "column {s} sums to {col}, expected {}",
                    shape.refined()[s]
                )));
            }
        }
        Ok(OrbitMatrix { shape, entries })
    }

    pub fn from_rows(shape: MultiComposition, rows: &[Vec<usize>]) -> Result<Self> {
        Self::new(shape, rows.iter().flatten().copied().collect())
    }

    pub fn shape(&self) -> &MultiComposition {
        &self.shape
    }

    /// Side length (number of refined parts).
    pub fn side(&self) -> usize {
        self.shape.refined().len()
    }

    pub fn entry(&self, s: usize, t: usize) -> usize {
        self.entries[s * self.side() + t]
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        let n = self.side();
        if n == 0 {
            return Vec::new();
        }
        self.entries.chunks(n).map(<[usize]>::to_vec).collect()
    }

    pub fn transpose(&self) -> OrbitMatrix {
        let n = self.side();
        let mut entries = vec![0; n * n];
        for s in 0..n {
            for t in 0..n {
                entries[t * n + s] = self.entry(s, t);
            }
        }
        OrbitMatrix {
            shape: self.shape.clone(),
            entries,
        }
    }

    fn cells(&self) -> Vec<(usize, usize, usize)> {
        let n = self.side();
        let mut cells = Vec::new();
        for s in 0..n {
            for t in 0..n {
                let v = self.entry(s, t);
                if v != 0 {
                    cells.push((s, t, v));
                }
            }
        }
        cells
    }

    /// Dimension of the diagonal-group orbit `O_M` in pairs of flags: the
    /// sum of `m_c · m_{c'}` over ordered pairs of cells whose row or column
    /// index strictly decreases from `c` to `c'`.
    pub fn dim_orbit(&self) -> usize {
        let cells = self.cells();
        let mut total = 0;
        for &(s, t, v) in &cells {
            for &(s2, t2, v2) in &cells {
                if s > s2 || t > t2 {
                    total += v * v2;
                }
            }
        }
        total
    }

    /// Fibre dimension of `Z_M → O_M`: pairs of cells increasing in both
    /// the row and the column index.
    pub fn z_fiber(&self) -> usize {
        let cells = self.cells();
        let mut total = 0;
        for &(s, t, v) in &cells {
            for &(s2, t2, v2) in &cells {
                if s < s2 && t < t2 {
                    total += v * v2;
                }
            }
        }
        total
    }

    /// Coarse relative position: `n_{i,k}` is the sum of the `(i, k)` block.
    pub fn n_block(&self) -> Vec<Vec<usize>> {
        let m = self.shape.m();
        let block_of = self.shape.block_of();
        let mut n = vec![vec![0; m]; m];
        for (s, t, v) in self.cells() {
            n[block_of[s]][block_of[t]] += v;
        }
        n
    }

    /// True iff every off-diagonal block of `n_block` vanishes, so the
    /// diagonal blocks have sizes `ν_1, …, ν_m`.
    pub fn is_block_diagonal(&self) -> bool {
        let n = self.n_block();
        (0..n.len()).all(|i| (0..n.len()).all(|k| i == k || n[i][k] == 0))
    }

    /// Fibre dimension of `Y_M → Z_M`: `Σ_r d_r Σ_{i,k ≤ r} n_{i,k}`.
    pub fn y_fiber(&self, framing: &FramingComposition) -> Result<usize> {
        check_same_m(&self.shape, framing)?;
        let n = self.n_block();
        let mut total = 0;
        for (r, &d) in framing.parts().iter().enumerate() {
            let corner: usize = (0..=r).map(|i| n[i][..=r].iter().sum::<usize>()).sum();
            total += corner * d;
        }
        Ok(total)
    }

    /// `dim Y_M = dim O_M + z_fiber + y_fiber`.
    pub fn dim_ym(&self, framing: &FramingComposition) -> Result<usize> {
        Ok(self.dim_orbit() + self.z_fiber() + self.y_fiber(framing)?)
    }
}

impl Serialize for OrbitMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

/// `dim F_→ν = Σ_{s<t} ν_s ν_t` over refined positions.
pub fn dim_flag(shape: &MultiComposition) -> usize {
    let r = shape.refined();
    let mut total = 0;
    for s in 0..r.len() {
        for t in s + 1..r.len() {
            total += r[s] * r[t];
        }
    }
    total
}

/// `(f_1, f_2)` with `f_1 = Σ_{i ≤ i'} ν_i d_{i'}` and `f_2 = dim F_→ν`.
pub fn fiber_dims(shape: &MultiComposition, framing: &FramingComposition) -> Result<(usize, usize)> {
    check_same_m(shape, framing)?;
    let nu = shape.block_sizes();
    let d = framing.parts();
    let mut f1 = 0;
    for i in 0..nu.len() {
        for ip in i..nu.len() {
            f1 += nu[i] * d[ip];
        }
    }
    Ok((f1, dim_flag(shape)))
}

/// Dimension of the resolution `F̃_→ν`: `f_1 + 2 f_2`.
pub fn dim_ftilde(shape: &MultiComposition, framing: &FramingComposition) -> Result<usize> {
    let (f1, f2) = fiber_dims(shape, framing)?;
    Ok(f1 + 2 * f2)
}

/// Right-hand side of the framing estimate, `Σ_{i ≤ r} ν_i d_r`.
pub fn estimate_bound(shape: &MultiComposition, framing: &FramingComposition) -> Result<usize> {
    Ok(fiber_dims(shape, framing)?.0)
}

/// All nonnegative integer matrices with the given row and column sums,
/// row-major, in ascending lexicographic order of the flattened entries.
///
/// Entries are filled left to right; an entry is only given values that the
/// remaining column budgets can still complete, so the search never dead-ends.
pub fn margin_tables(rows: &[usize], cols: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if rows.iter().sum::<usize>() != cols.iter().sum::<usize>() {
        return out;
    }
    let mut budget = cols.to_vec();
    let mut current = Vec::with_capacity(rows.len() * cols.len());
    fill(rows, 0, 0, rows.first().copied().unwrap_or(0), &mut budget, &mut current, &mut |m| {
        out.push(m.to_vec())
    });
    out
}

fn fill(
    rows: &[usize],
    r: usize,
    c: usize,
    row_left: usize,
    budget: &mut [usize],
    current: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    let ncols = budget.len();
    if r == rows.len() {
        emit(current);
        return;
    }
    if c + 1 == ncols || ncols == 0 {
        if ncols == 0 {
            if row_left == 0 {
                let next = rows.get(r + 1).copied().unwrap_or(0);
                fill(rows, r + 1, 0, next, budget, current, emit);
            }
            return;
        }
        // Last column is forced.
        if row_left > budget[c] {
            return;
        }
        budget[c] -= row_left;
        current.push(row_left);
        let next = rows.get(r + 1).copied().unwrap_or(0);
        fill(rows, r + 1, 0, next, budget, current, emit);
        current.pop();
        budget[c] += row_left;
        return;
    }
    let later: usize = budget[c + 1..].iter().sum();
    let lo = row_left.saturating_sub(later);
    let hi = row_left.min(budget[c]);
    for v in lo..=hi {
        budget[c] -= v;
        current.push(v);
        fill(rows, r, c + 1, row_left - v, budget, current, emit);
        current.pop();
        budget[c] += v;
    }
}

/// Number of nonnegative integer matrices with the given margins.
pub fn count_margin_tables(rows: &[usize], cols: &[usize]) -> BigUint {
    if rows.iter().sum::<usize>() != cols.iter().sum::<usize>() {
        return BigUint::zero();
    }
    let mut memo = HashMap::new();
    count_rows(rows, cols.to_vec(), &mut memo)
}

fn count_rows(rows: &[usize], budget: Vec<usize>, memo: &mut HashMap<(usize, Vec<usize>), BigUint>) -> BigUint {
    let Some((&first, rest)) = rows.split_first() else {
        return if budget.iter().all(|&b| b == 0) { BigUint::one() } else { BigUint::zero() };
    };
    let key = (rows.len(), budget.clone());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let mut total = BigUint::zero();
    let mut row = Vec::with_capacity(budget.len());
    let mut next_budget = budget.clone();
    distribute(first, 0, &budget, &mut row, &mut next_budget, &mut |nb| {
        total += count_rows(rest, nb.to_vec(), memo);
    });
    memo.insert(key, total.clone());
    total
}

fn distribute(
    left: usize,
    c: usize,
    budget: &[usize],
    row: &mut Vec<usize>,
    next: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if c == budget.len() {
        if left == 0 {
            emit(next);
        }
        return;
    }
    let later: usize = budget[c + 1..].iter().sum();
    let lo = left.saturating_sub(later);
    for v in lo..=left.min(budget[c]) {
        next[c] = budget[c] - v;
        row.push(v);
        distribute(left - v, c + 1, budget, row, next, emit);
        row.pop();
    }
    next[c] = budget[c];
}

/// Every element of Θ for `shape`, in ascending row-major lexicographic order.
pub fn enumerate_theta(shape: &MultiComposition, bound: usize) -> Result<Vec<OrbitMatrix>> {
    if shape.total() > bound {
        return Err(Error::limit(
            format!("enumerate_theta (total size {} exceeds the bound on ν)", shape.total()),
            shape.total() as u128,
            bound as u128,
        ));
    }
    let refined = shape.refined();
    Ok(margin_tables(refined, refined)
        .into_iter()
        .map(|entries| OrbitMatrix {
            shape: shape.clone(),
            entries,
        })
        .collect())
}

/// All multi-compositions of `total` with exactly `m` nonempty blocks.
pub fn enumerate_multicompositions(total: usize, m: usize) -> Vec<MultiComposition> {
    let mut out = Vec::new();
    for sizes in weak_compositions(total, m) {
        if sizes.contains(&0) {
            continue;
        }
        let per_block: Vec<Vec<Composition>> = sizes
            .iter()
            .map(|&s| crate::partitions::enumerate_compositions(s))
            .collect();
        let mut idx = vec![0; m];
        loop {
            let blocks = (0..m).map(|i| per_block[i][idx[i]].parts().to_vec()).collect();
            out.push(MultiComposition::new(blocks).expect("positive parts"));
            let mut k = m;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < per_block[k].len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemismallRow {
    pub matrix: OrbitMatrix,
    pub dim_orbit: usize,
    pub z_fiber: usize,
    pub y_fiber: usize,
    pub dim_ym: usize,
    pub is_block_diagonal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SemismallVerdict {
    pub semismall: bool,
    pub equality_set_is_block_diagonals: bool,
    pub small_sufficient: bool,
}

impl SemismallVerdict {
    pub fn all(&self) -> bool {
        self.semismall && self.equality_set_is_block_diagonals
    }
}

/// Numeric certificate that `π_→ν` is semismall, with the relevant strata.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemismallReport {
    pub shape: MultiComposition,
    pub framing: FramingComposition,
    pub dim_ftilde: usize,
    pub rows: Vec<SemismallRow>,
    pub verdict: SemismallVerdict,
}

impl SemismallReport {
    /// Recomputes the verdict from the row data alone.
    pub fn verdict_from_rows(
        shape: &MultiComposition,
        dim_ftilde: usize,
        rows: &[SemismallRow],
    ) -> SemismallVerdict {
        let max = rows.iter().map(|r| r.dim_ym).max().unwrap_or(0);
        SemismallVerdict {
            semismall: max <= dim_ftilde,
            equality_set_is_block_diagonals: rows
                .iter()
                .all(|r| (r.dim_ym == dim_ftilde) == r.is_block_diagonal),
            small_sufficient: shape.blocks_are_single_parts(),
        }
    }

    /// Rows attaining `dim F̃` (the relevant strata).
    pub fn equality_set(&self) -> Vec<&OrbitMatrix> {
        self.rows
            .iter()
            .filter(|r| r.dim_ym == self.dim_ftilde)
            .map(|r| &r.matrix)
            .collect()
    }
}

pub fn semismall_report(
    shape: &MultiComposition,
    framing: &FramingComposition,
    bound: usize,
) -> Result<SemismallReport> {
    let dim_f = dim_ftilde(shape, framing)?;
    let theta = enumerate_theta(shape, bound)?;
    let rows: Vec<SemismallRow> = theta
        .into_par_iter()
        .map(|matrix| {
            let dim_orbit = matrix.dim_orbit();
            let z_fiber = matrix.z_fiber();
            let y_fiber = matrix.y_fiber(framing).expect("m checked above");
            let is_block_diagonal = matrix.is_block_diagonal();
            SemismallRow {
                matrix,
                dim_orbit,
                z_fiber,
                y_fiber,
                dim_ym: dim_orbit + z_fiber + y_fiber,
                is_block_diagonal,
            }
        })
        .collect();
    let verdict = SemismallReport::verdict_from_rows(shape, dim_f, &rows);
    Ok(SemismallReport {
        shape: shape.clone(),
        framing: framing.clone(),
        dim_ftilde: dim_f,
        rows,
        verdict,
    })
}

/// Outcome of the refinement identity
/// `dim F̃_1̲ = dim F̃_λ̲ + Σ_{i,j} (λ_{i,j}² − λ_{i,j})`.
///
/// `literal_rhs` is the variant with the constant `Σ_i (ν_i² − ν_i)`, which
/// only agrees when every `λ_i` has at most one part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefinementIdentity {
    pub lhs: usize,
    pub rhs: usize,
    pub holds: bool,
    pub literal_rhs: usize,
    pub literal_holds: bool,
}

pub fn refinement_identity_check(
    lambda: &MultiPartition,
    framing: &FramingComposition,
) -> Result<RefinementIdentity> {
    if lambda.m() != framing.m() {
        return Err(Error::invalid(format!(
            "multipartition has {} components but framing has {} parts",
            lambda.m(),
            framing.m()
        )));
    }
    let ones = MultiComposition::all_ones(&lambda.sizes())?;
    let refined = MultiComposition::from_multipartition(lambda);
    let lhs = dim_ftilde(&ones, framing)?;
    let base = dim_ftilde(&refined, framing)?;
    let correction: usize = refined.refined().iter().map(|&l| l * l - l).sum();
    let literal: usize = lambda.sizes().iter().map(|&n| n * n - n).sum();
    Ok(RefinementIdentity {
        lhs,
        rhs: base + correction,
        holds: lhs == base + correction,
        literal_rhs: base + literal,
        literal_holds: lhs == base + literal,
    })
}

/// `ν² + νd`.
pub fn pi_dim(nu: usize, d: usize) -> usize {
    nu * nu + nu * d
}

/// Number of `m`-tuples of partitions of total size `ν`.
pub fn pi_component_count(nu: usize, m: usize) -> BigUint {
    weak_compositions(nu, m)
        .iter()
        .map(|c| c.iter().fold(BigUint::one(), |acc, &n| acc * p_count(n)))
        .sum()
}

/// `Σ_{i<j} ν_i ν_j + ν d − Σ_i ν_i d_i` for the stratum of type `ν̲`.
pub fn pi_stratum_fiber_dim(nu_parts: &[usize], framing: &FramingComposition) -> Result<usize> {
    if nu_parts.len() != framing.m() {
        return Err(Error::invalid(format!(
            "stratum type has {} parts but framing has {}",
            nu_parts.len(),
            framing.m()
        )));
    }
    let nu: usize = nu_parts.iter().sum();
    let mut cross = 0;
    for i in 0..nu_parts.len() {
        for j in i + 1..nu_parts.len() {
            cross += nu_parts[i] * nu_parts[j];
        }
    }
    let diag: usize = nu_parts.iter().zip(framing.parts()).map(|(a, b)| a * b).sum();
    Ok(cross + nu * framing.total() - diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{enumerate_multipartitions, Partition};

    fn mc(blocks: &[&[usize]]) -> MultiComposition {
        MultiComposition::new(blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    fn fr(parts: &[usize]) -> FramingComposition {
        FramingComposition::new(parts.to_vec()).unwrap()
    }

    fn om(shape: &MultiComposition, rows: &[&[usize]]) -> OrbitMatrix {
        OrbitMatrix::from_rows(shape.clone(), &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn shape_validation() {
        assert!(MultiComposition::new(vec![]).is_err());
        assert!(MultiComposition::new(vec![vec![1, 0]]).is_err());
        assert!(FramingComposition::new(vec![0, 1]).is_err());
        assert!(FramingComposition::new(vec![1, 0]).is_ok());
        let s = mc(&[&[1, 2], &[3]]);
        assert_eq!(s.refined(), &[1, 2, 3]);
        assert_eq!(s.block_sizes(), &[3, 3]);
        assert_eq!(s.position(1, 0), Some(2));
        assert_eq!(s.position(1, 1), None);
        assert_eq!(s.to_string(), "1,2;3");
    }

    #[test]
    fn dim_flag_examples() {
        assert_eq!(dim_flag(&mc(&[&[5]])), 0);
        assert_eq!(dim_flag(&mc(&[&[1, 1]])), 1);
        assert_eq!(dim_flag(&mc(&[&[1, 1], &[1]])), 3);
    }

    #[test]
    fn fiber_dims_examples() {
        assert_eq!(fiber_dims(&mc(&[&[2]]), &fr(&[1])).unwrap(), (2, 0));
        assert_eq!(fiber_dims(&mc(&[&[1], &[1]]), &fr(&[1, 1])).unwrap(), (3, 1));
        assert_eq!(fiber_dims(&mc(&[&[1, 1]]), &fr(&[0])).unwrap(), (0, 1));
        assert!(fiber_dims(&mc(&[&[1]]), &fr(&[1, 1])).is_err());
    }

    #[test]
    fn dim_ftilde_examples() {
        assert_eq!(dim_ftilde(&mc(&[&[3]]), &fr(&[2])).unwrap(), 6);
        assert_eq!(dim_ftilde(&mc(&[&[1, 1]]), &fr(&[2])).unwrap(), 6);
        assert_eq!(dim_ftilde(&mc(&[&[1], &[1]]), &fr(&[1, 1])).unwrap(), 5);
    }

    #[test]
    fn theta_examples() {
        let t = enumerate_theta(&mc(&[&[2]]), 8).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].entries(), &[2]);

        let s = mc(&[&[1, 1]]);
        let t = enumerate_theta(&s, 8).unwrap();
        assert_eq!(t.len(), 2);
        // ascending lexicographic: swap [0,1,1,0] before identity [1,0,0,1]
        assert_eq!(t[0].entries(), &[0, 1, 1, 0]);
        assert_eq!(t[1].entries(), &[1, 0, 0, 1]);

        assert_eq!(enumerate_theta(&mc(&[&[1], &[1], &[1]]), 8).unwrap().len(), 6);
        let err = enumerate_theta(&mc(&[&[9]]), 8).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { limit: 8, .. }));
    }

    #[test]
    fn orbit_dimension_examples() {
        let s = mc(&[&[1, 1]]);
        let id = om(&s, &[&[1, 0], &[0, 1]]);
        let sw = om(&s, &[&[0, 1], &[1, 0]]);
        assert_eq!((id.dim_orbit(), id.z_fiber()), (1, 1));
        assert_eq!((sw.dim_orbit(), sw.z_fiber()), (2, 0));
        let pt = om(&mc(&[&[2]]), &[&[2]]);
        assert_eq!((pt.dim_orbit(), pt.z_fiber()), (0, 0));
    }

    #[test]
    fn n_block_and_y_examples() {
        let s = mc(&[&[1], &[1]]);
        let id = om(&s, &[&[1, 0], &[0, 1]]);
        let sw = om(&s, &[&[0, 1], &[1, 0]]);
        assert_eq!(id.n_block(), vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(sw.n_block(), vec![vec![0, 1], vec![1, 0]]);
        let d = fr(&[1, 1]);
        assert_eq!(id.y_fiber(&d).unwrap(), 3);
        assert_eq!(sw.y_fiber(&d).unwrap(), 2);
        assert_eq!(id.dim_ym(&d).unwrap(), 5);
        assert_eq!(sw.dim_ym(&d).unwrap(), 4);

        let s1 = mc(&[&[1, 1]]);
        for m in enumerate_theta(&s1, 8).unwrap() {
            assert_eq!(m.n_block(), vec![vec![2]]);
            assert_eq!(m.y_fiber(&fr(&[3])).unwrap(), 6);
        }
        let pt = om(&mc(&[&[2]]), &[&[2]]);
        assert_eq!(pt.dim_ym(&fr(&[1])).unwrap(), 2);
        assert!(pt.y_fiber(&fr(&[1, 1])).is_err());
    }

    #[test]
    fn margin_validation() {
        let s = mc(&[&[1, 1]]);
        assert!(OrbitMatrix::new(s.clone(), vec![1, 1, 0, 0]).is_err());
        assert!(OrbitMatrix::new(s, vec![1, 0, 0]).is_err());
    }

    #[test]
    fn semismall_examples() {
        let r = semismall_report(&mc(&[&[1], &[1]]), &fr(&[1, 1]), 8).unwrap();
        assert_eq!(r.dim_ftilde, 5);
        assert!(r.verdict.semismall && r.verdict.equality_set_is_block_diagonals && r.verdict.small_sufficient);
        assert_eq!(r.equality_set().len(), 1);
        assert_eq!(r.equality_set()[0].entries(), &[1, 0, 0, 1]);

        let r = semismall_report(&mc(&[&[1, 1]]), &fr(&[1]), 8).unwrap();
        assert!(r.verdict.semismall && r.verdict.equality_set_is_block_diagonals);
        assert!(!r.verdict.small_sufficient);
        assert_eq!(r.equality_set().len(), 2);

        let r = semismall_report(&mc(&[&[1, 1], &[1]]), &fr(&[1, 1]), 8).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert!(r.verdict.semismall && r.verdict.equality_set_is_block_diagonals);
        assert_eq!(r.equality_set().len(), 2);
    }

    #[test]
    fn refinement_identity_examples() {
        let p = |v: &[usize]| Partition::new(v.to_vec()).unwrap();
        let ones = MultiPartition::new(vec![p(&[1, 1]), p(&[1])]).unwrap();
        let r = refinement_identity_check(&ones, &fr(&[1, 1])).unwrap();
        assert!(r.holds);
        assert_eq!(r.lhs, r.rhs);

        let two = MultiPartition::new(vec![p(&[2])]).unwrap();
        let r = refinement_identity_check(&two, &fr(&[1])).unwrap();
        assert_eq!((r.lhs, r.rhs), (4, 4));
        assert!(r.holds);

        let r = refinement_identity_check(&MultiPartition::new(vec![p(&[2]), p(&[1])]).unwrap(), &fr(&[1, 1])).unwrap();
        assert!(r.holds);

        // Two parts in one component: the literal constant Σ(ν_i² − ν_i) is off.
        let split = MultiPartition::new(vec![p(&[2, 1])]).unwrap();
        let r = refinement_identity_check(&split, &fr(&[1])).unwrap();
        assert!(r.holds);
        assert!(!r.literal_holds);
    }

    #[test]
    fn pi_examples() {
        assert_eq!(pi_dim(2, 2), 8);
        assert_eq!(pi_component_count(2, 2), BigUint::from(5u32));
        assert_eq!(pi_stratum_fiber_dim(&[1, 1], &fr(&[1, 1])).unwrap(), 3);
    }

    #[test]
    fn margin_tables_agree_with_count() {
        let cases: &[(&[usize], &[usize])] = &[(&[2, 1], &[1, 1, 1]), (&[3, 3], &[2, 2, 2]), (&[4], &[1, 3]), (&[], &[])];
        for (r, c) in cases {
            assert_eq!(BigUint::from(margin_tables(r, c).len()), count_margin_tables(r, c));
        }
        assert_eq!(margin_tables(&[1], &[2]).len(), 0);
    }

    fn all_shapes(max_total: usize, max_m: usize) -> Vec<MultiComposition> {
        (1..=max_total)
            .flat_map(|n| (1..=max_m.min(n)).flat_map(move |m| enumerate_multicompositions(n, m)))
            .collect()
    }

    #[test]
    fn multicomposition_counts() {
        // Each of the ν−1 gaps is a block cut, a part cut, or neither.
        for n in 1..=6 {
            let total: usize = (1..=n).map(|m| enumerate_multicompositions(n, m).len()).sum();
            assert_eq!(total, 3usize.pow(n as u32 - 1));
        }
    }

    #[test]
    fn orbit_plus_fiber_is_twice_flag_dimension() {
        for shape in all_shapes(6, 6) {
            let nu = shape.total();
            let sq: usize = shape.refined().iter().map(|x| x * x).sum();
            for m in enumerate_theta(&shape, 8).unwrap() {
                assert_eq!(m.dim_orbit() + m.z_fiber(), nu * nu - sq, "{shape}");
                let t = m.transpose();
                assert!(OrbitMatrix::new(shape.clone(), t.entries().to_vec()).is_ok());
                assert_eq!(t.dim_orbit(), m.dim_orbit());
            }
        }
    }

    #[test]
    fn estimate_and_equality_on_grid() {
        for shape in all_shapes(6, 3) {
            let theta = enumerate_theta(&shape, 8).unwrap();
            for framing in FramingComposition::enumerate(shape.m(), 3) {
                let bound = estimate_bound(&shape, &framing).unwrap();
                for m in &theta {
                    let y = m.y_fiber(&framing).unwrap();
                    assert!(y <= bound);
                    assert_eq!(y == bound, m.is_block_diagonal(), "{shape} {framing}");
                }
            }
        }
    }

    #[test]
    fn theta_counts_for_singletons() {
        for n in 1..=6 {
            let shape = MultiComposition::new(vec![vec![1]; n]).unwrap();
            let theta = enumerate_theta(&shape, 8).unwrap();
            assert_eq!(theta.len(), (1..=n).product::<usize>());
            assert!(theta.windows(2).all(|w| w[0].entries() < w[1].entries()));
        }
        let grouped = MultiComposition::all_ones(&[2, 3]).unwrap();
        let diag = enumerate_theta(&grouped, 8).unwrap().into_iter().filter(OrbitMatrix::is_block_diagonal).count();
        assert_eq!(diag, 2 * 6);
    }

    #[test]
    fn refinement_identity_exhaustive() {
        for nu in 0..=6 {
            for m in 1..=3 {
                for sizes in weak_compositions(nu, m) {
                    for lambda in enumerate_multipartitions(&sizes) {
                        for framing in FramingComposition::enumerate(m, 2) {
                            assert!(refinement_identity_check(&lambda, &framing).unwrap().holds);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn flag_dimension_is_reversal_invariant() {
        for shape in all_shapes(7, 7) {
            assert_eq!(dim_flag(&shape), dim_flag(&shape.reversed_refinement()));
        }
    }
}
