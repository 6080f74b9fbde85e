//! Brute-force ground truth over prime fields `F_p`.
//!
//! Subspaces are stored by their reduced row echelon basis, so equality of
//! subspaces is equality of representations. Vectors are columns; a matrix
//! `x` acts by `v ↦ x v`.
//!
//! The framing space `D = F_p^d` carries the standard flag
//! `D_i = span(e_1, …, e_{d_i + ⋯ + d_m})`.
//!
//! Every enumerator estimates its workload first and refuses to start when
//! the estimate exceeds the [`Budget`].

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::orbit_calculus::fiber_dims;
use crate::partitions::Partition;
use crate::serde_big;
use crate::{Error, FramingComposition, MultiComposition, OrbitMatrix, Result};

/// Default workload limit, in elementary field operations.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub limit: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { limit: DEFAULT_BUDGET }
    }
}

impl Budget {
    pub fn new(limit: u128) -> Self {
        Budget { limit }
    }

    pub fn unlimited() -> Self {
        Budget { limit: u128::MAX }
    }

    pub fn check(&self, operation: &str, estimate: u128) -> Result<()> {
        if estimate > self.limit {
            Err(Error::limit(operation, estimate, self.limit))
        } else {
            Ok(())
        }
    }
}

fn pow_u128(base: u128, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base))
}

/// A prime field `F_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Fp {
    p: u32,
}

impl Fp {
    pub fn new(p: u32) -> Result<Self> {
        let prime = p >= 2 && (2..p).take_while(|k| k * k <= p).all(|k| !p.is_multiple_of(k));
        if !prime {
            return Err(Error::invalid(format!("{p} is not a prime")));
        }
        if p > 65_521 {
            return Err(Error::invalid(format!("prime {p} is too large for the oracle")));
        }
        Ok(Fp { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    fn add(&self, a: u32, b: u32) -> u32 {
        (a + b) % self.p
    }

    fn sub(&self, a: u32, b: u32) -> u32 {
        (a + self.p - b) % self.p
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    fn inv(&self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.p), "inverse of zero");
        let mut result = 1u32;
        let mut base = a % self.p;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }

    fn reduce(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }
}

/// Row-reduces `rows` (each of length `cols`) in place to reduced row
/// echelon form, drops zero rows and returns the pivot columns.
fn rref_rows(f: Fp, rows: &mut Vec<Vec<u32>>, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(found) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, found);
        let inv = f.inv(rows[r][c]);
        for v in rows[r].iter_mut() {
            *v = f.mul(*v, inv);
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let factor = rows[i][c];
                for k in 0..cols {
                    let sub = f.mul(factor, rows[r][k]);
                    rows[i][k] = f.sub(rows[i][k], sub);
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// Basis of `{v : R v = 0}` for `R` in reduced row echelon form.
fn kernel_from_rref(f: Fp, rref: &[Vec<u32>], pivots: &[usize], cols: usize) -> Vec<Vec<u32>> {
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u32; cols];
        v[free] = 1;
        for (row, &pc) in rref.iter().zip(pivots) {
            v[pc] = f.sub(0, row[free]);
        }
        basis.push(v);
    }
    basis
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqMatrix {
    field: Fp,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl FqMatrix {
    /// Row-major entries; each is reduced mod `p`.
    pub fn new(field: Fp, rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "a {rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(FqMatrix {
            field,
            rows,
            cols,
            data: data.into_iter().map(|v| field.reduce(v)).collect(),
        })
    }

    pub fn from_rows(field: Fp, rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Self::new(field, rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    pub fn zeros(field: Fp, rows: usize, cols: usize) -> Self {
        FqMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Fp, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// The matrix whose row-major entries are the base-`p` digits of
    /// `index`, least significant first.
    pub fn from_index(field: Fp, rows: usize, cols: usize, mut index: u128) -> Self {
        let p = field.p as u128;
        let data = (0..rows * cols)
            .map(|_| {
                let digit = (index % p) as u32;
                index /= p;
                digit
            })
            .collect();
        FqMatrix { field, rows, cols, data }
    }

    pub fn field(&self) -> Fp {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = self.field.reduce(v);
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn row_vectors(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.data[r * self.cols..(r + 1) * self.cols].to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn mul(&self, other: &FqMatrix) -> FqMatrix {
        assert_eq!(self.cols, other.rows, "matrix product of incompatible shapes");
        let f = self.field;
        let mut out = FqMatrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = f.add(out.data[idx], f.mul(a, other.get(k, j)));
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(self.cols, v.len(), "vector length mismatch");
        let f = self.field;
        (0..self.rows)
            .map(|i| (0..self.cols).fold(0, |acc, k| f.add(acc, f.mul(self.get(i, k), v[k]))))
            .collect()
    }

    fn zip(&self, other: &FqMatrix, op: impl Fn(u32, u32) -> u32) -> FqMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        FqMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &FqMatrix) -> FqMatrix {
        let f = self.field;
        self.zip(other, |a, b| f.add(a, b))
    }

    pub fn sub(&self, other: &FqMatrix) -> FqMatrix {
        let f = self.field;
        self.zip(other, |a, b| f.sub(a, b))
    }

    pub fn scale(&self, c: i64) -> FqMatrix {
        let f = self.field;
        let c = f.reduce(c);
        FqMatrix {
            data: self.data.iter().map(|&a| f.mul(a, c)).collect(),
            ..self.clone()
        }
    }

    pub fn transpose(&self) -> FqMatrix {
        let mut out = FqMatrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> FqMatrix {
        assert_eq!(self.rows, self.cols, "power of a non-square matrix");
        (0..k).fold(FqMatrix::identity(self.field, self.rows), |acc, _| acc.mul(self))
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.row_vectors();
        rref_rows(self.field, &mut rows, self.cols).len()
    }

    /// Basis of the right null space `{v : x v = 0}`.
    pub fn kernel(&self) -> Vec<Vec<u32>> {
        let mut rows = self.row_vectors();
        let pivots = rref_rows(self.field, &mut rows, self.cols);
        kernel_from_rref(self.field, &rows, &pivots, self.cols)
    }

    pub fn inverse(&self) -> Option<FqMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let f = self.field;
        let mut rows: Vec<Vec<u32>> = (0..n)
            .map(|i| {
                let mut r = self.data[i * n..(i + 1) * n].to_vec();
                r.extend((0..n).map(|j| u32::from(i == j)));
                r
            })
            .collect();
        let pivots = rref_rows(f, &mut rows, 2 * n);
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(FqMatrix {
            field: f,
            rows: n,
            cols: n,
            data: rows.iter().flat_map(|r| r[n..].to_vec()).collect(),
        })
    }

    pub fn is_nilpotent(&self) -> bool {
        self.rows == self.cols && self.pow(self.rows).is_zero()
    }
}

/// A subspace of `F_p^n`, stored as its reduced row echelon basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqSubspace {
    field: Fp,
    ambient: usize,
    basis: Vec<Vec<u32>>,
}

impl FqSubspace {
    pub fn span(field: Fp, ambient: usize, vectors: Vec<Vec<u32>>) -> Self {
        let mut rows: Vec<Vec<u32>> = vectors
            .into_iter()
            .map(|v| {
                assert_eq!(v.len(), ambient, "vector length mismatch");
                v.into_iter().map(|x| x % field.p).collect()
            })
            .collect();
        rref_rows(field, &mut rows, ambient);
        FqSubspace { field, ambient, basis: rows }
    }

    pub fn zero(field: Fp, ambient: usize) -> Self {
        FqSubspace { field, ambient, basis: Vec::new() }
    }

    pub fn full(field: Fp, ambient: usize) -> Self {
        Self::span(field, ambient, FqMatrix::identity(field, ambient).row_vectors())
    }

    /// Span of the standard basis vectors `e_k` for `k` in `coords`.
    pub fn coordinate(field: Fp, ambient: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let vectors = coords
            .into_iter()
            .map(|k| {
                let mut v = vec![0; ambient];
                v[k] = 1;
                v
            })
            .collect();
        Self::span(field, ambient, vectors)
    }

    pub fn field(&self) -> Fp {
        self.field
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        rref_rows(self.field, &mut rows, self.ambient).len() == self.dim()
    }

    pub fn is_subspace_of(&self, other: &FqSubspace) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }

    pub fn sum(&self, other: &FqSubspace) -> FqSubspace {
        let mut vectors = self.basis.clone();
        vectors.extend(other.basis.iter().cloned());
        Self::span(self.field, self.ambient, vectors)
    }

    /// `U^⊥ = {w : w·u = 0 for all u ∈ U}` in the dual coordinates.
    pub fn annihilator(&self) -> FqSubspace {
        let pivots: Vec<usize> = self
            .basis
            .iter()
            .map(|r| r.iter().position(|&x| x != 0).expect("nonzero row"))
            .collect();
        let kernel = kernel_from_rref(self.field, &self.basis, &pivots, self.ambient);
        Self::span(self.field, self.ambient, kernel)
    }

    pub fn intersection(&self, other: &FqSubspace) -> FqSubspace {
        self.annihilator().sum(&other.annihilator()).annihilator()
    }

    /// `x(U)`.
    pub fn image(&self, x: &FqMatrix) -> FqSubspace {
        assert_eq!(x.cols(), self.ambient, "map does not start at this space");
        Self::span(self.field, x.rows(), self.basis.iter().map(|v| x.apply(v)).collect())
    }

    /// `x^{-1}(U) = {v : x v ∈ U}`.
    pub fn preimage(&self, x: &FqMatrix) -> FqSubspace {
        assert_eq!(x.rows(), self.ambient, "map does not land in this space");
        let ann = self.annihilator();
        let n = x.cols();
        let rows: Vec<i64> = ann
            .basis
            .iter()
            .flat_map(|a| {
                (0..n).map(move |c| (0..a.len()).fold(0u64, |acc, k| acc + a[k] as u64 * x.get(k, c) as u64) as i64)
            })
            .collect();
        let constraint = FqMatrix::new(self.field, ann.dim(), n, rows).expect("shape by construction");
        Self::span(self.field, n, constraint.kernel())
    }

    /// `{Σ_k c_k b_k}` where `b` is an ordered basis of a larger space and
    /// `self` lives in the coordinate space of that basis.
    fn pushforward(&self, frame: &[Vec<u32>], ambient: usize) -> FqSubspace {
        let f = self.field;
        let vectors = self
            .basis
            .iter()
            .map(|c| {
                let mut v = vec![0; ambient];
                for (coef, b) in c.iter().zip(frame) {
                    for k in 0..ambient {
                        v[k] = f.add(v[k], f.mul(*coef, b[k]));
                    }
                }
                v
            })
            .collect();
        Self::span(f, ambient, vectors)
    }
}

/// `[n choose k]_q` at `q = p`.
pub fn gaussian_binomial(n: usize, k: usize, q: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let q = BigUint::from(q);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= q.pow((n - i) as u32) - 1u32;
        den *= q.pow((i + 1) as u32) - 1u32;
    }
    num / den
}

/// Number of flags of type `parts` in `F_q^{Σ parts}`.
pub fn gaussian_multinomial(parts: &[usize], q: u64) -> BigUint {
    let mut remaining: usize = parts.iter().sum();
    let mut total = BigUint::one();
    for &part in parts {
        total *= gaussian_binomial(remaining, part, q);
        remaining -= part;
    }
    total
}

/// All `k`-dimensional subspaces of `F_p^n`, sorted by their canonical
/// bases.
pub fn enumerate_subspaces(field: Fp, n: usize, k: usize, budget: &Budget) -> Result<Vec<FqSubspace>> {
    if k > n {
        return Ok(Vec::new());
    }
    let count = gaussian_binomial(n, k, field.p as u64).to_u128().unwrap_or(u128::MAX);
    budget.check(
        &format!("enumerate_subspaces(p={}, n={n}, k={k})", field.p),
        count.saturating_mul((n * k.max(1)) as u128),
    )?;
    let mut out = Vec::new();
    let mut pivots = Vec::with_capacity(k);
    pivot_sets(n, k, 0, &mut pivots, &mut |piv| {
        // Free positions: row r, columns right of its pivot that are not pivots.
        let free: Vec<(usize, usize)> = piv
            .iter()
            .enumerate()
            .flat_map(|(r, &pc)| ((pc + 1)..n).filter(|c| !piv.contains(c)).map(move |c| (r, c)))
            .collect();
        let p = field.p as u128;
        for index in 0..pow_u128(p, free.len()) {
            let mut rows = vec![vec![0u32; n]; k];
            for (r, &pc) in piv.iter().enumerate() {
                rows[r][pc] = 1;
            }
            let mut rest = index;
            for &(r, c) in &free {
                rows[r][c] = (rest % p) as u32;
                rest /= p;
            }
            out.push(FqSubspace { field, ambient: n, basis: rows });
        }
    });
    out.sort();
    Ok(out)
}

fn pivot_sets(n: usize, k: usize, start: usize, acc: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    if acc.len() == k {
        emit(acc);
        return;
    }
    for c in start..n {
        if n - c < k - acc.len() {
            break;
        }
        acc.push(c);
        pivot_sets(n, k, c + 1, acc, emit);
        acc.pop();
    }
}

/// A descending flag `V = V_1 ⊇ V_2 ⊇ ⋯ ⊇ 0` of type `→ν`; `steps[s]` is the
/// `s`-th refined step (0-based), with one trailing zero space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FqFlag {
    field: Fp,
    shape: MultiComposition,
    steps: Vec<FqSubspace>,
}

impl FqFlag {
    pub fn new(field: Fp, shape: MultiComposition, steps: Vec<FqSubspace>) -> Result<Self> {
        let n = shape.total();
        if steps.len() != shape.refined().len() + 1 {
            return Err(Error::invalid("flag needs one step per refined part plus the zero space"));
        }
        let mut expected = n;
        for (s, step) in steps.iter().enumerate() {
            if step.ambient() != n || step.field() != field || step.dim() != expected {
                return Err(Error::invalid(format!("flag step {s} has the wrong dimension")));
            }
            if s > 0 && !step.is_subspace_of(&steps[s - 1]) {
                return Err(Error::invalid(format!("flag step {s} is not nested")));
            }
            if s < shape.refined().len() {
                expected -= shape.refined()[s];
            }
        }
        Ok(FqFlag { field, shape, steps })
    }

    /// The coordinate flag `V_s = span(e_{n−dim V_s}, …, e_n)`.
    pub fn standard(field: Fp, shape: &MultiComposition) -> Self {
        let n = shape.total();
        let mut dim = n;
        let mut steps = vec![FqSubspace::full(field, n)];
        for &part in shape.refined() {
            dim -= part;
            steps.push(FqSubspace::coordinate(field, n, n - dim..n));
        }
        FqFlag { field, shape: shape.clone(), steps }
    }

    pub fn field(&self) -> Fp {
        self.field
    }

    pub fn shape(&self) -> &MultiComposition {
        &self.shape
    }

    pub fn steps(&self) -> &[FqSubspace] {
        &self.steps
    }

    /// Coarse steps `V_1 ⊇ ⋯ ⊇ V_m ⊇ V_{m+1} = 0`.
    pub fn coarse_steps(&self) -> Vec<FqSubspace> {
        let mut out = Vec::with_capacity(self.shape.m() + 1);
        let mut start = 0;
        for block in self.shape.blocks() {
            out.push(self.steps[start].clone());
            start += block.len();
        }
        out.push(self.steps[start].clone());
        out
    }

    /// `g V̲`.
    pub fn transform(&self, g: &FqMatrix) -> FqFlag {
        FqFlag {
            field: self.field,
            shape: self.shape.clone(),
            steps: self.steps.iter().map(|s| s.image(g)).collect(),
        }
    }
}

/// All flags of type `→ν` in `F_p^ν`, sorted canonically.
pub fn enumerate_flags(shape: &MultiComposition, field: Fp, budget: &Budget) -> Result<Vec<FqFlag>> {
    let n = shape.total();
    let count = gaussian_multinomial(shape.refined(), field.p as u64).to_u128().unwrap_or(u128::MAX);
    budget.check(
        &format!("enumerate_flags({shape}, p={})", field.p),
        count.saturating_mul((n * n).max(1) as u128),
    )?;
    let mut partial = vec![vec![FqSubspace::full(field, n)]];
    for &part in shape.refined() {
        let mut next = Vec::new();
        for chain in partial {
            let top = chain.last().expect("nonempty chain");
            let sub_dim = top.dim() - part;
            for local in enumerate_subspaces(field, top.dim(), sub_dim, &Budget::unlimited())? {
                let mut c = chain.clone();
                c.push(local.pushforward(top.basis(), n));
                next.push(c);
            }
        }
        partial = next;
    }
    let mut flags: Vec<FqFlag> = partial
        .into_iter()
        .map(|steps| FqFlag { field, shape: shape.clone(), steps })
        .collect();
    flags.sort_by(|a, b| a.steps.cmp(&b.steps));
    Ok(flags)
}

/// `dim(V_{s+1} + V_s ∩ W_t) − dim(V_{s+1} + V_s ∩ W_{t+1})`, row-major.
pub fn rel_pos_entries(v: &[FqSubspace], w: &[FqSubspace]) -> Vec<usize> {
    let rows = v.len() - 1;
    let cols = w.len() - 1;
    let mut out = Vec::with_capacity(rows * cols);
    for s in 0..rows {
        let dims: Vec<usize> = w.iter().map(|wt| v[s + 1].sum(&v[s].intersection(wt)).dim()).collect();
        for t in 0..cols {
            out.push(dims[t] - dims[t + 1]);
        }
    }
    out
}

/// The relative position of two flags of the same type.
pub fn rel_pos(v: &FqFlag, w: &FqFlag) -> Result<OrbitMatrix> {
    if v.shape != w.shape || v.field != w.field {
        return Err(Error::invalid("relative position needs flags of one type over one field"));
    }
    OrbitMatrix::new(v.shape.clone(), rel_pos_entries(&v.steps, &w.steps))
}

/// The standard framing flag `D_1 ⊇ ⋯ ⊇ D_m ⊇ D_{m+1} = 0`.
pub fn framing_flag(field: Fp, framing: &FramingComposition) -> Vec<FqSubspace> {
    let d = framing.total();
    let mut out = Vec::with_capacity(framing.m() + 1);
    let mut dim = d;
    out.push(FqSubspace::full(field, d));
    for &part in framing.parts() {
        dim -= part;
        out.push(FqSubspace::coordinate(field, d, 0..dim));
    }
    out
}

/// The opposite coordinate flag `D_i = span(e_{d−dim D_i+1}, …, e_d)`.
pub fn opposite_framing_flag(field: Fp, framing: &FramingComposition) -> Vec<FqSubspace> {
    let d = framing.total();
    let mut out = Vec::with_capacity(framing.m() + 1);
    let mut dim = d;
    out.push(FqSubspace::full(field, d));
    for &part in framing.parts() {
        dim -= part;
        out.push(FqSubspace::coordinate(field, d, d - dim..d));
    }
    out
}

/// Linear conditions `a·(x b) = 0` for `b` spanning `source` and `a`
/// spanning the annihilator of `target`, as coefficient rows over the
/// row-major entries of `x : F^n → F^r`.
fn containment_constraints(source: &FqSubspace, target: &FqSubspace, out: &mut Vec<Vec<u32>>) {
    let f = source.field();
    let n = source.ambient();
    let r = target.ambient();
    for a in target.annihilator().basis() {
        for b in source.basis() {
            let mut row = vec![0u32; r * n];
            for i in 0..r {
                for j in 0..n {
                    row[i * n + j] = f.mul(a[i], b[j]);
                }
            }
            out.push(row);
        }
    }
}

/// Constraints for `x_σ(V_s) ⊆ V_{s+1}` over all refined steps.
fn sigma_constraints(flag: &FqFlag) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for s in 0..flag.steps.len() - 1 {
        containment_constraints(&flag.steps[s], &flag.steps[s + 1], &mut out);
    }
    out
}

/// Constraints for `x_ρ(V_i) ⊆ D_i`, `i = 1..m`.
fn rho_constraints(flag: &FqFlag, d_flag: &[FqSubspace]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let coarse = flag.coarse_steps();
    for i in 0..flag.shape.m() {
        containment_constraints(&coarse[i], &d_flag[i], &mut out);
    }
    out
}

fn nullity(field: Fp, constraints: &[Vec<u32>], unknowns: usize) -> usize {
    let mut rows = constraints.to_vec();
    unknowns - rref_rows(field, &mut rows, unknowns).len()
}

/// Bitset over all matrices (indexed as in [`FqMatrix::from_index`]) that
/// satisfy every constraint, evaluated one matrix at a time.
fn solution_bitset(field: Fp, constraints: &[Vec<u32>], unknowns: usize) -> Vec<u64> {
    let total = pow_u128(field.p as u128, unknowns) as usize;
    let mut bits = vec![0u64; total.div_ceil(64)];
    let p = field.p;
    let mut digits = vec![0u32; unknowns];
    for index in 0..total {
        if index > 0 {
            for d in digits.iter_mut() {
                *d += 1;
                if *d == p {
                    *d = 0;
                } else {
                    break;
                }
            }
        }
        let ok = constraints
            .iter()
            .all(|row| row.iter().zip(&digits).fold(0u64, |acc, (&a, &x)| acc + a as u64 * x as u64) % p as u64 == 0);
        if ok {
            bits[index / 64] |= 1 << (index % 64);
        }
    }
    bits
}

fn popcount(bits: &[u64]) -> u128 {
    bits.iter().map(|w| w.count_ones() as u128).sum()
}

fn popcount_and(a: &[u64], b: &[u64]) -> u128 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u128).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountEntry {
    pub quantity: String,
    #[serde(serialize_with = "serde_big::u128_str")]
    pub observed: u128,
    #[serde(serialize_with = "serde_big::u128_str")]
    pub predicted: u128,
    pub matches: bool,
}

impl CountEntry {
    pub fn new(quantity: impl Into<String>, observed: u128, predicted: u128) -> Self {
        CountEntry {
            quantity: quantity.into(),
            observed,
            predicted,
            matches: observed == predicted,
        }
    }
}

/// One relative-position class of pairs of flags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct YBucket {
    pub matrix: OrbitMatrix,
    #[serde(serialize_with = "serde_big::u128_str")]
    pub orbit_points: u128,
    pub fiber_exponent: usize,
    #[serde(serialize_with = "serde_big::u128_str")]
    pub observed: u128,
    #[serde(serialize_with = "serde_big::u128_str")]
    pub predicted: u128,
    /// Every flag pair in the class has exactly `p^fiber_exponent` common
    /// stable points.
    pub uniform_fibers: bool,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointCountReport {
    pub quantity: String,
    pub p: u32,
    pub shape: Option<String>,
    pub framing: Option<String>,
    pub nu: Option<usize>,
    pub entries: Vec<CountEntry>,
    pub buckets: Vec<YBucket>,
}

impl PointCountReport {
    pub fn all_match(&self) -> bool {
        self.entries.iter().all(|e| e.matches) && self.buckets.iter().all(|b| b.matches && b.uniform_fibers)
    }

    pub fn entry(&self, quantity: &str) -> Option<&CountEntry> {
        self.entries.iter().find(|e| e.quantity == quantity)
    }
}

fn check_framing(shape: &MultiComposition, framing: &FramingComposition) -> Result<()> {
    if shape.m() != framing.m() {
        return Err(Error::invalid(format!(
            "multi-composition has {} blocks but framing has {} parts",
            shape.m(),
            framing.m()
        )));
    }
    Ok(())
}

fn stable_workload(shape: &MultiComposition, framing: &FramingComposition, p: u32) -> u128 {
    let nu = shape.total();
    let flags = gaussian_multinomial(shape.refined(), p as u64).to_u128().unwrap_or(u128::MAX);
    let per_flag = pow_u128(p as u128, nu * nu)
        .saturating_add(pow_u128(p as u128, nu * framing.total()))
        .saturating_mul((nu * nu * nu).max(1) as u128);
    flags.saturating_mul(per_flag)
}

struct StableSets {
    flags: Vec<FqFlag>,
    sigma: Vec<Vec<u64>>,
    rho: Vec<Vec<u64>>,
    nullities: Vec<usize>,
}

fn stable_sets(
    shape: &MultiComposition,
    framing: &FramingComposition,
    field: Fp,
    d_flag: &[FqSubspace],
    budget: &Budget,
) -> Result<StableSets> {
    check_framing(shape, framing)?;
    budget.check(
        &format!("stable pairs for {shape} with d={framing} over F_{}", field.p),
        stable_workload(shape, framing, field.p),
    )?;
    let nu = shape.total();
    let d = framing.total();
    let flags = enumerate_flags(shape, field, budget)?;
    let per_flag: Vec<(Vec<u64>, Vec<u64>, usize)> = flags
        .par_iter()
        .map(|flag| {
            let sc = sigma_constraints(flag);
            let rc = rho_constraints(flag, d_flag);
            let null = nullity(field, &sc, nu * nu) + nullity(field, &rc, d * nu);
            (solution_bitset(field, &sc, nu * nu), solution_bitset(field, &rc, d * nu), null)
        })
        .collect();
    let mut sigma = Vec::with_capacity(flags.len());
    let mut rho = Vec::with_capacity(flags.len());
    let mut nullities = Vec::with_capacity(flags.len());
    for (s, r, n) in per_flag {
        sigma.push(s);
        rho.push(r);
        nullities.push(n);
    }
    Ok(StableSets { flags, sigma, rho, nullities })
}

/// Counts stable pairs `((x_σ, x_ρ), V̲)` and checks the bundle prediction
/// `p^{f_1+f_2} · |F_→ν(F_p)|`.
pub fn count_stable_pairs(
    shape: &MultiComposition,
    framing: &FramingComposition,
    p: u32,
    budget: &Budget,
) -> Result<PointCountReport> {
    let field = Fp::new(p)?;
    count_stable_pairs_with_flag(shape, framing, field, &framing_flag(field, framing), budget)
}

/// As [`count_stable_pairs`], against an arbitrary framing flag of type `d̲`.
pub fn count_stable_pairs_with_flag(
    shape: &MultiComposition,
    framing: &FramingComposition,
    field: Fp,
    d_flag: &[FqSubspace],
    budget: &Budget,
) -> Result<PointCountReport> {
    check_framing(shape, framing)?;
    if d_flag.len() != framing.m() + 1 || d_flag.iter().any(|s| s.ambient() != framing.total()) {
        return Err(Error::invalid("framing flag does not match the framing composition"));
    }
    let p = field.p;
    let sets = stable_sets(shape, framing, field, d_flag, budget)?;
    let (f1, f2) = fiber_dims(shape, framing)?;
    let fiber = pow_u128(p as u128, f1 + f2);
    let n_flags = sets.flags.len() as u128;
    let observed: u128 = (0..sets.flags.len()).map(|k| popcount(&sets.sigma[k]) * popcount(&sets.rho[k])).sum();
    let uniform_count = (0..sets.flags.len())
        .filter(|&k| popcount(&sets.sigma[k]) * popcount(&sets.rho[k]) == fiber)
        .count() as u128;
    let uniform_dim = sets.nullities.iter().filter(|&&n| n == f1 + f2).count() as u128;
    let predicted_flags = gaussian_multinomial(shape.refined(), p as u64).to_u128().unwrap_or(u128::MAX);
    Ok(PointCountReport {
        quantity: "stable_pairs".into(),
        p,
        shape: Some(shape.to_string()),
        framing: Some(framing.to_string()),
        nu: Some(shape.total()),
        entries: vec![
            CountEntry::new("flags", n_flags, predicted_flags),
            CountEntry::new("stable_pairs", observed, fiber.saturating_mul(n_flags)),
            CountEntry::new("flags_with_fiber_count_p^(f1+f2)", uniform_count, n_flags),
            CountEntry::new("flags_with_solution_rank_f1+f2", uniform_dim, n_flags),
        ],
        buckets: Vec::new(),
    })
}

/// Counts `Y(F_p)`: triples `(x, V̲, W̲)` with both pairs stable, bucketed by
/// relative position, and checks
/// `|Y_M(F_p)| = |O_M(F_p)| · p^{z_fiber(M) + y_fiber(M, d̲)}`.
pub fn y_point_count(
    shape: &MultiComposition,
    framing: &FramingComposition,
    p: u32,
    budget: &Budget,
) -> Result<PointCountReport> {
    let field = Fp::new(p)?;
    check_framing(shape, framing)?;
    let flags_est = gaussian_multinomial(shape.refined(), p as u64).to_u128().unwrap_or(u128::MAX);
    let nu = shape.total();
    let words = (pow_u128(p as u128, nu * nu) / 64 + 1).saturating_add(pow_u128(p as u128, nu * framing.total()) / 64 + 1);
    budget.check(
        &format!("Y point count for {shape} with d={framing} over F_{p}"),
        stable_workload(shape, framing, p).saturating_add(
            flags_est.saturating_mul(flags_est).saturating_mul(words + (nu as u128).pow(3)),
        ),
    )?;
    let sets = stable_sets(shape, framing, field, &framing_flag(field, framing), budget)?;
    let n = sets.flags.len();

    type Tally = BTreeMap<Vec<usize>, (u128, u128, Vec<u128>)>;
    let partial: Vec<Tally> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut tally = Tally::new();
            for b in 0..n {
                let key = rel_pos_entries(&sets.flags[a].steps, &sets.flags[b].steps);
                let count = popcount_and(&sets.sigma[a], &sets.sigma[b]) * popcount_and(&sets.rho[a], &sets.rho[b]);
                let slot = tally.entry(key).or_insert((0, 0, Vec::new()));
                slot.0 += 1;
                slot.1 += count;
                if !slot.2.contains(&count) {
                    slot.2.push(count);
                }
            }
            tally
        })
        .collect();
    let mut tally = Tally::new();
    for part in partial {
        for (key, (pairs, count, seen)) in part {
            let slot = tally.entry(key).or_insert((0, 0, Vec::new()));
            slot.0 += pairs;
            slot.1 += count;
            for c in seen {
                if !slot.2.contains(&c) {
                    slot.2.push(c);
                }
            }
        }
    }

    let mut buckets = Vec::with_capacity(tally.len());
    let mut total_pairs = 0u128;
    for (entries, (pairs, count, seen)) in tally {
        let matrix = OrbitMatrix::new(shape.clone(), entries)?;
        let exponent = matrix.z_fiber() + matrix.y_fiber(framing)?;
        let per_pair = pow_u128(p as u128, exponent);
        total_pairs += pairs;
        buckets.push(YBucket {
            matrix,
            orbit_points: pairs,
            fiber_exponent: exponent,
            observed: count,
            predicted: pairs * per_pair,
            uniform_fibers: seen == [per_pair],
            matches: count == pairs * per_pair,
        });
    }
    let n = n as u128;
    Ok(PointCountReport {
        quantity: "y_points".into(),
        p,
        shape: Some(shape.to_string()),
        framing: Some(framing.to_string()),
        nu: Some(shape.total()),
        entries: vec![CountEntry::new("flag_pairs", total_pairs, n * n)],
        buckets,
    })
}

/// The Jordan type at eigenvalue 0: the conjugate of the increments of
/// `dim ker x^k`. With `require_nilpotent`, non-nilpotent input is rejected.
pub fn jordan_type(x: &FqMatrix, require_nilpotent: bool) -> Result<Partition> {
    if x.rows() != x.cols() {
        return Err(Error::invalid("Jordan type of a non-square matrix"));
    }
    let n = x.rows();
    if require_nilpotent && !x.is_nilpotent() {
        return Err(Error::invalid("matrix is not nilpotent"));
    }
    let mut increments = Vec::new();
    let mut power = FqMatrix::identity(x.field(), n);
    let mut previous = 0;
    for _ in 0..n {
        power = power.mul(x);
        let k = n - power.rank();
        if k == previous {
            break;
        }
        increments.push(k - previous);
        previous = k;
    }
    Ok(Partition::from_unsorted(increments).conjugate())
}

/// Smallest subspace containing `u` and stable under both operators.
pub fn invariant_hull(u: &FqSubspace, ops: (&FqMatrix, &FqMatrix)) -> FqSubspace {
    let mut current = u.clone();
    loop {
        let next = current.sum(&current.image(ops.0)).sum(&current.image(ops.1));
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Largest subspace contained in `u` and stable under both operators.
pub fn invariant_core(u: &FqSubspace, ops: (&FqMatrix, &FqMatrix)) -> FqSubspace {
    let mut current = u.clone();
    loop {
        let next = current
            .intersection(&current.preimage(ops.0))
            .intersection(&current.preimage(ops.1));
        if next == current {
            return current;
        }
        current = next;
    }
}

/// A point `(x_σ, x_ρ, x_σ̄, x_ρ̄)` of `End V ⊕ Hom(V, D) ⊕ End V ⊕ Hom(D, V)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quadruple {
    pub sigma: FqMatrix,
    pub rho: FqMatrix,
    pub sigma_bar: FqMatrix,
    pub rho_bar: FqMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PiMembership {
    pub moment: bool,
    pub nilpotent: bool,
    pub flag_condition: bool,
}

impl PiMembership {
    pub fn member(&self) -> bool {
        self.moment && self.nilpotent && self.flag_condition
    }
}

/// Evaluates the defining conditions of `Π_{ν,d̲}` against the standard
/// framing flag:
/// `x_σ x_σ̄ − x_σ̄ x_σ − x_ρ̄ x_ρ = 0`, `x_σ` nilpotent, and
/// `hull(x_ρ̄ D_i) ⊆ core(x_ρ^{-1} D_{i+1})` with the `i = m` core taken
/// to be `0`.
pub fn pi_membership_detail(x: &Quadruple, framing: &FramingComposition) -> Result<PiMembership> {
    let nu = x.sigma.rows();
    let d = framing.total();
    let shapes = [
        (x.sigma.rows(), x.sigma.cols(), nu, nu, "x_sigma"),
        (x.rho.rows(), x.rho.cols(), d, nu, "x_rho"),
        (x.sigma_bar.rows(), x.sigma_bar.cols(), nu, nu, "x_sigma_bar"),
        (x.rho_bar.rows(), x.rho_bar.cols(), nu, d, "x_rho_bar"),
    ];
    for (r, c, er, ec, name) in shapes {
        if (r, c) != (er, ec) {
            return Err(Error::invalid(format!("{name} is {r}x{c}, expected {er}x{ec}")));
        }
    }
    let field = x.sigma.field();
    let moment = x
        .sigma
        .mul(&x.sigma_bar)
        .sub(&x.sigma_bar.mul(&x.sigma))
        .sub(&x.rho_bar.mul(&x.rho))
        .is_zero();
    let nilpotent = x.sigma.is_nilpotent();
    let d_flag = framing_flag(field, framing);
    let ops = (&x.sigma, &x.sigma_bar);
    let m = framing.m();
    let flag_condition = (0..m).all(|i| {
        let hull = invariant_hull(&d_flag[i].image(&x.rho_bar), ops);
        let core = if i + 1 == m {
            FqSubspace::zero(field, nu)
        } else {
            invariant_core(&d_flag[i + 1].preimage(&x.rho), ops)
        };
        hull.is_subspace_of(&core)
    });
    Ok(PiMembership { moment, nilpotent, flag_condition })
}

pub fn pi_membership(x: &Quadruple, framing: &FramingComposition) -> Result<bool> {
    Ok(pi_membership_detail(x, framing)?.member())
}

/// Counts commuting pairs `(x_σ, x_σ̄)` with `x_σ` nilpotent by enumerating
/// all `p^{2ν²}` pairs, and compares with `Σ_{x_σ nilpotent} p^{dim ker ad x_σ}`.
pub fn lambda_point_count(nu: usize, p: u32, budget: &Budget) -> Result<PointCountReport> {
    let field = Fp::new(p)?;
    let side = pow_u128(p as u128, nu * nu);
    budget.check(
        &format!("lambda_point_count(nu={nu}, p={p})"),
        side.saturating_mul(side).saturating_mul((nu * nu * nu).max(1) as u128),
    )?;
    let all: Vec<FqMatrix> = (0..side).map(|i| FqMatrix::from_index(field, nu, nu, i)).collect();
    let per_x: Vec<(u128, u128)> = all
        .par_iter()
        .filter(|x| x.is_nilpotent())
        .map(|x| {
            let brute = all.iter().filter(|y| x.mul(y) == y.mul(x)).count() as u128;
            // ad x as a ν²×ν² matrix on row-major entries of y.
            let mut ad = FqMatrix::zeros(field, nu * nu, nu * nu);
            for i in 0..nu {
                for j in 0..nu {
                    let row = i * nu + j;
                    for k in 0..nu {
                        let col_xy = k * nu + j;
                        let v = ad.get(row, col_xy) as i64 + x.get(i, k) as i64;
                        ad.set(row, col_xy, v);
                        let col_yx = i * nu + k;
                        let v = ad.get(row, col_yx) as i64 - x.get(k, j) as i64;
                        ad.set(row, col_yx, v);
                    }
                }
            }
            let predicted = pow_u128(p as u128, nu * nu - ad.rank());
            (brute, predicted)
        })
        .collect();
    let observed = per_x.iter().map(|t| t.0).sum();
    let predicted = per_x.iter().map(|t| t.1).sum();
    Ok(PointCountReport {
        quantity: "lambda_points".into(),
        p,
        shape: None,
        framing: None,
        nu: Some(nu),
        entries: vec![
            CountEntry::new("commuting_nilpotent_pairs", observed, predicted),
            CountEntry::new("nilpotent_matrices", per_x.len() as u128, pow_u128(p as u128, nu * nu - nu)),
        ],
        buckets: Vec::new(),
    })
}

/// Result of the orbit separation demonstration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitDemoReport {
    pub p: u32,
    pub points: usize,
    /// Orbit label of the point with parameter `a`, for `a = 0, …, p−1`;
    /// labels are the smallest parameter in the orbit.
    pub orbit_of: Vec<usize>,
    pub orbits: usize,
    #[serde(serialize_with = "serde_big::u128_str")]
    pub group_elements: u128,
    pub group: String,
}

impl OrbitDemoReport {
    pub fn all_distinct(&self) -> bool {
        self.orbits == self.points
    }
}

fn demo_point(field: Fp, a: u32) -> (FqMatrix, FqMatrix) {
    let sigma = FqMatrix::from_rows(field, &[vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]).expect("3x3");
    let rho = FqMatrix::from_rows(field, &[vec![0, 1, a as i64], vec![1, 0, 0]]).expect("2x3");
    (sigma, rho)
}

/// Invertible 2×2 matrices preserving the given line of `F_p^2`.
fn line_stabilizer(field: Fp, line: &FqSubspace) -> Vec<FqMatrix> {
    (0..pow_u128(field.p as u128, 4))
        .map(|i| FqMatrix::from_index(field, 2, 2, i))
        .filter(|h| h.inverse().is_some() && line.image(h) == *line)
        .collect()
}

fn find(parent: &mut [usize], k: usize) -> usize {
    let mut r = k;
    while parent[r] != r {
        r = parent[r];
    }
    parent[k] = r;
    r
}

fn orbit_demo_with(
    field: Fp,
    d2: &FqSubspace,
    group: impl Iterator<Item = FqMatrix>,
    group_name: String,
) -> OrbitDemoReport {
    let p = field.p;
    let points: Vec<(FqMatrix, FqMatrix)> = (0..p).map(|a| demo_point(field, a)).collect();
    let stabilizer = line_stabilizer(field, d2);
    let mut parent: Vec<usize> = (0..p as usize).collect();
    let mut used = 0u128;
    for g in group {
        let Some(g_inv) = g.inverse() else { continue };
        used += stabilizer.len() as u128;
        let sigma = g.mul(&points[0].0).mul(&g_inv);
        if sigma != points[0].0 {
            continue;
        }
        for h in &stabilizer {
            for a in 0..p as usize {
                let image = h.mul(&points[a].1).mul(&g_inv);
                if let Some(b) = points.iter().position(|pt| pt.1 == image) {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let orbit_of: Vec<usize> = (0..p as usize).map(|a| find(&mut parent, a)).collect();
    let mut labels = orbit_of.clone();
    labels.sort_unstable();
    labels.dedup();
    OrbitDemoReport {
        p,
        points: p as usize,
        orbit_of,
        orbits: labels.len(),
        group_elements: used,
        group: group_name,
    }
}

/// The family `x_σ` = regular nilpotent, `x_ρ = [[0,1,a],[1,0,0]]`
/// (`a ∈ F_p`) with `ν = 3`, `d̲ = (1,1)`, under `GL_3 × P` where `P` fixes
/// `D_2 = span(e_1)`.
///
/// All points share `x_σ`, so any group element relating two of them lies
/// in the centralizer of `x_σ`; only that centralizer is enumerated.
pub fn orbit_family_demo(p: u32, budget: &Budget) -> Result<OrbitDemoReport> {
    let field = Fp::new(p)?;
    let pp = p as u128;
    budget.check(&format!("orbit_family_demo(p={p})"), pp.pow(3) * pp.pow(4) * pp * 64)?;
    let (sigma, _) = demo_point(field, 0);
    let n2 = sigma.mul(&sigma);
    let centralizer = (0..pp.pow(3)).filter_map(move |i| {
        let c = [(i % pp) as i64, ((i / pp) % pp) as i64, (i / (pp * pp)) as i64];
        (c[0] != 0).then(|| {
            FqMatrix::identity(field, 3)
                .scale(c[0])
                .add(&sigma.scale(c[1]))
                .add(&n2.scale(c[2]))
        })
    });
    let d2 = FqSubspace::coordinate(field, 2, [0]);
    Ok(orbit_demo_with(field, &d2, centralizer, "centralizer(x_sigma) x P".into()))
}

/// [`orbit_family_demo`] enumerating all of `GL_3(F_p)`, with a choice of
/// the line `D_2`.
pub fn orbit_family_demo_full_group(p: u32, d2: &FqSubspace, budget: &Budget) -> Result<OrbitDemoReport> {
    let field = Fp::new(p)?;
    if d2.ambient() != 2 || d2.dim() != 1 || d2.field() != field {
        return Err(Error::invalid("D_2 must be a line in F_p^2"));
    }
    let pp = p as u128;
    budget.check(&format!("orbit_family_demo_full_group(p={p})"), pp.pow(9) * pp.pow(4) * pp * 64)?;
    let group = (0..pp.pow(9)).map(move |i| FqMatrix::from_index(field, 3, 3, i));
    Ok(orbit_demo_with(field, d2, group, "GL_3 x P".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit_calculus::{enumerate_multicompositions, enumerate_theta};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(p: u32) -> Fp {
        Fp::new(p).unwrap()
    }

    fn mc(blocks: &[&[usize]]) -> MultiComposition {
        MultiComposition::new(blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    fn fr(parts: &[usize]) -> FramingComposition {
        FramingComposition::new(parts.to_vec()).unwrap()
    }

    fn mat(p: u32, rows: &[Vec<i64>]) -> FqMatrix {
        FqMatrix::from_rows(f(p), rows).unwrap()
    }

    fn random_invertible(field: Fp, n: usize, rng: &mut ChaCha8Rng) -> FqMatrix {
        loop {
            let data = (0..n * n).map(|_| rng.gen_range(0..field.p()) as i64).collect();
            let g = FqMatrix::new(field, n, n, data).unwrap();
            if g.inverse().is_some() {
                return g;
            }
        }
    }

    #[test]
    fn primes_are_validated() {
        assert!(Fp::new(4).is_err());
        assert!(Fp::new(1).is_err());
        assert!(Fp::new(5).is_ok());
    }

    #[test]
    fn matrix_basics() {
        let x = mat(3, &[vec![1, 2], vec![0, 1]]);
        let inv = x.inverse().unwrap();
        assert_eq!(x.mul(&inv), FqMatrix::identity(f(3), 2));
        assert_eq!(x.rank(), 2);
        let singular = mat(2, &[vec![1, 1], vec![1, 1]]);
        assert!(singular.inverse().is_none());
        assert_eq!(singular.kernel(), vec![vec![1, 1]]);
    }

    #[test]
    fn subspace_examples() {
        let b = Budget::default();
        assert_eq!(enumerate_subspaces(f(2), 2, 1, &b).unwrap().len(), 3);
        let zero = enumerate_subspaces(f(3), 3, 0, &b).unwrap();
        assert_eq!(zero, vec![FqSubspace::zero(f(3), 3)]);
        let complete = enumerate_flags(&mc(&[&[1, 1, 1]]), f(2), &b).unwrap();
        assert_eq!(complete.len(), 21);
    }

    #[test]
    fn subspace_counts_match_gaussian_binomials() {
        let b = Budget::default();
        for p in [2, 3] {
            for n in 0..=4 {
                for k in 0..=n {
                    let subs = enumerate_subspaces(f(p), n, k, &b).unwrap();
                    assert_eq!(BigUint::from(subs.len()), gaussian_binomial(n, k, p as u64));
                    let mut dedup = subs.clone();
                    dedup.dedup();
                    assert_eq!(dedup.len(), subs.len());
                    assert!(subs.iter().all(|s| s.dim() == k));
                }
            }
        }
        for shape in enumerate_multicompositions(4, 2) {
            let flags = enumerate_flags(&shape, f(2), &b).unwrap();
            assert_eq!(BigUint::from(flags.len()), gaussian_multinomial(shape.refined(), 2));
            for fl in &flags {
                FqFlag::new(f(2), shape.clone(), fl.steps().to_vec()).unwrap();
            }
        }
    }

    #[test]
    fn enumeration_refuses_over_budget() {
        let tiny = Budget::new(10);
        let err = enumerate_subspaces(f(3), 4, 2, &tiny).unwrap_err();
        assert_eq!(err.reason(), "resource_limit");
    }

    #[test]
    fn intersection_and_preimage() {
        let field = f(2);
        let a = FqSubspace::coordinate(field, 3, [0, 1]);
        let b = FqSubspace::coordinate(field, 3, [1, 2]);
        assert_eq!(a.intersection(&b), FqSubspace::coordinate(field, 3, [1]));
        assert_eq!(a.sum(&b), FqSubspace::full(field, 3));
        let shift = mat(2, &[vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]);
        let e1 = FqSubspace::coordinate(field, 3, [0]);
        assert_eq!(e1.preimage(&shift), FqSubspace::coordinate(field, 3, [0, 1]));
        assert_eq!(FqSubspace::coordinate(field, 3, [1]).image(&shift), e1);
    }

    #[test]
    fn rel_pos_examples() {
        let field = f(2);
        let b = Budget::default();
        let shape = mc(&[&[1, 1]]);
        let flags = enumerate_flags(&shape, field, &b).unwrap();
        for v in &flags {
            assert_eq!(rel_pos(v, v).unwrap().entries(), &[1, 0, 0, 1]);
            for w in &flags {
                if v != w {
                    assert_eq!(rel_pos(v, w).unwrap().entries(), &[0, 1, 1, 0]);
                }
            }
        }
        let other = enumerate_flags(&mc(&[&[2]]), field, &b).unwrap();
        assert!(rel_pos(&flags[0], &other[0]).is_err());
    }

    #[test]
    fn rel_pos_surjects_and_coarsens() {
        let field = f(2);
        let b = Budget::default();
        for nu in 1..=4 {
            for m in 1..=nu {
                for shape in enumerate_multicompositions(nu, m) {
                    let flags = enumerate_flags(&shape, field, &b).unwrap();
                    let theta: Vec<Vec<usize>> =
                        enumerate_theta(&shape, 8).unwrap().iter().map(|t| t.entries().to_vec()).collect();
                    let coarse: Vec<Vec<FqSubspace>> = flags.iter().map(FqFlag::coarse_steps).collect();
                    let seen: std::collections::BTreeSet<Vec<usize>> = flags
                        .par_iter()
                        .enumerate()
                        .flat_map_iter(|(i, v)| {
                            let coarse = &coarse;
                            flags.iter().enumerate().map(move |(j, w)| {
                                let r = rel_pos(v, w).unwrap();
                                let blocks: Vec<usize> = r.n_block().concat();
                                assert_eq!(blocks, rel_pos_entries(&coarse[i], &coarse[j]));
                                r.entries().to_vec()
                            })
                        })
                        .collect();
                    let expected: std::collections::BTreeSet<Vec<usize>> = theta.into_iter().collect();
                    assert_eq!(seen, expected, "{shape}");
                }
            }
        }
    }

    #[test]
    fn rel_pos_is_gl_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = Budget::default();
        for (p, shape) in [(2, mc(&[&[1, 1, 1]])), (3, mc(&[&[1], &[2]])), (3, mc(&[&[1, 1], &[1]]))] {
            let field = f(p);
            let flags = enumerate_flags(&shape, field, &b).unwrap();
            for _ in 0..100 {
                let v = &flags[rng.gen_range(0..flags.len())];
                let w = &flags[rng.gen_range(0..flags.len())];
                let g = random_invertible(field, shape.total(), &mut rng);
                assert_eq!(rel_pos(&v.transform(&g), &w.transform(&g)).unwrap(), rel_pos(v, w).unwrap());
            }
        }
    }

    #[test]
    fn stable_pair_examples() {
        let b = Budget::default();
        let r = count_stable_pairs(&mc(&[&[1, 1]]), &fr(&[1]), 2, &b).unwrap();
        assert_eq!(r.entry("stable_pairs").unwrap().observed, 24);
        assert!(r.all_match());
        let r = count_stable_pairs(&mc(&[&[1], &[1]]), &fr(&[1, 1]), 2, &b).unwrap();
        assert_eq!(r.entry("stable_pairs").unwrap().observed, 48);
        assert!(r.all_match());
        let r = count_stable_pairs(&mc(&[&[1, 1]]), &fr(&[0]), 3, &b).unwrap();
        // f_2 = 1, four lines in F_3^2.
        assert_eq!(r.entry("stable_pairs").unwrap().observed, 3 * 4);
        assert!(r.all_match());
    }

    #[test]
    fn y_bucket_examples() {
        let b = Budget::default();
        let r = y_point_count(&mc(&[&[1, 1]]), &fr(&[1]), 2, &b).unwrap();
        assert!(r.all_match());
        let find = |e: &[usize]| r.buckets.iter().find(|x| x.matrix.entries() == e).unwrap();
        let id = find(&[1, 0, 0, 1]);
        assert_eq!((id.orbit_points, id.fiber_exponent, id.observed), (3, 3, 24));
        let swap = find(&[0, 1, 1, 0]);
        assert_eq!((swap.orbit_points, swap.fiber_exponent, swap.observed), (6, 2, 24));

        let single = y_point_count(&mc(&[&[2]]), &fr(&[1]), 2, &b).unwrap();
        assert_eq!(single.buckets.len(), 1);
        let stable = count_stable_pairs(&mc(&[&[2]]), &fr(&[1]), 2, &b).unwrap();
        assert_eq!(single.buckets[0].observed, stable.entry("stable_pairs").unwrap().observed);
    }

    #[test]
    fn framing_flag_choice_does_not_matter() {
        let field = f(2);
        let b = Budget::default();
        for (shape, framing) in [(mc(&[&[1], &[1, 1]]), fr(&[1, 1])), (mc(&[&[1], &[2]]), fr(&[2, 1]))] {
            let std = count_stable_pairs(&shape, &framing, 2, &b).unwrap();
            let alt =
                count_stable_pairs_with_flag(&shape, &framing, field, &opposite_framing_flag(field, &framing), &b)
                    .unwrap();
            assert_eq!(std, alt);
        }
    }

    #[test]
    fn degree_checks_for_two_step_flags() {
        let b = Budget::default();
        for p in [2u128, 3, 5] {
            let r = y_point_count(&mc(&[&[1, 1]]), &fr(&[0]), p as u32, &b).unwrap();
            let find = |e: &[usize]| r.buckets.iter().find(|x| x.matrix.entries() == e).unwrap().orbit_points;
            assert_eq!(find(&[1, 0, 0, 1]), p + 1);
            assert_eq!(find(&[0, 1, 1, 0]), p * p + p);
        }
    }

    #[test]
    fn jordan_examples() {
        let zero = FqMatrix::zeros(f(2), 2, 2);
        assert_eq!(jordan_type(&zero, true).unwrap().parts(), &[1, 1]);
        let block = mat(2, &[vec![0, 1], vec![0, 0]]);
        assert_eq!(jordan_type(&block, true).unwrap().parts(), &[2]);
        let id = FqMatrix::identity(f(2), 2);
        assert!(jordan_type(&id, true).is_err());
        assert!(jordan_type(&id, false).unwrap().is_empty());
    }

    #[test]
    fn stable_x_sigma_is_nilpotent_with_bounded_type() {
        let field = f(2);
        for nu in 1..=3 {
            for m in 1..=nu {
                for shape in enumerate_multicompositions(nu, m) {
                    let flag = FqFlag::standard(field, &shape);
                    let cons = sigma_constraints(&flag);
                    let bits = solution_bitset(field, &cons, nu * nu);
                    let mut types = Vec::new();
                    for idx in 0..pow_u128(2, nu * nu) {
                        if bits[idx as usize / 64] >> (idx % 64) & 1 == 1 {
                            let x = FqMatrix::from_index(field, nu, nu, idx);
                            assert!(x.pow(nu).is_zero());
                            types.push(jordan_type(&x, true).unwrap());
                        }
                    }
                    let top = crate::Composition::new(shape.refined().to_vec()).unwrap().sorted().conjugate();
                    assert!(types.contains(&top), "{shape}");
                    assert!(types.iter().all(|t| t.dominance_leq(&top).unwrap()), "{shape}");
                }
            }
        }
    }

    #[test]
    fn hull_and_core_examples() {
        let field = f(2);
        let shift = mat(2, &[vec![0, 1], vec![0, 0]]);
        let zero = FqMatrix::zeros(field, 2, 2);
        let e2 = FqSubspace::coordinate(field, 2, [1]);
        let e1 = FqSubspace::coordinate(field, 2, [0]);
        assert_eq!(invariant_hull(&e2, (&shift, &zero)), FqSubspace::full(field, 2));
        assert_eq!(invariant_core(&e1, (&shift, &zero)), e1);
        assert_eq!(invariant_hull(&e1, (&shift, &zero)), e1);
        assert_eq!(invariant_core(&e2, (&shift, &zero)), FqSubspace::zero(field, 2));
    }

    #[test]
    fn hull_and_core_laws() {
        let field = f(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let rand_mat = |rng: &mut ChaCha8Rng| {
                FqMatrix::new(field, n, n, (0..n * n).map(|_| rng.gen_range(0..2)).collect()).unwrap()
            };
            let a = rand_mat(&mut rng);
            let b = rand_mat(&mut rng);
            let rand_sub = |rng: &mut ChaCha8Rng| {
                let k = rng.gen_range(0..=n);
                FqSubspace::span(field, n, (0..k).map(|_| (0..n).map(|_| rng.gen_range(0..2)).collect()).collect())
            };
            let u = rand_sub(&mut rng);
            let w = u.sum(&rand_sub(&mut rng));
            let ops = (&a, &b);
            let hull = invariant_hull(&u, ops);
            let core = invariant_core(&u, ops);
            assert!(u.is_subspace_of(&hull) && core.is_subspace_of(&u));
            assert_eq!(invariant_hull(&hull, ops), hull);
            assert_eq!(invariant_core(&core, ops), core);
            assert!(hull.image(&a).is_subspace_of(&hull) && hull.image(&b).is_subspace_of(&hull));
            assert!(core.image(&a).is_subspace_of(&core) && core.image(&b).is_subspace_of(&core));
            assert!(hull.is_subspace_of(&invariant_hull(&w, ops)));
            assert!(core.is_subspace_of(&invariant_core(&w, ops)));
            // Duality: core(U)^⊥ = hull(U^⊥) under the transposed operators.
            let (at, bt) = (a.transpose(), b.transpose());
            assert_eq!(core.annihilator(), invariant_hull(&u.annihilator(), (&at, &bt)));
        }
    }

    #[test]
    fn pi_membership_examples() {
        let field = f(3);
        let framing = fr(&[1, 1]);
        let zero = Quadruple {
            sigma: FqMatrix::zeros(field, 2, 2),
            rho: FqMatrix::zeros(field, 2, 2),
            sigma_bar: FqMatrix::zeros(field, 2, 2),
            rho_bar: FqMatrix::zeros(field, 2, 2),
        };
        assert!(pi_membership(&zero, &framing).unwrap());
        let bad = Quadruple {
            sigma: mat(3, &[vec![0, 1], vec![0, 0]]),
            sigma_bar: mat(3, &[vec![1, 0], vec![0, 2]]),
            ..zero.clone()
        };
        let detail = pi_membership_detail(&bad, &framing).unwrap();
        assert!(!detail.moment && detail.nilpotent);
        assert!(!pi_membership(&bad, &framing).unwrap());
        let wrong_shape = Quadruple { rho: FqMatrix::zeros(field, 1, 2), ..zero };
        assert!(pi_membership(&wrong_shape, &framing).is_err());
    }

    #[test]
    fn lambda_examples() {
        let b = Budget::default();
        let r = lambda_point_count(2, 2, &b).unwrap();
        assert_eq!(r.entry("commuting_nilpotent_pairs").unwrap().observed, 28);
        assert!(r.all_match());
        assert!(lambda_point_count(2, 3, &b).unwrap().all_match());
        assert_eq!(lambda_point_count(3, 3, &b).unwrap_err().reason(), "resource_limit");
    }

    #[test]
    fn orbit_demo() {
        let b = Budget::default();
        for p in [2, 3, 5] {
            let r = orbit_family_demo(p, &b).unwrap();
            assert_eq!(r.orbits, p as usize);
            assert_eq!(r.orbit_of, (0..p as usize).collect::<Vec<_>>());
        }
        let field = f(2);
        let e1 = FqSubspace::coordinate(field, 2, [0]);
        let full = orbit_family_demo_full_group(2, &e1, &b).unwrap();
        assert_eq!(full.orbits, 2);
        assert_eq!(full.group_elements, 168 * 2);
        // With the other coordinate line the family collapses.
        let e2 = FqSubspace::coordinate(field, 2, [1]);
        assert_eq!(orbit_family_demo_full_group(2, &e2, &b).unwrap().orbits, 1);
    }
}
