//! The Fock space `F = Q[x_1, x_2, …]` with `deg x_i = i`, its Heisenberg
//! operators, the coproduct `Δ(x_n) = Σ_i x_{n−i} ⊗ x_i` and the Hall
//! pairing.
//!
//! `x_n` is the complete homogeneous generator, so the pairing of two
//! monomials counts integer matrices with the monomials' exponents as
//! margins. The same pairing is also computed through the power-sum basis,
//! where `⟨p_λ, p_μ⟩ = δ_{λμ} z_λ`.
//!
//! Operators are degree-bounded tables: the image of every monomial key up
//! to a working degree. Applying an operator above its bound is an error.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::orbit_calculus::count_margin_tables;
use crate::partitions::{enumerate_partitions, factorial, weak_compositions, MultiPartition, Partition};
use crate::serde_big;
use crate::{Error, FramingComposition, MultiComposition, Result};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn merge_keys(a: &Partition, b: &Partition) -> Partition {
    let mut parts = Vec::with_capacity(a.len() + b.len());
    parts.extend_from_slice(a.parts());
    parts.extend_from_slice(b.parts());
    Partition::from_unsorted(parts)
}

/// A finitely supported rational combination of monomials `x^α`, keyed by
/// the partition `α` of exponents.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SymFunc {
    terms: BTreeMap<Partition, BigRational>,
}

impl SymFunc {
    pub fn zero() -> Self {
        SymFunc::default()
    }

    pub fn one() -> Self {
        Self::monomial(Partition::empty())
    }

    pub fn monomial(key: Partition) -> Self {
        Self::term(key, BigRational::one())
    }

    pub fn term(key: Partition, coeff: BigRational) -> Self {
        let mut f = SymFunc::zero();
        f.add_term(key, coeff);
        f
    }

    /// The generator `x_i`.
    pub fn generator(i: usize) -> Self {
        assert!(i >= 1, "generators are indexed from 1");
        Self::monomial(Partition::new(vec![i]).expect("positive part"))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Partition, BigRational)>) -> Self {
        let mut f = SymFunc::zero();
        for (k, c) in terms {
            f.add_term(k, c);
        }
        f
    }

    pub fn add_term(&mut self, key: Partition, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> &BTreeMap<Partition, BigRational> {
        &self.terms
    }

    pub fn coefficient(&self, key: &Partition) -> BigRational {
        self.terms.get(key).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(Partition::size).max()
    }

    /// The degree of a nonzero homogeneous element.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degrees = self.terms.keys().map(Partition::size);
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn scale(&self, c: &BigRational) -> SymFunc {
        if c.is_zero() {
            return SymFunc::zero();
        }
        SymFunc {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }
}

impl Add for &SymFunc {
    type Output = SymFunc;
    fn add(self, rhs: &SymFunc) -> SymFunc {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }
}

impl Sub for &SymFunc {
    type Output = SymFunc;
    fn sub(self, rhs: &SymFunc) -> SymFunc {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &SymFunc {
    type Output = SymFunc;
    fn neg(self) -> SymFunc {
        self.scale(&rat(-1))
    }
}

impl Mul for &SymFunc {
    type Output = SymFunc;
    fn mul(self, rhs: &SymFunc) -> SymFunc {
        let mut out = SymFunc::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term(merge_keys(a, b), ca * cb);
            }
        }
        out
    }
}

/// All monomial keys of degree at most `bound`, ascending by degree.
pub fn keys_up_to(bound: usize) -> Vec<Partition> {
    (0..=bound).flat_map(enumerate_partitions).collect()
}

/// A linear map on `F` that shifts degree by `shift`, stored as its action
/// on every monomial of degree at most `bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearOperator {
    shift: isize,
    bound: usize,
    table: BTreeMap<Partition, SymFunc>,
}

impl LinearOperator {
    pub fn from_fn(shift: isize, bound: usize, f: impl Fn(&Partition) -> SymFunc + Sync) -> Self {
        let keys = keys_up_to(bound);
        let images: Vec<SymFunc> = keys.par_iter().map(&f).collect();
        LinearOperator {
            shift,
            bound,
            table: keys.into_iter().zip(images).collect(),
        }
    }

    pub fn identity(bound: usize) -> Self {
        Self::from_fn(0, bound, |k| SymFunc::monomial(k.clone()))
    }

    pub fn scalar(c: &BigRational, bound: usize) -> Self {
        Self::from_fn(0, bound, |k| SymFunc::term(k.clone(), c.clone()))
    }

    pub fn zero(shift: isize, bound: usize) -> Self {
        Self::from_fn(shift, bound, |_| SymFunc::zero())
    }

    pub fn shift(&self) -> isize {
        self.shift
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn apply_key(&self, key: &Partition) -> Result<&SymFunc> {
        self.table.get(key).ok_or_else(|| {
            Error::limit(
                format!("operator applied to a monomial of degree {} (table bound {})", key.size(), self.bound),
                key.size() as u128,
                self.bound as u128,
            )
        })
    }

    pub fn apply(&self, f: &SymFunc) -> Result<SymFunc> {
        let mut out = SymFunc::zero();
        for (k, c) in f.terms() {
            for (k2, c2) in self.apply_key(k)?.terms() {
                out.add_term(k2.clone(), c * c2);
            }
        }
        Ok(out)
    }

    /// `self ∘ inner`, tabulated on the keys of `inner` whose image stays
    /// inside `self`'s table.
    pub fn compose(&self, inner: &LinearOperator) -> Result<LinearOperator> {
        let limit = self.bound as isize - inner.shift;
        if limit < 0 {
            return Err(Error::invalid("composition leaves the outer operator's table"));
        }
        let bound = inner.bound.min(limit as usize);
        let keys = keys_up_to(bound);
        let images = keys
            .par_iter()
            .map(|k| self.apply(inner.apply_key(k)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(LinearOperator {
            shift: self.shift + inner.shift,
            bound,
            table: keys.into_iter().zip(images).collect(),
        })
    }

    fn combine(&self, other: &LinearOperator, sign: i64) -> Result<LinearOperator> {
        if self.shift != other.shift {
            return Err(Error::invalid(format!(
                "cannot add operators of degree shifts {} and {}",
                self.shift, other.shift
            )));
        }
        let bound = self.bound.min(other.bound);
        let s = rat(sign);
        let table = keys_up_to(bound)
            .into_iter()
            .map(|k| {
                let v = self.table[&k].clone();
                let w = other.table[&k].scale(&s);
                (k, &v + &w)
            })
            .collect();
        Ok(LinearOperator {
            shift: self.shift,
            bound,
            table,
        })
    }

    pub fn add(&self, other: &LinearOperator) -> Result<LinearOperator> {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &LinearOperator) -> Result<LinearOperator> {
        self.combine(other, -1)
    }

    /// Keys (at most `bound`) on which `self` and `other` disagree.
    pub fn disagreements(&self, other: &LinearOperator, bound: usize) -> Vec<Partition> {
        keys_up_to(bound.min(self.bound).min(other.bound))
            .into_iter()
            .filter(|k| self.table[k] != other.table[k])
            .collect()
    }
}

/// `d ∂/∂x_i`.
pub fn op_p(i: usize, d: &BigRational, bound: usize) -> LinearOperator {
    LinearOperator::from_fn(-(i as isize), bound, |key| {
        let mult = key.multiplicity(i);
        if mult == 0 {
            return SymFunc::zero();
        }
        let mut parts = key.parts().to_vec();
        let pos = parts.iter().position(|&p| p == i).expect("present");
        parts.remove(pos);
        SymFunc::term(Partition::from_unsorted(parts), d * rat(mult as i64))
    })
}

/// Multiplication by `x_i`.
pub fn op_q(i: usize, bound: usize) -> LinearOperator {
    multiplication_operator(&SymFunc::generator(i), bound)
}

/// Multiplication by a homogeneous element.
pub fn multiplication_operator(f: &SymFunc, bound: usize) -> LinearOperator {
    let shift = f.homogeneous_degree().unwrap_or(0) as isize;
    LinearOperator::from_fn(shift, bound, |key| &SymFunc::monomial(key.clone()) * f)
}

/// `a_i`: multiplication by `x_i`.
pub fn op_a(i: usize, bound: usize) -> LinearOperator {
    op_q(i, bound)
}

/// `b_i = x_i^*`: apply `Δ`, then pair the second leg with `x_i`.
pub fn op_b(i: usize, bound: usize) -> LinearOperator {
    adjoint_operator(&SymFunc::generator(i), bound)
}

/// `f^*(y) = (id ⊗ ⟨f, −⟩)(Δ y)` for homogeneous `f`.
pub fn adjoint_operator(f: &SymFunc, bound: usize) -> LinearOperator {
    let deg = f.homogeneous_degree().unwrap_or(0);
    LinearOperator::from_fn(-(deg as isize), bound, |key| {
        let mut out = SymFunc::zero();
        if key.size() < deg {
            return out;
        }
        for ((left, right), c) in coproduct_monomial(key).terms() {
            if right.size() != deg {
                continue;
            }
            let pairing = hall_pair(f, &SymFunc::monomial(right.clone()));
            if !pairing.is_zero() {
                out.add_term(left.clone(), c * pairing);
            }
        }
        out
    })
}

/// A finitely supported combination of tensors `x^α ⊗ x^β`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Coproduct {
    terms: BTreeMap<(Partition, Partition), BigRational>,
}

impl Coproduct {
    pub fn terms(&self) -> &BTreeMap<(Partition, Partition), BigRational> {
        &self.terms
    }

    fn add_term(&mut self, key: (Partition, Partition), c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(key).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    fn mul(&self, other: &Coproduct) -> Coproduct {
        let mut out = Coproduct::default();
        for ((a, b), c) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                out.add_term((merge_keys(a, a2), merge_keys(b, b2)), c * c2);
            }
        }
        out
    }

    pub fn coefficient(&self, left: &Partition, right: &Partition) -> BigRational {
        self.terms
            .get(&(left.clone(), right.clone()))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }
}

/// `Δ(x^α) = Π_k Σ_{i=0}^{α_k} x_{α_k − i} ⊗ x_i`, with `x_0 = 1`.
pub fn coproduct_monomial(key: &Partition) -> Coproduct {
    let mut acc = Coproduct::default();
    acc.add_term((Partition::empty(), Partition::empty()), BigRational::one());
    for &n in key.parts() {
        let mut factor = Coproduct::default();
        for i in 0..=n {
            let left = Partition::from_unsorted(vec![n - i]);
            let right = Partition::from_unsorted(vec![i]);
            factor.add_term((left, right), BigRational::one());
        }
        acc = acc.mul(&factor);
    }
    acc
}

pub fn coproduct(f: &SymFunc, degree_bound: usize) -> Result<Coproduct> {
    let mut out = Coproduct::default();
    for (k, c) in f.terms() {
        if k.size() > degree_bound {
            return Err(Error::limit(
                format!("coproduct of a monomial of degree {}", k.size()),
                k.size() as u128,
                degree_bound as u128,
            ));
        }
        for (pair, c2) in coproduct_monomial(k).terms() {
            out.add_term(pair.clone(), c * c2);
        }
    }
    Ok(out)
}

/// `⟨x^α, x^β⟩`: the number of nonnegative integer matrices with row sums
/// `α` and column sums `β`.
pub fn hall_pair_matrices(alpha: &Partition, beta: &Partition) -> BigUint {
    if alpha.size() != beta.size() {
        return BigUint::zero();
    }
    count_margin_tables(alpha.parts(), beta.parts())
}

/// Bilinear extension of [`hall_pair_matrices`].
pub fn hall_pair(f: &SymFunc, g: &SymFunc) -> BigRational {
    let mut total = BigRational::zero();
    for (a, ca) in f.terms() {
        for (b, cb) in g.terms() {
            let count = hall_pair_matrices(a, b);
            if !count.is_zero() {
                total += ca * cb * BigRational::from_integer(BigInt::from(count));
            }
        }
    }
    total
}

/// `z_λ = Π_i i^{m_i} m_i!`.
pub fn z_lambda(lambda: &Partition) -> BigUint {
    let mut z = BigUint::one();
    let mut k = 0;
    let parts = lambda.parts();
    while k < parts.len() {
        let i = parts[k];
        let mult = parts[k..].iter().take_while(|&&p| p == i).count();
        z *= BigUint::from(i).pow(mult as u32) * factorial(mult);
        k += mult;
    }
    z
}

static H_TO_P: Mutex<Vec<SymFunc>> = Mutex::new(Vec::new());

/// `x_n` written in the power-sum basis (keys are power-sum partitions).
/// Uses `n h_n = Σ_{k=1}^n p_k h_{n−k}`; results are memoized.
pub fn h_to_p(n: usize) -> SymFunc {
    let mut cache = H_TO_P.lock().expect("h_to_p cache poisoned");
    if cache.is_empty() {
        cache.push(SymFunc::one());
    }
    while cache.len() <= n {
        let m = cache.len();
        let mut acc = SymFunc::zero();
        for k in 1..=m {
            let pk = SymFunc::generator(k);
            acc = &acc + &(&pk * &cache[m - k]);
        }
        cache.push(acc.scale(&BigRational::new(BigInt::one(), BigInt::from(m))));
    }
    cache[n].clone()
}

/// Change of basis from monomials in the `x_i` to power sums.
pub fn to_powersum(f: &SymFunc) -> SymFunc {
    let mut out = SymFunc::zero();
    for (k, c) in f.terms() {
        let expanded = k.parts().iter().fold(SymFunc::one(), |acc, &n| &acc * &h_to_p(n));
        out = &out + &expanded.scale(c);
    }
    out
}

/// The pairing computed in the power-sum basis.
pub fn hall_pair_powersum(f: &SymFunc, g: &SymFunc) -> BigRational {
    let pf = to_powersum(f);
    let pg = to_powersum(g);
    let mut total = BigRational::zero();
    for (lambda, c) in pf.terms() {
        let d = pg.coefficient(lambda);
        if !d.is_zero() {
            total += c * d * BigRational::from_integer(BigInt::from(z_lambda(lambda)));
        }
    }
    total
}

/// The power sum `p_n` written in the monomials `x^α`, from
/// `p_n = n x_n − Σ_{k=1}^{n−1} x_{n−k} p_k`.
pub fn powersum_in_h(n: usize) -> SymFunc {
    let mut ps: Vec<SymFunc> = vec![SymFunc::zero()];
    for m in 1..=n {
        let mut acc = SymFunc::generator(m).scale(&rat(m as i64));
        for k in 1..m {
            acc = &acc - &(&SymFunc::generator(m - k) * &ps[k]);
        }
        ps.push(acc);
    }
    ps.swap_remove(n)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RelationViolation {
    pub relation: String,
    pub i: usize,
    pub j: usize,
    pub key: Partition,
}

/// Result of checking a family of operator identities on every monomial up
/// to `max_deg`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    pub algebra: String,
    pub convention: String,
    pub max_deg: usize,
    pub checks: usize,
    pub violations: Vec<RelationViolation>,
    /// Violations of an alternative reading that is expected to fail; kept
    /// for documentation, never part of the verdict.
    pub alternative_reading: Option<AlternativeReading>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlternativeReading {
    pub statement: String,
    pub violations: usize,
    pub first: Option<RelationViolation>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Family<'a> {
    name: &'static str,
    i: usize,
    j: usize,
    lhs: LinearOperator,
    rhs: &'a dyn Fn() -> Result<LinearOperator>,
}

fn check_family(family: Family<'_>, bound: usize) -> Result<(usize, Vec<RelationViolation>)> {
    let rhs = (family.rhs)()?;
    let bad = family.lhs.disagreements(&rhs, bound);
    let checks = keys_up_to(bound.min(family.lhs.bound()).min(rhs.bound())).len();
    Ok((
        checks,
        bad.into_iter()
            .map(|key| RelationViolation {
                relation: family.name.to_string(),
                i: family.i,
                j: family.j,
                key,
            })
            .collect(),
    ))
}

/// Checks `[p_i, q_j] = δ_{ij} c`, `[p_i, p_j] = 0`, `[q_i, q_j] = 0` on
/// `F(d)` for all `i, j ≤ max_deg` and monomials of degree `≤ max_deg`.
pub fn verify_h_relations(d: &BigRational, max_deg: usize) -> Result<RelationReport> {
    let table_bound = 2 * max_deg;
    let ps: Vec<LinearOperator> = (0..=max_deg).map(|i| if i == 0 { LinearOperator::zero(0, 0) } else { op_p(i, d, table_bound) }).collect();
    let qs: Vec<LinearOperator> = (0..=max_deg).map(|i| if i == 0 { LinearOperator::zero(0, 0) } else { op_q(i, table_bound) }).collect();
    let central = LinearOperator::scalar(d, table_bound);
    let c = &central;
    let pairs: Vec<(usize, usize)> = (1..=max_deg).flat_map(|i| (1..=max_deg).map(move |j| (i, j))).collect();

    let results = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(usize, Vec<RelationViolation>)> {
            let mut checks = 0;
            let mut bad = Vec::new();
            let pq = ps[i].compose(&qs[j])?.sub(&qs[j].compose(&ps[i])?)?;
            let expected_shift = pq.shift();
            let rhs_pq = move || -> Result<LinearOperator> {
                if i == j {
                    Ok(c.clone())
                } else {
                    Ok(LinearOperator::zero(expected_shift, table_bound))
                }
            };
            let (n, v) = check_family(Family { name: "[p_i,q_j]=delta_ij c", i, j, lhs: pq, rhs: &rhs_pq }, max_deg)?;
            checks += n;
            bad.extend(v);

            let pp = ps[i].compose(&ps[j])?.sub(&ps[j].compose(&ps[i])?)?;
            let shift = pp.shift();
            let zero = move || Ok(LinearOperator::zero(shift, table_bound));
            let (n, v) = check_family(Family { name: "[p_i,p_j]=0", i, j, lhs: pp, rhs: &zero }, max_deg)?;
            checks += n;
            bad.extend(v);

            let qq = qs[i].compose(&qs[j])?.sub(&qs[j].compose(&qs[i])?)?;
            let shift = qq.shift();
            let zero = move || Ok(LinearOperator::zero(shift, table_bound));
            let (n, v) = check_family(Family { name: "[q_i,q_j]=0", i, j, lhs: qq, rhs: &zero }, max_deg)?;
            checks += n;
            bad.extend(v);

            // c is central.
            let pc = ps[i].compose(c)?.sub(&c.compose(&ps[i])?)?;
            let shift = pc.shift();
            let zero = move || Ok(LinearOperator::zero(shift, table_bound));
            let (n, v) = check_family(Family { name: "[c,p_i]=0", i, j, lhs: pc, rhs: &zero }, max_deg)?;
            checks += n;
            bad.extend(v);
            Ok((checks, bad))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut checks = 0;
    let mut violations = Vec::new();
    for (n, v) in results {
        checks += n;
        violations.extend(v);
    }
    violations.sort();
    Ok(RelationReport {
        algebra: "H".into(),
        convention: format!("p_i = d d/dx_i, q_i = x_i, c = d with d = {}", serde_big::format_rational(d)),
        max_deg,
        checks,
        violations,
        alternative_reading: None,
    })
}

/// Checks `a_i a_j = a_j a_i`, `b_i b_j = b_j b_i` and
/// `b_j ∘ a_i = Σ_{k=0}^{min(i,j)} a_{i−k} ∘ b_{j−k}` (with `a_0 = b_0 = 1`)
/// on monomials of degree `≤ max_deg`.
///
/// The report also counts the failures of the reading with the composition
/// order reversed on both sides, `a_i ∘ b_j = Σ_k b_{j−k} ∘ a_{i−k}`.
pub fn verify_hprime_relations(max_deg: usize) -> Result<RelationReport> {
    let table_bound = 2 * max_deg;
    let a: Vec<LinearOperator> = (0..=max_deg)
        .map(|i| if i == 0 { LinearOperator::identity(table_bound) } else { op_a(i, table_bound) })
        .collect();
    let b: Vec<LinearOperator> = (0..=max_deg)
        .map(|i| if i == 0 { LinearOperator::identity(table_bound) } else { op_b(i, table_bound) })
        .collect();
    let pairs: Vec<(usize, usize)> = (1..=max_deg).flat_map(|i| (1..=max_deg).map(move |j| (i, j))).collect();

    let results = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(usize, Vec<RelationViolation>, Vec<RelationViolation>)> {
            let mut checks = 0;
            let mut bad = Vec::new();

            let aa = a[i].compose(&a[j])?;
            let aa_rev = a[j].compose(&a[i])?;
            let r = || Ok(aa_rev.clone());
            let (n, v) = check_family(Family { name: "a_i a_j = a_j a_i", i, j, lhs: aa, rhs: &r }, max_deg)?;
            checks += n;
            bad.extend(v);

            let bb = b[i].compose(&b[j])?;
            let bb_rev = b[j].compose(&b[i])?;
            let r = || Ok(bb_rev.clone());
            let (n, v) = check_family(Family { name: "b_i b_j = b_j b_i", i, j, lhs: bb, rhs: &r }, max_deg)?;
            checks += n;
            bad.extend(v);

            let ba = b[j].compose(&a[i])?;
            let sum = || -> Result<LinearOperator> {
                let mut acc = a[i].compose(&b[j])?;
                for k in 1..=i.min(j) {
                    acc = acc.add(&a[i - k].compose(&b[j - k])?)?;
                }
                Ok(acc)
            };
            let (n, v) = check_family(
                Family { name: "b_j a_i = sum_k a_(i-k) b_(j-k)", i, j, lhs: ba, rhs: &sum },
                max_deg,
            )?;
            checks += n;
            bad.extend(v);

            let ab = a[i].compose(&b[j])?;
            let literal = || -> Result<LinearOperator> {
                let mut acc = b[j].compose(&a[i])?;
                for k in 1..=i.min(j) {
                    acc = acc.add(&b[j - k].compose(&a[i - k])?)?;
                }
                Ok(acc)
            };
            let (_, lit) = check_family(
                Family { name: "a_i b_j = sum_k b_(j-k) a_(i-k)", i, j, lhs: ab, rhs: &literal },
                max_deg,
            )?;
            Ok((checks, bad, lit))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut checks = 0;
    let mut violations = Vec::new();
    let mut literal = Vec::new();
    for (n, v, l) in results {
        checks += n;
        violations.extend(v);
        literal.extend(l);
    }
    violations.sort();
    literal.sort();
    Ok(RelationReport {
        algebra: "H'".into(),
        convention: "a_i = x_i, b_i = x_i^*; mixed relation read as b_j∘a_i = Σ_{k=0}^{min(i,j)} a_{i−k}∘b_{j−k}".into(),
        max_deg,
        checks,
        violations,
        alternative_reading: Some(AlternativeReading {
            statement: "a_i∘b_j = Σ_{k=0}^{min(i,j)} b_{j−k}∘a_{i−k}".into(),
            violations: literal.len(),
            first: literal.into_iter().next(),
        }),
    })
}

/// With `P_i` multiplication by the power sum `p_i` and `P_i^⊥` its
/// adjoint under the Hall pairing, checks `[P_i^⊥, P_j] = i δ_{ij}`.
pub fn verify_scaled_primitive(max_deg: usize) -> Result<RelationReport> {
    let table_bound = 2 * max_deg;
    let mult: Vec<LinearOperator> = (0..=max_deg)
        .map(|i| if i == 0 { LinearOperator::zero(0, 0) } else { multiplication_operator(&powersum_in_h(i), table_bound) })
        .collect();
    let adj: Vec<LinearOperator> = (0..=max_deg)
        .map(|i| if i == 0 { LinearOperator::zero(0, 0) } else { adjoint_operator(&powersum_in_h(i), table_bound) })
        .collect();
    let pairs: Vec<(usize, usize)> = (1..=max_deg).flat_map(|i| (1..=max_deg).map(move |j| (i, j))).collect();
    let results = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(usize, Vec<RelationViolation>)> {
            let lhs = adj[i].compose(&mult[j])?.sub(&mult[j].compose(&adj[i])?)?;
            let shift = lhs.shift();
            let rhs = move || -> Result<LinearOperator> {
                if i == j {
                    Ok(LinearOperator::scalar(&rat(i as i64), table_bound))
                } else {
                    Ok(LinearOperator::zero(shift, table_bound))
                }
            };
            check_family(Family { name: "[P_i^perp,P_j]=i delta_ij", i, j, lhs, rhs: &rhs }, max_deg)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = 0;
    let mut violations = Vec::new();
    for (n, v) in results {
        checks += n;
        violations.extend(v);
    }
    violations.sort();
    Ok(RelationReport {
        algebra: "primitive".into(),
        convention: "P_i = multiplication by the power sum p_i, P_i^perp its Hall adjoint".into(),
        max_deg,
        checks,
        violations,
        alternative_reading: None,
    })
}

/// Key of a tensor monomial: one partition per tensor slot.
pub type TensorKey = Vec<Partition>;

/// A finitely supported combination of `x^{α_1} ⊗ ⋯ ⊗ x^{α_m}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorSymFunc {
    slots: usize,
    terms: BTreeMap<TensorKey, BigRational>,
}

impl TensorSymFunc {
    pub fn zero(slots: usize) -> Self {
        TensorSymFunc {
            slots,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(key: TensorKey) -> Self {
        let mut t = Self::zero(key.len());
        t.add_term(key, BigRational::one());
        t
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn terms(&self) -> &BTreeMap<TensorKey, BigRational> {
        &self.terms
    }

    pub fn add_term(&mut self, key: TensorKey, c: BigRational) {
        assert_eq!(key.len(), self.slots, "tensor key has the wrong number of slots");
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero(self.slots);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), -v.clone());
        }
        out
    }

    pub fn total_degree(key: &TensorKey) -> usize {
        key.iter().map(Partition::size).sum()
    }
}

/// The Heisenberg action on `F(d_1) ⊗ ⋯ ⊗ F(d_m)`: `p_i` and `q_i` act
/// slot by slot (Leibniz rule) and `c` acts by `Σ d_r`.
#[derive(Clone, Debug)]
pub struct TensorHeisenberg {
    charges: Vec<BigRational>,
}

impl TensorHeisenberg {
    pub fn new(charges: Vec<BigRational>) -> Result<Self> {
        if charges.is_empty() {
            return Err(Error::invalid("a tensor Fock space needs at least one factor"));
        }
        Ok(TensorHeisenberg { charges })
    }

    pub fn from_framing(framing: &FramingComposition) -> Self {
        TensorHeisenberg {
            charges: framing.parts().iter().map(|&d| rat(d as i64)).collect(),
        }
    }

    pub fn charges(&self) -> &[BigRational] {
        &self.charges
    }

    pub fn central_charge(&self) -> BigRational {
        self.charges.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    fn check_slots(&self, t: &TensorSymFunc) -> Result<()> {
        if t.slots != self.charges.len() {
            return Err(Error::invalid(format!(
                "tensor element has {} slots, action has {} factors",
                t.slots,
                self.charges.len()
            )));
        }
        Ok(())
    }

    pub fn p(&self, i: usize, t: &TensorSymFunc) -> Result<TensorSymFunc> {
        self.check_slots(t)?;
        let mut out = TensorSymFunc::zero(t.slots);
        for (key, c) in &t.terms {
            for (r, d) in self.charges.iter().enumerate() {
                let mult = key[r].multiplicity(i);
                if mult == 0 {
                    continue;
                }
                let mut parts = key[r].parts().to_vec();
                let pos = parts.iter().position(|&p| p == i).expect("present");
                parts.remove(pos);
                let mut k2 = key.clone();
                k2[r] = Partition::from_unsorted(parts);
                out.add_term(k2, c * d * rat(mult as i64));
            }
        }
        Ok(out)
    }

    pub fn q(&self, i: usize, t: &TensorSymFunc) -> Result<TensorSymFunc> {
        self.check_slots(t)?;
        let mut out = TensorSymFunc::zero(t.slots);
        for (key, c) in &t.terms {
            for r in 0..t.slots {
                let mut k2 = key.clone();
                k2[r] = merge_keys(&key[r], &Partition::from_unsorted(vec![i]));
                out.add_term(k2, c.clone());
            }
        }
        Ok(out)
    }

    pub fn c(&self, t: &TensorSymFunc) -> Result<TensorSymFunc> {
        self.check_slots(t)?;
        Ok(t.scale(&self.central_charge()))
    }

    /// Checks the three bracket families on every tensor monomial of total
    /// degree `≤ max_deg`, for `i, j ≤ max_deg`.
    pub fn verify_brackets(&self, max_deg: usize) -> Result<RelationReport> {
        let keys: Vec<TensorKey> = (0..=max_deg).flat_map(|n| tensor_keys(n, self.charges.len())).collect();
        let mut violations = Vec::new();
        let mut checks = 0;
        for i in 1..=max_deg {
            for j in 1..=max_deg {
                for key in &keys {
                    let t = TensorSymFunc::monomial(key.clone());
                    let pq = self.p(i, &self.q(j, &t)?)?.sub(&self.q(j, &self.p(i, &t)?)?);
                    let expected = if i == j { self.c(&t)? } else { TensorSymFunc::zero(t.slots) };
                    let pp = self.p(i, &self.p(j, &t)?)?.sub(&self.p(j, &self.p(i, &t)?)?);
                    let qq = self.q(i, &self.q(j, &t)?)?.sub(&self.q(j, &self.q(i, &t)?)?);
                    checks += 3;
                    let flat_key = Partition::from_unsorted(key.iter().flat_map(|p| p.parts().to_vec()).collect());
                    for (name, ok) in [
                        ("[p_i,q_j]=delta_ij c", pq == expected),
                        ("[p_i,p_j]=0", pp.terms.is_empty()),
                        ("[q_i,q_j]=0", qq.terms.is_empty()),
                    ] {
                        if !ok {
                            violations.push(RelationViolation {
                                relation: format!("{name} on {key:?}"),
                                i,
                                j,
                                key: flat_key.clone(),
                            });
                        }
                    }
                }
            }
        }
        violations.sort();
        Ok(RelationReport {
            algebra: "tensor".into(),
            convention: format!(
                "charges ({})",
                self.charges.iter().map(serde_big::format_rational).collect::<Vec<_>>().join(",")
            ),
            max_deg,
            checks,
            violations,
            alternative_reading: None,
        })
    }
}

/// All tensor monomial keys of total degree `ν` with `m` slots.
pub fn tensor_keys(nu: usize, m: usize) -> Vec<TensorKey> {
    let mut out = Vec::new();
    for sizes in weak_compositions(nu, m) {
        for mp in crate::partitions::enumerate_multipartitions(&sizes) {
            out.push(mp.components().to_vec());
        }
    }
    out
}

/// Dimension of the total-degree-`ν` part of `F^{⊗m}`: the coefficient of
/// `t^ν` in `Π_{k ≥ 1} (1 − t^k)^{−m}` (partitions with `m` colours).
pub fn graded_dim_tensor(nu: usize, m: usize) -> BigUint {
    let mut dims = vec![BigUint::zero(); nu + 1];
    dims[0] = BigUint::one();
    for k in 1..=nu {
        for _colour in 0..m {
            for total in k..=nu {
                let add = dims[total - k].clone();
                dims[total] += add;
            }
        }
    }
    dims.swap_remove(nu)
}

/// `λ̲ ↦ x^{λ_1} ⊗ ⋯ ⊗ x^{λ_m}`.
pub fn multipartition_to_monomial(lambda: &MultiPartition) -> TensorKey {
    lambda.components().to_vec()
}

/// `→ν ↦ x_{ν̲_1} ⊗ ⋯ ⊗ x_{ν̲_m}`; part order inside a block is forgotten.
pub fn multicomposition_to_monomial(shape: &MultiComposition) -> TensorKey {
    shape.blocks().iter().map(|b| b.sorted()).collect()
}
