//! Materialized finite quotient rings `O/𝔞` with `O = Z[θ]`.
//!
//! The additive group `Z^d / L(𝔞)` is put in invariant-factor form
//! `⊕ Z/m_i` (`m_1 | m_2 | …`, trivial factors dropped) and an element is
//! addressed by its mixed-radix index with the first coordinate most
//! significant. Multiplication uses structure constants on the cyclic
//! generators, with a full table cached for small rings.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::NumberFieldSpec;
use crate::ideal::{factor_rational_prime, lattice_product, IdealDescriptor, PrimeIdealSpec};
use crate::lattice::{smith, Lattice};
use crate::set::ElementSet;

pub type Elem = u32;

pub const DEFAULT_CAPACITY: u128 = 1_000_000;
const MUL_TABLE_LIMIT: usize = 1024;

static NEXT_RING_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
pub struct FiniteQuotientRing {
    id: u64,
    field: Arc<NumberFieldSpec>,
    modulus: IdealDescriptor,
    lattice: Lattice,
    orders: Vec<u64>,
    strides: Vec<u64>,
    // column i of V restricted to kept invariant factors, entries mod m_i
    v_cols: Vec<Vec<i128>>,
    gens: Vec<Vec<i128>>,
    consts: Vec<u64>,
    q: usize,
    one: Elem,
    mul_table: Option<Vec<Elem>>,
    // per factor: lattices of 𝒫_i^k for k = 0..=n_i
    prime_powers: Vec<Vec<Lattice>>,
    uniformizers: OnceLock<Vec<Elem>>,
    valuations: OnceLock<Vec<Vec<u8>>>,
}

/// Serializable summary of a ring.
#[derive(Clone, Debug, Serialize)]
pub struct RingSummary {
    pub field: String,
    pub modulus: Vec<(u64, Vec<u64>, u32)>,
    pub cardinality: usize,
    pub invariants: Vec<u64>,
    pub units: usize,
    pub local: bool,
}

impl FiniteQuotientRing {
    pub fn build(field: &NumberFieldSpec, modulus: &IdealDescriptor) -> Result<Self> {
        Self::build_with_capacity(field, modulus, DEFAULT_CAPACITY)
    }

    pub fn build_with_capacity(
        field: &NumberFieldSpec,
        modulus: &IdealDescriptor,
        capacity: u128,
    ) -> Result<Self> {
        field.validate()?;
        for (pr, _) in &modulus.factors {
            let primes = factor_rational_prime(field, pr.p)?;
            if !primes.contains(pr) {
                return Err(LabError::Invalid(format!(
                    "{:?} is not a prime of {} above {}",
                    pr.g, field.label, pr.p
                )));
            }
        }
        let q = modulus.norm();
        let cap = capacity.min(u32::MAX as u128);
        if q > cap {
            return Err(LabError::CapacityExceeded {
                what: format!("ring {}", field.label),
                size: q,
                cap,
            });
        }
        let d = field.degree();
        let lattice = modulus.lattice(field);
        debug_assert_eq!(lattice.index() as u128, q);
        let snf = smith(&lattice.basis);
        let mut orders = Vec::new();
        let mut v_cols = Vec::new();
        let mut gens = Vec::new();
        for (i, &s) in snf.invariants.iter().enumerate() {
            if s > 1 {
                orders.push(s as u64);
                v_cols.push((0..d).map(|k| snf.v[k][i].rem_euclid(s)).collect());
                gens.push(lattice.reduce(&snf.v_inv[i]));
            }
        }
        let r = orders.len();
        let mut strides = vec![1u64; r];
        for i in (0..r.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * orders[i + 1];
        }
        let prime_powers = modulus
            .factors
            .iter()
            .map(|(pr, n)| prime_power_lattices(field, pr, *n))
            .collect();
        let mut ring = Self {
            id: NEXT_RING_ID.fetch_add(1, Ordering::Relaxed),
            field: Arc::new(field.clone()),
            modulus: modulus.clone(),
            lattice,
            orders,
            strides,
            v_cols,
            gens,
            consts: Vec::new(),
            q: q as usize,
            one: 0,
            mul_table: None,
            prime_powers,
            uniformizers: OnceLock::new(),
            valuations: OnceLock::new(),
        };
        let mut consts = vec![0u64; r * r * r];
        for i in 0..r {
            for j in 0..r {
                let prod = field.mul(&ring.gens[i], &ring.gens[j]);
                let c = ring.coords(ring.to_elem(&prod));
                for k in 0..r {
                    consts[(i * r + j) * r + k] = c[k];
                }
            }
        }
        ring.consts = consts;
        ring.one = ring.to_elem(&field.one());
        if ring.q <= MUL_TABLE_LIMIT {
            let q = ring.q;
            let mut table = vec![0; q * q];
            for a in 0..q {
                for b in a..q {
                    let c = ring.mul_slow(a as Elem, b as Elem);
                    table[a * q + b] = c;
                    table[b * q + a] = c;
                }
            }
            ring.mul_table = Some(table);
        }
        Ok(ring)
    }

    /// `Z/nZ`.
    pub fn integers_mod(n: u64) -> Result<Self> {
        Self::build(&NumberFieldSpec::rationals(), &IdealDescriptor::rational(n)?)
    }

    /// `O/𝒫^n` for the `index`-th prime above `p` (ordering of
    /// [`factor_rational_prime`]).
    pub fn prime_power(field: &NumberFieldSpec, p: u64, index: usize, n: u32) -> Result<Self> {
        let primes = factor_rational_prime(field, p)?;
        let pr = primes
            .get(index)
            .cloned()
            .ok_or_else(|| LabError::Invalid(format!("no prime #{index} above {p}")))?;
        Self::build(field, &IdealDescriptor::prime_power(pr, n))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn field(&self) -> &NumberFieldSpec {
        &self.field
    }

    pub fn modulus(&self) -> &IdealDescriptor {
        &self.modulus
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Cardinality `q`.
    pub fn order(&self) -> usize {
        self.q
    }

    /// Invariant factors `m_1 | m_2 | …` of the additive group.
    pub fn invariants(&self) -> &[u64] {
        &self.orders
    }

    pub fn is_local(&self) -> bool {
        self.modulus.is_local()
    }

    pub fn zero(&self) -> Elem {
        0
    }

    pub fn one(&self) -> Elem {
        self.one
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.q as Elem
    }

    pub fn coords(&self, x: Elem) -> Vec<u64> {
        let x = x as u64;
        (0..self.orders.len())
            .map(|i| (x / self.strides[i]) % self.orders[i])
            .collect()
    }

    pub fn from_coords(&self, c: &[u64]) -> Elem {
        c.iter()
            .zip(&self.orders)
            .zip(&self.strides)
            .map(|((&a, &m), &s)| (a % m) * s)
            .sum::<u64>() as Elem
    }

    /// Image of a power-basis integer vector.
    pub fn to_elem(&self, v: &[i128]) -> Elem {
        let mut idx = 0u64;
        for i in 0..self.orders.len() {
            let m = self.orders[i] as i128;
            let y: i128 = v
                .iter()
                .zip(&self.v_cols[i])
                .map(|(&a, &b)| (a.rem_euclid(m) * b) % m)
                .sum::<i128>()
                .rem_euclid(m);
            idx += y as u64 * self.strides[i];
        }
        idx as Elem
    }

    /// Some power-basis lift of `x`.
    pub fn lift(&self, x: Elem) -> Vec<i128> {
        let d = self.field.degree();
        let mut v = vec![0i128; d];
        for (i, c) in self.coords(x).into_iter().enumerate() {
            for k in 0..d {
                v[k] += c as i128 * self.gens[i][k];
            }
        }
        v
    }

    /// Canonical power-basis representative (HNF-reduced lift).
    pub fn power_basis(&self, x: Elem) -> Vec<i128> {
        self.lattice.reduce(&self.lift(x))
    }

    pub fn from_int(&self, n: i64) -> Elem {
        let mut v = vec![0i128; self.field.degree()];
        v[0] = n as i128;
        self.to_elem(&v)
    }

    /// Image of `Σ c_k θ^k`.
    pub fn from_poly(&self, coeffs: &[i64]) -> Elem {
        self.to_elem(&self.field.eval_poly(coeffs))
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.orders.len() == 1 {
            let s = a as u64 + b as u64;
            let q = self.q as u64;
            return (if s >= q { s - q } else { s }) as Elem;
        }
        let (a, b) = (a as u64, b as u64);
        let mut out = 0u64;
        for i in 0..self.orders.len() {
            let m = self.orders[i];
            let s = self.strides[i];
            let c = ((a / s) % m + (b / s) % m) % m;
            out += c * s;
        }
        out as Elem
    }

    pub fn neg(&self, a: Elem) -> Elem {
        let a = a as u64;
        let mut out = 0u64;
        for i in 0..self.orders.len() {
            let m = self.orders[i];
            let s = self.strides[i];
            out += ((m - (a / s) % m) % m) * s;
        }
        out as Elem
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    /// `k · a` for an integer `k`.
    pub fn scale(&self, a: Elem, k: i64) -> Elem {
        let a = a as u64;
        let mut out = 0u64;
        for i in 0..self.orders.len() {
            let m = self.orders[i];
            let s = self.strides[i];
            let c = ((a / s) % m) as i128 * (k as i128).rem_euclid(m as i128);
            out += (c.rem_euclid(m as i128) as u64) * s;
        }
        out as Elem
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match &self.mul_table {
            Some(t) => t[a as usize * self.q + b as usize],
            None => self.mul_slow(a, b),
        }
    }

    fn mul_slow(&self, a: Elem, b: Elem) -> Elem {
        let r = self.orders.len();
        let x = self.coords(a);
        let y = self.coords(b);
        let mut out = 0u64;
        for k in 0..r {
            let m = self.orders[k];
            let mut acc = 0u64;
            for i in 0..r {
                if x[i] == 0 {
                    continue;
                }
                for j in 0..r {
                    let c = self.consts[(i * r + j) * r + k];
                    if c == 0 || y[j] == 0 {
                        continue;
                    }
                    let t = (x[i] % m) * (y[j] % m) % m;
                    acc = (acc + t * c) % m;
                }
            }
            out += acc * self.strides[k];
        }
        out as Elem
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = self.one;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn random_elem<R: Rng + ?Sized>(&self, rng: &mut R) -> Elem {
        rng.gen_range(0..self.q as Elem)
    }

    fn component_valuation(&self, i: usize, x: Elem) -> u32 {
        let v = self.lift(x);
        let lats = &self.prime_powers[i];
        let mut k = 0;
        while k + 1 < lats.len() && lats[k + 1].contains(&v) {
            k += 1;
        }
        k as u32
    }

    /// Valuations at every prime factor, for every element.
    fn valuation_table(&self) -> &Vec<Vec<u8>> {
        self.valuations.get_or_init(|| {
            (0..self.modulus.factors.len())
                .map(|i| {
                    self.elements()
                        .map(|x| self.component_valuation(i, x) as u8)
                        .collect()
                })
                .collect()
        })
    }

    /// Exponent of `𝒫_i` in `x` (capped at `n_i`).
    pub fn valuation_at(&self, i: usize, x: Elem) -> u32 {
        self.valuation_table()[i][x as usize] as u32
    }

    /// `v` with `x = 𝔭^v · unit`; `n` for `x = 0`.
    pub fn valuation(&self, x: Elem) -> Result<u32> {
        if !self.is_local() {
            return Err(LabError::NotLocalRing);
        }
        Ok(self.valuation_at(0, x))
    }

    /// Exponent `n` of a local ring `O/𝒫^n`.
    pub fn local_exponent(&self) -> Result<u32> {
        if !self.is_local() {
            return Err(LabError::NotLocalRing);
        }
        Ok(self.modulus.factors[0].1)
    }

    /// The prime of a local ring.
    pub fn local_prime(&self) -> Result<&PrimeIdealSpec> {
        if !self.is_local() {
            return Err(LabError::NotLocalRing);
        }
        Ok(&self.modulus.factors[0].0)
    }

    /// Lowest-index element of valuation exactly 1 at each prime factor
    /// (and 0 elsewhere); for `n_i = 1` this is the zero element.
    pub fn uniformizers(&self) -> &[Elem] {
        self.uniformizers.get_or_init(|| {
            (0..self.modulus.factors.len())
                .map(|i| {
                    let n = self.modulus.factors[i].1;
                    if n == 1 {
                        return 0;
                    }
                    self.elements()
                        .find(|&x| {
                            self.valuation_at(i, x) == 1
                                && (0..self.modulus.factors.len())
                                    .filter(|&j| j != i)
                                    .all(|j| self.valuation_at(j, x) == 0)
                        })
                        .expect("valuation-one elements exist")
                })
                .collect()
        })
    }

    pub fn uniformizer(&self) -> Result<Elem> {
        if !self.is_local() {
            return Err(LabError::NotLocalRing);
        }
        Ok(self.uniformizers()[0])
    }

    pub fn is_unit(&self, x: Elem) -> bool {
        (0..self.modulus.factors.len()).all(|i| self.valuation_at(i, x) == 0)
    }

    pub fn units(&self) -> ElementSet {
        ElementSet::from_elems(self, self.elements().filter(|&x| self.is_unit(x)))
    }

    pub fn inverse(&self, x: Elem) -> Option<Elem> {
        if !self.is_unit(x) {
            return None;
        }
        self.elements().find(|&y| self.mul(x, y) == self.one)
    }

    /// Quotient `O/𝔟` for a divisor `𝔟 ⊇ 𝔞` given by exponents per factor
    /// (zero exponents drop the factor).
    pub fn quotient(&self, exponents: &[u32]) -> Result<FiniteQuotientRing> {
        if exponents.len() != self.modulus.factors.len() {
            return Err(LabError::Invalid("one exponent per prime factor".into()));
        }
        let mut factors = Vec::new();
        for ((pr, n), &m) in self.modulus.factors.iter().zip(exponents) {
            if m > *n {
                return Err(LabError::Invalid(format!("exponent {m} exceeds {n}")));
            }
            if m > 0 {
                factors.push((pr.clone(), m));
            }
        }
        Self::build_with_capacity(&self.field, &IdealDescriptor { factors }, self.q as u128)
    }

    /// `O/𝒫^m` for a local ring `O/𝒫^n`, `m ≤ n`.
    pub fn local_quotient(&self, m: u32) -> Result<FiniteQuotientRing> {
        let n = self.local_exponent()?;
        if m > n {
            return Err(LabError::Invalid(format!("level {m} exceeds {n}")));
        }
        self.quotient(&[m])
    }

    /// Table of the canonical projection onto `target`, whose modulus must
    /// divide this one.
    pub fn projection_to(&self, target: &FiniteQuotientRing) -> Result<Vec<Elem>> {
        if target.field.min_poly != self.field.min_poly
            || !self.lattice.is_sublattice_of(&target.lattice)
        {
            return Err(LabError::RingMismatch);
        }
        Ok(self.elements().map(|x| target.to_elem(&self.lift(x))).collect())
    }

    /// Splits `O/𝔞` into local components.
    pub fn crt_decompose(&self) -> Result<CrtDecomposition> {
        let k = self.modulus.factors.len();
        let mut components = Vec::with_capacity(k);
        for i in 0..k {
            let mut e = vec![0u32; k];
            e[i] = self.modulus.factors[i].1;
            components.push(self.quotient(&e)?);
        }
        let forward: Vec<Vec<Elem>> = components
            .iter()
            .map(|c| self.projection_to(c))
            .collect::<Result<_>>()?;
        let sizes: Vec<usize> = components.iter().map(|c| c.order()).collect();
        let mut backward = vec![Elem::MAX; self.q];
        for x in self.elements() {
            let mut idx = 0usize;
            for (i, f) in forward.iter().enumerate() {
                idx = idx * sizes[i] + f[x as usize] as usize;
            }
            backward[idx] = x;
        }
        debug_assert!(backward.iter().all(|&x| x != Elem::MAX));
        Ok(CrtDecomposition {
            components,
            forward,
            backward,
            sizes,
        })
    }

    /// Checks commutativity, associativity, distributivity and the identity
    /// on the given triples.
    pub fn check_axioms<I: IntoIterator<Item = (Elem, Elem, Elem)>>(&self, triples: I) -> bool {
        triples.into_iter().all(|(a, b, c)| {
            self.mul(a, b) == self.mul(b, a)
                && self.mul(self.mul(a, b), c) == self.mul(a, self.mul(b, c))
                && self.mul(a, self.add(b, c)) == self.add(self.mul(a, b), self.mul(a, c))
                && self.mul(a, self.one) == a
                && self.add(a, self.add(b, c)) == self.add(self.add(a, b), c)
                && self.add(a, self.neg(a)) == 0
        })
    }

    pub fn summary(&self) -> RingSummary {
        RingSummary {
            field: self.field.label.clone(),
            modulus: self
                .modulus
                .factors
                .iter()
                .map(|(p, n)| (p.p, p.g.clone(), *n))
                .collect(),
            cardinality: self.q,
            invariants: self.orders.clone(),
            units: self.units().len(),
            local: self.is_local(),
        }
    }

    /// Human readable element: canonical power-basis coordinates.
    pub fn display(&self, x: Elem) -> String {
        let v = self.power_basis(x);
        if v.len() == 1 {
            return v[0].to_string();
        }
        let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
        format!("[{}]", parts.join(","))
    }
}

fn prime_power_lattices(field: &NumberFieldSpec, pr: &PrimeIdealSpec, n: u32) -> Vec<Lattice> {
    let d = field.degree();
    let base = pr.lattice(field);
    let mut out = vec![Lattice::from_generators_mod(d, &[field.one()], 1)];
    let mut norm: i128 = 1;
    for _ in 0..n {
        norm *= pr.residue_size() as i128;
        let next = lattice_product(field, out.last().unwrap(), &base, norm);
        out.push(next);
    }
    out
}

/// `O/𝔞 ≅ ∏ O/𝒫_i^{n_i}` with explicit tables in both directions.
#[derive(Debug)]
pub struct CrtDecomposition {
    pub components: Vec<FiniteQuotientRing>,
    forward: Vec<Vec<Elem>>,
    backward: Vec<Elem>,
    sizes: Vec<usize>,
}

impl CrtDecomposition {
    pub fn split(&self, x: Elem) -> Vec<Elem> {
        self.forward.iter().map(|f| f[x as usize]).collect()
    }

    pub fn component_map(&self, i: usize) -> &[Elem] {
        &self.forward[i]
    }

    pub fn recombine(&self, parts: &[Elem]) -> Elem {
        let mut idx = 0usize;
        for (i, &p) in parts.iter().enumerate() {
            idx = idx * self.sizes[i] + p as usize;
        }
        self.backward[idx]
    }
}

/// Builds rings from `(p, g, n)` triples, resolving `g` when omitted and
/// exactly one prime lies above `p`.
pub fn ideal_from_parts(
    field: &NumberFieldSpec,
    parts: &[(u64, Option<Vec<u64>>, u32)],
) -> Result<IdealDescriptor> {
    let mut cache: HashMap<u64, Vec<PrimeIdealSpec>> = HashMap::new();
    let mut factors = Vec::new();
    for (p, g, n) in parts {
        if !cache.contains_key(p) {
            cache.insert(*p, factor_rational_prime(field, *p)?);
        }
        let primes = &cache[p];
        let pr = match g {
            Some(g) => primes
                .iter()
                .find(|pr| &pr.g == g)
                .cloned()
                .ok_or_else(|| LabError::Invalid(format!("{g:?} is not a prime factor mod {p}")))?,
            None if primes.len() == 1 => primes[0].clone(),
            None => {
                return Err(LabError::Invalid(format!(
                    "{} primes lie above {p}; specify g",
                    primes.len()
                )))
            }
        };
        factors.push((pr, *n));
    }
    IdealDescriptor::new(factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(p: u64, idx: usize, n: u32) -> FiniteQuotientRing {
        FiniteQuotientRing::prime_power(&NumberFieldSpec::gaussian(), p, idx, n).unwrap()
    }

    #[test]
    fn cardinalities() {
        assert_eq!(FiniteQuotientRing::integers_mod(8).unwrap().order(), 8);
        let r = gaussian(3, 0, 2);
        assert_eq!(r.order(), 81);
        assert_eq!(r.invariants(), &[9, 9]);
        let k = NumberFieldSpec::gaussian();
        let a = ideal_from_parts(&k, &[(3, None, 1), (5, Some(vec![2, 1]), 1)]).unwrap();
        let r = FiniteQuotientRing::build(&k, &a).unwrap();
        assert_eq!(r.order(), 45);
        assert_eq!(r.invariants(), &[3, 15]);
    }

    #[test]
    fn integer_rings_index_by_value() {
        let r = FiniteQuotientRing::integers_mod(81).unwrap();
        assert_eq!(r.from_int(9), 9);
        assert_eq!(r.mul(9, 9), 0);
        assert_eq!(r.one(), 1);
        assert_eq!(r.display(80), "80");
    }

    #[test]
    fn units_and_valuations() {
        assert_eq!(FiniteQuotientRing::integers_mod(9).unwrap().units().len(), 6);
        assert_eq!(gaussian(3, 0, 1).units().len(), 8);
        assert_eq!(gaussian(3, 0, 2).units().len(), 72);
        let z8 = FiniteQuotientRing::integers_mod(8).unwrap();
        assert_eq!(z8.valuation(4).unwrap(), 2);
        assert_eq!(z8.valuation(0).unwrap(), 3);
        assert_eq!(z8.uniformizer().unwrap(), 2);
        let r = gaussian(2, 0, 4);
        assert_eq!(r.order(), 16);
        assert_eq!(r.valuation(r.from_int(2)).unwrap(), 2);
        let composite = FiniteQuotientRing::integers_mod(15).unwrap();
        assert_eq!(composite.valuation(3), Err(LabError::NotLocalRing));
    }

    #[test]
    fn axioms_exhaustive_on_small_rings() {
        for r in [
            FiniteQuotientRing::integers_mod(12).unwrap(),
            gaussian(3, 0, 1),
            gaussian(2, 0, 3),
            gaussian(5, 1, 2),
        ] {
            let q = r.order() as Elem;
            let triples = (0..q).flat_map(|a| (0..q).flat_map(move |b| (0..q).map(move |c| (a, b, c))));
            assert!(r.check_axioms(triples));
        }
    }

    #[test]
    fn crt_round_trip() {
        let r = FiniteQuotientRing::integers_mod(15).unwrap();
        let crt = r.crt_decompose().unwrap();
        assert_eq!(crt.components.len(), 2);
        assert_eq!(crt.components[0].order(), 3);
        for x in r.elements() {
            assert_eq!(crt.recombine(&crt.split(x)), x);
        }
        let local = FiniteQuotientRing::integers_mod(9).unwrap();
        assert_eq!(local.crt_decompose().unwrap().components.len(), 1);
    }

    #[test]
    fn capacity_is_enforced() {
        let k = NumberFieldSpec::gaussian();
        let p = factor_rational_prime(&k, 3).unwrap().remove(0);
        let err = FiniteQuotientRing::build_with_capacity(&k, &IdealDescriptor::prime_power(p, 4), 1000);
        assert!(matches!(err, Err(LabError::CapacityExceeded { .. })));
    }

    #[test]
    fn projections_are_homomorphisms() {
        let r = gaussian(3, 0, 3);
        let s = r.local_quotient(1).unwrap();
        let pi = r.projection_to(&s).unwrap();
        for a in (0..r.order() as Elem).step_by(7) {
            for b in (0..r.order() as Elem).step_by(11) {
                assert_eq!(pi[r.mul(a, b) as usize], s.mul(pi[a as usize], pi[b as usize]));
                assert_eq!(pi[r.add(a, b) as usize], s.add(pi[a as usize], pi[b as usize]));
            }
        }
        let kernel = pi.iter().filter(|&&y| y == 0).count();
        assert_eq!(kernel, 81);
    }
}
