//! Unital subrings of finite quotient rings: closures, congruential
//! subrings `R_{O',m}`, level profiles and structure witnesses.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{invalid, LabError, Result};
use crate::field::Subfield;
use crate::group::additive_span_with_basis;
use crate::ring::{CrtDecomposition, Elem, FiniteQuotientRing};
use crate::set::ElementSet;

/// Subring limit for full lattice enumeration.
pub const ENUMERATION_LIMIT: usize = 729;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitalSubring {
    pub elements: ElementSet,
    /// Additive generators, each of which enlarged the span when added.
    pub basis: Vec<Elem>,
}

impl UnitalSubring {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: Elem) -> bool {
        self.elements.contains(x)
    }

    pub fn is_full(&self, ring: &FiniteQuotientRing) -> bool {
        self.len() == ring.order()
    }

    /// Exhaustive check of the subring axioms.
    pub fn verify(&self, ring: &FiniteQuotientRing) -> bool {
        let elems = self.elements.to_vec();
        self.contains(ring.one())
            && elems.iter().all(|&a| {
                self.contains(ring.neg(a))
                    && elems
                        .iter()
                        .all(|&b| self.contains(ring.add(a, b)) && self.contains(ring.mul(a, b)))
            })
    }
}

/// Smallest unital subring containing `s`.
pub fn ring_generated_by<I: IntoIterator<Item = Elem>>(ring: &FiniteQuotientRing, s: I) -> UnitalSubring {
    let mut gens: Vec<Elem> = vec![ring.one()];
    gens.extend(s);
    loop {
        let (span, basis) = additive_span_with_basis(ring, gens.iter().copied());
        let mut products = Vec::new();
        for (i, &a) in basis.iter().enumerate() {
            for &b in &basis[i..] {
                let c = ring.mul(a, b);
                if !span.contains(c) {
                    products.push(c);
                }
            }
        }
        if products.is_empty() {
            return UnitalSubring {
                elements: span,
                basis,
            };
        }
        gens = basis;
        gens.extend(products);
    }
}

/// Image of `Z[α]` for a subfield generator `α`.
pub fn subfield_image(ring: &FiniteQuotientRing, sub: &Subfield) -> UnitalSubring {
    ring_generated_by(ring, [ring.from_poly(&sub.generator)])
}

/// Elements of valuation at least `m` in a local ring (`𝒫^m / 𝒫^n`).
pub fn prime_power_ideal(ring: &FiniteQuotientRing, m: u32) -> Result<ElementSet> {
    ring.local_exponent()?;
    Ok(ElementSet::from_elems(
        ring,
        ring.elements().filter(|&x| ring.valuation_at(0, x) >= m),
    ))
}

#[derive(Clone, Debug)]
pub struct CongruentialRing {
    pub subfield: Subfield,
    pub level: u32,
    pub ring: UnitalSubring,
}

/// `R_{O',m} = π_{n,m}^{-1}(O' mod 𝒫^m)` inside a local ring `O/𝒫^n`.
pub fn congruential_subring(ring: &FiniteQuotientRing, sub: &Subfield, m: u32) -> Result<CongruentialRing> {
    let n = ring.local_exponent()?;
    if m > n {
        return invalid(format!("level {m} exceeds exponent {n}"));
    }
    let image = subfield_image(ring, sub);
    let kernel = prime_power_ideal(ring, m)?;
    let gens = image.basis.iter().copied().chain(kernel.iter());
    let (elements, basis) = additive_span_with_basis(ring, gens);
    Ok(CongruentialRing {
        subfield: sub.clone(),
        level: m,
        ring: UnitalSubring { elements, basis },
    })
}

/// `(p^i) ∩ R mod (p^{i+1})` viewed inside `O/(p)`, for `i < ⌊n/e⌋`.
#[derive(Clone, Debug, Serialize)]
pub struct LevelProfile {
    pub sizes: Vec<usize>,
    #[serde(skip)]
    pub groups: Vec<ElementSet>,
    /// The ring `O/(p)` the groups live in.
    #[serde(skip)]
    pub residue_ring: Option<std::sync::Arc<FiniteQuotientRing>>,
}

impl LevelProfile {
    pub fn jumps(&self) -> usize {
        self.sizes.windows(2).filter(|w| w[1] != w[0]).count()
    }

    pub fn is_constant(&self) -> bool {
        self.jumps() == 0
    }

    pub fn is_ascending_chain(&self) -> bool {
        self.groups.windows(2).all(|w| w[0].is_subset(&w[1]))
    }
}

pub fn level_profile(ring: &FiniteQuotientRing, sub: &UnitalSubring) -> Result<LevelProfile> {
    let n = ring.local_exponent()?;
    let e = ring.local_prime()?.e;
    let levels = n / e;
    if levels == 0 {
        return Ok(LevelProfile {
            sizes: vec![],
            groups: vec![],
            residue_ring: None,
        });
    }
    let residue = ring.local_quotient(e)?;
    let pi = ring.projection_to(&residue)?;
    let p = ring.local_prime()?.p as i64;
    let mut sizes = Vec::new();
    let mut groups = Vec::new();
    let mut p_i: i64 = 1;
    for _ in 0..levels {
        let g = ElementSet::from_elems(
            &residue,
            ring.elements()
                .filter(|&x| sub.contains(ring.scale(x, p_i)))
                .map(|x| pi[x as usize]),
        );
        sizes.push(g.len());
        groups.push(g);
        p_i *= p;
    }
    Ok(LevelProfile {
        sizes,
        groups,
        residue_ring: Some(std::sync::Arc::new(residue)),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CongruentialWitness {
    pub subfield: String,
    pub level: u32,
}

/// Whether `sub` equals some `R_{O',m}`; the full ring reports `(K, n)`.
pub fn is_congruential(ring: &FiniteQuotientRing, sub: &UnitalSubring) -> Result<Option<CongruentialWitness>> {
    let n = ring.local_exponent()?;
    let subfields = ring.field().enumerate_subfields()?;
    if sub.is_full(ring) {
        return Ok(Some(CongruentialWitness {
            subfield: ring.field().label.clone(),
            level: n,
        }));
    }
    for sf in &subfields {
        for m in 1..=n {
            let c = congruential_subring(ring, sf, m)?;
            if c.ring.elements == sub.elements {
                return Ok(Some(CongruentialWitness {
                    subfield: sf.label.clone(),
                    level: m,
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureWitness {
    pub a: u32,
    pub b: u32,
    pub subfield: String,
    pub subfield_degree: usize,
}

fn project(set: &ElementSet, pi: &[Elem], target: &FiniteQuotientRing) -> ElementSet {
    ElementSet::from_elems(target, set.iter().map(|x| pi[x as usize]))
}

fn with_valuation_at_least(ring: &FiniteQuotientRing, set: &ElementSet, a: u32) -> ElementSet {
    ElementSet::from_elems(ring, set.iter().filter(|&x| ring.valuation_at(0, x) >= a))
}

/// Checks both containments for a candidate `(a, b, O_0)`.
pub fn witness_holds(
    ring: &FiniteQuotientRing,
    sub: &UnitalSubring,
    image: &UnitalSubring,
    a: u32,
    b: u32,
) -> Result<bool> {
    let target = ring.local_quotient(b)?;
    let pi = ring.projection_to(&target)?;
    let r_b = project(&sub.elements, &pi, &target);
    let o_b = project(&image.elements, &pi, &target);
    if !r_b.is_subset(&o_b) {
        return Ok(false);
    }
    let ra = project(&with_valuation_at_least(ring, &sub.elements, a), &pi, &target);
    let oa = project(&with_valuation_at_least(ring, &image.elements, a), &pi, &target);
    Ok(ra == oa)
}

/// Exhaustive search over subfields and `n ≥ b ≥ C a`, `b ≥ 1`, maximizing
/// `b − a`, then minimizing `a`, then the subfield degree.
pub fn structure_witness(ring: &FiniteQuotientRing, sub: &UnitalSubring, c: u32) -> Result<Option<StructureWitness>> {
    let n = ring.local_exponent()?;
    let subfields = ring.field().enumerate_subfields()?;
    let images: Vec<UnitalSubring> = subfields.iter().map(|s| subfield_image(ring, s)).collect();
    let mut candidates: Vec<(u32, u32)> = Vec::new();
    for b in 1..=n {
        for a in 0..=n {
            if c * a <= b {
                candidates.push((a, b));
            }
        }
    }
    candidates.sort_by_key(|&(a, b)| (std::cmp::Reverse(b - a), a));
    for (a, b) in candidates {
        for (sf, image) in subfields.iter().zip(&images) {
            if witness_holds(ring, sub, image, a, b)? {
                return Ok(Some(StructureWitness {
                    a,
                    b,
                    subfield: sf.label.clone(),
                    subfield_degree: sf.degree,
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Corollary324Report {
    pub holds: bool,
    pub subfield: Option<String>,
    /// Set when a threshold `M` was supplied and `n < M`.
    pub below_threshold: bool,
}

/// For a subring with constant level profile: does it equal the image of
/// some `O_0`? The optional threshold is reported, never assumed sufficient.
pub fn corollary_324_check(
    ring: &FiniteQuotientRing,
    sub: &UnitalSubring,
    threshold: Option<u32>,
) -> Result<Corollary324Report> {
    let n = ring.local_exponent()?;
    if !level_profile(ring, sub)?.is_constant() {
        return Err(LabError::ProfileNotConstant);
    }
    for sf in ring.field().enumerate_subfields()? {
        if subfield_image(ring, &sf).elements == sub.elements {
            return Ok(Corollary324Report {
                holds: true,
                subfield: Some(sf.label),
                below_threshold: threshold.is_some_and(|m| n < m),
            });
        }
    }
    Ok(Corollary324Report {
        holds: false,
        subfield: None,
        below_threshold: threshold.is_some_and(|m| n < m),
    })
}

/// All unital subrings, by breadth-first adjunction of single elements.
pub fn enumerate_subrings(ring: &FiniteQuotientRing) -> Result<Vec<UnitalSubring>> {
    if ring.order() > ENUMERATION_LIMIT {
        return Err(LabError::CapacityExceeded {
            what: "subring enumeration".into(),
            size: ring.order() as u128,
            cap: ENUMERATION_LIMIT as u128,
        });
    }
    let prime = ring_generated_by(ring, []);
    let mut seen: HashSet<ElementSet> = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(prime.elements.clone());
    queue.push_back(prime);
    while let Some(r) = queue.pop_front() {
        for x in ring.elements() {
            if r.contains(x) {
                continue;
            }
            let next = ring_generated_by(ring, r.basis.iter().copied().chain([x]));
            if seen.insert(next.elements.clone()) {
                queue.push_back(next);
            }
        }
        out.push(r);
    }
    out.sort_by_key(|r| (r.len(), r.elements.to_vec()));
    Ok(out)
}

/// Componentwise projections of a subring and whether it equals their
/// product.
pub fn goursat_split(
    ring: &FiniteQuotientRing,
    crt: &CrtDecomposition,
    sub: &UnitalSubring,
) -> (Vec<ElementSet>, bool) {
    let parts: Vec<ElementSet> = crt
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let map = crt.component_map(i);
            ElementSet::from_elems(c, sub.elements.iter().map(|x| map[x as usize]))
        })
        .collect();
    let product_size: usize = parts.iter().map(|p| p.len()).product();
    let is_product = product_size == sub.len()
        && ring.elements().all(|x| {
            let inside = crt.split(x).iter().zip(&parts).all(|(&y, p)| p.contains(y));
            inside == sub.contains(x)
        });
    (parts, is_product)
}
