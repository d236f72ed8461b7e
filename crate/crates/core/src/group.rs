//! Additive subgroups and their cosets.

use crate::ring::{Elem, FiniteQuotientRing};
use crate::set::ElementSet;

/// Additive subgroup generated by `gens`, plus the generators that were
/// actually needed (each one enlarged the span when added).
pub fn additive_span_with_basis<I>(ring: &FiniteQuotientRing, gens: I) -> (ElementSet, Vec<Elem>)
where
    I: IntoIterator<Item = Elem>,
{
    let mut span = ElementSet::from_elems(ring, [0]);
    let mut members: Vec<Elem> = vec![0];
    let mut basis = Vec::new();
    for g in gens {
        if span.contains(g) {
            continue;
        }
        basis.push(g);
        // span + <g>: add cosets span + k g until k g falls back into span
        let mut shift = g;
        let base = members.clone();
        while !span.contains(shift) {
            for &h in &base {
                let y = ring.add(h, shift);
                if span.insert(y) {
                    members.push(y);
                }
            }
            shift = ring.add(shift, g);
        }
    }
    (span, basis)
}

pub fn additive_span<I: IntoIterator<Item = Elem>>(ring: &FiniteQuotientRing, gens: I) -> ElementSet {
    additive_span_with_basis(ring, gens).0
}

/// `[ring : <gens>]`.
pub fn additive_index<I: IntoIterator<Item = Elem>>(ring: &FiniteQuotientRing, gens: I) -> usize {
    ring.order() / additive_span(ring, gens).len()
}

/// Cosets of an additive subgroup: label per element and the least element
/// of each coset (labels follow increasing representatives).
pub struct CosetPartition {
    pub labels: Vec<u32>,
    pub representatives: Vec<Elem>,
}

pub fn cosets(ring: &FiniteQuotientRing, subgroup: &ElementSet) -> CosetPartition {
    let q = ring.order();
    let h: Vec<Elem> = subgroup.to_vec();
    let mut labels = vec![u32::MAX; q];
    let mut representatives = Vec::with_capacity(q / h.len().max(1));
    for x in 0..q as Elem {
        if labels[x as usize] != u32::MAX {
            continue;
        }
        let label = representatives.len() as u32;
        representatives.push(x);
        for &y in &h {
            labels[ring.add(x, y) as usize] = label;
        }
    }
    CosetPartition {
        labels,
        representatives,
    }
}

/// `{b r : r ∈ set}`.
pub fn scaled_set(ring: &FiniteQuotientRing, b: Elem, set: &ElementSet) -> ElementSet {
    ElementSet::from_elems(ring, set.iter().map(|r| ring.mul(b, r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NumberFieldSpec;

    #[test]
    fn indices() {
        let z9 = FiniteQuotientRing::integers_mod(9).unwrap();
        assert_eq!(additive_index(&z9, [3]), 3);
        assert_eq!(additive_index(&z9, [3, 2]), 1);
        let r = FiniteQuotientRing::prime_power(&NumberFieldSpec::gaussian(), 3, 0, 4).unwrap();
        let nine_i = r.from_poly(&[0, 9]);
        assert_eq!(additive_index(&r, [r.one(), nine_i]), 9);
    }

    #[test]
    fn coset_partition_is_uniform() {
        let z12 = FiniteQuotientRing::integers_mod(12).unwrap();
        let h = additive_span(&z12, [4]);
        let c = cosets(&z12, &h);
        assert_eq!(c.representatives, vec![0, 1, 2, 3]);
        assert_eq!(c.labels[7], 3);
    }
}
