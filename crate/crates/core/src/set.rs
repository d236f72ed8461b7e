//! Element sets of a finite ring, stored as bitsets over element indices.

use fixedbitset::FixedBitSet;

use crate::error::{LabError, Result};
use crate::ring::{Elem, FiniteQuotientRing};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ElementSet {
    ring_id: u64,
    bits: FixedBitSet,
}

impl ElementSet {
    pub fn empty(ring: &FiniteQuotientRing) -> Self {
        Self {
            ring_id: ring.id(),
            bits: FixedBitSet::with_capacity(ring.order()),
        }
    }

    pub fn full(ring: &FiniteQuotientRing) -> Self {
        let mut s = Self::empty(ring);
        s.bits.insert_range(..);
        s
    }

    pub fn from_elems<I: IntoIterator<Item = Elem>>(ring: &FiniteQuotientRing, elems: I) -> Self {
        let mut s = Self::empty(ring);
        for x in elems {
            s.bits.insert(x as usize);
        }
        s
    }

    pub fn from_bits(ring: &FiniteQuotientRing, bits: FixedBitSet) -> Self {
        assert_eq!(bits.len(), ring.order());
        Self {
            ring_id: ring.id(),
            bits,
        }
    }

    pub fn ring_id(&self) -> u64 {
        self.ring_id
    }

    pub fn check_ring(&self, ring: &FiniteQuotientRing) -> Result<()> {
        if self.ring_id == ring.id() {
            Ok(())
        } else {
            Err(LabError::RingMismatch)
        }
    }

    pub fn same_ring(&self, other: &Self) -> Result<()> {
        if self.ring_id == other.ring_id {
            Ok(())
        } else {
            Err(LabError::RingMismatch)
        }
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn insert(&mut self, x: Elem) -> bool {
        !self.bits.put(x as usize)
    }

    pub fn remove(&mut self, x: Elem) {
        self.bits.set(x as usize, false);
    }

    pub fn contains(&self, x: Elem) -> bool {
        self.bits.contains(x as usize)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    /// Elements in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = Elem> + '_ {
        self.bits.ones().map(|i| i as Elem)
    }

    pub fn to_vec(&self) -> Vec<Elem> {
        self.iter().collect()
    }

    pub fn union_with(&mut self, other: &Self) {
        self.bits.union_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &Self) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &Self) {
        self.bits.difference_with(&other.bits);
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn intersection_count(&self, other: &Self) -> usize {
        self.bits.intersection_count(&other.bits)
    }
}
