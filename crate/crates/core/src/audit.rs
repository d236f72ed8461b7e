//! Non-concentration audits over cosets `a + bR` of congruential subrings.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::Result;
use crate::group::{additive_span, cosets};
use crate::measure::Measure;
use crate::ring::{Elem, FiniteQuotientRing};
use crate::set::ElementSet;
use crate::subring::congruential_subring;

/// Relative slack when comparing a mass with its bound; equality passes.
pub const AUDIT_TOLERANCE: f64 = 1e-12;

/// One subgroup `bR` with its coset partition.
#[derive(Clone, Debug)]
pub struct AuditSubgroup {
    pub b: Elem,
    pub ring_label: String,
    pub index: u64,
    pub subgroup: ElementSet,
    pub labels: Vec<u32>,
    pub representatives: Vec<Elem>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffineCoset {
    pub a: Elem,
    pub b: Elem,
    pub ring_label: String,
    pub index: u64,
}

/// Congruential subrings of a (possibly composite) ring: products over the
/// local components of `R_{O',m}`, `m = 1..=n_i`, deduplicated.
pub fn congruential_rings(ring: &FiniteQuotientRing) -> Result<Vec<(String, ElementSet)>> {
    if ring.order() == 1 {
        return Ok(vec![("0".into(), ElementSet::full(ring))]);
    }
    let crt = ring.crt_decompose()?;
    let mut per_component: Vec<Vec<(String, ElementSet)>> = Vec::new();
    for comp in &crt.components {
        let n = comp.local_exponent()?;
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for sf in comp.field().enumerate_subfields()? {
            for m in 1..=n {
                let c = congruential_subring(comp, &sf, m)?;
                if seen.insert(c.ring.elements.clone()) {
                    list.push((format!("R({},{})", sf.label, m), c.ring.elements));
                }
            }
        }
        per_component.push(list);
    }
    let mut out: Vec<(String, ElementSet)> = vec![(String::new(), ElementSet::full(ring))];
    for (i, list) in per_component.iter().enumerate() {
        let map = crt.component_map(i);
        let mut next = Vec::with_capacity(out.len() * list.len());
        for (label, set) in &out {
            for (l, part) in list {
                let mut s = set.clone();
                for x in ring.elements() {
                    if s.contains(x) && !part.contains(map[x as usize]) {
                        s.remove(x);
                    }
                }
                let label = if label.is_empty() { l.clone() } else { format!("{label}x{l}") };
                next.push((label, s));
            }
        }
        out = next;
    }
    Ok(out)
}

/// All distinct subgroups `bR` (one representative `b`, the least) with
/// their cosets.
pub fn congruential_family(ring: &FiniteQuotientRing) -> Result<Vec<AuditSubgroup>> {
    let rings = congruential_rings(ring)?;
    let mut seen: HashSet<ElementSet> = HashSet::new();
    let mut out = Vec::new();
    for (label, r) in &rings {
        let basis: Vec<Elem> = {
            let (_, b) = crate::group::additive_span_with_basis(ring, r.iter());
            b
        };
        for b in ring.elements() {
            let sub = additive_span(ring, basis.iter().map(|&g| ring.mul(b, g)));
            if !seen.insert(sub.clone()) {
                continue;
            }
            let part = cosets(ring, &sub);
            out.push(AuditSubgroup {
                b,
                ring_label: label.clone(),
                index: (ring.order() / sub.len()) as u64,
                subgroup: sub,
                labels: part.labels,
                representatives: part.representatives,
            });
        }
    }
    out.sort_by_key(|s| (s.index, s.b));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub worst: Option<AffineCoset>,
    pub worst_mass: f64,
    /// `min (index^{−γ} − mass)` over audited cosets; negative on failure.
    pub margin: f64,
    pub cosets_checked: usize,
    pub violations: usize,
}

/// Checks `μ(a + bR) < [ring : bR]^{−γ}` for every family coset with
/// `[ring : bR] > q^ε`.
pub fn audit_weights(
    ring: &FiniteQuotientRing,
    family: &[AuditSubgroup],
    weights: &[f64],
    epsilon: f64,
    gamma: f64,
) -> AuditReport {
    let threshold = (ring.order() as f64).powf(epsilon);
    let mut report = AuditReport {
        passed: true,
        worst: None,
        worst_mass: 0.0,
        margin: f64::INFINITY,
        cosets_checked: 0,
        violations: 0,
    };
    for s in family {
        if (s.index as f64) <= threshold {
            continue;
        }
        let mut mass = vec![0.0; s.representatives.len()];
        for (x, &w) in weights.iter().enumerate() {
            mass[s.labels[x] as usize] += w;
        }
        let bound = (s.index as f64).powf(-gamma);
        for (k, &m) in mass.iter().enumerate() {
            report.cosets_checked += 1;
            let margin = bound - m;
            if m > bound * (1.0 + AUDIT_TOLERANCE) {
                report.violations += 1;
                report.passed = false;
            }
            if margin < report.margin {
                report.margin = margin;
                report.worst_mass = m;
                report.worst = Some(AffineCoset {
                    a: s.representatives[k],
                    b: s.b,
                    ring_label: s.ring_label.clone(),
                    index: s.index,
                });
            }
        }
    }
    report
}

pub fn nonconcentration_audit(
    ring: &FiniteQuotientRing,
    family: &[AuditSubgroup],
    mu: &Measure,
    epsilon: f64,
    gamma: f64,
) -> Result<AuditReport> {
    mu.check_ring(ring)?;
    Ok(audit_weights(ring, family, &mu.to_f64(), epsilon, gamma))
}

/// The set form `|A ∩ (a + bR)| < [ring : bR]^{−δ} |A|`.
pub fn set_audit(
    ring: &FiniteQuotientRing,
    family: &[AuditSubgroup],
    a: &ElementSet,
    epsilon: f64,
    delta: f64,
) -> Result<AuditReport> {
    a.check_ring(ring)?;
    let n = a.len().max(1) as f64;
    let w: Vec<f64> = ring.elements().map(|x| if a.contains(x) { 1.0 / n } else { 0.0 }).collect();
    Ok(audit_weights(ring, family, &w, epsilon, delta))
}

/// Elements of a coset `a + bR` of a family subgroup.
pub fn coset_elements(ring: &FiniteQuotientRing, s: &AuditSubgroup, a: Elem) -> ElementSet {
    ElementSet::from_elems(ring, s.subgroup.iter().map(|h| ring.add(a, h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NumberFieldSpec;

    #[test]
    fn integers_mod_prime_power() {
        let z81 = FiniteQuotientRing::integers_mod(81).unwrap();
        let fam = congruential_family(&z81).unwrap();
        let idx: Vec<u64> = fam.iter().map(|s| s.index).collect();
        assert_eq!(idx, vec![1, 3, 9, 27, 81]);
        let u = Measure::uniform(&z81);
        for gamma in [0.3, 1.0] {
            assert!(nonconcentration_audit(&z81, &fam, &u, 0.1, gamma).unwrap().passed);
        }
        let d = nonconcentration_audit(&z81, &fam, &Measure::dirac(&z81, 5), 0.1, 0.2).unwrap();
        assert!(!d.passed);
        assert_eq!(d.worst.unwrap().index, 81);
    }

    #[test]
    fn intro_counterexample() {
        let z81 = FiniteQuotientRing::integers_mod(81).unwrap();
        let fam = congruential_family(&z81).unwrap();
        let a = ElementSet::from_elems(&z81, [9, 18, 27]);
        let r = set_audit(&z81, &fam, &a, 0.1, 0.5).unwrap();
        assert!(!r.passed);
        let w = r.worst.unwrap();
        assert_eq!((w.a, w.b, w.index), (0, 9, 9));
        assert!((r.worst_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_family() {
        let r = FiniteQuotientRing::prime_power(&NumberFieldSpec::gaussian(), 3, 0, 2).unwrap();
        let rings = congruential_rings(&r).unwrap();
        let sizes: Vec<usize> = rings.iter().map(|(_, s)| s.len()).collect();
        assert_eq!(sizes, vec![27, 9, 81]);
        let fam = congruential_family(&r).unwrap();
        assert!(fam.iter().all(|s| s.index as usize * s.subgroup.len() == 81));
        assert!(fam.iter().any(|s| s.index == 3));
    }

    #[test]
    fn composite_products() {
        let z15 = FiniteQuotientRing::integers_mod(15).unwrap();
        let rings = congruential_rings(&z15).unwrap();
        assert_eq!(rings.len(), 1);
        let fam = congruential_family(&z15).unwrap();
        let idx: Vec<u64> = fam.iter().map(|s| s.index).collect();
        assert_eq!(idx, vec![1, 3, 5, 15]);
    }
}
