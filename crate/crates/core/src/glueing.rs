//! Composite moduli: screening decompositions along a filtration of local
//! components, component selection with failure witnesses, the pushforward
//! density of the ψ map and its entropy ledger.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{congruential_family, nonconcentration_audit, AuditReport};
use crate::error::{invalid, LabError, Result};
use crate::field::Subfield;
use crate::group::{additive_span, cosets};
use crate::measure::{convolve_exact, convolve_f64, ConvOp, Measure, Weights};
use crate::ring::{CrtDecomposition, Elem, FiniteQuotientRing};
use crate::set::ElementSet;
use crate::subring::{congruential_subring, subfield_image};

/// Largest ring on which the ψ density is built (convolutions are `O(q²)`).
pub const PSI_CAPACITY: usize = 20_000;

/// `α_0 = 0, α_1 = ⌊ρ₂n/2⌋, α_2 = ⌊ρ₂n⌋`, then `⌊4^k ρ₂ n⌋`, clamped at
/// `n` and deduplicated.
pub fn dyadic_indices(n: u32, rho2: f64) -> Vec<u32> {
    let clamp = |x: f64| -> u32 { if x >= n as f64 { n } else { x.floor().max(0.0) as u32 } };
    let mut out = vec![0, clamp(rho2 * n as f64 / 2.0), clamp(rho2 * n as f64)];
    let mut mult = 4.0;
    while *out.last().unwrap() < n {
        let next = clamp(mult * rho2 * n as f64);
        out.push(if next <= *out.last().unwrap() && mult > 1e18 { n } else { next });
        mult *= 4.0;
    }
    out.dedup();
    out
}

/// An ordered composite modulus `O/𝔞 ≅ ∏ O/𝒬_i`.
#[derive(Debug)]
pub struct CompositeModulus {
    pub ring: FiniteQuotientRing,
    pub crt: CrtDecomposition,
}

impl CompositeModulus {
    /// Requires pairwise distinct residue characteristics and, when
    /// `min_exponent` is given, either all `n_i = 1` or all `n_i > N`.
    pub fn new(ring: FiniteQuotientRing, min_exponent: Option<u32>) -> Result<Self> {
        let factors = &ring.modulus().factors;
        let sizes: Vec<u64> = factors.iter().map(|(p, _)| p.residue_size()).collect();
        for i in 0..sizes.len() {
            for j in i + 1..sizes.len() {
                if num_integer::gcd(sizes[i], sizes[j]) != 1 {
                    return invalid("residue field sizes of the components must be pairwise coprime");
                }
            }
        }
        if let Some(big) = min_exponent {
            let ns: Vec<u32> = factors.iter().map(|f| f.1).collect();
            if !(ns.iter().all(|&n| n == 1) || ns.iter().all(|&n| n > big)) {
                return invalid(format!("exponents {ns:?}: need all 1 or all > {big}"));
            }
        }
        let crt = ring.crt_decompose()?;
        Ok(Self { ring, crt })
    }

    pub fn len(&self) -> usize {
        self.crt.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crt.components.is_empty()
    }

    pub fn component(&self, j: usize) -> &FiniteQuotientRing {
        &self.crt.components[j]
    }

    pub fn component_size(&self, j: usize) -> usize {
        self.crt.components[j].order()
    }

    /// Fiber label of every element over `O/∏_{i∈prefix} 𝒬_i`, with the
    /// number of fibers `q̃`.
    pub fn fiber_labels(&self, prefix: &[usize]) -> (Vec<u32>, usize) {
        let mut q_tilde = 1usize;
        let mut labels = vec![0u32; self.ring.order()];
        for &c in prefix {
            let map = self.crt.component_map(c);
            let size = self.component_size(c);
            for (x, l) in labels.iter_mut().enumerate() {
                *l = *l * size as u32 + map[x];
            }
            q_tilde *= size;
        }
        (labels, q_tilde)
    }
}

/// One subgroup `bR` of a test family, with its coset partition.
#[derive(Clone, Debug)]
pub struct FamilySubgroup {
    pub b: Elem,
    pub set: ElementSet,
    pub labels: Vec<u32>,
    pub representatives: Vec<Elem>,
}

/// `{a + bR : 𝔭^{t1} ‖ b, R = R_{O',t2−t1}}` inside one local component.
#[derive(Clone, Debug)]
pub struct TestFamily {
    pub subfield: String,
    pub t1: u32,
    pub t2: u32,
    /// `[O/𝒬_j : bR]`, shared by all members.
    pub index: u64,
    /// `|O/𝒫|^{t1} · |O' mod 𝒫|^{t2−t1}`.
    pub nominal_index: u64,
    pub subgroups: Vec<FamilySubgroup>,
    /// `(subgroup, coset label)` sorted by (least element, `b`).
    pub cosets: Vec<(usize, u32)>,
}

impl TestFamily {
    pub fn coset_count(&self) -> usize {
        self.cosets.len()
    }

    pub fn coset_elements(&self, ring: &FiniteQuotientRing, k: usize) -> ElementSet {
        let (s, l) = self.cosets[k];
        let g = &self.subgroups[s];
        ElementSet::from_elems(ring, ring.elements().filter(|&x| g.labels[x as usize] == l))
    }

    fn from_subgroups(
        comp: &FiniteQuotientRing,
        subfield: String,
        t1: u32,
        t2: u32,
        nominal_index: u64,
        groups: Vec<(Elem, ElementSet)>,
    ) -> Self {
        let index = (comp.order() / groups[0].1.len()) as u64;
        let subgroups: Vec<FamilySubgroup> = groups
            .into_iter()
            .map(|(b, set)| {
                let part = cosets(comp, &set);
                FamilySubgroup {
                    b,
                    set,
                    labels: part.labels,
                    representatives: part.representatives,
                }
            })
            .collect();
        let mut keyed: Vec<(Elem, Elem, usize, u32)> = Vec::new();
        for (si, g) in subgroups.iter().enumerate() {
            for (l, &a) in g.representatives.iter().enumerate() {
                keyed.push((a, g.b, si, l as u32));
            }
        }
        keyed.sort();
        Self {
            subfield,
            t1,
            t2,
            index,
            nominal_index,
            subgroups,
            cosets: keyed.into_iter().map(|(_, _, s, l)| (s, l)).collect(),
        }
    }
}

/// Enumerates the test family of a local component ring.
pub fn test_sets(comp: &FiniteQuotientRing, sub: &Subfield, t1: u32, t2: u32) -> Result<TestFamily> {
    let n = comp.local_exponent()?;
    if !(t1 < t2 && t2 <= n) {
        return invalid(format!("need t1 < t2 ≤ {n}, got ({t1}, {t2})"));
    }
    let r = congruential_subring(comp, sub, t2 - t1)?.ring;
    let mut seen: HashSet<ElementSet> = HashSet::new();
    let mut groups = Vec::new();
    for b in comp.elements().filter(|&b| comp.valuation_at(0, b) == t1) {
        let set = additive_span(comp, r.basis.iter().map(|&g| comp.mul(b, g)));
        if seen.insert(set.clone()) {
            groups.push((b, set));
        }
    }
    let residue = comp.local_quotient(1)?;
    let image = subfield_image(&residue, sub).len() as u64;
    let nominal = comp.local_prime()?.residue_size().pow(t1) * image.pow(t2 - t1);
    Ok(TestFamily::from_subgroups(comp, sub.label.clone(), t1, t2, nominal, groups))
}

/// Singleton family `{a}` used for components with `n = 1`, where no
/// congruential family has index above 1 over `Z/p`.
fn singleton_family(comp: &FiniteQuotientRing) -> TestFamily {
    let zero = ElementSet::from_elems(comp, [0]);
    TestFamily::from_subgroups(comp, "point".into(), 1, 1, comp.order() as u64, vec![(0, zero)])
}

/// All test families of a component, for `t1 < t2` in the dyadic indices
/// and every subfield.
pub fn component_families(comp: &FiniteQuotientRing, rho2: f64) -> Result<Vec<TestFamily>> {
    let n = comp.local_exponent()?;
    let alphas = dyadic_indices(n, rho2);
    let mut out = Vec::new();
    for sf in comp.field().enumerate_subfields()? {
        for (i, &t1) in alphas.iter().enumerate() {
            for &t2 in &alphas[i + 1..] {
                out.push(test_sets(comp, &sf, t1, t2)?);
            }
        }
    }
    if n == 1 {
        out.push(singleton_family(comp));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GlueParams {
    pub kappa: f64,
    pub gamma: f64,
    pub r1: u32,
    pub r2: u32,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub rho4: f64,
    pub c_d: f64,
}

impl GlueParams {
    /// Follows the dependency shape `ρ3 = γ/2`, `r2 = ⌈2/τ⌉`,
    /// `ρ1 = κ/(8 r1 r2)`, `ρ0 = ρ1ρ2 / (8 C(d) log²(1/ρ2) r1)`,
    /// `ρ4 = κρ0/4`, with `ρ2` supplied directly.
    pub fn derived(kappa: f64, gamma: f64, tau: f64, r1: u32, rho2: f64, c_d: f64) -> Self {
        let r2 = (2.0 / tau).ceil() as u32;
        let rho1 = kappa / (8.0 * r1 as f64 * r2 as f64);
        let l = (1.0 / rho2).ln();
        let rho0 = rho1 * rho2 / (8.0 * c_d * l * l * r1 as f64);
        Self {
            kappa,
            gamma,
            r1,
            r2,
            rho0,
            rho1,
            rho2,
            rho3: gamma / 2.0,
            rho4: kappa * rho0 / 4.0,
            c_d,
        }
    }
}

impl Default for GlueParams {
    fn default() -> Self {
        Self::derived(0.05, 0.5, 0.5, 2, 0.25, 1.0)
    }
}

/// Junk produced by one test family.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyJunk {
    pub subfield: String,
    pub t1: u32,
    pub t2: u32,
    pub index: u64,
    #[serde(skip)]
    pub set: ElementSet,
    pub mass: f64,
    pub absorbed: usize,
    /// Largest number of cosets absorbed within one fiber.
    pub max_absorbed_per_fiber: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TubeDecomposition {
    pub prefix: Vec<usize>,
    pub component: usize,
    #[serde(skip)]
    pub good: ElementSet,
    #[serde(skip)]
    pub junk: ElementSet,
    /// Fibers whose remainder was too light, or carried no mass.
    #[serde(skip)]
    pub residual: ElementSet,
    pub families: Vec<FamilyJunk>,
    pub good_mass: f64,
    pub junk_mass: f64,
    pub fibers: usize,
    pub zero_mass_fibers: usize,
    /// Absorbed coset lists per fiber: `(family, coset)` pairs.
    #[serde(skip)]
    pub absorbed: Vec<Vec<(usize, usize)>>,
}

struct FiberOutcome {
    good: Vec<Elem>,
    residual: Vec<Elem>,
    family_sets: Vec<Vec<Elem>>,
    absorbed: Vec<(usize, usize)>,
    zero: bool,
}

fn fibers_of(labels: &[u32], count: usize) -> Vec<Vec<Elem>> {
    let mut out = vec![Vec::new(); count];
    for (x, &l) in labels.iter().enumerate() {
        out[l as usize].push(x as Elem);
    }
    out
}

/// Screens `μ` on each fiber of the prefix against the test families of
/// component `j`.
pub fn screen_decompose(
    cm: &CompositeModulus,
    mu: &Measure,
    prefix: &[usize],
    j: usize,
    families: &[TestFamily],
    params: &GlueParams,
) -> Result<TubeDecomposition> {
    mu.check_ring(&cm.ring)?;
    if j >= cm.len() || prefix.contains(&j) {
        return invalid(format!("component {j} is not available after prefix {prefix:?}"));
    }
    let w = mu.to_f64();
    let (labels, q_tilde) = cm.fiber_labels(prefix);
    let fibers = fibers_of(&labels, q_tilde);
    let proj = cm.crt.component_map(j);
    let active: Vec<usize> = (0..families.len()).filter(|&f| families[f].index > 1).collect();

    let outcomes: Vec<FiberOutcome> = fibers
        .par_iter()
        .map(|fiber| {
            let total: f64 = fiber.iter().map(|&x| w[x as usize]).sum();
            let mut out = FiberOutcome {
                good: Vec::new(),
                residual: Vec::new(),
                family_sets: vec![Vec::new(); families.len()],
                absorbed: Vec::new(),
                zero: total == 0.0,
            };
            if out.zero {
                out.residual = fiber.clone();
                return out;
            }
            let mut junk = vec![false; fiber.len()];
            for &f in &active {
                let fam = &families[f];
                let bound = (fam.index as f64).powf(-params.rho3) * total;
                let mut taken = vec![false; fiber.len()];
                // bucket fiber positions by coset, per subgroup
                let buckets: Vec<Vec<Vec<usize>>> = fam
                    .subgroups
                    .iter()
                    .map(|g| {
                        let mut b = vec![Vec::new(); g.representatives.len()];
                        for (pos, &x) in fiber.iter().enumerate() {
                            b[g.labels[proj[x as usize] as usize] as usize].push(pos);
                        }
                        b
                    })
                    .collect();
                for (k, &(s, l)) in fam.cosets.iter().enumerate() {
                    let members = &buckets[s][l as usize];
                    let fresh: f64 = members
                        .iter()
                        .filter(|&&p| !taken[p])
                        .map(|&p| w[fiber[p] as usize])
                        .sum();
                    if fresh >= bound {
                        for &p in members {
                            taken[p] = true;
                        }
                        out.absorbed.push((f, k));
                    }
                }
                for (p, &t) in taken.iter().enumerate() {
                    if t {
                        junk[p] = true;
                        out.family_sets[f].push(fiber[p]);
                    }
                }
            }
            let rest: Vec<Elem> = fiber.iter().zip(&junk).filter(|(_, &j)| !j).map(|(&x, _)| x).collect();
            let rest_mass: f64 = rest.iter().map(|&x| w[x as usize]).sum();
            if rest_mass >= params.rho1 / 2.0 * total {
                out.good = rest;
            } else {
                out.residual = rest;
            }
            out
        })
        .collect();

    let ring = &cm.ring;
    let mut good = ElementSet::empty(ring);
    let mut residual = ElementSet::empty(ring);
    let mut fam_sets: Vec<ElementSet> = vec![ElementSet::empty(ring); families.len()];
    let mut absorbed_counts = vec![(0usize, 0usize); families.len()];
    let mut absorbed = Vec::with_capacity(outcomes.len());
    let mut zero_mass_fibers = 0;
    for o in outcomes {
        good.union_with(&ElementSet::from_elems(ring, o.good));
        residual.union_with(&ElementSet::from_elems(ring, o.residual));
        for (f, v) in o.family_sets.into_iter().enumerate() {
            for x in v {
                fam_sets[f].insert(x);
            }
        }
        let mut per = vec![0usize; families.len()];
        for &(f, _) in &o.absorbed {
            per[f] += 1;
        }
        for (f, c) in per.into_iter().enumerate() {
            absorbed_counts[f].0 += c;
            absorbed_counts[f].1 = absorbed_counts[f].1.max(c);
        }
        absorbed.push(o.absorbed);
        zero_mass_fibers += o.zero as usize;
    }
    let mut junk = residual.clone();
    for s in &fam_sets {
        junk.union_with(s);
    }
    let families_out = families
        .iter()
        .zip(fam_sets)
        .zip(absorbed_counts)
        .map(|((f, set), (n, m))| FamilyJunk {
            subfield: f.subfield.clone(),
            t1: f.t1,
            t2: f.t2,
            index: f.index,
            mass: mu.mass(&set),
            set,
            absorbed: n,
            max_absorbed_per_fiber: m,
        })
        .collect();
    Ok(TubeDecomposition {
        prefix: prefix.to_vec(),
        component: j,
        good_mass: mu.mass(&good),
        junk_mass: mu.mass(&junk),
        good,
        junk,
        residual,
        families: families_out,
        fibers: q_tilde,
        zero_mass_fibers,
        absorbed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReauditReport {
    pub partition_ok: bool,
    pub cosets_checked: usize,
    /// `μ(B ∩ S(ξ,W)) < index^{−ρ3} μ(S(ξ))`.
    pub screening_violations: usize,
    /// `μ(B ∩ S(ξ,W)) < index^{−ρ3} μ(B ∩ S(ξ))`.
    pub conditional_violations: usize,
}

/// Recomputes the conditional bounds on the good set from membership alone.
pub fn reaudit(
    cm: &CompositeModulus,
    mu: &Measure,
    dec: &TubeDecomposition,
    families: &[TestFamily],
    params: &GlueParams,
) -> ReauditReport {
    let w = mu.to_f64();
    let ring = &cm.ring;
    let mut both = dec.good.clone();
    both.intersect_with(&dec.junk);
    let partition_ok = both.is_empty() && dec.good.len() + dec.junk.len() == ring.order();
    let (labels, q_tilde) = cm.fiber_labels(&dec.prefix);
    let fibers = fibers_of(&labels, q_tilde);
    let proj = cm.crt.component_map(dec.component);
    let mut report = ReauditReport {
        partition_ok,
        cosets_checked: 0,
        screening_violations: 0,
        conditional_violations: 0,
    };
    for fiber in &fibers {
        let total: f64 = fiber.iter().map(|&x| w[x as usize]).sum();
        if total == 0.0 {
            continue;
        }
        let good_total: f64 = fiber.iter().filter(|&&x| dec.good.contains(x)).map(|&x| w[x as usize]).sum();
        for fam in families.iter().filter(|f| f.index > 1) {
            let factor = (fam.index as f64).powf(-params.rho3);
            for g in &fam.subgroups {
                let mut mass = vec![0.0; g.representatives.len()];
                for &x in fiber.iter().filter(|&&x| dec.good.contains(x)) {
                    mass[g.labels[proj[x as usize] as usize] as usize] += w[x as usize];
                }
                for m in mass {
                    report.cosets_checked += 1;
                    if m >= factor * total {
                        report.screening_violations += 1;
                    }
                    if good_total > 0.0 && m >= factor * good_total {
                        report.conditional_violations += 1;
                    }
                }
            }
        }
    }
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub prefix: Vec<usize>,
    pub component: usize,
    pub junk_masses: Vec<f64>,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureWitness {
    pub measure: usize,
    /// Prefix fiber `ξ0` (label over the accepted components).
    pub fiber: u32,
    /// `(component, family subfield, t1, t2, coset least element, b)` per
    /// constrained component.
    pub constraints: Vec<(usize, String, u32, u32, Elem, Elem)>,
    pub index: f64,
    pub mass: f64,
    /// `q̃⁻¹ (∏ q_j*)^{−ρ3} ρ1 / (2^{|I|+2} C(d) log²(1/ρ2))`.
    pub lower_bound: f64,
    pub exceeds_lower_bound: bool,
    /// `index^{−γ} − mass`; negative means the witness breaks the input
    /// non-concentration.
    pub audit_margin: f64,
    pub input_audit: AuditReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct Selection {
    pub accepted: Vec<usize>,
    pub rejected: Vec<usize>,
    pub q_tilde: usize,
    pub target: f64,
    pub reached: bool,
    pub steps: Vec<StepRecord>,
    pub witness: Option<FailureWitness>,
    pub family_counts: Vec<usize>,
}

/// Greedy component selection: a component is accepted when every measure
/// puts junk mass below `ρ1` on it, given the components accepted so far.
pub fn select_components(
    cm: &CompositeModulus,
    measures: &[Measure],
    params: &GlueParams,
    audit_epsilon: f64,
) -> Result<Selection> {
    let families: Vec<Vec<TestFamily>> = (0..cm.len())
        .map(|j| component_families(cm.component(j), params.rho2))
        .collect::<Result<_>>()?;
    let mut accepted: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let mut last: Vec<(usize, Vec<TubeDecomposition>)> = Vec::new();
    loop {
        let mut progressed = false;
        last.clear();
        for j in (0..cm.len()).filter(|j| !accepted.contains(j)) {
            let decs: Vec<TubeDecomposition> = measures
                .iter()
                .map(|m| screen_decompose(cm, m, &accepted, j, &families[j], params))
                .collect::<Result<_>>()?;
            let masses: Vec<f64> = decs.iter().map(|d| d.junk_mass).collect();
            let ok = masses.iter().all(|&m| m < params.rho1);
            steps.push(StepRecord {
                prefix: accepted.clone(),
                component: j,
                junk_masses: masses,
                accepted: ok,
            });
            if ok {
                accepted.push(j);
                progressed = true;
                break;
            }
            last.push((j, decs));
        }
        if !progressed {
            break;
        }
    }
    let rejected: Vec<usize> = (0..cm.len()).filter(|j| !accepted.contains(j)).collect();
    let q_tilde: usize = accepted.iter().map(|&j| cm.component_size(j)).product();
    let target = (cm.ring.order() as f64).powf(params.rho0);
    let witness = if rejected.is_empty() || measures.is_empty() {
        None
    } else {
        Some(failure_witness(cm, measures, params, &accepted, &last, &families, audit_epsilon)?)
    };
    Ok(Selection {
        reached: q_tilde as f64 >= target,
        accepted,
        rejected,
        q_tilde,
        target,
        steps,
        witness,
        family_counts: families.iter().map(|f| f.len()).collect(),
    })
}

fn failure_witness(
    cm: &CompositeModulus,
    measures: &[Measure],
    params: &GlueParams,
    accepted: &[usize],
    last: &[(usize, Vec<TubeDecomposition>)],
    families: &[Vec<TestFamily>],
    audit_epsilon: f64,
) -> Result<FailureWitness> {
    // the measure failing on the most components (lowest index on ties)
    let fail_count = |i: usize| last.iter().filter(|(_, d)| d[i].junk_mass >= params.rho1).count();
    let i0 = (0..measures.len()).max_by_key(|&i| (fail_count(i), std::cmp::Reverse(i))).unwrap();
    let mu = &measures[i0];
    let w = mu.to_f64();
    let (labels, q_tilde) = cm.fiber_labels(accepted);
    // per rejected component: the family with the heaviest junk for i0
    let chosen: Vec<(usize, usize, &TubeDecomposition)> = last
        .iter()
        .filter_map(|(j, decs)| {
            let d = &decs[i0];
            let f = (0..d.families.len())
                .filter(|&f| d.families[f].absorbed > 0)
                .max_by(|&a, &b| d.families[a].mass.total_cmp(&d.families[b].mass).then(b.cmp(&a)))?;
            Some((*j, f, d))
        })
        .collect();
    let n_rejected = last.len();
    let log_term = (1.0 / params.rho2).ln().powi(2);
    let mut best: Option<(f64, FailureWitness)> = None;
    let full_audit = nonconcentration_audit(&cm.ring, &congruential_family(&cm.ring)?, mu, audit_epsilon, params.gamma)?;
    let subsets = 1usize << chosen.len().min(12);
    for mask in 1..subsets {
        let picked: Vec<&(usize, usize, &TubeDecomposition)> =
            chosen.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, c)| c).collect();
        for xi in 0..q_tilde {
            // absorbed cosets of the chosen family in fiber ξ, per component
            let options: Vec<Vec<usize>> = picked
                .iter()
                .map(|(_, f, d)| d.absorbed[xi].iter().filter(|(ff, _)| ff == f).map(|&(_, k)| k).collect())
                .collect();
            if options.iter().any(|o| o.is_empty()) {
                continue;
            }
            let combos: usize = options.iter().map(|o| o.len()).product();
            if combos > 4096 {
                continue;
            }
            for c in 0..combos {
                let mut rem = c;
                let choice: Vec<usize> = options
                    .iter()
                    .map(|o| {
                        let k = o[rem % o.len()];
                        rem /= o.len();
                        k
                    })
                    .collect();
                let mass: f64 = cm
                    .ring
                    .elements()
                    .filter(|&x| labels[x as usize] as usize == xi)
                    .filter(|&x| {
                        picked.iter().zip(&choice).all(|((j, f, _), &k)| {
                            let fam = &families[*j][*f];
                            let (s, l) = fam.cosets[k];
                            fam.subgroups[s].labels[cm.crt.component_map(*j)[x as usize] as usize] == l
                        })
                    })
                    .map(|x| w[x as usize])
                    .sum();
                let q_star: f64 = picked.iter().map(|(j, f, _)| families[*j][*f].index as f64).product();
                let index = q_tilde as f64 * q_star;
                let margin = index.powf(-params.gamma) - mass;
                let lower = params.rho1
                    / (q_tilde as f64
                        * q_star.powf(params.rho3)
                        * 2f64.powi(n_rejected as i32 + 2)
                        * params.c_d
                        * log_term);
                if best.as_ref().map_or(true, |(m, _)| margin < *m) {
                    let constraints = picked
                        .iter()
                        .zip(&choice)
                        .map(|((j, f, _), &k)| {
                            let fam = &families[*j][*f];
                            let (s, l) = fam.cosets[k];
                            let g = &fam.subgroups[s];
                            (*j, fam.subfield.clone(), fam.t1, fam.t2, g.representatives[l as usize], g.b)
                        })
                        .collect();
                    best = Some((
                        margin,
                        FailureWitness {
                            measure: i0,
                            fiber: xi as u32,
                            constraints,
                            index,
                            mass,
                            lower_bound: lower,
                            exceeds_lower_bound: mass > lower,
                            audit_margin: margin,
                            input_audit: full_audit.clone(),
                        },
                    ));
                }
            }
        }
    }
    Ok(match best {
        Some((_, w)) => w,
        // no coset was absorbed: the junk is all residual mass
        None => FailureWitness {
            measure: i0,
            fiber: 0,
            constraints: Vec::new(),
            index: q_tilde as f64,
            mass: 0.0,
            lower_bound: 0.0,
            exceeds_lower_bound: false,
            audit_margin: (q_tilde as f64).powf(-params.gamma),
            input_audit: full_audit,
        },
    })
}

/// Weights of either kind, used for densities and measures alike.
#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Density {
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Density::Exact(v) => v.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect(),
            Density::Float(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Density::Exact(v) => v.len(),
            Density::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug)]
pub struct PsiMeasure {
    /// `F = q · 𝐏`, a density against the uniform probability on `O/𝔞`.
    pub density: Density,
    pub z_set: Vec<Elem>,
    pub reduced_exponents: Vec<u32>,
    /// `(1/q) Σ F = 1`, checked exactly in rational mode.
    pub normalized: bool,
}

/// `Z_i`: least lifts of `O mod 𝒫_i^{n̄_i}` inside component `i`, zero at
/// the other components; `Z = Σ_{i∈J} Z_i`.
pub fn z_set(cm: &CompositeModulus, components: &[usize], reduced: &[u32]) -> Result<Vec<Elem>> {
    let mut z: Vec<Elem> = vec![0];
    for &i in components {
        let comp = cm.component(i);
        let target = comp.local_quotient(reduced[i])?;
        let proj = comp.projection_to(&target)?;
        let mut lift = vec![Elem::MAX; target.order()];
        for x in comp.elements() {
            let t = proj[x as usize] as usize;
            if lift[t] == Elem::MAX {
                lift[t] = x;
            }
        }
        let embedded: Vec<Elem> = lift
            .into_iter()
            .map(|x| {
                let mut parts = vec![0; cm.len()];
                parts[i] = x;
                cm.crt.recombine(&parts)
            })
            .collect();
        let mut next = Vec::with_capacity(z.len() * embedded.len());
        for &a in &z {
            for &b in &embedded {
                next.push(cm.ring.add(a, b));
            }
        }
        next.sort_unstable();
        next.dedup();
        z = next;
    }
    Ok(z)
}

/// Pushforward density of the ψ map:
/// `F = q((μ_1 ⊗ ⋯ ⊗ μ_{r1})^{∗r2} ∗ m_Z)`, built by convolution.
pub fn build_psi_measure(
    cm: &CompositeModulus,
    measures: &[Measure],
    r2: u32,
    components: &[usize],
    reduced_exponents: Option<Vec<u32>>,
    rho4: f64,
) -> Result<PsiMeasure> {
    let ring = &cm.ring;
    let q = ring.order();
    if q > PSI_CAPACITY {
        return Err(LabError::CapacityExceeded {
            what: "psi density".into(),
            size: q as u128,
            cap: PSI_CAPACITY as u128,
        });
    }
    if measures.is_empty() || r2 == 0 {
        return invalid("need r1 ≥ 1 measures and r2 ≥ 1");
    }
    for m in measures {
        m.check_ring(ring)?;
    }
    let reduced = match reduced_exponents {
        Some(r) => r,
        None => ring
            .modulus()
            .factors
            .iter()
            .map(|(_, n)| (rho4 * *n as f64).floor() as u32)
            .collect(),
    };
    if reduced.len() != cm.len() || reduced.iter().zip(&ring.modulus().factors).any(|(&m, f)| m > f.1) {
        return invalid("reduced exponents must satisfy n̄_i ≤ n_i, one per component");
    }
    let z = z_set(cm, components, &reduced)?;
    let exact = measures.iter().all(|m| m.is_exact());
    let density = if exact {
        let ws: Vec<&[BigRational]> = measures.iter().map(|m| m.exact()).collect::<Result<_>>()?;
        let mut nu = ws[0].to_vec();
        for w in &ws[1..] {
            nu = convolve_exact(ring, ConvOp::Mul, &nu, w);
        }
        let mut p = nu.clone();
        for _ in 1..r2 {
            p = convolve_exact(ring, ConvOp::Add, &p, &nu);
        }
        let mut mz = vec![BigRational::zero(); q];
        let zw = BigRational::new(BigInt::one(), BigInt::from(z.len()));
        for &x in &z {
            mz[x as usize] = zw.clone();
        }
        let p = convolve_exact(ring, ConvOp::Add, &p, &mz);
        let qr = BigRational::from_integer(q.into());
        Density::Exact(p.into_iter().map(|r| r * &qr).collect())
    } else {
        let ws: Vec<Vec<f64>> = measures.iter().map(|m| m.to_f64()).collect();
        let mut nu = ws[0].clone();
        for w in &ws[1..] {
            nu = convolve_f64(ring, ConvOp::Mul, &nu, w);
        }
        let mut p = nu.clone();
        for _ in 1..r2 {
            p = convolve_f64(ring, ConvOp::Add, &p, &nu);
        }
        let mut mz = vec![0.0; q];
        for &x in &z {
            mz[x as usize] = 1.0 / z.len() as f64;
        }
        let p = convolve_f64(ring, ConvOp::Add, &p, &mz);
        Density::Float(p.into_iter().map(|v| v * q as f64).collect())
    };
    let normalized = match &density {
        Density::Exact(v) => v.iter().sum::<BigRational>() == BigRational::from_integer(q.into()),
        Density::Float(v) => (v.iter().sum::<f64>() / q as f64 - 1.0).abs() < 1e-9,
    };
    Ok(PsiMeasure {
        density,
        z_set: z,
        reduced_exponents: reduced,
        normalized,
    })
}

/// `Weights` of a measure as a density against the uniform probability.
pub fn measure_density(ring: &FiniteQuotientRing, mu: &Measure) -> Density {
    let q = ring.order();
    match mu.weights() {
        Weights::Exact(w) => {
            let qr = BigRational::from_integer(q.into());
            Density::Exact(w.iter().map(|r| r * &qr).collect())
        }
        Weights::Float(w) => Density::Float(w.iter().map(|v| v * q as f64).collect()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LedgerLevel {
    pub level: usize,
    pub q_tilde: usize,
    /// `∫ F_s dν_s`, exact string in rational mode.
    pub integral: String,
    pub normalized: bool,
    pub entropy: f64,
    /// `∫ F_s log⁺(F_s / F_{s−1}) dν_s`.
    pub relative: f64,
    /// Pointwise `max(1, F_s) ≤ max(1, F_{s−1}) · max(1, F_s/F_{s−1})`.
    pub pointwise_chain: bool,
    /// `H_s ≤ H_{s−1} + relative` (floating, relative tolerance 1e-12).
    pub integrated_chain: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyLedger {
    pub levels: Vec<LedgerLevel>,
    pub support: usize,
    pub support_threshold: f64,
    pub support_large: bool,
    /// `log(10^T q̃_T^{2 r1 r2 ρ1})`.
    pub entropy_bound: f64,
    pub final_entropy: f64,
    pub chain_holds: bool,
}

fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

/// Conditional expectations of `F` along the filtration given by `order`
/// and the entropy bookkeeping between consecutive levels.
pub fn entropy_ledger(
    cm: &CompositeModulus,
    density: &Density,
    order: &[usize],
    params: &GlueParams,
) -> Result<EntropyLedger> {
    let q = cm.ring.order();
    if density.len() != q {
        return invalid("density length differs from ring order");
    }
    let mut levels = Vec::new();
    // level 0: the trivial quotient with F_0 ≡ 1
    let mut prev_exact: Option<Vec<BigRational>> = match density {
        Density::Exact(_) => Some(vec![BigRational::one()]),
        Density::Float(_) => None,
    };
    let mut prev_f: Vec<f64> = vec![1.0];
    let mut prev_labels: Vec<u32> = vec![0; q];
    let mut prev_entropy = 0.0;
    let mut chain_holds = true;
    for s in 1..=order.len() {
        let (labels, q_tilde) = cm.fiber_labels(&order[..s]);
        // parent of each level-s fiber
        let mut parent = vec![0u32; q_tilde];
        for x in 0..q {
            parent[labels[x] as usize] = prev_labels[x];
        }
        let (f_s, exact, integral, normalized, pointwise) = match density {
            Density::Exact(v) => {
                let mut sums = vec![BigRational::zero(); q_tilde];
                for (x, r) in v.iter().enumerate() {
                    sums[labels[x] as usize] += r;
                }
                let scale = BigRational::new(BigInt::from(q_tilde), BigInt::from(q));
                let f: Vec<BigRational> = sums.into_iter().map(|r| r * &scale).collect();
                let integral: BigRational = f.iter().sum::<BigRational>() / BigRational::from_integer(q_tilde.into());
                let prev = prev_exact.as_ref().unwrap();
                let one = BigRational::one();
                let pointwise = f.iter().enumerate().all(|(xi, fv)| {
                    if !fv.is_positive() {
                        return true;
                    }
                    let fp = &prev[parent[xi] as usize];
                    if !fp.is_positive() {
                        return false;
                    }
                    let ratio = fv / fp;
                    let lhs = fv.clone().max(one.clone());
                    let rhs = fp.clone().max(one.clone()) * ratio.max(one.clone());
                    lhs <= rhs
                });
                let ff: Vec<f64> = f.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
                (ff, Some(f), integral.to_string(), integral.is_one(), pointwise)
            }
            Density::Float(v) => {
                let mut sums = vec![0.0; q_tilde];
                for (x, r) in v.iter().enumerate() {
                    sums[labels[x] as usize] += r;
                }
                let f: Vec<f64> = sums.into_iter().map(|r| r * q_tilde as f64 / q as f64).collect();
                let integral = f.iter().sum::<f64>() / q_tilde as f64;
                let pointwise = f.iter().enumerate().all(|(xi, &fv)| {
                    if fv <= 0.0 {
                        return true;
                    }
                    let fp = prev_f[parent[xi] as usize];
                    fp > 0.0 && fv.max(1.0) <= fp.max(1.0) * (fv / fp).max(1.0) * (1.0 + 1e-12)
                });
                (f, None, integral.to_string(), (integral - 1.0).abs() < 1e-9, pointwise)
            }
        };
        let entropy = f_s.iter().map(|&v| v * log_plus(v)).sum::<f64>() / q_tilde as f64;
        let relative = f_s
            .iter()
            .enumerate()
            .map(|(xi, &v)| {
                let fp = prev_f[parent[xi] as usize];
                if v > 0.0 && fp > 0.0 {
                    v * log_plus(v / fp)
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            / q_tilde as f64;
        let integrated = entropy <= (prev_entropy + relative) * (1.0 + 1e-12) + 1e-15;
        chain_holds &= pointwise && integrated && normalized;
        levels.push(LedgerLevel {
            level: s,
            q_tilde,
            integral,
            normalized,
            entropy,
            relative,
            pointwise_chain: pointwise,
            integrated_chain: integrated,
        });
        prev_entropy = entropy;
        prev_f = f_s;
        prev_exact = exact;
        prev_labels = labels;
    }
    let q_t = levels.last().map_or(1, |l| l.q_tilde);
    let support = prev_f.iter().filter(|&&v| v > 0.0).count();
    let support_threshold = (q_t as f64).powf(1.0 - params.kappa);
    let t = order.len() as f64;
    Ok(EntropyLedger {
        support,
        support_large: support as f64 >= support_threshold,
        support_threshold,
        entropy_bound: t * 10f64.ln() + 2.0 * params.r1 as f64 * params.r2 as f64 * params.rho1 * (q_t as f64).ln(),
        final_entropy: prev_entropy,
        levels,
        chain_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NumberFieldSpec;

    fn z105() -> CompositeModulus {
        CompositeModulus::new(FiniteQuotientRing::integers_mod(105).unwrap(), Some(3)).unwrap()
    }

    fn families(cm: &CompositeModulus, j: usize, p: &GlueParams) -> Vec<TestFamily> {
        component_families(cm.component(j), p.rho2).unwrap()
    }

    #[test]
    fn dyadic() {
        assert_eq!(dyadic_indices(100, 0.1), vec![0, 5, 10, 40, 100]);
        assert_eq!(dyadic_indices(4, 0.5), vec![0, 1, 2, 4]);
        assert_eq!(dyadic_indices(7, 2.0), vec![0, 7]);
        assert_eq!(dyadic_indices(1, 0.1), vec![0, 1]);
    }

    #[test]
    fn gaussian_test_family() {
        let r = FiniteQuotientRing::prime_power(&NumberFieldSpec::gaussian(), 3, 0, 2).unwrap();
        let subs = r.field().enumerate_subfields().unwrap();
        let f = test_sets(&r, &subs[0], 0, 1).unwrap();
        assert_eq!(f.index, 3);
        assert_eq!(f.nominal_index, 3);
        // b runs over all units: the lines u·F_3 in F_9
        assert_eq!(f.subgroups.len(), 4);
        assert_eq!(f.coset_count(), 12);
        let full = test_sets(&r, &subs[1], 0, 2).unwrap();
        assert_eq!((full.index, full.coset_count()), (1, 1));
    }

    #[test]
    fn uniform_and_dirac_screening() {
        let cm = z105();
        let p = GlueParams::default();
        let u = Measure::uniform(&cm.ring);
        let d = Measure::dirac(&cm.ring, 17);
        for j in 0..3 {
            let fams = families(&cm, j, &p);
            let prefix: Vec<usize> = (0..j).collect();
            let du = screen_decompose(&cm, &u, &prefix, j, &fams, &p).unwrap();
            assert!(du.junk.is_empty());
            let r = reaudit(&cm, &u, &du, &fams, &p);
            assert!(r.partition_ok && r.screening_violations == 0 && r.conditional_violations == 0);
            let dd = screen_decompose(&cm, &d, &prefix, j, &fams, &p).unwrap();
            assert!(dd.good.is_empty());
            assert!(reaudit(&cm, &d, &dd, &fams, &p).partition_ok);
        }
    }

    #[test]
    fn product_measure_junk_on_dirac_component() {
        let cm = CompositeModulus::new(FiniteQuotientRing::integers_mod(15).unwrap(), None).unwrap();
        let p = GlueParams::default();
        // uniform on Z/3, dirac at 2 on Z/5
        let w: Vec<f64> = cm
            .ring
            .elements()
            .map(|x| if cm.crt.split(x)[1] == 2 { 1.0 / 3.0 } else { 0.0 })
            .collect();
        let mu = Measure::from_float(&cm.ring, w).unwrap();
        let (c3, c5) = (cm.crt.components[0].order(), cm.crt.components[1].order());
        assert_eq!((c3, c5), (3, 5));
        let f0 = families(&cm, 0, &p);
        let f1 = families(&cm, 1, &p);
        assert!(screen_decompose(&cm, &mu, &[], 0, &f0, &p).unwrap().junk.is_empty());
        let dec = screen_decompose(&cm, &mu, &[], 1, &f1, &p).unwrap();
        assert!((dec.junk_mass - 1.0).abs() < 1e-12);
        let sel = select_components(&cm, &[mu], &p, 0.1).unwrap();
        assert_eq!(sel.accepted, vec![0]);
        assert_eq!(sel.rejected, vec![1]);
        let w = sel.witness.unwrap();
        assert!(w.audit_margin < 0.0);
        assert!(!w.input_audit.passed);
    }

    #[test]
    fn uniform_selection_accepts_all() {
        let cm = z105();
        let p = GlueParams::default();
        let sel = select_components(&cm, &[Measure::uniform(&cm.ring)], &p, 0.1).unwrap();
        assert_eq!(sel.accepted, vec![0, 1, 2]);
        assert!(sel.witness.is_none());
        let empty = select_components(&cm, &[], &p, 0.1).unwrap();
        assert_eq!(empty.accepted.len(), 3);
    }

    #[test]
    fn psi_dirac_and_uniform() {
        let cm = CompositeModulus::new(FiniteQuotientRing::integers_mod(15).unwrap(), None).unwrap();
        let one = Measure::dirac(&cm.ring, 1);
        let psi = build_psi_measure(&cm, &[one.clone(), one], 3, &[], None, 0.0).unwrap();
        assert!(psi.normalized);
        let Density::Exact(f) = &psi.density else { panic!() };
        for (x, v) in f.iter().enumerate() {
            let want = if x == 3 { 15 } else { 0 };
            assert_eq!(*v, BigRational::from_integer(want.into()));
        }
        let units = Measure::uniform_on(&cm.ring, &cm.ring.units()).unwrap();
        let psi = build_psi_measure(&cm, &[units.clone(), units], 2, &[0, 1], Some(vec![1, 1]), 0.0).unwrap();
        assert!(psi.normalized);
        assert_eq!(psi.z_set.len(), 15);
    }

    #[test]
    fn ledger_examples() {
        let cm = z105();
        let p = GlueParams::default();
        let uni = Density::Exact(vec![BigRational::one(); 105]);
        let l = entropy_ledger(&cm, &uni, &[0, 1, 2], &p).unwrap();
        assert!(l.chain_holds && l.final_entropy == 0.0 && l.support == 105);
        let mut point = vec![BigRational::zero(); 105];
        point[4] = BigRational::from_integer(105.into());
        let l = entropy_ledger(&cm, &Density::Exact(point), &[0, 1, 2], &p).unwrap();
        assert!((l.final_entropy - 105f64.ln()).abs() < 1e-12);
        assert!(l.chain_holds);
    }
}
