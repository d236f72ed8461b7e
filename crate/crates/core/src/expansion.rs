//! Sum and product sets, sum-product sweeps, bounded generation and the
//! covering lemmas for large sets.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{congruential_family, set_audit, AffineCoset, AuditSubgroup, AUDIT_TOLERANCE};
use crate::error::{invalid, LabError, Result};
use crate::fourier::CharacterTable;
use crate::ring::{Elem, FiniteQuotientRing};
use crate::set::ElementSet;

/// Upper bound on `r · k · q²` for iterated sum-product sets.
pub const ITERATION_BUDGET: u128 = 10_000_000_000;

fn image<F: Fn(Elem, Elem) -> Elem>(ring: &FiniteQuotientRing, a: &ElementSet, b: &ElementSet, f: F) -> Result<ElementSet> {
    a.check_ring(ring)?;
    b.check_ring(ring)?;
    let bv = b.to_vec();
    let mut out = ElementSet::empty(ring);
    for x in a.iter() {
        for &y in &bv {
            out.insert(f(x, y));
        }
    }
    Ok(out)
}

pub fn sum_set(ring: &FiniteQuotientRing, a: &ElementSet, b: &ElementSet) -> Result<ElementSet> {
    image(ring, a, b, |x, y| ring.add(x, y))
}

pub fn difference_set(ring: &FiniteQuotientRing, a: &ElementSet, b: &ElementSet) -> Result<ElementSet> {
    image(ring, a, b, |x, y| ring.sub(x, y))
}

pub fn product_set(ring: &FiniteQuotientRing, a: &ElementSet, b: &ElementSet) -> Result<ElementSet> {
    image(ring, a, b, |x, y| ring.mul(x, y))
}

/// `A^k = {a_1 ⋯ a_k}`.
pub fn product_power(ring: &FiniteQuotientRing, a: &ElementSet, k: u32) -> Result<ElementSet> {
    if k == 0 {
        return Ok(ElementSet::from_elems(ring, [ring.one()]));
    }
    let mut p = a.clone();
    for _ in 1..k {
        p = product_set(ring, &p, a)?;
    }
    Ok(p)
}

/// `Σ_r X = {x_1 + … + x_r}`.
pub fn sum_power(ring: &FiniteQuotientRing, x: &ElementSet, r: u32) -> Result<ElementSet> {
    if r == 0 {
        return Ok(ElementSet::from_elems(ring, [0]));
    }
    let mut s = x.clone();
    for _ in 1..r {
        s = sum_set(ring, &s, x)?;
    }
    Ok(s)
}

/// `Σ_r A^k − Σ_r A^k`.
pub fn iterated_sum_product(ring: &FiniteQuotientRing, a: &ElementSet, r: u32, k: u32) -> Result<ElementSet> {
    let q = ring.order() as u128;
    let cost = r as u128 * k as u128 * q * q;
    if cost > ITERATION_BUDGET {
        return Err(LabError::CapacityExceeded {
            what: "iterated sum-product".into(),
            size: cost,
            cap: ITERATION_BUDGET,
        });
    }
    let s = sum_power(ring, &product_power(ring, a, k)?, r)?;
    difference_set(ring, &s, &s)
}

/// `log max(|A+A|, |A·A|) / log |A| − 1`; undefined for `|A| ≤ 1`.
pub fn empirical_delta3(size: usize, sum: usize, product: usize) -> Option<f64> {
    (size > 1).then(|| (sum.max(product) as f64).ln() / (size as f64).ln() - 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub size: usize,
    pub sum_size: usize,
    pub product_size: usize,
    pub delta3: Option<f64>,
    pub in_window: bool,
    pub audit_passed: bool,
    pub audit_worst: Option<AffineCoset>,
}

/// Density window `q^{δ1} < s < q^{1−δ1}` as an inclusive size range.
pub fn density_window(q: usize, delta1: f64) -> Option<(usize, usize)> {
    let qf = q as f64;
    let (lo, hi) = (qf.powf(delta1), qf.powf(1.0 - delta1));
    let sizes: Vec<usize> = (1..=q).filter(|&s| (s as f64) > lo && (s as f64) < hi).collect();
    Some((*sizes.first()?, *sizes.last()?))
}

pub fn expansion_report(
    ring: &FiniteQuotientRing,
    family: &[AuditSubgroup],
    a: &ElementSet,
    delta1: f64,
    delta2: f64,
    epsilon: f64,
) -> Result<ExpansionReport> {
    let sum = sum_set(ring, a, a)?.len();
    let product = product_set(ring, a, a)?.len();
    let in_window = density_window(ring.order(), delta1).is_some_and(|(lo, hi)| (lo..=hi).contains(&a.len()));
    let audit = set_audit(ring, family, a, epsilon, delta2)?;
    Ok(ExpansionReport {
        size: a.len(),
        sum_size: sum,
        product_size: product,
        delta3: empirical_delta3(a.len(), sum, product),
        in_window,
        audit_passed: audit.passed,
        audit_worst: audit.worst,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Sampler {
    Exhaustive,
    Random { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepParams {
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepWitness {
    pub elements: Vec<Elem>,
    pub sum_size: usize,
    pub product_size: usize,
    pub delta3: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub q: usize,
    pub params: SweepParams,
    pub sampler: Sampler,
    pub window: (usize, usize),
    pub examined: u64,
    pub admissible: u64,
    pub rejected_by_audit: u64,
    pub min_delta3: Option<f64>,
    pub witness: Option<SweepWitness>,
    /// Counts per interval `[k/10, (k+1)/10)` of δ₃, keyed by `k`.
    pub histogram: BTreeMap<i64, u64>,
    pub all_positive: bool,
}

#[derive(Clone, Debug, Default)]
struct SweepAcc {
    examined: u64,
    admissible: u64,
    rejected: u64,
    best: Option<(f64, u64, usize, usize)>,
    histogram: BTreeMap<i64, u64>,
}

impl SweepAcc {
    fn record(&mut self, mask: u64, sum: usize, product: usize, size: usize) {
        self.admissible += 1;
        let d = empirical_delta3(size, sum, product).unwrap_or(f64::NEG_INFINITY);
        *self.histogram.entry((d * 10.0).floor() as i64).or_default() += 1;
        let better = match self.best {
            None => true,
            Some((bd, bm, _, _)) => d < bd || (d == bd && mask < bm),
        };
        if better {
            self.best = Some((d, mask, sum, product));
        }
    }

    fn merge(mut self, other: SweepAcc) -> SweepAcc {
        self.examined += other.examined;
        self.admissible += other.admissible;
        self.rejected += other.rejected;
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_default() += v;
        }
        if let Some((d, m, s, p)) = other.best {
            let better = match self.best {
                None => true,
                Some((bd, bm, _, _)) => d < bd || (d == bd && m < bm),
            };
            if better {
                self.best = Some((d, m, s, p));
            }
        }
        self
    }
}

/// Bitmask kernel for rings with at most 64 elements.
struct MaskKernel {
    add: Vec<u8>,
    mul: Vec<u8>,
    q: usize,
    // (coset mask, index^{−δ2}) for audited cosets
    cosets: Vec<(u64, f64)>,
}

impl MaskKernel {
    fn new(ring: &FiniteQuotientRing, family: &[AuditSubgroup], params: &SweepParams) -> Self {
        let q = ring.order();
        let mut add = vec![0u8; q * q];
        let mut mul = vec![0u8; q * q];
        for x in ring.elements() {
            for y in ring.elements() {
                add[x as usize * q + y as usize] = ring.add(x, y) as u8;
                mul[x as usize * q + y as usize] = ring.mul(x, y) as u8;
            }
        }
        let threshold = (q as f64).powf(params.epsilon);
        let mut cosets = Vec::new();
        for s in family.iter().filter(|s| s.index as f64 > threshold) {
            let bound = (s.index as f64).powf(-params.delta2);
            let mut masks = vec![0u64; s.representatives.len()];
            for x in 0..q {
                masks[s.labels[x] as usize] |= 1 << x;
            }
            cosets.extend(masks.into_iter().map(|m| (m, bound)));
        }
        Self { add, mul, q, cosets }
    }

    fn audit(&self, mask: u64, size: usize) -> bool {
        self.cosets.iter().all(|&(m, bound)| {
            let c = (mask & m).count_ones() as f64 / size as f64;
            c <= bound * (1.0 + AUDIT_TOLERANCE)
        })
    }

    fn sum_product(&self, mask: u64) -> (usize, usize) {
        let mut elems = [0usize; 64];
        let mut n = 0;
        let mut m = mask;
        while m != 0 {
            elems[n] = m.trailing_zeros() as usize;
            n += 1;
            m &= m - 1;
        }
        let (mut s, mut p) = (0u64, 0u64);
        for i in 0..n {
            let row = elems[i] * self.q;
            for &y in &elems[i..n] {
                s |= 1 << self.add[row + y];
                p |= 1 << self.mul[row + y];
            }
        }
        (s.count_ones() as usize, p.count_ones() as usize)
    }

    fn visit(&self, mask: u64, size: usize, acc: &mut SweepAcc) {
        acc.examined += 1;
        if !self.audit(mask, size) {
            acc.rejected += 1;
            return;
        }
        let (s, p) = self.sum_product(mask);
        acc.record(mask, s, p, size);
    }
}

/// Calls `f` on every `t`-subset of bit positions `lo..q`.
fn for_each_combination<F: FnMut(u64)>(lo: usize, q: usize, t: usize, mut f: F) {
    let len = q.saturating_sub(lo);
    if t > len {
        return;
    }
    if t == 0 {
        f(0);
        return;
    }
    let limit: u64 = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
    let mut x: u64 = if t == 64 { u64::MAX } else { (1u64 << t) - 1 };
    loop {
        f(x << lo);
        let c = x & x.wrapping_neg();
        let r = x.wrapping_add(c);
        if r == 0 || r > limit {
            break;
        }
        x = (((r ^ x) >> 2) / c) | r;
        if x > limit {
            break;
        }
    }
}

fn exhaustive(kernel: &MaskKernel, lo: usize, hi: usize) -> SweepAcc {
    let q = kernel.q;
    let mut tasks: Vec<(usize, Vec<usize>)> = Vec::new();
    for s in lo..=hi {
        match s {
            0 => {}
            1 => tasks.extend((0..q).map(|a| (1, vec![a]))),
            _ => {
                for a in 0..q {
                    for b in a + 1..q {
                        tasks.push((s, vec![a, b]));
                    }
                }
            }
        }
    }
    tasks
        .par_iter()
        .map(|(s, prefix)| {
            let mut acc = SweepAcc::default();
            let base: u64 = prefix.iter().map(|&i| 1u64 << i).sum();
            let last = *prefix.last().unwrap();
            for_each_combination(last + 1, q, s - prefix.len(), |rest| kernel.visit(base | rest, *s, &mut acc));
            acc
        })
        .reduce(SweepAcc::default, SweepAcc::merge)
}

/// Minimum of δ₃ over sets in the density window that pass the set audit.
pub fn sumproduct_sweep(ring: &FiniteQuotientRing, params: SweepParams, sampler: Sampler) -> Result<SweepReport> {
    let q = ring.order();
    let (lo, hi) = density_window(q, params.delta1).ok_or(LabError::NoAdmissibleSets)?;
    let family = congruential_family(ring)?;
    let acc = match sampler {
        Sampler::Exhaustive => {
            if q > 64 {
                return Err(LabError::CapacityExceeded {
                    what: "exhaustive sweep".into(),
                    size: q as u128,
                    cap: 64,
                });
            }
            exhaustive(&MaskKernel::new(ring, &family, &params), lo, hi)
        }
        Sampler::Random { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = SweepAcc::default();
            let mut best_set: Option<Vec<Elem>> = None;
            for _ in 0..samples {
                let s = rng.gen_range(lo..=hi);
                let elems: Vec<Elem> = sample(&mut rng, q, s).into_iter().map(|x| x as Elem).collect();
                let a = ElementSet::from_elems(ring, elems);
                acc.examined += 1;
                if !set_audit(ring, &family, &a, params.epsilon, params.delta2)?.passed {
                    acc.rejected += 1;
                    continue;
                }
                let (sum, product) = (sum_set(ring, &a, &a)?.len(), product_set(ring, &a, &a)?.len());
                let idx = acc.admissible;
                acc.record(idx, sum, product, s);
                if acc.best.map(|b| b.1) == Some(idx) {
                    best_set = Some(a.to_vec());
                }
            }
            return Ok(finish(q, params, sampler, (lo, hi), acc, |_| best_set.clone().unwrap_or_default()));
        }
    };
    Ok(finish(q, params, sampler, (lo, hi), acc, |mask| {
        (0..64).filter(|i| mask >> i & 1 == 1).map(|i| i as Elem).collect()
    }))
}

fn finish<F: Fn(u64) -> Vec<Elem>>(
    q: usize,
    params: SweepParams,
    sampler: Sampler,
    window: (usize, usize),
    acc: SweepAcc,
    elems: F,
) -> SweepReport {
    let witness = acc.best.map(|(d, m, s, p)| SweepWitness {
        elements: elems(m),
        sum_size: s,
        product_size: p,
        delta3: d,
    });
    SweepReport {
        q,
        params,
        sampler,
        window,
        examined: acc.examined,
        admissible: acc.admissible,
        rejected_by_audit: acc.rejected,
        min_delta3: witness.as_ref().map(|w| w.delta3),
        all_positive: witness.as_ref().map_or(true, |w| w.delta3 > 0.0),
        witness,
        histogram: acc.histogram,
    }
}

/// Ideal `∏ 𝒫_i^{l_i}` of `O/𝔞` as an element set.
pub fn ideal_set(ring: &FiniteQuotientRing, l: &[u32]) -> ElementSet {
    ElementSet::from_elems(
        ring,
        ring.elements()
            .filter(|&x| l.iter().enumerate().all(|(i, &li)| ring.valuation_at(i, x) >= li)),
    )
}

fn exponent_vectors(bounds: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &b in bounds {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=b).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    out
}

fn exponents(ring: &FiniteQuotientRing) -> Vec<u32> {
    ring.modulus().factors.iter().map(|f| f.1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealCover {
    /// Exponents of `𝓛₂ ⊇ 𝓛₁`.
    pub outer: Vec<u32>,
    pub inner: Vec<u32>,
    pub size: usize,
}

/// Largest quotient `𝓛₂/𝓛₁` of ideals with `𝓛₂ ⊆ T + 𝓛₁`.
pub fn best_ideal_cover(ring: &FiniteQuotientRing, t: &ElementSet) -> IdealCover {
    let ns = exponents(ring);
    let vecs = exponent_vectors(&ns);
    let ideals: Vec<ElementSet> = vecs.iter().map(|l| ideal_set(ring, l)).collect();
    let mut best = IdealCover {
        outer: ns.clone(),
        inner: ns.clone(),
        size: 1,
    };
    for (i2, l2) in vecs.iter().enumerate() {
        for (i1, l1) in vecs.iter().enumerate() {
            if !l1.iter().zip(l2).all(|(a, b)| a >= b) || i1 == i2 {
                continue;
            }
            let size = ideals[i2].len() / ideals[i1].len();
            if size <= best.size {
                continue;
            }
            let part = crate::group::cosets(ring, &ideals[i1]);
            let mut hit = ElementSet::empty(ring);
            let mut count = 0;
            for x in t.iter().filter(|&x| ideals[i2].contains(x)) {
                if hit.insert(part.labels[x as usize]) {
                    count += 1;
                }
            }
            if count == size {
                best = IdealCover {
                    outer: l2.clone(),
                    inner: l1.clone(),
                    size,
                };
            }
        }
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationReport {
    pub q: usize,
    pub tau: f64,
    pub caps: (u32, u32),
    /// Lexicographically least `(r1, r2)` whose set covers a quotient of
    /// size at least `q^τ`.
    pub found: Option<(u32, u32)>,
    pub cover: IdealCover,
    pub verified: bool,
}

/// Checks `𝓛₂ ⊆ T + 𝓛₁` element by element.
pub fn verify_cover(ring: &FiniteQuotientRing, t: &ElementSet, cover: &IdealCover) -> bool {
    let outer = ideal_set(ring, &cover.outer);
    let inner = ideal_set(ring, &cover.inner);
    let ok = outer.iter().all(|x| t.iter().any(|y| inner.contains(ring.sub(x, y))));
    ok
}

/// Searches `(r1, r2)` in lexicographic order for
/// `Σ_{r2} A^{r1} − Σ_{r2} A^{r1} ⊇ 𝓛₂/𝓛₁` with `|𝓛₂/𝓛₁| ≥ q^τ`.
pub fn bounded_generation_search(
    ring: &FiniteQuotientRing,
    a: &ElementSet,
    caps: (u32, u32),
    tau: f64,
) -> Result<GenerationReport> {
    a.check_ring(ring)?;
    let target = (ring.order() as f64).powf(tau) * (1.0 - 1e-12);
    let mut best: Option<(IdealCover, ElementSet)> = None;
    for r1 in 1..=caps.0 {
        let p = product_power(ring, a, r1)?;
        let mut s = p.clone();
        for r2 in 1..=caps.1 {
            if r2 > 1 {
                s = sum_set(ring, &s, &p)?;
            }
            let t = difference_set(ring, &s, &s)?;
            let cover = best_ideal_cover(ring, &t);
            if cover.size as f64 >= target {
                let verified = verify_cover(ring, &t, &cover);
                return Ok(GenerationReport {
                    q: ring.order(),
                    tau,
                    caps,
                    found: Some((r1, r2)),
                    cover,
                    verified,
                });
            }
            if best.as_ref().map_or(true, |b| cover.size > b.0.size) {
                best = Some((cover, t));
            }
        }
    }
    let (cover, t) = best.expect("caps are positive");
    Ok(GenerationReport {
        q: ring.order(),
        tau,
        caps,
        found: None,
        verified: verify_cover(ring, &t, &cover),
        cover,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Cor2346Report {
    pub exponents: Vec<u32>,
    pub index: usize,
    pub index_bound: f64,
    pub verified: bool,
}

/// Finds `∏𝒫^{l_i}` with `|O/∏𝒫^{l_i}| < q^{6γ/5}` and
/// `∏𝒫^{2l_i} ⊆ Σ₂₄A² − Σ₂₄A²`, preferring the smallest index.
pub fn verify_cor_2346(ring: &FiniteQuotientRing, a: &ElementSet, gamma: f64) -> Result<Cor2346Report> {
    a.check_ring(ring)?;
    if !(gamma > 0.0 && gamma < 0.1) {
        return invalid(format!("gamma must lie in (0, 1/10), got {gamma}"));
    }
    let q = ring.order() as f64;
    let bound = q.powf(1.0 - gamma);
    if a.len() as f64 <= bound {
        return Err(LabError::DensityTooLow { size: a.len(), bound });
    }
    let t = iterated_sum_product(ring, a, 24, 2)?;
    let ns = exponents(ring);
    let index_bound = q.powf(1.2 * gamma);
    let mut candidates: Vec<(usize, Vec<u32>)> = exponent_vectors(&ns)
        .into_iter()
        .map(|l| (ring.order() / ideal_set(ring, &l).len(), l))
        .filter(|(idx, _)| (*idx as f64) < index_bound)
        .collect();
    candidates.sort();
    for (index, l) in &candidates {
        let doubled: Vec<u32> = l.iter().zip(&ns).map(|(&x, &n)| (2 * x).min(n)).collect();
        if ideal_set(ring, &doubled).is_subset(&t) {
            return Ok(Cor2346Report {
                exponents: l.clone(),
                index: *index,
                index_bound,
                verified: true,
            });
        }
    }
    let (index, l) = candidates.into_iter().next().unwrap_or((1, vec![0; ns.len()]));
    Ok(Cor2346Report {
        exponents: l,
        index,
        index_bound,
        verified: false,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterBound {
    pub z: Elem,
    pub q_z: u64,
    pub magnitude: f64,
    pub bound: f64,
    /// `|ν̂(χ_z)| − bound`; negative when the bound holds.
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma0715Report {
    pub k: usize,
    pub gamma1: f64,
    pub gamma2: f64,
    pub bounds: Vec<CharacterBound>,
    pub all_bounds_hold: bool,
    pub max_margin: f64,
    pub coverage_expected: bool,
    pub covered: bool,
}

/// Largest fiber of `set` over `O/∏𝒫^{m}` for every nonzero `m ≤ n`, with
/// the quotient size.
fn fiber_maxima(ring: &FiniteQuotientRing, set: &ElementSet) -> Result<Vec<(Vec<u32>, usize, usize)>> {
    let ns = exponents(ring);
    let mut out = Vec::new();
    for m in exponent_vectors(&ns) {
        if m.iter().all(|&x| x == 0) {
            continue;
        }
        let target = ring.quotient(&m)?;
        let proj = ring.projection_to(&target)?;
        let mut counts = vec![0usize; target.order()];
        for x in set.iter() {
            counts[proj[x as usize] as usize] += 1;
        }
        out.push((m, target.order(), counts.into_iter().max().unwrap_or(0)));
    }
    Ok(out)
}

/// Largest `γ` for which every fiber bound `max fiber < |quotient|^{−γ}|S|`
/// holds, minus `slack`.
pub fn fiber_exponent(ring: &FiniteQuotientRing, set: &ElementSet, slack: f64) -> Result<f64> {
    let n = set.len() as f64;
    Ok(fiber_maxima(ring, set)?
        .into_iter()
        .map(|(_, size, max)| (n / max as f64).ln() / (size as f64).ln())
        .fold(f64::INFINITY, f64::min)
        - slack)
}

fn check_fibers(ring: &FiniteQuotientRing, set: &ElementSet, gamma: f64, name: &str) -> Result<()> {
    for (m, size, max) in fiber_maxima(ring, set)? {
        if max as f64 >= (size as f64).powf(-gamma) * set.len() as f64 {
            return Err(LabError::HypothesisViolated(format!(
                "{name}: fiber of size {max} over the quotient of size {size} (exponents {m:?}) is not below {size}^-{gamma} * {}",
                set.len()
            )));
        }
    }
    Ok(())
}

/// Character-sum bound for the image of `∏ A_j × B_j` under
/// `(x_j, y_j) ↦ Σ x_j y_j`.
pub fn lemma_0715_check(
    ring: &FiniteQuotientRing,
    a: &[ElementSet],
    b: &[ElementSet],
    gamma1: f64,
    gamma2: f64,
) -> Result<Lemma0715Report> {
    let k = a.len();
    if k == 0 || b.len() != k {
        return invalid("need k ≥ 1 pairs (A_j, B_j)");
    }
    let excess = gamma1 + gamma2 - 1.0;
    if !(gamma1 > 0.0 && gamma2 > 0.0 && excess > 0.0) {
        return invalid("need γ1, γ2 > 0 and γ1 + γ2 > 1");
    }
    if k as f64 <= 4.0 / excess {
        return invalid(format!("need k > 4/(γ1+γ2−1) = {:.4}", 4.0 / excess));
    }
    for (j, (aj, bj)) in a.iter().zip(b).enumerate() {
        aj.check_ring(ring)?;
        bj.check_ring(ring)?;
        if aj.is_empty() || bj.is_empty() {
            return invalid("empty set");
        }
        check_fibers(ring, aj, gamma1, &format!("A_{}", j + 1))?;
        check_fibers(ring, bj, gamma2, &format!("B_{}", j + 1))?;
    }
    let table = CharacterTable::new(ring);
    let chi = *table
        .primitive_characters()
        .first()
        .ok_or_else(|| LabError::Invalid("ring has no primitive character".into()))?;
    let factors = &ring.modulus().factors;
    let pairs: Vec<(Vec<Elem>, Vec<Elem>)> = a.iter().zip(b).map(|(x, y)| (x.to_vec(), y.to_vec())).collect();
    let bounds: Vec<CharacterBound> = ring
        .elements()
        .filter(|&z| z != 0)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&z| {
            let q_z: u64 = factors
                .iter()
                .enumerate()
                .map(|(i, (pr, n))| pr.residue_size().pow(n - ring.valuation_at(i, z)))
                .product();
            let mut value = num_complex::Complex64::new(1.0, 0.0);
            for (av, bv) in &pairs {
                let mut s = num_complex::Complex64::new(0.0, 0.0);
                for &x in av {
                    let zx = ring.mul(z, x);
                    for &y in bv {
                        s += table.eval(chi, ring.mul(zx, y));
                    }
                }
                value *= s / (av.len() * bv.len()) as f64;
            }
            let magnitude = value.norm();
            let bound = (q_z as f64).powf(-(k as f64) * excess / 2.0);
            CharacterBound {
                z,
                q_z,
                magnitude,
                bound,
                margin: magnitude - bound,
            }
        })
        .collect();
    let mut covered_set = ElementSet::from_elems(ring, [0]);
    for (x, y) in a.iter().zip(b) {
        covered_set = sum_set(ring, &covered_set, &product_set(ring, x, y)?)?;
    }
    let max_margin = bounds.iter().map(|c| c.margin).fold(f64::NEG_INFINITY, f64::max);
    Ok(Lemma0715Report {
        k,
        gamma1,
        gamma2,
        all_bounds_hold: bounds.iter().all(|c| c.margin < 0.0),
        max_margin,
        bounds,
        coverage_expected: k as f64 * excess >= 4.0,
        covered: covered_set.len() == ring.order(),
    })
}

/// `A_v = {x ∈ A : 𝔭^v ‖ x}` for `v = 0..=n` (`A_n = A ∩ {0}`).
pub fn valuation_strata(ring: &FiniteQuotientRing, a: &ElementSet) -> Result<Vec<ElementSet>> {
    let n = ring.local_exponent()?;
    a.check_ring(ring)?;
    let mut out = vec![ElementSet::empty(ring); n as usize + 1];
    for x in a.iter() {
        out[ring.valuation_at(0, x) as usize].insert(x);
    }
    Ok(out)
}

#[derive(Debug)]
pub struct InvertibleReduction {
    pub stratum: u32,
    pub stratum_size: usize,
    pub ring: FiniteQuotientRing,
    /// `A_i / 𝔭^i` inside `O/𝒫^{n−i}` (units there).
    pub reduced: ElementSet,
}

/// Picks the largest stratum `A_i`, `i < n` (smallest `i` on ties), and
/// divides it by `𝔭^i`. `None` when `A ⊆ {0}`.
pub fn invertible_reduction(ring: &FiniteQuotientRing, a: &ElementSet) -> Result<Option<InvertibleReduction>> {
    let strata = valuation_strata(ring, a)?;
    let n = strata.len() - 1;
    let Some(i) = (0..n).filter(|&i| !strata[i].is_empty()).max_by_key(|&i| (strata[i].len(), std::cmp::Reverse(i)))
    else {
        return Ok(None);
    };
    let target = ring.local_quotient((n - i) as u32)?;
    let proj = ring.projection_to(&target)?;
    let pi_i = ring.pow(ring.uniformizer()?, i as u64);
    let mut quotient_of = vec![Elem::MAX; ring.order()];
    for y in ring.elements() {
        let x = ring.mul(pi_i, y) as usize;
        if quotient_of[x] == Elem::MAX {
            quotient_of[x] = proj[y as usize];
        }
    }
    let reduced = ElementSet::from_elems(&target, strata[i].iter().map(|x| quotient_of[x as usize]));
    Ok(Some(InvertibleReduction {
        stratum: i as u32,
        stratum_size: strata[i].len(),
        ring: target,
        reduced,
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimalCoset {
    pub coset: AffineCoset,
    pub count: usize,
    pub bound: f64,
    /// No strictly smaller family coset satisfies the bound.
    pub minimal: bool,
    /// Whether the coset itself satisfies the bound (false only for the
    /// full-ring fallback).
    pub satisfies: bool,
}

/// An inclusion-minimal coset `a + bR` with `|A ∩ (a+bR)| > [ring:bR]^{−θ}|A|`;
/// falls back to the full ring when none exists.
pub fn minimal_coset_search(ring: &FiniteQuotientRing, a: &ElementSet, theta: f64) -> Result<MinimalCoset> {
    a.check_ring(ring)?;
    let family = congruential_family(ring)?;
    let n = a.len() as f64;
    let mut hits: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (si, s) in family.iter().enumerate() {
        let mut counts = vec![0usize; s.representatives.len()];
        for x in a.iter() {
            counts[s.labels[x as usize] as usize] += 1;
        }
        let bound = (s.index as f64).powf(-theta) * n;
        for (k, &c) in counts.iter().enumerate() {
            if c as f64 > bound {
                hits.push((si, k, c, bound));
            }
        }
    }
    let size = |h: &(usize, usize, usize, f64)| family[h.0].subgroup.len();
    let chosen = hits
        .iter()
        .min_by_key(|h| (size(h), family[h.0].b, family[h.0].representatives[h.1]))
        .cloned();
    let Some((si, k, count, bound)) = chosen else {
        return Ok(MinimalCoset {
            coset: AffineCoset {
                a: 0,
                b: ring.one(),
                ring_label: "full".into(),
                index: 1,
            },
            count: a.len(),
            bound: n,
            minimal: true,
            satisfies: false,
        });
    };
    let s = &family[si];
    let rep = s.representatives[k];
    let members = crate::audit::coset_elements(ring, s, rep);
    let minimal = !hits.iter().any(|h| {
        let t = &family[h.0];
        let m = crate::audit::coset_elements(ring, t, t.representatives[h.1]);
        m.len() < members.len() && m.is_subset(&members)
    });
    Ok(MinimalCoset {
        coset: AffineCoset {
            a: rep,
            b: s.b,
            ring_label: s.ring_label.clone(),
            index: s.index,
        },
        count,
        bound,
        minimal,
        satisfies: true,
    })
}
