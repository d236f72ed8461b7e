//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ringlab::audit::{congruential_family, set_audit};
use ringlab::expansion::{
    bounded_generation_search, fiber_exponent, lemma_0715_check, product_set, sum_set, sumproduct_sweep,
    verify_cor_2346, Sampler, SweepParams,
};
use ringlab::fourier::{decay_scan, CharacterTable};
use ringlab::glueing::{component_families, entropy_ledger, reaudit, screen_decompose, CompositeModulus, Density, GlueParams};
use ringlab::identities::{fourier_identities, polyiden_decomposition_check, polyiden_holds};
use ringlab::ideal::{factor_rational_prime, IdealDescriptor};
use ringlab::measure::Measure;
use ringlab::subring::{enumerate_subrings, goursat_split};
use ringlab::{ElementSet, Elem, FiniteQuotientRing, NumberFieldSpec};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian_composite_3_5() -> FiniteQuotientRing {
    let g = NumberFieldSpec::gaussian();
    let p3 = factor_rational_prime(&g, 3).unwrap().remove(0);
    let p5 = factor_rational_prime(&g, 5).unwrap().remove(0);
    FiniteQuotientRing::build(&g, &IdealDescriptor::new(vec![(p3, 1), (p5, 1)]).unwrap()).unwrap()
}

fn ring_list() -> Vec<(&'static str, FiniteQuotientRing)> {
    let g = NumberFieldSpec::gaussian();
    vec![
        ("Z/8", FiniteQuotientRing::integers_mod(8).unwrap()),
        ("Z/9", FiniteQuotientRing::integers_mod(9).unwrap()),
        ("Z/25", FiniteQuotientRing::integers_mod(25).unwrap()),
        ("Z[i]/P3", FiniteQuotientRing::prime_power(&g, 3, 0, 1).unwrap()),
        ("Z[i]/P3^2", FiniteQuotientRing::prime_power(&g, 3, 0, 2).unwrap()),
        ("Z[i]/(1+i)^4", FiniteQuotientRing::prime_power(&g, 2, 0, 4).unwrap()),
        ("Z[i]/(P3 P5)", gaussian_composite_3_5()),
    ]
}

fn random_subset<R: Rng>(ring: &FiniteQuotientRing, rng: &mut R, size: usize) -> ElementSet {
    let mut all: Vec<Elem> = ring.elements().collect();
    all.shuffle(rng);
    ElementSet::from_elems(ring, all.into_iter().take(size))
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut tuples = 0;
    for k in 1..=6 {
        for _ in 0..50 {
            let xs: Vec<BigInt> = (0..k).map(|_| BigInt::from(rng.gen_range(-1000i64..=1000))).collect();
            if !polyiden_holds(&xs) {
                return Err(format!("integer identity fails at {xs:?}"));
            }
            tuples += 1;
        }
    }
    let mut checks = 0;
    for q in [5, 7] {
        let ring = FiniteQuotientRing::integers_mod(q).unwrap();
        for k in 1..=3 {
            for _ in 0..20 {
                let ms: Vec<Measure> = (0..k).map(|_| Measure::random_exact(&ring, &mut rng, 12)).collect();
                if !polyiden_decomposition_check(&ring, &ms).unwrap() {
                    return Err(format!("measure decomposition fails on Z/{q}, k = {k}"));
                }
                checks += 1;
            }
        }
    }
    Ok(format!("{tuples} integer tuples, {checks} measure decompositions exact"))
}

fn fourier_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for (name, ring) in ring_list() {
        let table = CharacterTable::new(&ring);
        for i in 0..100 {
            let (mu, nu) = if i % 2 == 0 {
                (Measure::random_exact(&ring, &mut rng, 20), Measure::random_exact(&ring, &mut rng, 20))
            } else {
                (Measure::random_float(&ring, &mut rng), Measure::random_float(&ring, &mut rng))
            };
            let r = fourier_identities(&ring, &table, &mu, &nu).unwrap();
            worst = worst.max(r.homomorphism).max(r.parseval).max(r.phi_inversion).max(r.twist);
            if !r.holds(1e-9) {
                return Err(format!("{name}: {r:?}"));
            }
        }
    }
    Ok(format!("7 rings x 100 measures, worst deviation {worst:.2e}"))
}

fn primitivity_orbits() -> Outcome {
    let mut characters = 0;
    for (name, ring) in ring_list() {
        let table = CharacterTable::new(&ring);
        for c in ring.elements() {
            let full = table.orbit(&ring, c).len() == ring.order();
            if full != table.is_primitive(c) {
                return Err(format!("{name}: character {c} primitive = {}, full orbit = {full}", table.is_primitive(c)));
            }
            characters += 1;
        }
    }
    Ok(format!("{characters} characters checked"))
}

fn intro_counterexample() -> Outcome {
    let ring = FiniteQuotientRing::integers_mod(81).unwrap();
    let a = ElementSet::from_elems(&ring, [9, 18, 27]);
    let sum = sum_set(&ring, &a, &a).unwrap().len();
    let prod = product_set(&ring, &a, &a).unwrap().len();
    let audit = set_audit(&ring, &congruential_family(&ring).unwrap(), &a, 0.1, 0.5).unwrap();
    let w = audit.worst.clone().unwrap();
    let ok = sum == 5 && prod == 1 && !audit.passed && w.a == 0 && w.b == 9 && w.index == 9;
    check(ok, format!("|A+A| = {sum}, |A.A| = {prod}, worst coset {}+{}R index {} mass {}", w.a, w.b, w.index, audit.worst_mass))
}

fn corollary_covering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = NumberFieldSpec::gaussian();
    let rings = vec![
        ("Z/11", FiniteQuotientRing::integers_mod(11).unwrap()),
        ("Z/13", FiniteQuotientRing::integers_mod(13).unwrap()),
        ("Z[i]/P3", FiniteQuotientRing::prime_power(&g, 3, 0, 1).unwrap()),
    ];
    let gamma = 0.0999;
    let mut total = 0;
    for (name, ring) in rings {
        let q = ring.order();
        let min = (q as f64).powf(0.92).ceil() as usize;
        for _ in 0..200 {
            let size = rng.gen_range(min..=q);
            let a = random_subset(&ring, &mut rng, size);
            let r = verify_cor_2346(&ring, &a, gamma).map_err(|e| format!("{name}: {e}"))?;
            if !r.verified || r.index as f64 >= r.index_bound {
                return Err(format!("{name}: {:?} fails for {:?}", r, a.to_vec()));
            }
            total += 1;
        }
    }
    Ok(format!("{total} sampled sets covered"))
}

fn lemma_character_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rings: Vec<FiniteQuotientRing> = [5, 7, 9].iter().map(|&q| FiniteQuotientRing::integers_mod(q).unwrap()).collect();
    let (mut instances, mut attempts, mut coverage_checked) = (0, 0, 0);
    let mut worst = f64::NEG_INFINITY;
    while instances < 100 {
        attempts += 1;
        if attempts > 100_000 {
            return Err(format!("only {instances} admissible instances generated"));
        }
        let ring = &rings[instances % 3];
        let q = ring.order();
        let k = rng.gen_range(5..=12);
        let mut draw = || {
            let size = rng.gen_range(q - 2..=q);
            random_subset(ring, &mut rng, size)
        };
        let a: Vec<ElementSet> = (0..k).map(|_| draw()).collect();
        let b: Vec<ElementSet> = (0..k).map(|_| draw()).collect();
        let exp = |s: &[ElementSet]| s.iter().map(|x| fiber_exponent(ring, x, 1e-9).unwrap()).fold(f64::INFINITY, f64::min);
        let (g1, g2) = (exp(&a), exp(&b));
        let excess = g1 + g2 - 1.0;
        if excess <= 0.0 || k as f64 <= 4.0 / excess {
            continue;
        }
        let r = lemma_0715_check(ring, &a, &b, g1, g2).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_margin);
        if !r.all_bounds_hold {
            return Err(format!("Z/{q}, k = {k}: margin {} is not negative", r.max_margin));
        }
        if r.coverage_expected {
            coverage_checked += 1;
            if !r.covered {
                return Err(format!("Z/{q}, k = {k}: coverage fails"));
            }
        }
        instances += 1;
    }
    Ok(format!("{instances} instances, worst margin {worst:.4}, coverage checked on {coverage_checked}"))
}

fn sumproduct_positivity() -> Outcome {
    let params = SweepParams {
        delta1: 0.25,
        delta2: 0.3,
        epsilon: 0.1,
    };
    let mut parts = Vec::new();
    for q in [9, 25] {
        let ring = FiniteQuotientRing::integers_mod(q).unwrap();
        let r = sumproduct_sweep(&ring, params, Sampler::Exhaustive).map_err(|e| e.to_string())?;
        parts.push(format!(
            "Z/{q}: window {:?}, {} admissible, min delta3 {:.4}",
            r.window,
            r.admissible,
            r.min_delta3.unwrap_or(f64::NAN)
        ));
        if !r.all_positive {
            return Err(format!("Z/{q}: witness {:?}", r.witness));
        }
    }
    Ok(parts.join("; "))
}

fn decay_exactness() -> Outcome {
    let mut parts = Vec::new();
    for q in [9, 27] {
        let ring = FiniteQuotientRing::integers_mod(q).unwrap();
        let table = CharacterTable::new(&ring);
        let mu = Measure::uniform_on(&ring, &ring.units()).unwrap();
        let s = decay_scan(&ring, &table, &[mu]).unwrap();
        if s.max_primitive > 1e-12 {
            return Err(format!("Z/{q} units: max primitive {}", s.max_primitive));
        }
        parts.push(format!("Z/{q} units max {:.1e}", s.max_primitive));
    }
    for (name, ring) in ring_list() {
        let table = CharacterTable::new(&ring);
        let one = Measure::dirac(&ring, ring.one());
        let s = decay_scan(&ring, &table, &[one.clone(), one]).unwrap();
        if s.tau != Some(0.0) && s.tau.map_or(true, |t| t.abs() > 1e-12) {
            return Err(format!("{name}: dirac tau {:?}", s.tau));
        }
    }
    parts.push("dirac tau = 0 on all rings".into());
    Ok(parts.join(", "))
}

fn random_density<R: Rng>(q: usize, rng: &mut R) -> Density {
    let raw: Vec<i64> = (0..q).map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(1..=20) }).collect();
    let total: i64 = raw.iter().sum::<i64>().max(1);
    Density::Exact(
        raw.into_iter()
            .map(|w| BigRational::new(BigInt::from(w * q as i64), BigInt::from(total)))
            .collect(),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut v = p.clone();
            v.insert(i, n - 1);
            out.push(v);
        }
    }
    out
}

fn glueing_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // at n = 2 the dyadic levels need ρ₂ ≥ 1/2 to include level 1
    let rings = vec![
        (FiniteQuotientRing::integers_mod(105).unwrap(), 0.25),
        (FiniteQuotientRing::integers_mod(1155).unwrap(), 0.25),
        (gaussian_composite_3_5(), 0.25),
        (FiniteQuotientRing::integers_mod(225).unwrap(), 0.99),
    ];
    let (mut screens, mut densities) = (0, 0);
    for (ring, rho2) in rings {
        let cm = CompositeModulus::new(ring, None).map_err(|e| e.to_string())?;
        let uniform = Measure::uniform(&cm.ring);
        for rho3 in [0.05, 0.5, 0.95] {
            let params = GlueParams {
                rho2,
                rho3,
                ..GlueParams::default()
            };
            for order in permutations(cm.len()) {
                for s in 0..order.len() {
                    let (prefix, j) = (&order[..s], order[s]);
                    let fams = component_families(cm.component(j), params.rho2).unwrap();
                    let du = screen_decompose(&cm, &uniform, prefix, j, &fams, &params).unwrap();
                    let r = reaudit(&cm, &uniform, &du, &fams, &params);
                    if !du.junk.is_empty() || !r.partition_ok || r.screening_violations > 0 {
                        return Err(format!("uniform junk on q = {}, prefix {prefix:?}, j = {j}", cm.ring.order()));
                    }
                    let a = rng.gen_range(0..cm.ring.order()) as Elem;
                    let dirac = Measure::dirac(&cm.ring, a);
                    let dd = screen_decompose(&cm, &dirac, prefix, j, &fams, &params).unwrap();
                    if !dd.good.is_empty() || !reaudit(&cm, &dirac, &dd, &fams, &params).partition_ok {
                        return Err(format!("dirac good set nonempty on q = {}, prefix {prefix:?}, j = {j}", cm.ring.order()));
                    }
                    screens += 2;
                }
            }
        }
        for order in permutations(cm.len()) {
            for _ in 0..100 {
                let f = random_density(cm.ring.order(), &mut rng);
                let l = entropy_ledger(&cm, &f, &order, &GlueParams::default()).unwrap();
                if !l.chain_holds {
                    return Err(format!("entropy chain fails on q = {}, order {order:?}", cm.ring.order()));
                }
                densities += 1;
            }
        }
    }
    Ok(format!("{screens} screenings, {densities} exact densities"))
}

fn goursat() -> Outcome {
    let g = NumberFieldSpec::gaussian();
    let p3 = factor_rational_prime(&g, 3).unwrap().remove(0);
    let p5 = factor_rational_prime(&g, 5).unwrap().remove(0);
    let wider = FiniteQuotientRing::build(&g, &IdealDescriptor::new(vec![(p3, 2), (p5, 1)]).unwrap()).unwrap();
    let mut parts = Vec::new();
    for (name, ring) in [("Z[i]/(P3 P5)", gaussian_composite_3_5()), ("Z[i]/(P3^2 P5)", wider)] {
        let crt = ring.crt_decompose().unwrap();
        let subs = enumerate_subrings(&ring).map_err(|e| e.to_string())?;
        for s in &subs {
            let (_, is_product) = goursat_split(&ring, &crt, s);
            if !is_product {
                return Err(format!("{name}: subring of size {} is not a product", s.len()));
            }
        }
        parts.push(format!("{name}: {} unital subrings", subs.len()));
    }
    Ok(format!("{}, all products of projections", parts.join(", ")))
}

/// Lexicographically least `(r1, r2)` with `Σ_{r2}A^{r1} − Σ_{r2}A^{r1}`
/// the whole ring, by plain hash-set closure.
fn closure_oracle(q: u64, a: &[u64], caps: (u32, u32)) -> Option<(u32, u32)> {
    let mut power: HashSet<u64> = a.iter().copied().collect();
    for r1 in 1..=caps.0 {
        if r1 > 1 {
            power = power.iter().flat_map(|&x| a.iter().map(move |&y| x * y % q)).collect();
        }
        let mut sums = power.clone();
        for r2 in 1..=caps.1 {
            if r2 > 1 {
                sums = sums.iter().flat_map(|&x| power.iter().map(move |&y| (x + y) % q)).collect();
            }
            let diff: HashSet<u64> = sums.iter().flat_map(|&x| sums.iter().map(move |&y| (x + q - y) % q)).collect();
            if diff.len() as u64 == q {
                return Some((r1, r2));
            }
        }
    }
    None
}

fn bounded_generation() -> Outcome {
    let ring = FiniteQuotientRing::integers_mod(11).unwrap();
    let caps = (4, 6);
    let mut sets = 0;
    for mask in 0u32..(1 << 11) {
        if mask.count_ones() < 4 || mask & !1 == 0 {
            continue;
        }
        let elems: Vec<u64> = (0..11).filter(|i| mask >> i & 1 == 1).collect();
        let a = ElementSet::from_elems(&ring, elems.iter().map(|&x| x as Elem));
        let r = bounded_generation_search(&ring, &a, caps, 1.0).unwrap();
        let oracle = closure_oracle(11, &elems, caps);
        if r.found.is_none() || r.found != oracle || !r.verified || r.cover.size != 11 {
            return Err(format!("A = {elems:?}: search {:?}, oracle {oracle:?}", r.found));
        }
        sets += 1;
    }
    Ok(format!("{sets} sets, minima match the closure oracle"))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, fn() -> Outcome, Duration)> = vec![
        ("exact identity suite", identities, Duration::from_secs(10)),
        ("Fourier suite", fourier_suite, Duration::from_secs(120)),
        ("primitivity and full orbits", primitivity_orbits, Duration::MAX),
        ("intro counterexample", intro_counterexample, Duration::MAX),
        ("covering corollary brute force", corollary_covering, Duration::from_secs(300)),
        ("character-sum lemma", lemma_character_bound, Duration::MAX),
        ("sum-product positivity", sumproduct_positivity, Duration::from_secs(600)),
        ("decay exactness", decay_exactness, Duration::MAX),
        ("glueing invariants", glueing_invariants, Duration::MAX),
        ("Goursat decomposition", goursat, Duration::MAX),
        ("bounded generation", bounded_generation, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > budget => Err(format!("{d}; over the {budget:?} budget")),
            o => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += outcome.is_err() as usize;
        println!("criterion {:>2} {tag} [{name}] {detail} ({:.2}s)", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
