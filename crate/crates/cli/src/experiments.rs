use std::path::Path;

use anyhow::{bail, Result};
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use ringlab::audit::{congruential_family, congruential_rings};
use ringlab::expansion::{bounded_generation_search, sumproduct_sweep, verify_cor_2346, Sampler, SweepParams};
use ringlab::fourier::{alternatives_probe, decay_scan, CharacterTable};
use ringlab::glueing::{
    build_psi_measure, component_families, entropy_ledger, reaudit, screen_decompose, select_components,
    CompositeModulus, GlueParams, PSI_CAPACITY,
};
use ringlab::identities::{fourier_identities, polyiden_decomposition_check, polyiden_holds};
use ringlab::ideal::{factor_rational_prime, IdealDescriptor};
use ringlab::measure::Measure;
use ringlab::{ElementSet, FiniteQuotientRing, NumberFieldSpec};

use crate::config::{resolve_set, ElemSpec, MeasureSpec};

/// Census of congruential subrings is skipped above this order.
const CENSUS_LIMIT: usize = 10_000;

pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Value,
    pub passed: bool,
    pub message: String,
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn inspect(ring: &FiniteQuotientRing) -> Result<Report> {
    let summary = ring.summary();
    let subfields = ring.field().enumerate_subfields()?;
    let mut rows = Vec::new();
    for (i, (pr, n)) in ring.modulus().factors.iter().enumerate() {
        rows.push(vec![
            i.to_string(),
            pr.p.to_string(),
            join(&pr.g),
            pr.e.to_string(),
            n.to_string(),
            pr.residue_size().to_string(),
            pr.residue_size().pow(*n).to_string(),
        ]);
    }
    let census = if ring.order() <= CENSUS_LIMIT {
        let rings = congruential_rings(ring)?;
        let family = congruential_family(ring)?;
        Some(json!({"congruential_rings": rings.len(), "distinct_subgroups_bR": family.len()}))
    } else {
        None
    };
    let structure = if summary.invariants.len() == 1 { "cyclic" } else { "non-cyclic" };
    let mut message = format!(
        "field {}, q = {}, additive invariants {:?} ({structure}), {} units, subfields [{}]",
        summary.field,
        summary.cardinality,
        summary.invariants,
        summary.units,
        subfields.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join(", ")
    );
    if !summary.local {
        let parts: Vec<String> = rows.iter().map(|r| format!("O/P_{}^{} (size {})", r[1], r[4], r[6])).collect();
        message.push_str(&format!("\nCRT: {}", parts.join(" x ")));
    }
    Ok(Report {
        header: header(&["component", "p", "g", "ramification", "exponent", "residue_size", "size"]),
        rows,
        summary: json!({"ring": summary, "subfields": subfields, "census": census}),
        passed: true,
        message,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SumproductParams {
    delta1: f64,
    delta2: f64,
    epsilon: f64,
    #[serde(default)]
    samples: Option<usize>,
}

pub fn sumproduct(ring: &FiniteQuotientRing, params: toml::Value, seed: u64) -> Result<Report> {
    let p: SumproductParams = params.try_into()?;
    let sampler = match p.samples {
        Some(samples) => Sampler::Random { samples, seed },
        None => Sampler::Exhaustive,
    };
    let params = SweepParams {
        delta1: p.delta1,
        delta2: p.delta2,
        epsilon: p.epsilon,
    };
    let r = sumproduct_sweep(ring, params, sampler)?;
    let rows = r
        .histogram
        .iter()
        .map(|(k, n)| vec![format!("{:.1}", *k as f64 / 10.0), format!("{:.1}", (*k + 1) as f64 / 10.0), n.to_string()])
        .collect();
    let message = match (&r.min_delta3, r.all_positive) {
        (Some(m), true) => format!("{} admissible sets, min delta3 = {m:.6} > 0", r.admissible),
        (_, true) => format!("{} admissible sets", r.admissible),
        (_, false) => format!("non-positive delta3 at {:?}", r.witness),
    };
    Ok(Report {
        header: header(&["delta3_lo", "delta3_hi", "count"]),
        rows,
        passed: r.all_positive,
        summary: serde_json::to_value(&r)?,
        message,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeParams {
    epsilon: f64,
    tau: f64,
    #[serde(default = "one")]
    c: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecayParams {
    measures: Vec<MeasureSpec>,
    max_k: Option<usize>,
    expect_max_below: Option<f64>,
    probe: Option<ProbeParams>,
}

fn build_measures(ring: &FiniteQuotientRing, specs: &[MeasureSpec], rng: &mut ChaCha8Rng, base: &Path) -> Result<Vec<Measure>> {
    if specs.is_empty() {
        bail!("at least one measure is required");
    }
    specs.iter().map(|m| m.build(ring, rng, base)).collect()
}

pub fn decay(ring: &FiniteQuotientRing, params: toml::Value, rng: &mut ChaCha8Rng, base: &Path) -> Result<Report> {
    let p: DecayParams = params.try_into()?;
    let measures = build_measures(ring, &p.measures, rng, base)?;
    let table = CharacterTable::new(ring);
    let max_k = p.max_k.unwrap_or(measures.len());
    if max_k == 0 {
        bail!("max_k must be at least 1");
    }
    let mut rows = Vec::new();
    let mut scans = Vec::new();
    let mut passed = true;
    for k in 1..=max_k {
        let ms: Vec<Measure> = (0..k).map(|i| measures[i % measures.len()].clone()).collect();
        let s = decay_scan(ring, &table, &ms)?;
        if let Some(bound) = p.expect_max_below {
            passed &= s.max_primitive < bound;
        }
        rows.push(vec![
            k.to_string(),
            format!("{:.12e}", s.max_primitive),
            fmt_opt(s.argmax),
            fmt_opt(s.tau.map(|t| format!("{t:.12}"))),
            s.primitive_count.to_string(),
        ]);
        scans.push(s);
    }
    let probe = match &p.probe {
        Some(pp) => Some(alternatives_probe(ring, &measures[0], pp.epsilon, pp.tau, pp.c)?),
        None => None,
    };
    let last = scans.last().unwrap();
    Ok(Report {
        header: header(&["k", "max_primitive", "argmax", "tau", "primitive_count"]),
        rows,
        message: format!("max primitive |hat| at k = {max_k}: {:.3e}", last.max_primitive),
        summary: json!({"scans": scans, "probe": probe}),
        passed,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerationParams {
    elements: Vec<ElemSpec>,
    #[serde(default = "default_caps")]
    caps: (u32, u32),
    #[serde(default = "one")]
    tau: f64,
    #[serde(default)]
    require_found: bool,
}

fn default_caps() -> (u32, u32) {
    (4, 6)
}

pub fn generation(ring: &FiniteQuotientRing, params: toml::Value) -> Result<Report> {
    let p: GenerationParams = params.try_into()?;
    let a = resolve_set(ring, &p.elements);
    let r = bounded_generation_search(ring, &a, p.caps, p.tau)?;
    let passed = r.verified && (!p.require_found || r.found.is_some());
    let row = vec![
        r.q.to_string(),
        r.tau.to_string(),
        r.caps.0.to_string(),
        r.caps.1.to_string(),
        fmt_opt(r.found.map(|f| f.0)),
        fmt_opt(r.found.map(|f| f.1)),
        join(&r.cover.outer),
        join(&r.cover.inner),
        r.cover.size.to_string(),
        r.verified.to_string(),
    ];
    Ok(Report {
        header: header(&["q", "tau", "r1_cap", "r2_cap", "r1", "r2", "outer", "inner", "cover_size", "verified"]),
        rows: vec![row],
        message: match r.found {
            Some((r1, r2)) => format!("covered a quotient of size {} at (r1, r2) = ({r1}, {r2})", r.cover.size),
            None => format!("no cover within caps {:?}; best size {}", r.caps, r.cover.size),
        },
        summary: serde_json::to_value(&r)?,
        passed,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoveringParams {
    gamma: f64,
    elements: Option<Vec<ElemSpec>>,
    samples: Option<usize>,
    min_size: Option<usize>,
}

pub fn covering(ring: &FiniteQuotientRing, params: toml::Value, rng: &mut ChaCha8Rng) -> Result<Report> {
    let p: CoveringParams = params.try_into()?;
    let q = ring.order();
    let sets: Vec<ElementSet> = match (&p.elements, p.samples) {
        (Some(e), None) => vec![resolve_set(ring, e)],
        (None, Some(n)) => {
            let floor = (q as f64).powf(1.0 - p.gamma).floor() as usize + 1;
            let min = p.min_size.unwrap_or(floor).clamp(1, q);
            let all: Vec<_> = ring.elements().collect();
            (0..n)
                .map(|_| {
                    let size = rng.gen_range(min..=q);
                    ElementSet::from_elems(ring, all.choose_multiple(rng, size).copied())
                })
                .collect()
        }
        _ => bail!("covering needs exactly one of `elements` or `samples`"),
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (i, a) in sets.iter().enumerate() {
        let r = verify_cor_2346(ring, a, p.gamma)?;
        rows.push(vec![
            i.to_string(),
            a.len().to_string(),
            join(&r.exponents),
            r.index.to_string(),
            format!("{:.6}", r.index_bound),
            r.verified.to_string(),
        ]);
        reports.push(r);
    }
    let failures = reports.iter().filter(|r| !r.verified).count();
    Ok(Report {
        header: header(&["set", "size", "exponents", "index", "index_bound", "verified"]),
        rows,
        message: format!("{} of {} sets covered", reports.len() - failures, reports.len()),
        summary: json!({"reports": reports}),
        passed: failures == 0,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GlueingParams {
    measures: Vec<MeasureSpec>,
    #[serde(default = "default_kappa")]
    kappa: f64,
    #[serde(default = "half")]
    gamma: f64,
    #[serde(default = "half")]
    tau: f64,
    #[serde(default = "default_rho2")]
    rho2: f64,
    #[serde(default = "one")]
    c_d: f64,
    min_exponent: Option<u32>,
    #[serde(default = "default_audit_epsilon")]
    audit_epsilon: f64,
}

fn default_kappa() -> f64 {
    0.05
}

fn half() -> f64 {
    0.5
}

fn default_rho2() -> f64 {
    0.25
}

fn default_audit_epsilon() -> f64 {
    0.1
}

pub fn glueing(ring: FiniteQuotientRing, params: toml::Value, rng: &mut ChaCha8Rng, base: &Path) -> Result<Report> {
    let p: GlueingParams = params.try_into()?;
    let cm = CompositeModulus::new(ring, p.min_exponent)?;
    let measures = build_measures(&cm.ring, &p.measures, rng, base)?;
    let gp = GlueParams::derived(p.kappa, p.gamma, p.tau, measures.len() as u32, p.rho2, p.c_d);
    let sel = select_components(&cm, &measures, &gp, p.audit_epsilon)?;
    let mut passed = true;
    let mut reaudits = Vec::new();
    let mut rows = Vec::new();
    for (i, step) in sel.steps.iter().enumerate() {
        rows.push(vec![
            i.to_string(),
            join(&step.prefix),
            step.component.to_string(),
            step.accepted.to_string(),
            join(&step.junk_masses.iter().map(|m| format!("{m:.12}")).collect::<Vec<_>>()),
        ]);
        if step.accepted {
            let fams = component_families(cm.component(step.component), gp.rho2)?;
            for m in &measures {
                let dec = screen_decompose(&cm, m, &step.prefix, step.component, &fams, &gp)?;
                let r = reaudit(&cm, m, &dec, &fams, &gp);
                passed &= r.partition_ok && r.screening_violations == 0;
                reaudits.push(r);
            }
        }
    }
    let (psi, ledger) = if !sel.accepted.is_empty() && cm.ring.order() <= PSI_CAPACITY {
        let psi = build_psi_measure(&cm, &measures, gp.r2, &sel.accepted, None, gp.rho4)?;
        let ledger = entropy_ledger(&cm, &psi.density, &sel.accepted, &gp)?;
        passed &= psi.normalized && ledger.chain_holds;
        (
            Some(json!({"normalized": psi.normalized, "z_size": psi.z_set.len(), "reduced_exponents": psi.reduced_exponents})),
            Some(ledger),
        )
    } else {
        (None, None)
    };
    let message = format!(
        "accepted components {:?} (q~ = {}, target q^rho0 = {:.4}), rejected {:?}",
        sel.accepted, sel.q_tilde, sel.target, sel.rejected
    );
    Ok(Report {
        header: header(&["step", "prefix", "component", "accepted", "junk_masses"]),
        rows,
        summary: json!({"params": gp, "selection": sel, "reaudits": reaudits, "psi": psi, "ledger": ledger}),
        passed,
        message,
    })
}

fn default_rings() -> Result<Vec<(String, FiniteQuotientRing)>> {
    let g = NumberFieldSpec::gaussian();
    let p3 = factor_rational_prime(&g, 3)?.remove(0);
    let p5 = factor_rational_prime(&g, 5)?.remove(0);
    Ok(vec![
        ("Z/8".into(), FiniteQuotientRing::integers_mod(8)?),
        ("Z/9".into(), FiniteQuotientRing::integers_mod(9)?),
        ("Z/25".into(), FiniteQuotientRing::integers_mod(25)?),
        ("Z[i]/P3".into(), FiniteQuotientRing::prime_power(&g, 3, 0, 1)?),
        ("Z[i]/P3^2".into(), FiniteQuotientRing::prime_power(&g, 3, 0, 2)?),
        ("Z[i]/(1+i)^4".into(), FiniteQuotientRing::prime_power(&g, 2, 0, 4)?),
        ("Z[i]/(P3 P5)".into(), FiniteQuotientRing::build(&g, &IdealDescriptor::new(vec![(p3, 1), (p5, 1)])?)?),
    ])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentityParams {
    #[serde(default = "default_cases")]
    measures_per_ring: usize,
}

fn default_cases() -> usize {
    20
}

pub fn identity_suite(ring: Option<FiniteQuotientRing>, params: toml::Value, rng: &mut ChaCha8Rng) -> Result<Report> {
    let p: IdentityParams = params.try_into()?;
    let mut rows = Vec::new();
    let mut passed = true;
    let mut push = |ring: &str, check: &str, cases: usize, dev: Option<f64>, ok: bool| {
        passed &= ok;
        rows.push(vec![ring.into(), check.into(), cases.to_string(), fmt_opt(dev.map(|d| format!("{d:.3e}"))), ok.to_string()]);
    };
    let n = p.measures_per_ring;
    let mut ok = true;
    for k in 1..=6 {
        for _ in 0..n {
            let xs: Vec<BigInt> = (0..k).map(|_| BigInt::from(rng.gen_range(-1000i64..=1000))).collect();
            ok &= polyiden_holds(&xs);
        }
    }
    push("Z", "symmetric-power identity k<=6", 6 * n, None, ok);
    for q in [5, 7] {
        let z = FiniteQuotientRing::integers_mod(q)?;
        let mut ok = true;
        for k in 1..=3 {
            for _ in 0..n {
                let ms: Vec<Measure> = (0..k).map(|_| Measure::random_exact(&z, rng, 12)).collect();
                ok &= polyiden_decomposition_check(&z, &ms)?;
            }
        }
        push(&format!("Z/{q}"), "measure decomposition k<=3", 3 * n, None, ok);
    }
    let rings = match ring {
        Some(r) => vec![("configured".to_string(), r)],
        None => default_rings()?,
    };
    for (name, r) in &rings {
        let table = CharacterTable::new(r);
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for i in 0..n {
            let (mu, nu) = if i % 2 == 0 {
                (Measure::random_exact(r, rng, 20), Measure::random_exact(r, rng, 20))
            } else {
                (Measure::random_float(r, rng), Measure::random_float(r, rng))
            };
            let rep = fourier_identities(r, &table, &mu, &nu)?;
            worst = worst.max(rep.homomorphism).max(rep.parseval).max(rep.phi_inversion).max(rep.twist);
            ok &= rep.holds(1e-9);
        }
        push(name, "Fourier identities", n, Some(worst), ok);
        let orbit_ok = r.elements().all(|c| (table.orbit(r, c).len() == r.order()) == table.is_primitive(c));
        push(name, "primitivity iff full orbit", r.order(), None, orbit_ok);
    }
    let failures = rows.iter().filter(|r| r[4] == "false").count();
    Ok(Report {
        header: header(&["ring", "check", "cases", "max_deviation", "passed"]),
        message: format!("{} checks, {failures} failed", rows.len()),
        summary: json!({"checks": rows.len(), "failed": failures}),
        rows,
        passed,
    })
}
