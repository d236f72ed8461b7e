//! Additive characters, Fourier transforms, the function `φ = q(μ ∗ μ₋)`
//! and energy statistics.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::measure::{ConvOp, Measure, Weights};
use crate::ring::{Elem, FiniteQuotientRing};
use crate::set::ElementSet;

pub const MAGNITUDE_TOLERANCE: f64 = 1e-9;

/// Characters are indexed like elements: character `c` has the same
/// invariant-factor coordinates as element `c` and pairs as
/// `χ_c(x) = exp(2πi Σ c_i x_i / m_i)`.
#[derive(Debug)]
pub struct CharacterTable {
    ring_id: u64,
    orders: Vec<u64>,
    modulus: u64,
    scale: Vec<u64>,
    coords: Vec<u64>,
    basis: Vec<Elem>,
    roots: Vec<Complex64>,
    primitive: Vec<bool>,
}

impl CharacterTable {
    pub fn new(ring: &FiniteQuotientRing) -> Self {
        let orders: Vec<u64> = ring.invariants().to_vec();
        let r = orders.len();
        let modulus = orders.iter().copied().max().unwrap_or(1);
        let scale = orders.iter().map(|&m| modulus / m).collect();
        let mut coords = Vec::with_capacity(ring.order() * r);
        for x in ring.elements() {
            coords.extend(ring.coords(x));
        }
        let basis = (0..r)
            .map(|i| {
                let mut e = vec![0u64; r];
                e[i] = 1;
                ring.from_coords(&e)
            })
            .collect();
        let roots = (0..modulus)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / modulus as f64))
            .collect();
        let mut table = Self {
            ring_id: ring.id(),
            orders,
            modulus,
            scale,
            coords,
            basis,
            roots,
            primitive: Vec::new(),
        };
        let socles = socles(ring);
        table.primitive = ring
            .elements()
            .map(|c| socles.iter().all(|s| s.iter().any(|&x| table.pair(c, x) != 0)))
            .collect();
        table
    }

    pub fn check_ring(&self, ring: &FiniteQuotientRing) -> Result<()> {
        if ring.id() == self.ring_id {
            Ok(())
        } else {
            Err(LabError::RingMismatch)
        }
    }

    pub fn len(&self) -> usize {
        self.primitive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitive.is_empty()
    }

    /// Exponent `k` with `χ_c(x) = exp(2πi k / M)`, `M` the exponent of
    /// the additive group.
    pub fn pair(&self, c: Elem, x: Elem) -> u64 {
        let r = self.orders.len();
        let (cc, xc) = (&self.coords[c as usize * r..][..r], &self.coords[x as usize * r..][..r]);
        let mut s = 0u64;
        for i in 0..r {
            s = (s + (cc[i] * xc[i] % self.orders[i]) * self.scale[i]) % self.modulus;
        }
        s
    }

    pub fn exponent(&self) -> u64 {
        self.modulus
    }

    pub fn eval(&self, c: Elem, x: Elem) -> Complex64 {
        self.roots[self.pair(c, x) as usize]
    }

    /// Primitive at every prime component: nontrivial on each
    /// `𝒫_i^{n_i−1}/𝒫_i^{n_i}` slice.
    pub fn is_primitive(&self, c: Elem) -> bool {
        self.primitive[c as usize]
    }

    pub fn primitive_characters(&self) -> Vec<Elem> {
        (0..self.len() as Elem).filter(|&c| self.primitive[c as usize]).collect()
    }

    /// `yχ_c`, the character `x ↦ χ_c(yx)`.
    pub fn module_action(&self, ring: &FiniteQuotientRing, y: Elem, c: Elem) -> Elem {
        let parts: Vec<u64> = self
            .basis
            .iter()
            .zip(&self.scale)
            .map(|(&e, &s)| self.pair(c, ring.mul(y, e)) / s)
            .collect();
        ring.from_coords(&parts)
    }

    /// `{yχ_c : y ∈ ring}`.
    pub fn orbit(&self, ring: &FiniteQuotientRing, c: Elem) -> ElementSet {
        ElementSet::from_elems(ring, ring.elements().map(|y| self.module_action(ring, y, c)))
    }

    /// `μ̂(χ_c) = Σ μ(x) χ_c(x)`.
    pub fn fourier(&self, mu: &Measure, c: Elem) -> Complex64 {
        mu.to_f64()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(x, &w)| self.eval(c, x as Elem) * w)
            .sum()
    }

    /// Direct `O(q²)` transform of an arbitrary weight vector.
    pub fn transform_naive(&self, w: &[f64]) -> Vec<Complex64> {
        (0..self.len() as Elem)
            .into_par_iter()
            .map(|c| {
                w.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(x, &v)| self.eval(c, x as Elem) * v)
                    .sum()
            })
            .collect()
    }

    /// Transform via one FFT per invariant-factor axis.
    pub fn transform(&self, w: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let q = data.len();
        let mut planner = FftPlanner::new();
        let mut stride = q;
        for &m in &self.orders {
            let m = m as usize;
            stride /= m;
            let fft = planner.plan_fft_inverse(m);
            let mut buf = vec![Complex64::zero(); m];
            for base in 0..q {
                if (base / stride) % m != 0 {
                    continue;
                }
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = data[base + k * stride];
                }
                fft.process(&mut buf);
                for (k, b) in buf.iter().enumerate() {
                    data[base + k * stride] = *b;
                }
            }
        }
        data
    }

    pub fn full_fourier(&self, mu: &Measure) -> Vec<Complex64> {
        self.transform(&mu.to_f64())
    }
}

/// Additive generators of the minimal nonzero ideal at each component.
fn socles(ring: &FiniteQuotientRing) -> Vec<Vec<Elem>> {
    let factors = &ring.modulus().factors;
    (0..factors.len())
        .map(|i| {
            ring.elements()
                .filter(|&x| {
                    (0..factors.len()).all(|j| {
                        let v = ring.valuation_at(j, x);
                        if j == i {
                            v + 1 >= factors[j].1
                        } else {
                            v >= factors[j].1
                        }
                    })
                })
                .collect()
        })
        .collect()
}

/// `φ` with its summary sets.
#[derive(Clone, Debug)]
pub struct DecayDiagnostics {
    pub phi: Vec<f64>,
    pub phi_exact: Option<Vec<BigRational>>,
    /// `{x : φ(x) > q^{−2ε} φ(0)}`.
    pub large_set: ElementSet,
    pub epsilon: f64,
}

impl DecayDiagnostics {
    pub fn phi0(&self) -> f64 {
        self.phi[0]
    }
}

/// `φ = q(μ ∗ μ₋)`, exact when the measure is.
pub fn phi_values(ring: &FiniteQuotientRing, mu: &Measure) -> Result<(Vec<f64>, Option<Vec<BigRational>>)> {
    let conv = mu.add_convolve(&mu.reflect(ring), ring)?;
    let q = ring.order();
    Ok(match conv.weights() {
        Weights::Exact(w) => {
            let qr = BigRational::from_integer(q.into());
            let exact: Vec<BigRational> = w.iter().map(|r| r * &qr).collect();
            (exact.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect(), Some(exact))
        }
        Weights::Float(w) => (w.iter().map(|v| v * q as f64).collect(), None),
    })
}

pub fn phi(ring: &FiniteQuotientRing, mu: &Measure, epsilon: f64) -> Result<DecayDiagnostics> {
    let (phi, phi_exact) = phi_values(ring, mu)?;
    let threshold = (ring.order() as f64).powf(-2.0 * epsilon) * phi[0];
    let large_set = ElementSet::from_elems(ring, ring.elements().filter(|&x| phi[x as usize] > threshold));
    Ok(DecayDiagnostics {
        phi,
        phi_exact,
        large_set,
        epsilon,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub size: usize,
    pub additive: u64,
    pub multiplicative: u64,
    pub additive_ratio: f64,
    pub multiplicative_ratio: f64,
}

fn energy(ring: &FiniteQuotientRing, a: &[Elem], op: ConvOp) -> u64 {
    let mut r = vec![0u64; ring.order()];
    for &x in a {
        for &y in a {
            let z = match op {
                ConvOp::Add => ring.add(x, y),
                ConvOp::Mul => ring.mul(x, y),
            };
            r[z as usize] += 1;
        }
    }
    r.iter().map(|v| v * v).sum()
}

pub fn energies(ring: &FiniteQuotientRing, a: &ElementSet) -> Result<EnergyReport> {
    a.check_ring(ring)?;
    let v = a.to_vec();
    let n = v.len() as f64;
    let (add, mul) = (energy(ring, &v, ConvOp::Add), energy(ring, &v, ConvOp::Mul));
    Ok(EnergyReport {
        size: v.len(),
        additive: add,
        multiplicative: mul,
        additive_ratio: add as f64 / n.powi(3),
        multiplicative_ratio: mul as f64 / n.powi(3),
    })
}

/// `μ_1 ⊗ … ⊗ μ_k`.
pub fn mul_power(ring: &FiniteQuotientRing, measures: &[Measure]) -> Result<Measure> {
    let (first, rest) = measures
        .split_first()
        .ok_or_else(|| LabError::Invalid("at least one measure required".into()))?;
    rest.iter().try_fold(first.clone(), |acc, m| acc.mul_convolve(m, ring))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayScan {
    pub k: usize,
    pub max_primitive: f64,
    pub argmax: Option<Elem>,
    /// `−log(max)/log q`; `None` when the maximum vanishes.
    pub tau: Option<f64>,
    pub primitive_count: usize,
}

/// Largest `|ν̂(χ)|` over primitive `χ` for `ν = μ_1 ⊗ … ⊗ μ_k`.
pub fn decay_scan(ring: &FiniteQuotientRing, table: &CharacterTable, measures: &[Measure]) -> Result<DecayScan> {
    table.check_ring(ring)?;
    let nu = mul_power(ring, measures)?;
    let hat = table.full_fourier(&nu);
    let mut best: Option<(Elem, f64)> = None;
    let prim = table.primitive_characters();
    for &c in &prim {
        let v = hat[c as usize].norm();
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((c, v));
        }
    }
    let max = best.map_or(0.0, |b| b.1);
    let clean = if max < 1e-12 { 0.0 } else { max.min(1.0) };
    Ok(DecayScan {
        k: measures.len(),
        max_primitive: clean,
        argmax: best.map(|b| b.0),
        tau: (clean > 0.0).then(|| -clean.ln() / (ring.order() as f64).ln()),
        primitive_count: prim.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberMass {
    pub level: u32,
    pub max_mass: f64,
    pub bound: f64,
    pub exceeds: bool,
}

/// Raw quantities behind the three alternatives of the decay dichotomy for
/// a measure on a local ring. Alternative (iii) is not constructed.
#[derive(Clone, Debug, Serialize)]
pub struct AlternativesReport {
    /// `Σ_y Σ_ξ |μ̂(ξ)|² |μ̂(yξ)|² μ(y)`, exact as a rational string when
    /// the measure is exact.
    pub quadrilinear: f64,
    pub quadrilinear_exact: Option<String>,
    /// `Σ_ξ |μ̂(ξ)|² = φ(0)`.
    pub fourier_mass: f64,
    pub fourier_mass_exact: Option<String>,
    pub rhs: f64,
    /// The inequality exactly as stated (never true when `μ` is uniform,
    /// since the trivial character alone contributes 1 to both sums).
    pub alt_i_full: bool,
    /// Both sums with the trivial character removed; holds when the left
    /// side is below the right or both vanish.
    pub alt_i_nontrivial: bool,
    pub fibers: Vec<FiberMass>,
    pub alt_ii: bool,
    /// `(v1, v2)` maximizing `Σ_{x∈R_v1, y∈R_v2} φ(x)φ(xy)μ(y)`.
    pub strata: (u32, u32),
    pub large_set_size: usize,
    pub lambda_size: usize,
    pub lambda_mass: f64,
}

/// Evaluates both sides of the quadrilinear inequality via
/// `Σ_y Σ_ξ |μ̂(ξ)|²|μ̂(yξ)|² μ(y) = q^{-1} Σ_{x,y} φ(x)φ(xy)μ(y)`, the
/// fiber masses over `m > εn`, and the sets `S`, `Λ`.
pub fn alternatives_probe(
    ring: &FiniteQuotientRing,
    mu: &Measure,
    epsilon: f64,
    tau: f64,
    c: f64,
) -> Result<AlternativesReport> {
    mu.check_ring(ring)?;
    let n = ring.local_exponent()?;
    let pr = ring.local_prime()?.clone();
    let q = ring.order();
    let qf = q as f64;
    let diag = phi(ring, mu, epsilon)?;
    let w = mu.to_f64();

    let (quad, quad_exact, mass_exact) = match (&diag.phi_exact, mu.weights()) {
        (Some(pe), Weights::Exact(me)) => {
            let mut acc = BigRational::zero();
            for y in ring.elements() {
                let my = &me[y as usize];
                if my.is_zero() {
                    continue;
                }
                let mut inner = BigRational::zero();
                for x in ring.elements() {
                    let px = &pe[x as usize];
                    if !px.is_zero() {
                        inner += px * &pe[ring.mul(x, y) as usize];
                    }
                }
                acc += inner * my;
            }
            acc /= BigRational::from_integer(q.into());
            (acc.to_f64().unwrap_or(f64::NAN), Some(acc), Some(pe[0].clone()))
        }
        _ => {
            let mut acc = 0.0;
            for y in ring.elements() {
                if w[y as usize] == 0.0 {
                    continue;
                }
                let inner: f64 = ring
                    .elements()
                    .map(|x| diag.phi[x as usize] * diag.phi[ring.mul(x, y) as usize])
                    .sum();
                acc += inner * w[y as usize];
            }
            (acc / qf, None, None)
        }
    };
    let fourier_mass = diag.phi0();
    let decay = qf.powf(-tau);
    let rhs = decay * fourier_mass;
    let (lhs_nt, rhs_nt) = (quad - 1.0, decay * (fourier_mass - 1.0));
    let alt_i_nontrivial = rhs_nt.abs() < 1e-12 && lhs_nt.abs() < 1e-12 || lhs_nt < rhs_nt;

    // fibers of O/𝒫^n → O/𝒫^m, m > εn
    let d0 = pr.d0 as f64;
    let p = pr.p as f64;
    let mut fibers = Vec::new();
    for m in 1..=n {
        if (m as f64) <= epsilon * n as f64 {
            continue;
        }
        let target = ring.local_quotient(m)?;
        let proj = ring.projection_to(&target)?;
        let mut mass = vec![0.0; target.order()];
        for x in ring.elements() {
            mass[proj[x as usize] as usize] += w[x as usize];
        }
        let max_mass = mass.iter().copied().fold(0.0, f64::max);
        let bound = c * p.powf(-2.0 * d0 * m as f64 * tau / epsilon);
        fibers.push(FiberMass {
            level: m,
            max_mass,
            bound,
            exceeds: max_mass > bound,
        });
    }
    let alt_ii = fibers.iter().any(|f| f.exceeds);

    let strata: Vec<Vec<Elem>> = (0..=n)
        .map(|v| ring.elements().filter(|&x| ring.valuation_at(0, x) == v).collect())
        .collect();
    let mut best = (0u32, 0u32, f64::NEG_INFINITY);
    for (v1, r1) in strata.iter().enumerate() {
        for (v2, r2) in strata.iter().enumerate() {
            let s: f64 = r2
                .iter()
                .map(|&y| {
                    w[y as usize]
                        * r1.iter()
                            .map(|&x| diag.phi[x as usize] * diag.phi[ring.mul(x, y) as usize])
                            .sum::<f64>()
                })
                .sum();
            if s > best.2 {
                best = (v1 as u32, v2 as u32, s);
            }
        }
    }
    let (v1, v2) = (best.0 as usize, best.1 as usize);
    let lambda_threshold = qf.powf(1.0 - 3.0 * tau) / fourier_mass;
    let lambda: Vec<Elem> = strata[v2]
        .iter()
        .copied()
        .filter(|&y| {
            let count = strata[v1]
                .iter()
                .filter(|&&x| diag.large_set.contains(x) && diag.large_set.contains(ring.mul(x, y)))
                .count();
            count as f64 > lambda_threshold
        })
        .collect();
    let lambda_mass = lambda.iter().map(|&y| w[y as usize]).sum();

    Ok(AlternativesReport {
        quadrilinear: quad,
        quadrilinear_exact: quad_exact.map(|r| r.to_string()),
        fourier_mass,
        fourier_mass_exact: mass_exact.map(|r| r.to_string()),
        rhs,
        alt_i_full: quad < rhs,
        alt_i_nontrivial,
        fibers,
        alt_ii,
        strata: (best.0, best.1),
        large_set_size: diag.large_set.len(),
        lambda_size: lambda.len(),
        lambda_mass,
    })
}
