//! Exact identities: the alternating symmetric-power identity, its
//! measure-valued form, and Fourier identities used by the decay machinery.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fourier::{mul_power, phi_values, CharacterTable};
use crate::measure::{add_exact, convolve_exact, scale_exact, ConvOp, Measure};
use crate::ring::FiniteQuotientRing;

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * i)
}

/// Both sides of `Σ_{i<k} (−1)^i P_{k−i} = k! ∏ x_i`, with
/// `P_t = Σ_{|S|=t} (Σ_{i∈S} x_i)^k`.
pub fn polyiden_sides(xs: &[BigInt]) -> (BigInt, BigInt) {
    let k = xs.len();
    let mut lhs = BigInt::zero();
    for mask in 1u32..(1 << k) {
        let t = mask.count_ones() as usize;
        let s: BigInt = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| &xs[i]).sum();
        let term = num_traits::pow(s, k);
        if (k - t) % 2 == 0 {
            lhs += term;
        } else {
            lhs -= term;
        }
    }
    let rhs = factorial(k) * xs.iter().product::<BigInt>();
    (lhs, rhs)
}

pub fn polyiden_holds(xs: &[BigInt]) -> bool {
    let (l, r) = polyiden_sides(xs);
    l == r
}

fn mul_power_exact(ring: &FiniteQuotientRing, v: &[BigRational], k: usize) -> Vec<BigRational> {
    let mut acc = v.to_vec();
    for _ in 1..k {
        acc = convolve_exact(ring, ConvOp::Mul, &acc, v);
    }
    acc
}

/// `k! (μ_1 ⊗ ⋯ ⊗ μ_k) = Σ_{i<k} (−1)^i P_{k−i}` as signed measures, where
/// `P_t = Σ_{|S|=t} (Σ_{i∈S} μ_i)^{⊗k}`.
pub fn polyiden_decomposition_check(ring: &FiniteQuotientRing, measures: &[Measure]) -> Result<bool> {
    let k = measures.len();
    if k == 0 || k > 16 {
        return invalid("need 1 ≤ k ≤ 16 measures");
    }
    let ws: Vec<&[BigRational]> = measures
        .iter()
        .map(|m| {
            m.check_ring(ring)?;
            m.exact()
        })
        .collect::<Result<_>>()?;
    let mut nu = ws[0].to_vec();
    for w in &ws[1..] {
        nu = convolve_exact(ring, ConvOp::Mul, &nu, w);
    }
    let lhs = scale_exact(&nu, &factorial(k));
    let mut rhs = vec![BigRational::zero(); ring.order()];
    for mask in 1u32..(1 << k) {
        let t = mask.count_ones() as usize;
        let mut sigma = vec![BigRational::zero(); ring.order()];
        for (i, w) in ws.iter().enumerate() {
            if mask >> i & 1 == 1 {
                sigma = add_exact(&sigma, w);
            }
        }
        let term = mul_power_exact(ring, &sigma, k);
        let sign = if (k - t) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        rhs = add_exact(&rhs, &scale_exact(&term, &sign));
    }
    Ok(lhs == rhs)
}

/// Largest deviation in `Σ_y ν(y) ν̂(yξ) = (ν ⊗ ν)^(ξ)` over all `ξ`.
pub fn twist_identity_error(ring: &FiniteQuotientRing, table: &CharacterTable, nu: &Measure) -> Result<f64> {
    table.check_ring(ring)?;
    let hat = table.full_fourier(nu);
    let hat2 = table.full_fourier(&nu.mul_convolve(nu, ring)?);
    let w = nu.to_f64();
    let mut worst: f64 = 0.0;
    for xi in ring.elements() {
        let lhs: Complex64 = ring
            .elements()
            .filter(|&y| w[y as usize] != 0.0)
            .map(|y| hat[table.module_action(ring, y, xi) as usize] * w[y as usize])
            .sum();
        worst = worst.max((lhs - hat2[xi as usize]).norm());
    }
    Ok(worst)
}

/// Deviations of the Fourier identities for one pair of measures.
#[derive(Clone, Debug, Serialize)]
pub struct FourierIdentityReport {
    /// `max |(μ ∗ ν)^ − μ̂ ν̂|`.
    pub homomorphism: f64,
    /// `|Σ|μ̂|² − q Σ μ²|`.
    pub parseval: f64,
    /// `max_x |Σ_ξ |μ̂(ξ)|² ξ(x) − φ(x)|`.
    pub phi_inversion: f64,
    /// `φ(0) = Σ|μ̂|² = max φ` (exact comparison in rational mode).
    pub phi_max_at_zero: bool,
    /// `Σ φ = q` (exact in rational mode).
    pub phi_total: bool,
    /// `ν = μ^{⊗2}` twist identity.
    pub twist: f64,
}

impl FourierIdentityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.homomorphism < tol
            && self.parseval < tol
            && self.phi_inversion < tol
            && self.phi_max_at_zero
            && self.phi_total
            && self.twist < tol
    }
}

pub fn fourier_identities(
    ring: &FiniteQuotientRing,
    table: &CharacterTable,
    mu: &Measure,
    nu: &Measure,
) -> Result<FourierIdentityReport> {
    let q = ring.order();
    let hm = table.full_fourier(mu);
    let hn = table.full_fourier(nu);
    let hc = table.full_fourier(&mu.add_convolve(nu, ring)?);
    let homomorphism = hm
        .iter()
        .zip(&hn)
        .zip(&hc)
        .map(|((a, b), c)| (a * b - c).norm())
        .fold(0.0, f64::max);
    let energy: f64 = hm.iter().map(|z| z.norm_sqr()).sum();
    let sq: f64 = mu.to_f64().iter().map(|w| w * w).sum::<f64>() * q as f64;
    let (phi, phi_exact) = phi_values(ring, mu)?;
    let sq_hat: Vec<f64> = hm.iter().map(|z| z.norm_sqr()).collect();
    let inv = table.transform(&sq_hat);
    let phi_inversion = inv
        .iter()
        .zip(&phi)
        .map(|(z, &p)| (z - Complex64::new(p, 0.0)).norm())
        .fold(0.0, f64::max);
    let (phi_max_at_zero, phi_total) = match &phi_exact {
        Some(e) => (
            e.iter().all(|v| v <= &e[0]) && !e[0].is_negative(),
            e.iter().sum::<BigRational>() == BigRational::from_integer(q.into()),
        ),
        None => (
            phi.iter().all(|&v| v <= phi[0] * (1.0 + 1e-12)) && (phi[0] - energy).abs() < 1e-9,
            (phi.iter().sum::<f64>() - q as f64).abs() < 1e-9 * q as f64,
        ),
    };
    let nu2 = mul_power(ring, &[mu.clone(), mu.clone()])?;
    Ok(FourierIdentityReport {
        homomorphism,
        parseval: (energy - sq).abs().max((energy - phi[0]).abs()),
        phi_inversion,
        phi_max_at_zero,
        phi_total,
        twist: twist_identity_error(ring, table, &nu2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::LabError;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn small_cases() {
        // (a+b)^2 − (a^2+b^2) = 2ab
        let (l, r) = polyiden_sides(&ints(&[3, -7]));
        assert_eq!((l, r), (BigInt::from(-42), BigInt::from(-42)));
        assert_eq!(polyiden_sides(&ints(&[2, 3, 5])).1, BigInt::from(180));
        assert!(polyiden_holds(&ints(&[1, -2, 3, -4, 5, -6])));
        assert!(polyiden_holds(&ints(&[9])));
    }

    #[test]
    fn measure_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z5 = FiniteQuotientRing::integers_mod(5).unwrap();
        let z7 = FiniteQuotientRing::integers_mod(7).unwrap();
        let two: Vec<Measure> = (0..2).map(|_| Measure::random_exact(&z5, &mut rng, 9)).collect();
        assert!(polyiden_decomposition_check(&z5, &two).unwrap());
        let three: Vec<Measure> = (0..3).map(|_| Measure::random_exact(&z7, &mut rng, 9)).collect();
        assert!(polyiden_decomposition_check(&z7, &three).unwrap());
        assert!(polyiden_decomposition_check(&z7, &three[..1]).unwrap());
        let float = Measure::random_float(&z5, &mut rng);
        assert!(matches!(
            polyiden_decomposition_check(&z5, &[float]),
            Err(LabError::ExactModeRequired)
        ));
    }

    #[test]
    fn fourier_suite_z9() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = FiniteQuotientRing::integers_mod(9).unwrap();
        let t = CharacterTable::new(&r);
        for _ in 0..5 {
            let mu = Measure::random_exact(&r, &mut rng, 5);
            let nu = Measure::random_float(&r, &mut rng);
            let rep = fourier_identities(&r, &t, &mu, &nu).unwrap();
            assert!(rep.holds(1e-9), "{rep:?}");
        }
    }
}
