//! Prime ideals above rational primes and ideals `∏ 𝒫_i^{n_i}` of `Z[θ]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::field::NumberFieldSpec;
use crate::lattice::{Lattice, Row};
use crate::poly;

/// `𝒫 = (p, g(θ))` with `g` a monic irreducible factor of the minimal
/// polynomial modulo `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeIdealSpec {
    pub p: u64,
    pub g: Vec<u64>,
    pub e: u32,
    pub d0: u32,
}

impl PrimeIdealSpec {
    /// `|O/𝒫| = p^{d0}`.
    pub fn residue_size(&self) -> u64 {
        self.p.pow(self.d0)
    }

    pub fn norm_power(&self, n: u32) -> u128 {
        (self.p as u128).pow(self.d0 * n)
    }

    pub fn lattice(&self, field: &NumberFieldSpec) -> Lattice {
        let d = field.degree();
        let g: Vec<i64> = self.g.iter().map(|&c| c as i64).collect();
        let gt = field.eval_poly(&g);
        let theta = field.theta();
        let mut gens: Vec<Row> = Vec::new();
        let mut pow = field.one();
        for _ in 0..d {
            gens.push(field.mul(&gt, &pow));
            gens.push(pow.iter().map(|&a| a * self.p as i128).collect());
            pow = field.mul(&pow, &theta);
        }
        Lattice::from_generators_mod(d, &gens, self.residue_size() as i128)
    }
}

/// Factors `p O` as `∏ 𝒫_i^{e_i}`.
pub fn factor_rational_prime(field: &NumberFieldSpec, p: u64) -> Result<Vec<PrimeIdealSpec>> {
    if !poly::is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    if !poly::is_irreducible_over_q(&field.min_poly) {
        return Err(LabError::ReduciblePolynomial(field.label.clone()));
    }
    let disc = poly::discriminant(&field.min_poly);
    let pp = (p as i128) * (p as i128);
    // p^2 ∤ disc forces p ∤ index; otherwise fall back to Dedekind
    if disc % pp == 0 && !poly::dedekind_ok(&field.min_poly, p) {
        return Err(LabError::NonMonogenicPrime {
            field: field.label.clone(),
            p,
        });
    }
    let out = poly::factor_mod_p(&field.min_poly, p)
        .into_iter()
        .map(|(g, e)| PrimeIdealSpec {
            p,
            d0: g.degree() as u32,
            g: g.coeffs().to_vec(),
            e,
        })
        .collect();
    Ok(out)
}

/// `𝔞 = ∏ 𝒫_i^{n_i}` with distinct primes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealDescriptor {
    pub factors: Vec<(PrimeIdealSpec, u32)>,
}

impl IdealDescriptor {
    pub fn new(factors: Vec<(PrimeIdealSpec, u32)>) -> Result<Self> {
        for (i, (pi, n)) in factors.iter().enumerate() {
            if *n == 0 {
                return invalid("prime exponents must be at least 1");
            }
            if factors[..i].iter().any(|(pj, _)| pj == pi) {
                return invalid("prime ideals in a descriptor must be distinct");
            }
        }
        Ok(Self { factors })
    }

    pub fn prime_power(p: PrimeIdealSpec, n: u32) -> Self {
        Self {
            factors: vec![(p, n)],
        }
    }

    /// The ideal `(n)` of `Z` (rational field only).
    pub fn rational(n: u64) -> Result<Self> {
        if n < 2 {
            return invalid("modulus must be at least 2");
        }
        let mut m = n;
        let mut factors = Vec::new();
        let mut p = 2;
        while m > 1 {
            if m % p == 0 {
                let mut e = 0;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                factors.push((
                    PrimeIdealSpec {
                        p,
                        g: vec![0, 1],
                        e: 1,
                        d0: 1,
                    },
                    e,
                ));
            }
            p += 1;
        }
        Ok(Self { factors })
    }

    pub fn is_local(&self) -> bool {
        self.factors.len() == 1
    }

    /// Residue characteristics `|O/𝒫_i|` pairwise coprime.
    pub fn is_coprime(&self) -> bool {
        self.factors
            .iter()
            .enumerate()
            .all(|(i, (a, _))| self.factors[..i].iter().all(|(b, _)| a.p != b.p))
    }

    pub fn norm(&self) -> u128 {
        self.factors.iter().map(|(p, n)| p.norm_power(*n)).product()
    }

    pub fn lattice(&self, field: &NumberFieldSpec) -> Lattice {
        let d = field.degree();
        let mut acc = Lattice::from_generators_mod(d, &[field.one()], 1);
        let mut norm: i128 = 1;
        for (pr, n) in &self.factors {
            let pl = pr.lattice(field);
            for _ in 0..*n {
                norm *= pr.residue_size() as i128;
                acc = lattice_product(field, &acc, &pl, norm);
            }
        }
        acc
    }
}

/// Product of two ideals given as lattices; `norm` is the norm of the product.
pub fn lattice_product(field: &NumberFieldSpec, a: &Lattice, b: &Lattice, norm: i128) -> Lattice {
    let mut gens = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.basis {
        for y in &b.basis {
            gens.push(field.mul(x, y));
        }
    }
    Lattice::from_generators_mod(field.degree(), &gens, norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_splitting_types() {
        let k = NumberFieldSpec::gaussian();
        let five = factor_rational_prime(&k, 5).unwrap();
        assert_eq!(five.len(), 2);
        assert!(five.iter().all(|p| p.e == 1 && p.d0 == 1));
        let two = factor_rational_prime(&k, 2).unwrap();
        assert_eq!((two.len(), two[0].e, two[0].d0), (1, 2, 1));
        let three = factor_rational_prime(&k, 3).unwrap();
        assert_eq!((three.len(), three[0].e, three[0].d0), (1, 1, 2));
        let q = NumberFieldSpec::rationals();
        let seven = factor_rational_prime(&q, 7).unwrap();
        assert_eq!((seven.len(), seven[0].e, seven[0].d0), (1, 1, 1));
    }

    #[test]
    fn degree_sum_matches() {
        for label in NumberFieldSpec::builtin_labels() {
            let k = NumberFieldSpec::builtin(label).unwrap();
            for p in [2u64, 3, 5, 7, 11, 13, 17] {
                match factor_rational_prime(&k, p) {
                    Ok(f) => {
                        let s: u32 = f.iter().map(|p| p.e * p.d0).sum();
                        assert_eq!(s as usize, k.degree(), "{label} p={p}");
                    }
                    Err(LabError::NonMonogenicPrime { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn non_monogenic_prime_detected() {
        let k = NumberFieldSpec::new("Q(sqrt5)", vec![-5, 0, 1]).unwrap();
        assert!(matches!(
            factor_rational_prime(&k, 2),
            Err(LabError::NonMonogenicPrime { p: 2, .. })
        ));
        assert!(factor_rational_prime(&k, 5).is_ok());
    }

    #[test]
    fn ideal_norms() {
        let k = NumberFieldSpec::gaussian();
        let p3 = factor_rational_prime(&k, 3).unwrap().remove(0);
        let a = IdealDescriptor::prime_power(p3.clone(), 2);
        assert_eq!(a.lattice(&k).index(), 81);
        let p2 = factor_rational_prime(&k, 2).unwrap().remove(0);
        let b = IdealDescriptor::prime_power(p2, 4);
        assert_eq!(b.lattice(&k).basis, vec![vec![4, 0], vec![0, 4]]);
        let p5 = factor_rational_prime(&k, 5).unwrap().remove(0);
        let c = IdealDescriptor::new(vec![(p3, 1), (p5, 1)]).unwrap();
        assert!(c.is_coprime());
        assert_eq!(c.lattice(&k).index(), 45);
    }
}
