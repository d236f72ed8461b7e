//! Probability (and signed) measures on a finite quotient ring.

use std::io::Read;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{LabError, Result};
use crate::ring::{Elem, FiniteQuotientRing};
use crate::set::ElementSet;

pub const FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    ring_id: u64,
    weights: Weights,
}

/// Binary operation used by the convolution kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvOp {
    Add,
    Mul,
}

fn combine(ring: &FiniteQuotientRing, op: ConvOp, a: Elem, b: Elem) -> Elem {
    match op {
        ConvOp::Add => ring.add(a, b),
        ConvOp::Mul => ring.mul(a, b),
    }
}

/// Float convolution kernel, skipping zero weights.
pub fn convolve_f64(ring: &FiniteQuotientRing, op: ConvOp, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ring.order()];
    let nb: Vec<(Elem, f64)> = b
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, &w)| (i as Elem, w))
        .collect();
    for (x, &wa) in a.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        for &(y, wb) in &nb {
            out[combine(ring, op, x as Elem, y) as usize] += wa * wb;
        }
    }
    out
}

fn common_denominator(v: &[BigRational]) -> BigInt {
    v.iter()
        .filter(|r| !r.is_zero())
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

fn numerators(v: &[BigRational], den: &BigInt) -> Vec<BigInt> {
    v.iter().map(|r| r.numer() * (den / r.denom())).collect()
}

/// Exact convolution kernel over integer numerators sharing one denominator.
pub fn convolve_exact(
    ring: &FiniteQuotientRing,
    op: ConvOp,
    a: &[BigRational],
    b: &[BigRational],
) -> Vec<BigRational> {
    let (da, db) = (common_denominator(a), common_denominator(b));
    let (na, nb) = (numerators(a, &da), numerators(b, &db));
    let nzb: Vec<(Elem, &BigInt)> = nb
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(i, w)| (i as Elem, w))
        .collect();
    let mut acc = vec![BigInt::zero(); ring.order()];
    for (x, wa) in na.iter().enumerate() {
        if wa.is_zero() {
            continue;
        }
        for &(y, wb) in &nzb {
            acc[combine(ring, op, x as Elem, y) as usize] += wa * wb;
        }
    }
    let den = da * db;
    acc.into_iter()
        .map(|n| BigRational::new(n, den.clone()))
        .collect()
}

/// Multiplies every weight by an integer `c` (signed-measure helper).
pub fn scale_exact(v: &[BigRational], c: &BigInt) -> Vec<BigRational> {
    v.iter().map(|r| r * BigRational::from_integer(c.clone())).collect()
}

pub fn add_exact(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl Measure {
    fn new_unchecked(ring: &FiniteQuotientRing, weights: Weights) -> Self {
        Self {
            ring_id: ring.id(),
            weights,
        }
    }

    pub fn from_exact(ring: &FiniteQuotientRing, w: Vec<BigRational>) -> Result<Self> {
        if w.len() != ring.order() {
            return Err(LabError::Invalid("weight vector length differs from ring order".into()));
        }
        if w.iter().any(|r| r.is_negative()) {
            return Err(LabError::Invalid("negative weight".into()));
        }
        let total: BigRational = w.iter().sum();
        if !total.is_one() {
            return Err(LabError::Invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self::new_unchecked(ring, Weights::Exact(w)))
    }

    pub fn from_float(ring: &FiniteQuotientRing, w: Vec<f64>) -> Result<Self> {
        if w.len() != ring.order() {
            return Err(LabError::Invalid("weight vector length differs from ring order".into()));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(LabError::Invalid("weights must be finite and nonnegative".into()));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > FLOAT_TOLERANCE {
            return Err(LabError::Invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self::new_unchecked(ring, Weights::Float(w)))
    }

    pub fn dirac(ring: &FiniteQuotientRing, x: Elem) -> Self {
        let mut w = vec![BigRational::zero(); ring.order()];
        w[x as usize] = BigRational::one();
        Self::new_unchecked(ring, Weights::Exact(w))
    }

    /// Normalized counting measure on a nonempty set.
    pub fn uniform_on(ring: &FiniteQuotientRing, set: &ElementSet) -> Result<Self> {
        set.check_ring(ring)?;
        if set.is_empty() {
            return Err(LabError::Invalid("uniform measure on an empty set".into()));
        }
        let p = BigRational::new(BigInt::one(), BigInt::from(set.len()));
        let w = ring
            .elements()
            .map(|x| if set.contains(x) { p.clone() } else { BigRational::zero() })
            .collect();
        Ok(Self::new_unchecked(ring, Weights::Exact(w)))
    }

    pub fn uniform(ring: &FiniteQuotientRing) -> Self {
        Self::uniform_on(ring, &ElementSet::full(ring)).expect("nonempty ring")
    }

    /// Random exact measure with integer weights in `0..=max_weight`
    /// (at least one positive).
    pub fn random_exact<R: Rng + ?Sized>(ring: &FiniteQuotientRing, rng: &mut R, max_weight: u32) -> Self {
        loop {
            let raw: Vec<u32> = (0..ring.order()).map(|_| rng.gen_range(0..=max_weight)).collect();
            let total: u64 = raw.iter().map(|&x| x as u64).sum();
            if total == 0 {
                continue;
            }
            let den = BigInt::from(total);
            let w = raw
                .into_iter()
                .map(|x| BigRational::new(BigInt::from(x), den.clone()))
                .collect();
            return Self::new_unchecked(ring, Weights::Exact(w));
        }
    }

    pub fn random_float<R: Rng + ?Sized>(ring: &FiniteQuotientRing, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..ring.order()).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        Self::new_unchecked(ring, Weights::Float(raw.into_iter().map(|x| x / total).collect()))
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

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.weights, Weights::Exact(_))
    }

    pub fn exact(&self) -> Result<&[BigRational]> {
        match &self.weights {
            Weights::Exact(w) => Ok(w),
            Weights::Float(_) => Err(LabError::ExactModeRequired),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match &self.weights {
            Weights::Exact(w) => w.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect(),
            Weights::Float(w) => w.clone(),
        }
    }

    pub fn to_float(&self) -> Self {
        Self {
            ring_id: self.ring_id,
            weights: Weights::Float(self.to_f64()),
        }
    }

    pub fn len(&self) -> usize {
        match &self.weights {
            Weights::Exact(w) => w.len(),
            Weights::Float(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight_f64(&self, x: Elem) -> f64 {
        match &self.weights {
            Weights::Exact(w) => w[x as usize].to_f64().unwrap_or(f64::NAN),
            Weights::Float(w) => w[x as usize],
        }
    }

    pub fn is_zero_at(&self, x: Elem) -> bool {
        match &self.weights {
            Weights::Exact(w) => w[x as usize].is_zero(),
            Weights::Float(w) => w[x as usize] == 0.0,
        }
    }

    pub fn support(&self, ring: &FiniteQuotientRing) -> ElementSet {
        ElementSet::from_elems(ring, ring.elements().filter(|&x| !self.is_zero_at(x)))
    }

    pub fn mass(&self, set: &ElementSet) -> f64 {
        set.iter().map(|x| self.weight_f64(x)).sum()
    }

    pub fn mass_exact(&self, set: &ElementSet) -> Result<BigRational> {
        let w = self.exact()?;
        Ok(set.iter().map(|x| &w[x as usize]).sum())
    }

    pub fn total_f64(&self) -> f64 {
        self.to_f64().iter().sum()
    }

    fn convolve(&self, other: &Self, ring: &FiniteQuotientRing, op: ConvOp) -> Result<Self> {
        self.check_ring(ring)?;
        other.check_ring(ring)?;
        let weights = match (&self.weights, &other.weights) {
            (Weights::Exact(a), Weights::Exact(b)) => Weights::Exact(convolve_exact(ring, op, a, b)),
            _ => Weights::Float(convolve_f64(ring, op, &self.to_f64(), &other.to_f64())),
        };
        Ok(Self::new_unchecked(ring, weights))
    }

    /// `μ ∗ ν`.
    pub fn add_convolve(&self, other: &Self, ring: &FiniteQuotientRing) -> Result<Self> {
        self.convolve(other, ring, ConvOp::Add)
    }

    /// `μ ⊗ ν`.
    pub fn mul_convolve(&self, other: &Self, ring: &FiniteQuotientRing) -> Result<Self> {
        self.convolve(other, ring, ConvOp::Mul)
    }

    /// `μ_-(x) = μ(−x)`.
    pub fn reflect(&self, ring: &FiniteQuotientRing) -> Self {
        let weights = match &self.weights {
            Weights::Exact(w) => Weights::Exact(ring.elements().map(|x| w[ring.neg(x) as usize].clone()).collect()),
            Weights::Float(w) => Weights::Float(ring.elements().map(|x| w[ring.neg(x) as usize]).collect()),
        };
        Self::new_unchecked(ring, weights)
    }

    /// Pushforward under a map into `target` given as a table.
    pub fn pushforward(&self, map: &[Elem], target: &FiniteQuotientRing) -> Self {
        let weights = match &self.weights {
            Weights::Exact(w) => {
                let mut out = vec![BigRational::zero(); target.order()];
                for (x, r) in w.iter().enumerate() {
                    if !r.is_zero() {
                        out[map[x] as usize] += r;
                    }
                }
                Weights::Exact(out)
            }
            Weights::Float(w) => {
                let mut out = vec![0.0; target.order()];
                for (x, r) in w.iter().enumerate() {
                    out[map[x] as usize] += r;
                }
                Weights::Float(out)
            }
        };
        Self::new_unchecked(target, weights)
    }

    /// Loads a measure from CSV with columns `c0..c{d-1}` (power-basis
    /// coordinates), `num`, `den`; weights of repeated elements add up.
    pub fn from_csv<R: Read>(ring: &FiniteQuotientRing, reader: R) -> Result<Self> {
        let d = ring.field().degree();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| LabError::Parse(e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| LabError::Parse(format!("missing column {name}")))
        };
        let coord_cols: Vec<usize> = (0..d).map(|i| col(&format!("c{i}"))).collect::<Result<_>>()?;
        let (num_col, den_col) = (col("num")?, col("den")?);
        let mut w = vec![BigRational::zero(); ring.order()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| LabError::Parse(e.to_string()))?;
            let parse = |i: usize| -> Result<BigInt> {
                rec.get(i)
                    .unwrap_or("")
                    .parse::<BigInt>()
                    .map_err(|e| LabError::Parse(format!("{e} in {:?}", rec.get(i))))
            };
            let v: Vec<i128> = coord_cols
                .iter()
                .map(|&c| parse(c).and_then(|b| b.to_i128().ok_or_else(|| LabError::Parse("coordinate too large".into()))))
                .collect::<Result<_>>()?;
            let (num, den) = (parse(num_col)?, parse(den_col)?);
            if den.is_zero() {
                return Err(LabError::Parse("zero denominator".into()));
            }
            w[ring.to_elem(&v) as usize] += BigRational::new(num, den);
        }
        Self::from_exact(ring, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn small_additive_convolution() {
        let z5 = FiniteQuotientRing::integers_mod(5).unwrap();
        let u = Measure::uniform_on(&z5, &ElementSet::from_elems(&z5, [0, 1])).unwrap();
        let c = u.add_convolve(&u, &z5).unwrap();
        assert_eq!(c.exact().unwrap(), &[r(1, 4), r(1, 2), r(1, 4), r(0, 1), r(0, 1)]);
    }

    #[test]
    fn dirac_rules() {
        let z12 = FiniteQuotientRing::integers_mod(12).unwrap();
        let a = Measure::dirac(&z12, 5);
        let b = Measure::dirac(&z12, 9);
        assert_eq!(a.add_convolve(&b, &z12).unwrap(), Measure::dirac(&z12, 2));
        assert_eq!(a.mul_convolve(&b, &z12).unwrap(), Measure::dirac(&z12, 9));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Measure::random_exact(&z12, &mut rng, 5);
        assert_eq!(m.mul_convolve(&Measure::dirac(&z12, 1), &z12).unwrap(), m);
    }

    #[test]
    fn uniform_is_absorbing() {
        let z9 = FiniteQuotientRing::integers_mod(9).unwrap();
        let u = Measure::uniform(&z9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Measure::random_exact(&z9, &mut rng, 7);
        assert_eq!(u.add_convolve(&m, &z9).unwrap(), u);
        let units = Measure::uniform_on(&z9, &z9.units()).unwrap();
        assert_eq!(units.mul_convolve(&units, &z9).unwrap(), units);
    }

    #[test]
    fn ring_mismatch() {
        let a = FiniteQuotientRing::integers_mod(5).unwrap();
        let b = FiniteQuotientRing::integers_mod(5).unwrap();
        let m = Measure::uniform(&a);
        let n = Measure::uniform(&b);
        assert_eq!(m.add_convolve(&n, &a), Err(LabError::RingMismatch));
    }

    #[test]
    fn csv_loading() {
        let r = FiniteQuotientRing::prime_power(&crate::NumberFieldSpec::gaussian(), 3, 0, 1).unwrap();
        let text = "c0,c1,num,den\n1,0,1,2\n0,1,1,4\n3,1,1,4\n";
        let m = Measure::from_csv(&r, text.as_bytes()).unwrap();
        assert_eq!(m.support(&r).len(), 2);
        assert!(Measure::from_csv(&r, "c0,num,den\n1,1,1\n".as_bytes()).is_err());
        assert!(Measure::from_csv(&r, "c0,c1,num,den\n1,0,1,3\n".as_bytes()).is_err());
    }
}
