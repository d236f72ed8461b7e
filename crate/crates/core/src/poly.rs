//! Univariate polynomials over the integers and over prime fields.
//!
//! Coefficient vectors are stored lowest degree first. Only the small
//! amount of machinery needed for degree ≤ 4 number fields lives here:
//! factorization modulo `p` (squarefree split, distinct-degree and
//! equal-degree factorization), Dedekind's index criterion, and an exact
//! irreducibility test over the rationals.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    // p prime
    powmod(a, p - 2, p)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % small == 0 {
            return n == small;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Polynomial with coefficients in `Z/pZ`, `p` prime.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpPoly {
    p: u64,
    coeffs: Vec<u64>,
}

impl fmt::Debug for FpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} (mod {})", self.coeffs, self.p)
    }
}

impl FpPoly {
    pub fn new(p: u64, coeffs: Vec<u64>) -> Self {
        let mut c: Vec<u64> = coeffs.into_iter().map(|a| a % p).collect();
        while c.last() == Some(&0) {
            c.pop();
        }
        Self { p, coeffs: c }
    }

    pub fn from_int(p: u64, coeffs: &[i64]) -> Self {
        let c = coeffs
            .iter()
            .map(|&a| a.rem_euclid(p as i64) as u64)
            .collect();
        Self::new(p, c)
    }

    fn zero(p: u64) -> Self {
        Self { p, coeffs: vec![] }
    }

    fn one(p: u64) -> Self {
        Self::new(p, vec![1])
    }

    fn x(p: u64) -> Self {
        Self::new(p, vec![0, 1])
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn lead(&self) -> u64 {
        *self.coeffs.last().unwrap_or(&0)
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = inv_mod(self.lead(), self.p);
        Self::new(self.p, self.coeffs.iter().map(|&a| mulmod(a, inv, self.p)).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let c = (0..n)
            .map(|i| {
                let a = *self.coeffs.get(i).unwrap_or(&0);
                let b = *o.coeffs.get(i).unwrap_or(&0);
                (a + b) % self.p
            })
            .collect();
        Self::new(self.p, c)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let c = (0..n)
            .map(|i| {
                let a = *self.coeffs.get(i).unwrap_or(&0);
                let b = *o.coeffs.get(i).unwrap_or(&0);
                (a + self.p - b) % self.p
            })
            .collect();
        Self::new(self.p, c)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p);
        }
        let mut c = vec![0u64; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                c[i + j] = (c[i + j] + mulmod(a, b, self.p)) % self.p;
            }
        }
        Self::new(self.p, c)
    }

    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let p = self.p;
        let mut r = self.coeffs.clone();
        if r.len() < d.coeffs.len() {
            return (Self::zero(p), self.clone());
        }
        let inv = inv_mod(d.lead(), p);
        let dl = d.coeffs.len();
        let mut q = vec![0u64; r.len() - dl + 1];
        for k in (0..q.len()).rev() {
            let coef = mulmod(r[k + dl - 1], inv, p);
            q[k] = coef;
            if coef != 0 {
                for (j, &dc) in d.coeffs.iter().enumerate() {
                    r[k + j] = (r[k + j] + p - mulmod(coef, dc, p)) % p;
                }
            }
        }
        (Self::new(p, q), Self::new(p, r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.divrem(d).1
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Self {
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &a)| mulmod(a, i as u64 % self.p, self.p))
            .collect();
        Self::new(self.p, c)
    }

    fn pow_mod(&self, mut e: u128, m: &Self) -> Self {
        let mut base = self.rem(m);
        let mut acc = Self::one(self.p).rem(m);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            e >>= 1;
        }
        acc
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| (mulmod(acc, x, self.p) + c) % self.p)
    }

    /// Substitutes `x^p -> x`; valid only when every exponent is a multiple of `p`.
    fn pth_root(&self) -> Self {
        let p = self.p as usize;
        let c = self.coeffs.iter().step_by(p).copied().collect();
        Self::new(self.p, c)
    }

    /// Coefficient vector as signed integers in `[0, p)`.
    pub fn lift(&self) -> Vec<i64> {
        self.coeffs.iter().map(|&a| a as i64).collect()
    }
}

impl PartialOrd for FpPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FpPoly {
    /// Degree first, then coefficients from the constant term upward.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.coeffs.cmp(&other.coeffs))
    }
}

fn squarefree_decomposition(f: &FpPoly) -> Vec<(FpPoly, u32)> {
    let p = f.p;
    let f = f.monic();
    if f.degree() == 0 {
        return vec![];
    }
    let df = f.derivative();
    if df.is_zero() {
        return squarefree_decomposition(&f.pth_root())
            .into_iter()
            .map(|(g, m)| (g, m * p as u32))
            .collect();
    }
    let mut out = Vec::new();
    let mut c = f.gcd(&df);
    let mut w = f.divrem(&c).0;
    let mut i = 1u32;
    while !w.is_one() && w.degree() > 0 {
        let y = w.gcd(&c);
        let z = w.divrem(&y).0;
        if z.degree() > 0 {
            out.push((z.monic(), i));
        }
        i += 1;
        w = y;
        c = c.divrem(&w).0;
    }
    if c.degree() > 0 {
        for (g, m) in squarefree_decomposition(&c.pth_root()) {
            out.push((g, m * p as u32));
        }
    }
    out
}

fn distinct_degree(f: &FpPoly) -> Vec<(FpPoly, usize)> {
    let p = f.p;
    let mut g = f.monic();
    let mut out = Vec::new();
    let x = FpPoly::x(p);
    let mut h = x.rem(&g);
    let mut i = 1;
    while g.degree() >= 2 * i {
        h = h.pow_mod(p as u128, &g);
        let d = g.gcd(&h.sub(&x));
        if d.degree() > 0 {
            out.push((d.clone(), i));
            g = g.divrem(&d).0;
            h = h.rem(&g);
        }
        i += 1;
    }
    if g.degree() > 0 {
        let deg = g.degree();
        out.push((g, deg));
    }
    out
}

fn equal_degree(f: &FpPoly, d: usize, rng: &mut ChaCha8Rng) -> Vec<FpPoly> {
    let p = f.p;
    let n = f.degree();
    if n == d {
        return vec![f.monic()];
    }
    loop {
        let a = FpPoly::new(p, (0..n).map(|_| rng.gen_range(0..p)).collect());
        if a.degree() == 0 {
            continue;
        }
        let b = if p == 2 {
            // absolute trace from F_{2^d} down to F_2
            let mut t = a.rem(f);
            let mut acc = t.clone();
            for _ in 1..d {
                t = t.mul(&t).rem(f);
                acc = acc.add(&t);
            }
            acc
        } else {
            let e = (p as u128).pow(d as u32);
            a.pow_mod((e - 1) / 2, f).sub(&FpPoly::one(p))
        };
        let g = f.gcd(&b);
        if g.degree() > 0 && g.degree() < n {
            let mut out = equal_degree(&g, d, rng);
            out.extend(equal_degree(&f.divrem(&g).0, d, rng));
            return out;
        }
    }
}

/// Factors an integer polynomial modulo `p` into monic irreducibles with
/// multiplicities, sorted by [`FpPoly`]'s ordering.
pub fn factor_mod_p(f: &[i64], p: u64) -> Vec<(FpPoly, u32)> {
    let fp = FpPoly::from_int(p, f);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ p);
    let mut out = Vec::new();
    for (sq, mult) in squarefree_decomposition(&fp) {
        for (block, d) in distinct_degree(&sq) {
            for g in equal_degree(&block, d, &mut rng) {
                out.push((g, mult));
            }
        }
    }
    out.sort();
    out
}

/// Integer polynomial product (lowest degree first).
pub fn int_mul(a: &[i128], b: &[i128]) -> Vec<i128> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut c = vec![0i128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            c[i + j] += x * y;
        }
    }
    c
}

/// Dedekind's criterion: true when `p` does not divide `[O_K : Z[theta]]`.
pub fn dedekind_ok(f: &[i64], p: u64) -> bool {
    let factors = factor_mod_p(f, p);
    let mut prod: Vec<i128> = vec![1];
    for (g, e) in &factors {
        let lift: Vec<i128> = g.lift().into_iter().map(i128::from).collect();
        for _ in 0..*e {
            prod = int_mul(&prod, &lift);
        }
    }
    let n = f.len().max(prod.len());
    let pi = p as i128;
    let mut diff = Vec::with_capacity(n);
    for i in 0..n {
        let a = f.get(i).copied().unwrap_or(0) as i128;
        let b = prod.get(i).copied().unwrap_or(0);
        let d = a - b;
        debug_assert!(d % pi == 0);
        diff.push((d / pi).rem_euclid(pi) as u64);
    }
    let big_f = FpPoly::new(p, diff);
    factors
        .iter()
        .filter(|(_, e)| *e >= 2)
        .all(|(g, _)| !big_f.rem(g).is_zero())
}

fn det_bareiss(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Discriminant of a monic integer polynomial, via the Sylvester resultant.
pub fn discriminant(f: &[i64]) -> i128 {
    let n = f.len() - 1;
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return 1;
    }
    let df: Vec<i128> = f
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &a)| i as i128 * a as i128)
        .collect();
    let fi: Vec<i128> = f.iter().map(|&a| a as i128).collect();
    let m = df.len() - 1;
    let size = n + m;
    let mut syl = vec![vec![0i128; size]; size];
    // rows hold coefficients highest degree first
    for r in 0..m {
        for (k, &c) in fi.iter().rev().enumerate() {
            syl[r][r + k] = c;
        }
    }
    for r in 0..n {
        for (k, &c) in df.iter().rev().enumerate() {
            syl[m + r][r + k] = c;
        }
    }
    let res = det_bareiss(syl);
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1 } else { -1 };
    sign * res
}

fn divisors(n: i64) -> Vec<i64> {
    let n = n.unsigned_abs();
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d as i64);
            if d * d != n {
                out.push((n / d) as i64);
            }
        }
        d += 1;
    }
    let neg: Vec<i64> = out.iter().map(|&d| -d).collect();
    out.extend(neg);
    out
}

fn eval_int(f: &[i64], x: i64) -> i128 {
    f.iter()
        .rev()
        .fold(0i128, |acc, &c| acc * x as i128 + c as i128)
}

fn isqrt(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    let r = (n as f64).sqrt() as i128;
    (r.saturating_sub(2)..=r + 2).find(|&s| s >= 0 && s * s == n)
}

/// Exact irreducibility over Q for monic integer polynomials of degree ≤ 4.
pub fn is_irreducible_over_q(f: &[i64]) -> bool {
    let n = f.len() - 1;
    assert!(n <= 4, "irreducibility test covers degree <= 4");
    if n <= 1 {
        return true;
    }
    if f[0] == 0 {
        return false;
    }
    // monic: rational roots are integer divisors of the constant term
    if divisors(f[0]).into_iter().any(|r| eval_int(f, r) == 0) {
        return false;
    }
    if n < 4 {
        return true;
    }
    let (a0, a1, a2, a3) = (f[0] as i128, f[1] as i128, f[2] as i128, f[3] as i128);
    for b in divisors(f[0]) {
        let b = b as i128;
        let e = a0 / b;
        if e != b {
            let num = a1 - b * a3;
            let den = e - b;
            if num % den != 0 {
                continue;
            }
            let a = num / den;
            let c = a3 - a;
            if b + e + a * c == a2 {
                return false;
            }
        } else if a1 == b * a3 {
            // a + c = a3, a c = a2 - 2b
            let disc = a3 * a3 - 4 * (a2 - 2 * b);
            if isqrt(disc).map_or(false, |s| (a3 + s) % 2 == 0) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand(p: u64, factors: &[(FpPoly, u32)]) -> FpPoly {
        let mut acc = FpPoly::one(p);
        for (g, e) in factors {
            for _ in 0..*e {
                acc = acc.mul(g);
            }
        }
        acc
    }

    #[test]
    fn gaussian_integer_factorizations() {
        let f = [1, 0, 1];
        let five = factor_mod_p(&f, 5);
        assert_eq!(five.len(), 2);
        assert!(five.iter().all(|(g, e)| g.degree() == 1 && *e == 1));
        let two = factor_mod_p(&f, 2);
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].1, 2);
        assert_eq!(two[0].0.coeffs(), &[1, 1]);
        let three = factor_mod_p(&f, 3);
        assert_eq!(three.len(), 1);
        assert_eq!((three[0].0.degree(), three[0].1), (2, 1));
    }

    #[test]
    fn factorizations_multiply_back() {
        let polys: [&[i64]; 4] = [&[1, 0, 0, 0, 1], &[-2, 0, 0, 1], &[1, 1, 1, 1, 1], &[3, 0, 1]];
        for f in polys {
            for p in [2u64, 3, 5, 7, 11, 13, 17, 41, 73, 1009] {
                let fac = factor_mod_p(f, p);
                assert_eq!(expand(p, &fac), FpPoly::from_int(p, f), "f={f:?} p={p}");
                for (g, _) in &fac {
                    // irreducible: no proper factor from a second factorization
                    assert_eq!(factor_mod_p(&g.lift(), p).len(), 1);
                }
            }
        }
    }

    #[test]
    fn x4_plus_1_splits_mod_every_prime() {
        for p in [3u64, 5, 7, 11, 13, 17] {
            let fac = factor_mod_p(&[1, 0, 0, 0, 1], p);
            assert!(fac.len() >= 2, "p={p}");
        }
    }

    #[test]
    fn irreducibility_over_q() {
        assert!(is_irreducible_over_q(&[1, 0, 1]));
        assert!(is_irreducible_over_q(&[-2, 0, 0, 1]));
        assert!(is_irreducible_over_q(&[1, 0, 0, 0, 1]));
        assert!(!is_irreducible_over_q(&[-1, 0, 1]));
        assert!(!is_irreducible_over_q(&[4, 0, 0, 0, 1])); // (x^2+2x+2)(x^2-2x+2)
        assert!(!is_irreducible_over_q(&[1, 0, 2, 0, 1])); // (x^2+1)^2
        assert!(!is_irreducible_over_q(&[0, 1, 1]));
    }

    #[test]
    fn discriminants() {
        assert_eq!(discriminant(&[1, 0, 1]), -4);
        assert_eq!(discriminant(&[-2, 0, 0, 1]), -108);
        assert_eq!(discriminant(&[1, 0, 0, 0, 1]), 256);
    }

    #[test]
    fn dedekind_criterion() {
        // Z[i] is maximal
        assert!(dedekind_ok(&[1, 0, 1], 2));
        // Z[sqrt5] has index 2 in the ring of integers of Q(sqrt5)
        assert!(!dedekind_ok(&[-5, 0, 1], 2));
        // Z[sqrt(-3)] has index 2
        assert!(!dedekind_ok(&[3, 0, 1], 2));
        assert!(dedekind_ok(&[-2, 0, 0, 1], 3));
    }

    #[test]
    fn primality() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime(1_000_003));
        assert!(!is_prime(1_000_001));
    }
}
